#ifndef NQBFV_PARSER_HPP
#define NQBFV_PARSER_HPP

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "nqbfv/even_poly.hpp"
#include "nqbfv/rational.hpp"

namespace nqbfv {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)), position_(position)
    {
    }
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

namespace detail {

/// Recursive-descent parser for
///   expr    := term (('+' | '-') term)*
///   term    := unary ('*' unary)*
///   unary   := '-' unary | '+' unary | power
///   power   := primary ('^' integer)?
///   primary := integer ('/' integer)? | identifier | '(' expr ')'
/// `Ring` must support +, -, * and unary minus; `make_constant` and
/// `lookup` build constants and variables.
template <class Ring>
class ExprParser {
public:
    using ConstantFn = std::function<Ring(const Rat&)>;
    using LookupFn = std::function<std::optional<Ring>(const std::string&)>;

    ExprParser(std::string_view text, ConstantFn make_constant, LookupFn lookup)
        : text_(text), make_constant_(std::move(make_constant)), lookup_(std::move(lookup))
    {
    }

    Ring parse()
    {
        skip_ws();
        if (at_end()) throw ParseError("syntax error: empty expression", pos_);
        Ring r = expr();
        skip_ws();
        if (!at_end()) throw ParseError(std::string("syntax error: unexpected '") + text_[pos_] + "'", pos_);
        return r;
    }

private:
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return at_end() ? '\0' : text_[pos_]; }
    void skip_ws()
    {
        while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    Ring expr()
    {
        Ring acc = term();
        for (;;) {
            skip_ws();
            char c = peek();
            if (c != '+' && c != '-') return acc;
            ++pos_;
            Ring rhs = term();
            if (c == '+') acc = acc + rhs;
            else acc = acc - rhs;
        }
    }

    Ring term()
    {
        Ring acc = unary();
        for (;;) {
            skip_ws();
            char c = peek();
            if (c == '*') {
                ++pos_;
                acc = acc * unary();
            } else if (c == '/') {
                throw ParseError("division is only allowed between integer literals", pos_);
            } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '(' || c == '_') {
                throw ParseError("syntax error: missing '*' between factors", pos_);
            } else {
                return acc;
            }
        }
    }

    Ring unary()
    {
        skip_ws();
        if (peek() == '-') {
            ++pos_;
            return -unary();
        }
        if (peek() == '+') {
            ++pos_;
            return unary();
        }
        return power();
    }

    Ring power()
    {
        Ring base = primary();
        skip_ws();
        if (peek() != '^') return base;
        ++pos_;
        skip_ws();
        std::size_t at = pos_;
        if (peek() == '-') throw ParseError("negative exponent", at);
        if (!std::isdigit(static_cast<unsigned char>(peek()))) throw ParseError("non-integer exponent", at);
        std::string digits = read_digits();
        if (peek() == '.' || peek() == '/') throw ParseError("non-integer exponent", at);
        if (digits.size() > 6) throw ParseError("exponent too large", at);
        auto k = static_cast<std::uint32_t>(std::stoul(digits));
        Ring result = make_constant_(Rat(1));
        for (std::uint32_t i = 0; i < k; ++i) result = result * base;
        return result;
    }

    Ring primary()
    {
        skip_ws();
        if (at_end()) throw ParseError("syntax error: expected operand, found end of input", pos_);
        char c = peek();
        if (c == '(') {
            ++pos_;
            Ring inner = expr();
            skip_ws();
            if (peek() != ')') {
                if (at_end()) throw ParseError("syntax error: expected ')', found end of input", pos_);
                throw ParseError("syntax error: expected ')'", pos_);
            }
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t at = pos_;
            BigInt num(read_digits());
            if (peek() == '.') throw ParseError("syntax error: decimal literals are not supported", pos_);
            skip_ws();
            if (peek() == '/') {
                ++pos_;
                skip_ws();
                if (!std::isdigit(static_cast<unsigned char>(peek())))
                    throw ParseError("division is only allowed between integer literals", pos_);
                BigInt den(read_digits());
                if (den == 0) throw ParseError("zero denominator", at);
                return make_constant_(make_rat(num, den));
            }
            return make_constant_(Rat(num));
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t at = pos_;
            std::string name;
            while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) name += text_[pos_++];
            // component-field names: trailing ~ (theta partner) and ' (time derivative)
            while (!at_end() && (peek() == '~' || peek() == '\'')) name += text_[pos_++];
            auto v = lookup_(name);
            if (!v) throw ParseError("unknown identifier '" + name + "'", at);
            return *v;
        }
        throw ParseError(std::string("syntax error: unexpected '") + c + "'", pos_);
    }

    std::string read_digits()
    {
        std::string d;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) d += text_[pos_++];
        return d;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    ConstantFn make_constant_;
    LookupFn lookup_;
};

} // namespace detail

/// Parses a polynomial expression over the ordered even-coordinate names `env`.
inline EvenPoly parse_poly(std::string_view text, const std::vector<std::string>& env)
{
    if (env.empty()) throw std::invalid_argument("empty coordinate environment");
    std::unordered_set<std::string> seen(env.begin(), env.end());
    if (seen.size() != env.size()) throw std::invalid_argument("duplicate coordinate names");
    const std::size_t n = env.size();
    detail::ExprParser<EvenPoly> parser(
        text, [n](const Rat& c) { return EvenPoly(n, c); },
        [&env, n](const std::string& name) -> std::optional<EvenPoly> {
            for (std::size_t i = 0; i < env.size(); ++i)
                if (env[i] == name) return EvenPoly::variable(n, i);
            return std::nullopt;
        });
    return parser.parse();
}

} // namespace nqbfv

#endif
