#ifndef NQBFV_RATIONAL_HPP
#define NQBFV_RATIONAL_HPP

#include <gmpxx.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nqbfv {

/// Exact rational number. GMP keeps it canonical: gcd(|num|, den) = 1, den > 0, zero is 0/1.
using Rat = mpq_class;
using BigInt = mpz_class;

inline Rat make_rat(const BigInt& num, const BigInt& den)
{
    if (den == 0) throw std::domain_error("rational with zero denominator");
    Rat q(num, den);
    q.canonicalize();
    return q;
}

inline Rat make_rat(long num, long den = 1) { return make_rat(BigInt(num), BigInt(den)); }

/// Parses "a" or "a/b" with optional leading sign; throws std::invalid_argument.
inline Rat parse_rat(std::string_view text)
{
    std::string s(text);
    auto slash = s.find('/');
    auto parse_int = [](const std::string& part) {
        if (part.empty()) throw std::invalid_argument("empty integer");
        std::size_t start = (part[0] == '-' || part[0] == '+') ? 1 : 0;
        if (start == part.size()) throw std::invalid_argument("empty integer");
        for (std::size_t i = start; i < part.size(); ++i)
            if (part[i] < '0' || part[i] > '9') throw std::invalid_argument("bad integer: " + part);
        BigInt z;
        z.set_str(part[0] == '+' ? part.substr(1) : part, 10);
        return z;
    };
    if (slash == std::string::npos) return Rat(parse_int(s));
    return make_rat(parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1)));
}

inline std::string to_string(const Rat& q) { return q.get_str(); }

inline bool is_integer(const Rat& q) { return q.get_den() == 1; }

} // namespace nqbfv

#endif
