#ifndef NQBFV_EVEN_POLY_HPP
#define NQBFV_EVEN_POLY_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqbfv/rational.hpp"

namespace nqbfv {

using Exponents = std::vector<std::uint32_t>;

inline std::uint32_t total_degree(const Exponents& e)
{
    return std::accumulate(e.begin(), e.end(), std::uint32_t{0});
}

/// Graded-lexicographic order, ascending; the first variable is the largest.
struct GrlexLess {
    bool operator()(const Exponents& a, const Exponents& b) const
    {
        auto da = total_degree(a), db = total_degree(b);
        if (da != db) return da < db;
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    }
};

/// Sparse commutative polynomial over Q in a fixed number of variables.
/// No zero coefficients are ever stored.
class EvenPoly {
public:
    using TermMap = std::map<Exponents, Rat, GrlexLess>;

    EvenPoly() = default;
    explicit EvenPoly(std::size_t nvars) : nvars_(nvars) {}
    EvenPoly(std::size_t nvars, const Rat& c) : nvars_(nvars)
    {
        if (c != 0) terms_.emplace(Exponents(nvars, 0), c);
    }

    static EvenPoly variable(std::size_t nvars, std::size_t index)
    {
        if (index >= nvars) throw std::out_of_range("variable index out of range");
        EvenPoly p(nvars);
        Exponents e(nvars, 0);
        e[index] = 1;
        p.terms_.emplace(std::move(e), Rat(1));
        return p;
    }

    static EvenPoly monomial(Exponents e, const Rat& c)
    {
        EvenPoly p(e.size());
        if (c != 0) p.terms_.emplace(std::move(e), c);
        return p;
    }

    std::size_t nvars() const { return nvars_; }
    const TermMap& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }

    bool is_constant() const
    {
        return terms_.empty() || (terms_.size() == 1 && total_degree(terms_.begin()->first) == 0);
    }

    Rat constant_term() const
    {
        auto it = terms_.find(Exponents(nvars_, 0));
        return it == terms_.end() ? Rat(0) : it->second;
    }

    Rat coefficient(const Exponents& e) const
    {
        auto it = terms_.find(e);
        return it == terms_.end() ? Rat(0) : it->second;
    }

    /// Total degree; -1 for the zero polynomial.
    int degree() const
    {
        return terms_.empty() ? -1 : static_cast<int>(total_degree(terms_.rbegin()->first));
    }

    int degree_in(std::size_t var) const
    {
        int d = -1;
        for (const auto& [e, c] : terms_) d = std::max(d, static_cast<int>(e[var]));
        return d;
    }

    void add_term(const Exponents& e, const Rat& c)
    {
        if (e.size() != nvars_) throw std::invalid_argument("exponent arity mismatch");
        if (c == 0) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    EvenPoly& operator+=(const EvenPoly& o)
    {
        check_arity(o);
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    EvenPoly& operator-=(const EvenPoly& o)
    {
        check_arity(o);
        for (const auto& [e, c] : o.terms_) add_term(e, -c);
        return *this;
    }
    EvenPoly& operator*=(const Rat& s)
    {
        if (s == 0) {
            terms_.clear();
            return *this;
        }
        for (auto& [e, c] : terms_) c *= s;
        return *this;
    }

    friend EvenPoly operator+(EvenPoly a, const EvenPoly& b) { return a += b; }
    friend EvenPoly operator-(EvenPoly a, const EvenPoly& b) { return a -= b; }
    friend EvenPoly operator-(EvenPoly a) { return a *= Rat(-1); }
    friend EvenPoly operator*(EvenPoly a, const Rat& s) { return a *= s; }
    friend EvenPoly operator*(const Rat& s, EvenPoly a) { return a *= s; }

    friend EvenPoly operator*(const EvenPoly& a, const EvenPoly& b)
    {
        a.check_arity(b);
        EvenPoly r(a.nvars_);
        Exponents e(a.nvars_);
        for (const auto& [ea, ca] : a.terms_)
            for (const auto& [eb, cb] : b.terms_) {
                for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
                r.add_term(e, ca * cb);
            }
        return r;
    }
    EvenPoly& operator*=(const EvenPoly& o) { return *this = *this * o; }

    friend bool operator==(const EvenPoly& a, const EvenPoly& b)
    {
        return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
    }

    EvenPoly pow(std::uint32_t k) const
    {
        EvenPoly result(nvars_, Rat(1)), base = *this;
        while (k) {
            if (k & 1u) result *= base;
            k >>= 1u;
            if (k) base *= base;
        }
        return result;
    }

    EvenPoly diff(std::size_t var) const
    {
        if (var >= nvars_) throw std::out_of_range("coordinate index out of range");
        EvenPoly r(nvars_);
        for (const auto& [e, c] : terms_) {
            if (e[var] == 0) continue;
            Exponents d = e;
            --d[var];
            r.add_term(d, c * e[var]);
        }
        return r;
    }

    Rat eval(std::span<const Rat> point) const
    {
        if (point.size() != nvars_) throw std::invalid_argument("point arity mismatch");
        Rat sum = 0;
        for (const auto& [e, c] : terms_) {
            Rat t = c;
            for (std::size_t i = 0; i < nvars_; ++i)
                for (std::uint32_t k = 0; k < e[i]; ++k) t *= point[i];
            sum += t;
        }
        return sum;
    }

    /// Canonical text, highest grlex term first, in the parser's grammar.
    std::string to_string(const std::vector<std::string>& names) const
    {
        if (names.size() != nvars_) throw std::invalid_argument("name count mismatch");
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            const auto& [e, c] = *it;
            Rat mag = abs(c);
            if (first)
                os << (c < 0 ? "-" : "");
            else
                os << (c < 0 ? " - " : " + ");
            first = false;
            bool constant = total_degree(e) == 0;
            bool wrote = false;
            if (constant || mag != 1) {
                os << mag.get_str();
                wrote = true;
            }
            for (std::size_t i = 0; i < nvars_; ++i) {
                if (e[i] == 0) continue;
                if (wrote) os << '*';
                os << names[i];
                if (e[i] > 1) os << '^' << e[i];
                wrote = true;
            }
        }
        return os.str();
    }

private:
    void check_arity(const EvenPoly& o) const
    {
        if (o.nvars_ != nvars_) throw std::invalid_argument("polynomial arity mismatch");
    }

    std::size_t nvars_ = 0;
    TermMap terms_;
};

inline EvenPoly poly_diff(const EvenPoly& p, std::size_t var) { return p.diff(var); }
inline Rat poly_eval(const EvenPoly& p, std::span<const Rat> point) { return p.eval(point); }

/// All exponent vectors in `nvars` variables with total degree <= max_degree, ascending grlex.
inline std::vector<Exponents> monomials_up_to(std::size_t nvars, int max_degree)
{
    std::vector<Exponents> out;
    if (max_degree < 0) return out;
    Exponents e(nvars, 0);
    auto rec = [&](auto&& self, std::size_t var, std::uint32_t left) -> void {
        if (var == nvars) {
            out.push_back(e);
            return;
        }
        for (std::uint32_t k = 0; k <= left; ++k) {
            e[var] = k;
            self(self, var + 1, left - k);
        }
        e[var] = 0;
    };
    rec(rec, 0, static_cast<std::uint32_t>(max_degree));
    std::sort(out.begin(), out.end(), GrlexLess{});
    return out;
}

template <class T>
using Matrix = std::vector<std::vector<T>>;

inline Matrix<EvenPoly> zero_matrix(std::size_t rows, std::size_t cols, std::size_t nvars)
{
    return Matrix<EvenPoly>(rows, std::vector<EvenPoly>(cols, EvenPoly(nvars)));
}

/// Determinant by cofactor expansion; division-free, fine for the small ranks handled here.
inline EvenPoly determinant(const Matrix<EvenPoly>& m, std::size_t nvars)
{
    std::size_t k = m.size();
    if (k == 0) return EvenPoly(nvars, Rat(1));
    if (k == 1) return m[0][0];
    EvenPoly det(nvars);
    for (std::size_t col = 0; col < k; ++col) {
        if (m[0][col].is_zero()) continue;
        Matrix<EvenPoly> minor;
        for (std::size_t r = 1; r < k; ++r) {
            std::vector<EvenPoly> row;
            for (std::size_t c = 0; c < k; ++c)
                if (c != col) row.push_back(m[r][c]);
            minor.push_back(std::move(row));
        }
        EvenPoly term = m[0][col] * determinant(minor, nvars);
        if (col % 2) det -= term;
        else det += term;
    }
    return det;
}

} // namespace nqbfv

#endif
