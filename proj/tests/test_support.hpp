#ifndef NQBFV_TEST_SUPPORT_HPP
#define NQBFV_TEST_SUPPORT_HPP

#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "nqbfv/even_poly.hpp"
#include "nqbfv/graded_poly.hpp"

namespace nqbfv::testing {

/// Deterministic generator of small random polynomials; portable because it only uses raw engine output.
class RandomPolys {
public:
    explicit RandomPolys(std::uint64_t seed) : rng_(seed) {}

    long small_int(long lo, long hi) { return lo + static_cast<long>(rng_() % static_cast<std::uint64_t>(hi - lo + 1)); }

    Rat small_rat()
    {
        long num = small_int(-5, 5);
        long den = small_int(1, 3);
        return make_rat(num, den);
    }

    EvenPoly even(std::size_t nvars, int max_degree, int max_terms)
    {
        auto monos = monomials_up_to(nvars, max_degree);
        EvenPoly p(nvars);
        int terms = static_cast<int>(small_int(0, max_terms));
        for (int t = 0; t < terms; ++t) p.add_term(monos[rng_() % monos.size()], small_rat());
        return p;
    }

    /// Random polynomial of the given parity (odd generators drawn from the context's odd list).
    GradedPoly graded(const ContextPtr& ctx, int max_even_degree, int max_odd, int max_terms, std::optional<bool> parity = {})
    {
        auto monos = monomials_up_to(ctx->even_count(), max_even_degree);
        GradedPoly p(ctx);
        int terms = static_cast<int>(small_int(1, max_terms));
        for (int t = 0; t < terms; ++t) {
            GradedMonomial m{monos[rng_() % monos.size()], 0};
            int k = static_cast<int>(small_int(0, max_odd));
            for (int j = 0; j < k && ctx->odd_count(); ++j) m.odd |= std::uint64_t{1} << (rng_() % ctx->odd_count());
            if (parity && (std::popcount(m.odd) % 2 != 0) != *parity) {
                if (ctx->odd_count() == 0) continue;
                m.odd ^= std::uint64_t{1} << (rng_() % ctx->odd_count());
            }
            p.add_term(m, small_rat());
        }
        return p;
    }

    std::vector<Rat> point(std::size_t n)
    {
        std::vector<Rat> v;
        for (std::size_t i = 0; i < n; ++i) v.push_back(small_rat());
        return v;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

inline std::vector<std::string> names(std::initializer_list<const char*> list)
{
    return std::vector<std::string>(list.begin(), list.end());
}

} // namespace nqbfv::testing

namespace nqbfv {

// readable gtest failure output
inline void PrintTo(const GradedPoly& p, std::ostream* os) { *os << p.to_string(); }
inline void PrintTo(const EvenPoly& p, std::ostream* os)
{
    std::vector<std::string> v;
    for (std::size_t i = 0; i < p.nvars(); ++i) v.push_back("x" + std::to_string(i + 1));
    *os << p.to_string(v);
}

} // namespace nqbfv

#endif
