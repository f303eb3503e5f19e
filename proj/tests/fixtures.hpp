#ifndef NQBFV_TEST_FIXTURES_HPP
#define NQBFV_TEST_FIXTURES_HPP

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "nqbfv/algebroid.hpp"
#include "nqbfv/dynamics.hpp"
#include "nqbfv/parser.hpp"

// Small algebroids built straight from expression strings, independent of the JSON loader.
namespace nqbfv::testing {

using StructureEntries = std::map<std::tuple<int, int, int>, std::string>;  // (c,a,b) 1-based, a<b

inline AlgebroidData algebroid(std::vector<std::string> coords, const std::vector<std::vector<std::string>>& rho,
                               const StructureEntries& C = {})
{
    std::size_t n = coords.size(), r = rho.size();
    Matrix<EvenPoly> R;
    for (const auto& row : rho) {
        std::vector<EvenPoly> pr;
        for (const auto& e : row) pr.push_back(parse_poly(e, coords));
        R.push_back(pr);
    }
    auto T = zero_tensor3(r, r, r, n);
    for (const auto& [k, e] : C) {
        auto [c, a, b] = k;
        EvenPoly p = parse_poly(e, coords);
        T[c - 1][a - 1][b - 1] = p;
        T[c - 1][b - 1][a - 1] = -p;
    }
    return make_algebroid(coords, R, T);
}

inline std::vector<EvenPoly> polys(const std::vector<std::string>& coords, const std::vector<std::string>& exprs)
{
    std::vector<EvenPoly> out;
    for (const auto& e : exprs) out.push_back(parse_poly(e, coords));
    return out;
}

inline Matrix<EvenPoly> poly_matrix(const std::vector<std::string>& coords,
                                    const std::vector<std::vector<std::string>>& rows)
{
    Matrix<EvenPoly> m;
    for (const auto& r : rows) m.push_back(polys(coords, r));
    return m;
}

inline AlgebroidData abelian1() { return algebroid({"x"}, {{"1"}}); }
inline AlgebroidData abelian2() { return algebroid({"x1", "x2"}, {{"1", "0"}, {"0", "1"}}); }

// so(3) acting on R^3: rho_a^i = eps_{aik} x^k, C^c_ab = eps_abc
inline AlgebroidData so3()
{
    return algebroid({"x1", "x2", "x3"}, {{"0", "x3", "-x2"}, {"-x3", "0", "x1"}, {"x2", "-x1", "0"}},
                     {{{3, 1, 2}, "1"}, {{1, 2, 3}, "1"}, {{2, 3, 1}, "1"}});
}

inline AlgebroidData rank2_line() { return algebroid({"x"}, {{"1"}, {"x"}}, {{{1, 1, 2}, "1"}}); }

// anchor d/dx on the first generator only, C^1_23 = x: both the anchor morphism and Jacobi fail
inline AlgebroidData broken_jacobi() { return algebroid({"x"}, {{"1"}, {"0"}, {"0"}}, {{{1, 2, 3}, "x"}}); }

inline Matrix<EvenPoly> unit_metric(std::size_t n)
{
    auto m = zero_matrix(n, n, n);
    for (std::size_t i = 0; i < n; ++i) m[i][i] = EvenPoly(n, Rat(1));
    return m;
}

inline GeometryPack flat_metric(std::size_t n)
{
    GeometryPack p;
    p.g_inv = unit_metric(n);
    p.g_low = unit_metric(n);
    return p;
}

// translations of R^3 with a constant, metric-compatible but curved connection:
// omega_3 rotates (e1, e2), omega_2 and omega_1 couple e3 to e1 and e2
inline std::pair<AlgebroidData, GeometryPack> cartan_violating()
{
    std::vector<std::string> c{"x1", "x2", "x3"};
    auto d = algebroid(c, {{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}});
    auto pack = flat_metric(3);
    auto om = zero_tensor3(3, 3, 3, 3);  // om[b][a][i] = omega^b_ai
    om[1][0][2] = EvenPoly(3, Rat(1));
    om[2][0][1] = EvenPoly(3, Rat(-1));
    om[2][1][0] = EvenPoly(3, Rat(1));
    om[0][1][2] = EvenPoly(3, Rat(-1));
    pack.omega = om;
    return {d, pack};
}

} // namespace nqbfv::testing

#endif
