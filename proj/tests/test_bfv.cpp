#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "nqbfv/bfv.hpp"
#include "test_support.hpp"

using namespace nqbfv;
using namespace nqbfv::testing;

namespace {

std::string fact(const CheckReport& r, const std::string& key)
{
    for (const auto& [k, v] : r.facts)
        if (k == key) return v;
    return "";
}

std::map<std::string, std::string> residual_map(const CheckReport& r)
{
    std::map<std::string, std::string> m;
    for (const auto& x : r.residuals) m[x.index] = x.polynomial;
    return m;
}

std::string residual(const CheckReport& r, const std::string& label)
{
    auto m = residual_map(r);
    auto it = m.find(label);
    return it == m.end() ? "" : it->second;
}

} // namespace

TEST(BuildS, Examples)
{
    auto d1 = abelian1();
    auto ps1 = d1.phase_space();
    EXPECT_EQ(build_S(d1, ps1), parse_graded("xi1*p1", ps1.context()));

    auto d3 = so3();
    auto ps3 = d3.phase_space();
    EXPECT_EQ(build_S(d3, ps3),
              parse_graded("x3*xi1*p2 - x2*xi1*p3 - x3*xi2*p1 + x1*xi2*p3 + x2*xi3*p1 - x1*xi3*p2"
                           " - xi1*xi2*pi3 - xi2*xi3*pi1 + xi1*xi3*pi2",
                           ps3.context()));

    auto d2 = rank2_line();
    auto ps2 = d2.phase_space();
    EXPECT_EQ(build_S(d2, ps2, polys({"x"}, {"1", "x"})),
              parse_graded("xi1*p1 + x*xi2*p1 - xi1*xi2*pi1 + xi1 + x*xi2", ps2.context()));

    EXPECT_THROW(build_S(d2, ps2, polys({"x"}, {"1"})), std::invalid_argument);
    EXPECT_THROW(build_S(d2, ps1), std::invalid_argument);
}

TEST(Master, PassingFixtures)
{
    for (const auto& d : {abelian1(), abelian2(), so3(), rank2_line()}) {
        auto ps = d.phase_space();
        EXPECT_TRUE(check_master(build_S(d, ps), ps).passed());
    }
}

TEST(Master, BrokenJacobiReproducesAxiomResiduals)
{
    auto d = broken_jacobi();
    auto ps = d.phase_space();
    auto m = check_master(build_S(d, ps), ps);
    auto a = check_axioms(d);
    EXPECT_FALSE(m.passed());
    EXPECT_EQ(residual_map(m), residual_map(a));
    EXPECT_EQ(residual(m, "R2[1;1,2,3]"), "2");
    EXPECT_EQ(residual(m, "R1[1;2,3]"), "-x");
}

TEST(Master, ClosureResidualMatchesFirstClass)
{
    auto d = rank2_line();
    auto al = polys({"x"}, {"x^2", "1"});
    auto ps = d.phase_space();
    auto m = check_master(build_S(d, ps, al), ps);
    EXPECT_EQ(residual(m, "dalpha[1,2]"), "-3*x^2");
    auto fc = check_first_class(build_constraints(d, al, std::nullopt), d, al);
    EXPECT_EQ(fc.residuals.at(0).polynomial, "-3*x^2");

    // magnetic: B12 = 3 and alpha = (0, 3 x1) is twisted-closed, alpha = (0, x1) is not
    auto d2 = abelian2();
    auto B = poly_matrix({"x1", "x2"}, {{"0", "3"}, {"-3", "0"}});
    auto ps2 = d2.phase_space(B);
    EXPECT_TRUE(check_master(build_S(d2, ps2, polys({"x1", "x2"}, {"0", "3*x1"})), ps2).passed());
    auto bad = check_master(build_S(d2, ps2, polys({"x1", "x2"}, {"0", "x1"})), ps2);
    EXPECT_EQ(residual(bad, "dalpha[1,2]"), "-2");
}

TEST(Master, EquivalentToAxiomsAndClosureOnRandomData)
{
    RandomPolys gen(99);
    std::vector<std::string> coords{"x1", "x2"};
    int failing = 0;
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t r = 2 + trial % 2;
        Matrix<EvenPoly> rho;
        for (std::size_t a = 0; a < r; ++a) rho.push_back({gen.even(2, 1, 2), gen.even(2, 1, 2)});
        auto C = zero_tensor3(r, r, r, 2);
        for (std::size_t c = 0; c < r; ++c)
            for (std::size_t a = 0; a < r; ++a)
                for (std::size_t b = a + 1; b < r; ++b) {
                    C[c][a][b] = gen.even(2, 1, 1);
                    C[c][b][a] = -C[c][a][b];
                }
        auto d = make_algebroid(coords, rho, C);
        std::vector<EvenPoly> al;
        for (std::size_t a = 0; a < r; ++a) al.push_back(gen.even(2, 2, 2));
        std::optional<Matrix<EvenPoly>> B;
        if (trial % 3 == 0) {
            auto b = gen.even(2, 1, 2);
            B = Matrix<EvenPoly>{{EvenPoly(2), b}, {-b, EvenPoly(2)}};
        }
        auto ps = d.phase_space(B);
        auto m = check_master(build_S(d, ps, al), ps);
        auto expect = residual_map(check_axioms(d));
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = a + 1; b < r; ++b) {
                auto c = twisted_closure_residual(d, al, B, a, b);
                if (!c.is_zero()) expect[index_label("dalpha", {}, {a, b})] = c.to_string(coords);
            }
        EXPECT_EQ(residual_map(m), expect);
        failing += !m.passed();
    }
    EXPECT_GT(failing, 0);
}

TEST(Master, DifferentialSquaresToZeroOnPass)
{
    RandomPolys gen(5);
    auto d = so3();
    auto ps = d.phase_space();
    auto S = build_S(d, ps);
    for (int k = 0; k < 20; ++k) {
        for (int parity : {0, 1}) {
            auto f = gen.graded(ps.context(), 3, 2, 4, parity);
            EXPECT_TRUE(poisson(S, poisson(S, f)).is_zero());
        }
    }
}

TEST(Master, GhostDegreeAdds)
{
    RandomPolys gen(17);
    auto ps = rank2_line().phase_space();
    for (int k = 0; k < 100; ++k) {
        auto f = gen.graded(ps.context(), 2, 2, 1, k % 2);
        auto g = gen.graded(ps.context(), 2, 2, 1, (k / 2) % 2);
        auto fg = poisson(f, g);
        auto df = f.homogeneous_ghost_degree(), dg = g.homogeneous_ghost_degree();
        if (!df || !dg || fg.is_zero()) continue;
        ASSERT_TRUE(fg.homogeneous_ghost_degree());
        EXPECT_EQ(*fg.homogeneous_ghost_degree(), *df + *dg);
    }
}

TEST(CovariantMomenta, Examples)
{
    auto d = rank2_line();
    auto ps = d.phase_space();
    auto zero = covariant_momenta(ps, zero_tensor3(2, 2, 1, 1));
    EXPECT_EQ(zero[0], ps.p(0));
    auto om = zero_tensor3(2, 2, 1, 1);
    om[0][0][0] = EvenPoly(1, Rat(5));
    EXPECT_EQ(covariant_momenta(ps, om)[0], parse_graded("p1 - 5*xi1*pi1", ps.context()));
}

TEST(CovariantMomenta, ConstantFrameChange)
{
    // xi = M xi', pi = M^-T pi' with M = [[1,2],[0,1]]; omega' = M^-1 omega M
    auto d = abelian2();
    auto ps = d.phase_space();
    std::vector<std::string> c{"x1", "x2"};
    Matrix<Rat> M{{1, 2}, {0, 1}}, Minv{{1, -2}, {0, 1}};
    auto om = zero_tensor3(2, 2, 2, 2);
    om[0][1][0] = parse_poly("x2", c);
    om[1][0][1] = parse_poly("3", c);
    om[1][1][0] = parse_poly("-x1", c);
    std::vector<GradedPoly> images;
    for (std::size_t z = 0; z < ps.context()->size(); ++z) images.push_back(GradedPoly::generator(ps.context(), z));
    for (std::size_t a = 0; a < 2; ++a) {
        GradedPoly xa = ps.zero(), pa = ps.zero();
        for (std::size_t b = 0; b < 2; ++b) {
            if (M[a][b] != 0) xa += ps.xi(b) * M[a][b];
            if (Minv[b][a] != 0) pa += ps.pi(b) * Minv[b][a];
        }
        images[ps.xi_index(a)] = xa;
        images[ps.pi_index(a)] = pa;
    }
    auto om2 = zero_tensor3(2, 2, 2, 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t b = 0; b < 2; ++b)
            for (std::size_t a = 0; a < 2; ++a)
                for (std::size_t e = 0; e < 2; ++e)
                    for (std::size_t f = 0; f < 2; ++f)
                        if (Minv[b][e] != 0 && M[f][a] != 0) om2[b][a][i] += om[e][f][i] * (Minv[b][e] * M[f][a]);
    auto before = covariant_momenta(ps, om);
    auto after = covariant_momenta(ps, om2);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(substitute(before[i], images, ps.context()), after[i]);
    // the substitution is canonical
    EXPECT_EQ(poisson(images[ps.pi_index(0)], images[ps.xi_index(0)]), ps.constant(Rat(1)));
    EXPECT_TRUE(poisson(images[ps.pi_index(0)], images[ps.xi_index(1)]).is_zero());
}

TEST(BuildH, Examples)
{
    auto d = abelian2();
    auto ps = d.phase_space();
    auto pack = flat_metric(2);
    pack.V = parse_poly("x1^2", {"x1", "x2"});
    EXPECT_EQ(build_H(pack, ps), parse_graded("1/2*p1^2 + 1/2*p2^2 + x1^2", ps.context()));

    auto om = zero_tensor3(2, 2, 2, 2);
    om[0][1][0] = EvenPoly(2, Rat(2));  // omega^1_21 = 2: p^nabla_1 = p1 - 2 xi2 pi1
    pack.omega = om;
    pack.V.reset();
    auto H = build_H(pack, ps);
    // 1/2 (p1 - 2 xi2 pi1)^2 = 1/2 p1^2 - 2 p1 xi2 pi1, the xi pi square vanishing by nilpotency
    EXPECT_EQ(H, parse_graded("1/2*p1^2 + 1/2*p2^2 - 2*p1*xi2*pi1", ps.context()));

    om[1][0][0] = EvenPoly(2, Rat(1));  // omega^2_11 = 1: adds -xi1 pi2, now the square survives
    pack.omega = om;
    auto H2 = build_H(pack, ps);
    EXPECT_EQ(H2, parse_graded("1/2*p1^2 + 1/2*p2^2 - 2*p1*xi2*pi1 - p1*xi1*pi2 + 2*xi1*xi2*pi1*pi2", ps.context()));

    GeometryPack none;
    none.V = EvenPoly(2, Rat(1));
    EXPECT_THROW(build_H(none, ps), std::invalid_argument);
    auto withbeta = flat_metric(2);
    withbeta.beta = polys({"x1", "x2"}, {"1", "0"});
    EXPECT_THROW(build_H(withbeta, ps), std::invalid_argument);
}

TEST(Cartan, FlatExamples)
{
    auto s = check_cartan(so3(), flat_metric(3));
    EXPECT_TRUE(s.report.passed());
    EXPECT_TRUE(s.bracket.is_zero());
    EXPECT_TRUE(check_cartan(abelian2(), flat_metric(2)).report.passed());

    // the metric forces omega^1_21 = 1 on rank2_line; that connection is Cartan
    GeometryPack p;
    p.g_low = poly_matrix({"x"}, {{"1"}});
    p.g_inv = p.g_low;
    p.omega = solve_connection(rank2_line(), p, 0).omega;
    EXPECT_TRUE(check_cartan(rank2_line(), p).report.passed());
}

TEST(Cartan, CurvedConnectionExtractsS)
{
    auto [d, pack] = cartan_violating();
    EXPECT_TRUE(check_metric_compat(d, pack).passed());
    auto c = check_cartan(d, pack);
    EXPECT_FALSE(c.report.passed());
    EXPECT_EQ(fact(c.report, "resubstitution"), "exact");
    auto ps = d.phase_space();
    EXPECT_EQ(c.bracket, parse_graded("p2*xi1*xi2*pi1 - p1*xi1*xi2*pi2", ps.context()));
    EXPECT_EQ(residual(c.report, "S[1;2,1,2]"), "-1/2");
    EXPECT_EQ(residual(c.report, "S[2;1,1,2]"), "1/2");
    EXPECT_EQ(c.report.residuals.size(), 2u);
    EXPECT_EQ(c.S[0][1][1][0], EvenPoly(3, make_rat(1, 2)));
}

TEST(Cartan, ResubstitutionExactOnRandomCompatibleData)
{
    // frame (1, x) on R^1 with g = 1: compatible omega at degree 1 form an affine family
    RandomPolys gen(31);
    GeometryPack p;
    p.g_low = poly_matrix({"x"}, {{"1"}});
    p.g_inv = p.g_low;
    auto sol = solve_connection(rank2_line(), p, 1);
    ASSERT_TRUE(sol.feasible);
    ASSERT_GT(sol.solution_dim, 0u);
    auto d3 = cartan_violating();
    for (int k = 0; k < 10; ++k) {
        auto pk = d3.second;
        auto om = *pk.omega;
        // rescaling a compatible antisymmetric block keeps compatibility
        Rat s = gen.small_rat();
        for (auto& m : om)
            for (auto& row : m)
                for (auto& e : row) e *= s;
        pk.omega = om;
        ASSERT_TRUE(check_metric_compat(d3.first, pk).passed());
        auto c = check_cartan(d3.first, pk);
        EXPECT_EQ(fact(c.report, "resubstitution"), "exact");
    }
}

TEST(Cartan, ShapeViolationOnIncompatibleMetric)
{
    auto d = algebroid({"x"}, {{"1"}, {"0"}});
    GeometryPack p;
    p.g_low = poly_matrix({"x"}, {{"1"}});
    p.g_inv = p.g_low;
    auto om = zero_tensor3(2, 2, 1, 1);
    om[1][0][0] = EvenPoly(1, Rat(5));
    om[0][1][0] = EvenPoly(1, Rat(2));
    p.omega = om;
    auto c = check_cartan(d, p);
    EXPECT_FALSE(c.report.passed());
    EXPECT_FALSE(residual(c.report, "shape").empty());
}

TEST(AssembleBFV, Topological)
{
    auto [b, rep] = assemble_bfv(so3(), GeometryPack{});
    EXPECT_FALSE(b.H);
    EXPECT_TRUE(rep.passed());
    auto [bb, brep] = assemble_bfv(broken_jacobi(), GeometryPack{});
    std::map<std::string, std::string> expect;
    for (const auto& x : check_axioms(broken_jacobi()).residuals) expect["master:" + x.index] = x.polynomial;
    EXPECT_EQ(residual_map(brep), expect);
}

TEST(AssembleBFV, So3FullPackage)
{
    auto pack = flat_metric(3);
    pack.V = parse_poly("x1^2 + x2^2 + x3^2", {"x1", "x2", "x3"});
    auto [b, rep] = assemble_bfv(so3(), pack);
    EXPECT_TRUE(rep.passed());
    ASSERT_TRUE(b.H);
    EXPECT_EQ(b.H->homogeneous_ghost_degree(), 0);
    EXPECT_EQ(b.S.homogeneous_ghost_degree(), 1);
}

TEST(AssembleBFV, SubResidualsMatchStructuralParts)
{
    // potential part: (S, V) = rho_a(V) xi^a = -R''_a xi^a; D alpha part: -g^ij p^nabla_i R'_aj xi^a
    RandomPolys gen(4);
    auto [d, base] = cartan_violating();
    for (int k = 0; k < 8; ++k) {
        auto pack = base;
        std::vector<EvenPoly> al;
        for (int a = 0; a < 3; ++a) al.push_back(gen.even(3, 2, 2));
        pack.alpha = al;
        pack.V = gen.even(3, 2, 3);
        auto [b, rep] = assemble_bfv(d, pack);
        auto s = structural_residuals(d, pack);
        const auto& ps = b.space;
        auto pn = covariant_momenta(ps, *pack.omega);
        GradedPoly pot = ps.zero(), dal = ps.zero();
        for (std::size_t a = 0; a < 3; ++a) {
            pot -= ps.lift(s.potential[a]) * ps.xi(a);
            for (std::size_t i = 0; i < 3; ++i) dal -= pn[i] * ps.lift(s.dalpha[a][i]) * ps.xi(a);
        }
        auto m = residual_map(rep);
        EXPECT_EQ(m["sh:sh_potential"], pot.is_zero() ? "" : pot.to_string());
        EXPECT_EQ(m["sh:sh_d_alpha"], dal.is_zero() ? "" : dal.to_string());
        EXPECT_EQ(m["sh:sh_cartan"], "-p1*xi1*xi2*pi2 + p2*xi1*xi2*pi1");
        EXPECT_EQ(m.count("sh:sh_metric"), 0u);
    }
}

TEST(AssembleBFV, BrokenMultiFailure)
{
    auto pack = flat_metric(1);
    pack.V = parse_poly("x", {"x"});
    auto [b, rep] = assemble_bfv(broken_jacobi(), pack);
    auto m = residual_map(rep);
    EXPECT_EQ(m["master:R1[1;2,3]"], "-x");
    EXPECT_EQ(m["master:R2[1;1,2,3]"], "2");
    EXPECT_EQ(m["sh:sh_potential"], "xi1");
    EXPECT_FALSE(rep.passed());
}

TEST(BFVCohomology, Abelian)
{
    auto [b1, r1] = assemble_bfv(abelian1(), GeometryPack{});
    auto h1 = bfv_h0(b1, 2, 1);
    EXPECT_EQ(h1.cocycle_dim, 4u);
    EXPECT_EQ(h1.coboundary_dim, 3u);
    EXPECT_EQ(h1.h0_dim, 1u);

    auto [b2, r2] = assemble_bfv(abelian2(), GeometryPack{});
    EXPECT_EQ(bfv_h0(b2, 1, 1).h0_dim, 1u);
    EXPECT_THROW(bfv_h0(b2, -1, 1), std::invalid_argument);
}

TEST(BFVCohomology, So3Regression)
{
    // invariants 1, x.p, |x|^2 enter at x-degree 0, 1, 2 (p-degree <= 1)
    auto [b, rep] = assemble_bfv(so3(), GeometryPack{});
    std::vector<std::size_t> expect{1, 2, 3};
    for (int N = 0; N <= 2; ++N) EXPECT_EQ(bfv_h0(b, N, 1).h0_dim, expect[N]) << N;
}
