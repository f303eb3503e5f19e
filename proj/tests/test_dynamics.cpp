#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "nqbfv/dynamics.hpp"
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

Matrix<EvenPoly> identity(std::size_t n)
{
    auto m = zero_matrix(n, n, n);
    for (std::size_t i = 0; i < n; ++i) m[i][i] = EvenPoly(n, Rat(1));
    return m;
}

GeometryPack flat(std::size_t n)
{
    GeometryPack p;
    p.g_inv = identity(n);
    p.g_low = identity(n);
    return p;
}

CheckReport evolution(const AlgebroidData& d, const GeometryPack& pack)
{
    auto cs = build_constraints(d, pack.alpha, pack.B);
    return check_evolution_invariance(build_hamiltonian(pack, cs.space), cs, d, pack);
}

} // namespace

TEST(Hamiltonian, Examples)
{
    auto ps = PhaseSpace::cotangent({"x1", "x2", "x3"});
    EXPECT_EQ(build_hamiltonian(flat(3), ps), parse_graded("1/2*p1^2 + 1/2*p2^2 + 1/2*p3^2", ps.context()));

    auto line = PhaseSpace::cotangent({"x"});
    auto p1 = flat(1);
    p1.V = parse_poly("x^2", {"x"});
    EXPECT_EQ(build_hamiltonian(p1, line), parse_graded("1/2*p1^2 + x^2", line.context()));

    auto plane = PhaseSpace::cotangent({"x1", "x2"});
    auto p2 = flat(2);
    p2.beta = polys({"x1", "x2"}, {"0", "x1"});
    EXPECT_EQ(build_hamiltonian(p2, plane), parse_graded("1/2*p1^2 + 1/2*p2^2 + x1*p2", plane.context()));

    GeometryPack none;
    none.V = EvenPoly(1, Rat(1));
    EXPECT_THROW(build_hamiltonian(none, line), std::invalid_argument);
}

TEST(GeometryPack, Validation)
{
    auto p = flat(2);
    p.g_low = poly_matrix({"x1", "x2"}, {{"2", "0"}, {"0", "1"}});
    EXPECT_THROW(p.validate(2, 1), std::invalid_argument);
    auto q = flat(2);
    q.B = poly_matrix({"x1", "x2"}, {{"0", "1"}, {"1", "0"}});
    EXPECT_THROW(q.validate(2, 1), std::invalid_argument);
    EXPECT_NO_THROW(flat(2).validate(2, 1));
}

TEST(Evolution, So3Killing)
{
    auto rep = evolution(so3(), flat(3));
    EXPECT_TRUE(rep.passed());
    EXPECT_EQ(fact(rep, "decomposition_sign"), "+1");
}

TEST(Evolution, PotentialBreaksInvariance)
{
    auto pack = flat(2);
    pack.V = parse_poly("x1", {"x1", "x2"});
    auto rep = evolution(abelian2(), pack);
    EXPECT_FALSE(rep.passed());
    ASSERT_EQ(rep.residuals.size(), 1u);
    EXPECT_EQ(rep.residuals[0].index, "R[1]");
    EXPECT_EQ(rep.residuals[0].polynomial, "-1");
    EXPECT_EQ(fact(rep, "decomposition_sign"), "+1");
}

TEST(Evolution, MagneticFixture)
{
    // hand expansion: {1/2|p|^2, p1} = p2 {p2,p1} = 2 p2;
    // {1/2|p|^2, p2 + 2 x1} = p1 {p1,p2} + 2 p1 {p1,x1} = -2 p1 + 2 p1 = 0
    auto pack = flat(2);
    pack.B = poly_matrix({"x1", "x2"}, {{"0", "2"}, {"-2", "0"}});
    pack.alpha = polys({"x1", "x2"}, {"0", "2*x1"});
    auto rep = evolution(abelian2(), pack);
    ASSERT_EQ(rep.residuals.size(), 1u);
    EXPECT_EQ(rep.residuals[0].index, "R[1]");
    EXPECT_EQ(rep.residuals[0].polynomial, "2*p2");
    EXPECT_EQ(fact(rep, "decomposition_sign"), "");
}

TEST(MetricCompat, Examples)
{
    EXPECT_TRUE(check_metric_compat(so3(), flat(3)).passed());

    auto leaf = algebroid({"x", "y"}, {{"0", "1"}});
    GeometryPack lp;
    lp.g_low = poly_matrix({"x", "y"}, {{"1", "0"}, {"0", "1 + x^2"}});
    EXPECT_TRUE(check_metric_compat(leaf, lp).passed());

    GeometryPack bad;
    bad.g_low = poly_matrix({"x"}, {{"1 + x^2"}});
    auto rep = check_metric_compat(abelian1(), bad);
    EXPECT_FALSE(rep.passed());
    ASSERT_EQ(rep.residuals.size(), 1u);
    EXPECT_EQ(rep.residuals[0].polynomial, "2*x");
}

TEST(Structural, Examples)
{
    auto s = structural_residuals(so3(), flat(3));
    for (const auto& row : s.dalpha)
        for (const auto& e : row) EXPECT_TRUE(e.is_zero());
    for (const auto& e : s.potential) EXPECT_TRUE(e.is_zero());

    // rho = 0: the potential condition reduces to -tau(alpha)
    auto d = algebroid({"x"}, {{"0"}, {"0"}});
    GeometryPack p = flat(1);
    p.V = parse_poly("x^3", {"x"});
    p.alpha = polys({"x"}, {"1", "x"});
    p.tau = poly_matrix({"x"}, {{"0", "1"}, {"0", "0"}});
    auto r = structural_residuals(d, p);
    EXPECT_TRUE(r.potential[0].is_zero());
    EXPECT_EQ(r.potential[1], parse_poly("-1", {"x"}));
}

TEST(Structural, CovariantlyConstantAlpha)
{
    // alpha = (1, x) on R^1 with rho = (1, x): the connection solved from the metric also makes D alpha vanish
    auto d = rank2_line();
    GeometryPack p;
    p.g_low = poly_matrix({"x"}, {{"1"}});
    p.alpha = polys({"x"}, {"1", "x"});
    auto sol = solve_connection(d, p, 0);
    ASSERT_TRUE(sol.feasible);
    p.omega = sol.omega;
    auto s = structural_residuals(d, p);
    // d_x alpha_1 - omega^b_11 alpha_b = 0 and d_x alpha_2 - omega^b_21 alpha_b = 1 - omega^1_21 = 0
    EXPECT_TRUE(s.dalpha[0][0].is_zero());
    EXPECT_TRUE(s.dalpha[1][0].is_zero());
}

TEST(Evolution, TwoRouteAgreementOnRandomData)
{
    RandomPolys gen(2718);
    std::vector<std::string> coords{"x1", "x2"};
    std::size_t checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        std::size_t r = 1 + trial % 2;
        Matrix<EvenPoly> rho;
        for (std::size_t a = 0; a < r; ++a) rho.push_back({gen.even(2, 1, 2), gen.even(2, 1, 2)});
        auto C = zero_tensor3(r, r, r, 2);
        if (r == 2)
            for (std::size_t c = 0; c < 2; ++c) {
                C[c][0][1] = gen.even(2, 1, 2);
                C[c][1][0] = -C[c][0][1];
            }
        auto d = make_algebroid(coords, rho, C);
        GeometryPack p;
        p.g_low = poly_matrix(coords, {{"2", "1"}, {"1", "1"}});
        p.g_inv = poly_matrix(coords, {{"1", "-1"}, {"-1", "2"}});
        auto om = zero_tensor3(r, r, 2, 2);
        for (auto& m : om)
            for (auto& row : m)
                for (auto& e : row) e = gen.even(2, 1, 2);
        p.omega = om;
        auto tau = zero_matrix(r, r, 2);
        for (auto& row : tau)
            for (auto& e : row) e = gen.even(2, 1, 2);
        p.tau = tau;
        std::vector<EvenPoly> al;
        for (std::size_t a = 0; a < r; ++a) al.push_back(gen.even(2, 2, 3));
        p.alpha = al;
        p.V = gen.even(2, 3, 3);
        if (trial % 3 == 0) p.beta = std::vector<EvenPoly>{gen.even(2, 1, 2), gen.even(2, 1, 2)};
        p.validate(2, r);
        EXPECT_EQ(fact(evolution(d, p), "decomposition_sign"), "+1");
        ++checked;
    }
    EXPECT_EQ(checked, 40u);
}

TEST(AbsorbBeta, Examples)
{
    std::vector<std::string> c{"x1", "x2"};
    auto d = abelian2();
    auto p = flat(2);
    p.beta = polys(c, {"0", "0"});
    auto id = absorb_beta(d, p);
    EXPECT_FALSE(id.B);
    EXPECT_FALSE(id.beta);
    EXPECT_EQ(*id.alpha, polys(c, {"0", "0"}));
    EXPECT_TRUE(id.V->is_zero());

    p.beta = polys(c, {"0", "x1"});
    auto t = absorb_beta(d, p);
    ASSERT_TRUE(t.B);
    EXPECT_EQ((*t.B)[0][1], EvenPoly(2, Rat(-1)));
    EXPECT_EQ(*t.V, parse_poly("-1/2*x1^2", c));
    EXPECT_EQ(*t.alpha, polys(c, {"0", "-x1"}));

    p.beta = polys(c, {"3", "-1"});
    auto k = absorb_beta(d, p);
    EXPECT_FALSE(k.B);
    EXPECT_EQ(*k.alpha, polys(c, {"-3", "1"}));
    EXPECT_EQ(*k.V, parse_poly("-5", c));
}

TEST(AbsorbBeta, PreservesVerdicts)
{
    std::vector<std::string> c{"x1", "x2"};
    struct Case {
        AlgebroidData d;
        GeometryPack p;
    };
    std::vector<Case> cases;
    {
        auto p = flat(2);
        p.beta = polys(c, {"0", "x1"});
        cases.push_back({algebroid(c, {{"0", "1"}}), p});  // passes
    }
    {
        auto p = flat(2);
        p.beta = polys(c, {"x2", "x1^2"});
        p.V = parse_poly("x1*x2", c);
        cases.push_back({abelian2(), p});  // fails
    }
    {
        auto p = flat(2);
        p.beta = polys(c, {"1", "0"});
        auto om = zero_tensor3(1, 1, 2, 2);
        om[0][0][0] = parse_poly("1", c);
        p.omega = om;
        cases.push_back({algebroid(c, {{"1", "0"}}), p});  // omega shifts tau; fails both ways
    }
    {
        auto p = flat(3);
        p.beta = polys({"x1", "x2", "x3"}, {"-x2", "x1", "0"});
        cases.push_back({so3(), p});
    }
    for (const auto& [d, p] : cases) {
        auto q = absorb_beta(d, p);
        auto before = evolution(d, p), after = evolution(d, q);
        EXPECT_EQ(before.passed(), after.passed());
        auto fc0 = check_first_class(build_constraints(d, p.alpha, p.B), d, p.alpha);
        auto fc1 = check_first_class(build_constraints(d, q.alpha, q.B), d, q.alpha);
        EXPECT_EQ(fc0.passed(), fc1.passed());
    }
    EXPECT_TRUE(evolution(cases[0].d, cases[0].p).passed());
    EXPECT_FALSE(evolution(cases[2].d, cases[2].p).passed());  // omega is not metric-compatible here
    EXPECT_FALSE(evolution(cases[1].d, cases[1].p).passed());
}

TEST(SolveConnection, Examples)
{
    auto k = solve_connection(so3(), flat(3), 0);
    ASSERT_TRUE(k.feasible);
    EXPECT_EQ(*k.omega, zero_tensor3(3, 3, 3, 3));
    EXPECT_TRUE(k.verification->passed());

    auto leaf = algebroid({"x", "y"}, {{"0", "1"}});
    GeometryPack lp;
    lp.g_low = poly_matrix({"x", "y"}, {{"1", "0"}, {"0", "1 + x^2"}});
    auto l = solve_connection(leaf, lp, 1);
    ASSERT_TRUE(l.feasible);
    EXPECT_TRUE(l.verification->passed());
    EXPECT_EQ(*l.omega, zero_tensor3(1, 1, 2, 2));

    GeometryPack bad;
    bad.g_low = poly_matrix({"x"}, {{"1 + x^2"}});
    auto b = solve_connection(abelian1(), bad, 2);
    EXPECT_FALSE(b.feasible);
    EXPECT_GT(b.augmented_rank, b.rank);
}

TEST(SolveConnection, NonzeroSolutionReverifies)
{
    GeometryPack p;
    p.g_low = poly_matrix({"x"}, {{"1"}});
    auto s = solve_connection(rank2_line(), p, 0);
    ASSERT_TRUE(s.feasible);
    EXPECT_EQ((*s.omega)[0][1][0], EvenPoly(1, Rat(1)));
    EXPECT_TRUE(s.verification->passed());
    EXPECT_EQ(s.solution_dim, 0u);
    auto s1 = solve_connection(rank2_line(), p, 1);
    ASSERT_TRUE(s1.feasible);
    EXPECT_TRUE(s1.verification->passed());
    EXPECT_GT(s1.solution_dim, 0u);
}
