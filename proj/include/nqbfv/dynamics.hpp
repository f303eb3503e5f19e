#ifndef NQBFV_DYNAMICS_HPP
#define NQBFV_DYNAMICS_HPP

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqbfv/algebroid.hpp"
#include "nqbfv/constraints.hpp"
#include "nqbfv/linalg.hpp"
#include "nqbfv/phase_space.hpp"
#include "nqbfv/poisson.hpp"
#include "nqbfv/report.hpp"

namespace nqbfv {

/// Optional geometric data. omega[a][b][i] = omega^a_{bi}, tau[a][b] = tau^a_b.
struct GeometryPack {
    std::optional<Matrix<EvenPoly>> g_inv, g_low;
    std::optional<Tensor3> omega;
    std::optional<Matrix<EvenPoly>> tau;
    std::optional<std::vector<EvenPoly>> alpha;
    std::optional<EvenPoly> V;
    std::optional<Matrix<EvenPoly>> B;
    std::optional<std::vector<EvenPoly>> beta;

    /// Checks arities, (anti)symmetry and g_inv g_low = 1.
    void validate(std::size_t n, std::size_t r) const
    {
        auto square = [n](const Matrix<EvenPoly>& m, std::size_t k, const char* what) {
            if (m.size() != k) throw std::invalid_argument(std::string(what) + ": wrong size");
            for (const auto& row : m) {
                if (row.size() != k) throw std::invalid_argument(std::string(what) + ": wrong size");
                for (const auto& e : row)
                    if (e.nvars() != n) throw std::invalid_argument(std::string(what) + ": entry arity mismatch");
            }
        };
        auto symmetric = [n](const Matrix<EvenPoly>& m, const char* what) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    if (!(m[i][j] == m[j][i])) throw std::invalid_argument(std::string(what) + ": not symmetric");
        };
        if (g_inv) square(*g_inv, n, "metric_inv"), symmetric(*g_inv, "metric_inv");
        if (g_low) square(*g_low, n, "metric"), symmetric(*g_low, "metric");
        if (g_inv && g_low)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    EvenPoly s(n);
                    for (std::size_t k = 0; k < n; ++k) s += (*g_inv)[i][k] * (*g_low)[k][j];
                    if (!(s == EvenPoly(n, Rat(i == j ? 1 : 0))))
                        throw std::invalid_argument("metric_inv * metric is not the identity");
                }
        if (omega) {
            if (omega->size() != r) throw std::invalid_argument("connection: wrong size");
            for (const auto& m : *omega) {
                if (m.size() != r) throw std::invalid_argument("connection: wrong size");
                for (const auto& row : m) {
                    if (row.size() != n) throw std::invalid_argument("connection: wrong size");
                    for (const auto& e : row)
                        if (e.nvars() != n) throw std::invalid_argument("connection: entry arity mismatch");
                }
            }
        }
        if (tau) {
            if (tau->size() != r) throw std::invalid_argument("tau: wrong size");
            for (const auto& row : *tau) {
                if (row.size() != r) throw std::invalid_argument("tau: wrong size");
                for (const auto& e : row)
                    if (e.nvars() != n) throw std::invalid_argument("tau: entry arity mismatch");
            }
        }
        auto vec = [n](const std::vector<EvenPoly>& v, std::size_t k, const char* what) {
            if (v.size() != k) throw std::invalid_argument(std::string(what) + ": wrong size");
            for (const auto& e : v)
                if (e.nvars() != n) throw std::invalid_argument(std::string(what) + ": entry arity mismatch");
        };
        if (alpha) vec(*alpha, r, "alpha");
        if (beta) vec(*beta, n, "beta");
        if (V && V->nvars() != n) throw std::invalid_argument("potential: arity mismatch");
        if (B) square(*B, n, "magnetic"), require_antisymmetric(*B, n);
    }

    std::vector<EvenPoly> alpha_or_zero(std::size_t n, std::size_t r) const
    {
        return alpha ? *alpha : std::vector<EvenPoly>(r, EvenPoly(n));
    }
    Tensor3 omega_or_zero(std::size_t n, std::size_t r) const { return omega ? *omega : zero_tensor3(r, r, n, n); }
    Matrix<EvenPoly> tau_or_zero(std::size_t n, std::size_t r) const { return tau ? *tau : zero_matrix(r, r, n); }
    EvenPoly V_or_zero(std::size_t n) const { return V ? *V : EvenPoly(n); }
    std::vector<EvenPoly> beta_or_zero(std::size_t n) const { return beta ? *beta : std::vector<EvenPoly>(n, EvenPoly(n)); }
};

/// H = 1/2 g^{ij} p_i p_j + beta^i p_i + V in the given phase space (absent fields are zero).
inline GradedPoly build_hamiltonian(const GeometryPack& pack, const PhaseSpace& ps)
{
    if (!pack.g_inv) throw std::invalid_argument("build_hamiltonian: metric_inv is required");
    std::size_t n = ps.base_dim();
    GradedPoly H = ps.zero();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!(*pack.g_inv)[i][j].is_zero()) H += make_rat(1, 2) * ps.lift((*pack.g_inv)[i][j]) * ps.p(i) * ps.p(j);
    if (pack.beta)
        for (std::size_t i = 0; i < n; ++i)
            if (!(*pack.beta)[i].is_zero()) H += ps.lift((*pack.beta)[i]) * ps.p(i);
    if (pack.V) H += ps.lift(*pack.V);
    return H;
}

struct StructuralResiduals {
    Tensor3 metric;          // [a][i][j]: (L_rho_a g)_ij - omega^b_ai g_kj rho_b^k - omega^b_aj g_ki rho_b^k
    Matrix<EvenPoly> dalpha; // [a][i]: d_i alpha_a - omega^b_ai alpha_b - tau^b_a g_ij rho_b^j - g_ik [rho_a, beta]^k
    std::vector<EvenPoly> potential;  // [a]: -rho_a(V) - tau^b_a alpha_b + beta(alpha_a)
};

/// The E-covariant derivative of the metric, R_{a,ij}.
inline Tensor3 metric_residual(const AlgebroidData& d, const Matrix<EvenPoly>& g, const Tensor3& omega)
{
    std::size_t n = d.n(), r = d.r();
    auto R = zero_tensor3(r, n, n, n);
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                EvenPoly s(n);
                for (std::size_t k = 0; k < n; ++k) {
                    s += d.rho[a][k] * g[i][j].diff(k) + g[k][j] * d.rho[a][k].diff(i) + g[i][k] * d.rho[a][k].diff(j);
                    for (std::size_t b = 0; b < r; ++b) {
                        if (d.rho[b][k].is_zero()) continue;
                        s -= omega[b][a][i] * g[k][j] * d.rho[b][k] + omega[b][a][j] * g[k][i] * d.rho[b][k];
                    }
                }
                R[a][i][j] = std::move(s);
            }
    return R;
}

/// The three order-by-order conditions of evolution invariance. The signs are those produced by
/// the bracket {p_i, x^j} = delta_i^j together with gamma^b_a = omega^b_ai g^ij p_j + tau^b_a, so
/// that the momentum-degree parts of R_a are 1/2 g^il g^jm R_{a,ij} p_l p_m, g^ij p_j R'_{a,i}, R''_a.
inline StructuralResiduals structural_residuals(const AlgebroidData& d, const GeometryPack& pack)
{
    std::size_t n = d.n(), r = d.r();
    if (!pack.g_low) throw std::invalid_argument("structural residuals need the metric");
    StructuralResiduals res;
    auto omega = pack.omega_or_zero(n, r);
    auto tau = pack.tau_or_zero(n, r);
    auto alpha = pack.alpha_or_zero(n, r);
    auto beta = pack.beta_or_zero(n);
    auto V = pack.V_or_zero(n);
    const auto& g = *pack.g_low;
    res.metric = metric_residual(d, g, omega);
    res.dalpha = zero_matrix(r, n, n);
    res.potential.assign(r, EvenPoly(n));
    for (std::size_t a = 0; a < r; ++a) {
        // [rho_a, beta]^k
        std::vector<EvenPoly> br(n, EvenPoly(n));
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) br[k] += d.rho[a][j] * beta[k].diff(j) - beta[j] * d.rho[a][k].diff(j);
        for (std::size_t i = 0; i < n; ++i) {
            EvenPoly s = alpha[a].diff(i);
            for (std::size_t b = 0; b < r; ++b) {
                s -= omega[b][a][i] * alpha[b];
                for (std::size_t j = 0; j < n; ++j)
                    if (!d.rho[b][j].is_zero()) s -= tau[b][a] * g[i][j] * d.rho[b][j];
            }
            for (std::size_t k = 0; k < n; ++k) s -= g[i][k] * br[k];
            res.dalpha[a][i] = std::move(s);
        }
        EvenPoly v(n);
        for (std::size_t i = 0; i < n; ++i) v -= d.rho[a][i] * V.diff(i);
        for (std::size_t b = 0; b < r; ++b) v -= tau[b][a] * alpha[b];
        for (std::size_t i = 0; i < n; ++i) v += beta[i] * alpha[a].diff(i);
        res.potential[a] = std::move(v);
    }
    return res;
}

inline CheckReport check_metric_compat(const AlgebroidData& d, const GeometryPack& pack)
{
    if (!pack.g_low) throw std::invalid_argument("check_metric_compat needs the metric");
    CheckReport rep;
    rep.name = "metric";
    rep.identity = "E-nabla g = 0: L_rho_a g = omega^b_a v iota_rho_b g";
    auto R = metric_residual(d, *pack.g_low, pack.omega_or_zero(d.n(), d.r()));
    for (std::size_t a = 0; a < d.r(); ++a)
        for (std::size_t i = 0; i < d.n(); ++i)
            for (std::size_t j = i; j < d.n(); ++j)
                if (!R[a][i][j].is_zero()) rep.add_residual(index_label("g", {a}, {i, j}), R[a][i][j].to_string(d.coords));
    return rep;
}

inline CheckReport check_structural(const AlgebroidData& d, const GeometryPack& pack)
{
    CheckReport rep;
    rep.name = "structural";
    rep.identity = "E-nabla g = 0, D alpha + (tau^t (x) g_flat) rho = 0, E-dV = tau(alpha) (beta-corrected)";
    auto s = structural_residuals(d, pack);
    for (std::size_t a = 0; a < d.r(); ++a) {
        for (std::size_t i = 0; i < d.n(); ++i)
            for (std::size_t j = i; j < d.n(); ++j)
                if (!s.metric[a][i][j].is_zero())
                    rep.add_residual(index_label("g", {a}, {i, j}), s.metric[a][i][j].to_string(d.coords));
        for (std::size_t i = 0; i < d.n(); ++i)
            if (!s.dalpha[a][i].is_zero()) rep.add_residual(index_label("Dalpha", {a}, {i}), s.dalpha[a][i].to_string(d.coords));
        if (!s.potential[a].is_zero()) rep.add_residual(index_label("V", {a}, {}), s.potential[a].to_string(d.coords));
    }
    return rep;
}

/// The momentum-graded prediction sum_k (structural part of degree k), on T*M.
inline std::vector<GradedPoly> predicted_parts(const AlgebroidData& d, const GeometryPack& pack,
                                               const StructuralResiduals& s, const PhaseSpace& ps, std::size_t a)
{
    std::size_t n = d.n();
    const auto& gi = *pack.g_inv;
    std::vector<GradedPoly> P(n, ps.zero());  // P^l = g^li p_i
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t i = 0; i < n; ++i)
            if (!gi[l][i].is_zero()) P[l] += ps.lift(gi[l][i]) * ps.p(i);
    std::vector<GradedPoly> parts(3, ps.zero());
    for (std::size_t l = 0; l < n; ++l)
        for (std::size_t m = 0; m < n; ++m)
            if (!s.metric[a][l][m].is_zero()) parts[2] += make_rat(1, 2) * ps.lift(s.metric[a][l][m]) * P[l] * P[m];
    for (std::size_t i = 0; i < n; ++i)
        if (!s.dalpha[a][i].is_zero()) parts[1] += ps.lift(s.dalpha[a][i]) * P[i];
    parts[0] = ps.lift(s.potential[a]);
    return parts;
}

/// R_a = {H, Phi_a} - (omega^b_ai g^ij p_j + tau^b_a) Phi_b with the (possibly twisted) bracket.
/// Without twist, the momentum-degree parts of R_a are compared with the structural residuals;
/// the sign relating them is reported (it is +1 for every consistent input).
inline CheckReport check_evolution_invariance(const GradedPoly& H, const ConstraintSet& cs, const AlgebroidData& d,
                                              const GeometryPack& pack)
{
    if (!pack.g_inv) throw std::invalid_argument("check_evolution_invariance needs metric_inv");
    const auto& ps = cs.space;
    std::size_t n = d.n(), r = d.r();
    auto omega = pack.omega_or_zero(n, r);
    auto tau = pack.tau_or_zero(n, r);
    const auto& gi = *pack.g_inv;
    CheckReport rep;
    rep.name = "evolution";
    rep.identity = "{H, Phi_a} = (omega^b_ai g^ij p_j + tau^b_a) Phi_b";
    std::vector<GradedPoly> R;
    for (std::size_t a = 0; a < r; ++a) {
        GradedPoly Ra = poisson(H, cs.phis[a]);
        for (std::size_t b = 0; b < r; ++b) {
            GradedPoly gamma = ps.lift(tau[b][a]);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (!omega[b][a][i].is_zero() && !gi[i][j].is_zero()) gamma += ps.lift(omega[b][a][i] * gi[i][j]) * ps.p(j);
            Ra -= gamma * cs.phis[b];
        }
        if (!Ra.is_zero()) rep.add_residual(index_label("R", {}, {a}), Ra.to_string());
        R.push_back(std::move(Ra));
    }
    if (ps.twist_matrix()) {
        rep.notes.push_back("twisted bracket: momentum decomposition not compared (bracket residual is authoritative)");
        return rep;
    }
    if (!pack.g_low) {
        rep.notes.push_back("metric not supplied: momentum decomposition not compared");
        return rep;
    }
    auto s = structural_residuals(d, pack);
    bool plus = true, minus = true;
    for (std::size_t a = 0; a < r; ++a) {
        auto parts = predicted_parts(d, pack, s, ps, a);
        for (std::uint32_t k = 0; k < 3; ++k) {
            GradedPoly actual = ps.momentum_part(R[a], k);
            if (!(actual == parts[k])) plus = false;
            if (!(actual == -parts[k])) minus = false;
        }
        if (!ps.momentum_part(R[a], 3).is_zero()) plus = minus = false;
    }
    std::string sign = plus ? "+1" : minus ? "-1" : "none";
    if (plus && minus) sign = "+1";  // all parts vanish
    rep.fact("decomposition_sign", sign);
    if (sign == "none") rep.fail("momentum-graded parts do not match the structural residuals");
    return rep;
}

/// Removes the momentum-linear term: with A_i = g_ij beta^j and p' = p + A,
/// H = 1/2 g p'p' + V - 1/2 g_ij beta^i beta^j, Phi_a = rho_a p' + alpha_a - rho_a^i A_i,
/// gamma^b_a = omega^b_ai g^ij p'_j + tau^b_a - omega^b_ai beta^i, and {p'_i, p'_j} = -(B - dA)_ij.
inline GeometryPack absorb_beta(const AlgebroidData& d, const GeometryPack& pack)
{
    if (!pack.g_low || !pack.beta) throw std::invalid_argument("absorb_beta needs metric and beta");
    std::size_t n = d.n(), r = d.r();
    const auto& g = *pack.g_low;
    const auto& beta = *pack.beta;
    std::vector<EvenPoly> A(n, EvenPoly(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) A[i] += g[i][j] * beta[j];
    GeometryPack out = pack;
    out.beta.reset();
    auto dA = de_rham(A);
    auto B = pack.B ? *pack.B : zero_matrix(n, n, n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            B[i][j] -= dA[i][j];
            if (!B[i][j].is_zero()) any = true;
        }
    if (any || pack.B) out.B = B;
    auto alpha = pack.alpha_or_zero(n, r);
    auto shift = rho_pullback(d, A);
    for (std::size_t a = 0; a < r; ++a) alpha[a] -= shift.component({a}, n);
    out.alpha = alpha;
    EvenPoly V = pack.V_or_zero(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) V -= make_rat(1, 2) * g[i][j] * beta[i] * beta[j];
    out.V = V;
    if (pack.omega) {
        auto tau = pack.tau_or_zero(n, r);
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = 0; b < r; ++b)
                for (std::size_t i = 0; i < n; ++i) tau[a][b] -= (*pack.omega)[a][b][i] * beta[i];
        out.tau = tau;
    }
    return out;
}

struct ConnectionSolution {
    bool feasible = false;
    int degree = 0;
    std::optional<Tensor3> omega;       // particular solution, lowest degrees first
    std::size_t solution_dim = 0;       // dimension of the affine solution space within the ansatz
    std::size_t unknowns = 0;
    std::size_t rank = 0, augmented_rank = 0;  // infeasible exactly when augmented_rank > rank
    std::optional<CheckReport> verification;
};

/// Solves E-nabla g = 0 for omega^a_bi polynomial of x-degree <= D.
inline ConnectionSolution solve_connection(const AlgebroidData& d, const GeometryPack& pack, int D)
{
    if (!pack.g_low) throw std::invalid_argument("solve_connection needs the metric");
    if (D < 0) throw std::invalid_argument("ansatz degree must be non-negative");
    std::size_t n = d.n(), r = d.r();
    const auto& g = *pack.g_low;
    auto monos = monomials_up_to(n, D);
    struct Unknown {
        std::size_t mono, a, b, i;  // coefficient of x^mono in omega^a_{b i}
    };
    std::vector<Unknown> unk;
    for (std::size_t m = 0; m < monos.size(); ++m)
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = 0; b < r; ++b)
                for (std::size_t i = 0; i < n; ++i) unk.push_back({m, a, b, i});
    // the residual is affine in omega: R = L - (linear part); the constant part is L_rho g
    auto L = metric_residual(d, g, zero_tensor3(r, r, n, n));
    std::map<std::tuple<std::size_t, std::size_t, std::size_t, Exponents>, std::pair<SparseVec, Rat>> eqs;
    for (std::size_t u = 0; u < unk.size(); ++u) {
        auto om = zero_tensor3(r, r, n, n);
        om[unk[u].a][unk[u].b][unk[u].i] = EvenPoly::monomial(monos[unk[u].mono], Rat(1));
        auto R = metric_residual(d, g, om);
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i; j < n; ++j) {
                    EvenPoly lin = L[a][i][j] - R[a][i][j];  // contribution of this unknown (sign: R = L - lin)
                    for (const auto& [e, c] : lin.terms()) eqs[{a, i, j, e}].first[u] = c;
                }
    }
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j)
                for (const auto& [e, c] : L[a][i][j].terms()) eqs[{a, i, j, e}].second = c;
    std::vector<SparseVec> A;
    std::vector<Rat> rhs;
    for (auto& [k, eq] : eqs) {
        A.push_back(std::move(eq.first));
        rhs.push_back(eq.second);
    }
    auto sol = solve(A, rhs, unk.size());
    ConnectionSolution res;
    res.degree = D;
    res.unknowns = unk.size();
    res.rank = sol.rank;
    res.augmented_rank = sol.augmented_rank;
    if (!sol.solution) return res;
    res.feasible = true;
    res.solution_dim = sol.nullity;
    auto om = zero_tensor3(r, r, n, n);
    for (const auto& [u, c] : *sol.solution) om[unk[u].a][unk[u].b][unk[u].i].add_term(monos[unk[u].mono], c);
    GeometryPack check = pack;
    check.omega = om;
    res.verification = check_metric_compat(d, check);
    res.omega = std::move(om);
    return res;
}

} // namespace nqbfv

#endif
