#ifndef NQBFV_BFV_HPP
#define NQBFV_BFV_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqbfv/algebroid.hpp"
#include "nqbfv/constraints.hpp"
#include "nqbfv/dynamics.hpp"

namespace nqbfv {

/// S = rho_a^i xi^a p_i - 1/2 C^c_ab xi^a xi^b pi_c + alpha_a xi^a on T*E[1].
inline GradedPoly build_S(const AlgebroidData& d, const PhaseSpace& ps,
                          const std::optional<std::vector<EvenPoly>>& alpha = {})
{
    if (ps.rank() != d.r() || ps.base_dim() != d.n()) throw std::invalid_argument("phase space does not match the algebroid");
    if (alpha && alpha->size() != d.r()) throw std::invalid_argument("alpha has " + std::to_string(alpha->size()) + " components, rank is " + std::to_string(d.r()));
    GradedPoly S = ps.zero();
    for (std::size_t a = 0; a < d.r(); ++a)
        for (std::size_t i = 0; i < d.n(); ++i)
            if (!d.rho[a][i].is_zero()) S += ps.lift(d.rho[a][i]) * ps.xi(a) * ps.p(i);
    for (std::size_t c = 0; c < d.r(); ++c)
        for (std::size_t a = 0; a < d.r(); ++a)
            for (std::size_t b = a + 1; b < d.r(); ++b)
                if (!d.C[c][a][b].is_zero()) S -= ps.lift(d.C[c][a][b]) * ps.xi(a) * ps.xi(b) * ps.pi(c);
    if (alpha)
        for (std::size_t a = 0; a < d.r(); ++a)
            if (!(*alpha)[a].is_zero()) S += ps.lift((*alpha)[a]) * ps.xi(a);
    return S;
}

/// Splits (S,S) into its three admissible families, normalised to the residuals of the other checks:
/// xi^a xi^b p_i carries 2 R1^i_ab, xi^a xi^b xi^c pi_d carries -R2^d_abc, and the x-only
/// xi^a xi^b part carries 2 (E-d alpha - rho*B)_ab. Anything else is a shape violation.
inline CheckReport check_master(const GradedPoly& S, const PhaseSpace& ps)
{
    CheckReport rep;
    rep.name = "master";
    rep.identity = "(S, S) = 0";
    auto gh = S.homogeneous_ghost_degree();
    if (!S.is_zero() && (!gh || *gh != 1)) throw std::invalid_argument("S must have ghost degree +1");
    GradedPoly SS = poisson(S, S);
    std::size_t n = ps.base_dim(), r = ps.rank();
    const auto& names = ps.base_names();
    GradedPoly covered = ps.zero();
    auto take = [&](const std::vector<std::size_t>& gens, const Rat& scale, const std::string& label) {
        auto m = ps.monomial(gens);
        EvenPoly c = ps.coefficient_in_x(SS, m);
        if (c.is_zero()) return;
        GradedPoly mono = ps.constant(Rat(1));
        for (auto z : gens) mono = mono * GradedPoly::generator(ps.context(), z);
        covered += ps.lift(c) * mono;
        rep.add_residual(label, (c * scale).to_string(names));
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = a + 1; b < r; ++b)
                take({ps.xi_index(a), ps.xi_index(b), ps.p_index(i)}, make_rat(1, 2), index_label("R1", {i}, {a, b}));
    for (std::size_t e = 0; e < r; ++e)
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = a + 1; b < r; ++b)
                for (std::size_t c = b + 1; c < r; ++c)
                    take({ps.xi_index(a), ps.xi_index(b), ps.xi_index(c), ps.pi_index(e)}, Rat(-1),
                         index_label("R2", {e}, {a, b, c}));
    for (std::size_t a = 0; a < r; ++a)
        for (std::size_t b = a + 1; b < r; ++b)
            take({ps.xi_index(a), ps.xi_index(b)}, make_rat(1, 2), index_label("dalpha", {}, {a, b}));
    GradedPoly rest = SS - covered;
    if (!rest.is_zero()) rep.add_residual("shape", rest.to_string());
    return rep;
}

/// p^nabla_i = p_i - omega^b_ai xi^a pi_b.
inline std::vector<GradedPoly> covariant_momenta(const PhaseSpace& ps, const Tensor3& omega)
{
    std::size_t n = ps.base_dim(), r = ps.rank();
    std::vector<GradedPoly> out;
    for (std::size_t i = 0; i < n; ++i) {
        GradedPoly pn = ps.p(i);
        for (std::size_t b = 0; b < r; ++b)
            for (std::size_t a = 0; a < r; ++a)
                if (!omega[b][a][i].is_zero()) pn -= ps.lift(omega[b][a][i]) * ps.xi(a) * ps.pi(b);
        out.push_back(std::move(pn));
    }
    return out;
}

/// H = 1/2 g^ij p^nabla_i p^nabla_j + V. A momentum-linear term has to be absorbed first.
inline GradedPoly build_H(const GeometryPack& pack, const PhaseSpace& ps)
{
    if (!pack.g_inv) throw std::invalid_argument("build_H needs metric_inv");
    if (pack.beta) throw std::invalid_argument("build_H: beta present, absorb it into B, alpha and V first");
    std::size_t n = ps.base_dim(), r = ps.rank();
    auto pn = covariant_momenta(ps, pack.omega_or_zero(n, r));
    const auto& gi = *pack.g_inv;
    GradedPoly H = ps.zero();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (!gi[i][j].is_zero()) H += ps.lift(gi[i][j] * make_rat(1, 2)) * pn[i] * pn[j];
    if (pack.V) H += ps.lift(*pack.V);
    return H;
}

/// S^c_jab, antisymmetric in (a,b); indexed [c][j][a][b].
using STensor = std::vector<std::vector<Matrix<EvenPoly>>>;

struct CartanResult {
    CheckReport report;
    STensor S;
    GradedPoly bracket;  // (Q_Ham, H_cov)
};

/// Computes R = (Q_Ham, H_cov), checks that only p.xi xi pi and xi pi.xi xi pi monomials occur,
/// extracts S^c_jab from the p_i xi^a xi^b pi_c coefficients and re-substitutes into
/// -g^ij p^nabla_i S^c_jab xi^a xi^b pi_c, which has to reproduce R exactly.
inline CartanResult check_cartan(const AlgebroidData& d, const GeometryPack& pack)
{
    if (!pack.g_inv || !pack.g_low) throw std::invalid_argument("check_cartan needs metric and metric_inv");
    std::size_t n = d.n(), r = d.r();
    GeometryPack flat_part = pack;
    flat_part.V.reset();
    flat_part.beta.reset();
    auto ps = d.phase_space();
    GradedPoly Q = build_S(d, ps);
    GradedPoly H = build_H(flat_part, ps);
    CartanResult out{{}, STensor(r, std::vector<Matrix<EvenPoly>>(n, zero_matrix(r, r, n))), poisson(Q, H)};
    auto& rep = out.report;
    rep.name = "cartan";
    rep.identity = "(Q_Ham, H_cov) = -g^ij p^nabla_i S^c_jab xi^a xi^b pi_c, Cartan iff S = 0";
    const auto& R = out.bracket;
    GradedPoly bad = R.filter([&](const GradedMonomial& m) {
        auto pd = ps.p_degree(m), xc = ps.xi_count(m), pc = ps.pi_count(m);
        bool lin = pd == 1 && xc == 2 && pc == 1;
        bool quad = pd == 0 && xc == 3 && pc == 2;
        return !(lin || quad);
    });
    if (!bad.is_zero()) {
        rep.add_residual("shape", bad.to_string());
        rep.notes.push_back("monomials outside p.xi xi pi and xi pi.xi xi pi: metric compatibility fails or conventions disagree");
        return out;
    }
    const auto& g = *pack.g_low;
    const auto& gi = *pack.g_inv;
    // coefficient of p_i xi^a xi^b pi_c (a<b) is -2 g^ij S^c_jab
    for (std::size_t c = 0; c < r; ++c)
        for (std::size_t a = 0; a < r; ++a)
            for (std::size_t b = a + 1; b < r; ++b) {
                std::vector<EvenPoly> T(n, EvenPoly(n));
                for (std::size_t i = 0; i < n; ++i)
                    T[i] = ps.coefficient_in_x(R, ps.monomial({ps.xi_index(a), ps.xi_index(b), ps.p_index(i), ps.pi_index(c)}));
                for (std::size_t j = 0; j < n; ++j) {
                    EvenPoly s(n);
                    for (std::size_t i = 0; i < n; ++i) s += g[j][i] * T[i];
                    s *= make_rat(-1, 2);
                    out.S[c][j][a][b] = s;
                    out.S[c][j][b][a] = -s;
                }
            }
    auto pn = covariant_momenta(ps, pack.omega_or_zero(n, r));
    GradedPoly back = ps.zero();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (gi[i][j].is_zero()) continue;
            GradedPoly inner = ps.zero();
            for (std::size_t c = 0; c < r; ++c)
                for (std::size_t a = 0; a < r; ++a)
                    for (std::size_t b = 0; b < r; ++b)
                        if (!out.S[c][j][a][b].is_zero())
                            inner += ps.lift(out.S[c][j][a][b]) * ps.xi(a) * ps.xi(b) * ps.pi(c);
            back -= ps.lift(gi[i][j]) * pn[i] * inner;
        }
    bool exact = back == R;
    rep.fact("resubstitution", exact ? "exact" : "mismatch");
    if (!exact) rep.add_residual("resubstitution", (R - back).to_string());
    for (std::size_t c = 0; c < r; ++c)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t a = 0; a < r; ++a)
                for (std::size_t b = a + 1; b < r; ++b)
                    if (!out.S[c][j][a][b].is_zero())
                        rep.add_residual(index_label("S", {c}, {j, a, b}), out.S[c][j][a][b].to_string(d.coords));
    return out;
}

struct BFVPackage {
    PhaseSpace space;
    GradedPoly S;
    std::optional<GradedPoly> H;  // absent in the topological case
    AlgebroidData data;
    GeometryPack pack;
};

/// Splits (S, H) by monomial family: Cartan part (carries pi together with p, or two pi),
/// D alpha part (xi p or xi xi pi), potential part (xi alone); anything else is reported as metric.
inline CheckReport sh_residuals(const BFVPackage& bfv)
{
    CheckReport rep;
    rep.name = "sh";
    rep.identity = "(S, H) = 0";
    if (!bfv.H) return rep;
    const auto& ps = bfv.space;
    GradedPoly R = poisson(bfv.S, *bfv.H);
    auto cartan = [&](const GradedMonomial& m) { return ps.pi_count(m) >= 2 || (ps.pi_count(m) >= 1 && ps.p_degree(m) >= 1); };
    auto dalpha = [&](const GradedMonomial& m) {
        return (ps.p_degree(m) == 1 && ps.pi_count(m) == 0) || (ps.p_degree(m) == 0 && ps.pi_count(m) == 1);
    };
    auto potential = [&](const GradedMonomial& m) { return ps.p_degree(m) == 0 && ps.pi_count(m) == 0; };
    auto other = [&](const GradedMonomial& m) { return !cartan(m) && !dalpha(m) && !potential(m); };
    auto part = [&](const std::string& name, auto pred) {
        GradedPoly f = R.filter(pred);
        if (!f.is_zero()) rep.add_residual(name, f.to_string());
    };
    part("sh_cartan", cartan);
    part("sh_d_alpha", dalpha);
    part("sh_potential", potential);
    part("sh_metric", other);
    if (bfv.pack.tau) {
        bool zero = true;
        for (const auto& row : *bfv.pack.tau)
            for (const auto& e : row) zero = zero && e.is_zero();
        if (!zero) rep.notes.push_back("tau is nonzero but H_BFV carries no tau term; compare with the structural check");
    }
    return rep;
}

/// Builds S = Q_Ham + alpha and (with a metric) H = H_cov + V, then runs the master equation,
/// the Cartan test and (S, H) = 0.
inline std::pair<BFVPackage, CheckReport> assemble_bfv(const AlgebroidData& d, const GeometryPack& pack)
{
    pack.validate(d.n(), d.r());
    auto ps = d.phase_space(pack.B);
    BFVPackage bfv{ps, build_S(d, ps, pack.alpha), std::nullopt, d, pack};
    if (pack.g_inv) bfv.H = build_H(pack, ps);
    else if (pack.V) bfv.H = ps.lift(*pack.V);
    CheckReport rep;
    rep.name = "bfv";
    rep.identity = "(S,S) = 0 and (S,H) = 0";
    auto master = check_master(bfv.S, ps);
    rep.merge(master);
    if (pack.g_inv && pack.g_low) {
        auto c = check_cartan(d, pack);
        rep.merge(c.report);
    } else if (pack.g_inv) {
        rep.notes.push_back("metric not supplied: Cartan test skipped");
    }
    if (bfv.H) {
        auto sh = sh_residuals(bfv);
        rep.merge(sh);
        if (!sh.passed()) rep.notes.push_back("see the metric, structural and evolution checks to localise (S,H) failures");
    } else {
        rep.notes.push_back("topological: H absent");
    }
    return {std::move(bfv), std::move(rep)};
}

struct BFVCohomology {
    int x_degree = 0, p_degree = 0;
    std::size_t window_dim = 0, cocycle_dim = 0, coboundary_dim = 0, h0_dim = 0;
    std::vector<std::string> caveats;
};

namespace detail {

/// Monomials of the given ghost number with x-degree <= N, p-degree <= P, at most rank xi's.
inline std::vector<GradedPoly> bfv_window(const PhaseSpace& ps, int ghost, int N, int P)
{
    std::size_t n = ps.base_dim(), r = ps.rank();
    auto xm = monomials_up_to(n, N);
    auto pm = monomials_up_to(n, P);
    std::vector<GradedPoly> out;
    for (std::uint64_t xs = 0; xs < (std::uint64_t{1} << r); ++xs)
        for (std::uint64_t ps_ = 0; ps_ < (std::uint64_t{1} << r); ++ps_) {
            if (int(std::popcount(xs)) - int(std::popcount(ps_)) != ghost) continue;
            GradedPoly odd = ps.constant(Rat(1));
            for (std::size_t a = 0; a < r; ++a)
                if ((xs >> a) & 1u) odd = odd * ps.xi(a);
            for (std::size_t a = 0; a < r; ++a)
                if ((ps_ >> a) & 1u) odd = odd * ps.pi(a);
            for (const auto& p : pm) {
                GradedPoly pp = odd;
                for (std::size_t i = 0; i < n; ++i)
                    for (std::uint32_t k = 0; k < p[i]; ++k) pp = pp * ps.p(i);
                for (const auto& x : xm) out.push_back(ps.lift(EvenPoly::monomial(x, Rat(1))) * pp);
            }
        }
    return out;
}

} // namespace detail

/// Truncated ghost-number-0 cohomology of (S, .): cocycles in the window modulo images of
/// ghost -1 elements of the same window that land back in it. A diagnostic only.
inline BFVCohomology bfv_h0(const BFVPackage& bfv, int N, int P)
{
    if (N < 0 || P < 0) throw std::invalid_argument("truncation degrees must be non-negative");
    const auto& ps = bfv.space;
    BFVCohomology rep;
    rep.x_degree = N;
    rep.p_degree = P;
    auto W0 = detail::bfv_window(ps, 0, N, P);
    auto Wm = detail::bfv_window(ps, -1, N, P);
    rep.window_dim = W0.size();
    MonomialIndex out_idx;
    std::vector<SparseVec> cols;
    for (const auto& f : W0) cols.push_back(out_idx.vec(poisson(bfv.S, f)));
    rep.cocycle_dim = W0.size() - rank(columns_to_rows(cols));
    MonomialIndex win_idx;
    for (const auto& f : W0) win_idx.vec(f);
    std::size_t window_size = win_idx.size();
    std::vector<SparseVec> img, img_out;
    for (const auto& h : Wm) {
        SparseVec v = win_idx.vec(poisson(bfv.S, h));
        SparseVec o;
        for (const auto& [k, c] : v)
            if (k >= window_size) o[k] = c;
        img.push_back(std::move(v));
        img_out.push_back(std::move(o));
    }
    rep.coboundary_dim = rank(columns_to_rows(img)) - rank(columns_to_rows(img_out));
    rep.h0_dim = rep.cocycle_dim - rep.coboundary_dim;
    rep.caveats.push_back("truncated at x-degree " + std::to_string(N) + " and p-degree " + std::to_string(P) +
                          "; not a computation of the full cohomology");
    return rep;
}

} // namespace nqbfv

#endif
