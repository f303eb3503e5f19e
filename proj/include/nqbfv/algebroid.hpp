#ifndef NQBFV_ALGEBROID_HPP
#define NQBFV_ALGEBROID_HPP

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nqbfv/even_poly.hpp"
#include "nqbfv/graded_poly.hpp"
#include "nqbfv/linalg.hpp"
#include "nqbfv/phase_space.hpp"
#include "nqbfv/report.hpp"

namespace nqbfv {

using Tensor3 = std::vector<std::vector<std::vector<EvenPoly>>>;

inline Tensor3 zero_tensor3(std::size_t a, std::size_t b, std::size_t c, std::size_t nvars)
{
    return Tensor3(a, std::vector<std::vector<EvenPoly>>(b, std::vector<EvenPoly>(c, EvenPoly(nvars))));
}

/// Anchor rho[a][i] = rho_a^i and structure functions C[c][a][b] = C^c_ab on the trivial bundle
/// over R^n with base coordinate names `coords`.
struct AlgebroidData {
    std::vector<std::string> coords;
    Matrix<EvenPoly> rho;
    Tensor3 C;

    std::size_t n() const { return coords.size(); }
    std::size_t r() const { return rho.size(); }

    void validate() const
    {
        const std::size_t n = coords.size(), r = rho.size();
        if (n == 0) throw std::invalid_argument("base dimension must be positive");
        for (const auto& row : rho) {
            if (row.size() != n) throw std::invalid_argument("anchor row length differs from base dimension");
            for (const auto& e : row)
                if (e.nvars() != n) throw std::invalid_argument("anchor entry arity mismatch");
        }
        if (C.size() != r) throw std::invalid_argument("structure tensor size differs from rank");
        for (std::size_t c = 0; c < r; ++c) {
            if (C[c].size() != r) throw std::invalid_argument("structure tensor size differs from rank");
            for (std::size_t a = 0; a < r; ++a) {
                if (C[c][a].size() != r) throw std::invalid_argument("structure tensor size differs from rank");
                for (std::size_t b = 0; b < r; ++b)
                    if (C[c][a][b].nvars() != n) throw std::invalid_argument("structure entry arity mismatch");
            }
        }
        for (std::size_t c = 0; c < r; ++c)
            for (std::size_t a = 0; a < r; ++a)
                for (std::size_t b = a; b < r; ++b)
                    if (!(C[c][a][b] + C[c][b][a]).is_zero())
                        throw std::invalid_argument("structure functions not antisymmetric at " +
                                                    index_label("C", {c}, {a, b}));
    }

    PhaseSpace phase_space(std::optional<Matrix<EvenPoly>> twist = {}) const
    {
        return PhaseSpace::bfv(coords, r(), std::move(twist));
    }
};

inline AlgebroidData make_algebroid(std::vector<std::string> coords, Matrix<EvenPoly> rho, Tensor3 C)
{
    AlgebroidData d{std::move(coords), std::move(rho), std::move(C)};
    d.validate();
    return d;
}

/// Largest total degree among the anchor components (-1 if all vanish); same for C.
inline int anchor_degree(const AlgebroidData& d)
{
    int m = -1;
    for (const auto& row : d.rho)
        for (const auto& e : row) m = std::max(m, e.degree());
    return m;
}

inline int structure_degree(const AlgebroidData& d)
{
    int m = -1;
    for (const auto& t : d.C)
        for (const auto& row : t)
            for (const auto& e : row) m = std::max(m, e.degree());
    return m;
}

/// Images of the coordinates under the homological vector field:
/// Q(x^i) = rho_a^i xi^a, Q(xi^c) = -1/2 C^c_ab xi^a xi^b. Momenta map to zero.
struct QField {
    PhaseSpace space;
    std::vector<GradedPoly> image;  // indexed by coordinate of `space`
};

inline QField build_Q(const AlgebroidData& d, const PhaseSpace& ps)
{
    QField q{ps, std::vector<GradedPoly>(ps.context()->size(), ps.zero())};
    for (std::size_t i = 0; i < d.n(); ++i)
        for (std::size_t a = 0; a < d.r(); ++a)
            if (!d.rho[a][i].is_zero()) q.image[ps.x_index(i)] += ps.lift(d.rho[a][i]) * ps.xi(a);
    for (std::size_t c = 0; c < d.r(); ++c)
        for (std::size_t a = 0; a < d.r(); ++a)
            for (std::size_t b = a + 1; b < d.r(); ++b)
                if (!d.C[c][a][b].is_zero()) q.image[ps.xi_index(c)] -= ps.lift(d.C[c][a][b]) * ps.xi(a) * ps.xi(b);
    return q;
}

inline QField build_Q(const AlgebroidData& d) { return build_Q(d, d.phase_space()); }

/// Q acting as an odd derivation from the left: Q f = sum_z Q(z) (d>_z f).
inline GradedPoly apply_Q(const QField& q, const GradedPoly& f)
{
    GradedPoly r(q.space.context());
    for (std::size_t z = 0; z < q.image.size(); ++z) {
        if (q.image[z].is_zero()) continue;
        GradedPoly dz = left_deriv(f, z);
        if (!dz.is_zero()) r += q.image[z] * dz;
    }
    return r;
}

/// A section of Lambda^k E*: components over strictly increasing index tuples, i.e. the
/// polynomial sum_{a1<...<ak} w_{a1...ak} xi^a1 ... xi^ak.
struct EForm {
    std::size_t degree = 0;
    std::map<std::vector<std::size_t>, EvenPoly> components;

    EvenPoly component(std::vector<std::size_t> idx, std::size_t nvars) const
    {
        if (idx.size() != degree) throw std::invalid_argument("E-form index count mismatch");
        int sign = 1;
        for (std::size_t i = 0; i < idx.size(); ++i)
            for (std::size_t j = i + 1; j < idx.size(); ++j) {
                if (idx[i] == idx[j]) return EvenPoly(nvars);
                if (idx[i] > idx[j]) sign = -sign;
            }
        std::sort(idx.begin(), idx.end());
        auto it = components.find(idx);
        if (it == components.end()) return EvenPoly(nvars);
        return sign > 0 ? it->second : -it->second;
    }

    bool is_zero() const
    {
        for (const auto& [k, v] : components)
            if (!v.is_zero()) return false;
        return true;
    }
};

inline GradedPoly to_graded(const EForm& w, const PhaseSpace& ps)
{
    GradedPoly r = ps.zero();
    for (const auto& [idx, c] : w.components) {
        if (c.is_zero()) continue;
        GradedPoly t = ps.lift(c);
        for (auto a : idx) t = t * ps.xi(a);
        r += t;
    }
    return r;
}

/// Reads a polynomial in (x, xi) of pure xi-degree k back as an E-form.
inline EForm to_eform(const GradedPoly& f, const PhaseSpace& ps, std::size_t k)
{
    EForm w{k, {}};
    const auto& ctx = ps.context();
    for (const auto& [m, c] : f.terms()) {
        if (ps.p_degree(m) || ps.pi_count(m) || ps.has_theta(m))
            throw std::invalid_argument("E-form contains momenta");
        if (ps.xi_count(m) != k) throw std::invalid_argument("E-form of mixed degree");
        std::vector<std::size_t> idx;
        for (std::size_t a = 0; a < ps.rank(); ++a)
            if ((m.odd >> ctx->slot(ps.xi_index(a))) & 1u) idx.push_back(a);
        Exponents e(ps.base_dim(), 0);
        for (std::size_t i = 0; i < ps.base_dim(); ++i) e[i] = m.even[ctx->slot(ps.x_index(i))];
        auto [it, ins] = w.components.try_emplace(idx, EvenPoly(ps.base_dim()));
        it->second.add_term(e, c);
    }
    for (auto it = w.components.begin(); it != w.components.end();)
        it = it->second.is_zero() ? w.components.erase(it) : std::next(it);
    return w;
}

inline EForm one_form(const std::vector<EvenPoly>& alpha)
{
    EForm w{1, {}};
    for (std::size_t a = 0; a < alpha.size(); ++a)
        if (!alpha[a].is_zero()) w.components[{a}] = alpha[a];
    return w;
}

inline bool has_momenta(const GradedPoly& f, const PhaseSpace& ps)
{
    for (const auto& [m, c] : f.terms())
        if (ps.p_degree(m) || ps.pi_count(m) || ps.has_theta(m)) return true;
    return false;
}

/// The E-differential on functions of (x, xi).
inline GradedPoly e_diff(const QField& q, const GradedPoly& f)
{
    if (has_momenta(f, q.space)) throw std::invalid_argument("e_diff: argument contains momenta");
    return apply_Q(q, f);
}

inline EForm e_diff(const AlgebroidData& d, const EForm& w)
{
    auto q = build_Q(d);
    return to_eform(e_diff(q, to_graded(w, q.space)), q.space, w.degree + 1);
}

inline void require_antisymmetric(const Matrix<EvenPoly>& B, std::size_t n)
{
    if (B.size() != n) throw std::invalid_argument("2-form size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
        if (B[i].size() != n) throw std::invalid_argument("2-form size mismatch");
        for (std::size_t j = i; j < n; ++j)
            if (!(B[i][j] + B[j][i]).is_zero())
                throw std::invalid_argument("2-form not antisymmetric at " + index_label("B", {}, {i, j}));
    }
}

/// rho*(A)_a = A_i rho_a^i.
inline EForm rho_pullback(const AlgebroidData& d, const std::vector<EvenPoly>& A)
{
    if (A.size() != d.n()) throw std::invalid_argument("1-form size mismatch");
    std::vector<EvenPoly> out(d.r(), EvenPoly(d.n()));
    for (std::size_t a = 0; a < d.r(); ++a)
        for (std::size_t i = 0; i < d.n(); ++i) out[a] += A[i] * d.rho[a][i];
    return one_form(out);
}

/// rho*(B) = 1/2 B_ij rho_a^i rho_b^j xi^a xi^b, i.e. components B_ij rho_a^i rho_b^j for a < b.
inline EForm rho_pullback(const AlgebroidData& d, const Matrix<EvenPoly>& B)
{
    require_antisymmetric(B, d.n());
    EForm w{2, {}};
    for (std::size_t a = 0; a < d.r(); ++a)
        for (std::size_t b = a + 1; b < d.r(); ++b) {
            EvenPoly s(d.n());
            for (std::size_t i = 0; i < d.n(); ++i)
                for (std::size_t j = 0; j < d.n(); ++j)
                    if (!B[i][j].is_zero()) s += B[i][j] * d.rho[a][i] * d.rho[b][j];
            if (!s.is_zero()) w.components[{a, b}] = s;
        }
    return w;
}

/// de Rham differential of a polynomial 1-form: (dA)_ij = d_i A_j - d_j A_i.
inline Matrix<EvenPoly> de_rham(const std::vector<EvenPoly>& A)
{
    std::size_t n = A.size();
    auto B = zero_matrix(n, n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) B[i][j] = A[j].diff(i) - A[i].diff(j);
    return B;
}

/// Anchor-morphism residual R1^i_ab = rho_a^j d_j rho_b^i - rho_b^j d_j rho_a^i - C^c_ab rho_c^i.
inline EvenPoly anchor_residual(const AlgebroidData& d, std::size_t i, std::size_t a, std::size_t b)
{
    EvenPoly s(d.n());
    for (std::size_t j = 0; j < d.n(); ++j) s += d.rho[a][j] * d.rho[b][i].diff(j) - d.rho[b][j] * d.rho[a][i].diff(j);
    for (std::size_t c = 0; c < d.r(); ++c) s -= d.C[c][a][b] * d.rho[c][i];
    return s;
}

/// Jacobi residual R2^d_abc: the alternating sum over all orderings of (a,b,c) of
/// C^e_ab C^d_ce + rho_a^j d_j C^d_bc.
inline EvenPoly jacobi_residual(const AlgebroidData& D, std::size_t d, std::size_t a, std::size_t b, std::size_t c)
{
    auto T = [&](std::size_t u, std::size_t v, std::size_t w) {
        EvenPoly s(D.n());
        for (std::size_t e = 0; e < D.r(); ++e) s += D.C[e][u][v] * D.C[d][w][e];
        for (std::size_t j = 0; j < D.n(); ++j) s += D.rho[u][j] * D.C[d][v][w].diff(j);
        return s;
    };
    return T(a, b, c) + T(b, c, a) + T(c, a, b) - T(b, a, c) - T(a, c, b) - T(c, b, a);
}

/// Verifies that Q squares to zero, once through the component residuals R1, R2 and once by
/// applying Q twice to every coordinate; the two routes must agree coefficient by coefficient
/// (Q^2 x^i = sum_{a<b} R1^i_ab xi^a xi^b, Q^2 xi^d = -1/2 sum_{a<b<c} R2^d_abc xi^a xi^b xi^c).
inline CheckReport check_axioms(const AlgebroidData& d)
{
    CheckReport rep;
    rep.name = "axioms";
    rep.identity = "[Q,Q] = 2Q^2 = 0: anchor is a bracket morphism (R1) and the Jacobi identity holds (R2)";
    auto q = build_Q(d);
    const auto& ps = q.space;
    const auto& names = d.coords;
    bool routes_agree = true;
    for (std::size_t i = 0; i < d.n(); ++i) {
        GradedPoly q2 = apply_Q(q, q.image[ps.x_index(i)]);
        GradedPoly expect = ps.zero();
        for (std::size_t a = 0; a < d.r(); ++a)
            for (std::size_t b = a + 1; b < d.r(); ++b) {
                EvenPoly r1 = anchor_residual(d, i, a, b);
                if (!r1.is_zero()) {
                    rep.add_residual(index_label("R1", {i}, {a, b}), r1.to_string(names));
                    expect += ps.lift(r1) * ps.xi(a) * ps.xi(b);
                }
            }
        if (!(q2 == expect)) routes_agree = false;
    }
    for (std::size_t e = 0; e < d.r(); ++e) {
        GradedPoly q2 = apply_Q(q, q.image[ps.xi_index(e)]);
        GradedPoly expect = ps.zero();
        for (std::size_t a = 0; a < d.r(); ++a)
            for (std::size_t b = a + 1; b < d.r(); ++b)
                for (std::size_t c = b + 1; c < d.r(); ++c) {
                    EvenPoly r2 = jacobi_residual(d, e, a, b, c);
                    if (!r2.is_zero()) {
                        rep.add_residual(index_label("R2", {e}, {a, b, c}), r2.to_string(names));
                        expect += ps.lift(r2) * make_rat(-1, 2) * ps.xi(a) * ps.xi(b) * ps.xi(c);
                    }
                }
        if (!(q2 == expect)) routes_agree = false;
    }
    rep.fact("q_squared_route", routes_agree ? "agrees" : "disagrees");
    if (!routes_agree) rep.fail("component residuals and Q applied twice disagree");
    return rep;
}

/// Monomial basis of E-k-forms with x-degree <= N: (x-monomial, increasing index tuple), ordered
/// by x-degree first so that low-degree columns come first in linear solves.
struct FormBasis {
    std::vector<Exponents> monos;
    std::vector<std::vector<std::size_t>> tuples;
    std::vector<std::pair<std::size_t, std::size_t>> elements;  // (mono index, tuple index)
};

inline std::vector<std::vector<std::size_t>> index_tuples(std::size_t r, std::size_t k)
{
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    auto rec = [&](auto& self, std::size_t start) -> void {
        if (cur.size() == k) {
            out.push_back(cur);
            return;
        }
        for (std::size_t a = start; a < r; ++a) {
            cur.push_back(a);
            self(self, a + 1);
            cur.pop_back();
        }
    };
    rec(rec, 0);
    return out;
}

inline FormBasis form_basis(std::size_t n, std::size_t r, std::size_t k, int N)
{
    FormBasis fb{monomials_up_to(n, N), index_tuples(r, k), {}};
    for (std::size_t m = 0; m < fb.monos.size(); ++m)
        for (std::size_t t = 0; t < fb.tuples.size(); ++t) fb.elements.emplace_back(m, t);
    return fb;
}

inline GradedPoly basis_element(const FormBasis& fb, std::size_t idx, const PhaseSpace& ps)
{
    auto [m, t] = fb.elements[idx];
    GradedPoly g = ps.lift(EvenPoly::monomial(fb.monos[m], Rat(1)));
    for (auto a : fb.tuples[t]) g = g * ps.xi(a);
    return g;
}

/// Collects a family of polynomials into sparse column vectors over a shared monomial index.
class MonomialIndex {
public:
    std::size_t index(const GradedMonomial& m)
    {
        auto [it, inserted] = map_.try_emplace(m, map_.size());
        return it->second;
    }
    const std::map<GradedMonomial, std::size_t, GradedMonomialLess>& map() const { return map_; }
    std::size_t size() const { return map_.size(); }

    /// The polynomial as a sparse vector over this index.
    SparseVec vec(const GradedPoly& f)
    {
        SparseVec v;
        for (const auto& [m, c] : f.terms()) v[index(m)] = c;
        return v;
    }

private:
    std::map<GradedMonomial, std::size_t, GradedMonomialLess> map_;
};

/// Transposes columns (one SparseVec per column) to rows.
inline std::vector<SparseVec> columns_to_rows(const std::vector<SparseVec>& cols)
{
    std::map<std::size_t, SparseVec> rows;
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (const auto& [i, v] : cols[j]) rows[i][j] = v;
    std::vector<SparseVec> out;
    for (auto& [i, row] : rows) out.push_back(std::move(row));
    return out;
}

struct CohomologyReport {
    int truncation = 0;
    int slack = 1;
    std::size_t closed_dim = 0;       // dim ker of d on 1-forms of x-degree <= N
    std::size_t exact_dim = 0;        // dim (image of functions of degree <= N + slack) within the window
    std::size_t h1_dim = 0;           // closed_dim - exact_dim
    std::size_t window_dim = 0;
    bool filtration_preserved = false;
    std::vector<EForm> closed_basis;
    std::vector<EForm> representatives;  // closed forms spanning a complement of the exact ones
    std::vector<std::string> caveats;
};

/// Truncated first E-cohomology. The window is the space of E-1-forms with x-degree <= N; exact
/// forms are images of functions of degree <= N + slack that land in the window.
inline CohomologyReport cohomology_h1(const AlgebroidData& d, int N, int slack = 1)
{
    if (N < 0) throw std::invalid_argument("truncation must be non-negative");
    if (slack < 0) throw std::invalid_argument("slack must be non-negative");
    auto q = build_Q(d);
    const auto& ps = q.space;
    CohomologyReport rep;
    rep.truncation = N;
    rep.slack = slack;
    FormBasis w1 = form_basis(d.n(), d.r(), 1, N);
    rep.window_dim = w1.elements.size();

    // d on the window: 1-forms -> 2-forms
    MonomialIndex idx2;
    std::vector<SparseVec> cols;
    for (std::size_t k = 0; k < w1.elements.size(); ++k) cols.push_back(idx2.vec(apply_Q(q, basis_element(w1, k, ps))));
    auto kernel = nullspace(columns_to_rows(cols), cols.size());
    rep.closed_dim = kernel.size();

    // window coordinates of 1-forms
    MonomialIndex idx1;
    std::vector<SparseVec> window_vecs;
    for (std::size_t k = 0; k < w1.elements.size(); ++k) window_vecs.push_back(idx1.vec(basis_element(w1, k, ps)));
    std::size_t window_rows = idx1.size();

    // d on functions of degree <= N + slack
    auto funcs = monomials_up_to(d.n(), N + slack);
    std::vector<SparseVec> dcols;
    for (const auto& m : funcs) dcols.push_back(idx1.vec(apply_Q(q, ps.lift(EvenPoly::monomial(m, Rat(1))))));
    auto drows = columns_to_rows(dcols);
    std::vector<SparseVec> outside;
    {
        std::map<std::size_t, SparseVec> by_row;
        for (std::size_t j = 0; j < dcols.size(); ++j)
            for (const auto& [i, v] : dcols[j])
                if (i >= window_rows) by_row[i][j] = v;
        for (auto& [i, r] : by_row) outside.push_back(std::move(r));
    }
    std::size_t rank_d = rank(drows);
    std::size_t rank_out = rank(outside);
    rep.exact_dim = rank_d - rank_out;
    rep.h1_dim = rep.closed_dim - rep.exact_dim;

    auto kernel_form = [&](const SparseVec& v) {
        GradedPoly g = ps.zero();
        for (const auto& [k, c] : v) g += basis_element(w1, k, ps) * c;
        return to_eform(g, ps, 1);
    };
    for (const auto& v : kernel) rep.closed_basis.push_back(kernel_form(v));

    // representatives: extend a basis of the exact part within the window by closed basis vectors
    Echelon ex(false);
    {
        auto null_out = nullspace(outside, dcols.size());
        for (const auto& v : null_out) {
            SparseVec img;
            for (const auto& [j, c] : v) axpy(img, c, dcols[j]);
            ex.add(img);
        }
    }
    for (std::size_t k = 0; k < kernel.size() && rep.representatives.size() < rep.h1_dim; ++k) {
        SparseVec img;
        for (const auto& [j, c] : kernel[k]) axpy(img, c, window_vecs[j]);
        if (ex.add(img)) rep.representatives.push_back(rep.closed_basis[k]);
    }

    rep.filtration_preserved = anchor_degree(d) <= 1 && structure_degree(d) <= 0;
    rep.caveats.push_back("truncated complex: dimensions bound, and do not compute, the first E-cohomology");
    if (!rep.filtration_preserved)
        rep.caveats.push_back("the differential raises x-degree (anchor above linear or non-constant structure functions)");
    return rep;
}

struct ExactnessReport {
    bool closed = false;
    bool exact = false;
    std::optional<EvenPoly> primitive;
    int search_degree = 0;
    EForm d_alpha;
};

/// Decides whether a 1-form is closed and, searching primitives of degree <= deg(alpha) + slack,
/// exact; the primitive found uses the lowest possible monomials and no constant term.
inline ExactnessReport is_exact(const AlgebroidData& d, const EForm& alpha, int slack = 1)
{
    if (alpha.degree != 1) throw std::invalid_argument("is_exact expects a 1-form");
    auto q = build_Q(d);
    const auto& ps = q.space;
    ExactnessReport rep;
    GradedPoly a = to_graded(alpha, ps);
    rep.d_alpha = to_eform(apply_Q(q, a), ps, 2);
    rep.closed = rep.d_alpha.is_zero();
    int deg = -1;
    for (const auto& [k, c] : alpha.components) deg = std::max(deg, c.degree());
    rep.search_degree = std::max(deg, 0) + slack;
    if (!rep.closed) return rep;
    if (alpha.is_zero()) {
        rep.exact = true;
        rep.primitive = EvenPoly(d.n());
        return rep;
    }
    auto funcs = monomials_up_to(d.n(), rep.search_degree);
    MonomialIndex idx;
    std::vector<SparseVec> cols;
    for (const auto& m : funcs) cols.push_back(idx.vec(apply_Q(q, ps.lift(EvenPoly::monomial(m, Rat(1))))));
    SparseVec target = idx.vec(a);
    std::map<std::size_t, SparseVec> by_row;
    for (std::size_t j = 0; j < cols.size(); ++j)
        for (const auto& [i, v] : cols[j]) by_row[i][j] = v;
    for (const auto& [i, v] : target) by_row.try_emplace(i);
    std::vector<SparseVec> A;
    std::vector<Rat> b;
    for (auto& [i, row] : by_row) {
        A.push_back(row);
        auto it = target.find(i);
        b.push_back(it == target.end() ? Rat(0) : it->second);
    }
    auto sol = solve(A, b, cols.size());
    if (!sol.solution) return rep;
    rep.exact = true;
    EvenPoly f(d.n());
    for (const auto& [j, c] : *sol.solution) f.add_term(funcs[j], c);
    rep.primitive = f;
    return rep;
}

} // namespace nqbfv

#endif
