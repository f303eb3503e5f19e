#ifndef NQBFV_POISSON_HPP
#define NQBFV_POISSON_HPP

#include <stdexcept>
#include <vector>

#include "nqbfv/graded_poly.hpp"

namespace nqbfv {

/// Graded Poisson bracket of the context.
///
/// Generator brackets: {p, q} = 1 for each declared pair (position q, momentum p); for odd pairs
/// this is symmetric, {xi, pi} = {pi, xi} = 1, and for even pairs {q, p} = -1. With a twist,
/// {p_i, p_j} = -B_ij(x). The bracket is
///     {F, G} = sum_{A,B} (F d<_A) w^{AB} (d>_B G)
/// with right derivatives on F and left derivatives on G, which makes it a biderivation with
/// {F, G} = -(-1)^{|F||G|} {G, F} and ghost degree gh(F) + gh(G).
inline GradedPoly poisson(const GradedPoly& F, const GradedPoly& G)
{
    const ContextPtr& ctx = GradedPoly::common_context(F, G);
    if (ctx->pairs().empty()) throw std::invalid_argument("context has no canonical pairs");
    GradedPoly result(ctx);
    if (F.is_zero() || G.is_zero()) return result;
    for (const auto& pr : ctx->pairs()) {
        bool odd = ctx->coordinate(pr.position).odd();
        GradedPoly Fp = right_deriv(F, pr.momentum);
        if (!Fp.is_zero()) {
            GradedPoly Gq = left_deriv(G, pr.position);
            if (!Gq.is_zero()) result += Fp * Gq;
        }
        GradedPoly Fq = right_deriv(F, pr.position);
        if (!Fq.is_zero()) {
            GradedPoly Gp = left_deriv(G, pr.momentum);
            if (!Gp.is_zero()) {
                if (odd) result += Fq * Gp;
                else result -= Fq * Gp;
            }
        }
    }
    if (const auto& tw = ctx->twist()) {
        const auto& base = ctx->base_pairs();
        std::vector<std::size_t> positions;
        for (const auto& pr : base) positions.push_back(pr.position);
        std::vector<GradedPoly> Fp, Gp;
        for (const auto& pr : base) {
            Fp.push_back(right_deriv(F, pr.momentum));
            Gp.push_back(left_deriv(G, pr.momentum));
        }
        for (std::size_t i = 0; i < base.size(); ++i) {
            if (Fp[i].is_zero()) continue;
            for (std::size_t j = 0; j < base.size(); ++j) {
                if (Gp[j].is_zero() || tw->B[i][j].is_zero()) continue;
                result -= Fp[i] * embed(tw->B[i][j], ctx, positions) * Gp[j];
            }
        }
    }
    return result;
}

} // namespace nqbfv

#endif
