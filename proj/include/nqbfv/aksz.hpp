#ifndef NQBFV_AKSZ_HPP
#define NQBFV_AKSZ_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nqbfv/bfv.hpp"

namespace nqbfv {

/// Q = S + theta H on the BFV phase space extended by the super-time generator theta.
struct SuperCharge {
    PhaseSpace space;  // has theta
    GradedPoly Q;
    GradedPoly S;                 // in `space`
    std::optional<GradedPoly> H;  // in `space`
};

inline SuperCharge build_supercharge(const BFVPackage& bfv)
{
    auto ps = bfv.space.with_theta();
    GradedPoly S = rebase(bfv.S, ps.context());
    SuperCharge sq{ps, S, S, std::nullopt};
    if (bfv.H) {
        sq.H = rebase(*bfv.H, ps.context());
        sq.Q += ps.theta() * *sq.H;
    }
    return sq;
}

/// (Q,Q) = (S,S) - 2 theta (S,H) since theta is odd and brackets trivially with everything.
inline CheckReport check_supercharge(const SuperCharge& sq)
{
    CheckReport rep;
    rep.name = "supercharge";
    rep.identity = "(Q, Q) = (S, S) - 2 theta (S, H) = 0";
    const auto& ps = sq.space;
    GradedPoly QQ = poisson(sq.Q, sq.Q);
    std::size_t t = ps.theta_index();
    GradedPoly lin = left_deriv(QQ, t);
    GradedPoly free = QQ - ps.theta() * lin;
    GradedPoly SS = poisson(sq.S, sq.S);
    GradedPoly SH = sq.H ? poisson(sq.S, *sq.H) : ps.zero();
    bool agree = free == SS && lin == SH * Rat(-2);
    rep.fact("decomposition", agree ? "agrees" : "disagrees");
    if (!agree) rep.fail("(Q,Q) does not split as (S,S) - 2 theta (S,H)");
    if (!free.is_zero()) rep.add_residual("theta^0", free.to_string());
    if (!lin.is_zero()) rep.add_residual("theta^1", lin.to_string());
    return rep;
}

/// One component field of the BV mapping space.
struct ComponentField {
    std::string name;
    int ghost = 0;
    bool odd = false;
    std::string partner_of;  // for theta-components: the lowest component they accompany
    bool derivative = false; // time derivative of the lowest component named in partner_of
};

/// The integrand of S_BV after the theta integration, as a polynomial in the component fields.
struct ComponentAction {
    std::vector<ComponentField> fields;
    ContextPtr context;
    GradedPoly density;
};

namespace detail {

inline std::string partner_name(const PhaseSpace& ps, std::size_t z)
{
    if (z >= ps.base_dim() && z < ps.base_dim() + ps.rank()) return "lambda" + std::to_string(z - ps.base_dim() + 1);
    return ps.context()->coordinate(z).name + "~";
}

/// Component fields: every BFV coordinate z, its theta-partner (ghost - 1, flipped parity) and
/// the time derivatives of x and xi, which are all the kinetic term needs.
inline std::vector<ComponentField> component_fields(const PhaseSpace& ps)
{
    std::vector<ComponentField> f;
    std::size_t nz = 2 * (ps.base_dim() + ps.rank());
    const auto& ctx = ps.context();
    for (std::size_t z = 0; z < nz; ++z) {
        const auto& c = ctx->coordinate(z);
        f.push_back({c.name, c.ghost, c.odd(), "", false});
    }
    for (std::size_t z = 0; z < nz; ++z) {
        const auto& c = ctx->coordinate(z);
        f.push_back({partner_name(ps, z), c.ghost - 1, !c.odd(), c.name, false});
    }
    for (std::size_t z = 0; z < ps.base_dim() + ps.rank(); ++z) {
        const auto& c = ctx->coordinate(z);
        f.push_back({c.name + "'", c.ghost, c.odd(), c.name, true});
    }
    return f;
}

inline ContextPtr fields_context(const std::vector<ComponentField>& fields, bool with_theta)
{
    std::vector<Coordinate> coords;
    for (const auto& f : fields) coords.push_back({f.name, f.ghost});
    if (with_theta) coords.push_back({"theta", 1});
    return make_context(std::move(coords));
}

} // namespace detail

/// Substitutes superfields Z = z + theta z~ into Q (whose theta is the source theta) and keeps the
/// theta-coefficient. With `kinetic`, adds p_i x'^i - pi_a xi'^a (the pairing induced by the bracket).
inline ComponentAction expand_bv(const SuperCharge& sq, bool kinetic = true)
{
    const auto& ps = sq.space;
    ComponentAction ca;
    ca.fields = detail::component_fields(ps);
    auto ext = detail::fields_context(ca.fields, true);
    ca.context = detail::fields_context(ca.fields, false);
    std::size_t nz = 2 * (ps.base_dim() + ps.rank());
    GradedPoly theta = GradedPoly::generator(ext, ext->size() - 1);
    std::vector<GradedPoly> images;
    for (std::size_t z = 0; z < nz; ++z)
        images.push_back(GradedPoly::generator(ext, z) + theta * GradedPoly::generator(ext, nz + z));
    images.push_back(theta);
    GradedPoly ev = substitute(sq.Q, images, ext);
    // Berezin integral: coefficient of theta taken from the left
    GradedPoly dens = left_deriv(ev, ext->size() - 1) * Rat(-1);
    ca.density = rebase(dens, ca.context);
    if (kinetic) {
        for (std::size_t i = 0; i < ps.base_dim(); ++i)
            ca.density += GradedPoly::generator(ca.context, ps.p_index(i)) *
                          GradedPoly::generator(ca.context, ca.context->index_of(ps.context()->coordinate(i).name + "'"));
        for (std::size_t a = 0; a < ps.rank(); ++a)
            ca.density -= GradedPoly::generator(ca.context, ps.pi_index(a)) *
                          GradedPoly::generator(ca.context, ca.context->index_of(ps.context()->coordinate(ps.xi_index(a)).name + "'"));
    }
    return ca;
}

/// Re-counts ghost number and parity of every term from the field table (not from the context),
/// checks each theta-partner against its lowest component and the derivative order.
inline CheckReport check_bookkeeping(const ComponentAction& ca)
{
    CheckReport rep;
    rep.name = "bookkeeping";
    rep.identity = "every term has ghost number 0, even parity and at most one time derivative";
    std::map<std::string, const ComponentField*> by_name;
    for (const auto& f : ca.fields) by_name[f.name] = &f;
    for (const auto& f : ca.fields) {
        if (f.partner_of.empty()) continue;
        auto it = by_name.find(f.partner_of);
        if (it == by_name.end()) {
            rep.fail("field " + f.name + " refers to unknown field " + f.partner_of);
            continue;
        }
        const auto& base = *it->second;
        int want = f.derivative ? base.ghost : base.ghost - 1;
        bool parity = f.derivative ? f.odd == base.odd : f.odd != base.odd;
        if (f.ghost != want || !parity)
            rep.add_residual("field[" + f.name + "]", "ghost " + std::to_string(f.ghost) + ", expected " + std::to_string(want));
    }
    if (!ca.context) return rep;
    const auto& ctx = ca.context;
    std::size_t k = 0;
    for (const auto& [m, c] : ca.density.terms()) {
        int gh = 0, odd = 0, der = 0;
        auto count = [&](std::size_t coord, std::uint32_t power) {
            const auto& name = ctx->coordinate(coord).name;
            auto it = by_name.find(name);
            if (it == by_name.end()) {
                rep.fail("term uses undeclared field " + name);
                return;
            }
            gh += it->second->ghost * int(power);
            odd += it->second->odd ? int(power) : 0;
            der += it->second->derivative ? int(power) : 0;
        };
        for (std::size_t s = 0; s < m.even.size(); ++s)
            if (m.even[s]) count(ctx->even_coords()[s], m.even[s]);
        for (std::uint64_t bits = m.odd; bits; bits &= bits - 1) count(ctx->odd_coords()[std::countr_zero(bits)], 1);
        if (gh != 0 || odd % 2 != 0 || der > 1) {
            GradedPoly t(ctx);
            t.add_term(m, c);
            rep.add_residual("term[" + std::to_string(k) + "]",
                             t.to_string() + " (ghost " + std::to_string(gh) + ", derivatives " + std::to_string(der) + ")");
        }
        ++k;
    }
    return rep;
}

/// Drops every term containing a field of nonzero ghost number.
inline GradedPoly ghost_zero_truncation(const ComponentAction& ca)
{
    std::map<std::string, int> gh;
    for (const auto& f : ca.fields) gh[f.name] = f.ghost;
    const auto& ctx = ca.context;
    return ca.density.filter([&](const GradedMonomial& m) {
        for (std::size_t s = 0; s < m.even.size(); ++s)
            if (m.even[s] && gh.at(ctx->coordinate(ctx->even_coords()[s]).name) != 0) return false;
        return m.odd == 0 || [&] {
            for (std::uint64_t bits = m.odd; bits; bits &= bits - 1)
                if (gh.at(ctx->coordinate(ctx->odd_coords()[std::countr_zero(bits)]).name) != 0) return false;
            return true;
        }();
    });
}

/// p_i x'^i - H(x,p) - lambda^a Phi_a(x,p), assembled from the classical data in the given context.
inline GradedPoly extended_hamiltonian_action(const GradedPoly& H, const ConstraintSet& cs, const ContextPtr& target)
{
    const auto& ps = cs.space;
    GradedPoly L(target);
    for (std::size_t i = 0; i < ps.base_dim(); ++i)
        L += GradedPoly::generator(target, "p" + std::to_string(i + 1)) *
             GradedPoly::generator(target, ps.base_names()[i] + "'");
    L -= rebase(H, target);
    for (std::size_t a = 0; a < cs.phis.size(); ++a)
        L -= GradedPoly::generator(target, "lambda" + std::to_string(a + 1)) * rebase(cs.phis[a], target);
    return L;
}

} // namespace nqbfv

#endif
