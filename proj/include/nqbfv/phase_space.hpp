#ifndef NQBFV_PHASE_SPACE_HPP
#define NQBFV_PHASE_SPACE_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nqbfv/graded_poly.hpp"

namespace nqbfv {

/// Coordinates of T*M (x, p) or T*E[1] (x, xi, p, pi), optionally with the super-time
/// generator theta. Coordinate order: x..., xi..., p..., pi..., theta.
/// Generated names are xi<a>, p<i>, pi<a> and theta (1-based), so user base names must avoid them.
class PhaseSpace {
public:
    static PhaseSpace cotangent(std::vector<std::string> base, std::optional<Matrix<EvenPoly>> twist = {})
    {
        return PhaseSpace(std::move(base), 0, false, false, std::move(twist));
    }

    static PhaseSpace bfv(std::vector<std::string> base, std::size_t rank, std::optional<Matrix<EvenPoly>> twist = {},
                          bool with_theta = false)
    {
        return PhaseSpace(std::move(base), rank, true, with_theta, std::move(twist));
    }

    PhaseSpace with_theta() const { return PhaseSpace(base_, rank_, ghosts_, true, twist_); }
    PhaseSpace without_twist() const { return PhaseSpace(base_, rank_, ghosts_, theta_, std::nullopt); }
    PhaseSpace with_twist(std::optional<Matrix<EvenPoly>> twist) const
    {
        return PhaseSpace(base_, rank_, ghosts_, theta_, std::move(twist));
    }

    const ContextPtr& context() const { return ctx_; }
    std::size_t base_dim() const { return base_.size(); }
    std::size_t rank() const { return rank_; }
    bool has_ghosts() const { return ghosts_; }
    bool has_theta() const { return theta_; }
    const std::vector<std::string>& base_names() const { return base_; }
    const std::optional<Matrix<EvenPoly>>& twist_matrix() const { return twist_; }

    std::size_t x_index(std::size_t i) const { return i; }
    std::size_t xi_index(std::size_t a) const { return require_ghosts(), base_.size() + a; }
    std::size_t p_index(std::size_t i) const { return base_.size() + rank_ + i; }
    std::size_t pi_index(std::size_t a) const { return require_ghosts(), 2 * base_.size() + rank_ + a; }
    std::size_t theta_index() const
    {
        if (!theta_) throw std::logic_error("phase space has no theta");
        return 2 * base_.size() + 2 * rank_;
    }

    GradedPoly x(std::size_t i) const { return GradedPoly::generator(ctx_, x_index(i)); }
    GradedPoly xi(std::size_t a) const { return GradedPoly::generator(ctx_, xi_index(a)); }
    GradedPoly p(std::size_t i) const { return GradedPoly::generator(ctx_, p_index(i)); }
    GradedPoly pi(std::size_t a) const { return GradedPoly::generator(ctx_, pi_index(a)); }
    GradedPoly theta() const { return GradedPoly::generator(ctx_, theta_index()); }
    GradedPoly constant(const Rat& c) const { return GradedPoly(ctx_, c); }
    GradedPoly zero() const { return GradedPoly(ctx_); }

    /// A base function f(x) as a phase-space function.
    GradedPoly lift(const EvenPoly& f) const { return embed(f, ctx_, x_positions_); }

    const std::vector<std::size_t>& x_positions() const { return x_positions_; }
    std::vector<std::size_t> p_positions() const
    {
        std::vector<std::size_t> v;
        for (std::size_t i = 0; i < base_.size(); ++i) v.push_back(p_index(i));
        return v;
    }
    std::vector<std::size_t> xi_positions() const
    {
        std::vector<std::size_t> v;
        for (std::size_t a = 0; a < rank_; ++a) v.push_back(xi_index(a));
        return v;
    }
    std::vector<std::size_t> pi_positions() const
    {
        std::vector<std::size_t> v;
        for (std::size_t a = 0; a < rank_; ++a) v.push_back(pi_index(a));
        return v;
    }

    /// Degree of a monomial in the momenta p.
    std::uint32_t p_degree(const GradedMonomial& m) const
    {
        std::uint32_t d = 0;
        for (std::size_t i = 0; i < base_.size(); ++i) d += m.even[ctx_->slot(p_index(i))];
        return d;
    }
    std::uint32_t x_degree(const GradedMonomial& m) const
    {
        std::uint32_t d = 0;
        for (std::size_t i = 0; i < base_.size(); ++i) d += m.even[ctx_->slot(x_index(i))];
        return d;
    }
    std::uint32_t xi_count(const GradedMonomial& m) const
    {
        std::uint32_t d = 0;
        for (std::size_t a = 0; a < rank_; ++a) d += (m.odd >> ctx_->slot(xi_index(a))) & 1u;
        return d;
    }
    std::uint32_t pi_count(const GradedMonomial& m) const
    {
        std::uint32_t d = 0;
        for (std::size_t a = 0; a < rank_; ++a) d += (m.odd >> ctx_->slot(pi_index(a))) & 1u;
        return d;
    }
    bool has_theta(const GradedMonomial& m) const { return theta_ && ((m.odd >> ctx_->slot(theta_index())) & 1u); }

    /// Part of f homogeneous of the given degree in the momenta p.
    GradedPoly momentum_part(const GradedPoly& f, std::uint32_t degree) const
    {
        return f.filter([&](const GradedMonomial& m) { return p_degree(m) == degree; });
    }

    /// Coefficient of a monomial in the non-x generators, as a function of x.
    EvenPoly coefficient_in_x(const GradedPoly& f, const GradedMonomial& non_x) const
    {
        EvenPoly r(base_.size());
        for (const auto& [m, c] : f.terms()) {
            if (m.odd != non_x.odd) continue;
            bool match = true;
            Exponents e(base_.size(), 0);
            for (std::size_t s = 0; s < m.even.size() && match; ++s) {
                std::size_t coord = ctx_->even_coords()[s];
                if (coord < base_.size()) e[coord] = m.even[s];
                else if (m.even[s] != non_x.even[s]) match = false;
            }
            if (match) r.add_term(e, c);
        }
        return r;
    }

    /// Monomial made of the listed generators (odd ones must be distinct), coefficient sign not included.
    GradedMonomial monomial(const std::vector<std::size_t>& coords) const
    {
        GradedMonomial m{Exponents(ctx_->even_count(), 0), 0};
        for (auto c : coords) {
            if (ctx_->coordinate(c).odd()) m.odd |= std::uint64_t{1} << ctx_->slot(c);
            else ++m.even[ctx_->slot(c)];
        }
        return m;
    }

private:
    PhaseSpace(std::vector<std::string> base, std::size_t rank, bool ghosts, bool theta,
               std::optional<Matrix<EvenPoly>> twist)
        : base_(std::move(base)), rank_(ghosts ? rank : 0), ghosts_(ghosts), theta_(theta), twist_(std::move(twist))
    {
        std::vector<Coordinate> coords;
        std::vector<CanonicalPair> pairs;
        const std::size_t n = base_.size();
        for (const auto& b : base_) coords.push_back({b, 0});
        for (std::size_t a = 0; a < rank_; ++a) coords.push_back({"xi" + std::to_string(a + 1), 1});
        for (std::size_t i = 0; i < n; ++i) coords.push_back({"p" + std::to_string(i + 1), 0});
        for (std::size_t a = 0; a < rank_; ++a) coords.push_back({"pi" + std::to_string(a + 1), -1});
        if (theta_) coords.push_back({"theta", 1});
        for (std::size_t i = 0; i < n; ++i) pairs.push_back({i, n + rank_ + i});
        for (std::size_t a = 0; a < rank_; ++a) pairs.push_back({n + a, 2 * n + rank_ + a});
        ctx_ = make_context(std::move(coords), std::move(pairs), twist_);
        for (std::size_t i = 0; i < n; ++i) x_positions_.push_back(i);
    }

    void require_ghosts() const
    {
        if (!ghosts_) throw std::logic_error("phase space has no ghost coordinates");
    }

    std::vector<std::string> base_;
    std::size_t rank_;
    bool ghosts_, theta_;
    std::optional<Matrix<EvenPoly>> twist_;
    ContextPtr ctx_;
    std::vector<std::size_t> x_positions_;
};

} // namespace nqbfv

#endif
