#ifndef NQBFV_GRADED_POLY_HPP
#define NQBFV_GRADED_POLY_HPP

#include <bit>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "nqbfv/even_poly.hpp"
#include "nqbfv/parser.hpp"
#include "nqbfv/rational.hpp"

namespace nqbfv {

struct Coordinate {
    std::string name;
    int ghost = 0;
    bool odd() const { return ghost % 2 != 0; }
};

/// A declared conjugate pair; `position` is the coordinate, `momentum` its conjugate.
/// The bracket is normalised as {momentum, position} = 1.
struct CanonicalPair {
    std::size_t position;
    std::size_t momentum;
};

/// Magnetic twist {p_i, p_j} = -B_ij over the even degree-0 pairs (in pair order).
/// Entries are polynomials in those base positions only.
struct Twist {
    Matrix<EvenPoly> B;
    bool closed = true;
};

class GradedContext;
using ContextPtr = std::shared_ptr<const GradedContext>;

/// Ordered coordinates with ghost degrees, conjugate pairs and an optional twist.
class GradedContext {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    GradedContext(std::vector<Coordinate> coords, std::vector<CanonicalPair> pairs = {},
                  std::optional<Matrix<EvenPoly>> twist = std::nullopt)
        : coords_(std::move(coords)), pairs_(std::move(pairs))
    {
        std::unordered_set<std::string> names;
        slot_.resize(coords_.size());
        for (std::size_t i = 0; i < coords_.size(); ++i) {
            if (coords_[i].name.empty()) throw std::invalid_argument("empty coordinate name");
            if (!names.insert(coords_[i].name).second)
                throw std::invalid_argument("duplicate coordinate name '" + coords_[i].name + "'");
            if (coords_[i].odd()) {
                slot_[i] = odd_.size();
                odd_.push_back(i);
            } else {
                slot_[i] = even_.size();
                even_.push_back(i);
            }
        }
        if (odd_.size() > 64) throw std::invalid_argument("at most 64 odd coordinates supported");
        partner_.assign(coords_.size(), npos);
        for (const auto& pr : pairs_) {
            if (pr.position >= coords_.size() || pr.momentum >= coords_.size() || pr.position == pr.momentum)
                throw std::invalid_argument("invalid canonical pair");
            if (partner_[pr.position] != npos || partner_[pr.momentum] != npos)
                throw std::invalid_argument("coordinate in more than one canonical pair");
            if (coords_[pr.position].ghost + coords_[pr.momentum].ghost != 0)
                throw std::invalid_argument("paired coordinates must have ghost degrees summing to 0");
            partner_[pr.position] = pr.momentum;
            partner_[pr.momentum] = pr.position;
            if (!coords_[pr.position].odd() && coords_[pr.position].ghost == 0) base_pairs_.push_back(pr);
        }
        if (twist) {
            std::size_t n = base_pairs_.size();
            if (twist->size() != n) throw std::invalid_argument("twist matrix size mismatch");
            for (std::size_t i = 0; i < n; ++i) {
                if ((*twist)[i].size() != n) throw std::invalid_argument("twist matrix size mismatch");
                for (std::size_t j = 0; j < n; ++j)
                    if ((*twist)[i][j].nvars() != n) throw std::invalid_argument("twist entry arity mismatch");
            }
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    if (!((*twist)[i][j] + (*twist)[j][i]).is_zero())
                        throw std::invalid_argument("twist matrix is not antisymmetric");
            Twist t{*twist, true};
            for (std::size_t i = 0; i < n && t.closed; ++i)
                for (std::size_t j = 0; j < n && t.closed; ++j)
                    for (std::size_t k = 0; k < n && t.closed; ++k) {
                        EvenPoly d = t.B[j][k].diff(i) + t.B[k][i].diff(j) + t.B[i][j].diff(k);
                        if (!d.is_zero()) t.closed = false;
                    }
            twist_ = std::move(t);
        }
    }

    std::size_t size() const { return coords_.size(); }
    const std::vector<Coordinate>& coordinates() const { return coords_; }
    const Coordinate& coordinate(std::size_t i) const { return coords_.at(i); }
    const std::vector<CanonicalPair>& pairs() const { return pairs_; }
    /// Even ghost-degree-0 pairs; their positions are the base coordinates the twist lives on.
    const std::vector<CanonicalPair>& base_pairs() const { return base_pairs_; }
    const std::optional<Twist>& twist() const { return twist_; }
    std::size_t partner(std::size_t i) const { return partner_.at(i); }

    std::size_t even_count() const { return even_.size(); }
    std::size_t odd_count() const { return odd_.size(); }
    const std::vector<std::size_t>& even_coords() const { return even_; }
    const std::vector<std::size_t>& odd_coords() const { return odd_; }
    std::size_t slot(std::size_t coord) const { return slot_.at(coord); }

    std::size_t index_of(const std::string& name) const
    {
        for (std::size_t i = 0; i < coords_.size(); ++i)
            if (coords_[i].name == name) return i;
        return npos;
    }

    bool has_twist() const { return twist_.has_value(); }

    friend bool operator==(const GradedContext& a, const GradedContext& b)
    {
        if (a.coords_.size() != b.coords_.size() || a.pairs_.size() != b.pairs_.size()) return false;
        for (std::size_t i = 0; i < a.coords_.size(); ++i)
            if (a.coords_[i].name != b.coords_[i].name || a.coords_[i].ghost != b.coords_[i].ghost) return false;
        for (std::size_t i = 0; i < a.pairs_.size(); ++i)
            if (a.pairs_[i].position != b.pairs_[i].position || a.pairs_[i].momentum != b.pairs_[i].momentum)
                return false;
        if (a.twist_.has_value() != b.twist_.has_value()) return false;
        return !a.twist_ || a.twist_->B == b.twist_->B;
    }

private:
    std::vector<Coordinate> coords_;
    std::vector<CanonicalPair> pairs_;
    std::vector<CanonicalPair> base_pairs_;
    std::vector<std::size_t> even_, odd_, slot_, partner_;
    std::optional<Twist> twist_;
};

inline ContextPtr make_context(std::vector<Coordinate> coords, std::vector<CanonicalPair> pairs = {},
                               std::optional<Matrix<EvenPoly>> twist = std::nullopt)
{
    return std::make_shared<const GradedContext>(std::move(coords), std::move(pairs), std::move(twist));
}

/// A monomial: even exponents times the odd generators in the mask, taken in ascending slot order.
struct GradedMonomial {
    Exponents even;
    std::uint64_t odd = 0;

    friend bool operator==(const GradedMonomial&, const GradedMonomial&) = default;
};

struct GradedMonomialLess {
    bool operator()(const GradedMonomial& a, const GradedMonomial& b) const
    {
        auto da = total_degree(a.even) + std::popcount(a.odd);
        auto db = total_degree(b.even) + std::popcount(b.odd);
        if (da != db) return da < db;
        if (a.even != b.even) return GrlexLess{}(a.even, b.even);
        // lower odd slots rank higher, matching the even-variable convention
        std::uint64_t diff = a.odd ^ b.odd;
        if (!diff) return false;
        return (b.odd & (diff & (~diff + 1))) != 0;
    }
};

namespace detail {

/// Sign of (-1)^(number of pairs i in a, j in b with i > j): reorders A·B into ascending order.
inline int merge_sign(std::uint64_t a, std::uint64_t b)
{
    int inversions = 0;
    while (b) {
        int j = std::countr_zero(b);
        b &= b - 1;
        std::uint64_t higher = (j == 63) ? 0 : (a >> (j + 1));
        inversions += std::popcount(higher);
    }
    return (inversions & 1) ? -1 : 1;
}

} // namespace detail

class GradedPoly {
public:
    using TermMap = std::map<GradedMonomial, Rat, GradedMonomialLess>;

    GradedPoly() = default;
    explicit GradedPoly(ContextPtr ctx) : ctx_(std::move(ctx)) { require_ctx(); }
    GradedPoly(ContextPtr ctx, const Rat& c) : ctx_(std::move(ctx))
    {
        require_ctx();
        if (c != 0) terms_.emplace(GradedMonomial{Exponents(ctx_->even_count(), 0), 0}, c);
    }

    static GradedPoly generator(const ContextPtr& ctx, std::size_t coord)
    {
        GradedPoly g(ctx);
        GradedMonomial m{Exponents(ctx->even_count(), 0), 0};
        if (ctx->coordinate(coord).odd()) m.odd = std::uint64_t{1} << ctx->slot(coord);
        else m.even[ctx->slot(coord)] = 1;
        g.terms_.emplace(std::move(m), Rat(1));
        return g;
    }

    static GradedPoly generator(const ContextPtr& ctx, const std::string& name)
    {
        auto i = ctx->index_of(name);
        if (i == GradedContext::npos) throw std::invalid_argument("unknown coordinate '" + name + "'");
        return generator(ctx, i);
    }

    const ContextPtr& context() const { return ctx_; }
    const TermMap& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }
    bool is_zero() const { return terms_.empty(); }

    Rat coefficient(const GradedMonomial& m) const
    {
        auto it = terms_.find(m);
        return it == terms_.end() ? Rat(0) : it->second;
    }

    void add_term(const GradedMonomial& m, const Rat& c)
    {
        if (c == 0) return;
        auto [it, inserted] = terms_.try_emplace(m, c);
        if (!inserted) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    GradedPoly& operator+=(const GradedPoly& o)
    {
        adopt(o);
        for (const auto& [m, c] : o.terms_) add_term(m, c);
        return *this;
    }
    GradedPoly& operator-=(const GradedPoly& o)
    {
        adopt(o);
        for (const auto& [m, c] : o.terms_) add_term(m, -c);
        return *this;
    }
    GradedPoly& operator*=(const Rat& s)
    {
        if (s == 0) terms_.clear();
        for (auto& [m, c] : terms_) c *= s;
        return *this;
    }

    friend GradedPoly operator+(GradedPoly a, const GradedPoly& b) { return a += b; }
    friend GradedPoly operator-(GradedPoly a, const GradedPoly& b) { return a -= b; }
    friend GradedPoly operator-(GradedPoly a) { return a *= Rat(-1); }
    friend GradedPoly operator*(GradedPoly a, const Rat& s) { return a *= s; }
    friend GradedPoly operator*(const Rat& s, GradedPoly a) { return a *= s; }
    friend GradedPoly operator*(const GradedPoly& a, const GradedPoly& b) { return gmul(a, b); }
    GradedPoly& operator*=(const GradedPoly& o) { return *this = gmul(*this, o); }

    /// Grassmann product with Koszul signs; repeated odd generators annihilate the term.
    friend GradedPoly gmul(const GradedPoly& a, const GradedPoly& b)
    {
        const ContextPtr& ctx = common_context(a, b);
        GradedPoly r(ctx);
        GradedMonomial m{Exponents(ctx->even_count()), 0};
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                if (ma.odd & mb.odd) continue;
                for (std::size_t i = 0; i < m.even.size(); ++i) m.even[i] = ma.even[i] + mb.even[i];
                m.odd = ma.odd | mb.odd;
                Rat c = ca * cb;
                if (detail::merge_sign(ma.odd, mb.odd) < 0) c = -c;
                r.add_term(m, c);
            }
        return r;
    }

    friend bool operator==(const GradedPoly& a, const GradedPoly& b)
    {
        if (a.terms_.empty() && b.terms_.empty()) return true;
        if (!same_context(a, b)) return false;
        return a.terms_ == b.terms_;
    }

    /// Ghost degree of one monomial.
    int ghost_degree(const GradedMonomial& m) const
    {
        int g = 0;
        for (std::size_t s = 0; s < m.even.size(); ++s) g += static_cast<int>(m.even[s]) * ctx_->coordinate(ctx_->even_coords()[s]).ghost;
        for (std::uint64_t bits = m.odd; bits; bits &= bits - 1)
            g += ctx_->coordinate(ctx_->odd_coords()[std::countr_zero(bits)]).ghost;
        return g;
    }

    static bool odd_parity(const GradedMonomial& m) { return std::popcount(m.odd) % 2 != 0; }

    /// Per-term ghost degrees (distinct, ascending).
    std::vector<int> ghost_degrees() const
    {
        std::vector<int> out;
        for (const auto& [m, c] : terms_) {
            int g = ghost_degree(m);
            if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::optional<int> homogeneous_ghost_degree() const
    {
        auto g = ghost_degrees();
        if (g.size() == 1) return g.front();
        return std::nullopt;
    }

    /// Total exponent of the given coordinate set in a monomial.
    std::uint32_t degree_in(const GradedMonomial& m, const std::vector<std::size_t>& coords) const
    {
        std::uint32_t d = 0;
        for (auto c : coords) {
            if (ctx_->coordinate(c).odd()) d += (m.odd >> ctx_->slot(c)) & 1u;
            else d += m.even[ctx_->slot(c)];
        }
        return d;
    }

    GradedPoly filter(const std::function<bool(const GradedMonomial&)>& keep) const
    {
        GradedPoly r(ctx_);
        for (const auto& [m, c] : terms_)
            if (keep(m)) r.terms_.emplace(m, c);
        return r;
    }

    std::string to_string() const
    {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
            const auto& [m, c] = *it;
            Rat mag = abs(c);
            os << (first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + "));
            first = false;
            bool unit = total_degree(m.even) == 0 && m.odd == 0;
            bool wrote = false;
            if (unit || mag != 1) {
                os << mag.get_str();
                wrote = true;
            }
            for (std::size_t s = 0; s < m.even.size(); ++s) {
                if (!m.even[s]) continue;
                if (wrote) os << '*';
                os << ctx_->coordinate(ctx_->even_coords()[s]).name;
                if (m.even[s] > 1) os << '^' << m.even[s];
                wrote = true;
            }
            for (std::uint64_t bits = m.odd; bits; bits &= bits - 1) {
                if (wrote) os << '*';
                os << ctx_->coordinate(ctx_->odd_coords()[std::countr_zero(bits)]).name;
                wrote = true;
            }
        }
        return os.str();
    }

    static const ContextPtr& common_context(const GradedPoly& a, const GradedPoly& b)
    {
        if (!a.ctx_ || !b.ctx_) throw std::invalid_argument("graded polynomial without context");
        if (!same_context(a, b)) throw std::invalid_argument("context mismatch");
        return a.ctx_;
    }

    static bool same_context(const GradedPoly& a, const GradedPoly& b)
    {
        return a.ctx_ == b.ctx_ || (a.ctx_ && b.ctx_ && *a.ctx_ == *b.ctx_);
    }

private:
    void require_ctx() const
    {
        if (!ctx_) throw std::invalid_argument("graded polynomial without context");
    }
    void adopt(const GradedPoly& o)
    {
        if (!ctx_) {
            ctx_ = o.ctx_;
            return;
        }
        common_context(*this, o);
    }

    ContextPtr ctx_;
    TermMap terms_;
};

/// Derivative with respect to one coordinate. For odd coordinates the left derivative brings
/// the generator to the front; the right derivative brings it to the back.
enum class Side { left, right };

inline GradedPoly derivative(const GradedPoly& f, std::size_t coord, Side side)
{
    const auto& ctx = f.context();
    if (coord >= ctx->size()) throw std::invalid_argument("unknown coordinate");
    GradedPoly r(ctx);
    std::size_t s = ctx->slot(coord);
    if (!ctx->coordinate(coord).odd()) {
        for (const auto& [m, c] : f.terms()) {
            if (!m.even[s]) continue;
            GradedMonomial d = m;
            --d.even[s];
            r.add_term(d, c * m.even[s]);
        }
        return r;
    }
    std::uint64_t bit = std::uint64_t{1} << s;
    for (const auto& [m, c] : f.terms()) {
        if (!(m.odd & bit)) continue;
        int passed = side == Side::left ? std::popcount(m.odd & (bit - 1)) : std::popcount(m.odd & ~((bit << 1) - 1));
        GradedMonomial d = m;
        d.odd &= ~bit;
        r.add_term(d, passed % 2 ? -c : c);
    }
    return r;
}

inline GradedPoly left_deriv(const GradedPoly& f, std::size_t coord) { return derivative(f, coord, Side::left); }
inline GradedPoly right_deriv(const GradedPoly& f, std::size_t coord) { return derivative(f, coord, Side::right); }

inline GradedPoly left_deriv(const GradedPoly& f, const std::string& name)
{
    auto i = f.context()->index_of(name);
    if (i == GradedContext::npos) throw std::invalid_argument("unknown coordinate '" + name + "'");
    return left_deriv(f, i);
}

/// Embeds a polynomial in `positions.size()` variables, variable k becoming coordinate positions[k].
inline GradedPoly embed(const EvenPoly& p, const ContextPtr& ctx, const std::vector<std::size_t>& positions)
{
    if (p.nvars() != positions.size()) throw std::invalid_argument("embedding arity mismatch");
    GradedPoly r(ctx);
    for (auto pos : positions)
        if (ctx->coordinate(pos).odd()) throw std::invalid_argument("cannot embed into an odd coordinate");
    for (const auto& [e, c] : p.terms()) {
        GradedMonomial m{Exponents(ctx->even_count(), 0), 0};
        for (std::size_t k = 0; k < positions.size(); ++k) m.even[ctx->slot(positions[k])] += e[k];
        r.add_term(m, c);
    }
    return r;
}

/// Reads back an even polynomial in the given coordinates; throws if other coordinates occur.
inline EvenPoly restrict_to(const GradedPoly& f, const std::vector<std::size_t>& positions)
{
    const auto& ctx = f.context();
    EvenPoly r(positions.size());
    for (const auto& [m, c] : f.terms()) {
        if (m.odd) throw std::invalid_argument("odd generator in a pure even polynomial");
        Exponents e(positions.size(), 0);
        Exponents rest = m.even;
        for (std::size_t k = 0; k < positions.size(); ++k) {
            e[k] = rest[ctx->slot(positions[k])];
            rest[ctx->slot(positions[k])] = 0;
        }
        if (total_degree(rest)) throw std::invalid_argument("polynomial depends on unexpected coordinates");
        r.add_term(e, c);
    }
    return r;
}

/// Substitutes every coordinate of f's context by a polynomial in `target`.
inline GradedPoly substitute(const GradedPoly& f, const std::vector<GradedPoly>& images, const ContextPtr& target)
{
    const auto& ctx = f.context();
    if (images.size() != ctx->size()) throw std::invalid_argument("substitution arity mismatch");
    GradedPoly r(target);
    std::map<std::pair<std::size_t, std::uint32_t>, GradedPoly> powers;
    auto power = [&](std::size_t coord, std::uint32_t k) -> const GradedPoly& {
        auto key = std::make_pair(coord, k);
        auto it = powers.find(key);
        if (it != powers.end()) return it->second;
        GradedPoly p(target, Rat(1));
        for (std::uint32_t i = 0; i < k; ++i) p = p * images[coord];
        return powers.emplace(key, std::move(p)).first->second;
    };
    for (const auto& [m, c] : f.terms()) {
        GradedPoly t(target, c);
        for (std::size_t s = 0; s < m.even.size(); ++s)
            if (m.even[s]) t = t * power(ctx->even_coords()[s], m.even[s]);
        for (std::uint64_t bits = m.odd; bits; bits &= bits - 1)
            t = t * images[ctx->odd_coords()[std::countr_zero(bits)]];
        r += t;
    }
    return r;
}

/// Moves f into another context by coordinate name; every coordinate used by f must exist there.
inline GradedPoly rebase(const GradedPoly& f, const ContextPtr& target)
{
    const auto& ctx = f.context();
    std::vector<GradedPoly> images;
    images.reserve(ctx->size());
    for (const auto& c : ctx->coordinates()) {
        auto j = target->index_of(c.name);
        if (j == GradedContext::npos) {
            images.emplace_back(target);  // unused coordinates may be absent
            continue;
        }
        if (target->coordinate(j).ghost != c.ghost)
            throw std::invalid_argument("ghost degree mismatch for '" + c.name + "'");
        images.push_back(GradedPoly::generator(target, j));
    }
    for (const auto& [m, coef] : f.terms()) {
        for (std::size_t s = 0; s < m.even.size(); ++s)
            if (m.even[s] && target->index_of(ctx->coordinate(ctx->even_coords()[s]).name) == GradedContext::npos)
                throw std::invalid_argument("coordinate missing in target context");
        for (std::uint64_t bits = m.odd; bits; bits &= bits - 1)
            if (target->index_of(ctx->coordinate(ctx->odd_coords()[std::countr_zero(bits)]).name) == GradedContext::npos)
                throw std::invalid_argument("coordinate missing in target context");
    }
    return substitute(f, images, target);
}

/// Parses an expression over all coordinates of the context using Grassmann multiplication.
inline GradedPoly parse_graded(std::string_view text, const ContextPtr& ctx)
{
    detail::ExprParser<GradedPoly> parser(
        text, [&ctx](const Rat& c) { return GradedPoly(ctx, c); },
        [&ctx](const std::string& name) -> std::optional<GradedPoly> {
            auto i = ctx->index_of(name);
            if (i == GradedContext::npos) return std::nullopt;
            return GradedPoly::generator(ctx, i);
        });
    return parser.parse();
}

} // namespace nqbfv

#endif
