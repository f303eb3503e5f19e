#ifndef NQBFV_LINALG_HPP
#define NQBFV_LINALG_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "nqbfv/rational.hpp"

namespace nqbfv {

/// Sparse rational row vector, column index -> nonzero entry.
using SparseVec = std::map<std::size_t, Rat>;

inline void axpy(SparseVec& y, const Rat& a, const SparseVec& x)
{
    for (const auto& [c, v] : x) {
        auto [it, inserted] = y.try_emplace(c, a * v);
        if (!inserted) {
            it->second += a * v;
            if (it->second == 0) y.erase(it);
        }
    }
}

/// Row echelon form built one row at a time. Pivot rows are normalised to leading entry 1 and
/// their leading column is the smallest column present, so the leftmost columns become pivots.
/// In reduced mode every pivot column is cleared from all other rows.
class Echelon {
public:
    explicit Echelon(bool reduced = true) : reduced_(reduced) {}

    /// Returns true if the row was independent of the rows added so far.
    bool add(SparseVec v)
    {
        reduce(v);
        if (v.empty()) return false;
        auto lead = v.begin()->first;
        Rat inv = 1 / v.begin()->second;
        for (auto& [c, x] : v) x *= inv;
        if (reduced_) {
            for (auto& [pc, row] : rows_) {
                auto it = row.find(lead);
                if (it != row.end()) {
                    Rat f = -it->second;
                    axpy(row, f, v);
                }
            }
        }
        rows_.emplace(lead, std::move(v));
        return true;
    }

    /// Reduces v modulo the current row space.
    void reduce(SparseVec& v) const
    {
        auto it = v.begin();
        while (it != v.end()) {
            auto p = rows_.find(it->first);
            if (p == rows_.end()) {
                ++it;
                continue;
            }
            std::size_t col = it->first;
            Rat f = -it->second;
            axpy(v, f, p->second);
            it = v.upper_bound(col);
        }
    }

    bool contains(SparseVec v) const
    {
        reduce(v);
        return v.empty();
    }

    std::size_t rank() const { return rows_.size(); }
    const std::map<std::size_t, SparseVec>& rows() const { return rows_; }
    bool is_pivot(std::size_t col) const { return rows_.count(col) != 0; }

private:
    bool reduced_;
    std::map<std::size_t, SparseVec> rows_;
};

inline std::size_t rank(const std::vector<SparseVec>& rows)
{
    Echelon e(false);
    for (const auto& r : rows) e.add(r);
    return e.rank();
}

/// Basis of {x : A x = 0} for A given by rows over `ncols` columns; one vector per free column,
/// in increasing free-column order.
inline std::vector<SparseVec> nullspace(const std::vector<SparseVec>& rows, std::size_t ncols)
{
    Echelon e(true);
    for (const auto& r : rows) e.add(r);
    std::vector<SparseVec> basis;
    for (std::size_t f = 0; f < ncols; ++f) {
        if (e.is_pivot(f)) continue;
        SparseVec v;
        v[f] = 1;
        for (const auto& [pc, row] : e.rows()) {
            auto it = row.find(f);
            if (it != row.end()) v[pc] = -it->second;
        }
        basis.push_back(std::move(v));
    }
    return basis;
}

struct SolveResult {
    std::optional<SparseVec> solution;  // particular solution, free columns set to zero
    std::size_t rank = 0;                // rank of A
    std::size_t augmented_rank = 0;      // rank of [A | b]; exceeds rank exactly when infeasible
    std::size_t nullity = 0;             // dimension of the solution space when feasible
};

/// Solves A x = b exactly. Lower column indices are preferred as pivots, so callers order the
/// unknowns they want the particular solution to use first.
inline SolveResult solve(const std::vector<SparseVec>& rows, const std::vector<Rat>& rhs, std::size_t ncols)
{
    Echelon e(true);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        SparseVec r = rows[i];
        if (i < rhs.size() && rhs[i] != 0) r[ncols] = rhs[i];
        e.add(std::move(r));
    }
    SolveResult res;
    res.augmented_rank = e.rank();
    res.rank = e.rank() - (e.is_pivot(ncols) ? 1 : 0);
    if (e.is_pivot(ncols)) return res;
    res.nullity = ncols - res.rank;
    SparseVec x;
    for (const auto& [pc, row] : e.rows()) {
        auto it = row.find(ncols);
        if (it != row.end()) x[pc] = it->second;
    }
    res.solution = std::move(x);
    return res;
}

} // namespace nqbfv

#endif
