#ifndef NQBFV_REPORT_HPP
#define NQBFV_REPORT_HPP

#include <string>
#include <utility>
#include <vector>

namespace nqbfv {

enum class Status { pass, fail, warn };

inline const char* to_string(Status s)
{
    switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::warn: return "warn";
    }
    return "?";
}

/// One nonzero residual: a label for the index tuple (1-based, e.g. "R1[1;2,3]") and the polynomial.
struct Residual {
    std::string index;
    std::string polynomial;
};

/// Outcome of one named check. Only nonzero residuals are stored, so a check with residuals
/// never passes; `warn` is used for diagnostics whose verdict is not a polynomial identity.
struct CheckReport {
    std::string name;
    Status status = Status::pass;
    std::string identity;  // the identity that was checked, in plain notation
    std::vector<Residual> residuals;
    std::vector<std::pair<std::string, std::string>> facts;  // extra key/value output
    std::vector<std::string> notes;

    bool passed() const { return status == Status::pass; }

    void add_residual(std::string index, std::string poly)
    {
        residuals.push_back({std::move(index), std::move(poly)});
        status = Status::fail;
    }
    void fail(std::string note)
    {
        notes.push_back(std::move(note));
        status = Status::fail;
    }
    void fact(std::string key, std::string value) { facts.emplace_back(std::move(key), std::move(value)); }

    /// Absorbs the residuals and notes of a sub-check, prefixing labels with its name.
    void merge(const CheckReport& sub)
    {
        for (const auto& r : sub.residuals) residuals.push_back({sub.name + ":" + r.index, r.polynomial});
        for (const auto& n : sub.notes) notes.push_back(sub.name + ": " + n);
        if (sub.status == Status::fail) status = Status::fail;
        else if (sub.status == Status::warn && status == Status::pass) status = Status::warn;
    }
};

inline std::string index_label(const std::string& family, const std::vector<std::size_t>& upper,
                               const std::vector<std::size_t>& lower)
{
    std::string s = family + "[";
    for (std::size_t k = 0; k < upper.size(); ++k) s += (k ? "," : "") + std::to_string(upper[k] + 1);
    if (!upper.empty() && !lower.empty()) s += ";";
    for (std::size_t k = 0; k < lower.size(); ++k) s += (k ? "," : "") + std::to_string(lower[k] + 1);
    return s + "]";
}

} // namespace nqbfv

#endif
