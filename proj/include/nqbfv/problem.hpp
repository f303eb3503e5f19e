#ifndef NQBFV_PROBLEM_HPP
#define NQBFV_PROBLEM_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nqbfv/algebroid.hpp"
#include "nqbfv/dynamics.hpp"
#include "nqbfv/parser.hpp"
#include "nqbfv/report.hpp"

namespace nqbfv {

using ordered_json = nlohmann::ordered_json;

/// Input error with the JSON path of the offending field, e.g. "anchor[1][0]".
class ProblemError : public std::runtime_error {
public:
    ProblemError(std::string field, const std::string& msg) : std::runtime_error(field + ": " + msg), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct Truncation {
    std::optional<int> x_degree, p_degree, slack;
};

struct Problem {
    std::string name;
    AlgebroidData data;
    GeometryPack pack;
    std::vector<std::vector<Rat>> points;
    Truncation truncation;
    std::optional<std::uint64_t> seed;
};

namespace detail {

inline std::string expr_text(const nlohmann::json& j, const std::string& path)
{
    if (j.is_string()) return j.get<std::string>();
    if (j.is_number_integer()) return std::to_string(j.get<long long>());
    throw ProblemError(path, "expected an expression string or integer");
}

inline EvenPoly expr(const nlohmann::json& j, const std::string& path, const std::vector<std::string>& coords)
{
    try {
        return parse_poly(expr_text(j, path), coords);
    } catch (const ParseError& e) {
        throw ProblemError(path, e.what());
    }
}

inline const nlohmann::json& array_of(const nlohmann::json& j, std::size_t n, const std::string& path)
{
    if (!j.is_array()) throw ProblemError(path, "expected an array");
    if (j.size() != n) throw ProblemError(path, "expected " + std::to_string(n) + " entries, got " + std::to_string(j.size()));
    return j;
}

inline std::vector<EvenPoly> vec(const nlohmann::json& j, std::size_t n, const std::string& path,
                                 const std::vector<std::string>& coords)
{
    array_of(j, n, path);
    std::vector<EvenPoly> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(expr(j[i], path + "[" + std::to_string(i) + "]", coords));
    return v;
}

inline Matrix<EvenPoly> mat(const nlohmann::json& j, std::size_t rows, std::size_t cols, const std::string& path,
                            const std::vector<std::string>& coords)
{
    array_of(j, rows, path);
    Matrix<EvenPoly> m;
    for (std::size_t i = 0; i < rows; ++i) m.push_back(vec(j[i], cols, path + "[" + std::to_string(i) + "]", coords));
    return m;
}

inline Tensor3 tensor(const nlohmann::json& j, std::size_t a, std::size_t b, std::size_t c, const std::string& path,
                      const std::vector<std::string>& coords)
{
    array_of(j, a, path);
    Tensor3 t;
    for (std::size_t i = 0; i < a; ++i) t.push_back(mat(j[i], b, c, path + "[" + std::to_string(i) + "]", coords));
    return t;
}

inline Rat rational(const nlohmann::json& j, const std::string& path)
{
    try {
        if (j.is_number_integer()) return Rat(j.get<long>());
        if (j.is_string()) {
            Rat q(j.get<std::string>());
            q.canonicalize();
            return q;
        }
    } catch (const std::exception&) {
    }
    throw ProblemError(path, "expected a rational number (integer or \"p/q\")");
}

inline int non_negative(const nlohmann::json& j, const std::string& path)
{
    if (!j.is_number_integer() || j.get<long long>() < 0) throw ProblemError(path, "expected a non-negative integer");
    return j.get<int>();
}

/// Sparse structure constants {"c,a,b": expr} (1-based), completed antisymmetrically.
inline Tensor3 sparse_structure(const nlohmann::json& j, std::size_t r, std::size_t n, const std::vector<std::string>& coords)
{
    Tensor3 C = zero_tensor3(r, r, r, n);
    std::vector<std::vector<std::vector<std::string>>> seen(r, std::vector<std::vector<std::string>>(r, std::vector<std::string>(r)));
    static const std::regex key_re(R"(^\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*$)");
    for (const auto& [key, val] : j.items()) {
        std::string path = "structure[\"" + key + "\"]";
        std::smatch m;
        if (!std::regex_match(key, m, key_re)) throw ProblemError(path, "key must be \"c,a,b\" with 1-based indices");
        std::size_t c = std::stoul(m[1]), a = std::stoul(m[2]), b = std::stoul(m[3]);
        if (c < 1 || a < 1 || b < 1 || c > r || a > r || b > r) throw ProblemError(path, "index out of range 1.." + std::to_string(r));
        --c, --a, --b;
        EvenPoly e = expr(val, path, coords);
        if (a == b) {
            if (!e.is_zero()) throw ProblemError(path, "diagonal entry must vanish (antisymmetry)");
            continue;
        }
        if (!seen[c][b][a].empty()) {
            if (!(C[c][b][a] == -e))
                throw ProblemError(path, "inconsistent with antisymmetric entry \"" + seen[c][b][a] + "\"");
        } else if (!seen[c][a][b].empty()) {
            throw ProblemError(path, "duplicate entry");
        }
        C[c][a][b] = e;
        C[c][b][a] = -e;
        seen[c][a][b] = key;
    }
    return C;
}

inline void check_names(const std::vector<std::string>& coords)
{
    static const std::regex reserved(R"(^(xi|p|pi|lambda)\d+$|^theta$)");
    static const std::regex ident(R"(^[A-Za-z_][A-Za-z0-9_]*$)");
    for (std::size_t i = 0; i < coords.size(); ++i) {
        std::string path = "coords[" + std::to_string(i) + "]";
        if (!std::regex_match(coords[i], ident)) throw ProblemError(path, "not an identifier: '" + coords[i] + "'");
        if (std::regex_match(coords[i], reserved))
            throw ProblemError(path, "'" + coords[i] + "' is reserved for generated phase-space coordinates");
    }
}

} // namespace detail

/// Parses and validates a problem description.
inline Problem load_problem(const nlohmann::json& j)
{
    using namespace detail;
    if (!j.is_object()) throw ProblemError("(root)", "expected a JSON object");
    static const std::vector<std::string> known{"name", "base_dim", "rank", "coords", "anchor", "structure", "metric_inv",
                                                "metric", "connection", "tau", "alpha", "potential", "beta", "magnetic",
                                                "points", "truncation", "seed"};
    for (const auto& [k, v] : j.items())
        if (std::find(known.begin(), known.end(), k) == known.end()) throw ProblemError(k, "unknown field");
    for (const char* req : {"base_dim", "rank", "coords", "anchor"})
        if (!j.contains(req)) throw ProblemError(req, "missing required field");
    Problem P;
    if (j.contains("name")) {
        if (!j["name"].is_string()) throw ProblemError("name", "expected a string");
        P.name = j["name"].get<std::string>();
    }
    std::size_t n = non_negative(j["base_dim"], "base_dim");
    std::size_t r = non_negative(j["rank"], "rank");
    if (!j["coords"].is_array()) throw ProblemError("coords", "expected an array of names");
    std::vector<std::string> coords;
    for (std::size_t i = 0; i < j["coords"].size(); ++i) {
        if (!j["coords"][i].is_string()) throw ProblemError("coords[" + std::to_string(i) + "]", "expected a name");
        coords.push_back(j["coords"][i].get<std::string>());
    }
    if (coords.size() != n) throw ProblemError("coords", "base_dim is " + std::to_string(n) + " but " + std::to_string(coords.size()) + " names given");
    check_names(coords);
    auto rho = mat(j["anchor"], r, n, "anchor", coords);
    Tensor3 C = zero_tensor3(r, r, r, n);
    if (j.contains("structure")) {
        const auto& s = j["structure"];
        if (s.is_object()) C = sparse_structure(s, r, n, coords);
        else C = tensor(s, r, r, r, "structure", coords);
    }
    try {
        P.data = make_algebroid(coords, rho, C);
    } catch (const std::invalid_argument& e) {
        throw ProblemError("structure", e.what());
    }
    auto& pk = P.pack;
    if (j.contains("metric_inv")) pk.g_inv = mat(j["metric_inv"], n, n, "metric_inv", coords);
    if (j.contains("metric")) pk.g_low = mat(j["metric"], n, n, "metric", coords);
    if (j.contains("connection")) pk.omega = tensor(j["connection"], r, r, n, "connection", coords);
    if (j.contains("tau")) pk.tau = mat(j["tau"], r, r, "tau", coords);
    if (j.contains("alpha")) pk.alpha = vec(j["alpha"], r, "alpha", coords);
    if (j.contains("potential")) pk.V = expr(j["potential"], "potential", coords);
    if (j.contains("beta")) pk.beta = vec(j["beta"], n, "beta", coords);
    if (j.contains("magnetic")) {
        pk.B = mat(j["magnetic"], n, n, "magnetic", coords);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                if (!((*pk.B)[a][b] + (*pk.B)[b][a]).is_zero())
                    throw ProblemError("magnetic[" + std::to_string(a) + "][" + std::to_string(b) + "]", "magnetic field is not antisymmetric");
    }
    auto field_of = [](const std::string& msg) -> std::string {
        return msg.substr(0, msg.find(':'));
    };
    try {
        pk.validate(n, r);
    } catch (const std::invalid_argument& e) {
        throw ProblemError(field_of(e.what()), e.what());
    }
    if (j.contains("points")) {
        if (!j["points"].is_array()) throw ProblemError("points", "expected an array of points");
        for (std::size_t k = 0; k < j["points"].size(); ++k) {
            std::string path = "points[" + std::to_string(k) + "]";
            array_of(j["points"][k], n, path);
            std::vector<Rat> p;
            for (std::size_t i = 0; i < n; ++i) p.push_back(rational(j["points"][k][i], path + "[" + std::to_string(i) + "]"));
            P.points.push_back(std::move(p));
        }
    }
    if (j.contains("truncation")) {
        const auto& t = j["truncation"];
        if (!t.is_object()) throw ProblemError("truncation", "expected an object");
        for (const auto& [k, v] : t.items()) {
            std::string path = "truncation." + k;
            if (k == "x_degree") P.truncation.x_degree = non_negative(v, path);
            else if (k == "p_degree") P.truncation.p_degree = non_negative(v, path);
            else if (k == "slack") P.truncation.slack = non_negative(v, path);
            else throw ProblemError(path, "unknown field");
        }
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ProblemError("seed", "expected a non-negative integer");
        P.seed = j["seed"].get<std::uint64_t>();
    }
    return P;
}

inline Problem load_problem_text(const std::string& text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ProblemError("(file)", std::string("invalid JSON: ") + e.what());
    }
    return load_problem(j);
}

inline Problem load_problem_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ProblemError("(file)", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_problem_text(ss.str());
}

namespace detail {

inline ordered_json emit_vec(const std::vector<EvenPoly>& v, const std::vector<std::string>& names)
{
    ordered_json a = ordered_json::array();
    for (const auto& e : v) a.push_back(e.to_string(names));
    return a;
}

inline ordered_json emit_mat(const Matrix<EvenPoly>& m, const std::vector<std::string>& names)
{
    ordered_json a = ordered_json::array();
    for (const auto& row : m) a.push_back(emit_vec(row, names));
    return a;
}

inline ordered_json emit_tensor(const Tensor3& t, const std::vector<std::string>& names)
{
    ordered_json a = ordered_json::array();
    for (const auto& m : t) a.push_back(emit_mat(m, names));
    return a;
}

} // namespace detail

/// Problem as JSON with dense arrays; load_problem(emit_problem(p)) reproduces p.
inline ordered_json emit_problem(const Problem& P)
{
    using namespace detail;
    const auto& d = P.data;
    const auto& names = d.coords;
    ordered_json j;
    if (!P.name.empty()) j["name"] = P.name;
    j["base_dim"] = d.n();
    j["rank"] = d.r();
    j["coords"] = names;
    j["anchor"] = emit_mat(d.rho, names);
    j["structure"] = emit_tensor(d.C, names);
    const auto& pk = P.pack;
    if (pk.g_inv) j["metric_inv"] = emit_mat(*pk.g_inv, names);
    if (pk.g_low) j["metric"] = emit_mat(*pk.g_low, names);
    if (pk.omega) j["connection"] = emit_tensor(*pk.omega, names);
    if (pk.tau) j["tau"] = emit_mat(*pk.tau, names);
    if (pk.alpha) j["alpha"] = emit_vec(*pk.alpha, names);
    if (pk.V) j["potential"] = pk.V->to_string(names);
    if (pk.beta) j["beta"] = emit_vec(*pk.beta, names);
    if (pk.B) j["magnetic"] = emit_mat(*pk.B, names);
    if (!P.points.empty()) {
        ordered_json pts = ordered_json::array();
        for (const auto& p : P.points) {
            ordered_json q = ordered_json::array();
            for (const auto& x : p) q.push_back(x.get_str());
            pts.push_back(q);
        }
        j["points"] = pts;
    }
    const auto& t = P.truncation;
    if (t.x_degree || t.p_degree || t.slack) {
        ordered_json tj = ordered_json::object();
        if (t.x_degree) tj["x_degree"] = *t.x_degree;
        if (t.p_degree) tj["p_degree"] = *t.p_degree;
        if (t.slack) tj["slack"] = *t.slack;
        j["truncation"] = tj;
    }
    if (P.seed) j["seed"] = *P.seed;
    return j;
}

inline ordered_json report_json(const CheckReport& r)
{
    ordered_json j;
    j["check"] = r.name;
    j["status"] = to_string(r.status);
    j["identity"] = r.identity;
    ordered_json res = ordered_json::array();
    for (const auto& x : r.residuals) res.push_back({{"index", x.index}, {"polynomial", x.polynomial}});
    j["residuals"] = res;
    ordered_json facts = ordered_json::object();
    for (const auto& [k, v] : r.facts) facts[k] = v;
    j["facts"] = facts;
    j["notes"] = r.notes;
    return j;
}

} // namespace nqbfv

#endif
