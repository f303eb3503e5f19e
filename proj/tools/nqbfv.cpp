// nqbfv: command-line front end for the algebroid / BFV checks.
//
// exit codes: 0 all requested checks pass, 1 a check fails (or a prerequisite, or the query
// has a negative answer), 2 bad input or usage.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>

#include "nqbfv/nqbfv.hpp"

namespace {

using namespace nqbfv;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

bool colour = false;

std::string tag(Status s)
{
    static const char* codes[] = {"\033[32m", "\033[31m", "\033[33m"};
    std::string t = s == Status::pass ? "PASS" : s == Status::fail ? "FAIL" : "WARN";
    if (!colour) return t;
    return codes[int(s)] + t + "\033[0m";
}

void print_report(const CheckReport& r, std::optional<double> ms = {})
{
    std::cout << tag(r.status) << "  " << r.name;
    if (ms) std::cout << "  [" << std::fixed << std::setprecision(1) << *ms << " ms]" << std::defaultfloat;
    std::cout << "\n      " << r.identity << "\n";
    for (const auto& x : r.residuals) std::cout << "      " << x.index << " = " << x.polynomial << "\n";
    for (const auto& [k, v] : r.facts) std::cout << "      " << k << ": " << v << "\n";
    for (const auto& n : r.notes) std::cout << "      note: " << n << "\n";
}

void write_json(const std::string& path, const ordered_json& j)
{
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

ordered_json header(const Problem& P, const std::string& command)
{
    ordered_json j;
    j["problem"] = P.name;
    j["command"] = command;
    return j;
}

/// The BFV side has no momentum-linear term; a beta in the input is absorbed first.
GeometryPack bfv_pack(const Problem& P)
{
    if (!P.pack.beta) return P.pack;
    if (!P.pack.g_low) throw ProblemError("beta", "the BFV checks need 'metric' to absorb the momentum-linear term");
    return absorb_beta(P.data, P.pack);
}

void beta_note(const Problem& P, CheckReport& r)
{
    if (P.pack.beta) r.notes.push_back("beta absorbed: p shifted by g beta, twist and alpha adjusted");
}

ordered_json oneform_json(const EForm& w, const AlgebroidData& d)
{
    ordered_json a = ordered_json::array();
    for (std::size_t k = 0; k < d.r(); ++k) a.push_back(w.component({k}, d.n()).to_string(d.coords));
    return a;
}

std::string oneform_text(const EForm& w, const AlgebroidData& d)
{
    std::string s = "(";
    for (std::size_t k = 0; k < d.r(); ++k) s += (k ? ", " : "") + w.component({k}, d.n()).to_string(d.coords);
    return s + ")";
}

// ---------------------------------------------------------------- check

struct CheckSpec {
    std::string flag, name;
    std::function<std::string(const Problem&)> missing;  // empty when runnable
    std::function<CheckReport(const Problem&, std::uint64_t)> run;
};

std::string needs(bool ok, const char* what) { return ok ? "" : std::string("needs '") + what + "'"; }

std::vector<CheckSpec> check_table()
{
    auto none = [](const Problem&) { return std::string(); };
    auto beta_ok = [](const Problem& P) { return needs(!P.pack.beta || P.pack.g_low.has_value(), "metric"); };
    return {
        {"axioms", "axioms", none, [](const Problem& P, std::uint64_t) { return check_axioms(P.data); }},
        {"first-class", "first_class", none,
         [](const Problem& P, std::uint64_t) {
             auto cs = build_constraints(P.data, P.pack.alpha, P.pack.B);
             return check_first_class(cs, P.data, P.pack.alpha);
         }},
        {"irreducible", "irreducible", none,
         [](const Problem& P, std::uint64_t seed) { return irreducibility_probe(P.data, P.points, seed); }},
        {"metric", "metric", [](const Problem& P) { return needs(P.pack.g_low.has_value(), "metric"); },
         [](const Problem& P, std::uint64_t) { return check_metric_compat(P.data, P.pack); }},
        {"structural", "structural", [](const Problem& P) { return needs(P.pack.g_low.has_value(), "metric"); },
         [](const Problem& P, std::uint64_t) { return check_structural(P.data, P.pack); }},
        {"evolution", "evolution", [](const Problem& P) { return needs(P.pack.g_inv.has_value(), "metric_inv"); },
         [](const Problem& P, std::uint64_t) {
             auto cs = build_constraints(P.data, P.pack.alpha, P.pack.B);
             return check_evolution_invariance(build_hamiltonian(P.pack, cs.space), cs, P.data, P.pack);
         }},
        {"master", "master", beta_ok,
         [](const Problem& P, std::uint64_t) {
             auto pk = bfv_pack(P);
             auto ps = P.data.phase_space(pk.B);
             auto r = check_master(build_S(P.data, ps, pk.alpha), ps);
             beta_note(P, r);
             return r;
         }},
        {"cartan", "cartan",
         [](const Problem& P) {
             auto m = needs(P.pack.g_inv.has_value(), "metric_inv");
             return m.empty() ? needs(P.pack.g_low.has_value(), "metric") : m;
         },
         [](const Problem& P, std::uint64_t) {
             auto r = check_cartan(P.data, bfv_pack(P)).report;
             if (!check_axioms(P.data).passed()) r.notes.push_back("the algebroid axioms fail: (S,S) != 0 as well");
             return r;
         }},
        {"supercharge", "supercharge", beta_ok,
         [](const Problem& P, std::uint64_t) {
             auto [bfv, rep] = assemble_bfv(P.data, bfv_pack(P));
             auto r = check_supercharge(build_supercharge(bfv));
             if (!bfv.H) r.notes.push_back("topological: H absent, Q = S");
             beta_note(P, r);
             return r;
         }},
    };
}

int cmd_check(const Problem& P, const std::vector<std::string>& selected, bool all, std::optional<std::uint64_t> seed_override,
              const std::string& json_path)
{
    auto table = check_table();
    std::uint64_t seed = seed_override ? *seed_override : P.seed ? *P.seed : default_probe_seed;
    if (!all && selected.empty()) throw InputError("no checks selected (use --all or one of the check flags)");
    std::vector<const CheckSpec*> runs;
    ordered_json skipped = ordered_json::array();
    for (const auto& c : table) {
        bool want = all || std::find(selected.begin(), selected.end(), c.flag) != selected.end();
        if (!want) continue;
        auto why = c.missing(P);
        if (why.empty()) {
            runs.push_back(&c);
        } else if (all) {
            skipped.push_back({{"check", c.name}, {"reason", why}});
        } else {
            throw InputError("--" + c.flag + " " + why);
        }
    }
    std::cout << "problem " << (P.name.empty() ? "(unnamed)" : P.name) << ": base_dim " << P.data.n() << ", rank "
              << P.data.r() << "\n";
    ordered_json checks = ordered_json::array();
    Status overall = Status::pass;
    for (const auto* c : runs) {
        auto t0 = std::chrono::steady_clock::now();
        auto rep = c->run(P, seed);
        double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        print_report(rep, ms);
        checks.push_back(report_json(rep));
        if (rep.status == Status::fail) overall = Status::fail;
    }
    for (const auto& s : skipped)
        std::cout << "SKIP  " << s["check"].get<std::string>() << " (" << s["reason"].get<std::string>() << ")\n";
    if (!json_path.empty()) {
        auto j = header(P, "check");
        j["seed"] = seed;
        j["status"] = to_string(overall);
        j["checks"] = checks;
        j["skipped"] = skipped;
        write_json(json_path, j);
    }
    return overall == Status::fail ? 1 : 0;
}

// ---------------------------------------------------------------- cohomology

struct CohomologyArgs {
    int degree = 1;
    std::optional<int> trunc, slack, p_degree;
    bool bfv_h0 = false, is_exact = false;
    std::string json;
};

int cmd_cohomology(const Problem& P, const CohomologyArgs& a)
{
    if (a.degree != 1) throw InputError("--degree: only degree 1 is supported");
    if (a.bfv_h0 && a.is_exact) throw InputError("--bfv-h0 and --is-exact are exclusive");
    const auto& d = P.data;
    auto ax = check_axioms(d);
    if (!ax.passed()) {
        std::cout << "prerequisite failed\n";
        print_report(ax);
        if (!a.json.empty()) {
            auto j = header(P, "cohomology");
            j["status"] = "prerequisite_failed";
            j["prerequisite"] = report_json(ax);
            write_json(a.json, j);
        }
        return 1;
    }
    int slack = a.slack ? *a.slack : P.truncation.slack ? *P.truncation.slack : 1;
    auto j = header(P, "cohomology");

    if (a.is_exact) {
        if (!P.pack.alpha) throw InputError("--is-exact needs 'alpha'");
        auto ex = is_exact(d, one_form(*P.pack.alpha), slack);
        std::string verdict;
        if (!ex.closed) verdict = "not closed, E-d alpha = " + to_graded(ex.d_alpha, d.phase_space()).to_string();
        else if (ex.exact) verdict = "exact, primitive f = " + ex.primitive->to_string(d.coords);
        else verdict = "closed, not exact with primitives of degree <= " + std::to_string(ex.search_degree);
        std::cout << verdict << "\n";
        j["query"] = "is_exact";
        j["alpha"] = detail::emit_vec(*P.pack.alpha, d.coords);
        j["closed"] = ex.closed;
        j["exact"] = ex.exact;
        j["search_degree"] = ex.search_degree;
        j["primitive"] = ex.primitive ? ordered_json(ex.primitive->to_string(d.coords)) : ordered_json(nullptr);
        j["verdict"] = verdict;
        if (!a.json.empty()) write_json(a.json, j);
        return ex.exact ? 0 : 1;
    }

    int N;
    if (a.trunc) N = *a.trunc;
    else if (P.truncation.x_degree) N = *P.truncation.x_degree;
    else throw InputError("--trunc not given and the problem has no truncation.x_degree");

    if (a.bfv_h0) {
        int Pd = a.p_degree ? *a.p_degree : P.truncation.p_degree ? *P.truncation.p_degree : 1;
        auto [bfv, rep] = assemble_bfv(d, bfv_pack(P));
        auto master = check_master(bfv.S, bfv.space);
        if (!master.passed()) {
            std::cout << "prerequisite failed\n";
            print_report(master);
            return 1;
        }
        auto h = bfv_h0(bfv, N, Pd);
        std::cout << "truncated BFV H^0 (x-degree <= " << N << ", p-degree <= " << Pd << ")\n"
                  << "  window " << h.window_dim << ", cocycles " << h.cocycle_dim << ", coboundaries "
                  << h.coboundary_dim << "\n  h0 = " << h.h0_dim << "\n";
        for (const auto& c : h.caveats) std::cout << "  caveat: " << c << "\n";
        j["query"] = "bfv_h0";
        j["x_degree"] = N;
        j["p_degree"] = Pd;
        j["window_dim"] = h.window_dim;
        j["cocycle_dim"] = h.cocycle_dim;
        j["coboundary_dim"] = h.coboundary_dim;
        j["h0_dim"] = h.h0_dim;
        j["caveats"] = h.caveats;
        if (!a.json.empty()) write_json(a.json, j);
        return 0;
    }

    auto h = cohomology_h1(d, N, slack);
    std::cout << "truncated H^1 (1-forms of x-degree <= " << N << ", slack " << slack << ")\n"
              << "  window " << h.window_dim << ", closed " << h.closed_dim << ", exact " << h.exact_dim
              << "\n  h1 = " << h.h1_dim << "\n";
    for (const auto& w : h.representatives) std::cout << "  representative " << oneform_text(w, d) << "\n";
    for (const auto& c : h.caveats) std::cout << "  caveat: " << c << "\n";
    j["query"] = "h1";
    j["degree"] = 1;
    j["x_degree"] = N;
    j["slack"] = slack;
    j["window_dim"] = h.window_dim;
    j["closed_dim"] = h.closed_dim;
    j["exact_dim"] = h.exact_dim;
    j["h1_dim"] = h.h1_dim;
    j["filtration_preserved"] = h.filtration_preserved;
    ordered_json reps = ordered_json::array();
    for (const auto& w : h.representatives) reps.push_back(oneform_json(w, d));
    j["representatives"] = reps;
    j["caveats"] = h.caveats;
    if (!a.json.empty()) write_json(a.json, j);
    return 0;
}

// ---------------------------------------------------------------- emit

ordered_json context_json(const ContextPtr& ctx)
{
    ordered_json a = ordered_json::array();
    for (std::size_t i = 0; i < ctx->size(); ++i) {
        const auto& c = ctx->coordinate(i);
        a.push_back({{"name", c.name}, {"ghost", c.ghost}, {"parity", c.odd() ? "odd" : "even"}});
    }
    return a;
}

/// One record per monomial in the non-coordinate fields; the coordinate dependence goes into
/// the coefficient polynomial.
ordered_json term_records(const ComponentAction& ca, const AlgebroidData& d, std::vector<std::string>& text)
{
    const auto& ctx = ca.context;
    std::size_t n = d.n();
    std::map<std::string, const ComponentField*> by_name;
    for (const auto& f : ca.fields) by_name[f.name] = &f;
    std::map<GradedMonomial, EvenPoly, GradedMonomialLess> groups;
    std::map<GradedMonomial, GradedPoly, GradedMonomialLess> whole;
    std::vector<GradedMonomial> order;
    for (const auto& [m, c] : ca.density.terms()) {
        GradedMonomial key = m;
        Exponents e(n, 0);
        for (std::size_t s = 0; s < m.even.size(); ++s) {
            std::size_t coord = ctx->even_coords()[s];
            if (coord < n) {
                e[coord] = m.even[s];
                key.even[s] = 0;
            }
        }
        auto [it, fresh] = groups.try_emplace(key, EvenPoly(n));
        if (fresh) order.push_back(key);
        it->second += EvenPoly::monomial(e, c);
        whole.try_emplace(key, ctx).first->second.add_term(m, c);
    }
    ordered_json out = ordered_json::array();
    for (const auto& key : order) {
        ordered_json factors = ordered_json::array();
        std::vector<std::string> derivs;
        auto add = [&](std::size_t coord, std::uint32_t power) {
            const auto& f = *by_name.at(ctx->coordinate(coord).name);
            factors.push_back({{"field", f.name}, {"ghost", f.ghost}, {"parity", f.odd ? "odd" : "even"}, {"power", power}});
            if (f.derivative) derivs.push_back(f.partner_of);
        };
        std::vector<std::pair<std::size_t, std::uint32_t>> fs;
        for (std::size_t s = 0; s < key.even.size(); ++s)
            if (key.even[s]) fs.emplace_back(ctx->even_coords()[s], key.even[s]);
        for (std::uint64_t bits = key.odd; bits; bits &= bits - 1) fs.emplace_back(ctx->odd_coords()[std::countr_zero(bits)], 1);
        for (const auto& [coord, pw] : fs) add(coord, pw);
        const auto& coef = groups.at(key);
        std::string t = whole.at(key).to_string();
        text.push_back(t);
        out.push_back({{"coefficient", coef.to_string(d.coords)},
                       {"fields", factors},
                       {"derivative_of", derivs.empty() ? ordered_json(nullptr) : ordered_json(derivs.front())},
                       {"term", t}});
    }
    return out;
}

int cmd_emit(const Problem& P, const std::string& what, const std::string& out_path, bool force)
{
    auto [bfv, rep] = assemble_bfv(P.data, bfv_pack(P));
    beta_note(P, rep);
    auto j = header(P, "emit");
    j["what"] = what;
    std::vector<CheckReport> pre{rep};
    std::optional<SuperCharge> sq;
    if (what == "bv") {
        sq = build_supercharge(bfv);
        pre.push_back(check_supercharge(*sq));
    }
    bool ok = true;
    ordered_json pj = ordered_json::array();
    for (const auto& r : pre) {
        ok = ok && r.status != Status::fail;
        pj.push_back(report_json(r));
    }
    if (!ok && !force) {
        std::cout << "prerequisites failed (use --force to emit anyway)\n";
        for (const auto& r : pre) print_report(r);
        return 1;
    }
    j["forced"] = !ok;
    j["prerequisites"] = pj;
    if (!ok) std::cout << "WARNING: prerequisites failed, output forced\n";

    if (what == "bfv") {
        j["context"] = context_json(bfv.space.context());
        const auto& B = bfv.space.twist_matrix();
        j["twist"] = B ? detail::emit_mat(*B, P.data.coords) : ordered_json(nullptr);
        j["S"] = bfv.S.to_string();
        if (bfv.H) j["H"] = bfv.H->to_string();
        j["topological"] = !bfv.H;
        std::cout << "S_BFV = " << bfv.S.to_string() << "\n";
        if (bfv.H) std::cout << "H_BFV = " << bfv.H->to_string() << "\n";
        else std::cout << "H_BFV absent (topological)\n";
    } else {
        auto ca = expand_bv(*sq);
        auto book = check_bookkeeping(ca);
        ordered_json fields = ordered_json::array();
        for (const auto& f : ca.fields) {
            ordered_json fj{{"name", f.name}, {"ghost", f.ghost}, {"parity", f.odd ? "odd" : "even"}};
            fj["partner_of"] = f.partner_of.empty() || f.derivative ? ordered_json(nullptr) : ordered_json(f.partner_of);
            fj["derivative_of"] = f.derivative ? ordered_json(f.partner_of) : ordered_json(nullptr);
            fields.push_back(fj);
        }
        std::vector<std::string> text;
        j["fields"] = fields;
        j["terms"] = term_records(ca, P.data, text);
        j["density"] = ca.density.to_string();
        j["ghost_zero"] = ghost_zero_truncation(ca).to_string();
        j["bookkeeping"] = report_json(book);
        std::cout << "S_BV = integral dt of\n";
        for (const auto& t : text) std::cout << "    " << t << "\n";
        std::cout << "ghost-zero part: " << ghost_zero_truncation(ca).to_string() << "\n";
        print_report(book);
    }
    if (!out_path.empty()) write_json(out_path, j);
    return 0;
}

// ---------------------------------------------------------------- solve-connection

int cmd_solve_connection(const Problem& P, int D, const std::string& write_path, const std::string& json_path)
{
    if (!P.pack.g_low) throw InputError("solve-connection needs 'metric'");
    auto s = solve_connection(P.data, P.pack, D);
    auto j = header(P, "solve-connection");
    j["degree"] = D;
    j["feasible"] = s.feasible;
    j["unknowns"] = s.unknowns;
    j["rank"] = s.rank;
    j["augmented_rank"] = s.augmented_rank;
    j["solution_dim"] = s.solution_dim;
    j["connection"] = s.omega ? detail::emit_tensor(*s.omega, P.data.coords) : ordered_json(nullptr);
    j["verification"] = s.verification ? report_json(*s.verification) : ordered_json(nullptr);
    if (s.feasible) {
        std::cout << "metric-compatible connection of x-degree <= " << D << " found (" << s.solution_dim
                  << "-dimensional affine family)\n";
        const auto& om = *s.omega;
        for (std::size_t b = 0; b < om.size(); ++b)
            for (std::size_t a = 0; a < om[b].size(); ++a)
                for (std::size_t i = 0; i < om[b][a].size(); ++i)
                    if (!om[b][a][i].is_zero())
                        std::cout << "  omega^" << b + 1 << "_" << a + 1 << "," << i + 1 << " = "
                                  << om[b][a][i].to_string(P.data.coords) << "\n";
        if (s.verification) print_report(*s.verification);
    } else {
        std::cout << "infeasible: no connection of x-degree <= " << D << "\n  certificate: augmented rank "
                  << s.augmented_rank << " > rank " << s.rank << " over " << s.unknowns << " unknowns\n";
    }
    if (!json_path.empty()) write_json(json_path, j);
    if (s.feasible && !write_path.empty()) {
        Problem Q = P;
        Q.pack.omega = *s.omega;
        write_json(write_path, emit_problem(Q));
    }
    return s.feasible ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    colour = isatty(STDOUT_FILENO) && !std::getenv("NO_COLOR");

    CLI::App app{"Exact checks for Lie algebroids, first-class constraints and BFV/BV data"};
    app.require_subcommand(1);

    std::string file;
    auto add_file = [&](CLI::App* sub) { sub->add_option("FILE", file, "problem JSON")->required(); };

    auto* check = app.add_subcommand("check", "run identity checks");
    add_file(check);
    std::map<std::string, bool> flags;
    for (const auto& c : check_table()) flags[c.flag] = false;
    for (const auto& c : check_table()) check->add_flag("--" + c.flag, flags[c.flag], "run the " + c.name + " check");
    bool all = false;
    std::string json_path;
    std::optional<std::uint64_t> seed;
    check->add_flag("--all", all, "run every check the input supports");
    check->add_option("--json", json_path, "write the full report here");
    check->add_option("--seed", seed, "seed for the random probe points");

    auto* coh = app.add_subcommand("cohomology", "truncated E-cohomology and BFV H^0");
    add_file(coh);
    CohomologyArgs ca;
    coh->add_option("--degree", ca.degree, "form degree (1)");
    coh->add_option("--trunc", ca.trunc, "x-degree truncation")->check(CLI::NonNegativeNumber);
    coh->add_option("--slack", ca.slack, "extra degree for primitives")->check(CLI::NonNegativeNumber);
    coh->add_flag("--bfv-h0", ca.bfv_h0, "ghost-0 cohomology of (S, .)");
    coh->add_option("--p-degree", ca.p_degree, "momentum truncation for --bfv-h0")->check(CLI::NonNegativeNumber);
    coh->add_flag("--is-exact", ca.is_exact, "decide whether alpha is E-exact");
    coh->add_option("--json", ca.json, "write the result here");

    auto* emit = app.add_subcommand("emit", "write the BFV package or the BV action");
    add_file(emit);
    std::string what, out_path;
    bool force = false;
    emit->add_option("--what", what, "bfv or bv")->required()->check(CLI::IsMember({"bfv", "bv"}));
    emit->add_option("--out", out_path, "JSON output path");
    emit->add_flag("--force", force, "emit even if prerequisites fail");

    auto* solve = app.add_subcommand("solve-connection", "search for a metric-compatible connection");
    add_file(solve);
    int degree = 0;
    std::string write_path, solve_json;
    solve->add_option("--degree", degree, "x-degree of the ansatz")->required()->check(CLI::NonNegativeNumber);
    solve->add_option("--write", write_path, "write the problem with the connection filled in");
    solve->add_option("--json", solve_json, "write the result here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Problem P = load_problem_file(file);
        if (*check) {
            std::vector<std::string> sel;
            for (const auto& [k, v] : flags)
                if (v) sel.push_back(k);
            return cmd_check(P, sel, all, seed, json_path);
        }
        if (*coh) return cmd_cohomology(P, ca);
        if (*emit) return cmd_emit(P, what, out_path, force);
        if (*solve) return cmd_solve_connection(P, degree, write_path, solve_json);
    } catch (const ProblemError& e) {
        std::cerr << "error: " << file << ": " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
