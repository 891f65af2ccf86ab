#include "fraclayer/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <sstream>

#include "fraclayer/energy.hpp"
#include "fraclayer/errors.hpp"
#include "fraclayer/expansion.hpp"
#include "fraclayer/parallel.hpp"
#include "fraclayer/potential.hpp"
#include "fraclayer/solvers.hpp"

namespace fraclayer {

using nlohmann::json;

namespace {

enum class Type { real, integer, text, list, interval, boolean };

struct KeySpec {
    Type type;
    std::vector<std::string> subs;  // empty: every subcommand
    std::map<std::string, std::string> defaults;  // per subcommand; "*" for all
};

const std::vector<std::string> kSubs{"heteroclinic", "layer",    "psi",        "m-eps",   "expansion",
                                     "counterexample", "recovery", "sweep-half", "validate"};
const std::vector<std::string> kLayerSubs{"heteroclinic", "layer", "psi", "expansion", "recovery", "sweep-half"};
const std::vector<std::string> kSolveSubs{"heteroclinic", "layer", "psi", "m-eps", "expansion", "recovery", "sweep-half"};
const std::vector<std::string> kEpsSubs{"m-eps", "expansion", "recovery"};

const std::map<std::string, KeySpec>& key_table() {
    static const std::map<std::string, KeySpec> t{
        {"s",
         {Type::real,
          {"heteroclinic", "layer", "psi", "m-eps", "expansion", "counterexample", "recovery"},
          {{"heteroclinic", "0.75"}, {"layer", "0.7"}, {"psi", "0.75"}, {"m-eps", "0.25"}, {"expansion", "0.25"},
           {"counterexample", "0.25"}, {"recovery", "0.75"}}}},
        {"gamma", {Type::real, {"layer", "psi", "sweep-half"}, {{"*", "0"}}}},
        {"sign", {Type::integer, {"layer", "psi", "sweep-half"}, {{"*", "-1"}}}},
        {"eps",
         {Type::list,
          {"m-eps", "expansion", "counterexample", "recovery"},
          {{"m-eps", "0.1"}, {"expansion", "0.1, 0.05, 0.025, 0.0125"}, {"counterexample", ""},
           {"recovery", "1e-3, 1e-4, 1e-5, 1e-6"}}}},
        {"omega", {Type::interval, kEpsSubs, {{"*", "-1, 1"}}}},
        {"g", {Type::text, kEpsSubs, {{"m-eps", "sign"}, {"expansion", "sign"}, {"recovery", "0.3"}}}},
        {"kappa", {Type::real, kEpsSubs, {{"m-eps", "0"}, {"expansion", "0"}, {"recovery", "0.2"}}}},
        {"jumps", {Type::list, {"recovery"}, {{"*", "0"}}}},
        {"left_sign", {Type::integer, {"recovery"}, {{"*", "-1"}}}},
        {"rho", {Type::real, {"recovery"}, {{"*", "0"}}}},
        {"check_minimality", {Type::boolean, {"recovery"}, {{"*", "true"}}}},
        {"max_jumps", {Type::integer, {"expansion"}, {{"*", "2"}}}},
        {"s_list", {Type::list, {"sweep-half"}, {{"*", "0.6, 0.55, 0.52, 0.51"}}}},
        {"potential", {Type::text, {}, {{"*", "quartic"}}}},
        {"L0", {Type::real, kLayerSubs, {{"*", "50"}}}},
        {"L_max", {Type::real, kLayerSubs, {{"*", "12800"}}}},
        {"h_min", {Type::real, kLayerSubs, {{"*", "0.05"}}}},
        {"growth", {Type::real, kLayerSubs, {{"*", "0.03"}}}},
        {"tail_tol", {Type::real, kLayerSubs, {{"*", "0.001"}}}},
        {"h_over_eps", {Type::real, kEpsSubs, {{"*", "0.1"}}}},
        {"h_max", {Type::real, kEpsSubs, {{"*", "0.02"}}}},
        {"tol_pg", {Type::real, kSolveSubs, {{"*", "1e-6"}}}},
        {"tol_energy", {Type::real, kSolveSubs, {{"*", "1e-10"}}}},
        {"max_iters", {Type::integer, kSolveSubs, {{"*", "40000"}}}},
        {"seed", {Type::integer, {"validate"}, {{"*", "20240601"}}}},
        {"out", {Type::text, {}, {{"*", "fraclayer_out"}}}},
        {"workers", {Type::integer, {}, {{"*", "1"}}}},
    };
    return t;
}

bool accepts(const KeySpec& k, const std::string& sub) {
    return k.subs.empty() || std::find(k.subs.begin(), k.subs.end(), sub) != k.subs.end();
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

double to_real(const std::string& key, const std::string& v, const std::string& where) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || trim(v.substr(pos)) != "" || !std::isfinite(x))
        throw ParseError(where + ": " + key + " expects a finite number, got '" + v + "'");
    return x;
}

json convert(const std::string& key, Type type, const std::string& raw, const std::string& where) {
    const std::string v = unquote(trim(raw));
    switch (type) {
        case Type::real:
            return to_real(key, v, where);
        case Type::integer: {
            const double x = to_real(key, v, where);
            if (x != std::floor(x) || std::abs(x) > 1e9)
                throw ParseError(where + ": " + key + " expects an integer, got '" + v + "'");
            return static_cast<int>(x);
        }
        case Type::boolean:
            if (v == "true" || v == "1") return true;
            if (v == "false" || v == "0") return false;
            throw ParseError(where + ": " + key + " expects true or false, got '" + v + "'");
        case Type::text:
            return v;
        case Type::list:
        case Type::interval: {
            json arr = json::array();
            std::string body = v;
            if (!body.empty() && (body.front() == '(' || body.front() == '[')) body = body.substr(1);
            if (!body.empty() && (body.back() == ')' || body.back() == ']')) body.pop_back();
            std::stringstream ss(body);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (trim(item).empty()) continue;
                arr.push_back(to_real(key, trim(item), where));
            }
            if (type == Type::interval && arr.size() != 2)
                throw ParseError(where + ": " + key + " expects 'lo, hi', got '" + v + "'");
            return arr;
        }
    }
    return nullptr;
}

void range(bool ok, const std::string& key, const std::string& interval) {
    if (!ok) throw RangeError(key + " must lie in " + interval);
}

void validate_ranges(const RunConfig& c) {
    const auto& p = c.params;
    const std::string& sub = c.subcommand;
    if (p.contains("s")) {
        const double s = p["s"];
        range(s > 0.0 && s < 1.0, "s", "(0,1)");
        if (sub == "counterexample") range(s < 0.5, "s", "(0,1/2) for counterexample");
        if (sub == "recovery") range(s >= 0.5, "s", "[1/2,1) for recovery");
    }
    if (p.contains("gamma")) {
        const double g = p["gamma"];
        // the wells themselves pass so the solver reports GammaAtWell
        range(g >= -1.0 && g <= 1.0, "gamma", "[-1,1]");
    }
    for (const char* k : {"sign", "left_sign"})
        if (p.contains(k)) {
            const int v = p[k];
            range(v == -1 || v == 1, k, "{-1, 1}");
        }
    if (p.contains("eps")) {
        for (double e : p["eps"]) range(e > 0.0 && e < 1.0, "eps", "(0,1)");
        if (sub != "counterexample" && p["eps"].empty()) throw RangeError("eps must list at least one value");
    }
    if (p.contains("omega")) {
        const double lo = p["omega"][0], hi = p["omega"][1];
        range(lo < hi, "omega", "lo < hi");
        const double kappa = p["kappa"];
        range(kappa >= 0.0 && kappa < 0.5 * (hi - lo), "kappa", "[0," + fmt17(0.5 * (hi - lo)) + ")");
    }
    if (p.contains("jumps")) {
        const Interval om = c.interval("omega");
        for (double j : p["jumps"]) range(om.contains(j), "jumps", "(" + fmt17(om.lo) + "," + fmt17(om.hi) + ")");
    }
    if (p.contains("rho")) range(double(p["rho"]) >= 0.0, "rho", "[0,inf) (0 selects the default)");
    if (p.contains("max_jumps")) range(int(p["max_jumps"]) >= 0 && int(p["max_jumps"]) <= 8, "max_jumps", "[0,8]");
    if (p.contains("s_list")) {
        double prev = 1.0;
        for (double s : p["s_list"]) {
            range(s > 0.5 && s < prev, "s_list", "(1/2,1), strictly decreasing");
            prev = s;
        }
    }
    const auto names = potential_names();
    if (std::find(names.begin(), names.end(), std::string(p["potential"])) == names.end())
        throw RangeError("potential must be one of the registered wells");
    for (const char* k : {"L0", "L_max", "h_min", "growth", "tail_tol", "h_over_eps", "h_max", "tol_pg", "tol_energy"})
        if (p.contains(k)) range(double(p[k]) > 0.0, k, "(0,inf)");
    if (p.contains("L0")) range(double(p["L_max"]) >= double(p["L0"]), "L_max", "[L0,inf)");
    if (p.contains("max_iters")) range(int(p["max_iters"]) >= 1, "max_iters", "[1,inf)");
    range(int(p["workers"]) >= 1 && int(p["workers"]) <= 256, "workers", "[1,256]");
    if (std::string(p["out"]).empty()) throw RangeError("out must be a non-empty path");
    if (p.contains("g")) parse_datum(p["g"]);
}

// ------------------------------------------------------------------ output

struct Artifacts {
    std::filesystem::path dir;

    void json_file(const std::string& name, const json& j) const {
        std::ofstream f(dir / name);
        if (!f) throw PreconditionViolated("cannot write " + (dir / name).string());
        f << finite_json(j).dump(1) << '\n';
    }
    void csv(const std::string& name, const std::string& header, const std::vector<std::vector<double>>& rows) const {
        std::ofstream f(dir / name);
        if (!f) throw PreconditionViolated("cannot write " + (dir / name).string());
        f << header << '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << fmt17(r[i]);
            f << '\n';
        }
    }
};

SolveOptions solve_options(const RunConfig& c) {
    SolveOptions o;
    o.tol_pg = c.real("tol_pg");
    o.tol_energy = c.real("tol_energy");
    o.max_iters = c.integer("max_iters");
    return o;
}

LayerGridOptions layer_options(const RunConfig& c) {
    LayerGridOptions l;
    l.L0 = c.real("L0");
    l.L_max = c.real("L_max");
    l.h_min = c.real("h_min");
    l.growth = c.real("growth");
    l.tail_tol = c.real("tail_tol");
    return l;
}

MEpsGridOptions meps_options(const RunConfig& c) {
    MEpsGridOptions g;
    g.h_min_over_eps = c.real("h_over_eps");
    g.h_max = c.real("h_max");
    return g;
}

json header(const RunConfig& c) {
    json h{{"subcommand", c.subcommand}, {"config", c.echo()}, {"potential", c.text("potential")}};
    if (c.params.contains("tol_pg"))
        h["tolerances"] = {{"tol_pg", c.real("tol_pg")},
                           {"tol_energy", c.real("tol_energy")},
                           {"max_iters", c.integer("max_iters")}};
    return h;
}

void write_layer(const Artifacts& out, const LayerProfile& p) {
    write_profile((out.dir / "profile.csv").string(), p.profile, {{"normalization", p.normalization}});
    write_trace((out.dir / "trace.csv").string(), p.trace);
}

json meps_json(double eps, const MEpsResult& r) {
    json starts = json::array();
    for (const auto& st : r.starts)
        starts.push_back({{"name", st.name},
                          {"energy_F1", st.energy_F1},
                          {"sign_changes", st.sign_changes},
                          {"converged", st.converged},
                          {"iters", st.iters}});
    return {{"eps", eps},
            {"m_eps", r.value_E},
            {"m_eps_over_eps", r.value_F1},
            {"best_start", r.best_start},
            {"nodes", r.argmin.grid.size()},
            {"starts", starts}};
}

// m_eps over the configured ladder; ladder.csv, profile/trace of the last rung
std::vector<double> meps_ladder(const RunConfig& c, const DoubleWell& W, const Artifacts& out, json& rows) {
    const auto g = parse_datum(c.text("g"));
    std::vector<double> m;
    std::vector<std::vector<double>> csv;
    MEpsResult last;
    for (double eps : c.list("eps")) {
        last = solve_m_eps(c.real("s"), eps, c.interval("omega"), g, c.real("kappa"), W, solve_options(c),
                           meps_options(c));
        m.push_back(last.value_E);
        csv.push_back({eps, last.value_E, last.value_F1});
        rows.push_back(meps_json(eps, last));
    }
    out.csv("ladder.csv", "eps,m_eps,m_eps_over_eps", csv);
    write_profile((out.dir / "profile.csv").string(), last.argmin);
    write_trace((out.dir / "trace.csv").string(), last.trace);
    return m;
}

json run_validate(const RunConfig& c, const DoubleWell& W, bool& ok) {
    json checks = json::array();
    auto add = [&](const std::string& name, double residual, double tol) {
        const bool pass = residual < tol;
        ok = ok && pass;
        checks.push_back({{"check", name}, {"residual", residual}, {"tolerance", tol}, {"passed", pass}});
    };
    auto smooth = [](double L, std::size_t n) {
        const auto g = Grid1D::uniform(-L, L, n);
        std::vector<double> v;
        for (double x : g.nodes) v.push_back(0.999 * std::tanh(x));
        return GridFunction(g, v, TailModel::constant(v.front()), TailModel::constant(v.back()));
    };

    // energy difference on 20 random perturbation pairs supported in A n B
    std::mt19937_64 rng(static_cast<std::uint64_t>(c.integer("seed")));
    const auto v = smooth(3, 61);
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        const double s = 0.3 + 0.45 * static_cast<double>(rng() % 1000) / 1000.0;
        auto w = v;
        for (std::size_t i = 0; i < w.values.size(); ++i)
            if (w.grid.nodes[i] > -1.0 && w.grid.nodes[i] < 1.0) {
                const double du = 0.4 * (static_cast<double>(rng() % 100001) / 100000.0 - 0.5);
                w.values[i] = std::clamp(w.values[i] + du, -1.0, 1.0);
            }
        worst = std::max(worst, check_energy_difference(v, w, {-2, 1}, {-1, 2}, ScalingParams::make(s, 0.1), W));
    }
    add("energy_difference", worst, 1e-9);
    for (double s : {0.3, 0.5, 0.75}) {
        const auto p = ScalingParams::make(s, 0.1);
        const std::string tag = "s=" + fmt17(s);
        add("rho_scaling " + tag, std::max(check_rescaling(v, 2.0, p, {-1, 1}, W), check_rescaling(v, 0.1, p, {-1, 1}, W)),
            1e-6);
        add("g_rescale " + tag, check_g_rescale(v, p, {-0.2, 0.2}, W), 1e-6);
    }
    add("ln_limit a=1 b=2", ln_limit_residual(1, 2, 0.5 + 1e-6), 1e-4);
    add("ln_limit a=2 b=5", ln_limit_residual(2, 5, 0.5 + 1e-6), 1e-4);
    const auto wv = validate_double_well(W, 2001);
    for (const auto& wc : wv.checks) {
        ok = ok && wc.passed;
        checks.push_back({{"check", "well " + wc.condition}, {"worst", wc.worst}, {"passed", wc.passed}});
    }
    return checks;
}

void dispatch(const RunConfig& c, const Artifacts& out) {
    const DoubleWell W = make_potential(c.text("potential"));
    json rep = header(c);
    const std::string& sub = c.subcommand;

    if (sub == "heteroclinic") {
        const auto p = solve_heteroclinic_auto(c.real("s"), W, layer_options(c), solve_options(c));
        write_layer(out, p);
        rep["result"] = layer_json(p);
        out.json_file("report.json", rep);
        require_converged(p);
        return;
    }
    if (sub == "layer") {
        const auto p = solve_boundary_layer_auto(c.real("s"), c.real("gamma"), c.integer("sign"), W, layer_options(c),
                                                 solve_options(c));
        write_layer(out, p);
        rep["result"] = layer_json(p);
        out.json_file("report.json", rep);
        require_converged(p);
        return;
    }
    if (sub == "psi") {
        const auto r = compute_psi(c.real("s"), c.real("gamma"), c.integer("sign"), W, default_r_ladder(),
                                   layer_options(c), solve_options(c));
        write_layer(out, r.layer);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < r.r_ladder.size(); ++i)
            rows.push_back({r.r_ladder[i], r.psi1_r[i], r.psi2_r[i], r.potential_r[i], r.total_r[i]});
        out.csv("psi_ladder.csv", "r,psi1,psi2,potential,total", rows);
        rep["result"] = r.to_json();
        out.json_file("report.json", rep);
        return;
    }
    if (sub == "m-eps") {
        json rows = json::array();
        meps_ladder(c, W, out, rows);
        rep["result"] = {{"ladder", rows}};
        out.json_file("report.json", rep);
        return;
    }
    if (sub == "expansion") {
        const double s = c.real("s");
        const Interval om = c.interval("omega");
        const auto g = parse_datum(c.text("g"));
        json theory;
        double m1 = 0.0;
        if (s < 0.5) {
            const auto t = compute_m1_small_s(om, g, s, c.integer("max_jumps"));
            m1 = t.m1;
            theory = {{"m1", t.m1}, {"jumps", t.E.jumps}, {"left_sign", t.E.left_sign}};
        } else {
            const auto t = compute_m1_large_s(s, om, g(om.lo), g(om.hi), W, layer_options(c), solve_options(c));
            m1 = t.m1;
            theory = {{"m1", t.m1},
                      {"c_star", t.c_star},
                      {"perimeter", t.perimeter},
                      {"sign_left", t.sign_left},
                      {"sign_right", t.sign_right},
                      {"psi_left", t.psi_left},
                      {"psi_right", t.psi_right}};
        }
        json rows = json::array();
        const auto m = meps_ladder(c, W, out, rows);
        rep["result"] = {{"theory", theory}, {"ladder", rows}};
        out.json_file("report.json", rep);
        rep["result"]["fit"] = fit_expansion(c.list("eps"), m, s, m1).to_json();
        out.json_file("report.json", rep);
        return;
    }
    if (sub == "counterexample") {
        const auto r = run_counterexample(c.real("s"), c.list("eps"));
        std::vector<std::vector<double>> rows;
        for (const auto& row : r.rows) rows.push_back({row.eps, row.eps * row.F1, row.F1});
        out.csv("ladder.csv", "eps,m_eps,m_eps_over_eps", rows);
        rep["result"] = r.to_json();
        out.json_file("report.json", rep);
        return;
    }
    if (sub == "recovery") {
        const double s = c.real("s");
        const Interval om = c.interval("omega");
        const auto g = parse_datum(c.text("g"));
        const BinaryPhase E{om, c.list("jumps"), c.integer("left_sign")};
        E.validate();
        const auto lo = layer_options(c);
        const auto so = solve_options(c);
        const int sl = E.sign_at(om.lo), sr = E.sign_at(om.hi);
        const RecoveryLayers L{solve_heteroclinic_auto(s, W, lo, so), solve_boundary_layer_auto(s, g(om.lo), sl, W, lo, so),
                               solve_boundary_layer_auto(s, g(om.hi), sr, W, lo, so)};
        for (const auto* p : {&L.heteroclinic, &L.left, &L.right}) require_converged(*p);
        const double cs = compute_c_star(s, W, lo, so);
        const double psil = compute_psi(s, g(om.lo), sl, W, default_r_ladder(), lo, so).psi_limit;
        const double psir = compute_psi(s, g(om.hi), sr, W, default_r_ladder(), lo, so).psi_limit;
        const double limit = cs * E.perimeter() + psil + psir;
        json rows = json::array();
        std::vector<std::vector<double>> rec, ladder;
        GridFunction last;
        for (double eps : c.list("eps")) {
            const double rho = c.real("rho") > 0.0 ? c.real("rho") : default_rho(s, eps);
            double ratio = 0.0;
            last = build_recovery_sequence(s, eps, rho, E, g, L, &ratio);
            const double F1 = functional_F1(last, ScalingParams::make(s, eps), om, W);
            json row{{"eps", eps}, {"rho", rho}, {"scale_ratio", ratio}, {"scale_warning", ratio > 0.1},
                     {"F1_recovery", F1}, {"overshoot", (F1 - limit) / limit}};
            if (c.params["check_minimality"].get<bool>()) {
                const auto m = solve_m_eps(s, eps, om, g, c.real("kappa"), W, so, meps_options(c));
                row["m_eps_over_eps"] = m.value_F1;
                row["minimality"] = m.value_F1 <= F1 + 1e-9;
                ladder.push_back({eps, m.value_E, m.value_F1});
            }
            rec.push_back({eps, rho, ratio, F1, limit});
            rows.push_back(row);
        }
        out.csv("recovery.csv", "eps,rho,scale_ratio,F1_recovery,limit", rec);
        if (!ladder.empty()) out.csv("ladder.csv", "eps,m_eps,m_eps_over_eps", ladder);
        write_profile((out.dir / "profile.csv").string(), last);
        rep["result"] = {{"c_star", cs}, {"psi_left", psil}, {"psi_right", psir}, {"limit", limit}, {"ladder", rows}};
        out.json_file("report.json", rep);
        return;
    }
    if (sub == "sweep-half") {
        const auto r = sweep_s_to_half(c.real("gamma"), c.integer("sign"), W, c.list("s_list"), layer_options(c),
                                       solve_options(c));
        std::vector<std::vector<double>> rows;
        for (const auto& row : r.rows) rows.push_back({row.s, row.dist_prev, row.dist_half, row.decay_exponent});
        out.csv("sweep.csv", "s,dist_prev,dist_half,decay_exponent", rows);
        write_profile((out.dir / "profile.csv").string(), r.half.profile, {{"s", 0.5}});
        rep["result"] = r.to_json();
        out.json_file("report.json", rep);
        return;
    }
    if (sub == "validate") {
        bool ok = true;
        rep["result"] = {{"checks", run_validate(c, W, ok)}};
        rep["result"]["passed"] = ok;
        out.json_file("report.json", rep);
        if (!ok) throw ValidationFailed("identity suite failed; see report.json");
        return;
    }
    throw PreconditionViolated("unhandled subcommand " + sub);
}

}  // namespace

double RunConfig::real(const std::string& key) const { return params.at(key).get<double>(); }
int RunConfig::integer(const std::string& key) const { return params.at(key).get<int>(); }
std::string RunConfig::text(const std::string& key) const { return params.at(key).get<std::string>(); }
std::vector<double> RunConfig::list(const std::string& key) const {
    return params.at(key).get<std::vector<double>>();
}
Interval RunConfig::interval(const std::string& key) const {
    const auto& a = params.at(key);
    return Interval{a[0].get<double>(), a[1].get<double>()};
}

json RunConfig::echo() const {
    json e = params;
    e.erase("workers");
    return e;
}

std::vector<std::string> subcommands() { return kSubs; }

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
    RunConfig c;
    std::map<std::string, std::pair<std::string, std::string>> raw;  // key -> (value, location)
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        const std::string where = "line " + std::to_string(no);
        const auto hash = line.find('#');
        const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ParseError(where + ": malformed section header '" + t + "'");
            if (!c.subcommand.empty()) throw ParseError(where + ": a config holds exactly one [subcommand]");
            c.subcommand = trim(t.substr(1, t.size() - 2));
            if (std::find(kSubs.begin(), kSubs.end(), c.subcommand) == kSubs.end())
                throw ParseError(where + ": unknown subcommand '" + c.subcommand + "'");
            continue;
        }
        if (c.subcommand.empty()) throw ParseError(where + ": expected a [subcommand] header first");
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ParseError(where + ": empty key");
        if (raw.count(key)) throw ParseError(where + ": duplicate key '" + key + "'");
        raw[key] = {trim(t.substr(eq + 1)), where};
    }
    if (c.subcommand.empty()) throw ParseError("line " + std::to_string(no) + ": missing [subcommand] header");
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ParseError("--set " + o + ": expected key=value");
        raw[trim(o.substr(0, eq))] = {trim(o.substr(eq + 1)), "--set " + o};
    }
    const auto& table = key_table();
    for (const auto& [key, vw] : raw) {
        const auto it = table.find(key);
        if (it == table.end() || !accepts(it->second, c.subcommand))
            throw ParseError(vw.second + ": unknown key '" + key + "' for [" + c.subcommand + "]");
    }
    for (const auto& [key, spec] : table) {
        if (!accepts(spec, c.subcommand)) continue;
        if (auto r = raw.find(key); r != raw.end()) {
            c.params[key] = convert(key, spec.type, r->second.first, r->second.second);
            continue;
        }
        auto d = spec.defaults.find(c.subcommand);
        if (d == spec.defaults.end()) d = spec.defaults.find("*");
        c.params[key] = convert(key, spec.type, d->second, "default");
    }
    if (const char* w = std::getenv("FRACLAYER_WORKERS"))
        c.params["workers"] = convert("workers", Type::integer, w, "FRACLAYER_WORKERS");
    validate_ranges(c);
    return c;
}

std::function<double(double)> parse_datum(const std::string& spec) {
    const std::string t = trim(spec);
    if (t == "sign") return [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
    static const std::regex shifted(R"(sign\(\s*x\s*([+-])\s*([0-9.eE+-]+)\s*\))");
    std::smatch m;
    if (std::regex_match(t, m, shifted)) {
        const double a = to_real("g", m[2].str(), "g") * (m[1].str() == "-" ? 1.0 : -1.0);
        return [a](double x) { return x > a ? 1.0 : (x < a ? -1.0 : 0.0); };
    }
    const double v = to_real("g", t, "g");
    return [v](double) { return v; };
}

json finite_json(const json& j) {
    if (j.is_number_float() && !std::isfinite(j.get<double>())) return nullptr;
    if (j.is_array() || j.is_object()) {
        json r = j;
        for (auto& [k, v] : r.items()) v = finite_json(v);
        return r;
    }
    return j;
}

int run(const RunConfig& cfg) {
    const Artifacts out{cfg.text("out")};
    std::filesystem::create_directories(out.dir);
    set_workers(cfg.integer("workers"));
    auto fail = [&](const std::string& kind, const std::string& what, int code) {
        std::ofstream f(out.dir / "error.json");
        f << json{{"error", kind}, {"message", what}, {"exit_code", code}}.dump(1) << '\n';
        return code;
    };
    try {
        std::filesystem::remove(out.dir / "error.json");
        dispatch(cfg, out);
        return 0;
    } catch (const NotConverged& e) {
        return fail(e.kind(), e.what(), 2);
    } catch (const Error& e) {
        return fail(e.kind(), e.what(), 3);
    } catch (const std::exception& e) {
        return fail("InternalError", e.what(), 3);
    }
}

}  // namespace fraclayer
