#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fraclayer/cli.hpp"
#include "fraclayer/errors.hpp"

using namespace fraclayer;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("fraclayer_test_cli_" + name);
    fs::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("layer config with defaults echoed") {
    const auto c = parse_config("[layer]\ns = 0.7\ngamma = 0.3\n");
    CHECK(c.subcommand == "layer");
    CHECK(c.real("s") == 0.7);
    CHECK(c.real("gamma") == 0.3);
    CHECK(c.integer("sign") == -1);
    CHECK(c.text("potential") == "quartic");
    CHECK(c.real("tol_pg") == 1e-6);
    CHECK(c.echo().contains("L0"));
    CHECK_FALSE(c.echo().contains("workers"));
    CHECK_FALSE(c.params.contains("eps"));
}

TEST_CASE("range errors name the key and the interval") {
    try {
        parse_config("[layer]\ns = 1.2\n");
        FAIL("expected RangeError");
    } catch (const RangeError& e) {
        CHECK(std::string(e.what()).find("s must lie in (0,1)") != std::string::npos);
    }
    CHECK_NOTHROW(parse_config("[m-eps]\nkappa = 0.6\nomega = -1, 1\n"));
    try {
        parse_config("[m-eps]\nkappa = 1.0\n");
        FAIL("expected RangeError");
    } catch (const RangeError& e) {
        CHECK(std::string(e.what()).find("kappa must lie in [0,1)") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("[layer]\ngamma = 1.5\n"), RangeError);
    CHECK_THROWS_AS(parse_config("[layer]\nsign = 0\n"), RangeError);
    CHECK_THROWS_AS(parse_config("[sweep-half]\ns_list = 0.51, 0.6\n"), RangeError);
    CHECK_THROWS_AS(parse_config("[counterexample]\ns = 0.6\n"), RangeError);
    CHECK_THROWS_AS(parse_config("[layer]\npotential = sextic_unknown\n"), RangeError);
}

TEST_CASE("parse errors carry line numbers") {
    auto msg = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ParseError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(msg("[layer]\ns = 0.7\nbogus = 1\n").find("line 3") != std::string::npos);
    CHECK(msg("[layer]\ns = 0.7\nbogus = 1\n").find("unknown key 'bogus'") != std::string::npos);
    CHECK(msg("# c\n\ns = 0.7\n").find("line 3") != std::string::npos);
    CHECK(msg("[nope]\n").find("unknown subcommand") != std::string::npos);
    CHECK(msg("[layer]\ns 0.7\n").find("line 2") != std::string::npos);
    CHECK(msg("[layer]\ns = 0.7\ns = 0.8\n").find("duplicate") != std::string::npos);
    CHECK(msg("[layer]\ns = abc\n").find("line 2") != std::string::npos);
    CHECK(msg("[layer]\neps = 0.1\n").find("unknown key 'eps'") != std::string::npos);
    CHECK(msg("").find("missing [subcommand]") != std::string::npos);
}

TEST_CASE("overrides and the worker environment variable") {
    const auto c = parse_config("[psi]\ns = 0.75 # trailing comment\n", {"gamma=0.25", "s=0.6"});
    CHECK(c.real("s") == 0.6);
    CHECK(c.real("gamma") == 0.25);
    CHECK_THROWS_AS(parse_config("[psi]\n", {"nokey=1"}), ParseError);
    setenv("FRACLAYER_WORKERS", "3", 1);
    CHECK(parse_config("[validate]\nworkers = 1\n").integer("workers") == 3);
    unsetenv("FRACLAYER_WORKERS");
    CHECK(parse_config("[validate]\nworkers = 2\n").integer("workers") == 2);
}

TEST_CASE("datum forms") {
    CHECK(parse_datum("0.3")(5.0) == 0.3);
    CHECK(parse_datum("sign")(-2.0) == -1.0);
    CHECK(parse_datum("sign")(2.0) == 1.0);
    const auto sh = parse_datum("sign(x-0.3)");
    CHECK(sh(0.29) == -1.0);
    CHECK(sh(0.31) == 1.0);
    CHECK(parse_datum("sign(x + 0.5)")(-0.49) == 1.0);
    CHECK_THROWS_AS(parse_datum("tanh(x)"), ParseError);
}

TEST_CASE("non-finite numbers serialize as null and reports round-trip") {
    nlohmann::json j{{"a", 1.0 / 3.0}, {"b", std::numeric_limits<double>::infinity()}, {"c", {0.1, -2e-300}}};
    const auto f = finite_json(j);
    CHECK(f["b"].is_null());
    CHECK(nlohmann::json::parse(f.dump()) == f);
    CHECK(nlohmann::json::parse(f.dump())["a"].get<double>() == 1.0 / 3.0);
}

TEST_CASE("boundary value at the well exits 3 with GammaAtWell") {
    const auto d = scratch("gamma");
    const auto c = parse_config("[layer]\ngamma = 1.0\nout = " + d.string() + "\n");
    CHECK(run(c) == 3);
    const auto e = nlohmann::json::parse(slurp(d / "error.json"));
    CHECK(e["error"] == "GammaAtWell");
}

TEST_CASE("iteration budget exhausted exits 2") {
    const auto d = scratch("budget");
    const auto c = parse_config("[layer]\nmax_iters = 3\ntol_pg = 1e-30\nL0 = 20\nL_max = 20\nout = " + d.string() + "\n");
    CHECK(run(c) == 2);
    CHECK(nlohmann::json::parse(slurp(d / "error.json"))["error"] == "NotConverged");
    CHECK(fs::exists(d / "profile.csv"));
}

TEST_CASE("counterexample run emits a round-tripping report") {
    const auto d = scratch("cx");
    CHECK(run(parse_config("[counterexample]\ns = 0.25\nout = " + d.string() + "\n")) == 0);
    const std::string text = slurp(d / "report.json");
    const auto rep = nlohmann::json::parse(text);
    CHECK(rep["result"]["sigma_c"].get<double>() > 0.0);
    CHECK(nlohmann::json::parse(rep.dump(1)) == rep);
    CHECK(rep.dump(1) + "\n" == text);
    CHECK(slurp(d / "ladder.csv").rfind("eps,m_eps,m_eps_over_eps\n", 0) == 0);
    CHECK_FALSE(fs::exists(d / "error.json"));
}

TEST_CASE("heteroclinic run writes profile and trace") {
    const auto d = scratch("het");
    CHECK(run(parse_config("[heteroclinic]\ns = 0.75\nout = " + d.string() + "\n")) == 0);
    CHECK(slurp(d / "profile.csv").rfind("x,value\n", 0) == 0);
    CHECK(slurp(d / "trace.csv").rfind("iter,energy,pgnorm\n", 0) == 0);
    const auto rep = nlohmann::json::parse(slurp(d / "report.json"));
    CHECK(rep["result"]["converged"] == true);
    CHECK(rep["potential"] == "quartic");
    CHECK(rep["tolerances"]["tol_pg"] == 1e-6);
}

TEST_CASE("validate passes and is byte-identical across worker counts") {
    const auto d1 = scratch("v1"), d4 = scratch("v4");
    CHECK(run(parse_config("[validate]\nworkers = 1\nout = " + d1.string() + "\n")) == 0);
    CHECK(run(parse_config("[validate]\nworkers = 4\nout = " + d4.string() + "\n")) == 0);
    const std::string a = slurp(d1 / "report.json"), b = slurp(d4 / "report.json");
    CHECK(a.size() > 100);
    // the out path is echoed; everything else must match byte for byte
    auto strip = [](std::string s, const std::string& path) {
        for (auto p = s.find(path); p != std::string::npos; p = s.find(path)) s.erase(p, path.size());
        return s;
    };
    CHECK(strip(a, d1.string()) == strip(b, d4.string()));
    CHECK(nlohmann::json::parse(a)["result"]["passed"] == true);
}
