#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "fraclayer/errors.hpp"
#include "fraclayer/funcrep.hpp"

using namespace fraclayer;

TEST_CASE("eval: constant tail far away") {
    GridFunction u(Grid1D::uniform(-1, 1, 11), std::vector<double>(11, 0.3), TailModel::constant(0.3),
                   TailModel::constant(0.3));
    CHECK(eval(u, 1e6) == doctest::Approx(0.3));
}

TEST_CASE("eval: linear interpolation") {
    GridFunction u(Grid1D::uniform(0, 1, 3), {0.0, 0.5, 1.0}, TailModel::constant(0), TailModel::constant(1));
    CHECK(eval(u, 0.25) == doctest::Approx(0.25));
}

TEST_CASE("eval: undefined tail") {
    GridFunction u(Grid1D::uniform(0, 1, 3), {0.0, 0.5, 1.0}, TailModel::none(), TailModel::constant(1));
    CHECK_THROWS_AS(eval(u, -1.0), UndefinedTail);
}

TEST_CASE("values are clamped unless unconstrained") {
    GridFunction u(Grid1D::uniform(0, 1, 3), {-2.0, 0.0, 3.0}, TailModel::constant(-1), TailModel::constant(1));
    CHECK(u.values.front() == -1.0);
    CHECK(u.values.back() == 1.0);
    GridFunction v(Grid1D::uniform(0, 1, 3), {-2.0, 0.0, 3.0}, TailModel::constant(-1), TailModel::constant(1),
                   Interp::linear, true);
    CHECK(v.values.back() == 3.0);
}

TEST_CASE("grid invariants") {
    Grid1D g;
    g.nodes = {0.0, 1.0};
    CHECK_THROWS_AS(g.validate(), PreconditionViolated);
    g.nodes = {0.0, 1.0, 1.0};
    CHECK_THROWS_AS(g.validate(), PreconditionViolated);
}

TEST_CASE("graded grid clusters toward the focus") {
    const auto g = Grid1D::graded(-10, 0, {0.0}, 0.01, 1.0, 0.1);
    const auto& x = g.nodes;
    CHECK(x.back() == 0.0);
    CHECK(x[x.size() - 1] - x[x.size() - 2] < 0.02);
    CHECK(x[1] - x[0] > 0.5);
}

TEST_CASE("rescale: identity, definition, composition") {
    std::vector<double> v;
    for (double x : Grid1D::uniform(-2, 2, 41).nodes) v.push_back(std::tanh(x));
    GridFunction u(Grid1D::uniform(-2, 2, 41), v, TailModel::constant(-1), TailModel::constant(1));
    const auto u1 = rescale(u, 1.0);
    CHECK(u1.grid.nodes == u.grid.nodes);
    const auto u2 = rescale(u, 2.0);
    CHECK(eval(u2, 0.5) == doctest::Approx(eval(u, 1.0)).epsilon(1e-14));
    const auto a = rescale(rescale(u, 2.0), 3.0), b = rescale(u, 6.0);
    for (std::size_t i = 0; i < a.grid.size(); ++i) CHECK(std::abs(a.grid.nodes[i] - b.grid.nodes[i]) < 1e-12);
}

TEST_CASE("phase_to_function") {
    BinaryPhase E{{-1, 1}, {0.0}, -1};
    auto sgn = [](double x) { return x > 0 ? 1.0 : -1.0; };
    const auto u = phase_to_function(E, TailModel::from_datum(sgn, 0), TailModel::from_datum(sgn, 0));
    CHECK(eval(u, -0.5) == -1.0);
    CHECK(eval(u, 0.5) == 1.0);
    CHECK(eval(u, 3.0) == 1.0);
    BinaryPhase none{{-1, 1}, {}, 1};
    CHECK(none.perimeter() == 0);
    const auto c = phase_to_function(none, TailModel::constant(1), TailModel::constant(1));
    for (double v : c.values) CHECK(v == 1.0);
    BinaryPhase two{{-1, 1}, {-0.5, 0.5}, 1};
    CHECK(two.perimeter() == 2);
    BinaryPhase bad{{-1, 1}, {1.5}, 1};
    CHECK_THROWS_AS(phase_to_function(bad, TailModel::constant(1), TailModel::constant(1)), JumpOutsideDomain);
}

TEST_CASE("signed distance") {
    BinaryPhase E{{-1, 1}, {0.0}, -1};
    CHECK(signed_distance(E, 0.3) == doctest::Approx(0.3));
    CHECK(signed_distance(E, -0.2) == doctest::Approx(-0.2));
    CHECK(signed_distance(E, 0.0) == 0.0);
    BinaryPhase F{{-3, 3}, {-1.0, 0.5, 2.0}, 1};
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-3, 3);
    for (int i = 0; i < 200; ++i) {
        const double a = U(rng), b = U(rng);
        CHECK(std::abs(signed_distance(F, a) - signed_distance(F, b)) <= std::abs(a - b) + 1e-15);
    }
}

TEST_CASE("profile round trip") {
    std::vector<double> v;
    const auto g = Grid1D::uniform(-1, 0, 11);
    for (double x : g.nodes) v.push_back(std::sin(x));
    GridFunction u(g, v, TailModel::constant(-1), TailModel::constant(0.2));
    const auto path = (std::filesystem::temp_directory_path() / "fraclayer_rt.csv").string();
    write_profile(path, u, {{"pin", "u(0)=0"}});
    const auto r = read_profile(path);
    CHECK(r.values == u.values);
    CHECK(r.grid.nodes == u.grid.nodes);
    CHECK(r.right_tail.value == 0.2);
}
