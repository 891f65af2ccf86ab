#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fraclayer/errors.hpp"
#include "fraclayer/fracop.hpp"

using namespace fraclayer;

namespace {

GridFunction sample(const Grid1D& g, const std::function<double(double)>& f, double lt, double rt) {
    std::vector<double> v;
    for (double x : g.nodes) v.push_back(f(x));
    return GridFunction(g, v, TailModel::constant(lt), TailModel::constant(rt), Interp::linear, true);
}

// int_0^inf (2 tanh(x) - tanh(x+t) - tanh(x-t)) t^{-1-2s} dt; the piece
// [0, tau] uses the fourth-order Taylor expansion integrated exactly
double tanh_oracle(double x, double s) {
    const double T = std::tanh(x), S = 1 - T * T;
    const double d2 = -2 * T * S, d4 = 16 * T * S * S - 8 * T * T * T * S;
    const double tau = 1e-2;
    const double head = -d2 * std::pow(tau, 2 - 2 * s) / (2 - 2 * s) - d4 * std::pow(tau, 4 - 2 * s) / (12 * (4 - 2 * s));
    boost::math::quadrature::tanh_sinh<double> ts;
    auto integrand = [&](double t) {
        return (2 * std::tanh(x) - std::tanh(x + t) - std::tanh(x - t)) * std::pow(t, -1 - 2 * s);
    };
    return head + ts.integrate(integrand, tau, 1.0) +
           ts.integrate(integrand, 1.0, std::numeric_limits<double>::infinity());
}

}  // namespace

TEST_CASE("constants have zero fractional Laplacian") {
    const auto g = Grid1D::uniform(-5, 5, 101);
    for (double s : {0.25, 0.5, 0.75}) {
        const auto u = sample(g, [](double) { return 0.3; }, 0.3, 0.3);
        for (std::size_t k = 1; k + 1 < g.size(); ++k) CHECK(std::abs(frac_laplacian(u, k, s)) < 1e-12);
    }
}

TEST_CASE("identity function: odd cancellation at the centre of a symmetric window") {
    const auto g = Grid1D::uniform(-50, 50, 1001);
    for (double s : {0.3, 0.5, 0.75}) {
        const auto u = sample(g, [](double x) { return x; }, -50, 50);
        CHECK(std::abs(frac_laplacian_at(u, 0.0, s)) < 1e-6);
    }
}

TEST_CASE("s = 1/2 closed form for the Lorentzian") {
    // PV int (u(x)-u(y))/|x-y|^2 dy = pi (1 - x^2)/(1 + x^2)^2 for u = 1/(1+x^2)
    auto f = [](double x) { return 1.0 / (1.0 + x * x); };
    const double L = 400.0;
    const auto g = Grid1D::graded(-L, L, {0.0}, 0.005, 2.0, 0.02);
    const auto u = sample(g, f, f(-L), f(L));
    for (double x0 : {0.0, 0.5, 1.0, 2.0}) {
        const auto k = static_cast<std::size_t>(std::lower_bound(g.nodes.begin(), g.nodes.end(), x0 - 1e-3) -
                                                g.nodes.begin());
        const double x = g.nodes[k];
        const double exact = M_PI * (1 - x * x) / ((1 + x * x) * (1 + x * x));
        CHECK(frac_laplacian(u, k, 0.5) == doctest::Approx(exact).epsilon(2e-4));
    }
}

TEST_CASE("tanh profile against the symmetric-difference oracle") {
    const auto g = Grid1D::uniform(-40, 40, 16001);
    const auto u = sample(g, [](double x) { return std::tanh(x); }, -1, 1);
    for (double s : {0.3, 0.75}) {
        for (double x : {-1.5, -0.5, 0.0, 0.25, 1.0, 3.0}) {
            const double o = tanh_oracle(x, s);
            CHECK(frac_laplacian_at(u, x, s) == doctest::Approx(o).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("linearity on a shared grid") {
    const auto g = Grid1D::graded(-10, 10, {0.0}, 0.02, 0.5, 0.05);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<double> a, b, c;
    const double al = 0.7, be = -1.3;
    for (std::size_t i = 0; i < g.size(); ++i) {
        a.push_back(U(rng));
        b.push_back(U(rng));
        c.push_back(al * a.back() + be * b.back());
    }
    const GridFunction ua(g, a, TailModel::constant(0.2), TailModel::constant(-0.4), Interp::linear, true);
    const GridFunction ub(g, b, TailModel::constant(0.5), TailModel::constant(0.1), Interp::linear, true);
    const GridFunction uc(g, c, TailModel::constant(al * 0.2 + be * 0.5), TailModel::constant(al * -0.4 + be * 0.1),
                          Interp::linear, true);
    for (double s : {0.3, 0.5, 0.8})
        for (std::size_t k = 2; k + 2 < g.size(); k += 7) {
            const double lhs = frac_laplacian(uc, k, s);
            const double rhs = al * frac_laplacian(ua, k, s) + be * frac_laplacian(ub, k, s);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
        }
}

TEST_CASE("plateau sign test for a non-decreasing profile") {
    // plateau on [-1, 1]; a, b inside it with a < b
    auto f = [](double x) { return x < -1 ? std::tanh(x + 1) : (x > 1 ? std::tanh(x - 1) : 0.0); };
    const auto g = Grid1D::uniform(-30, 30, 6001);
    const auto u = sample(g, f, -1, 1);
    for (double s : {0.3, 0.5, 0.75}) {
        const double da = frac_laplacian_at(u, -0.5, s), db = frac_laplacian_at(u, 0.5, s);
        CHECK(da - db >= 0.0);
        // antisymmetric profile: the two values are negatives of each other
        CHECK(da == doctest::Approx(-db).epsilon(1e-8));
    }
}

TEST_CASE("pde_residual reports") {
    const auto g = Grid1D::uniform(-10, 10, 201);
    const auto W = make_quartic();
    const auto u = sample(g, [](double) { return -1.0; }, -1, -1);
    const auto r = pde_residual(u, 0.7, W, middle_half(g));
    CHECK(r.sup_norm < 1e-12);
    CHECK(r.interior_window.lo == doctest::Approx(-5.0));
    CHECK(r.interior_window.hi == doctest::Approx(5.0));
    for (double x : r.nodes) CHECK((x > -5.0 && x < 5.0));

    std::mt19937 rng(3);
    std::uniform_real_distribution<double> U(-1, 1);
    std::vector<double> v;
    for (std::size_t i = 0; i < g.size(); ++i) v.push_back(U(rng));
    const GridFunction noisy(g, v, TailModel::constant(-1), TailModel::constant(1));
    CHECK(pde_residual(noisy, 0.7, W, middle_half(g)).sup_norm > 10.0);
}

TEST_CASE("off-node evaluation is rejected") {
    const auto g = Grid1D::uniform(-1, 1, 11);
    const auto u = sample(g, [](double x) { return x; }, -1, 1);
    CHECK_THROWS_AS(frac_laplacian_at(u, 0.05, 0.5), PreconditionViolated);
}
