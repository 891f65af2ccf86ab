// Acceptance gates 1-10: one PASS/FAIL line per criterion, exit 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fmt/format.h>

#include "fraclayer/energy.hpp"
#include "fraclayer/errors.hpp"
#include "fraclayer/expansion.hpp"
#include "fraclayer/fracop.hpp"
#include "fraclayer/solvers.hpp"

using namespace fraclayer;
namespace fs = std::filesystem;

namespace {

const DoubleWell W = make_quartic();

struct Gate {
    bool ok = true;
    std::vector<std::string> notes;

    void require(bool cond, const std::string& note) {
        ok = ok && cond;
        notes.push_back((cond ? "" : "!") + note);
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string e3(double v) { return fmt::format("{:.3e}", v); }

GridFunction tanh_function(double L, std::size_t n) {
    const auto g = Grid1D::uniform(-L, L, n);
    std::vector<double> v;
    for (double x : g.nodes) v.push_back(0.999 * std::tanh(x));
    return GridFunction(g, v, TailModel::constant(v.front()), TailModel::constant(v.back()));
}

// -1 left of -2, linear on (-2,-1), gamma from -1 on
GridFunction competitor(double gamma) {
    std::vector<double> x, v;
    for (int i = 0; i <= 40; ++i) x.push_back(-4.0 + 0.1 * i);
    x.back() = 0.0;
    for (double t : x) v.push_back(t <= -2 ? -1.0 : (t >= -1 ? gamma : (gamma + 1) * t + 2 * gamma + 1));
    Grid1D g;
    g.nodes = x;
    return GridFunction(g, v, TailModel::constant(-1), TailModel::constant(gamma));
}

Gate identity_suite() {
    Gate g;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-0.2, 0.2), S(0.2, 0.9);
    const auto v = tanh_function(3, 61);
    double worst = 0.0;
    for (int pair = 0; pair < 20; ++pair) {
        auto w = v;
        for (std::size_t i = 0; i < w.values.size(); ++i)
            if (w.grid.nodes[i] > -1.0 && w.grid.nodes[i] < 1.0) w.values[i] = std::clamp(w.values[i] + U(rng), -1.0, 1.0);
        worst = std::max(worst, check_energy_difference(v, w, {-2, 1}, {-1, 2}, ScalingParams::make(S(rng), 0.1), W));
    }
    g.require(worst < 1e-9, "energy difference " + e3(worst));
    double resc = 0.0;
    for (double s : {0.3, 0.5, 0.75}) {
        const auto p = ScalingParams::make(s, 0.1);
        resc = std::max({resc, check_rescaling(v, 2.0, p, {-1, 1}, W), check_rescaling(v, 0.1, p, {-1, 1}, W),
                         check_g_rescale(v, p, {-0.2, 0.2}, W)});
    }
    g.require(resc < 1e-6, "rescaling " + e3(resc));
    const double ln = std::max(ln_limit_residual(1, 2, 0.5 + 1e-6), ln_limit_residual(2, 5, 0.5 + 1e-6));
    g.require(ln < 1e-4, "ln limit " + e3(ln));
    return g;
}

Gate quadrature_oracle() {
    Gate g;
    boost::math::quadrature::tanh_sinh<double> ts;
    const double gamma = 0.0, c2 = (gamma + 1) * (gamma + 1);
    const auto h = competitor(gamma);
    auto envelope = [&](double s) {
        const double c = c2 / (2 * s);
        const double I1 = c * ts.integrate(
                                  [&](double x) {
                                      const double a = std::abs(x + 1);
                                      return a * a * (std::pow(a, -2 * s) - std::pow(std::abs(x), -2 * s));
                                  },
                                  -2.0, -1.0);
        const double I2 = c2 * ts.integrate(
                                   [&](double x) {
                                       return (std::pow(x + 2, 2 - 2 * s) + std::pow(-1 - x, 2 - 2 * s)) / (2 - 2 * s);
                                   },
                                   -2.0, -1.0);
        const double I3 = c * ts.integrate([&](double y) { return std::pow(y + 2, 2 - 2 * s); }, -2.0, -1.0);
        const double I4 = c * ts.integrate([&](double x) { return (x + 1) * (x + 1) * std::pow(-x, -2 * s); }, -2.0, -1.0);
        const double pot = ts.integrate([&](double x) { return W(eval(h, x)); }, -2.0, -1.0) + W(gamma);
        const double bound = 2 * I3 + I2 + 2 * I1 + 2 * c2 / (2 * s * (2 * s - 1)) +
                             2 * (c2 * std::pow(2.0, 1 - 2 * s) / (2 * s * (2 * s - 1)) + I4) + pot;
        return std::array<double, 5>{I1, I2, I3, I4, bound};
    };
    double worst = 0.0;
    for (double s : {0.6, 0.75}) {
        const auto o = envelope(s);
        const double lib[4] = {interaction(h, {-2, -1}, {-1, 0}, s), interaction(h, {-2, -1}, {-2, -1}, s),
                               interaction(h, {-kInf, -2}, {-2, -1}, s), interaction(h, {-2, 0}, {0, kInf}, s)};
        for (int i = 0; i < 4; ++i) worst = std::max(worst, std::abs(lib[i] - o[i]) / std::abs(o[i]));
    }
    g.require(worst < 1e-6, "competitor integrals rel " + e3(worst));
    // C = max over s of the envelope / (1 + 1/(2s-1)); G_s(h) below both bounds
    double C = 0.0;
    for (double s = 0.51; s < 0.995; s += 0.01) C = std::max(C, envelope(s)[4] / (1 + 1 / (2 * s - 1)));
    bool below = true;
    for (double s : {0.55, 0.6, 0.75, 0.9}) {
        const double G = functional_G(h, {-kInf, 0}, s, W);
        below = below && G <= envelope(s)[4] && G <= C * (1 + 1 / (2 * s - 1));
    }
    g.require(below, "G_s(h) under envelope, C=" + fmt::format("{:.4f}", C));
    return g;
}

Gate heteroclinic() {
    Gate g;
    const auto t0 = std::chrono::steady_clock::now();
    const double s = 0.75;
    const auto p = solve_heteroclinic_auto(s, W, {}, {});
    const auto& u = p.profile;
    g.require(p.converged, "converged pg " + e3(p.pgnorm));
    g.require(is_monotone(u), "monotone");
    const double u0 = eval(u, 0.0);
    g.require(std::abs(u0) < 1e-6, "u(0) " + e3(u0));
    double odd = 0.0;
    for (double x : u.grid.nodes) odd = std::max(odd, std::abs(eval(u, x) + eval(u, -x)));
    g.require(odd < 1e-3, "odd " + e3(odd));
    const auto r = pde_residual(u, s, W, middle_half(u.grid));
    g.require(r.sup_norm < 1e-3, "residual " + e3(r.sup_norm));
    g.require(std::abs(p.decay_fit.exponent - 2 * s) <= 0.1 * 2 * s,
              "decay " + fmt::format("{:.4f}", p.decay_fit.exponent));
    const double t = seconds_since(t0);
    g.require(t <= 60.0, fmt::format("L={:g} N={} {:.1f}s", u.grid.right(), u.grid.size(), t));
    return g;
}

Gate boundary_layer() {
    Gate g;
    const double s = 0.7;
    const auto het = solve_heteroclinic_auto(s, W, {}, {});
    for (double gamma : {-0.5, 0.0, 0.5}) {
        const auto best = solve_boundary_layer_auto(s, gamma, -1, W, {}, {});
        const auto& grid = best.profile.grid;
        const auto all = solve_boundary_layer_all(s, gamma, -1, W, grid, {});
        double uniq = 0.0;
        for (std::size_t i = 1; i < all.size(); ++i)
            uniq = std::max(uniq, sup_distance(all[0].profile, all[i].profile, {grid.left(), 0.0}));
        const auto& w = best.profile;
        bool inside = true;
        for (std::size_t i = 1; i + 1 < grid.size(); ++i)
            if (grid.nodes[i] < 0.0) inside = inside && w.values[i] > -1.0 && w.values[i] < gamma;
        // u_gamma(x) = u0(x + x_gamma), u0(x_gamma) = gamma
        double a = -50, b = 50;
        for (int it = 0; it < 200; ++it) ((eval(het.profile, 0.5 * (a + b)) < gamma) ? a : b) = 0.5 * (a + b);
        const double xg = 0.5 * (a + b);
        double slide = -kInf;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid.nodes[i] <= 0.0) slide = std::max(slide, w.values[i] - eval(het.profile, grid.nodes[i] + xg));
        const bool conv = std::all_of(all.begin(), all.end(), [](const LayerProfile& q) { return q.converged; });
        g.require(conv && is_monotone(w) && inside && uniq < 1e-4 &&
                      std::abs(best.decay_fit.exponent - 2 * s) <= 0.1 * 2 * s && slide <= 2e-3,
                  fmt::format("gamma={:g}: uniq {} decay {:.3f} slide {}{}", gamma, e3(uniq), best.decay_fit.exponent,
                              e3(slide), inside ? "" : " outside box"));
    }
    return g;
}

Gate psi_convergence() {
    Gate g;
    for (double s : {0.6, 0.75, 0.5}) {
        const auto r = compute_psi(s, 0.0, -1, W);
        const bool pos = r.psi_limit > 0.0 &&
                         std::all_of(r.total_r.begin(), r.total_r.end(), [](double v) { return v > 0.0; });
        g.require(r.cauchy_gap < 0.05 && pos,
                  fmt::format("s={:g}: Psi {:.6f} gap {}", s, r.psi_limit, e3(r.cauchy_gap)));
    }
    return g;
}

Gate counterexample() {
    Gate g;
    for (double s : {0.2, 0.35}) {
        const auto r = run_counterexample(s, {});
        double scal = 0.0, dd = 0.0, df = 0.0, rmin = kInf, rmax = -kInf;
        bool neg = r.rows.size() == 4;
        for (const auto& [delta, res] : r.scaling) scal = std::max(scal, res);
        for (const auto& row : r.rows) {
            dd = std::max(dd, std::abs(row.delta_star_numeric / row.delta_star_formula - 1));
            df = std::max(df, std::abs(row.f_numeric / row.f_formula - 1));
            neg = neg && row.defect_numeric < 0.0;
            rmin = std::min(rmin, row.ratio);
            rmax = std::max(rmax, row.ratio);
        }
        const double spread = std::abs(rmax / rmin - 1);
        g.require(r.sigma_c > 0.0 && scal < 0.02 && dd < 0.01 && df < 0.01 && neg && spread < 0.1,
                  fmt::format("s={:g}: sigma {:.4f} scaling {} delta* {} f {} ratio spread {}", s, r.sigma_c, e3(scal),
                              e3(dd), e3(df), e3(spread)));
    }
    return g;
}

Gate expansion_small_s() {
    Gate g;
    const double s = 0.25;
    auto sign = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
    const double m1 = compute_m1_small_s({-1, 1}, sign, s, 2).m1;
    std::vector<double> gaps;
    std::string q;
    for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
        const auto r = solve_m_eps(s, eps, {-1, 1}, sign, 0.0, W, {});
        gaps.push_back(std::abs(r.value_F1 - m1) / m1);
        q += fmt::format(" {:.4f}", r.value_F1);
    }
    bool shrinking = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) shrinking = shrinking && gaps[i] < gaps[i - 1];
    g.require(shrinking, "gaps shrinking");
    g.require(gaps.back() < 0.05, fmt::format("m1 {:.4f}, m_eps/eps{}, final gap {:.3f}", m1, q, gaps.back()));
    return g;
}

Gate expansion_large_s() {
    Gate g;
    const double s = 0.75, kappa = 0.2;
    const Interval om{-1, 1};
    auto gd = [](double) { return 0.3; };
    const BinaryPhase E{om, {0.0}, -1};
    const RecoveryLayers L{solve_heteroclinic_auto(s, W, {}, {}), solve_boundary_layer_auto(s, 0.3, -1, W, {}, {}),
                           solve_boundary_layer_auto(s, 0.3, 1, W, {}, {})};
    const double limit =
        compute_c_star(s, W) + compute_psi(s, 0.3, -1, W).psi_limit + compute_psi(s, 0.3, 1, W).psi_limit;
    std::vector<double> F;
    bool minimal = true;
    std::string trail;
    for (double eps : {1e-3, 1e-4, 1e-5, 1e-6}) {
        const auto v = build_recovery_sequence(s, eps, default_rho(s, eps), E, gd, L);
        F.push_back(functional_F1(v, ScalingParams::make(s, eps), om, W));
        const double m = solve_m_eps(s, eps, om, gd, kappa, W, {}).value_F1;
        minimal = minimal && m <= F.back() + 1e-9;
        trail += fmt::format(" {:.4f}", F.back());
    }
    bool toward = true;
    for (std::size_t i = 1; i < F.size(); ++i) toward = toward && std::abs(F[i] - limit) < std::abs(F[i - 1] - limit);
    const double over = (F.back() - limit) / limit;
    g.require(toward, fmt::format("F1(v_eps){} -> {:.4f}{}", trail, limit,
                                  F.back() < limit ? " (from below)" : ""));
    g.require(over < 0.1, "final overshoot " + e3(over));
    g.require(minimal, "m_eps^kappa/eps <= recovery");
    return g;
}

Gate sweep() {
    Gate g;
    const auto r = sweep_s_to_half(0.0, -1, W, {0.6, 0.55, 0.52, 0.51});
    bool dec = true;
    std::string d;
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
        if (i > 1) dec = dec && r.rows[i].dist_prev < r.rows[i - 1].dist_prev;
        d += " " + e3(r.rows[i].dist_prev);
    }
    g.require(dec, "consecutive distances" + d);
    g.require(r.rows.back().dist_half < 0.05, "to s=1/2 " + e3(r.rows.back().dist_half));
    return g;
}

Gate determinism(const std::string& cli) {
    Gate g;
    if (cli.empty() || !fs::exists(cli)) {
        g.require(false, "CLI binary not given");
        return g;
    }
    const fs::path dir = fs::temp_directory_path() / "fraclayer_acceptance_validate";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "validate.cfg";
    std::ofstream(cfg) << "[validate]\nout = " << (dir / "out").string() << "\n";
    std::vector<std::string> reports;
    bool exits = true;
    for (int w : {1, 4, 1, 4}) {
        const std::string cmd = fmt::format("FRACLAYER_WORKERS={} \"{}\" \"{}\" > /dev/null 2>&1", w, cli, cfg.string());
        exits = exits && std::system(cmd.c_str()) == 0;
        std::ifstream in(dir / "out" / "report.json", std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        reports.push_back(ss.str());
    }
    const bool same = !reports[0].empty() &&
                      std::all_of(reports.begin(), reports.end(), [&](const std::string& r) { return r == reports[0]; });
    g.require(exits, "validate exit 0");
    g.require(same, fmt::format("4 runs (workers 1,4,1,4) byte-identical, {} bytes", reports[0].size()));
    return g;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    const std::vector<std::pair<std::string, std::function<Gate()>>> gates{
        {"identity suite", identity_suite},
        {"quadrature oracle", quadrature_oracle},
        {"heteroclinic s=0.75", heteroclinic},
        {"boundary layer s=0.7", boundary_layer},
        {"Psi convergence", psi_convergence},
        {"counterexample suite", counterexample},
        {"first order s<1/2", expansion_small_s},
        {"first order s>=1/2", expansion_large_s},
        {"sweep s to 1/2", sweep},
        {"determinism", [&] { return determinism(cli); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < gates.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Gate g;
        try {
            g = gates[i].second();
        } catch (const std::exception& e) {
            g.require(false, std::string("threw: ") + e.what());
        }
        std::string notes;
        for (const auto& n : g.notes) notes += (notes.empty() ? "" : "; ") + n;
        std::printf("criterion %2zu %s  %-22s %s [%.1fs]\n", i + 1, g.ok ? "PASS" : "FAIL", gates[i].first.c_str(),
                    notes.c_str(), seconds_since(t0));
        std::fflush(stdout);
        failed += !g.ok;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(gates.size()) - failed, gates.size());
    return failed == 0 ? 0 : 1;
}
