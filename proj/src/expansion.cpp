#include "fraclayer/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include <gsl/gsl_multimin.h>

#include "fraclayer/errors.hpp"
#include "fraclayer/parallel.hpp"

namespace fraclayer {

using nlohmann::json;

json layer_json(const LayerProfile& p) {
    return json{{"s", p.s},
                {"gamma", p.gamma},
                {"sign", p.sign},
                {"energy", p.energy},
                {"normalization", p.normalization},
                {"decay_fit", {{"exponent", p.decay_fit.exponent},
                               {"r2", p.decay_fit.r2},
                               {"window", {p.decay_fit.window.lo, p.decay_fit.window.hi}}}},
                {"converged", p.converged},
                {"iters", p.iters},
                {"pgnorm", p.pgnorm},
                {"initializer", p.initializer},
                {"nodes", p.profile.grid.size()},
                {"L", std::max(-p.profile.grid.left(), p.profile.grid.right())}};
}

// ---------------------------------------------------------------- m1, s < 1/2

namespace {

struct PhaseProblem {
    Interval omega;
    TailModel lt, rt;
    double s;
    int left_sign;
};

// cleaned phase: jumps at the ends flip or vanish, coincident pairs cancel
BinaryPhase clean_phase(const Interval& omega, std::vector<double> p, int left_sign) {
    std::sort(p.begin(), p.end());
    const double tol = 1e-12 * omega.length();
    std::vector<double> kept;
    for (double x : p) {
        if (x <= omega.lo + tol) {
            left_sign = -left_sign;
            continue;
        }
        if (x >= omega.hi - tol) continue;
        if (!kept.empty() && x - kept.back() <= tol)
            kept.pop_back();
        else
            kept.push_back(x);
    }
    return BinaryPhase{omega, kept, left_sign};
}

// sign pattern of g inside omega: sign changes on a sampling, refined by
// bisection; nullopt when g vanishes on a sample or changes sign too often
std::optional<BinaryPhase> datum_phase(const Interval& omega, const std::function<double(double)>& g,
                                       int max_jumps) {
    const int n = 4000;
    auto sgn = [&](double x) { return g(x) > 0.0 ? 1 : (g(x) < 0.0 ? -1 : 0); };
    auto at = [&](int i) { return omega.lo + omega.length() * (i + 0.5) / n; };
    int prev = sgn(at(0));
    if (prev == 0) return std::nullopt;
    BinaryPhase E{omega, {}, prev};
    for (int i = 1; i < n; ++i) {
        const int cur = sgn(at(i));
        if (cur == 0) return std::nullopt;
        if (cur == prev) continue;
        double a = at(i - 1), b = at(i);
        for (int it = 0; it < 200 && b - a > 1e-15 * omega.length(); ++it) {
            const double m = 0.5 * (a + b);
            (sgn(m) == prev ? a : b) = m;
        }
        E.jumps.push_back(0.5 * (a + b));
        prev = cur;
    }
    if (E.perimeter() > max_jumps) return std::nullopt;
    return E;
}

// L1(omega) distance between two phases
double phase_mismatch(const BinaryPhase& A, const BinaryPhase& B) {
    std::vector<double> cuts{A.omega.lo, A.omega.hi};
    cuts.insert(cuts.end(), A.jumps.begin(), A.jumps.end());
    cuts.insert(cuts.end(), B.jumps.begin(), B.jumps.end());
    std::sort(cuts.begin(), cuts.end());
    double d = 0.0;
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        const double m = 0.5 * (cuts[i - 1] + cuts[i]);
        if (A.sign_at(m) != B.sign_at(m)) d += 2.0 * (cuts[i] - cuts[i - 1]);
    }
    return d;
}

double phase_energy(const PhaseProblem& P, const BinaryPhase& E) {
    return energy_Q(phase_to_function(E, P.lt, P.rt), P.omega, P.s);
}

struct SimplexData {
    const PhaseProblem* P;
    std::size_t k;
};

std::vector<double> positions(const Interval& omega, const gsl_vector* z) {
    std::vector<double> p(z->size);
    for (std::size_t i = 0; i < z->size; ++i)
        p[i] = omega.lo + omega.length() * (0.5 + 0.5 * std::tanh(gsl_vector_get(z, i)));
    return p;
}

double simplex_f(const gsl_vector* z, void* params) {
    const auto* d = static_cast<const SimplexData*>(params);
    return phase_energy(*d->P, clean_phase(d->P->omega, positions(d->P->omega, z), d->P->left_sign));
}

}  // namespace

M1SmallS compute_m1_small_s(const Interval& omega, const std::function<double(double)>& g, double s,
                            int max_jumps) {
    if (!(s > 0.0 && s < 0.5)) throw RangeError("s must lie in (0,1/2)");
    if (max_jumps < 0) throw PreconditionViolated("max_jumps must be >= 0");
    if (!std::isfinite(omega.lo) || !std::isfinite(omega.hi) || !(omega.lo < omega.hi))
        throw PreconditionViolated("Omega must be a bounded interval");
    const double len = omega.length();
    const TailModel lt = exterior_tail(g, omega.lo, Side::left, 10.0 * len);
    const TailModel rt = exterior_tail(g, omega.hi, Side::right, 10.0 * len);

    // the energy can be flat across phases (with exterior data -1 | +1 every
    // single-jump phase ties with both pure phases); ties go to the phase
    // nearest to sign(g) in L1(omega), then to the smaller perimeter
    const auto target = datum_phase(omega, g, max_jumps);
    std::vector<std::pair<BinaryPhase, double>> cand;
    auto consider = [&](const BinaryPhase& E, double e) { cand.emplace_back(E, e); };
    if (target) {
        const PhaseProblem P{omega, lt, rt, s, target->left_sign};
        consider(*target, phase_energy(P, *target));
    }
    for (int left_sign : {-1, 1}) {
        const PhaseProblem P{omega, lt, rt, s, left_sign};
        const BinaryPhase none{omega, {}, left_sign};
        consider(none, phase_energy(P, none));
        for (int k = 1; k <= max_jumps; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            SimplexData data{&P, kk};
            gsl_multimin_function fn{&simplex_f, kk, &data};
            for (int shift = -2; shift <= 2; ++shift) {
                gsl_vector* z = gsl_vector_alloc(kk);
                gsl_vector* step = gsl_vector_alloc(kk);
                for (std::size_t i = 0; i < kk; ++i) {
                    const double t = (static_cast<double>(i) + 1.0 + 0.4 * shift) / (static_cast<double>(k) + 1.0);
                    gsl_vector_set(z, i, std::atanh(2.0 * std::clamp(t, 0.02, 0.98) - 1.0));
                    gsl_vector_set(step, i, 0.3);
                }
                gsl_multimin_fminimizer* m = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, kk);
                gsl_multimin_fminimizer_set(m, &fn, z, step);
                for (int it = 0; it < 4000; ++it) {
                    if (gsl_multimin_fminimizer_iterate(m)) break;
                    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m), 1e-10) == GSL_SUCCESS) break;
                }
                const BinaryPhase E = clean_phase(omega, positions(omega, m->x), left_sign);
                consider(E, phase_energy(P, E));
                gsl_multimin_fminimizer_free(m);
                gsl_vector_free(step);
                gsl_vector_free(z);
            }
        }
    }
    M1SmallS best;
    best.m1 = kInf;
    for (const auto& c : cand) best.m1 = std::min(best.m1, c.second);
    const double tol = 1e-9 * std::max(1.0, std::abs(best.m1));
    double best_mis = kInf;
    int best_per = 0;
    for (const auto& [E, e] : cand) {
        if (e > best.m1 + tol) continue;
        const double mis = target ? phase_mismatch(E, *target) : 0.0;
        if (mis < best_mis - 1e-9 || (mis <= best_mis + 1e-9 && E.perimeter() < best_per)) {
            best.E = E;
            best_mis = mis;
            best_per = E.perimeter();
        }
    }
    return best;
}

// ---------------------------------------------------------------- c_star, Psi

namespace {

// value = c + C / ln R through the last two rungs
double log_extrapolate(double R1, double v1, double R2, double v2) {
    const double l1 = std::log(R1), l2 = std::log(R2);
    return (v2 * l2 - v1 * l1) / (l2 - l1);
}

}  // namespace

double compute_c_star(double s, const DoubleWell& W, const LayerGridOptions& lopts, const SolveOptions& opts) {
    if (!(s >= 0.5 - 1e-12 && s < 1.0)) throw RangeError("s must lie in [1/2,1)");
    const LayerProfile p = solve_heteroclinic_auto(s, W, lopts, opts);
    require_converged(p);
    if (regime_of(s) == Regime::above_half) return p.energy;
    const double R1 = std::ldexp(1.0, 39), R2 = std::ldexp(1.0, 40);
    const double v1 = functional_G(p.profile, {-R1, R1}, 0.5, W) / std::log(R1);
    const double v2 = functional_G(p.profile, {-R2, R2}, 0.5, W) / std::log(R2);
    return log_extrapolate(R1, v1, R2, v2);
}

std::vector<double> default_r_ladder() {
    std::vector<double> r;
    for (int k = 0; k <= 40; ++k) r.push_back(std::ldexp(1.0, k));
    return r;
}

json PsiReport::to_json() const {
    return json{{"s", s},           {"gamma", gamma},         {"sign", sign},
                {"r_ladder", r_ladder}, {"psi1_r", psi1_r},   {"psi2_r", psi2_r},
                {"potential_r", potential_r}, {"total_r", total_r}, {"psi_limit", psi_limit},
                {"cauchy_gap", cauchy_gap}, {"layer", layer_json(layer)}};
}

PsiReport compute_psi(double s, double gamma, int sign, const DoubleWell& W, const std::vector<double>& r_ladder,
                      const LayerGridOptions& lopts, const SolveOptions& opts) {
    if (!(std::abs(gamma) < 1.0)) throw GammaAtWell("gamma must lie in (-1,1); got " + fmt17(gamma));
    if (!(s >= 0.5 - 1e-12 && s < 1.0)) throw RangeError("s must lie in [1/2,1)");
    const bool half = regime_of(s) == Regime::half;
    std::vector<double> R;
    for (double r : r_ladder)
        if (r > 0.0 && (!half || r > 1.0)) R.push_back(r);
    if (R.size() < 2) throw PreconditionViolated("r ladder needs at least two usable radii");
    if (!std::is_sorted(R.begin(), R.end())) throw PreconditionViolated("r ladder must increase");

    PsiReport rep;
    rep.s = s;
    rep.gamma = gamma;
    rep.sign = sign;
    rep.layer = solve_boundary_layer_auto(s, gamma, sign, W, lopts, opts);
    require_converged(rep.layer);
    rep.r_ladder = R;
    const ScalingParams p = ScalingParams::make(s, 0.5);
    const auto n = R.size();
    rep.psi1_r.resize(n);
    rep.psi2_r.resize(n);
    rep.potential_r.resize(n);
    rep.total_r.resize(n);
    parallel_blocks(n, [&](std::size_t i) {
        const double r = R[i], br = p.b_r(r);
        rep.psi1_r[i] = br * interaction(rep.layer.profile, {-r, 0.0}, {-r, 0.0}, s);
        rep.psi2_r[i] = br * interaction(rep.layer.profile, {-r, 0.0}, {0.0, r}, s);
        rep.potential_r[i] = br * potential_integral(rep.layer.profile, {-r, 0.0}, W);
        rep.total_r[i] = rep.psi1_r[i] + 2.0 * rep.psi2_r[i] + rep.potential_r[i];
    });
    rep.psi_limit = rep.total_r.back();
    rep.cauchy_gap = std::abs(rep.total_r[n - 1] - rep.total_r[n - 2]) / std::abs(rep.total_r[n - 1]);
    return rep;
}

M1LargeS compute_m1_large_s(double s, const Interval& omega, double g_left, double g_right, const DoubleWell& W,
                            const LayerGridOptions& lopts, const SolveOptions& opts) {
    M1LargeS out;
    out.c_star = compute_c_star(s, W, lopts, opts);
    double psiL[2], psiR[2];  // index 0: sign -1, 1: sign +1
    for (int k = 0; k < 2; ++k) {
        psiL[k] = compute_psi(s, g_left, 2 * k - 1, W, default_r_ladder(), lopts, opts).psi_limit;
        psiR[k] = compute_psi(s, g_right, 2 * k - 1, W, default_r_ladder(), lopts, opts).psi_limit;
    }
    (void)omega;
    out.m1 = kInf;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const int per = a == b ? 0 : 1;
            const double v = per * out.c_star + psiL[a] + psiR[b];
            if (v < out.m1) {
                out.m1 = v;
                out.perimeter = per;
                out.sign_left = 2 * a - 1;
                out.sign_right = 2 * b - 1;
                out.psi_left = psiL[a];
                out.psi_right = psiR[b];
            }
        }
    return out;
}

// ---------------------------------------------------------------- recovery

double default_rho(double s, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw RangeError("eps must lie in (0,1)");
    switch (regime_of(s)) {
        case Regime::above_half: return std::pow(eps, (2.0 * s - 1.0) / (4.0 * s));
        case Regime::half: return 1.0 / std::sqrt(std::abs(std::log(eps)));
        default: throw RangeError("recovery sequences need s in [1/2,1)");
    }
}

GridFunction build_recovery_sequence(double s, double eps, double rho, const BinaryPhase& E,
                                     const std::function<double(double)>& g, const RecoveryLayers& layers,
                                     double* ratio) {
    if (regime_of(s) == Regime::below_half || !(s < 1.0)) throw RangeError("s must lie in [1/2,1)");
    if (!(eps > 0.0)) throw RangeError("eps must be positive");
    if (!(rho > eps)) throw ScaleViolation("rho=" + fmt17(rho) + " must exceed eps=" + fmt17(eps));
    E.validate();
    const Interval om = E.omega;
    for (double j : E.jumps)
        if (j - om.lo <= 3.0 * rho || om.hi - j <= 3.0 * rho)
            throw PreconditionViolated("E must not change sign within 3 rho of the boundary");
    const int sl = E.sign_at(om.lo + rho), sr = E.sign_at(om.hi - rho);
    const double gl = g(om.lo), gr = g(om.hi);
    if (layers.left.sign != sl || std::abs(layers.left.gamma - gl) > 1e-12 || layers.right.sign != sr ||
        std::abs(layers.right.gamma - gr) > 1e-12)
        throw PreconditionViolated("boundary layers do not match the phase signs and boundary data");
    const ScalingParams p = ScalingParams::make(s, eps);
    if (ratio) *ratio = p.a_tilde / std::pow(rho, 2.0 * s);

    auto bulk = [&](double x) {
        if (E.jumps.empty()) return static_cast<double>(E.sign_at(x));
        return eval(layers.heteroclinic.profile, signed_distance(E, x) / eps);
    };
    auto value = [&](double x) {
        const double dl = x - om.lo, dr = om.hi - x;
        const bool near_left = dl <= dr;
        const double d = near_left ? dl : dr;
        if (d >= 2.0 * rho) return bulk(x);
        const double w = eval(near_left ? layers.left.profile : layers.right.profile, -d / eps);
        if (d <= rho) return w;
        const double t = (d - rho) / rho;
        return (1.0 - t) * w + t * bulk(x);
    };

    std::vector<double> focus{om.lo, om.lo + rho, om.lo + 2 * rho, om.hi - 2 * rho, om.hi - rho, om.hi};
    for (double j : E.jumps) focus.push_back(j);
    const double h_max = std::min(0.02 * om.length(), 0.25 * rho);
    const Grid1D grid = Grid1D::graded(om.lo, om.hi, focus, 0.05 * eps, h_max, 0.05);
    std::vector<double> v;
    v.reserve(grid.size());
    for (double x : grid.nodes) v.push_back(value(x));
    v.front() = gl;
    v.back() = gr;
    const double cutoff = 10.0 * om.length();
    return GridFunction(grid, v, exterior_tail(g, om.lo, Side::left, cutoff),
                        exterior_tail(g, om.hi, Side::right, cutoff));
}

// ---------------------------------------------------------------- counterexample

double delta_star(double s, double eps, double sigma_c, double omega_c) {
    return std::pow((1.0 - 2.0 * s) * sigma_c / omega_c, 1.0 / (2.0 * s)) * eps;
}

double defect_formula(double s, double eps, double sigma_c, double omega_c) {
    return -2.0 * s * std::pow((1.0 - 2.0 * s) / omega_c, (1.0 - 2.0 * s) / (2.0 * s)) *
           std::pow(sigma_c, 1.0 / (2.0 * s)) * std::pow(eps, 1.0 - 2.0 * s);
}

std::vector<double> counterexample_eps_ladder(double s, double sigma_c, double omega_c, int count) {
    const double K = delta_star(s, 1.0, sigma_c, omega_c);
    std::vector<double> e;
    for (int k = 0; k < count; ++k) e.push_back(std::ldexp(1.0, -(k + 1)) / K);
    return e;
}

json CounterexampleReport::to_json() const {
    json rj = json::array();
    for (const auto& r : rows) {
        json mu = json::array();
        for (const auto& [m, v] : r.mu_divergence) mu.push_back({{"mu", m}, {"value", v}});
        rj.push_back({{"eps", r.eps},
                      {"delta_star_formula", r.delta_star_formula},
                      {"delta_star_numeric", r.delta_star_numeric},
                      {"f_formula", r.f_formula},
                      {"f_numeric", r.f_numeric},
                      {"F1", r.F1},
                      {"defect_numeric", r.defect_numeric},
                      {"defect_formula", r.defect_formula},
                      {"defect_over_eps_pow", r.ratio},
                      {"mu_divergence", mu}});
    }
    json sc = json::array(), sd = json::array();
    for (const auto& [d, v] : scaling) sc.push_back({{"delta", d}, {"relative_residual", v}});
    for (const auto& [d, v] : sigma_from_delta) sd.push_back({{"delta", d}, {"sigma", v}});
    return json{{"s", s},         {"ubarQ", ubarQ}, {"m1", m1},       {"sigma_c", sigma_c},
                {"omega_c", omega_c}, {"scaling", sc}, {"sigma_from_delta", sd}, {"rows", rj}};
}

CounterexampleReport run_counterexample(double s, const std::vector<double>& eps_list, double h_min, double h_max) {
    if (!(s > 0.0 && s < 0.5)) throw RangeError("s must lie in (0,1/2)");
    const DoubleWell W = make_quartic();
    CounterexampleReport rep;
    rep.s = s;
    rep.ubarQ = 8.0 * std::pow(2.0, 1.0 - 2.0 * s) / (2.0 * s * (1.0 - 2.0 * s));
    rep.m1 = compute_m1_small_s({-1, 1}, [](double x) { return x > 0 ? 1.0 : -1.0; }, s, 2).m1;
    const Interval om{-1.0, 1.0};
    const GridFunction u1 = solve_s_harmonic(1.0, s, s_harmonic_grid(1.0, h_min, h_max));
    rep.sigma_c = rep.ubarQ - energy_Q(u1, om, s);
    rep.omega_c = potential_integral(u1, om, W);
    for (double d : {0.5, 0.25}) {
        const GridFunction ud = solve_s_harmonic(d, s, s_harmonic_grid(d, h_min, h_max));
        const double e = energy_Q(ud, om, s);
        const double pw = std::pow(d, 1.0 - 2.0 * s);
        rep.scaling.emplace_back(d, std::abs(e - (rep.ubarQ - rep.sigma_c * pw)) / rep.ubarQ);
        rep.sigma_from_delta.emplace_back(d, (rep.ubarQ - e) / pw);
    }
    const std::vector<double> eps =
        eps_list.empty() ? counterexample_eps_ladder(s, rep.sigma_c, rep.omega_c, 4) : eps_list;
    for (double e : eps) {
        CounterexampleRow r;
        r.eps = e;
        auto f = [&](double d) { return -rep.sigma_c * std::pow(d, 1.0 - 2.0 * s) + rep.omega_c * d / std::pow(e, 2 * s); };
        r.delta_star_formula = delta_star(s, e, rep.sigma_c, rep.omega_c);
        r.f_formula = f(std::min(1.0, r.delta_star_formula));
        // log-spaced delta grid on [1e-12, 1]
        const int K = 240000;
        r.f_numeric = kInf;
        for (int k = 0; k <= K; ++k) {
            const double d = std::pow(10.0, -12.0 + 12.0 * k / K);
            const double v = f(d);
            if (v < r.f_numeric) {
                r.f_numeric = v;
                r.delta_star_numeric = d;
            }
        }
        const double ds = std::min(1.0, r.delta_star_formula);
        const GridFunction v = rescale(u1, 1.0 / ds);
        const ScalingParams p = ScalingParams::make(s, e);
        r.F1 = functional_F1(v, p, om, W);
        r.defect_numeric = r.F1 - rep.m1;
        r.defect_formula = defect_formula(s, e, rep.sigma_c, rep.omega_c);
        r.ratio = r.defect_numeric / std::pow(e, 1.0 - 2.0 * s);
        for (double mu : {1.0 - 2.0 * s + 0.1, 0.5, 1.0}) r.mu_divergence.emplace_back(mu, r.defect_numeric / std::pow(e, mu));
        rep.rows.push_back(r);
    }
    return rep;
}

// ---------------------------------------------------------------- s -> 1/2

json SweepReport::to_json() const {
    json rows_j = json::array();
    for (const auto& r : rows)
        rows_j.push_back({{"s", r.s},
                          {"dist_prev", r.dist_prev},
                          {"dist_half", r.dist_half},
                          {"decay_exponent", r.decay_exponent},
                          {"layer", layer_json(r.profile)}});
    return json{{"gamma", gamma},
                {"sign", sign},
                {"window", {window.lo, window.hi}},
                {"half", layer_json(half)},
                {"rows", rows_j}};
}

SweepReport sweep_s_to_half(double gamma, int sign, const DoubleWell& W, const std::vector<double>& s_list,
                            const LayerGridOptions& lopts, const SolveOptions& opts) {
    if (s_list.empty()) throw PreconditionViolated("s list is empty");
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        if (!(s_list[i] > 0.5 && s_list[i] < 1.0)) throw RangeError("sweep values must lie in (1/2,1)");
        if (i > 0 && !(s_list[i] < s_list[i - 1])) throw PreconditionViolated("s list must decrease");
    }
    SweepReport rep;
    rep.gamma = gamma;
    rep.sign = sign;
    rep.half = solve_boundary_layer_auto(0.5, gamma, sign, W, lopts, opts);
    require_converged(rep.half);
    for (std::size_t i = 0; i < s_list.size(); ++i) {
        SweepRow r;
        r.s = s_list[i];
        r.profile = solve_boundary_layer_auto(r.s, gamma, sign, W, lopts, opts);
        require_converged(r.profile);
        r.decay_exponent = r.profile.decay_fit.exponent;
        r.dist_half = sup_distance(r.profile.profile, rep.half.profile, rep.window);
        r.dist_prev = i == 0 ? kInf : sup_distance(r.profile.profile, rep.rows.back().profile.profile, rep.window);
        rep.rows.push_back(std::move(r));
    }
    return rep;
}

// ---------------------------------------------------------------- fit

json ExpansionReport::to_json() const {
    return json{{"s", s},          {"eps_ladder", eps_ladder}, {"m_eps", m_eps}, {"gaps", gaps},  {"m0", m0},
                {"m1_fit", m1_fit}, {"m1_theory", m1_theory},   {"gap", gap}};
}

ExpansionReport fit_expansion(const std::vector<double>& eps, const std::vector<double>& m, double s,
                              double m1_theory) {
    if (eps.size() != m.size()) throw PreconditionViolated("ladder and values differ in length");
    if (eps.size() < 4) throw PreconditionViolated("expansion fit needs at least 4 rungs");
    const double ratio = eps[1] / eps[0];
    for (std::size_t i = 1; i < eps.size(); ++i) {
        const double r = eps[i] / eps[i - 1];
        if (!(r > 0.0 && r < 1.0) || std::abs(r - ratio) > 1e-9 * ratio)
            throw IllConditionedFit("eps ladder must be geometric and strictly decreasing");
    }
    ExpansionReport rep;
    rep.s = s;
    rep.eps_ladder = eps;
    rep.m_eps = m;
    rep.m0 = 0.0;
    rep.m1_theory = m1_theory;
    std::vector<double> q;
    for (std::size_t i = 0; i < eps.size(); ++i) q.push_back(m[i] / eps[i]);
    double qmax = 0.0;
    for (double v : q) qmax = std::max(qmax, std::abs(v));
    const double noise = 1e-9 * std::max(1.0, qmax);
    int up = 0, down = 0;
    for (std::size_t i = 1; i < q.size(); ++i) {
        const double d = q[i] - q[i - 1];
        up += d > noise;
        down += d < -noise;
    }
    if (up > 0 && down > 0) throw IllConditionedFit("m_eps/eps is not monotone along the ladder");
    const std::size_t n = q.size();
    rep.m1_fit = (q[n - 1] - ratio * q[n - 2]) / (1.0 - ratio);
    const double denom = std::abs(m1_theory) > 0.0 ? std::abs(m1_theory) : 1.0;
    for (double v : q) rep.gaps.push_back(std::abs(v - m1_theory) / denom);
    rep.gap = std::abs(rep.m1_fit - m1_theory) / denom;
    return rep;
}

}  // namespace fraclayer
