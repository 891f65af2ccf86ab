#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fraclayer/energy.hpp"
#include "fraclayer/funcrep.hpp"
#include "fraclayer/potential.hpp"
#include "fraclayer/solvers.hpp"

namespace fraclayer {

nlohmann::json layer_json(const LayerProfile& p);

struct M1SmallS {
    double m1 = 0.0;
    BinaryPhase E;
};

/// inf over binary phases in Omega of u(Q_Omega) with u = g outside, searched
/// over jump counts 0..max_jumps and both left signs; jump locations by
/// Nelder-Mead simplex from several starts.
M1SmallS compute_m1_small_s(const Interval& omega, const std::function<double(double)>& g, double s,
                            int max_jumps);

/// Layer energy of the heteroclinic: G(u0, R) for s > 1/2, and for s = 1/2
/// the limit of G(u0, (-R, R)) / ln R extrapolated linearly in 1 / ln R.
double compute_c_star(double s, const DoubleWell& W, const LayerGridOptions& lopts = {},
                      const SolveOptions& opts = {});

/// Default r ladder: doublings from 1 to 2^40.
std::vector<double> default_r_ladder();

struct PsiReport {
    double gamma = 0.0;
    int sign = -1;
    double s = 0.0;
    std::vector<double> r_ladder;
    std::vector<double> psi1_r, psi2_r, potential_r, total_r;
    double psi_limit = 0.0;
    double cauchy_gap = 0.0;
    LayerProfile layer;

    nlohmann::json to_json() const;
};

/// Psi(sign, gamma) through the r-approximants
///   b_r w(B_r^-, B_r^-) + 2 b_r w(B_r^-, B_r^+) + b_r int_{B_r^-} W(w)
/// of one boundary-layer solve; radii beyond the grid use the constant tails.
PsiReport compute_psi(double s, double gamma, int sign, const DoubleWell& W,
                      const std::vector<double>& r_ladder = default_r_ladder(), const LayerGridOptions& lopts = {},
                      const SolveOptions& opts = {});

/// m1 for s >= 1/2: min over phases of c_star Per(E) + Psi at both ends of
/// Omega. With a constant-sign exterior this reduces to zero or one jump.
struct M1LargeS {
    double m1 = 0.0;
    double c_star = 0.0;
    int perimeter = 0;
    int sign_left = 1;   // phase at omega.lo
    int sign_right = 1;  // phase at omega.hi
    double psi_left = 0.0, psi_right = 0.0;
};
M1LargeS compute_m1_large_s(double s, const Interval& omega, double g_left, double g_right, const DoubleWell& W,
                            const LayerGridOptions& lopts = {}, const SolveOptions& opts = {});

/// Recovery sequence v_eps for a one-dimensional phase E with jumps strictly
/// inside Omega: g outside, w0(-d/eps) within rho of the boundary, a linear
/// bridge on rho < d < 2 rho, the heteroclinic u0(dE/eps) in the bulk.
/// Layer profiles are passed in (one per endpoint) so ladders reuse them.
struct RecoveryLayers {
    LayerProfile heteroclinic;
    LayerProfile left;   // w0(.; sign_E(omega.lo), g(omega.lo))
    LayerProfile right;  // w0(.; sign_E(omega.hi), g(omega.hi))
};

/// rho = eps^{(2s-1)/(4s)} for s > 1/2 and 1 / sqrt|ln eps| at s = 1/2: both
/// vanish while a_tilde / rho^{2s} -> 0 (eps^{(2s-1)/2} and 1/sqrt|ln eps|).
double default_rho(double s, double eps);

/// Throws ScaleViolation when rho <= eps. Returns the scale-separation ratio
/// a_tilde / rho^{2s} through *ratio (callers warn above 0.1).
GridFunction build_recovery_sequence(double s, double eps, double rho, const BinaryPhase& E,
                                     const std::function<double(double)>& g, const RecoveryLayers& layers,
                                     double* ratio = nullptr);

struct CounterexampleRow {
    double eps = 0.0;
    double delta_star_formula = 0.0;
    double delta_star_numeric = 0.0;
    double f_formula = 0.0;  // f(delta*) at the closed-form delta*
    double f_numeric = 0.0;  // grid minimum of f
    double F1 = 0.0;         // F^(1)_eps(v_eps), v_eps = u_1(./delta*)
    double defect_numeric = 0.0;
    double defect_formula = 0.0;
    double ratio = 0.0;  // defect_numeric / eps^{1-2s}
    std::vector<std::pair<double, double>> mu_divergence;  // (mu, (F1 - m1) / eps^mu)
};

struct CounterexampleReport {
    double s = 0.0;
    double ubarQ = 0.0;  // closed form 8 * 2^{1-2s} / (2s (1-2s))
    double m1 = 0.0;     // compute_m1_small_s on (-1,1), g = sign
    double sigma_c = 0.0;
    double omega_c = 0.0;
    std::vector<std::pair<double, double>> scaling;  // (delta, relative residual of u_delta(Q))
    std::vector<std::pair<double, double>> sigma_from_delta;
    std::vector<CounterexampleRow> rows;

    nlohmann::json to_json() const;
};

/// Epsilons at which delta* = 1/2, 1/4, ... (count of them).
std::vector<double> counterexample_eps_ladder(double s, double sigma_c, double omega_c, int count);

/// Closed forms of the counterexample chain.
double delta_star(double s, double eps, double sigma_c, double omega_c);
double defect_formula(double s, double eps, double sigma_c, double omega_c);

/// eps_list empty: four epsilons with delta* = 1/2 .. 1/16.
CounterexampleReport run_counterexample(double s, const std::vector<double>& eps_list, double h_min = 0.002,
                                        double h_max = 0.02);

struct SweepRow {
    double s = 0.0;
    double dist_prev = 0.0;  // sup-distance to the previous profile on the window
    double dist_half = 0.0;  // sup-distance to the s = 1/2 profile
    double decay_exponent = 0.0;
    LayerProfile profile;
};

struct SweepReport {
    double gamma = 0.0;
    int sign = -1;
    Interval window{-10.0, 0.0};
    LayerProfile half;
    std::vector<SweepRow> rows;

    nlohmann::json to_json() const;
};

/// s_list strictly decreasing inside (1/2, 1); the s = 1/2 solve is added.
SweepReport sweep_s_to_half(double gamma, int sign, const DoubleWell& W, const std::vector<double>& s_list,
                            const LayerGridOptions& lopts = {}, const SolveOptions& opts = {});

struct ExpansionReport {
    double s = 0.0;
    std::vector<double> eps_ladder;
    std::vector<double> m_eps;
    std::vector<double> gaps;  // |m_eps/eps - m1_theory| / |m1_theory| per rung
    double m0 = 0.0;
    double m1_fit = 0.0;
    double m1_theory = 0.0;
    double gap = 0.0;

    nlohmann::json to_json() const;
};

/// Two-point Richardson (order 1) on q = m_eps / eps over the last two rungs.
/// Throws IllConditionedFit when q is not monotone beyond noise, or the
/// ladder is too short, non-geometric or not decreasing.
ExpansionReport fit_expansion(const std::vector<double>& eps_ladder, const std::vector<double>& m_eps, double s,
                              double m1_theory);

}  // namespace fraclayer
