#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fraclayer/energy.hpp"
#include "fraclayer/funcrep.hpp"
#include "fraclayer/potential.hpp"

namespace fraclayer {

/// Per-node box plus a frozen mask. Frozen nodes keep frozen_values.
struct ConstraintSet {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    std::vector<char> frozen;
    Eigen::VectorXd frozen_values;
    double kappa = 0.0;  // Y_kappa radius the bounds were built from (report only)

    static ConstraintSet free_box(std::size_t n, double lo, double hi);
    void freeze(std::size_t i, double v);
    /// Throws PreconditionViolated when frozen values leave the box.
    void validate() const;
    Eigen::VectorXd project(const Eigen::VectorXd& U) const;
};

struct SolveOptions {
    int max_iters = 40000;  // first-order iterations; the Newton polish adds at most 50
    double tol_energy = 1e-10;  // relative decrease over a stall window
    double tol_pg = 1e-6;       // sup of the mass-normalized projected gradient
    // after first-order convergence, Newton steps continue down to this
    // level when positive; layer solvers default it to 1e-3 tol_pg so that
    // node-wise monotonicity survives in the coarse far tail
    double polish_pg = 0.0;
    std::vector<std::string> inits{"ramp", "tanh"};
};

struct TraceRow {
    int iter = 0;
    double energy = 0.0;
    double pgnorm = 0.0;
};

void write_trace(const std::string& path, const std::vector<TraceRow>& trace);

/// a (U^T K U + 2 f^T U + e0) + b sum_region int W(u).
struct Objective {
    const QuadraticModel* Q = nullptr;
    const Grid1D* grid = nullptr;
    const DoubleWell* W = nullptr;
    double a = 1.0;
    double b = 1.0;

    double value(const Eigen::VectorXd& U, Eigen::VectorXd* grad) const;
};

struct MinimizeResult {
    Eigen::VectorXd U;
    double energy = 0.0;
    double pgnorm = 0.0;
    int iters = 0;
    bool converged = false;
    std::vector<TraceRow> trace;
};

/// Projected gradient with Barzilai-Borwein steps in a diagonal metric and
/// monotone Armijo backtracking along the projected direction; when it stops
/// short of tol_pg, projected Newton steps on the free set finish the job.
MinimizeResult minimize_pg(const Objective& obj, const ConstraintSet& C, const Eigen::VectorXd& U0,
                           const SolveOptions& opts);

struct DecayFit {
    double exponent = 0.0;  // p in |u - target| ~ C |x - origin|^{-p}
    double r2 = 0.0;
    Interval window;
};

/// Least-squares slope of log|u - target| against log|x - origin| over the
/// grid nodes inside the window.
DecayFit fit_decay(const GridFunction& u, double target, const Interval& window, double origin = 0.0);

struct LayerProfile {
    GridFunction profile;
    double energy = 0.0;
    double s = 0.0;
    double gamma = 0.0;  // boundary value (boundary layers)
    int sign = 0;        // pure phase at -infinity (boundary layers); 0 for heteroclinic
    std::string normalization;
    DecayFit decay_fit;
    bool converged = false;
    int iters = 0;
    double pgnorm = 0.0;
    std::vector<TraceRow> trace;
    std::string initializer;
};

/// Heteroclinic on a symmetric grid [-L, L] with tails -1, +1. When the grid
/// has a node at 0 it is pinned to 0 (exact for even wells, removes the
/// translation mode); the zero is re-centred to x = 0 afterwards either way.
/// Throws NotConverged only through require_converged().
LayerProfile solve_heteroclinic(double s, const DoubleWell& W, const Grid1D& grid, const SolveOptions& opts);

/// Boundary layer on [-L, 0]: tail `sign` on the left, value gamma from 0 on.
/// Every initializer in opts.inits is solved; the lowest energy is returned
/// and the others are available through solve_boundary_layer_all.
LayerProfile solve_boundary_layer(double s, double gamma, int sign, const DoubleWell& W, const Grid1D& grid,
                                  const SolveOptions& opts);
std::vector<LayerProfile> solve_boundary_layer_all(double s, double gamma, int sign, const DoubleWell& W,
                                                   const Grid1D& grid, const SolveOptions& opts);

/// Throws NotConverged when the profile did not reach tol_pg.
void require_converged(const LayerProfile& p);

/// Truncation policy for layer problems: a graded grid toward 0 on [-L, L]
/// or [-L, 0], L doubled from L0 until the profile at distance L/2 is within
/// tail_tol of its limit (or L_max is reached).
struct LayerGridOptions {
    double L0 = 50.0;
    double L_max = 12800.0;
    double h_min = 0.05;
    double growth = 0.03;
    double h_max_over_L = 0.01;
    double tail_tol = 1e-3;
};

Grid1D layer_grid(double L, bool half_line, const LayerGridOptions& lopts);
LayerProfile solve_heteroclinic_auto(double s, const DoubleWell& W, const LayerGridOptions& lopts,
                                     const SolveOptions& opts);
LayerProfile solve_boundary_layer_auto(double s, double gamma, int sign, const DoubleWell& W,
                                       const LayerGridOptions& lopts, const SolveOptions& opts);

/// Minimizer of u(Q_(-1,1)) with u = sign(x) outside (-delta, delta). The
/// grid covers [-1, 1] and must have nodes at +-delta.
GridFunction solve_s_harmonic(double delta, double s, const Grid1D& grid);

/// Grid on [-1, 1] graded toward +-delta and 0 with nodes at +-delta.
Grid1D s_harmonic_grid(double delta, double h_min, double h_max);

struct MEpsStart {
    std::string name;
    double energy_F1 = 0.0;
    int sign_changes = 0;
    bool converged = false;
    int iters = 0;
};

struct MEpsResult {
    double value_E = 0.0;   // m_eps
    double value_F1 = 0.0;  // m_eps / eps
    GridFunction argmin;
    std::string best_start;
    std::vector<MEpsStart> starts;
    std::vector<TraceRow> trace;  // of the winning start
};

struct MEpsGridOptions {
    double h_min_over_eps = 0.1;
    double h_max = 0.02;
    double growth = 0.1;
};

/// m_eps (or m_eps^kappa for kappa > 0) over u = g outside Omega.
MEpsResult solve_m_eps(double s, double eps, const Interval& omega, const std::function<double(double)>& g,
                       double kappa, const DoubleWell& W, const SolveOptions& opts,
                       const MEpsGridOptions& gopts = {});

/// Number of sign changes of a nodal vector (ties at zero skipped).
int sign_changes(const std::vector<double>& v);

/// sup |u - v| sampled at the nodes of both grids inside the window.
double sup_distance(const GridFunction& u, const GridFunction& v, const Interval& window);

/// Non-decreasing node-wise up to tol.
bool is_monotone(const GridFunction& u, double tol = 0.0);

}  // namespace fraclayer
