#pragma once

#include <string>
#include <vector>

#include "fraclayer/funcrep.hpp"
#include "fraclayer/potential.hpp"

namespace fraclayer {

/// Principal value  int (u(x) - u(y)) |x - y|^{-1-2s} dy  at grid node k.
/// Near the node a degree-4 interpolant through the five nearest nodes is
/// integrated exactly; farther cells use a per-cell cubic reconstruction and
/// Gauss-6; constant tails are exact. Requires piecewise-linear data.
double frac_laplacian(const GridFunction& u, std::size_t k, double s);

/// Same, at the grid node located at x (PreconditionViolated otherwise).
double frac_laplacian_at(const GridFunction& u, double x, double s);

/// Factor c with  d/du [u(Q) + int W(u)] = c (-Delta)^s u + W'(u)  for the
/// raw principal-value operator above (each unordered pair is counted twice
/// in Q, and the square differentiates to another 2).
inline constexpr double kEulerLagrangeFactor = 4.0;

struct ResidualReport {
    std::vector<double> nodes;
    std::vector<double> residual;  // kEulerLagrangeFactor * frac_laplacian + W'(u)
    double sup_norm = 0.0;
    Interval interior_window;

    void write_csv(const std::string& path) const;
};

/// Residual at every grid node strictly inside `window`.
ResidualReport pde_residual(const GridFunction& u, double s, const DoubleWell& W, const Interval& window);

/// Middle 50% of the grid.
Interval middle_half(const Grid1D& g);

}  // namespace fraclayer
