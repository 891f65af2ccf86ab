#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fraclayer/funcrep.hpp"
#include "fraclayer/potential.hpp"

namespace fraclayer {

enum class Regime { below_half, half, above_half };

Regime regime_of(double s);

/// Scale factors of the rescaled energies. a_tilde = a_eps / eps and
/// b_tilde = b_eps / eps hold in every regime.
struct ScalingParams {
    double s = 0.75;
    double eps = 0.1;
    double a_eps = 0, b_eps = 0;
    double a_tilde = 0, b_tilde = 0;

    /// Throws RangeError unless s in (0,1), eps > 0 (eps != 1 at s = 1/2).
    static ScalingParams make(double s, double eps);

    Regime regime() const { return regime_of(s); }
    /// Window normalization: 1 for s > 1/2, 1/|ln r| for s = 1/2, 1 below.
    double b_r(double r) const;
};

/// Quadrature knobs. Same-cell, adjacent and near pairs are evaluated with
/// exact antiderivatives; only separated pairs are sampled.
struct InteractionQuadrature {
    int far_order = 4;               // Gauss points per side for separated pairs
    double near_ratio = 8.0;         // gap/cell ratio below which pairs are exact
    bool diagonal_closed_form = true;
};

/// u(A, B) = int_A int_B |u(x) - u(y)|^2 |x - y|^{-1-2s}.
double interaction(const GridFunction& u, const Interval& A, const Interval& B, double s);

/// u(Q_Omega) = u(Omega, Omega) + 2 u(Omega, Omega^c).
double energy_Q(const GridFunction& u, const Interval& omega, double s);

/// int_A W(u); Gauss-3 per piece, exact for the quartic on linear pieces.
double potential_integral(const GridFunction& u, const Interval& A, const DoubleWell& W);

/// a_tilde u(Q_Omega) + b_tilde int_Omega W(u).
double functional_F1(const GridFunction& u, const ScalingParams& p, const Interval& omega, const DoubleWell& W);

/// u(Q_A) + int_A W(u).
double functional_G(const GridFunction& u, const Interval& A, double s, const DoubleWell& W);

struct NormalizedLadder {
    std::vector<double> R;
    std::vector<double> value;  // G(u, (-R, 0)) / ln R
    double limit = 0.0;         // last entry
    double cauchy_gap = 0.0;    // relative change over the last step
};

NormalizedLadder functional_G_normalized(const GridFunction& u, const std::vector<double>& R_ladder, double s,
                                         const DoubleWell& W);

/// a_tilde [u(C, C) + 2 u(C, A \ C)] + b_tilde int_C W(u), C = A n Omega.
double functional_I(const GridFunction& u, const Interval& A, const Interval& omega, const ScalingParams& p,
                    const DoubleWell& W);

/// Relative residual of
///   F(w, A) - F(v, A) = F(w, B) - F(v, B)   when v = w outside A n B,
/// with F(u, A) = a_tilde u(Q_A) + b_tilde int_A W(u).
double check_energy_difference(const GridFunction& v, const GridFunction& w, const Interval& A,
                               const Interval& B, const ScalingParams& p, const DoubleWell& W);

/// Relative residual of F_eps(u_rho, A) = c F_{rho eps}(u, rho A), with
/// c = 1 (s > 1/2), |ln(rho eps)| / |ln eps| (s = 1/2), rho^{2s-1} (s < 1/2).
double check_rescaling(const GridFunction& u, double rho, const ScalingParams& p, const Interval& A,
                       const DoubleWell& W);

/// Relative residual of F_eps(u(./eps), A) = c G(u, A / eps), with
/// c = 1 (s > 1/2), 1/|ln eps| (s = 1/2), eps^{1-2s} (s < 1/2).
double check_g_rescale(const GridFunction& u, const ScalingParams& p, const Interval& A, const DoubleWell& W);

/// |(a^{1-2s} - b^{1-2s}) / (2s - 1) - ln(b / a)|.
double ln_limit_residual(double a, double b, double s);

/// Exact quadratic form of u(Q_region) for piecewise-linear functions on a
/// fixed grid with constant tails:  E(U) = U^T K U + 2 f^T U + e0.
/// When the kernel makes a jump at a truncation edge infinite (s >= 1/2),
/// the edge node is assumed equal to its tail value and the caller freezes it.
struct QuadraticModel {
    Eigen::MatrixXd K;
    Eigen::VectorXd f;
    double e0 = 0.0;
    std::vector<char> cell_in_region;
    Eigen::VectorXd mass;  // lumped int phi_i over region cells
    bool left_tail_in_region = false;
    bool right_tail_in_region = false;
    bool edge_continuity_left = false;   // assembled assuming U_0 = left tail
    bool edge_continuity_right = false;  // assembled assuming U_N = right tail

    double energy(const Eigen::VectorXd& U) const;
};

/// The region must be node-aligned: its finite ends are grid nodes, or it
/// covers a whole tail.
QuadraticModel assemble_Q(const Grid1D& grid, double left_tail, double right_tail, const Interval& region,
                          double s);

/// Sum over region cells of int W(u) (Gauss-3), optionally with its gradient.
double potential_on_cells(const Grid1D& grid, const std::vector<char>& cells, const Eigen::VectorXd& U,
                          const DoubleWell& W, Eigen::VectorXd* grad);

}  // namespace fraclayer
