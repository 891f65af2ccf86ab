#pragma once

#include <array>

namespace fraclayer::kernel {

/// Antiderivative chain of phi(r) = r^{-1-2s}: P1' = phi, P2' = P1, ...
/// P2..P4 are shifted by constants so that s = 1/2 is a smooth limit
/// (logarithms appear as expm1 quotients). Only second differences of the
/// chain are ever used, so the shifts cancel.
struct Kernel {
    explicit Kernel(double s);

    double s;
    double p;     // 2s
    double beta;  // 1 - 2s

    double phi(double r) const;
    double P1(double r) const;
    double P2(double r) const;
    double P3(double r) const;
    double P4(double r) const;
    /// Integral of phi over [d, infinity).
    double tail_weight(double d) const;
};

/// Ratio gap/cell below which pair integrals use exact antiderivatives.
inline constexpr double kNearRatio = 8.0;

/// Moments  M_ab = int_0^h1 int_0^h2 sigma^a tau^b phi(g + sigma + tau)
/// for a + b <= 2, sigma measured leftwards from the gap, tau rightwards.
struct Moments {
    double m00 = 0, m10 = 0, m01 = 0, m20 = 0, m02 = 0, m11 = 0;
};

/// need_low = false skips m00, m10, m01 (only valid when their coefficient
/// vanishes, e.g. continuous data across a shared vertex).
Moments pair_moments(const Kernel& k, double h1, double h2, double g, bool need_low);

/// A_k = int_0^h sigma^k * tail_weight(g + sigma): a cell facing a half-line.
struct TailMoments {
    double a0 = 0, a1 = 0, a2 = 0;
};
TailMoments tail_moments(const Kernel& k, double h, double g, bool need_a0);

/// int_0^h int_0^h |x-y|^{1-2s}: same-cell integral of a linear piece per unit slope^2.
double same_cell(const Kernel& k, double h);

/// int_0^h1 int_0^h2 phi(g + sigma + tau) by the four-corner antiderivative.
double rect(const Kernel& k, double h1, double h2, double g);

/// Two facing half-lines at gap g; +infinity unless 2s > 1 and g > 0.
double two_halflines(const Kernel& k, double g);

/// Piece of a function on [a, b] (a may be -inf, b may be +inf; infinite
/// pieces are constant). `defined = false` marks an undefined tail.
struct Segment {
    double a, b;
    double va, vb;
    bool defined = true;

    bool finite() const;
    double slope() const;
};

/// int_p int_q |u(x) - u(y)|^2 phi(|x - y|) for two pieces of one function.
/// p == q (same object) gives the self-interaction. Throws DivergentEnergy
/// when a jump meets s >= 1/2, UndefinedTail for undefined pieces.
double segment_pair(const Kernel& k, const Segment& p, const Segment& q);
double segment_self(const Kernel& k, const Segment& p);

/// Gauss-Legendre rule on [0, 1].
template <int N>
struct UnitGauss {
    std::array<double, N> x;
    std::array<double, N> w;
};
const UnitGauss<3>& gauss3();
const UnitGauss<4>& gauss4();
const UnitGauss<6>& gauss6();

}  // namespace fraclayer::kernel
