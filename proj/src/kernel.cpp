#include "fraclayer/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <boost/math/quadrature/gauss.hpp>

#include "fraclayer/errors.hpp"
#include "fraclayer/funcrep.hpp"

namespace fraclayer::kernel {

namespace {

template <int N>
UnitGauss<N> make_unit_gauss() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& xs = G::abscissa();
    const auto& ws = G::weights();
    UnitGauss<N> r{};
    int k = 0;
    // abscissa() holds the non-negative half of the symmetric rule
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] == 0.0) {
            r.x[k] = 0.5;
            r.w[k++] = 0.5 * ws[i];
            continue;
        }
        r.x[k] = 0.5 * (1.0 - xs[i]);
        r.w[k++] = 0.5 * ws[i];
        r.x[k] = 0.5 * (1.0 + xs[i]);
        r.w[k++] = 0.5 * ws[i];
    }
    return r;
}

}  // namespace

const UnitGauss<3>& gauss3() {
    static const UnitGauss<3> g = make_unit_gauss<3>();
    return g;
}
const UnitGauss<4>& gauss4() {
    static const UnitGauss<4> g = make_unit_gauss<4>();
    return g;
}
const UnitGauss<6>& gauss6() {
    static const UnitGauss<6> g = make_unit_gauss<6>();
    return g;
}

Kernel::Kernel(double s_) : s(s_), p(2.0 * s_), beta(1.0 - 2.0 * s_) {}

double Kernel::phi(double r) const { return std::pow(r, -1.0 - p); }

double Kernel::P1(double r) const {
    if (r == 0.0) return -INFINITY;
    return -std::pow(r, -p) / p;
}

double Kernel::tail_weight(double d) const {
    if (d == 0.0) return INFINITY;
    return std::pow(d, -p) / p;
}

// E(r) = (r^beta - 1)/beta, -> ln r at beta = 0
double Kernel::P2(double r) const {
    if (r == 0.0) return beta > 0.0 ? 1.0 / (p * beta) : INFINITY;
    const double L = std::log(r);
    const double E = beta == 0.0 ? L : std::expm1(beta * L) / beta;
    return -E / p;
}

double Kernel::P3(double r) const {
    if (r == 0.0) return 0.0;
    const double L = std::log(r);
    const double F = beta == 0.0 ? (L - 1.0) : (std::expm1(beta * L) - beta) / (beta * (1.0 + beta));
    return -r * F / p;
}

double Kernel::P4(double r) const {
    if (r == 0.0) return 0.0;
    const double L = std::log(r);
    const double F = beta == 0.0
                         ? (2.0 * L - 3.0) / 4.0
                         : (2.0 * std::expm1(beta * L) - 3.0 * beta - beta * beta) /
                               (2.0 * beta * (1.0 + beta) * (2.0 + beta));
    return -r * r * F / p;
}

namespace {

Moments exact_moments(const Kernel& k, double h1, double h2, double g, bool need_low) {
    const double R = g + h1 + h2;
    Moments m;
    const double P2R = k.P2(R), P3R = k.P3(R), P4R = k.P4(R);
    const double P3g1 = k.P3(g + h1), P3g2 = k.P3(g + h2), P3g = k.P3(g);
    const double P4g1 = k.P4(g + h1), P4g2 = k.P4(g + h2), P4g = k.P4(g);
    const double P2g1 = k.P2(g + h1), P2g2 = k.P2(g + h2);
    if (need_low) {
        m.m00 = k.P2(g) - P2g1 - P2g2 + P2R;
        m.m10 = (h1 * P2R - P3R + P3g2) - (h1 * P2g1 - P3g1 + P3g);
        m.m01 = (h2 * P2R - P3R + P3g1) - (h2 * P2g2 - P3g2 + P3g);
    }
    // Q1(c) = int_0^h1 sigma^2 P1(c + sigma)
    auto Q1 = [&](double c, double P2c1, double P3c1, double P4c1, double P4c) {
        (void)c;
        return h1 * h1 * P2c1 - 2.0 * h1 * P3c1 + 2.0 * P4c1 - 2.0 * P4c;
    };
    auto Q2 = [&](double c, double P2c2, double P3c2, double P4c2, double P4c) {
        (void)c;
        return h2 * h2 * P2c2 - 2.0 * h2 * P3c2 + 2.0 * P4c2 - 2.0 * P4c;
    };
    m.m20 = Q1(g + h2, P2R, P3R, P4R, P4g2) - Q1(g, P2g1, P3g1, P4g1, P4g);
    m.m02 = Q2(g + h1, P2R, P3R, P4R, P4g1) - Q2(g, P2g2, P3g2, P4g2, P4g);
    m.m11 = h1 * h2 * P2R - (h1 + h2) * P3R + h2 * P3g2 + h1 * P3g1 + P4R - P4g2 - P4g1 + P4g;
    return m;
}

// Gauss over the short side [0, hs], exact over the long side [0, hl].
Moments semi_moments(const Kernel& k, double hs, double hl, double g) {
    const auto& G = gauss6();
    Moments m;
    for (int i = 0; i < 6; ++i) {
        const double sg = hs * G.x[i];
        const double w = hs * G.w[i];
        const double c = g + sg;
        const double P1c = k.P1(c), P1e = k.P1(c + hl);
        const double P2c = k.P2(c), P2e = k.P2(c + hl);
        const double T0 = P1e - P1c;
        const double T1 = hl * P1e - P2e + P2c;
        const double T2 = hl * hl * P1e - 2.0 * hl * P2e + 2.0 * k.P3(c + hl) - 2.0 * k.P3(c);
        m.m00 += w * T0;
        m.m10 += w * sg * T0;
        m.m20 += w * sg * sg * T0;
        m.m01 += w * T1;
        m.m11 += w * sg * T1;
        m.m02 += w * T2;
    }
    return m;
}

Moments gauss_moments(const Kernel& k, double h1, double h2, double g) {
    const auto& G = gauss4();
    Moments m;
    for (int i = 0; i < 4; ++i) {
        const double sg = h1 * G.x[i];
        for (int j = 0; j < 4; ++j) {
            const double tu = h2 * G.x[j];
            const double w = h1 * h2 * G.w[i] * G.w[j] * k.phi(g + sg + tu);
            m.m00 += w;
            m.m10 += w * sg;
            m.m01 += w * tu;
            m.m20 += w * sg * sg;
            m.m02 += w * tu * tu;
            m.m11 += w * sg * tu;
        }
    }
    return m;
}

}  // namespace

Moments pair_moments(const Kernel& k, double h1, double h2, double g, bool need_low) {
    const double hs = std::min(h1, h2), hb = std::max(h1, h2);
    Moments m;
    if (g <= kNearRatio * hs) {
        m = exact_moments(k, h1, h2, g, need_low);
    } else if (g <= kNearRatio * hb) {
        if (h1 <= h2) {
            m = semi_moments(k, h1, h2, g);
        } else {
            Moments t = semi_moments(k, h2, h1, g);
            m = {t.m00, t.m01, t.m10, t.m02, t.m20, t.m11};
        }
    } else {
        m = gauss_moments(k, h1, h2, g);
    }
    if (!need_low) m.m00 = m.m10 = m.m01 = 0.0;
    return m;
}

TailMoments tail_moments(const Kernel& k, double h, double g, bool need_a0) {
    TailMoments t;
    if (g <= kNearRatio * h) {
        const double P2e = k.P2(g + h), P3e = k.P3(g + h), P3g = k.P3(g);
        if (need_a0) t.a0 = -(P2e - k.P2(g));
        t.a1 = -(h * P2e - P3e + P3g);
        t.a2 = -(h * h * P2e - 2.0 * h * P3e + 2.0 * k.P4(g + h) - 2.0 * k.P4(g));
    } else {
        const auto& G = gauss6();
        for (int i = 0; i < 6; ++i) {
            const double sg = h * G.x[i];
            const double w = h * G.w[i] * k.tail_weight(g + sg);
            t.a0 += w;
            t.a1 += w * sg;
            t.a2 += w * sg * sg;
        }
    }
    if (!need_a0) t.a0 = 0.0;
    return t;
}

double same_cell(const Kernel& k, double h) {
    return 2.0 * std::pow(h, 3.0 - k.p) / ((2.0 - k.p) * (3.0 - k.p));
}

double rect(const Kernel& k, double h1, double h2, double g) {
    return k.P2(g) - k.P2(g + h1) - k.P2(g + h2) + k.P2(g + h1 + h2);
}

double two_halflines(const Kernel& k, double g) {
    if (!(k.p > 1.0) || g == 0.0) return INFINITY;
    return std::pow(g, 1.0 - k.p) / (k.p * (k.p - 1.0));
}

bool Segment::finite() const { return std::isfinite(a) && std::isfinite(b); }

double Segment::slope() const { return finite() ? (vb - va) / (b - a) : 0.0; }

namespace {

[[noreturn]] void divergent(double x) {
    throw DivergentEnergy("jump at x=" + fmt17(x) +
                          " inside the interaction region has infinite energy for s >= 1/2");
}

// cell [a,b] facing a half-line of constant c at gap g; sigma runs away
// from the half-line, starting at value `near` with slope `m`.
double cell_vs_halfline(const Kernel& k, double h, double g, double near, double m, double c, double where) {
    const double D = near - c;
    if (g == 0.0 && D != 0.0 && k.p >= 1.0) divergent(where);
    const TailMoments t = tail_moments(k, h, g, D != 0.0);
    return D * D * t.a0 + 2.0 * D * m * t.a1 + m * m * t.a2;
}

}  // namespace

double segment_self(const Kernel& k, const Segment& p) {
    if (!p.defined) throw UndefinedTail("interaction region reaches an undefined tail");
    if (!p.finite()) return 0.0;
    const double m = p.slope();
    if (m == 0.0) return 0.0;
    return m * m * same_cell(k, p.b - p.a);
}

double segment_pair(const Kernel& k, const Segment& p0, const Segment& q0) {
    if (!p0.defined || !q0.defined) throw UndefinedTail("interaction region reaches an undefined tail");
    const Segment& p = p0.a <= q0.a ? p0 : q0;
    const Segment& q = p0.a <= q0.a ? q0 : p0;
    const double g = q.a - p.b;
    const bool pf = p.finite(), qf = q.finite();

    if (pf && qf) {
        const double h1 = p.b - p.a, h2 = q.b - q.a;
        const double m = (p.vb - p.va) / h1, n = (q.vb - q.va) / h2;
        const double D = p.vb - q.va;
        if (g == 0.0 && D != 0.0 && k.p >= 1.0) divergent(p.b);
        if (m == 0.0 && n == 0.0) return D == 0.0 ? 0.0 : D * D * rect(k, h1, h2, g);
        // a long constant piece is a half-line minus a shifted half-line; the
        // moment antiderivatives would cancel catastrophically at that length
        if (n == 0.0 && h2 > kNearRatio * h1 && g <= kNearRatio * h2)
            return cell_vs_halfline(k, h1, g, p.vb, -m, q.va, p.b) -
                   cell_vs_halfline(k, h1, g + h2, p.vb, -m, q.va, p.b);
        if (m == 0.0 && h1 > kNearRatio * h2 && g <= kNearRatio * h1)
            return cell_vs_halfline(k, h2, g, q.va, n, p.vb, q.a) -
                   cell_vs_halfline(k, h2, g + h1, q.va, n, p.vb, q.a);
        const bool low = D != 0.0;
        const Moments M = pair_moments(k, h1, h2, g, low);
        double v = m * m * M.m20 + n * n * M.m02 + 2.0 * m * n * M.m11;
        if (low) v += D * D * M.m00 - 2.0 * D * m * M.m10 - 2.0 * D * n * M.m01;
        return v;
    }
    if (!pf && !qf) {
        // (-inf, p.b] against [q.a, inf)
        const double D = p.va - q.va;
        if (D == 0.0) return 0.0;
        const double v = two_halflines(k, g);
        if (!std::isfinite(v)) {
            throw DivergentEnergy("two facing half-lines with different values have infinite interaction for s <= 1/2");
        }
        return D * D * v;
    }
    if (!pf) {
        // half-line on the left, cell q on the right; sigma runs rightwards from q.a
        const double h = q.b - q.a;
        return cell_vs_halfline(k, h, g, q.va, (q.vb - q.va) / h, p.va, q.a);
    }
    // cell p on the left, half-line q on the right; sigma runs leftwards from p.b
    const double h = p.b - p.a;
    return cell_vs_halfline(k, h, g, p.vb, -(p.vb - p.va) / h, q.va, p.b);
}

}  // namespace fraclayer::kernel
