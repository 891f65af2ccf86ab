#include "fraclayer/energy.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fraclayer/errors.hpp"
#include "fraclayer/kernel.hpp"
#include "fraclayer/parallel.hpp"

namespace fraclayer {

using kernel::Kernel;
using kernel::Segment;

Regime regime_of(double s) {
    if (std::abs(s - 0.5) < 1e-12) return Regime::half;
    return s < 0.5 ? Regime::below_half : Regime::above_half;
}

ScalingParams ScalingParams::make(double s, double eps) {
    if (!(s > 0.0 && s < 1.0)) throw RangeError("s must lie in (0,1)");
    if (!(eps > 0.0)) throw RangeError("eps must be positive");
    ScalingParams p;
    p.s = s;
    p.eps = eps;
    switch (regime_of(s)) {
        case Regime::below_half:
            p.a_eps = eps;
            p.b_eps = std::pow(eps, 1.0 - 2.0 * s);
            break;
        case Regime::half: {
            const double L = std::abs(std::log(eps));
            if (L == 0.0) throw RangeError("eps must differ from 1 at s = 1/2");
            p.a_eps = eps / L;
            p.b_eps = 1.0 / L;
            break;
        }
        case Regime::above_half:
            p.a_eps = std::pow(eps, 2.0 * s);
            p.b_eps = 1.0;
            break;
    }
    p.a_tilde = p.a_eps / eps;
    p.b_tilde = p.b_eps / eps;
    return p;
}

double ScalingParams::b_r(double r) const {
    if (regime() == Regime::half) return 1.0 / std::abs(std::log(r));
    return 1.0;
}

namespace {

// Pieces of u over the whole line, split at every finite cut so that each
// piece lies entirely inside or outside each query interval.
std::vector<Segment> build_segments(const GridFunction& u0, std::vector<double> cuts) {
    const GridFunction u = materialize_datum_tails(u0);
    const auto& n = u.grid.nodes;
    std::vector<Segment> raw;
    auto tail_seg = [](const TailModel& t, double a, double b) {
        if (t.kind == TailKind::none) return Segment{a, b, 0.0, 0.0, false};
        return Segment{a, b, t.value, t.value, true};
    };
    raw.push_back(tail_seg(u.left_tail, -kInf, n.front()));
    for (std::size_t c = 0; c + 1 < n.size(); ++c) {
        if (u.interp == Interp::linear)
            raw.push_back({n[c], n[c + 1], u.values[c], u.values[c + 1], true});
        else
            raw.push_back({n[c], n[c + 1], u.values[c], u.values[c], true});
    }
    raw.push_back(tail_seg(u.right_tail, n.back(), kInf));

    std::erase_if(cuts, [](double x) { return !std::isfinite(x); });
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Segment> out;
    out.reserve(raw.size() + cuts.size());
    for (const Segment& sg : raw) {
        Segment cur = sg;
        auto it = std::upper_bound(cuts.begin(), cuts.end(), cur.a);
        for (; it != cuts.end() && *it < cur.b; ++it) {
            const double x = *it;
            double vx = cur.va;
            if (cur.finite()) vx = cur.va + (x - cur.a) / (cur.b - cur.a) * (cur.vb - cur.va);
            out.push_back({cur.a, x, cur.va, vx, cur.defined});
            cur = {x, cur.b, vx, cur.vb, cur.defined};
        }
        out.push_back(cur);
    }
    return out;
}

bool inside(const Segment& sg, const Interval& I) { return I.lo <= sg.a && sg.b <= I.hi && I.lo < I.hi; }

// Sum over unordered segment pairs {i <= j} of weight * J(i, j), where the
// weight depends only on the class ids of the two segments.
template <int C>
double weighted_pair_sum(const Kernel& k, const std::vector<Segment>& segs, const std::vector<int>& cls,
                         const std::array<std::array<double, C>, C>& off, const std::array<double, C>& diag) {
    const std::size_t n = segs.size();
    return blocked_sum(n, 16, [&](std::size_t i) {
        double acc = 0.0;
        const double wd = diag[cls[i]];
        if (wd != 0.0) acc += wd * kernel::segment_self(k, segs[i]);
        for (std::size_t j = i + 1; j < n; ++j) {
            const double w = off[cls[i]][cls[j]];
            if (w != 0.0) acc += w * kernel::segment_pair(k, segs[i], segs[j]);
        }
        return acc;
    });
}

void check_s(double s) {
    if (!(s > 0.0 && s < 1.0)) throw RangeError("s must lie in (0,1)");
}

double F_local(const GridFunction& u, const ScalingParams& p, const Interval& A, const DoubleWell& W) {
    return p.a_tilde * energy_Q(u, A, p.s) + p.b_tilde * potential_integral(u, A, W);
}

double rel(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace

double interaction(const GridFunction& u, const Interval& A, const Interval& B, double s) {
    check_s(s);
    const Kernel k(s);
    auto segs = build_segments(u, {A.lo, A.hi, B.lo, B.hi});
    std::vector<int> cls(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i)
        cls[i] = (inside(segs[i], A) ? 1 : 0) + (inside(segs[i], B) ? 2 : 0);
    std::array<std::array<double, 4>, 4> off{};
    std::array<double, 4> diag{};
    for (int a = 0; a < 4; ++a) {
        diag[a] = ((a & 1) && (a & 2)) ? 1.0 : 0.0;
        for (int b = 0; b < 4; ++b)
            off[a][b] = (((a & 1) && (b & 2)) ? 1.0 : 0.0) + (((b & 1) && (a & 2)) ? 1.0 : 0.0);
    }
    return weighted_pair_sum<4>(k, segs, cls, off, diag);
}

double energy_Q(const GridFunction& u, const Interval& omega, double s) {
    check_s(s);
    const Kernel k(s);
    auto segs = build_segments(u, {omega.lo, omega.hi});
    std::vector<int> cls(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i) cls[i] = inside(segs[i], omega) ? 1 : 0;
    const std::array<std::array<double, 2>, 2> off{{{0.0, 2.0}, {2.0, 2.0}}};
    const std::array<double, 2> diag{0.0, 1.0};
    return weighted_pair_sum<2>(k, segs, cls, off, diag);
}

double potential_integral(const GridFunction& u, const Interval& A, const DoubleWell& W) {
    const auto segs = build_segments(u, {A.lo, A.hi});
    const auto& G = kernel::gauss3();
    double total = 0.0;
    for (const Segment& sg : segs) {
        if (!inside(sg, A)) continue;
        if (!sg.defined) throw UndefinedTail("potential integral reaches an undefined tail");
        if (!sg.finite()) {
            if (std::abs(W(sg.va)) > 1e-14)
                throw DivergentEnergy("potential integral over an unbounded tail away from the wells");
            continue;
        }
        const double h = sg.b - sg.a;
        for (int q = 0; q < 3; ++q) total += h * G.w[q] * W(sg.va + G.x[q] * (sg.vb - sg.va));
    }
    return total;
}

double functional_F1(const GridFunction& u, const ScalingParams& p, const Interval& omega, const DoubleWell& W) {
    return F_local(u, p, omega, W);
}

double functional_G(const GridFunction& u, const Interval& A, double s, const DoubleWell& W) {
    return energy_Q(u, A, s) + potential_integral(u, A, W);
}

NormalizedLadder functional_G_normalized(const GridFunction& u, const std::vector<double>& R_ladder, double s,
                                         const DoubleWell& W) {
    if (R_ladder.empty()) throw PreconditionViolated("R ladder is empty");
    NormalizedLadder out;
    for (std::size_t i = 0; i < R_ladder.size(); ++i) {
        const double R = R_ladder[i];
        if (!(R > 1.0) || (i > 0 && !(R > R_ladder[i - 1])))
            throw PreconditionViolated("R ladder must be increasing and above 1");
        out.R.push_back(R);
        out.value.push_back(functional_G(u, {-R, 0.0}, s, W) / std::log(R));
    }
    out.limit = out.value.back();
    if (out.value.size() >= 2) out.cauchy_gap = rel(out.value.back(), out.value[out.value.size() - 2]);
    return out;
}

double functional_I(const GridFunction& u, const Interval& A, const Interval& omega, const ScalingParams& p,
                    const DoubleWell& W) {
    const Interval C{std::max(A.lo, omega.lo), std::min(A.hi, omega.hi)};
    if (!(C.lo < C.hi)) throw PreconditionViolated("A and Omega do not overlap");
    const Kernel k(p.s);
    auto segs = build_segments(u, {A.lo, A.hi, C.lo, C.hi});
    // class 0: outside A, 1: in C, 2: in A \ C
    std::vector<int> cls(segs.size());
    for (std::size_t i = 0; i < segs.size(); ++i)
        cls[i] = inside(segs[i], C) ? 1 : (inside(segs[i], A) ? 2 : 0);
    const std::array<std::array<double, 3>, 3> off{{{0.0, 0.0, 0.0}, {0.0, 2.0, 2.0}, {0.0, 2.0, 0.0}}};
    const std::array<double, 3> diag{0.0, 1.0, 0.0};
    const double kin = weighted_pair_sum<3>(k, segs, cls, off, diag);
    return p.a_tilde * kin + p.b_tilde * potential_integral(u, C, W);
}

double check_energy_difference(const GridFunction& v, const GridFunction& w, const Interval& A,
                               const Interval& B, const ScalingParams& p, const DoubleWell& W) {
    const Interval C{std::max(A.lo, B.lo), std::min(A.hi, B.hi)};
    if (v.interp != w.interp || v.grid.nodes != w.grid.nodes || v.values.size() != w.values.size())
        throw PreconditionViolated("energy difference needs functions on one grid");
    auto same_tail = [](const TailModel& a, const TailModel& b) {
        return a.kind == b.kind && a.kind != TailKind::datum && a.value == b.value;
    };
    if (!same_tail(v.left_tail, w.left_tail) || !same_tail(v.right_tail, w.right_tail))
        throw PreconditionViolated("v and w must share constant tails");
    const auto& n = v.grid.nodes;
    for (std::size_t i = 0; i < v.values.size(); ++i) {
        bool outside;
        if (v.interp == Interp::linear)
            outside = !(C.lo < n[i] && n[i] < C.hi);
        else
            outside = !(C.lo <= n[i] && n[i + 1] <= C.hi);
        if (outside && v.values[i] != w.values[i])
            throw PreconditionViolated("v and w differ outside the intersection at x=" + fmt17(n[i]));
    }
    const double dA = F_local(w, p, A, W) - F_local(v, p, A, W);
    const double dB = F_local(w, p, B, W) - F_local(v, p, B, W);
    return rel(dA, dB);
}

double check_rescaling(const GridFunction& u, double rho, const ScalingParams& p, const Interval& A,
                       const DoubleWell& W) {
    if (!(rho > 0.0)) throw PreconditionViolated("rho must be positive");
    const ScalingParams q = ScalingParams::make(p.s, rho * p.eps);
    double factor = 1.0;
    switch (p.regime()) {
        case Regime::above_half: factor = 1.0; break;
        case Regime::half: factor = std::abs(std::log(rho * p.eps)) / std::abs(std::log(p.eps)); break;
        case Regime::below_half: factor = std::pow(rho, 2.0 * p.s - 1.0); break;
    }
    const double lhs = F_local(rescale(u, rho), p, A, W);
    const double rhs = factor * F_local(u, q, {rho * A.lo, rho * A.hi}, W);
    return rel(lhs, rhs);
}

double check_g_rescale(const GridFunction& u, const ScalingParams& p, const Interval& A, const DoubleWell& W) {
    double factor = 1.0;
    switch (p.regime()) {
        case Regime::above_half: factor = 1.0; break;
        case Regime::half: factor = 1.0 / std::abs(std::log(p.eps)); break;
        case Regime::below_half: factor = std::pow(p.eps, 1.0 - 2.0 * p.s); break;
    }
    const double lhs = F_local(rescale(u, 1.0 / p.eps), p, A, W);
    const double rhs = factor * functional_G(u, {A.lo / p.eps, A.hi / p.eps}, p.s, W);
    return rel(lhs, rhs);
}

double ln_limit_residual(double a, double b, double s) {
    if (!(a > 0.0 && b > a)) throw PreconditionViolated("ln-limit needs 0 < a < b");
    const double q = (std::pow(a, 1.0 - 2.0 * s) - std::pow(b, 1.0 - 2.0 * s)) / (2.0 * s - 1.0);
    return std::abs(q - std::log(b / a));
}

double QuadraticModel::energy(const Eigen::VectorXd& U) const { return U.dot(K * U) + 2.0 * f.dot(U) + e0; }

namespace {

using Local4 = std::array<double, 16>;

// Local 4x4 form over (u_i, u_i+1, u_j, u_j+1) of the pair integral of two
// linear cells; the jump D = u_i+1 - u_j enters only for separated cells.
Local4 local_pair(const kernel::Moments& M, double h1, double h2, bool adjacent) {
    const std::array<double, 4> em{-1.0 / h1, 1.0 / h1, 0.0, 0.0};
    const std::array<double, 4> en{0.0, 0.0, -1.0 / h2, 1.0 / h2};
    const std::array<double, 4> eD{0.0, 1.0, -1.0, 0.0};
    Local4 L{};
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            double v = M.m20 * em[a] * em[b] + M.m02 * en[a] * en[b] + M.m11 * (em[a] * en[b] + en[a] * em[b]);
            if (!adjacent)
                v += M.m00 * eD[a] * eD[b] - M.m10 * (eD[a] * em[b] + em[a] * eD[b]) -
                     M.m01 * (eD[a] * en[b] + en[a] * eD[b]);
            L[a * 4 + b] = v;
        }
    return L;
}

bool is_uniform(const std::vector<double>& x) {
    const double h = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i)
        if (std::abs((x[i] - x[i - 1]) - h) > 1e-12 * std::max(1.0, std::abs(h))) return false;
    return true;
}

}  // namespace

QuadraticModel assemble_Q(const Grid1D& grid, double cl, double cr, const Interval& region, double s) {
    check_s(s);
    grid.validate();
    const Kernel k(s);
    const auto& x = grid.nodes;
    const std::size_t N = x.size();
    const std::size_t C = N - 1;

    auto aligned = [&](double e) {
        if (!std::isfinite(e) || e <= x.front() || e >= x.back()) return true;
        return std::binary_search(x.begin(), x.end(), e);
    };
    if ((std::isfinite(region.lo) && region.lo < x.front()) || (std::isfinite(region.hi) && region.hi > x.back()))
        throw PreconditionViolated("assembly region cuts through a tail");
    if (!aligned(region.lo) || !aligned(region.hi))
        throw PreconditionViolated("assembly region ends must be grid nodes");

    QuadraticModel Q;
    Q.K = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    Q.f = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
    Q.mass = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(N));
    Q.cell_in_region.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        Q.cell_in_region[c] = region.lo <= x[c] && x[c + 1] <= region.hi;
        if (Q.cell_in_region[c]) {
            const double h = x[c + 1] - x[c];
            Q.mass[static_cast<Eigen::Index>(c)] += 0.5 * h;
            Q.mass[static_cast<Eigen::Index>(c + 1)] += 0.5 * h;
        }
    }
    Q.left_tail_in_region = region.lo == -kInf;
    Q.right_tail_in_region = region.hi == kInf;
    const auto& in = Q.cell_in_region;

    auto scatter = [&](const Local4& L, std::size_t i, std::size_t j, double w) {
        const std::array<Eigen::Index, 4> idx{static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i + 1),
                                              static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j + 1)};
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) Q.K(idx[a], idx[b]) += w * L[a * 4 + b];
    };

    // same-cell terms
    for (std::size_t c = 0; c < C; ++c) {
        if (!in[c]) continue;
        const double h = x[c + 1] - x[c];
        const double v = kernel::same_cell(k, h) / (h * h);
        const auto i = static_cast<Eigen::Index>(c);
        Q.K(i, i) += v;
        Q.K(i + 1, i + 1) += v;
        Q.K(i, i + 1) -= v;
        Q.K(i + 1, i) -= v;
    }

    // cell-cell pairs
    if (is_uniform(x)) {
        const double h = x[1] - x[0];
        std::vector<Local4> by_offset(C);
        parallel_blocks(C, [&](std::size_t d) {
            if (d == 0) return;
            const auto M = kernel::pair_moments(k, h, h, static_cast<double>(d - 1) * h, d > 1);
            by_offset[d] = local_pair(M, h, h, d == 1);
        });
        for (std::size_t i = 0; i < C; ++i)
            for (std::size_t j = i + 1; j < C; ++j)
                if (in[i] || in[j]) scatter(by_offset[j - i], i, j, 2.0);
    } else {
        const std::size_t chunk = 32;
        std::vector<std::vector<Local4>> rows(chunk);
        for (std::size_t r0 = 0; r0 < C; r0 += chunk) {
            const std::size_t r1 = std::min(C, r0 + chunk);
            parallel_blocks(r1 - r0, [&](std::size_t b) {
                const std::size_t i = r0 + b;
                auto& row = rows[b];
                row.assign(C - i, Local4{});
                const double h1 = x[i + 1] - x[i];
                for (std::size_t j = i + 1; j < C; ++j) {
                    if (!(in[i] || in[j])) continue;
                    const double h2 = x[j + 1] - x[j];
                    const bool adj = j == i + 1;
                    const auto M = kernel::pair_moments(k, h1, h2, x[j] - x[i + 1], !adj);
                    row[j - i] = local_pair(M, h1, h2, adj);
                }
            });
            for (std::size_t i = r0; i < r1; ++i)
                for (std::size_t j = i + 1; j < C; ++j)
                    if (in[i] || in[j]) scatter(rows[i - r0][j - i], i, j, 2.0);
        }
    }

    // cells against the constant tails: D = u_near - c, slope directed away
    const bool cont = k.p >= 1.0;
    auto tail_term = [&](std::size_t c, bool left_tail) {
        const double tv = left_tail ? cl : cr;
        const double h = x[c + 1] - x[c];
        const double g = left_tail ? x[c] - x.front() : x.back() - x[c + 1];
        const bool edge_cell = left_tail ? c == 0 : c + 1 == C;
        const bool skip_low = edge_cell && cont;
        const auto t = kernel::tail_moments(k, h, g, !skip_low);
        std::array<double, 2> d0, dm;
        if (left_tail) {
            d0 = {1.0, 0.0};
            dm = {-1.0 / h, 1.0 / h};
        } else {
            d0 = {0.0, 1.0};
            dm = {1.0 / h, -1.0 / h};
        }
        const double w = 2.0;
        const std::array<Eigen::Index, 2> idx{static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c + 1)};
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                double v = t.a2 * dm[a] * dm[b];
                if (!skip_low) v += t.a0 * d0[a] * d0[b] + t.a1 * (d0[a] * dm[b] + dm[a] * d0[b]);
                Q.K(idx[a], idx[b]) += w * v;
            }
            if (!skip_low) Q.f(idx[a]) += w * (-t.a0 * tv * d0[a] - t.a1 * tv * dm[a]);
        }
        if (!skip_low) Q.e0 += w * t.a0 * tv * tv;
        if (skip_low) (left_tail ? Q.edge_continuity_left : Q.edge_continuity_right) = true;
    };
    for (std::size_t c = 0; c < C; ++c) {
        if (in[c] || Q.left_tail_in_region) tail_term(c, true);
        if (in[c] || Q.right_tail_in_region) tail_term(c, false);
    }

    if ((Q.left_tail_in_region || Q.right_tail_in_region) && cl != cr) {
        const double v = kernel::two_halflines(k, x.back() - x.front());
        if (!std::isfinite(v))
            throw DivergentEnergy("tails with different values have infinite interaction for s <= 1/2");
        Q.e0 += 2.0 * (cl - cr) * (cl - cr) * v;
    }
    return Q;
}

double potential_on_cells(const Grid1D& grid, const std::vector<char>& cells, const Eigen::VectorXd& U,
                          const DoubleWell& W, Eigen::VectorXd* grad) {
    const auto& x = grid.nodes;
    const auto& G = kernel::gauss3();
    if (grad) grad->setZero(U.size());
    double total = 0.0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (!cells[c]) continue;
        const double h = x[c + 1] - x[c];
        const auto i = static_cast<Eigen::Index>(c);
        const double ua = U[i], ub = U[i + 1];
        for (int q = 0; q < 3; ++q) {
            const double t = G.x[q];
            const double uq = ua + t * (ub - ua);
            total += h * G.w[q] * W.eval(uq);
            if (grad) {
                const double d = h * G.w[q] * W.deriv(uq);
                (*grad)[i] += (1.0 - t) * d;
                (*grad)[i + 1] += t * d;
            }
        }
    }
    return total;
}

}  // namespace fraclayer
