#include "fraclayer/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fraclayer/errors.hpp"
#include "fraclayer/parallel.hpp"

namespace fraclayer {

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

std::size_t node_index(const Grid1D& g, double x, double tol) {
    const auto& n = g.nodes;
    auto it = std::lower_bound(n.begin(), n.end(), x - tol);
    if (it == n.end() || std::abs(*it - x) > tol)
        throw PreconditionViolated("x=" + fmt17(x) + " is not a grid node");
    return static_cast<std::size_t>(it - n.begin());
}

SolveOptions layer_polish(SolveOptions o) {
    if (o.polish_pg <= 0.0) o.polish_pg = 1e-3 * o.tol_pg;
    return o;
}

}  // namespace

ConstraintSet ConstraintSet::free_box(std::size_t n, double lo, double hi) {
    ConstraintSet C;
    const auto m = static_cast<Eigen::Index>(n);
    C.lower = Eigen::VectorXd::Constant(m, lo);
    C.upper = Eigen::VectorXd::Constant(m, hi);
    C.frozen.assign(n, 0);
    C.frozen_values = Eigen::VectorXd::Zero(m);
    return C;
}

void ConstraintSet::freeze(std::size_t i, double v) {
    frozen[i] = 1;
    frozen_values[static_cast<Eigen::Index>(i)] = v;
}

void ConstraintSet::validate() const {
    const auto n = lower.size();
    if (upper.size() != n || frozen_values.size() != n || static_cast<Eigen::Index>(frozen.size()) != n)
        throw PreconditionViolated("constraint arrays disagree in length");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (lower[i] > upper[i]) throw PreconditionViolated("empty box at node " + std::to_string(i));
        if (frozen[static_cast<std::size_t>(i)] &&
            (frozen_values[i] < lower[i] - 1e-15 || frozen_values[i] > upper[i] + 1e-15))
            throw PreconditionViolated("frozen value outside its box at node " + std::to_string(i));
    }
}

Eigen::VectorXd ConstraintSet::project(const Eigen::VectorXd& U) const {
    Eigen::VectorXd P = U.cwiseMax(lower).cwiseMin(upper);
    for (std::size_t i = 0; i < frozen.size(); ++i)
        if (frozen[i]) P[static_cast<Eigen::Index>(i)] = frozen_values[static_cast<Eigen::Index>(i)];
    return P;
}

void write_trace(const std::string& path, const std::vector<TraceRow>& trace) {
    std::ofstream out(path);
    if (!out) throw PreconditionViolated("cannot write " + path);
    out << "iter,energy,pgnorm\n";
    for (const auto& r : trace) out << r.iter << ',' << fmt17(r.energy) << ',' << fmt17(r.pgnorm) << '\n';
}

double Objective::value(const Eigen::VectorXd& U, Eigen::VectorXd* grad) const {
    const Eigen::VectorXd KU = Q->K * U;
    Eigen::VectorXd gp;
    const double pot = potential_on_cells(*grid, Q->cell_in_region, U, *W, grad ? &gp : nullptr);
    if (grad) *grad = 2.0 * a * (KU + Q->f) + b * gp;
    return a * (U.dot(KU) + 2.0 * Q->f.dot(U) + Q->e0) + b * pot;
}

MinimizeResult minimize_pg(const Objective& obj, const ConstraintSet& C, const Eigen::VectorXd& U0,
                           const SolveOptions& opts) {
    C.validate();
    const QuadraticModel& Q = *obj.Q;
    const auto n = U0.size();
    Eigen::VectorXd U = C.project(U0);

    // diagonal metric: stiffness diagonal plus the curvature of W at the wells
    Eigen::VectorXd D(n), m(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        D[i] = 2.0 * obj.a * Q.K(i, i) + 2.0 * obj.b * Q.mass[i];
        if (!(D[i] > 0.0)) D[i] = 1.0;
        m[i] = Q.mass[i] > 0.0 ? Q.mass[i] : D[i];
    }

    auto potential = [&](const Eigen::VectorXd& V, Eigen::VectorXd* g) {
        return potential_on_cells(*obj.grid, Q.cell_in_region, V, *obj.W, g);
    };
    auto pgnorm = [&](const Eigen::VectorXd& V, const Eigen::VectorXd& g) {
        const Eigen::VectorXd step = C.project(V - g.cwiseQuotient(m)) - V;
        return step.cwiseAbs().maxCoeff();
    };

    Eigen::VectorXd KU = Q.K * U;
    double q = U.dot(KU) + 2.0 * Q.f.dot(U);
    Eigen::VectorXd gpot;
    double pot = potential(U, &gpot);
    double F = obj.a * (q + Q.e0) + obj.b * pot;
    Eigen::VectorXd g = 2.0 * obj.a * (KU + Q.f) + obj.b * gpot;

    MinimizeResult res;
    double alpha = 1.0;
    int stall = 0;
    double pg = pgnorm(U, g);
    res.trace.push_back({0, F, pg});
    int it = 0;
    for (; it < opts.max_iters && pg > opts.tol_pg; ++it) {
        const Eigen::VectorXd d = C.project(U - alpha * g.cwiseQuotient(D)) - U;
        const double gd = g.dot(d);
        if (!(gd < 0.0)) {
            if (alpha > 1e-12) {
                alpha = 1e-3 * alpha;
                continue;
            }
            break;
        }
        const Eigen::VectorXd Kd = Q.K * d;
        const double dKd = d.dot(Kd), dKUf = d.dot(KU + Q.f);
        double lambda = 1.0, Fnew = F, qnew = q, potnew = pot;
        bool accepted = false;
        Eigen::VectorXd Unew;
        for (int bt = 0; bt < 60; ++bt) {
            Unew = U + lambda * d;
            qnew = q + 2.0 * lambda * dKUf + lambda * lambda * dKd;
            potnew = potential(Unew, nullptr);
            Fnew = obj.a * (qnew + Q.e0) + obj.b * potnew;
            if (Fnew <= F + 1e-4 * lambda * gd) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;

        const Eigen::VectorXd sv = lambda * d;
        U = Unew;
        if ((it + 1) % 200 == 0) {
            KU = Q.K * U;
            q = U.dot(KU) + 2.0 * Q.f.dot(U);
        } else {
            KU += lambda * Kd;
            q = qnew;
        }
        pot = potential(U, &gpot);
        const double Fold = F;
        F = obj.a * (q + Q.e0) + obj.b * pot;
        const Eigen::VectorXd gnew = 2.0 * obj.a * (KU + Q.f) + obj.b * gpot;
        const Eigen::VectorXd y = gnew - g;
        g = gnew;
        const double sy = sv.dot(y), sDs = sv.cwiseProduct(D).dot(sv);
        alpha = sy > 0.0 ? std::clamp(sDs / sy, 1e-10, 1e10) : 1e4;
        pg = pgnorm(U, g);
        res.trace.push_back({it + 1, F, pg});

        if (Fold - F <= opts.tol_energy * std::max(1.0, std::abs(F)))
            ++stall;
        else
            stall = 0;
        if (stall >= 200) {
            ++it;
            break;
        }
    }
    // first-order stall (flat translation-like modes): projected Newton on
    // the free set; the potential Hessian is tridiagonal, so three coloured
    // gradient differences recover it exactly up to the difference step
    const double target = opts.polish_pg > 0.0 ? std::min(opts.tol_pg, opts.polish_pg) : opts.tol_pg;
    for (int nt = 0; nt < 50 && pg > target; ++nt, ++it) {
        std::vector<Eigen::Index> fr;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (C.frozen[static_cast<std::size_t>(i)]) continue;
            if (U[i] <= C.lower[i] && g[i] > 0.0) continue;
            if (U[i] >= C.upper[i] && g[i] < 0.0) continue;
            fr.push_back(i);
        }
        if (fr.empty()) break;
        const auto nf = static_cast<Eigen::Index>(fr.size());
        Eigen::MatrixXd H(nf, nf);
        for (Eigen::Index r = 0; r < nf; ++r)
            for (Eigen::Index c = 0; c < nf; ++c) H(r, c) = 2.0 * obj.a * Q.K(fr[r], fr[c]);
        const double t = 1e-6;
        Eigen::VectorXd gp1, gm1;
        for (int colour = 0; colour < 3; ++colour) {
            Eigen::VectorXd Vp = U, Vm = U;
            for (Eigen::Index i = colour; i < n; i += 3) {
                Vp[i] += t;
                Vm[i] -= t;
            }
            potential(Vp, &gp1);
            potential(Vm, &gm1);
            const Eigen::VectorXd col = (gp1 - gm1) / (2.0 * t);
            for (Eigen::Index r = 0; r < nf; ++r) {
                const Eigen::Index i = fr[r];
                for (Eigen::Index c = std::max<Eigen::Index>(0, r - 2); c < std::min(nf, r + 3); ++c) {
                    const Eigen::Index j = fr[c];
                    if (j % 3 == colour && std::abs(i - j) <= 1) H(r, c) += obj.b * col[i];
                }
            }
        }
        Eigen::VectorXd gf(nf);
        for (Eigen::Index r = 0; r < nf; ++r) gf[r] = g[fr[r]];
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
        const Eigen::VectorXd df = -ldlt.solve(gf);
        Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
        for (Eigen::Index r = 0; r < nf; ++r) d[fr[r]] = df[r];
        bool accepted = false;
        Eigen::VectorXd Unew;
        double Fnew = F;
        for (double lambda = 1.0; lambda > 1e-12; lambda *= 0.5) {
            Unew = C.project(U + lambda * d);
            const double gs = g.dot(Unew - U);
            if (!(gs < 0.0)) continue;
            Fnew = obj.value(Unew, nullptr);
            if (Fnew <= F + 1e-4 * gs) {
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        U = Unew;
        F = obj.value(U, &g);
        pg = pgnorm(U, g);
        res.trace.push_back({it + 1, F, pg});
    }
    res.U = U;
    res.energy = F;
    res.pgnorm = pg;
    res.iters = it;
    res.converged = pg <= opts.tol_pg;
    return res;
}

DecayFit fit_decay(const GridFunction& u, double target, const Interval& window, double origin) {
    DecayFit fit;
    fit.window = window;
    std::vector<double> X, Y;
    const auto& x = u.grid.nodes;
    const std::size_t n = u.interp == Interp::linear ? x.size() : u.values.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = u.interp == Interp::linear ? x[i] : 0.5 * (x[i] + x[i + 1]);
        if (!window.contains(xi) && xi != window.lo && xi != window.hi) continue;
        const double d = std::abs(u.values[i] - target);
        const double r = std::abs(xi - origin);
        if (d <= 0.0 || r <= 0.0) continue;
        X.push_back(std::log(r));
        Y.push_back(std::log(d));
    }
    if (X.size() < 3) throw PreconditionViolated("decay fit window holds fewer than 3 usable nodes");
    const double mx = std::accumulate(X.begin(), X.end(), 0.0) / static_cast<double>(X.size());
    const double my = std::accumulate(Y.begin(), Y.end(), 0.0) / static_cast<double>(Y.size());
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
        sxx += (X[i] - mx) * (X[i] - mx);
        sxy += (X[i] - mx) * (Y[i] - my);
        syy += (Y[i] - my) * (Y[i] - my);
    }
    const double slope = sxy / sxx;
    fit.exponent = -slope;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

int sign_changes(const std::vector<double>& v) {
    int changes = 0, last = 0;
    for (double x : v) {
        const int sg = x > 0 ? 1 : (x < 0 ? -1 : 0);
        if (sg == 0) continue;
        if (last != 0 && sg != last) ++changes;
        last = sg;
    }
    return changes;
}

double sup_distance(const GridFunction& u, const GridFunction& v, const Interval& window) {
    double d = 0.0;
    auto scan = [&](const Grid1D& g) {
        for (double x : g.nodes)
            if (x >= window.lo && x <= window.hi) d = std::max(d, std::abs(eval(u, x) - eval(v, x)));
    };
    scan(u.grid);
    scan(v.grid);
    return d;
}

bool is_monotone(const GridFunction& u, double tol) {
    for (std::size_t i = 1; i < u.values.size(); ++i)
        if (u.values[i] < u.values[i - 1] - tol) return false;
    return true;
}

void require_converged(const LayerProfile& p) {
    if (!p.converged)
        throw NotConverged("projected gradient stopped at " + fmt17(p.pgnorm) + " after " + std::to_string(p.iters) +
                           " iterations");
}

namespace {

void check_s_open(double s) {
    if (!(s > 0.0 && s < 1.0)) throw RangeError("s must lie in (0,1)");
}

}  // namespace

LayerProfile solve_heteroclinic(double s, const DoubleWell& W, const Grid1D& grid, const SolveOptions& opts) {
    check_s_open(s);
    grid.validate();
    if (opts.inits.empty()) throw PreconditionViolated("at least one initializer is required");
    const double L = std::max(-grid.left(), grid.right());
    if (!(grid.left() < 0.0 && grid.right() > 0.0)) throw PreconditionViolated("heteroclinic grid must straddle 0");
    const Interval region = s > 0.5 && regime_of(s) == Regime::above_half ? Interval{-kInf, kInf}
                                                                          : Interval{grid.left(), grid.right()};
    const QuadraticModel Q = assemble_Q(grid, -1.0, 1.0, region, s);
    const std::size_t N = grid.size();
    ConstraintSet C = ConstraintSet::free_box(N, -1.0, 1.0);
    C.freeze(0, -1.0);
    C.freeze(N - 1, 1.0);
    bool pinned = false;
    const auto& x = grid.nodes;
    const auto it0 = std::lower_bound(x.begin(), x.end(), -1e-12 * L);
    if (it0 != x.end() && std::abs(*it0) <= 1e-12 * L) {
        C.freeze(static_cast<std::size_t>(it0 - x.begin()), 0.0);
        pinned = true;
    }

    const std::string init = opts.inits.front();
    Eigen::VectorXd U0(static_cast<Eigen::Index>(N));
    for (std::size_t i = 0; i < N; ++i) {
        const double xi = x[i];
        U0[static_cast<Eigen::Index>(i)] = init == "ramp" ? std::clamp(xi / 5.0, -1.0, 1.0) : std::tanh(xi);
    }
    const Objective obj{&Q, &grid, &W, 1.0, 1.0};
    const MinimizeResult r = minimize_pg(obj, C, U0, layer_polish(opts));

    GridFunction u(grid, to_std(r.U), TailModel::constant(-1.0), TailModel::constant(1.0));
    // interpolated zero
    double x0 = 0.0;
    for (std::size_t i = 0; i + 1 < N; ++i) {
        const double a = u.values[i], b = u.values[i + 1];
        if (a <= 0.0 && b > 0.0) {
            x0 = a == 0.0 ? x[i] : x[i] - a * (x[i + 1] - x[i]) / (b - a);
            break;
        }
    }
    if (!pinned && x0 != 0.0) u = translate(u, x0);

    LayerProfile out;
    out.profile = u;
    out.s = s;
    out.sign = 0;
    out.energy = r.energy;
    out.normalization = pinned ? "u(0)=0 pinned at the centre node" : "u(0)=0 by re-centring the interpolated zero";
    if (region.lo != -kInf) out.normalization += "; energy over the truncated window";
    out.converged = r.converged;
    out.iters = r.iters;
    out.pgnorm = r.pgnorm;
    out.trace = r.trace;
    out.initializer = init;
    out.decay_fit = fit_decay(u, 1.0, {L / 4.0, L / 2.0});
    return out;
}

std::vector<LayerProfile> solve_boundary_layer_all(double s, double gamma, int sign, const DoubleWell& W,
                                                   const Grid1D& grid, const SolveOptions& opts) {
    check_s_open(s);
    if (!(std::abs(gamma) < 1.0)) throw GammaAtWell("gamma must lie in (-1,1); got " + fmt17(gamma));
    if (sign != 1 && sign != -1) throw PreconditionViolated("sign must be +-1");
    if (opts.inits.empty()) throw PreconditionViolated("at least one initializer is required");
    grid.validate();
    if (std::abs(grid.right()) > 1e-12 || !(grid.left() < 0.0))
        throw PreconditionViolated("boundary-layer grid must be [-L, 0]");
    const double L = -grid.left();
    const bool above = regime_of(s) == Regime::above_half;
    const Interval region = above ? Interval{-kInf, 0.0} : Interval{grid.left(), 0.0};
    const QuadraticModel Q = assemble_Q(grid, sign, gamma, region, s);
    const std::size_t N = grid.size();
    ConstraintSet C = sign < 0 ? ConstraintSet::free_box(N, -1.0, gamma) : ConstraintSet::free_box(N, gamma, 1.0);
    C.freeze(0, sign);
    C.freeze(N - 1, gamma);
    const Objective obj{&Q, &grid, &W, 1.0, 1.0};
    const auto& x = grid.nodes;

    std::vector<LayerProfile> out(opts.inits.size());
    parallel_blocks(opts.inits.size(), [&](std::size_t k) {
        const std::string& init = opts.inits[k];
        Eigen::VectorXd U0(static_cast<Eigen::Index>(N));
        for (std::size_t i = 0; i < N; ++i) {
            const double t = init == "ramp" ? std::min(1.0, -x[i] / 10.0) : std::tanh(-x[i]);
            U0[static_cast<Eigen::Index>(i)] = gamma + (sign - gamma) * t;
        }
        const MinimizeResult r = minimize_pg(obj, C, U0, layer_polish(opts));
        LayerProfile& p = out[k];
        p.profile = GridFunction(grid, to_std(r.U), TailModel::constant(sign), TailModel::constant(gamma));
        p.s = s;
        p.gamma = gamma;
        p.sign = sign;
        p.converged = r.converged;
        p.iters = r.iters;
        p.pgnorm = r.pgnorm;
        p.trace = r.trace;
        p.initializer = init;
        p.energy = r.energy;
        p.normalization = above ? "G_s over the negative half-line" : "energy over the truncated window";
        p.decay_fit = fit_decay(p.profile, sign, {-L / 2.0, -L / 4.0});
    });
    if (regime_of(s) == Regime::half)
        for (auto& p : out) {
            const auto lad = functional_G_normalized(p.profile, {L / 8.0, L / 4.0, L / 2.0, L}, s, W);
            p.energy = lad.limit;
            p.normalization = "G_s(w, (-R,0)) / ln R at R = L";
        }
    return out;
}

LayerProfile solve_boundary_layer(double s, double gamma, int sign, const DoubleWell& W, const Grid1D& grid,
                                  const SolveOptions& opts) {
    auto all = solve_boundary_layer_all(s, gamma, sign, W, grid, opts);
    std::size_t best = 0;
    for (std::size_t k = 1; k < all.size(); ++k)
        if (all[k].energy < all[best].energy) best = k;
    return all[best];
}

Grid1D layer_grid(double L, bool half_line, const LayerGridOptions& lopts) {
    const double h_max = std::max(lopts.h_min, lopts.h_max_over_L * L);
    // refined toward the truncation edges too: next to the frozen exterior a
    // coarse cell lets the first free node overshoot and breaks monotonicity
    const double right = half_line ? 0.0 : L;
    return Grid1D::graded(-L, right, {-L, 0.0, right}, lopts.h_min, h_max, lopts.growth);
}

namespace {

template <class Solve>
LayerProfile doubling(const LayerGridOptions& lopts, Solve solve) {
    if (!(lopts.L0 > 0.0 && lopts.L_max >= lopts.L0)) throw PreconditionViolated("need 0 < L0 <= L_max");
    double L = lopts.L0;
    for (;;) {
        auto [p, dev] = solve(L);
        if (dev < lopts.tail_tol) {
            p.normalization += "; L=" + fmt17(L);
            return p;
        }
        if (2.0 * L > lopts.L_max) {
            p.normalization += "; L=" + fmt17(L) + " (tail deviation " + fmt17(dev) + " above tolerance)";
            return p;
        }
        L *= 2.0;
    }
}

}  // namespace

LayerProfile solve_heteroclinic_auto(double s, const DoubleWell& W, const LayerGridOptions& lopts,
                                     const SolveOptions& opts) {
    return doubling(lopts, [&](double L) {
        LayerProfile p = solve_heteroclinic(s, W, layer_grid(L, false, lopts), opts);
        const double dev =
            std::max(std::abs(eval(p.profile, -L / 2) + 1.0), std::abs(eval(p.profile, L / 2) - 1.0));
        return std::pair{std::move(p), dev};
    });
}

LayerProfile solve_boundary_layer_auto(double s, double gamma, int sign, const DoubleWell& W,
                                       const LayerGridOptions& lopts, const SolveOptions& opts) {
    return doubling(lopts, [&](double L) {
        LayerProfile p = solve_boundary_layer(s, gamma, sign, W, layer_grid(L, true, lopts), opts);
        const double dev = std::abs(eval(p.profile, -L / 2) - sign);
        return std::pair{std::move(p), dev};
    });
}

Grid1D s_harmonic_grid(double delta, double h_min, double h_max) {
    if (!(delta > 0.0 && delta <= 1.0)) throw PreconditionViolated("delta must lie in (0,1]");
    // inside [-delta, delta] the nodes are delta times a fixed reference grid,
    // so discrete minimizers for different delta are exact rescalings
    const Grid1D ref = Grid1D::graded(-1.0, 1.0, {-1.0, 0.0, 1.0}, h_min, h_max, 0.15);
    Grid1D g;
    g.spacing_kind = SpacingKind::graded;
    g.focus = {-delta, 0.0, delta};
    for (double x : ref.nodes) g.nodes.push_back(delta * x);
    if (delta < 1.0) {
        const Grid1D out = Grid1D::graded(delta, 1.0, {delta}, h_min, h_max, 0.15);
        std::vector<double> left;
        for (std::size_t i = out.size() - 1; i >= 1; --i) left.push_back(-out.nodes[i]);
        g.nodes.insert(g.nodes.begin(), left.begin(), left.end());
        for (std::size_t i = 1; i < out.size(); ++i) g.nodes.push_back(out.nodes[i]);
    }
    g.validate();
    return g;
}

GridFunction solve_s_harmonic(double delta, double s, const Grid1D& grid) {
    if (!(delta > 0.0 && delta <= 1.0)) throw PreconditionViolated("delta must lie in (0,1]");
    if (!(s > 0.0 && s < 0.5)) throw RangeError("s must lie in (0,1/2)");
    grid.validate();
    if (grid.left() != -1.0 || grid.right() != 1.0) throw PreconditionViolated("s-harmonic grid must be [-1, 1]");
    node_index(grid, -delta, 1e-14);
    node_index(grid, delta, 1e-14);
    const QuadraticModel Q = assemble_Q(grid, -1.0, 1.0, {-1.0, 1.0}, s);
    const auto& x = grid.nodes;
    std::vector<Eigen::Index> fi, ci;
    Eigen::VectorXd U = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        if (std::abs(x[i]) < delta - 1e-14) {
            fi.push_back(k);
        } else {
            ci.push_back(k);
            U[k] = x[i] > 0 ? 1.0 : -1.0;
        }
    }
    const auto nf = static_cast<Eigen::Index>(fi.size());
    Eigen::MatrixXd Kff(nf, nf);
    Eigen::VectorXd rhs(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
        double r = -Q.f[fi[a]];
        for (auto c : ci) r -= Q.K(fi[a], c) * U[c];
        rhs[a] = r;
        for (Eigen::Index b = 0; b < nf; ++b) Kff(a, b) = Q.K(fi[a], fi[b]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(Kff);
    if (llt.info() != Eigen::Success) throw SingularSystem("s-harmonic stiffness is not positive definite");
    const Eigen::VectorXd Uf = llt.solve(rhs);
    for (Eigen::Index a = 0; a < nf; ++a) U[fi[a]] = Uf[a];
    return GridFunction(grid, to_std(U), TailModel::constant(-1.0), TailModel::constant(1.0));
}

MEpsResult solve_m_eps(double s, double eps, const Interval& omega, const std::function<double(double)>& g,
                       double kappa, const DoubleWell& W, const SolveOptions& opts, const MEpsGridOptions& gopts) {
    check_s_open(s);
    if (!(eps > 0.0)) throw RangeError("eps must be positive");
    if (!std::isfinite(omega.lo) || !std::isfinite(omega.hi) || !(omega.lo < omega.hi))
        throw PreconditionViolated("Omega must be a bounded interval");
    const double len = omega.length();
    if (!(kappa >= 0.0 && kappa < len / 2.0)) throw RangeError("kappa must lie in [0, |Omega|/2)");
    const double g1 = g(omega.lo), g2 = g(omega.hi);
    if (regime_of(s) != Regime::below_half && !(std::abs(g1) < 1.0 && std::abs(g2) < 1.0))
        throw PreconditionViolated("|g| < 1 is required on the boundary of Omega for s >= 1/2");

    // grid inside Omega: uniform at h_min when affordable, otherwise graded toward the boundary
    const double h_min = gopts.h_min_over_eps * eps;
    Grid1D inner;
    if (len / h_min <= 2000.0) {
        inner = Grid1D::uniform(omega.lo, omega.hi, static_cast<std::size_t>(std::ceil(len / h_min)) + 1);
    } else {
        inner = Grid1D::graded(omega.lo, omega.hi, {omega.lo, omega.hi}, h_min, std::max(h_min, gopts.h_max),
                               gopts.growth);
    }
    // exterior: constant tails when g is constant out to the cutoff, else an auxiliary grid
    const double cutoff = 10.0 * len;
    const TailModel lt = exterior_tail(g, omega.lo, Side::left, cutoff);
    const TailModel rt = exterior_tail(g, omega.hi, Side::right, cutoff);
    const bool left_const = lt.kind == TailKind::constant, right_const = rt.kind == TailKind::constant;
    double cl = left_const ? lt.value : g(omega.lo - cutoff);
    double cr = right_const ? rt.value : g(omega.hi + cutoff);
    std::vector<double> nodes;
    const double h0 = inner.nodes[1] - inner.nodes[0];
    if (!left_const) {
        const auto aux = Grid1D::graded(omega.lo - cutoff, omega.lo, {omega.lo}, h0, kInf, gopts.growth);
        nodes.insert(nodes.end(), aux.nodes.begin(), aux.nodes.end() - 1);
    }
    nodes.insert(nodes.end(), inner.nodes.begin(), inner.nodes.end());
    if (!right_const) {
        const auto aux = Grid1D::graded(omega.hi, omega.hi + cutoff, {omega.hi}, h0, kInf, gopts.growth);
        nodes.insert(nodes.end(), aux.nodes.begin() + 1, aux.nodes.end());
    }
    Grid1D grid;
    grid.nodes = nodes;
    grid.spacing_kind = inner.spacing_kind;
    grid.focus = {omega.lo, omega.hi};
    const std::size_t N = grid.size();
    const auto& x = grid.nodes;

    const ScalingParams p = ScalingParams::make(s, eps);
    const QuadraticModel Q = assemble_Q(grid, cl, cr, omega, s);
    // F1 / b_tilde keeps the stop criterion on the Allen-Cahn residual scale
    const Objective obj{&Q, &grid, &W, p.a_tilde / p.b_tilde, 1.0};

    ConstraintSet base = ConstraintSet::free_box(N, -1.0, 1.0);
    base.kappa = kappa;
    for (std::size_t i = 0; i < N; ++i)
        if (x[i] <= omega.lo || x[i] >= omega.hi) base.freeze(i, std::clamp(g(x[i]), -1.0, 1.0));

    // initializers
    struct Start {
        std::string name;
        std::vector<double> u;
    };
    std::vector<Start> starts;
    auto inside = [&](std::function<double(double)> f, std::string name) {
        Start st{std::move(name), std::vector<double>(N)};
        for (std::size_t i = 0; i < N; ++i) st.u[i] = std::clamp(f(x[i]), -1.0, 1.0);
        starts.push_back(std::move(st));
    };
    inside([](double) { return 1.0; }, "pure+1");
    inside([](double) { return -1.0; }, "pure-1");
    inside(g, "datum");
    const int n_if = static_cast<int>(std::min(24.0, 2.0 + std::ceil(len / eps)));
    const double left_sign = g1 >= 0.0 ? 1.0 : -1.0;
    for (int k = 0; k < n_if; ++k) {
        const double pos = omega.lo + len * (k + 0.5) / n_if;
        inside([=](double y) { return left_sign * -std::tanh((y - pos) / eps); },
               "interface@" + fmt17(pos));
    }

    auto ykappa = [&](ConstraintSet& C, const std::vector<double>& u0) {
        if (kappa <= 0.0) return;
        for (int e = 0; e < 2; ++e) {
            const double xb = e == 0 ? omega.lo : omega.hi;
            const double gb = e == 0 ? g1 : g2;
            // sign branch for g = 0 follows the start near the endpoint
            double ref = 0.0;
            for (std::size_t i = 0; i < N; ++i)
                if (omega.contains(x[i]) && std::abs(x[i] - xb) < kappa) ref += u0[i];
            const bool above = gb > 0.0 || (gb == 0.0 && ref >= 0.0);
            for (std::size_t i = 0; i < N; ++i) {
                if (!omega.contains(x[i]) || !(std::abs(x[i] - xb) < kappa)) continue;
                const auto k = static_cast<Eigen::Index>(i);
                if (above)
                    C.lower[k] = std::max(C.lower[k], gb);
                else
                    C.upper[k] = std::min(C.upper[k], gb);
            }
        }
    };

    std::vector<MinimizeResult> runs(starts.size());
    parallel_blocks(starts.size(), [&](std::size_t k) {
        ConstraintSet C = base;
        ykappa(C, starts[k].u);
        runs[k] = minimize_pg(obj, C, to_eigen(starts[k].u), opts);
    });

    MEpsResult res;
    std::size_t best = starts.size();
    for (std::size_t k = 0; k < starts.size(); ++k) {
        std::vector<double> in_omega;
        for (std::size_t i = 0; i < N; ++i)
            if (omega.contains(x[i])) in_omega.push_back(runs[k].U[static_cast<Eigen::Index>(i)]);
        MEpsStart st{starts[k].name, p.b_tilde * runs[k].energy, sign_changes(in_omega), runs[k].converged,
                     runs[k].iters};
        res.starts.push_back(st);
        if (!st.converged) continue;
        if (best == starts.size()) {
            best = k;
            continue;
        }
        const auto& B = res.starts[best];
        if (st.energy_F1 < B.energy_F1 || (st.energy_F1 == B.energy_F1 && st.sign_changes < B.sign_changes))
            best = k;
    }
    if (best == starts.size())
        throw NotConverged("no m_eps initializer reached the projected-gradient tolerance");
    res.best_start = starts[best].name;
    res.value_F1 = res.starts[best].energy_F1;
    res.value_E = eps * res.value_F1;
    res.trace = runs[best].trace;
    for (auto& r : res.trace) r.energy *= p.b_tilde;
    res.argmin = GridFunction(grid, to_std(runs[best].U), TailModel::constant(cl), TailModel::constant(cr));
    return res;
}

}  // namespace fraclayer
