#include "fraclayer/fracop.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "fraclayer/errors.hpp"
#include "fraclayer/kernel.hpp"
#include "fraclayer/parallel.hpp"

namespace fraclayer {

namespace {

// Monomial coefficients c_j of the interpolant sum_j c_j (y - x0)^j through
// the points (t_i, v_i), t_i = y_i - x0 (Newton form, then expanded).
template <int M>
std::array<double, M> monomial_interp(const std::array<double, M>& t, const std::array<double, M>& v) {
    std::array<double, M> dd = v;
    for (int j = 1; j < M; ++j)
        for (int i = M - 1; i >= j; --i) dd[i] = (dd[i] - dd[i - 1]) / (t[i] - t[i - j]);
    std::array<double, M> c{};
    // Horner expansion of dd[M-1](y-t_{M-2})...  from the innermost factor out
    c[0] = dd[M - 1];
    for (int i = M - 2; i >= 0; --i) {
        // c <- c * (y - t_i) + dd[i]
        for (int j = M - 1; j >= 1; --j) c[j] = c[j - 1] - t[i] * c[j];
        c[0] = -t[i] * c[0] + dd[i];
    }
    return c;
}

// int_{-a}^{b} (c_0 - p(t)) |t|^{-1-2s} dt for p(t) = sum c_j t^j, principal value.
double near_integral(const std::array<double, 5>& c, double a, double b, double s) {
    const double beta = 1.0 - 2.0 * s;
    double r;
    if (std::abs(beta) < 1e-14)
        r = -c[1] * std::log(b / a);
    else
        r = -c[1] * (std::pow(b, beta) - std::pow(a, beta)) / beta;
    for (int j = 2; j < 5; ++j) {
        const double e = j - 2.0 * s;
        const double sgn = (j % 2 == 0) ? 1.0 : -1.0;
        r -= c[j] * (std::pow(b, e) + sgn * std::pow(a, e)) / e;
    }
    return r;
}

}  // namespace

double frac_laplacian(const GridFunction& u0, std::size_t k, double s) {
    if (!(s > 0.0 && s < 1.0)) throw RangeError("s must lie in (0,1)");
    if (u0.interp != Interp::linear)
        throw PreconditionViolated("frac_laplacian needs a piecewise-linear function");
    if (u0.left_tail.kind == TailKind::none || u0.right_tail.kind == TailKind::none)
        throw UndefinedTail("frac_laplacian needs both tails defined");
    const bool has_datum = u0.left_tail.kind == TailKind::datum || u0.right_tail.kind == TailKind::datum;
    const GridFunction u = has_datum ? materialize_datum_tails(u0) : u0;
    std::size_t off = 0;
    if (has_datum) {
        const auto it = std::lower_bound(u.grid.nodes.begin(), u.grid.nodes.end(), u0.grid.nodes[k]);
        off = static_cast<std::size_t>(it - u.grid.nodes.begin()) - k;
    }
    k += off;
    const auto& x = u.grid.nodes;
    const auto& v = u.values;
    const std::size_t N = x.size();
    if (k == 0 || k + 1 >= N) throw PreconditionViolated("frac_laplacian needs an interior node");
    if (N < 5) throw PreconditionViolated("frac_laplacian needs at least 5 nodes");
    const double xk = x[k], uk = v[k];

    // near window: five nodes centred on k where possible
    std::size_t lo = k >= 2 ? k - 2 : 0;
    lo = std::min(lo, N - 5);
    const std::size_t hi = lo + 4;
    std::array<double, 5> t{}, vals{};
    for (int i = 0; i < 5; ++i) {
        t[i] = x[lo + i] - xk;
        vals[i] = v[lo + i];
    }
    auto c = monomial_interp<5>(t, vals);
    c[0] = uk;
    double total = near_integral(c, xk - x[lo], x[hi] - xk, s);

    // far cells with a cubic through the cell and its neighbours
    const auto& G = kernel::gauss6();
    const double p = 1.0 + 2.0 * s;
    auto far_cell = [&](std::size_t cidx) {
        std::size_t a = cidx >= 1 ? cidx - 1 : 0;
        a = std::min(a, N - 4);
        std::array<double, 4> tt{}, vv{};
        for (int i = 0; i < 4; ++i) {
            tt[i] = x[a + i] - x[cidx];
            vv[i] = v[a + i];
        }
        const auto q = monomial_interp<4>(tt, vv);
        const double h = x[cidx + 1] - x[cidx];
        double acc = 0.0;
        for (int g = 0; g < 6; ++g) {
            const double dy = h * G.x[g];
            const double uy = q[0] + dy * (q[1] + dy * (q[2] + dy * q[3]));
            const double r = std::abs(x[cidx] + dy - xk);
            acc += h * G.w[g] * (uk - uy) * std::pow(r, -p);
        }
        return acc;
    };
    for (std::size_t cidx = 0; cidx < lo; ++cidx) total += far_cell(cidx);
    for (std::size_t cidx = hi; cidx + 1 < N; ++cidx) total += far_cell(cidx);

    // constant tails
    total += (uk - u.left_tail.value) * std::pow(xk - x.front(), -2.0 * s) / (2.0 * s);
    total += (uk - u.right_tail.value) * std::pow(x.back() - xk, -2.0 * s) / (2.0 * s);
    return total;
}

double frac_laplacian_at(const GridFunction& u, double x, double s) {
    const auto& n = u.grid.nodes;
    const auto it = std::lower_bound(n.begin(), n.end(), x);
    if (it == n.end() || *it != x) throw PreconditionViolated("x=" + fmt17(x) + " is not a grid node");
    return frac_laplacian(u, static_cast<std::size_t>(it - n.begin()), s);
}

Interval middle_half(const Grid1D& g) {
    const double w = g.right() - g.left();
    return {g.left() + 0.25 * w, g.right() - 0.25 * w};
}

ResidualReport pde_residual(const GridFunction& u, double s, const DoubleWell& W, const Interval& window) {
    const auto& x = u.grid.nodes;
    if (!(window.lo >= x.front() && window.hi <= x.back()))
        throw PreconditionViolated("residual window must lie inside the grid");
    ResidualReport rep;
    rep.interior_window = window;
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < x.size(); ++i)
        if (window.contains(x[i])) idx.push_back(i);
    rep.nodes.resize(idx.size());
    rep.residual.resize(idx.size());
    const std::size_t B = 16;
    parallel_blocks((idx.size() + B - 1) / B, [&](std::size_t b) {
        for (std::size_t j = b * B; j < std::min(idx.size(), (b + 1) * B); ++j) {
            const std::size_t i = idx[j];
            rep.nodes[j] = x[i];
            rep.residual[j] = kEulerLagrangeFactor * frac_laplacian(u, i, s) + W.deriv(u.values[i]);
        }
    });
    for (double r : rep.residual) rep.sup_norm = std::max(rep.sup_norm, std::abs(r));
    return rep;
}

void ResidualReport::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw PreconditionViolated("cannot write " + path);
    out << "x,residual\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) out << fmt17(nodes[i]) << ',' << fmt17(residual[i]) << '\n';
}

}  // namespace fraclayer
