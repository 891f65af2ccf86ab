#include "fraclayer/funcrep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fraclayer/errors.hpp"

namespace fraclayer {

using nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void Grid1D::validate() const {
    if (nodes.size() < 3) throw PreconditionViolated("grid needs at least 3 nodes");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (!(nodes[i] > nodes[i - 1]))
            throw PreconditionViolated("grid nodes must be strictly increasing");
}

Grid1D Grid1D::uniform(double left, double right, std::size_t n) {
    if (n < 3 || !(right > left)) throw PreconditionViolated("uniform grid needs n >= 3 and left < right");
    Grid1D g;
    g.nodes.resize(n);
    const double h = (right - left) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.nodes[i] = left + h * static_cast<double>(i);
    g.nodes.back() = right;
    g.spacing_kind = SpacingKind::uniform;
    return g;
}

Grid1D Grid1D::graded(double left, double right, std::vector<double> focus, double h_min,
                      double h_max, double growth) {
    if (!(right > left) || !(h_min > 0) || !(h_max >= h_min) || !(growth > 0))
        throw PreconditionViolated("graded grid needs left < right, 0 < h_min <= h_max, growth > 0");
    std::sort(focus.begin(), focus.end());
    auto spacing = [&](double x) {
        double d = kInf;
        for (double p : focus) d = std::min(d, std::abs(x - p));
        if (focus.empty()) return h_max;
        return std::min(h_max, h_min + growth * d);
    };
    std::vector<double> breaks{left};
    for (double p : focus)
        if (p > left && p < right) breaks.push_back(p);
    breaks.push_back(right);

    Grid1D g;
    g.spacing_kind = SpacingKind::graded;
    g.focus = focus;
    g.nodes.push_back(left);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k], b = breaks[k + 1];
        // node density 1/h integrated on a fine sub-sampling, then inverted;
        // uniform plus geometric toward both ends so h_min << (b-a)/m resolves
        const int um = 4000;
        std::vector<double> xs;
        for (int j = 0; j <= um; ++j) xs.push_back(a + (b - a) * j / um);
        for (double d = 0.25 * h_min; d < 0.5 * (b - a); d *= 1.05) {
            xs.push_back(a + d);
            xs.push_back(b - d);
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        const int m = static_cast<int>(xs.size()) - 1;
        std::vector<double> cum(m + 1, 0.0);
        for (int j = 1; j <= m; ++j) {
            const double xm = 0.5 * (xs[j] + xs[j - 1]);
            cum[j] = cum[j - 1] + (xs[j] - xs[j - 1]) / spacing(xm);
        }
        const int cells = std::max(1, static_cast<int>(std::ceil(cum[m] - 1e-9)));
        int j = 0;
        for (int c = 1; c < cells; ++c) {
            const double target = cum[m] * c / cells;
            while (cum[j + 1] < target) ++j;
            const double t = (target - cum[j]) / (cum[j + 1] - cum[j]);
            g.nodes.push_back(xs[j] + t * (xs[j + 1] - xs[j]));
        }
        g.nodes.push_back(b);
    }
    if (g.nodes.size() < 3) {
        // too coarse: split each cell once
        std::vector<double> refined{g.nodes.front()};
        for (std::size_t i = 1; i < g.nodes.size(); ++i) {
            refined.push_back(0.5 * (g.nodes[i - 1] + g.nodes[i]));
            refined.push_back(g.nodes[i]);
        }
        g.nodes = refined;
    }
    g.validate();
    return g;
}

TailModel TailModel::from_datum(std::function<double(double)> g, double cutoff) {
    TailModel t;
    t.kind = TailKind::datum;
    t.datum = std::move(g);
    t.cutoff = cutoff;
    return t;
}

TailModel exterior_tail(const std::function<double(double)>& g, double edge, Side side, double cutoff) {
    const double dir = side == Side::left ? -1.0 : 1.0;
    const double first = g(edge + dir * 1e-12 * std::max(1.0, cutoff));
    for (int i = 0; i <= 400; ++i) {
        const double x = edge + dir * cutoff * std::max(1e-12, i / 400.0);
        if (g(x) != first) return TailModel::from_datum(g, cutoff);
    }
    return TailModel::constant(first);
}

double TailModel::at(double x, double edge, Side side) const {
    switch (kind) {
        case TailKind::none:
            throw UndefinedTail("evaluation at x=" + fmt17(x) + " falls in an undefined tail");
        case TailKind::constant:
            return value;
        case TailKind::datum: {
            const double far = side == Side::left ? edge - cutoff : edge + cutoff;
            const bool beyond = side == Side::left ? x < far : x > far;
            return datum(beyond ? far : x);
        }
    }
    return value;
}

GridFunction::GridFunction(Grid1D g, std::vector<double> v, TailModel left, TailModel right,
                           Interp ip, bool unconstr)
    : grid(std::move(g)),
      values(std::move(v)),
      left_tail(std::move(left)),
      right_tail(std::move(right)),
      interp(ip),
      unconstrained(unconstr) {
    grid.validate();
    const std::size_t expected = interp == Interp::linear ? grid.size() : grid.cells();
    if (values.size() != expected)
        throw PreconditionViolated("value count does not match the grid for this interpolation");
    if (!unconstrained)
        for (double& x : values) x = std::clamp(x, -1.0, 1.0);
    if (left_tail.kind == TailKind::datum && left_tail.cutoff <= 0.0)
        left_tail.cutoff = 10.0 * (grid.right() - grid.left());
    if (right_tail.kind == TailKind::datum && right_tail.cutoff <= 0.0)
        right_tail.cutoff = 10.0 * (grid.right() - grid.left());
    if (left_tail.kind == TailKind::datum)
        left_tail.value = left_tail.datum(grid.left() - left_tail.cutoff);
    if (right_tail.kind == TailKind::datum)
        right_tail.value = right_tail.datum(grid.right() + right_tail.cutoff);
}

double eval(const GridFunction& u, double x) {
    const auto& n = u.grid.nodes;
    if (x < n.front()) return u.left_tail.at(x, n.front(), Side::left);
    if (x > n.back()) return u.right_tail.at(x, n.back(), Side::right);
    auto it = std::upper_bound(n.begin(), n.end(), x);
    std::size_t i = it == n.end() ? n.size() - 2 : static_cast<std::size_t>(it - n.begin()) - 1;
    i = std::min(i, n.size() - 2);
    if (u.interp == Interp::constant_cells) return u.values[i];
    const double t = (x - n[i]) / (n[i + 1] - n[i]);
    return u.values[i] + t * (u.values[i + 1] - u.values[i]);
}

static TailModel scale_tail(const TailModel& t, double rho) {
    TailModel out = t;
    if (t.kind == TailKind::datum) {
        auto g = t.datum;
        out.datum = [g, rho](double x) { return g(rho * x); };
        out.cutoff = t.cutoff / rho;
    }
    return out;
}

GridFunction rescale(const GridFunction& u, double rho) {
    if (!(rho > 0)) throw PreconditionViolated("rescale needs rho > 0");
    GridFunction out = u;
    for (double& x : out.grid.nodes) x /= rho;
    for (double& p : out.grid.focus) p /= rho;
    out.left_tail = scale_tail(u.left_tail, rho);
    out.right_tail = scale_tail(u.right_tail, rho);
    return out;
}

GridFunction translate(const GridFunction& u, double shift) {
    GridFunction out = u;
    for (double& x : out.grid.nodes) x -= shift;
    for (double& p : out.grid.focus) p -= shift;
    for (TailModel* t : {&out.left_tail, &out.right_tail})
        if (t->kind == TailKind::datum) {
            auto g = t->datum;
            t->datum = [g, shift](double x) { return g(x + shift); };
        }
    return out;
}

GridFunction materialize_datum_tails(const GridFunction& u, double growth) {
    if (u.left_tail.kind != TailKind::datum && u.right_tail.kind != TailKind::datum) return u;
    if (u.interp != Interp::linear)
        throw PreconditionViolated("datum tails are materialized for piecewise-linear functions only");
    const auto& n = u.grid.nodes;
    std::vector<double> nodes, values;
    if (u.left_tail.kind == TailKind::datum) {
        const double h0 = n[1] - n[0];
        const double far = n.front() - u.left_tail.cutoff;
        Grid1D aux = Grid1D::graded(far, n.front(), {n.front()}, h0, kInf, growth);
        for (std::size_t i = 0; i + 1 < aux.size(); ++i) {
            nodes.push_back(aux.nodes[i]);
            values.push_back(u.left_tail.datum(aux.nodes[i]));
        }
    }
    nodes.insert(nodes.end(), n.begin(), n.end());
    values.insert(values.end(), u.values.begin(), u.values.end());
    if (u.right_tail.kind == TailKind::datum) {
        const double h0 = n[n.size() - 1] - n[n.size() - 2];
        const double far = n.back() + u.right_tail.cutoff;
        Grid1D aux = Grid1D::graded(n.back(), far, {n.back()}, h0, kInf, growth);
        for (std::size_t i = 1; i < aux.size(); ++i) {
            nodes.push_back(aux.nodes[i]);
            values.push_back(u.right_tail.datum(aux.nodes[i]));
        }
    }
    Grid1D g;
    g.nodes = std::move(nodes);
    g.spacing_kind = SpacingKind::graded;
    g.focus = {u.grid.left(), u.grid.right()};
    TailModel lt = u.left_tail.kind == TailKind::datum ? TailModel::constant(values.front()) : u.left_tail;
    TailModel rt = u.right_tail.kind == TailKind::datum ? TailModel::constant(values.back()) : u.right_tail;
    return GridFunction(std::move(g), std::move(values), lt, rt, Interp::linear, u.unconstrained);
}

void BinaryPhase::validate() const {
    if (left_sign != 1 && left_sign != -1) throw PreconditionViolated("left_sign must be +-1");
    for (std::size_t i = 0; i < jumps.size(); ++i) {
        if (!omega.contains(jumps[i]))
            throw JumpOutsideDomain("jump at " + fmt17(jumps[i]) + " is not interior to omega");
        if (i > 0 && !(jumps[i] > jumps[i - 1]))
            throw PreconditionViolated("jumps must be strictly increasing");
    }
}

int BinaryPhase::sign_at(double x) const {
    const auto k = std::upper_bound(jumps.begin(), jumps.end(), x) - jumps.begin();
    return (k % 2 == 0) ? left_sign : -left_sign;
}

int BinaryPhase::right_sign() const { return (jumps.size() % 2 == 0) ? left_sign : -left_sign; }

GridFunction phase_to_function(const BinaryPhase& E, const TailModel& left, const TailModel& right) {
    E.validate();
    if (!std::isfinite(E.omega.lo) || !std::isfinite(E.omega.hi))
        throw PreconditionViolated("phase_to_function needs a bounded omega");
    Grid1D g;
    g.nodes.push_back(E.omega.lo);
    for (double j : E.jumps) g.nodes.push_back(j);
    g.nodes.push_back(E.omega.hi);
    if (g.nodes.size() == 2) g.nodes.insert(g.nodes.begin() + 1, 0.5 * (E.omega.lo + E.omega.hi));
    std::vector<double> vals;
    for (std::size_t i = 0; i + 1 < g.nodes.size(); ++i)
        vals.push_back(E.sign_at(0.5 * (g.nodes[i] + g.nodes[i + 1])));
    g.spacing_kind = SpacingKind::graded;
    return GridFunction(std::move(g), std::move(vals), left, right, Interp::constant_cells);
}

double signed_distance(const BinaryPhase& E, double x) {
    double d = kInf;
    for (double j : E.jumps) d = std::min(d, std::abs(x - j));
    for (double j : E.jumps)
        if (x == j) return 0.0;
    return E.sign_at(x) * d;
}

static json tail_json(const TailModel& t) {
    json j;
    switch (t.kind) {
        case TailKind::none: j["kind"] = "none"; break;
        case TailKind::constant: j["kind"] = "constant"; break;
        case TailKind::datum: j["kind"] = "datum"; break;
    }
    j["value"] = t.value;
    if (t.kind == TailKind::datum) j["cutoff"] = t.cutoff;
    return j;
}

static std::filesystem::path sidecar_path(const std::string& csv_path) {
    std::filesystem::path p(csv_path);
    p.replace_extension(".json");
    return p;
}

void write_profile(const std::string& csv_path, const GridFunction& u, const json& extra) {
    std::ofstream out(csv_path);
    if (!out) throw PreconditionViolated("cannot write " + csv_path);
    out << "x,value\n";
    const auto& n = u.grid.nodes;
    if (u.interp == Interp::linear) {
        for (std::size_t i = 0; i < n.size(); ++i) out << fmt17(n[i]) << ',' << fmt17(u.values[i]) << '\n';
    } else {
        for (std::size_t i = 0; i < u.values.size(); ++i)
            out << fmt17(0.5 * (n[i] + n[i + 1])) << ',' << fmt17(u.values[i]) << '\n';
    }
    json meta = extra;
    meta["left_tail"] = tail_json(u.left_tail);
    meta["right_tail"] = tail_json(u.right_tail);
    meta["interp"] = u.interp == Interp::linear ? "piecewise-linear" : "piecewise-constant-on-cells";
    meta["spacing_kind"] = u.grid.spacing_kind == SpacingKind::uniform ? "uniform" : "graded";
    meta["nodes"] = u.grid.size();
    meta["left"] = u.grid.left();
    meta["right"] = u.grid.right();
    if (u.interp == Interp::constant_cells) meta["cell_edges"] = n;
    std::ofstream side(sidecar_path(csv_path));
    side << meta.dump(2) << '\n';
}

GridFunction read_profile(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw PreconditionViolated("cannot read " + csv_path);
    std::string line;
    std::getline(in, line);
    std::vector<double> xs, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string a, b;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        xs.push_back(std::stod(a));
        vs.push_back(std::stod(b));
    }
    std::ifstream side(sidecar_path(csv_path));
    json meta = json::parse(side);
    auto tail = [](const json& j) {
        const std::string k = j.at("kind");
        if (k == "none") return TailModel::none();
        // datum handles are not serializable; the far value stands in
        return TailModel::constant(j.at("value").get<double>());
    };
    Grid1D g;
    g.spacing_kind = meta.at("spacing_kind") == "uniform" ? SpacingKind::uniform : SpacingKind::graded;
    Interp ip = meta.at("interp") == "piecewise-linear" ? Interp::linear : Interp::constant_cells;
    if (ip == Interp::linear)
        g.nodes = xs;
    else
        g.nodes = meta.at("cell_edges").get<std::vector<double>>();
    return GridFunction(std::move(g), std::move(vs), tail(meta.at("left_tail")), tail(meta.at("right_tail")), ip,
                        true);
}

}  // namespace fraclayer
