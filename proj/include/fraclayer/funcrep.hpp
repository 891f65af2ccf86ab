#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace fraclayer {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Open interval (lo, hi); either end may be infinite.
struct Interval {
    double lo = -kInf;
    double hi = kInf;

    double length() const { return hi - lo; }
    bool contains(double x) const { return lo < x && x < hi; }
};

enum class SpacingKind { uniform, graded };

struct Grid1D {
    std::vector<double> nodes;  // strictly increasing, >= 3 entries
    SpacingKind spacing_kind = SpacingKind::uniform;
    std::vector<double> focus;  // grading points (graded grids only)

    double left() const { return nodes.front(); }
    double right() const { return nodes.back(); }
    std::size_t size() const { return nodes.size(); }
    std::size_t cells() const { return nodes.size() - 1; }

    /// Throws PreconditionViolated unless the node invariants hold.
    void validate() const;

    static Grid1D uniform(double left, double right, std::size_t n);
    /// Spacing h(x) = min(h_max, h_min + growth * dist(x, focus)); every focus
    /// point inside [left, right] becomes a node.
    static Grid1D graded(double left, double right, std::vector<double> focus, double h_min,
                         double h_max, double growth = 0.05);
};

enum class Side { left, right };
enum class TailKind { none, constant, datum };

struct TailModel {
    TailKind kind = TailKind::none;
    double value = 0.0;                  // constant value, or datum value beyond the cutoff
    std::function<double(double)> datum;  // Lipschitz exterior datum g
    double cutoff = 0.0;                  // datum is sampled up to this distance past the grid edge

    static TailModel none() { return {}; }
    static TailModel constant(double c) { return {TailKind::constant, c, {}, 0.0}; }
    static TailModel from_datum(std::function<double(double)> g, double cutoff);

    double at(double x, double edge, Side side) const;
};

enum class Interp { linear, constant_cells };

/// Exterior datum g beyond `edge`: a constant tail when g is constant out to
/// the cutoff (sampled), a datum tail otherwise.
TailModel exterior_tail(const std::function<double(double)>& g, double edge, Side side, double cutoff);


/// Truncated grid function with analytic tails; piecewise-linear on nodes
/// or piecewise-constant on cells.
class GridFunction {
public:
    GridFunction() = default;
    GridFunction(Grid1D grid, std::vector<double> values, TailModel left, TailModel right,
                 Interp interp = Interp::linear, bool unconstrained = false);

    Grid1D grid;
    std::vector<double> values;
    TailModel left_tail;
    TailModel right_tail;
    Interp interp = Interp::linear;
    bool unconstrained = false;
};

double eval(const GridFunction& u, double x);

/// u_rho(x) = u(rho x): nodes divided by rho, tails carried along.
GridFunction rescale(const GridFunction& u, double rho);

/// Shifted copy v(x) = u(x + shift).
GridFunction translate(const GridFunction& u, double shift);

/// Replaces datum tails by explicit grid segments out to the cutoff and a
/// constant continuation beyond; constant tails are kept.
GridFunction materialize_datum_tails(const GridFunction& u, double growth = 0.1);

/// Set E inside omega described by its sorted jump points.
struct BinaryPhase {
    Interval omega;
    std::vector<double> jumps;
    int left_sign = 1;  // value of chi_E - chi_{E^c} just right of omega.lo

    int perimeter() const { return static_cast<int>(jumps.size()); }
    int sign_at(double x) const;
    int right_sign() const;
    void validate() const;
};

/// Piecewise-constant +-1 inside omega with the given exterior tails.
GridFunction phase_to_function(const BinaryPhase& E, const TailModel& left, const TailModel& right);

/// Signed distance to the nearest jump, positive where the phase is +1.
double signed_distance(const BinaryPhase& E, double x);

/// Profile serialization: CSV "x,value" plus a JSON sidecar for tails, grid
/// metadata and caller-supplied normalization fields.
void write_profile(const std::string& csv_path, const GridFunction& u,
                   const nlohmann::json& extra = nlohmann::json::object());
GridFunction read_profile(const std::string& csv_path);

/// 17-significant-digit formatting used by every emitted artifact.
std::string fmt17(double v);

}  // namespace fraclayer
