#include "fraclayer/potential.hpp"

#include <algorithm>
#include <cmath>

#include "fraclayer/errors.hpp"

namespace fraclayer {

DoubleWell make_quartic() {
    DoubleWell W;
    W.eval = [](double u) {
        const double t = 1.0 - u * u;
        return 0.25 * t * t;
    };
    W.deriv = [](double u) { return u * u * u - u; };
    W.deriv2 = [](double u) { return 3.0 * u * u - 1.0; };
    W.name = "quartic";
    return W;
}

std::vector<std::string> potential_names() { return {"quartic"}; }

DoubleWell make_potential(const std::string& name) {
    if (name == "quartic") return make_quartic();
    throw RangeError("potential must be one of: quartic (got \"" + name + "\")");
}

bool WellValidation::ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const WellCheck& c) { return c.passed; });
}

bool WellValidation::passed(const std::string& condition) const {
    for (const auto& c : checks)
        if (c.condition == condition) return c.passed;
    return false;
}

WellValidation validate_double_well(const DoubleWell& W, int n_samples) {
    if (n_samples < 3) throw PreconditionViolated("validate_double_well needs n_samples >= 3");
    constexpr double tol = 1e-12;
    WellValidation report;

    const double wm = W.eval(-1.0), wp = W.eval(1.0);
    report.checks.push_back({"W(-1)=0", std::abs(wm) <= tol, wm});
    report.checks.push_back({"W(1)=0", std::abs(wp) <= tol, wp});

    const double dm = W.deriv(-1.0), dp = W.deriv(1.0);
    const double dworst = std::max(std::abs(dm), std::abs(dp));
    report.checks.push_back({"W'(+-1)=0", dworst <= tol, dworst});

    // interior positivity on the open interval
    double wmin = INFINITY;
    for (int i = 1; i < n_samples - 1; ++i) {
        const double r = -1.0 + 2.0 * i / (n_samples - 1);
        wmin = std::min(wmin, W.eval(r));
    }
    report.checks.push_back({"W>0 on (-1,1)", wmin > 0.0, wmin});

    const double cm = W.deriv2(-1.0), cp = W.deriv2(1.0);
    report.checks.push_back({"W''(+-1)>0", cm > 0.0 && cp > 0.0, std::min(cm, cp)});
    return report;
}

}  // namespace fraclayer
