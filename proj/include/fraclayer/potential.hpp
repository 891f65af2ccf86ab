#pragma once

#include <functional>
#include <string>
#include <vector>

namespace fraclayer {

/// Double-well potential: W >= 0, zero and non-degenerate exactly at +-1.
struct DoubleWell {
    std::function<double(double)> eval;
    std::function<double(double)> deriv;
    std::function<double(double)> deriv2;
    std::string name;

    double operator()(double u) const { return eval(u); }
};

/// W(u) = (1 - u^2)^2 / 4.
DoubleWell make_quartic();

/// Looks up a registered well by name; throws RangeError for unknown names.
DoubleWell make_potential(const std::string& name);
std::vector<std::string> potential_names();

struct WellCheck {
    std::string condition;
    bool passed = false;
    double worst = 0.0;  // offending value (residual or minimum)
};

struct WellValidation {
    std::vector<WellCheck> checks;
    bool ok() const;
    bool passed(const std::string& condition) const;
};

/// Checks the four double-well conditions on a uniform sample of (-1,1)
/// plus the endpoints. Failures are recorded, never thrown.
WellValidation validate_double_well(const DoubleWell& W, int n_samples);

}  // namespace fraclayer
