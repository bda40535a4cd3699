#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace magflow {

class DegenerateFitError : public std::runtime_error {
public:
    explicit DegenerateFitError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GrowthEstimate {
    std::vector<double> T_values;
    std::vector<double> log_values;
    double rate = 0.0;
    double ci_half_width = 0.0; // 2x the OLS slope standard error
    double window_lo = 0.0, window_hi = 0.0;
    long n_excluded = 0; // samples below the log floor, dropped from the fit
};

// OLS slope of log(value) against T over the final window_fraction of the
// T range. Requires at least 8 positive values in the window.
GrowthEstimate growth_rate(const std::vector<std::pair<double, double>>& series,
                           double window_fraction = 0.5, double floor = 0.0);

} // namespace magflow
