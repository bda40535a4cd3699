#pragma once

#include <optional>
#include <string>
#include <vector>

#include "magflow/counting.hpp"
#include "magflow/fit.hpp"

namespace magflow {

struct IntegralEstimate {
    double value = 0.0;
    double std_error = 0.0;
    long n_samples = 0;
    double T = 0.0;
    long n_failed = 0;    // integration failures (rhs) / unrecoverable pairs (lhs)
    long n_resampled = 0; // continuum-degenerate pairs replaced by fresh draws
    bool rejected = false; // more than 1% of samples failed
};

// Monte Carlo estimate of the time-integrated |det| averaged over the unit
// tangent bundle, scaled by the Liouville volume 2 pi area(M).
IntegralEstimate rhs_integral(const SurfaceModel& surface, double T, long n_theta, double h,
                              std::uint64_t seed, int workers = 1);

// Same samples evaluated at every T in T_list (nested quadrature: the value
// is nondecreasing in T by construction).
std::vector<IntegralEstimate> rhs_series(const SurfaceModel& surface,
                                         const std::vector<double>& T_list, long n_theta, double h,
                                         std::uint64_t seed, int workers = 1);

// Monte Carlo estimate of the averaged trajectory count: area^2 times the mean
// of count_connections over area-uniform endpoint pairs.
IntegralEstimate lhs_integral(const SurfaceModel& surface, double T, long n_pairs,
                              const CountOptions& opts, std::uint64_t seed, int workers = 1);

// One count per pair at max(T_list); counts at smaller T reuse the same roots.
std::vector<IntegralEstimate> lhs_series(const SurfaceModel& surface,
                                         const std::vector<double>& T_list, long n_pairs,
                                         const CountOptions& opts, std::uint64_t seed,
                                         int workers = 1);

enum class ReportStatus { Pass, Fail, Incomplete };

struct LemmaRow {
    double T = 0.0;
    IntegralEstimate lhs, rhs;
    double tolerance = 0.0; // 3 sigma + quadrature allowance h * rhs
    bool pass = false;
};

struct LemmaReport {
    std::vector<LemmaRow> rows;
    ReportStatus status = ReportStatus::Incomplete;
    std::string cause; // set when incomplete
};

// Cross-validates the two independent estimates of the counting identity at
// every T in T_list.
LemmaReport lemma_check(const SurfaceModel& surface, const std::vector<double>& T_list,
                        long n_theta, long n_pairs, const CountOptions& opts, double h,
                        std::uint64_t seed, int workers = 1);

struct EntropyReport {
    GrowthEstimate estimate;
    std::optional<double> reference;
    double abs_error = 0.0; // |rate - reference| when a reference is given
    bool pass = true;       // at 0.05 absolute, vacuously true without reference
};

// Exponential growth rate of the determinant integral. On the hyperbolic
// plane: per-trajectory log |det| slope (the integrand is basepoint
// independent there). On tori: slope of the rhs_integral series over
// 15 points in [T_max / 8, T_max].
EntropyReport entropy_report(const SurfaceModel& surface, double T_max, long n_theta, double h,
                             std::uint64_t seed, std::optional<double> reference_rate = {},
                             int workers = 1);

} // namespace magflow
