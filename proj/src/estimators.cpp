#include "magflow/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace magflow {

namespace {

// Strided parallel map; results land in index order, so reductions are
// bitwise independent of the worker count.
template <class F>
void parallel_for(long n, int workers, F&& body) {
    workers = std::max(1, workers);
    if (workers == 1 || n < 2) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (long i = w; i < n; i += workers) body(i);
        });
    for (auto& th : pool) th.join();
}

struct MeanVar {
    double mean = 0.0;
    double se = 0.0;
};

MeanVar mean_and_se(const std::vector<double>& xs) {
    MeanVar mv;
    long n = static_cast<long>(xs.size());
    if (n == 0) return mv;
    double sum = 0.0;
    for (double x : xs) sum += x;
    mv.mean = sum / n;
    if (n > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - mv.mean) * (x - mv.mean);
        mv.se = std::sqrt(ss / (n - 1) / n);
    }
    return mv;
}

std::vector<double> sorted_unique(std::vector<double> ts) {
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

} // namespace

GrowthEstimate growth_rate(const std::vector<std::pair<double, double>>& series,
                           double window_fraction, double floor) {
    if (series.empty()) throw DegenerateFitError("growth_rate: empty series");
    double T_lo = series.front().first, T_hi = series.front().first;
    for (const auto& [t, v] : series) {
        T_lo = std::min(T_lo, t);
        T_hi = std::max(T_hi, t);
    }
    GrowthEstimate est;
    est.window_lo = T_hi - window_fraction * (T_hi - T_lo);
    est.window_hi = T_hi;
    for (const auto& [t, v] : series) {
        if (t < est.window_lo) continue;
        if (floor > 0.0 && v < floor) {
            ++est.n_excluded;
            continue;
        }
        if (v <= 0.0) throw DegenerateFitError("growth_rate: nonpositive value in fit window");
        est.T_values.push_back(t);
        est.log_values.push_back(std::log(v));
    }
    long n = static_cast<long>(est.T_values.size());
    if (n < 8) throw DegenerateFitError("growth_rate: fewer than 8 usable points in window");
    double tm = 0.0, ym = 0.0;
    for (long i = 0; i < n; ++i) {
        tm += est.T_values[i];
        ym += est.log_values[i];
    }
    tm /= n;
    ym /= n;
    double sxx = 0.0, sxy = 0.0;
    for (long i = 0; i < n; ++i) {
        double dx = est.T_values[i] - tm;
        sxx += dx * dx;
        sxy += dx * (est.log_values[i] - ym);
    }
    if (sxx == 0.0) throw DegenerateFitError("growth_rate: degenerate T values");
    est.rate = sxy / sxx;
    double rss = 0.0;
    for (long i = 0; i < n; ++i) {
        double r = est.log_values[i] - ym - est.rate * (est.T_values[i] - tm);
        rss += r * r;
    }
    double slope_se = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0.0;
    est.ci_half_width = 2.0 * slope_se;
    return est;
}

std::vector<IntegralEstimate> rhs_series(const SurfaceModel& surface,
                                         const std::vector<double>& T_list, long n_theta, double h,
                                         std::uint64_t seed, int workers) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("rhs_integral: requires a compact (torus) surface");
    std::vector<double> ts = sorted_unique(T_list);
    if (ts.empty() || n_theta <= 0)
        throw ConfigurationError("rhs_integral: need at least one T and one sample");
    double T_max = ts.back();
    double scale = 2.0 * M_PI * area(surface);

    size_t n_T = ts.size();
    std::vector<std::vector<double>> per_sample(n_theta);
    std::vector<char> failed(n_theta, 0);
    parallel_for(n_theta, workers, [&](long i) {
        CounterRng rng(seed, rng_stream::kThetaSamples + static_cast<std::uint64_t>(i));
        UnitTangentState theta = sample_unit_tangent(surface, rng);
        std::vector<double> vals(n_T, 0.0);
        if (T_max <= 0.0) {
            per_sample[i] = std::move(vals);
            return;
        }
        try {
            DeterminantTrace trace = alpha_determinant_along(surface, theta, T_max, h);
            // Cumulative trapezoid of |det|, read off at each checkpoint.
            size_t k = 0;
            double acc = 0.0;
            for (size_t j = 0; j < n_T; ++j) {
                double Tj = ts[j];
                while (k + 1 < trace.times.size() && trace.times[k + 1] <= Tj + 1e-12) {
                    acc += 0.5 * (std::abs(trace.det_values[k]) + std::abs(trace.det_values[k + 1])) *
                           (trace.times[k + 1] - trace.times[k]);
                    ++k;
                }
                double val = acc;
                if (k + 1 < trace.times.size() && trace.times[k] < Tj) {
                    // partial cell, linear in the integrand
                    double frac = (Tj - trace.times[k]) / (trace.times[k + 1] - trace.times[k]);
                    double d0 = std::abs(trace.det_values[k]);
                    double d1 = std::abs(trace.det_values[k + 1]);
                    double dm = d0 + frac * (d1 - d0);
                    val += 0.5 * (d0 + dm) * frac * (trace.times[k + 1] - trace.times[k]);
                }
                vals[j] = val;
            }
            per_sample[i] = std::move(vals);
        } catch (const IntegrationError&) {
            failed[i] = 1;
        }
    });

    std::vector<IntegralEstimate> out(n_T);
    long n_failed = 0;
    for (long i = 0; i < n_theta; ++i)
        if (failed[i]) ++n_failed;
    for (size_t j = 0; j < n_T; ++j) {
        std::vector<double> vals;
        vals.reserve(n_theta);
        for (long i = 0; i < n_theta; ++i)
            if (!failed[i]) vals.push_back(per_sample[i][j]);
        MeanVar mv = mean_and_se(vals);
        IntegralEstimate& e = out[j];
        e.T = ts[j];
        e.n_samples = static_cast<long>(vals.size());
        e.n_failed = n_failed;
        e.value = scale * mv.mean;
        e.std_error = scale * mv.se;
        e.rejected = n_failed * 100 > n_theta;
    }
    return out;
}

IntegralEstimate rhs_integral(const SurfaceModel& surface, double T, long n_theta, double h,
                              std::uint64_t seed, int workers) {
    return rhs_series(surface, {T}, n_theta, h, seed, workers).front();
}

std::vector<IntegralEstimate> lhs_series(const SurfaceModel& surface,
                                         const std::vector<double>& T_list, long n_pairs,
                                         const CountOptions& opts, std::uint64_t seed,
                                         int workers) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("lhs_integral: requires a compact (torus) surface");
    std::vector<double> ts = sorted_unique(T_list);
    if (ts.empty() || n_pairs <= 0)
        throw ConfigurationError("lhs_integral: need at least one T and one pair");
    double T_max = ts.back();
    double area2 = area(surface) * area(surface);
    size_t n_T = ts.size();

    constexpr int kMaxAttempts = 5;
    std::vector<std::vector<double>> per_pair(n_pairs);
    std::vector<char> failed(n_pairs, 0);
    std::vector<char> resampled(n_pairs, 0);
    parallel_for(n_pairs, workers, [&](long i) {
        std::vector<double> counts(n_T, 0.0);
        bool ok = false;
        for (int attempt = 0; attempt < kMaxAttempts && !ok; ++attempt) {
            std::uint64_t stream =
                attempt == 0 ? rng_stream::kPairSamples + static_cast<std::uint64_t>(i)
                             : rng_stream::kPairResample +
                                   static_cast<std::uint64_t>(attempt) * 0x100000000ull +
                                   static_cast<std::uint64_t>(i);
            CounterRng rng(seed, stream);
            ChartPoint x = sample_area_point(surface, rng);
            ChartPoint y = sample_area_point(surface, rng);
            if (attempt > 0) resampled[i] = 1;
            try {
                if (T_max < opts.t_min) {
                    ok = true; // every count is zero below the minimum arrival time
                    break;
                }
                CountResult res = count_connections(surface, x, y, T_max, opts);
                if (res.flags.continuum_degenerate) continue; // resample
                for (size_t j = 0; j < n_T; ++j) {
                    long c = 0;
                    for (const ConnectionRoot& r : res.roots)
                        if (r.t <= ts[j] + 1e-12) ++c;
                    counts[j] = static_cast<double>(c);
                }
                ok = true;
            } catch (const DegenerateTargetError&) {
                continue; // x landed on y, resample
            }
        }
        if (ok)
            per_pair[i] = std::move(counts);
        else
            failed[i] = 1;
    });

    long n_failed = 0, n_resampled = 0;
    for (long i = 0; i < n_pairs; ++i) {
        if (failed[i]) ++n_failed;
        if (resampled[i]) ++n_resampled;
    }
    std::vector<IntegralEstimate> out(n_T);
    for (size_t j = 0; j < n_T; ++j) {
        std::vector<double> vals;
        vals.reserve(n_pairs);
        for (long i = 0; i < n_pairs; ++i)
            if (!failed[i]) vals.push_back(per_pair[i][j]);
        MeanVar mv = mean_and_se(vals);
        IntegralEstimate& e = out[j];
        e.T = ts[j];
        e.n_samples = static_cast<long>(vals.size());
        e.n_failed = n_failed;
        e.n_resampled = n_resampled;
        e.value = area2 * mv.mean;
        e.std_error = area2 * mv.se;
        e.rejected = n_failed * 100 > n_pairs;
    }
    return out;
}

IntegralEstimate lhs_integral(const SurfaceModel& surface, double T, long n_pairs,
                              const CountOptions& opts, std::uint64_t seed, int workers) {
    return lhs_series(surface, {T}, n_pairs, opts, seed, workers).front();
}

LemmaReport lemma_check(const SurfaceModel& surface, const std::vector<double>& T_list,
                        long n_theta, long n_pairs, const CountOptions& opts, double h,
                        std::uint64_t seed, int workers) {
    LemmaReport report;
    std::vector<IntegralEstimate> lhs, rhs;
    try {
        rhs = rhs_series(surface, T_list, n_theta, h, seed, workers);
        lhs = lhs_series(surface, T_list, n_pairs, opts, seed, workers);
    } catch (const std::exception& e) {
        report.status = ReportStatus::Incomplete;
        report.cause = e.what();
        return report;
    }
    bool all_pass = true;
    bool incomplete = false;
    for (size_t j = 0; j < lhs.size(); ++j) {
        LemmaRow row;
        row.T = lhs[j].T;
        row.lhs = lhs[j];
        row.rhs = rhs[j];
        row.tolerance = 3.0 * std::sqrt(lhs[j].std_error * lhs[j].std_error +
                                        rhs[j].std_error * rhs[j].std_error) +
                        h * rhs[j].value;
        row.pass = std::abs(lhs[j].value - rhs[j].value) <= row.tolerance;
        if (lhs[j].rejected || rhs[j].rejected) {
            incomplete = true;
            report.cause = "estimate at T = " + std::to_string(row.T) +
                           " rejected (too many failed samples)";
            row.pass = false;
        }
        all_pass = all_pass && row.pass;
        report.rows.push_back(row);
    }
    report.status = incomplete ? ReportStatus::Incomplete
                               : (all_pass ? ReportStatus::Pass : ReportStatus::Fail);
    return report;
}

EntropyReport entropy_report(const SurfaceModel& surface, double T_max, long n_theta, double h,
                             std::uint64_t seed, std::optional<double> reference_rate,
                             int workers) {
    EntropyReport report;
    report.reference = reference_rate;
    if (surface.kind() == SurfaceKind::HyperbolicPlane) {
        CounterRng rng(seed, rng_stream::kThetaSamples);
        UnitTangentState theta0 =
            unit_state(surface, ChartPoint{0.0, 1.0}, rng.uniform(0.0, 2.0 * M_PI));
        report.estimate = log_det_growth(surface, theta0, T_max, h);
    } else {
        std::vector<double> ts;
        for (int i = 0; i < 15; ++i) ts.push_back(T_max / 8.0 + i * (T_max - T_max / 8.0) / 14.0);
        std::vector<IntegralEstimate> series = rhs_series(surface, ts, n_theta, h, seed, workers);
        std::vector<std::pair<double, double>> pts;
        for (const IntegralEstimate& e : series) pts.emplace_back(e.T, e.value);
        report.estimate = growth_rate(pts);
    }
    if (reference_rate) {
        report.abs_error = std::abs(report.estimate.rate - *reference_rate);
        report.pass = report.abs_error <= 0.05;
    }
    return report;
}

} // namespace magflow
