#pragma once

#include <cmath>
#include <vector>

#include "magflow/variational.hpp"

namespace magflow {

class RefinementError : public std::runtime_error {
public:
    explicit RefinementError(const std::string& msg) : std::runtime_error(msg) {}
};

class SingularJacobianError : public std::runtime_error {
public:
    explicit SingularJacobianError(const std::string& msg) : std::runtime_error(msg) {}
};

class DegenerateTargetError : public std::runtime_error {
public:
    explicit DegenerateTargetError(const std::string& msg) : std::runtime_error(msg) {}
};

// One connecting trajectory: launch angle at x, arrival time at y.
struct ConnectionRoot {
    double angle = 0.0;        // in [0, 2 pi)
    double t = 0.0;            // arrival time, equals the arc length (unit speed)
    double residual = 0.0;     // chart distance from the shot endpoint to y
    double jacobian_det = 0.0; // signed alpha-determinant at arrival
};

struct CountOptions {
    int n_angle = 720;
    double time_cell = 0.05;   // scan resolution in t; n_time = T / time_cell
    double step = 0.01;        // integrator step for shooting and refinement
    double tol_pos = 1e-6;     // chart-distance convergence tolerance
    double t_min = 0.1;        // >= 10 * step; excludes the degenerate t -> 0 fiber
    int max_newton = 25;
    bool allow_equal_endpoints = false; // x == y is continuum-degenerate by default

    double dedupe_angle() const { return M_PI / n_angle; } // half an angle cell
    double dedupe_time() const { return 0.5 * time_cell; }
};

struct CountFlags {
    bool suspected_multiplicity = false; // some root with |jacobian_det| < 1e-4
    bool continuum_degenerate = false;   // a ring of roots at one arrival time
    long cells_scanned = 0;
    long newton_seeds = 0;
    long newton_failures = 0;
};

struct CountResult {
    long count = 0;
    std::vector<ConnectionRoot> roots; // sorted by (angle, t)
    CountFlags flags;
};

// Endpoint of the trajectory launched from x at the given angle after time t.
ChartPoint shoot(const SurfaceModel& surface, ChartPoint x, double angle, double t,
                 const CountOptions& opts = {});

// Damped Newton on the shooting map f(angle, t); the Jacobian columns are the
// pushed-forward vertical variation and the velocity, both taken from the
// variational integration.
ConnectionRoot refine_root(const SurfaceModel& surface, ChartPoint x, ChartPoint y, double guess_angle,
                           double guess_t, double T, const CountOptions& opts);

// n_T(x, y): grid scan over launch angle and arrival time, Newton refinement
// of locally minimal cells, deduplication in parameter space.
CountResult count_connections(const SurfaceModel& surface, ChartPoint x, ChartPoint y, double T,
                              const CountOptions& opts = {});

} // namespace magflow
