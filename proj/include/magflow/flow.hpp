#pragma once

#include <optional>
#include <vector>

#include "magflow/geometry.hpp"

namespace magflow {

struct TrajectorySample {
    std::vector<double> times;
    std::vector<UnitTangentState> states;
    // max over samples of | |v|_g - 1 | measured before any renormalization
    double energy_drift = 0.0;
    // set when integration left the chart; states hold the partial trajectory
    std::optional<double> failure_time;
};

struct FlowOptions {
    double h = 1e-3;
    // Project the velocity back onto |v|_g = 1 after each step. The
    // pre-projection deviation still feeds energy_drift.
    bool renormalize = true;
};

class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& msg, UnitTangentState last, double time)
        : std::runtime_error(msg), last_valid(last), failure_time(time) {}
    UnitTangentState last_valid;
    double failure_time;
};

// Magnetic vector field in chart coordinates:
//   x' = v,   v'^k = -Gamma^k_ij v^i v^j + s b(x) (i_g v)^k
void vector_field(const SurfaceModel& surface, const UnitTangentState& state, TangentVector& dx,
                  TangentVector& dv);

// One classical RK4 step. Accumulates the pre-renormalization speed deviation
// into *drift when given. Torus points are wrapped.
UnitTangentState step(const SurfaceModel& surface, const UnitTangentState& state, double h,
                      const FlowOptions& opts = {}, double* drift = nullptr);

// Integrate to time T with fixed step h (last step shortened), recording every
// step. On chart exit returns the partial trajectory with failure_time set.
TrajectorySample flow(const SurfaceModel& surface, const UnitTangentState& theta0, double T,
                      double h, bool renormalize = true);

// |v|_g at the state's base point (so 2H = energy^2).
double energy(const SurfaceModel& surface, const UnitTangentState& state);

namespace detail {

struct RawState {
    double u, v, du, dv;
};

// n fixed-size RK4 steps without wrapping, renormalization, or domain checks;
// the hot loop behind the grid scan of the connection counter.
void rk4_advance(const SurfaceModel& surface, RawState& s, long n_steps, double h);

} // namespace detail

} // namespace magflow
