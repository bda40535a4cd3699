#pragma once

#include <vector>

#include "magflow/fit.hpp"
#include "magflow/flow.hpp"

namespace magflow {

// Base state together with the pushed-forward vertical variation
// (delta_x, delta_v) = d phi_t applied to the unit vertical vector at theta0.
struct VariationalState {
    UnitTangentState base;
    TangentVector delta_x;
    TangentVector delta_v;
};

// Signed alpha-plane determinant det d(pi o phi_t) along one trajectory:
// the oriented g-area spanned by gamma'(t) and the projected vertical
// variation. Vanishes at t = 0 and at conjugate points.
struct DeterminantTrace {
    std::vector<double> times;
    std::vector<double> det_values;
    TrajectorySample trajectory;
};

// Integrate the flow coupled with its exact linearization along the vertical
// direction. Initial variation: delta_x = 0, delta_v = i_g v (g-unit).
// The linearization never renormalizes, so it is the exact derivative of the
// integrated discrete flow.
std::vector<VariationalState> variational_flow(const SurfaceModel& surface,
                                               const UnitTangentState& theta0, double T, double h);

// Same integration, but only the endpoint at time t.
VariationalState variational_endpoint(const SurfaceModel& surface, const UnitTangentState& theta0,
                                      double t, double h);

// det(t) sampled at every integration step.
DeterminantTrace alpha_determinant_along(const SurfaceModel& surface,
                                         const UnitTangentState& theta0, double T, double h);

// Tail-window slope of log |det(t)|; values below the 1e-8 floor are excluded
// and counted.
GrowthEstimate log_det_growth(const SurfaceModel& surface, const UnitTangentState& theta0,
                              double T, double h, double window_fraction = 0.5);

double alpha_determinant(const SurfaceModel& surface, const VariationalState& vs);

} // namespace magflow
