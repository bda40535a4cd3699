#include "magflow/flow.hpp"

#include <cmath>

namespace magflow {

void vector_field(const SurfaceModel& surface, const UnitTangentState& state, TangentVector& dx,
                  TangentVector& dv) {
    const ChartPoint& p = state.point;
    const TangentVector& v = state.velocity;
    LambdaJet j = surface.lambda_jet(p);
    double sb = surface.field_strength() == 0.0
                    ? 0.0
                    : surface.field_strength() * surface.field(p);
    dx = v;
    // Gamma contraction for the conformal metric, written out.
    dv.du = -(j.du * v.du * v.du + 2.0 * j.dv * v.du * v.dv - j.du * v.dv * v.dv) - sb * v.dv;
    dv.dv = -(-j.dv * v.du * v.du + 2.0 * j.du * v.du * v.dv + j.dv * v.dv * v.dv) + sb * v.du;
}

namespace {

struct State4 {
    double u, v, du, dv;
};

inline State4 to4(const UnitTangentState& s) {
    return State4{s.point.u, s.point.v, s.velocity.du, s.velocity.dv};
}

inline void deriv(const SurfaceModel& surface, const State4& s, State4& d) {
    if (surface.is_flat_constant_field()) {
        double sb = surface.field_strength() * surface.constant_field_value();
        d = State4{s.du, s.dv, -sb * s.dv, sb * s.du};
        return;
    }
    UnitTangentState st{{s.u, s.v}, {s.du, s.dv}};
    TangentVector dx, dv;
    vector_field(surface, st, dx, dv);
    d = State4{dx.du, dx.dv, dv.du, dv.dv};
}

inline UnitTangentState rk4_raw(const SurfaceModel& surface, const UnitTangentState& state,
                                double h) {
    State4 y = to4(state), k1, k2, k3, k4, t;
    deriv(surface, y, k1);
    t = {y.u + 0.5 * h * k1.u, y.v + 0.5 * h * k1.v, y.du + 0.5 * h * k1.du,
         y.dv + 0.5 * h * k1.dv};
    deriv(surface, t, k2);
    t = {y.u + 0.5 * h * k2.u, y.v + 0.5 * h * k2.v, y.du + 0.5 * h * k2.du,
         y.dv + 0.5 * h * k2.dv};
    deriv(surface, t, k3);
    t = {y.u + h * k3.u, y.v + h * k3.v, y.du + h * k3.du, y.dv + h * k3.dv};
    deriv(surface, t, k4);
    const double w = h / 6.0;
    return UnitTangentState{
        {y.u + w * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u),
         y.v + w * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v)},
        {y.du + w * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du),
         y.dv + w * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv)}};
}

} // namespace

UnitTangentState step(const SurfaceModel& surface, const UnitTangentState& state, double h,
                      const FlowOptions& opts, double* drift) {
    UnitTangentState next = rk4_raw(surface, state, h);
    if (!surface.in_domain(next.point))
        throw IntegrationError("step left the chart domain", state, 0.0);
    double speed = g_norm(surface, next.point, next.velocity);
    if (drift) *drift = std::max(*drift, std::abs(speed - 1.0));
    if (opts.renormalize && speed > 0.0) {
        next.velocity.du /= speed;
        next.velocity.dv /= speed;
    }
    if (surface.is_torus()) next.point = wrap(surface, next.point);
    return next;
}

TrajectorySample flow(const SurfaceModel& surface, const UnitTangentState& theta0, double T,
                      double h, bool renormalize) {
    if (!(T > 0.0) || !(h > 0.0))
        throw ConfigurationError("flow: T and h must be positive");
    FlowOptions opts{h, renormalize};
    TrajectorySample traj;
    long n_full = static_cast<long>(std::floor(T / h + 1e-12));
    double tail = T - n_full * h;
    traj.times.reserve(n_full + 2);
    traj.states.reserve(n_full + 2);
    traj.times.push_back(0.0);
    traj.states.push_back(theta0);
    UnitTangentState cur = theta0;
    double t = 0.0;
    try {
        for (long i = 0; i < n_full; ++i) {
            cur = step(surface, cur, h, opts, &traj.energy_drift);
            t = (i + 1) * h;
            traj.times.push_back(t);
            traj.states.push_back(cur);
        }
        if (tail > 1e-12 * std::max(1.0, T)) {
            cur = step(surface, cur, tail, opts, &traj.energy_drift);
            traj.times.push_back(T);
            traj.states.push_back(cur);
        }
    } catch (const IntegrationError&) {
        traj.failure_time = t;
    }
    return traj;
}

double energy(const SurfaceModel& surface, const UnitTangentState& state) {
    return g_norm(surface, state.point, state.velocity);
}

namespace detail {

void rk4_advance(const SurfaceModel& surface, RawState& s, long n_steps, double h) {
    State4 y{s.u, s.v, s.du, s.dv};
    State4 k1, k2, k3, k4, t;
    for (long i = 0; i < n_steps; ++i) {
        deriv(surface, y, k1);
        t = {y.u + 0.5 * h * k1.u, y.v + 0.5 * h * k1.v, y.du + 0.5 * h * k1.du,
             y.dv + 0.5 * h * k1.dv};
        deriv(surface, t, k2);
        t = {y.u + 0.5 * h * k2.u, y.v + 0.5 * h * k2.v, y.du + 0.5 * h * k2.du,
             y.dv + 0.5 * h * k2.dv};
        deriv(surface, t, k3);
        t = {y.u + h * k3.u, y.v + h * k3.v, y.du + h * k3.du, y.dv + h * k3.dv};
        deriv(surface, t, k4);
        const double w = h / 6.0;
        y.u += w * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
        y.v += w * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
        y.du += w * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
        y.dv += w * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    }
    s = RawState{y.u, y.v, y.du, y.dv};
}

} // namespace detail

} // namespace magflow
