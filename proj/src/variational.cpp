#include "magflow/variational.hpp"

#include <cmath>

namespace magflow {

namespace {

struct State8 {
    double u, v, du, dv;     // base trajectory
    double xu, xv, wu, wv;   // delta_x, delta_v
};

// Coupled field: base magnetic equation plus its exact linearization.
void deriv8(const SurfaceModel& surface, const State8& s, State8& d) {
    if (surface.is_flat_constant_field()) {
        double sb = surface.field_strength() * surface.constant_field_value();
        d.u = s.du;
        d.v = s.dv;
        d.du = -sb * s.dv;
        d.dv = sb * s.du;
        d.xu = s.wu;
        d.xv = s.wv;
        d.wu = -sb * s.wv;
        d.wv = sb * s.wu;
        return;
    }
    ChartPoint p{s.u, s.v};
    LambdaJet j = surface.lambda_jet(p);
    double sgn = surface.field_strength();
    double b = 0.0, bu = 0.0, bv = 0.0;
    if (sgn != 0.0) {
        b = surface.field(p);
        surface.field_grad(p, bu, bv);
    }
    double sb = sgn * b;

    double vu = s.du, vv = s.dv;

    d.u = vu;
    d.v = vv;
    d.du = -(j.du * vu * vu + 2.0 * j.dv * vu * vv - j.du * vv * vv) - sb * vv;
    d.dv = -(-j.dv * vu * vu + 2.0 * j.du * vu * vv + j.dv * vv * vv) + sb * vu;

    // dA/dx and dA/dv blocks of the Jacobian of the acceleration A(x, v).
    double A1_u = -(j.duu * (vu * vu - vv * vv) + 2.0 * j.duv * vu * vv) - sgn * bu * vv;
    double A1_v = -(j.duv * (vu * vu - vv * vv) + 2.0 * j.dvv * vu * vv) - sgn * bv * vv;
    double A1_vu = -2.0 * (j.du * vu + j.dv * vv);
    double A1_vv = -2.0 * (j.dv * vu - j.du * vv) - sb;

    double A2_u = j.duv * vu * vu - 2.0 * j.duu * vu * vv - j.duv * vv * vv + sgn * bu * vu;
    double A2_v = j.dvv * vu * vu - 2.0 * j.duv * vu * vv - j.dvv * vv * vv + sgn * bv * vu;
    double A2_vu = 2.0 * (j.dv * vu - j.du * vv) + sb;
    double A2_vv = -2.0 * (j.du * vu + j.dv * vv);

    d.xu = s.wu;
    d.xv = s.wv;
    d.wu = A1_u * s.xu + A1_v * s.xv + A1_vu * s.wu + A1_vv * s.wv;
    d.wv = A2_u * s.xu + A2_v * s.xv + A2_vu * s.wu + A2_vv * s.wv;
}

State8 rk4_step8(const SurfaceModel& surface, const State8& y, double h) {
    State8 k1, k2, k3, k4, t, out;
    deriv8(surface, y, k1);
    auto advance = [&](const State8& k, double f, State8& dst) {
        dst.u = y.u + f * k.u;
        dst.v = y.v + f * k.v;
        dst.du = y.du + f * k.du;
        dst.dv = y.dv + f * k.dv;
        dst.xu = y.xu + f * k.xu;
        dst.xv = y.xv + f * k.xv;
        dst.wu = y.wu + f * k.wu;
        dst.wv = y.wv + f * k.wv;
    };
    advance(k1, 0.5 * h, t);
    deriv8(surface, t, k2);
    advance(k2, 0.5 * h, t);
    deriv8(surface, t, k3);
    advance(k3, h, t);
    deriv8(surface, t, k4);
    const double w = h / 6.0;
    out.u = y.u + w * (k1.u + 2.0 * k2.u + 2.0 * k3.u + k4.u);
    out.v = y.v + w * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    out.du = y.du + w * (k1.du + 2.0 * k2.du + 2.0 * k3.du + k4.du);
    out.dv = y.dv + w * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    out.xu = y.xu + w * (k1.xu + 2.0 * k2.xu + 2.0 * k3.xu + k4.xu);
    out.xv = y.xv + w * (k1.xv + 2.0 * k2.xv + 2.0 * k3.xv + k4.xv);
    out.wu = y.wu + w * (k1.wu + 2.0 * k2.wu + 2.0 * k3.wu + k4.wu);
    out.wv = y.wv + w * (k1.wv + 2.0 * k2.wv + 2.0 * k3.wv + k4.wv);
    return out;
}

State8 initial_state(const SurfaceModel& surface, const UnitTangentState& theta0) {
    surface.require_domain(theta0.point);
    TangentVector vert = rotate90(surface, theta0.point, theta0.velocity);
    return State8{theta0.point.u, theta0.point.v, theta0.velocity.du, theta0.velocity.dv,
                  0.0,            0.0,            vert.du,            vert.dv};
}

VariationalState to_variational(const State8& s) {
    return VariationalState{{{s.u, s.v}, {s.du, s.dv}}, {s.xu, s.xv}, {s.wu, s.wv}};
}

void check_domain(const SurfaceModel& surface, const State8& s, const State8& prev, double t) {
    if (!surface.in_domain(ChartPoint{s.u, s.v}))
        throw IntegrationError("variational step left the chart domain",
                               UnitTangentState{{prev.u, prev.v}, {prev.du, prev.dv}}, t);
}

} // namespace

double alpha_determinant(const SurfaceModel& surface, const VariationalState& vs) {
    return area_form(surface, vs.base.point, vs.base.velocity, vs.delta_x);
}

std::vector<VariationalState> variational_flow(const SurfaceModel& surface,
                                               const UnitTangentState& theta0, double T,
                                               double h) {
    if (!(T > 0.0) || !(h > 0.0))
        throw ConfigurationError("variational_flow: T and h must be positive");
    State8 cur = initial_state(surface, theta0);
    long n_full = static_cast<long>(std::floor(T / h + 1e-12));
    double tail = T - n_full * h;
    std::vector<VariationalState> out;
    out.reserve(n_full + 2);
    out.push_back(to_variational(cur));
    for (long i = 0; i < n_full; ++i) {
        State8 next = rk4_step8(surface, cur, h);
        check_domain(surface, next, cur, i * h);
        cur = next;
        out.push_back(to_variational(cur));
    }
    if (tail > 1e-12 * std::max(1.0, T)) {
        State8 next = rk4_step8(surface, cur, tail);
        check_domain(surface, next, cur, n_full * h);
        cur = next;
        out.push_back(to_variational(cur));
    }
    return out;
}

VariationalState variational_endpoint(const SurfaceModel& surface, const UnitTangentState& theta0,
                                      double t, double h) {
    if (!(t >= 0.0) || !(h > 0.0))
        throw ConfigurationError("variational_endpoint: need t >= 0 and h > 0");
    State8 cur = initial_state(surface, theta0);
    long n_full = static_cast<long>(std::floor(t / h + 1e-12));
    double tail = t - n_full * h;
    for (long i = 0; i < n_full; ++i) {
        State8 next = rk4_step8(surface, cur, h);
        check_domain(surface, next, cur, i * h);
        cur = next;
    }
    if (tail > 1e-12 * std::max(1.0, t)) {
        State8 next = rk4_step8(surface, cur, tail);
        check_domain(surface, next, cur, n_full * h);
        cur = next;
    }
    return to_variational(cur);
}

DeterminantTrace alpha_determinant_along(const SurfaceModel& surface,
                                         const UnitTangentState& theta0, double T, double h) {
    std::vector<VariationalState> states = variational_flow(surface, theta0, T, h);
    DeterminantTrace trace;
    trace.times.reserve(states.size());
    trace.det_values.reserve(states.size());
    trace.trajectory.times.reserve(states.size());
    trace.trajectory.states.reserve(states.size());
    long n_full = static_cast<long>(std::floor(T / h + 1e-12));
    for (size_t i = 0; i < states.size(); ++i) {
        double t = static_cast<long>(i) <= n_full ? i * h : T;
        trace.times.push_back(t);
        trace.det_values.push_back(alpha_determinant(surface, states[i]));
        trace.trajectory.times.push_back(t);
        trace.trajectory.states.push_back(states[i].base);
        double drift = std::abs(energy(surface, states[i].base) - 1.0);
        trace.trajectory.energy_drift = std::max(trace.trajectory.energy_drift, drift);
    }
    return trace;
}

GrowthEstimate log_det_growth(const SurfaceModel& surface, const UnitTangentState& theta0,
                              double T, double h, double window_fraction) {
    DeterminantTrace trace = alpha_determinant_along(surface, theta0, T, h);
    std::vector<std::pair<double, double>> series;
    series.reserve(trace.times.size());
    for (size_t i = 0; i < trace.times.size(); ++i)
        series.emplace_back(trace.times[i], std::abs(trace.det_values[i]));
    return growth_rate(series, window_fraction, 1e-8);
}

} // namespace magflow
