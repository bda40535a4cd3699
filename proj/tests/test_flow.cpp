#include <doctest.h>

#include <cmath>

#include "magflow/flow.hpp"

using namespace magflow;

namespace {

UnitTangentState state(double u, double v, double du, double dv) {
    return UnitTangentState{{u, v}, {du, dv}};
}

} // namespace

TEST_SUITE("flow") {

TEST_CASE("vector field") {
    TangentVector dx, dv;

    SurfaceModel flat0 = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    vector_field(flat0, state(0, 0, 1, 0), dx, dv);
    CHECK(dx.du == doctest::Approx(1.0));
    CHECK(dx.dv == doctest::Approx(0.0));
    CHECK(dv.du == doctest::Approx(0.0));
    CHECK(dv.dv == doctest::Approx(0.0));

    SurfaceModel flat1 = SurfaceModel::flat_torus(1.0, 1.0, 1.0);
    vector_field(flat1, state(0, 0, 1, 0), dx, dv);
    CHECK(dv.du == doctest::Approx(0.0));
    CHECK(dv.dv == doctest::Approx(1.0)); // Lorentz force rotates the velocity

    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.0);
    vector_field(hyp, state(0, 1, 1, 0), dx, dv);
    CHECK(dx.du == doctest::Approx(1.0));
    CHECK(dv.du == doctest::Approx(0.0));
    CHECK(dv.dv == doctest::Approx(-1.0));
}

TEST_CASE("single step is exact on straight lines") {
    SurfaceModel flat = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    UnitTangentState next = step(flat, state(0, 0, 1, 0), 0.25);
    CHECK(next.point.u == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(next.point.v == doctest::Approx(0.0));
    CHECK(next.velocity.du == doctest::Approx(1.0));
    CHECK(next.velocity.dv == doctest::Approx(0.0));
}

TEST_CASE("Larmor circle closes after one period") {
    // s = 2 pi, b = 1: radius 1/(2 pi), period 1
    SurfaceModel m = SurfaceModel::flat_torus(1.0, 1.0, 2.0 * M_PI);
    UnitTangentState cur = state(0.3, 0.3, 1, 0);
    FlowOptions opts;
    opts.renormalize = false;
    const int n = 1000;
    for (int i = 0; i < n; ++i) cur = step(m, cur, 1.0 / n, opts);
    CHECK(std::abs(cur.point.u - 0.3) < 1e-8);
    CHECK(std::abs(cur.point.v - 0.3) < 1e-8);
    CHECK(std::abs(cur.velocity.du - 1.0) < 1e-8);
    CHECK(std::abs(cur.velocity.dv - 0.0) < 1e-8);
}

TEST_CASE("per-step energy deviation is fifth order") {
    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.6);
    FlowOptions opts;
    opts.renormalize = false;
    double errs[3];
    double hs[3] = {0.2, 0.1, 0.05};
    for (int k = 0; k < 3; ++k) {
        UnitTangentState next = step(hyp, state(0.0, 1.0, 0.8, 0.6), hs[k], opts);
        errs[k] = std::abs(energy(hyp, next) - 1.0);
    }
    double slope = std::log(errs[0] / errs[2]) / std::log(hs[0] / hs[2]);
    CHECK(slope > 4.5);
    CHECK(slope < 5.5);
}

TEST_CASE("flow endpoints") {
    SurfaceModel flat = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    TrajectorySample tr = flow(flat, state(0, 0, 0.6, 0.8), 1.0, 1e-3);
    CHECK_FALSE(tr.failure_time.has_value());
    CHECK(tr.states.back().point.u == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(tr.states.back().point.v == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(tr.energy_drift < 1e-12);
    CHECK(tr.times.front() == 0.0);
    CHECK(tr.times.back() == doctest::Approx(1.0));

    // half Larmor circle of radius 1: (0,0) -> (0,2)
    SurfaceModel big = SurfaceModel::flat_torus(4.0, 4.0, 1.0);
    tr = flow(big, state(0, 0, 1, 0), M_PI, 1e-3);
    CHECK(std::abs(tr.states.back().point.u - 0.0) < 1e-9);
    CHECK(std::abs(tr.states.back().point.v - 2.0) < 1e-9);

    // vertical half-plane geodesic y(t) = e^t
    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.0);
    tr = flow(hyp, state(0, 1, 0, 1), 1.0, 1e-3);
    CHECK(tr.states.back().point.u == doctest::Approx(0.0));
    CHECK(tr.states.back().point.v == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
    CHECK(tr.states.back().velocity.dv == doctest::Approx(std::exp(1.0)).epsilon(1e-9));
}

TEST_CASE("energy") {
    SurfaceModel flat = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    CHECK(energy(flat, state(0, 0, 3, 4)) == doctest::Approx(5.0));
    CHECK(energy(flat, state(0.5, 0.5, 0.6, 0.8)) == doctest::Approx(1.0));
    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.0);
    CHECK(energy(hyp, state(0, 2, 2, 0)) == doctest::Approx(1.0));
}

TEST_CASE("energy conservation without renormalization") {
    SurfaceModel systems[] = {
        SurfaceModel::flat_torus(1.0, 1.0, 1.0),
        SurfaceModel::hyperbolic_plane(0.6),
        SurfaceModel::conformal_torus(1.0, 1.0, Expr::parse("0.1*sin(2*pi*u)*cos(2*pi*v)"),
                                      Expr::parse("1+0.5*sin(2*pi*v)"), 0.7),
    };
    double T[] = {20.0, 20.0, 10.0};
    int k = 0;
    for (const SurfaceModel& m : systems) {
        UnitTangentState theta0 = unit_state(m, {0.2, m.is_torus() ? 0.3 : 1.0}, 0.9);
        TrajectorySample tr = flow(m, theta0, T[k], 1e-3, /*renormalize=*/false);
        CHECK_FALSE(tr.failure_time.has_value());
        CHECK(tr.energy_drift <= 1e-9 * T[k]);
        ++k;
    }
}

TEST_CASE("time reversal returns to the start") {
    SurfaceModel flat = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    UnitTangentState theta0 = state(0.1, 0.2, 0.28, 0.96);
    double T = 3.7;
    TrajectorySample fwd = flow(flat, theta0, T, 1e-3);
    UnitTangentState back = fwd.states.back();
    back.velocity.du = -back.velocity.du;
    back.velocity.dv = -back.velocity.dv;
    TrajectorySample rev = flow(flat, back, T, 1e-3);
    UnitTangentState end = rev.states.back();
    TangentVector d = displacement(flat, end.point, theta0.point);
    CHECK(std::hypot(d.du, d.dv) < 1e-8);
    CHECK(std::abs(-end.velocity.du - theta0.velocity.du) < 1e-8);
    CHECK(std::abs(-end.velocity.dv - theta0.velocity.dv) < 1e-8);
}

TEST_CASE("leaving the chart is an integration error") {
    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.0);
    CHECK_THROWS_AS(step(hyp, state(0.0, 0.5, 0.0, -1.0), 1.0), IntegrationError);
    // flow reports the partial trajectory instead of throwing
    TrajectorySample tr = flow(hyp, state(0.0, 0.5, 0.0, -1.0), 10.0, 1.0);
    CHECK(tr.failure_time.has_value());
    CHECK(tr.states.size() >= 1);
}

TEST_CASE("input validation") {
    SurfaceModel flat = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    CHECK_THROWS_AS(flow(flat, state(0, 0, 1, 0), -1.0, 1e-3), ConfigurationError);
    CHECK_THROWS_AS(flow(flat, state(0, 0, 1, 0), 1.0, 0.0), ConfigurationError);
}

} // TEST_SUITE
