#include <doctest.h>

#include <cmath>
#include <vector>

#include "magflow/geometry.hpp"

using namespace magflow;

namespace {

SurfaceModel bump_torus() {
    // area density concentrated around (0.5, 0.5)
    Expr lam = Expr::parse("0.5*exp(-((u-0.5)*(u-0.5)+(v-0.5)*(v-0.5))*20)");
    return SurfaceModel::conformal_torus(1.0, 1.0, lam, Expr::constant(1.0), 0.0);
}

} // namespace

TEST_SUITE("geometry") {

TEST_CASE("conformal factor") {
    SurfaceModel flat = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    CHECK(conformal_factor(flat, {0.3, 0.9}) == doctest::Approx(1.0));

    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.0);
    CHECK(conformal_factor(hyp, {0.0, 2.0}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(conformal_factor(hyp, {0.0, -1.0}), ChartDomainError);
    CHECK_THROWS_AS(conformal_factor(hyp, {0.0, 0.0}), ChartDomainError);

    SurfaceModel ct = SurfaceModel::conformal_torus(1.0, 1.0, Expr::constant(std::log(2.0)),
                                                    Expr::constant(1.0), 0.0);
    CHECK(conformal_factor(ct, {0.7, 0.1}) == doctest::Approx(4.0));
}

TEST_CASE("christoffel symbols") {
    SurfaceModel flat = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    Christoffel g = christoffel(flat, {0.2, 0.8});
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(g[k][i][j] == doctest::Approx(0.0));

    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.0);
    Christoffel gh = christoffel(hyp, {0.0, 1.0});
    CHECK(gh[0][0][1] == doctest::Approx(-1.0));
    CHECK(gh[0][1][0] == doctest::Approx(-1.0));
    CHECK(gh[1][0][0] == doctest::Approx(1.0));
    CHECK(gh[1][1][1] == doctest::Approx(-1.0));
    CHECK(gh[0][0][0] == doctest::Approx(0.0));
    CHECK(gh[0][1][1] == doctest::Approx(0.0));
    CHECK(gh[1][0][1] == doctest::Approx(0.0));
    CHECK(gh[1][1][0] == doctest::Approx(0.0));

    SurfaceModel ct = SurfaceModel::conformal_torus(1.0, 1.0, Expr::constant(0.3),
                                                    Expr::constant(1.0), 0.0);
    Christoffel gc = christoffel(ct, {0.4, 0.6});
    for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) CHECK(gc[k][i][j] == doctest::Approx(0.0));
}

TEST_CASE("christoffel matches finite differences of the metric") {
    // Koszul formula for g = e^{2 lambda} delta: Gamma^k_ij from first
    // derivatives of the conformal factor, compared against centered
    // differences.
    std::vector<SurfaceModel> systems;
    systems.push_back(SurfaceModel::hyperbolic_plane(0.0));
    systems.push_back(SurfaceModel::conformal_torus(
        1.0, 1.0, Expr::parse("0.1*sin(2*pi*u)*cos(2*pi*v)"), Expr::constant(1.0), 0.0));
    CounterRng rng(7, rng_stream::kTest);
    const double eps = 1e-5;
    for (const SurfaceModel& m : systems) {
        for (int trial = 0; trial < 20; ++trial) {
            ChartPoint p{rng.uniform(0.05, 0.95), rng.uniform(0.3, 2.0)};
            auto lam = [&](double du, double dv) {
                return 0.5 * std::log(conformal_factor(m, {p.u + du, p.v + dv}));
            };
            double lu = (lam(eps, 0) - lam(-eps, 0)) / (2 * eps);
            double lv = (lam(0, eps) - lam(0, -eps)) / (2 * eps);
            Christoffel g = christoffel(m, p);
            CHECK(g[0][0][0] == doctest::Approx(lu).epsilon(1e-6));
            CHECK(g[0][0][1] == doctest::Approx(lv).epsilon(1e-6));
            CHECK(g[0][1][1] == doctest::Approx(-lu).epsilon(1e-6));
            CHECK(g[1][0][0] == doctest::Approx(-lv).epsilon(1e-6));
            CHECK(g[1][0][1] == doctest::Approx(lu).epsilon(1e-6));
            CHECK(g[1][1][1] == doctest::Approx(lv).epsilon(1e-6));
            CHECK(g[0][1][0] == g[0][0][1]);
            CHECK(g[1][1][0] == g[1][0][1]);
        }
    }
}

TEST_CASE("rotate90") {
    SurfaceModel flat = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    TangentVector r = rotate90(flat, {0.0, 0.0}, {1.0, 0.0});
    CHECK(r.du == doctest::Approx(0.0));
    CHECK(r.dv == doctest::Approx(1.0));

    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.0);
    ChartPoint p{0.0, 2.0};
    TangentVector w{1.0, 0.0};
    TangentVector rw = rotate90(hyp, p, w);
    CHECK(rw.du == doctest::Approx(0.0));
    CHECK(rw.dv == doctest::Approx(1.0));
    CHECK(g_norm(hyp, p, w) == doctest::Approx(0.5));
    CHECK(g_norm(hyp, p, rw) == doctest::Approx(0.5));

    // i^2 = -id, isometry, and the orientation convention dA(w, iw) = |w|^2
    CounterRng rng(3, rng_stream::kTest);
    SurfaceModel ct = SurfaceModel::conformal_torus(
        1.0, 1.0, Expr::parse("0.2*cos(2*pi*u)"), Expr::constant(1.0), 0.0);
    for (const SurfaceModel* m : {&flat, &hyp, &ct}) {
        for (int trial = 0; trial < 25; ++trial) {
            ChartPoint q{rng.uniform(-1.0, 1.0), rng.uniform(0.2, 2.0)};
            TangentVector v{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
            TangentVector iv = rotate90(*m, q, v);
            TangentVector iiv = rotate90(*m, q, iv);
            CHECK(iiv.du == doctest::Approx(-v.du).epsilon(1e-12));
            CHECK(iiv.dv == doctest::Approx(-v.dv).epsilon(1e-12));
            double n = g_norm(*m, q, v);
            CHECK(g_norm(*m, q, iv) == doctest::Approx(n).epsilon(1e-12));
            CHECK(area_form(*m, q, v, iv) == doctest::Approx(n * n).epsilon(1e-12));
        }
    }
}

TEST_CASE("wrap and displacement") {
    SurfaceModel unit = SurfaceModel::flat_torus(1.0, 1.0, 0.0);
    ChartPoint w = wrap(unit, {1.25, -0.5});
    CHECK(w.u == doctest::Approx(0.25));
    CHECK(w.v == doctest::Approx(0.5));
    w = wrap(unit, {0.0, 0.999});
    CHECK(w.u == doctest::Approx(0.0));
    CHECK(w.v == doctest::Approx(0.999));

    SurfaceModel rect = SurfaceModel::flat_torus(2.0, 3.0, 0.0);
    w = wrap(rect, {-0.5, 3.5});
    CHECK(w.u == doctest::Approx(1.5));
    CHECK(w.v == doctest::Approx(0.5));

    // idempotence
    ChartPoint ww = wrap(rect, w);
    CHECK(ww.u == w.u);
    CHECK(ww.v == w.v);

    TangentVector d = displacement(unit, {0.1, 0.1}, {0.9, 0.1});
    CHECK(d.du == doctest::Approx(-0.2));
    CHECK(d.dv == doctest::Approx(0.0));
    d = displacement(unit, {0.3, 0.4}, {0.3, 0.4});
    CHECK(d.du == doctest::Approx(0.0));
    CHECK(d.dv == doctest::Approx(0.0));
    // boundary convention: exactly half a period maps to +L/2
    d = displacement(unit, {0.0, 0.0}, {0.5, 0.5});
    CHECK(d.du == doctest::Approx(0.5));
    CHECK(d.dv == doctest::Approx(0.5));
    // invariant under period translation of q
    TangentVector d2 = displacement(unit, {0.1, 0.1}, {0.9 + 3.0, 0.1 - 2.0});
    CHECK(d2.du == doctest::Approx(-0.2).epsilon(1e-12));
    CHECK(d2.dv == doctest::Approx(0.0));

    SurfaceModel hyp = SurfaceModel::hyperbolic_plane(0.0);
    CHECK_THROWS_AS(wrap(hyp, {0.0, 1.0}), UnsupportedOperationError);
    CHECK_THROWS_AS(displacement(hyp, {0.0, 1.0}, {1.0, 1.0}), UnsupportedOperationError);
}

TEST_CASE("area") {
    CHECK(area(SurfaceModel::flat_torus(1.0, 1.0, 0.0)) == doctest::Approx(1.0));
    CHECK(area(SurfaceModel::flat_torus(2.0, 3.0, 0.0)) == doctest::Approx(6.0));
    SurfaceModel ct = SurfaceModel::conformal_torus(1.0, 1.0, Expr::constant(std::log(2.0)),
                                                    Expr::constant(1.0), 0.0);
    CHECK(area(ct) == doctest::Approx(4.0));
    CHECK_THROWS_AS(area(SurfaceModel::hyperbolic_plane(0.0)), UnsupportedOperationError);
    // non-constant factor stays inside its pointwise bounds
    SurfaceModel wav = SurfaceModel::conformal_torus(
        1.0, 1.0, Expr::parse("0.1*sin(2*pi*u)*cos(2*pi*v)"), Expr::constant(1.0), 0.0);
    double a = area(wav);
    CHECK(a > std::exp(-0.2));
    CHECK(a < std::exp(0.2));
}

TEST_CASE("unit tangent samples are unit speed and seed deterministic") {
    SurfaceModel ct = bump_torus();
    CounterRng rng(42, rng_stream::kTest);
    for (int i = 0; i < 500; ++i) {
        UnitTangentState s = sample_unit_tangent(ct, rng);
        CHECK(std::abs(g_norm(ct, s.point, s.velocity) - 1.0) < 1e-12);
    }
    CounterRng a(9, rng_stream::kTest), b(9, rng_stream::kTest);
    for (int i = 0; i < 100; ++i) {
        UnitTangentState sa = sample_unit_tangent(ct, a);
        UnitTangentState sb = sample_unit_tangent(ct, b);
        CHECK(sa.point.u == sb.point.u);
        CHECK(sa.point.v == sb.point.v);
        CHECK(sa.velocity.du == sb.velocity.du);
        CHECK(sa.velocity.dv == sb.velocity.dv);
    }
}

TEST_CASE("flat torus sample mean") {
    SurfaceModel flat = SurfaceModel::flat_torus(2.0, 1.0, 0.0);
    CounterRng rng(5, rng_stream::kTest);
    const int n = 100000;
    double su = 0.0;
    for (int i = 0; i < n; ++i) su += sample_area_point(flat, rng).u;
    double mean = su / n;
    double sigma = 2.0 / std::sqrt(12.0); // uniform on [0, 2]
    CHECK(std::abs(mean - 1.0) < 4.0 * sigma / std::sqrt(double(n)));
}

TEST_CASE("area density passes a chi-square test") {
    SurfaceModel ct = bump_torus();
    const int nb = 10; // 10 x 10 bins
    const int n = 40000;
    // bin masses from a subdivided midpoint rule on e^{2 lambda} / area
    std::vector<double> mass(nb * nb, 0.0);
    double total = 0.0;
    const int sub = 8;
    for (int bi = 0; bi < nb; ++bi)
        for (int bj = 0; bj < nb; ++bj) {
            double s = 0.0;
            for (int i = 0; i < sub; ++i)
                for (int j = 0; j < sub; ++j) {
                    double u = (bi + (i + 0.5) / sub) / nb;
                    double v = (bj + (j + 0.5) / sub) / nb;
                    s += conformal_factor(ct, {u, v});
                }
            mass[bi * nb + bj] = s;
            total += s;
        }
    for (double& m : mass) m /= total;

    std::vector<long> counts(nb * nb, 0);
    CounterRng rng(11, rng_stream::kTest);
    for (int i = 0; i < n; ++i) {
        ChartPoint p = sample_area_point(ct, rng);
        int bi = std::min(nb - 1, int(p.u * nb));
        int bj = std::min(nb - 1, int(p.v * nb));
        ++counts[bi * nb + bj];
    }
    double chi2 = 0.0;
    for (int k = 0; k < nb * nb; ++k) {
        double e = n * mass[k];
        chi2 += (counts[k] - e) * (counts[k] - e) / e;
    }
    // 0.999 quantile of chi-square with 99 degrees of freedom
    // (Wilson-Hilferty approximation, z_{0.999} = 3.0902)
    double df = 99.0;
    double z = 3.0902;
    double q = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3.0);
    CHECK(chi2 < q);
}

TEST_CASE("constructor validation") {
    CHECK_THROWS_AS(SurfaceModel::flat_torus(0.0, 1.0, 0.0), ConfigurationError);
    CHECK_THROWS_AS(SurfaceModel::flat_torus(1.0, -2.0, 0.0), ConfigurationError);
    CHECK_THROWS_AS(
        SurfaceModel::conformal_torus(-1.0, 1.0, Expr::constant(0.0), Expr::constant(1.0), 0.0),
        ConfigurationError);
}

} // TEST_SUITE
