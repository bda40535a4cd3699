#include "magflow/geometry.hpp"

#include <cmath>

namespace magflow {

namespace {

double wrap_coord(double x, double L) {
    double r = std::fmod(x, L);
    if (r < 0.0) r += L;
    // fmod can land exactly on L after the correction
    if (r >= L) r -= L;
    return r;
}

double wrap_half(double x, double L) {
    // into (-L/2, L/2]
    double r = x - L * std::floor(x / L + 0.5);
    if (r <= -L * 0.5) r += L;
    if (r > L * 0.5) r -= L;
    return r;
}

} // namespace

SurfaceModel SurfaceModel::flat_torus(double Lx, double Ly, double s, const Expr& b) {
    if (!(Lx > 0.0) || !(Ly > 0.0))
        throw ConfigurationError("flat_torus: periods must be positive");
    SurfaceModel m;
    m.kind_ = SurfaceKind::FlatTorus;
    m.Lx_ = Lx;
    m.Ly_ = Ly;
    m.s_ = s;
    m.lambda_expr_ = Expr::constant(0.0);
    m.lambda_is_zero_ = true;
    m.b_expr_ = b;
    m.b_is_constant_ = b.is_constant(&m.b_const_);
    if (!m.b_is_constant_) {
        m.b_ = b.compile();
        m.b_u_ = b.derivative_u().compile();
        m.b_v_ = b.derivative_v().compile();
    }
    return m;
}

SurfaceModel SurfaceModel::hyperbolic_plane(double s, const Expr& b) {
    SurfaceModel m;
    m.kind_ = SurfaceKind::HyperbolicPlane;
    m.s_ = s;
    m.lambda_expr_ = Expr::constant(0.0); // analytic -log(v), not an expression
    m.lambda_is_zero_ = false;
    m.b_expr_ = b;
    m.b_is_constant_ = b.is_constant(&m.b_const_);
    if (!m.b_is_constant_) {
        m.b_ = b.compile();
        m.b_u_ = b.derivative_u().compile();
        m.b_v_ = b.derivative_v().compile();
    }
    return m;
}

SurfaceModel SurfaceModel::conformal_torus(double Lx, double Ly, const Expr& lambda,
                                           const Expr& b, double s) {
    if (!(Lx > 0.0) || !(Ly > 0.0))
        throw ConfigurationError("conformal_torus: periods must be positive");
    SurfaceModel m;
    m.kind_ = SurfaceKind::ConformalTorus;
    m.Lx_ = Lx;
    m.Ly_ = Ly;
    m.s_ = s;
    m.lambda_expr_ = lambda;
    double c;
    m.lambda_is_zero_ = lambda.is_constant(&c) && c == 0.0;
    m.lam_ = lambda.compile();
    Expr lu = lambda.derivative_u();
    Expr lv = lambda.derivative_v();
    m.lam_u_ = lu.compile();
    m.lam_v_ = lv.compile();
    m.lam_uu_ = lu.derivative_u().compile();
    m.lam_uv_ = lu.derivative_v().compile();
    m.lam_vv_ = lv.derivative_v().compile();
    m.b_expr_ = b;
    m.b_is_constant_ = b.is_constant(&m.b_const_);
    if (!m.b_is_constant_) {
        m.b_ = b.compile();
        m.b_u_ = b.derivative_u().compile();
        m.b_v_ = b.derivative_v().compile();
    }
    if (m.lambda_is_zero_) {
        m.conformal_sup_ = 1.0;
    } else if (lambda.is_constant(&c)) {
        m.conformal_sup_ = std::exp(2.0 * c);
    } else {
        // Grid majorant; the 1.02 margin covers grid resolution for the
        // smooth expressions the grammar can produce.
        const int N = 128;
        double sup = 0.0;
        for (int i = 0; i <= N; ++i)
            for (int j = 0; j <= N; ++j)
                sup = std::max(sup, std::exp(2.0 * m.lam_.eval(i * Lx / N, j * Ly / N)));
        m.conformal_sup_ = sup * 1.02;
    }
    return m;
}

bool SurfaceModel::in_domain(ChartPoint p) const {
    if (!std::isfinite(p.u) || !std::isfinite(p.v)) return false;
    if (kind_ == SurfaceKind::HyperbolicPlane) return p.v > 0.0;
    return true;
}

void SurfaceModel::require_domain(ChartPoint p) const {
    if (!in_domain(p))
        throw ChartDomainError("point (" + std::to_string(p.u) + ", " + std::to_string(p.v) +
                               ") outside chart domain");
}

double SurfaceModel::lambda(ChartPoint p) const {
    switch (kind_) {
    case SurfaceKind::FlatTorus: return 0.0;
    case SurfaceKind::HyperbolicPlane: return -std::log(p.v);
    case SurfaceKind::ConformalTorus: return lam_.eval(p.u, p.v);
    }
    return 0.0;
}

LambdaJet SurfaceModel::lambda_jet(ChartPoint p) const {
    LambdaJet j;
    switch (kind_) {
    case SurfaceKind::FlatTorus:
        break;
    case SurfaceKind::HyperbolicPlane: {
        double y = p.v;
        j.value = -std::log(y);
        j.dv = -1.0 / y;
        j.dvv = 1.0 / (y * y);
        break;
    }
    case SurfaceKind::ConformalTorus:
        j.value = lam_.eval(p.u, p.v);
        j.du = lam_u_.eval(p.u, p.v);
        j.dv = lam_v_.eval(p.u, p.v);
        j.duu = lam_uu_.eval(p.u, p.v);
        j.duv = lam_uv_.eval(p.u, p.v);
        j.dvv = lam_vv_.eval(p.u, p.v);
        break;
    }
    return j;
}

double SurfaceModel::field(ChartPoint p) const {
    return b_is_constant_ ? b_const_ : b_.eval(p.u, p.v);
}

void SurfaceModel::field_grad(ChartPoint p, double& bu, double& bv) const {
    if (b_is_constant_) {
        bu = 0.0;
        bv = 0.0;
    } else {
        bu = b_u_.eval(p.u, p.v);
        bv = b_v_.eval(p.u, p.v);
    }
}

double conformal_factor(const SurfaceModel& surface, ChartPoint p) {
    surface.require_domain(p);
    return std::exp(2.0 * surface.lambda(p));
}

double metric_dot(const SurfaceModel& surface, ChartPoint p, TangentVector a, TangentVector b) {
    return conformal_factor(surface, p) * (a.du * b.du + a.dv * b.dv);
}

double g_norm(const SurfaceModel& surface, ChartPoint p, TangentVector w) {
    return std::exp(surface.lambda(p)) * std::sqrt(w.du * w.du + w.dv * w.dv);
}

double area_form(const SurfaceModel& surface, ChartPoint p, TangentVector a, TangentVector b) {
    return conformal_factor(surface, p) * (a.du * b.dv - a.dv * b.du);
}

Christoffel christoffel(const SurfaceModel& surface, ChartPoint p) {
    surface.require_domain(p);
    LambdaJet j = surface.lambda_jet(p);
    Christoffel g{};
    g[0][0][0] = j.du;
    g[0][0][1] = g[0][1][0] = j.dv;
    g[0][1][1] = -j.du;
    g[1][0][0] = -j.dv;
    g[1][0][1] = g[1][1][0] = j.du;
    g[1][1][1] = j.dv;
    return g;
}

TangentVector rotate90(const SurfaceModel& surface, ChartPoint p, TangentVector w) {
    surface.require_domain(p);
    return TangentVector{-w.dv, w.du};
}

ChartPoint wrap(const SurfaceModel& surface, ChartPoint p) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("wrap: only defined on torus charts");
    return ChartPoint{wrap_coord(p.u, surface.Lx()), wrap_coord(p.v, surface.Ly())};
}

TangentVector displacement(const SurfaceModel& surface, ChartPoint p, ChartPoint q) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("displacement: only defined on torus charts");
    return TangentVector{wrap_half(q.u - p.u, surface.Lx()), wrap_half(q.v - p.v, surface.Ly())};
}

double area(const SurfaceModel& surface) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("area: hyperbolic plane has infinite area");
    double c;
    if (surface.lambda_expr().is_constant(&c) || surface.kind() == SurfaceKind::FlatTorus) {
        double lam0 = surface.kind() == SurfaceKind::FlatTorus ? 0.0 : c;
        return surface.Lx() * surface.Ly() * std::exp(2.0 * lam0);
    }
    // Periodic trapezoid rule; spectrally accurate for smooth periodic lambda.
    const int N = 256;
    double sum = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            ChartPoint p{(i + 0.5) * surface.Lx() / N, (j + 0.5) * surface.Ly() / N};
            sum += std::exp(2.0 * surface.lambda(p));
        }
    return sum * surface.Lx() * surface.Ly() / (N * N);
}

ChartPoint sample_area_point(const SurfaceModel& surface, CounterRng& rng) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("sample_area_point: requires a compact (torus) surface");
    double bound = surface.conformal_sup();
    if (!std::isfinite(bound) || bound <= 0.0)
        throw ConfigurationError("sample_area_point: rejection bound is not finite");
    ChartPoint p;
    for (;;) {
        p.u = rng.uniform(0.0, surface.Lx());
        p.v = rng.uniform(0.0, surface.Ly());
        double density = std::exp(2.0 * surface.lambda(p));
        if (rng.next_double() * bound <= density) break;
    }
    return p;
}

UnitTangentState sample_unit_tangent(const SurfaceModel& surface, CounterRng& rng) {
    ChartPoint p = sample_area_point(surface, rng);
    double angle = rng.uniform(0.0, 2.0 * M_PI);
    return unit_state(surface, p, angle);
}

UnitTangentState unit_state(const SurfaceModel& surface, ChartPoint p, double angle) {
    surface.require_domain(p);
    double scale = std::exp(-surface.lambda(p));
    return UnitTangentState{p, TangentVector{scale * std::cos(angle), scale * std::sin(angle)}};
}

} // namespace magflow
