#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "magflow/expr.hpp"
#include "magflow/rng.hpp"

namespace magflow {

class ChartDomainError : public std::runtime_error {
public:
    explicit ChartDomainError(const std::string& msg) : std::runtime_error(msg) {}
};

class UnsupportedOperationError : public std::runtime_error {
public:
    explicit UnsupportedOperationError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigurationError : public std::runtime_error {
public:
    explicit ConfigurationError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class SurfaceKind { FlatTorus, HyperbolicPlane, ConformalTorus };

struct ChartPoint {
    double u = 0.0;
    double v = 0.0;
};

struct TangentVector {
    double du = 0.0;
    double dv = 0.0;
};

struct UnitTangentState {
    ChartPoint point;
    TangentVector velocity;
};

// First and second derivatives of the conformal exponent at a point.
struct LambdaJet {
    double value = 0.0;
    double du = 0.0, dv = 0.0;
    double duu = 0.0, duv = 0.0, dvv = 0.0;
};

// A surface in a single conformal chart, g = e^{2 lambda} (du^2 + dv^2),
// carrying the magnetic field 2-form s * b(u,v) * dA_g.
//
//   FlatTorus       lambda = 0, chart [0,Lx) x [0,Ly)
//   HyperbolicPlane lambda = -log(v), chart v > 0 (curvature -1)
//   ConformalTorus  lambda given as a closed-form expression, torus chart
class SurfaceModel {
public:
    static SurfaceModel flat_torus(double Lx, double Ly, double s,
                                   const Expr& b = Expr::constant(1.0));
    static SurfaceModel hyperbolic_plane(double s, const Expr& b = Expr::constant(1.0));
    static SurfaceModel conformal_torus(double Lx, double Ly, const Expr& lambda,
                                        const Expr& b, double s);

    SurfaceKind kind() const { return kind_; }
    bool is_torus() const { return kind_ != SurfaceKind::HyperbolicPlane; }
    double Lx() const { return Lx_; }
    double Ly() const { return Ly_; }
    double field_strength() const { return s_; }

    bool in_domain(ChartPoint p) const;
    void require_domain(ChartPoint p) const; // throws ChartDomainError

    // Flat metric with a spatially constant field: the equations of motion
    // reduce to a rigid rotation of the velocity, worth a fast path in the
    // integrator hot loops.
    bool is_flat_constant_field() const {
        return kind_ == SurfaceKind::FlatTorus && b_is_constant_;
    }
    double constant_field_value() const { return b_const_; }

    double lambda(ChartPoint p) const;
    LambdaJet lambda_jet(ChartPoint p) const;
    double field(ChartPoint p) const; // b(p)
    void field_grad(ChartPoint p, double& bu, double& bv) const;

    const Expr& lambda_expr() const { return lambda_expr_; }
    const Expr& field_expr() const { return b_expr_; }

    // sup of e^{2 lambda} over the fundamental domain (tori only); used as
    // the rejection-sampling majorant.
    double conformal_sup() const { return conformal_sup_; }

private:
    SurfaceModel() = default;

    SurfaceKind kind_ = SurfaceKind::FlatTorus;
    double Lx_ = 1.0, Ly_ = 1.0;
    double s_ = 0.0;
    Expr lambda_expr_, b_expr_;
    bool lambda_is_zero_ = true;
    bool b_is_constant_ = true;
    double b_const_ = 1.0;
    double conformal_sup_ = 1.0;
    ExprTape lam_, lam_u_, lam_v_, lam_uu_, lam_uv_, lam_vv_;
    ExprTape b_, b_u_, b_v_;
};

// e^{2 lambda(p)}; the metric inner product is this factor times the
// euclidean dot product.
double conformal_factor(const SurfaceModel& surface, ChartPoint p);

double metric_dot(const SurfaceModel& surface, ChartPoint p, TangentVector a, TangentVector b);
double g_norm(const SurfaceModel& surface, ChartPoint p, TangentVector w);

// Oriented Riemannian area spanned by (a, b) at p.
double area_form(const SurfaceModel& surface, ChartPoint p, TangentVector a, TangentVector b);

// Gamma[k][i][j], symmetric in (i, j).
using Christoffel = std::array<std::array<std::array<double, 2>, 2>, 2>;
Christoffel christoffel(const SurfaceModel& surface, ChartPoint p);

// Metric rotation by +90 degrees; in a conformal chart this is the euclidean
// rotation (du, dv) -> (-dv, du). The sign of the field strength then picks
// the Larmor direction.
TangentVector rotate90(const SurfaceModel& surface, ChartPoint p, TangentVector w);

// Canonical torus representative, each coordinate in [0, L).
ChartPoint wrap(const SurfaceModel& surface, ChartPoint p);

// Chart difference q - p with each component wrapped into (-L/2, L/2].
TangentVector displacement(const SurfaceModel& surface, ChartPoint p, ChartPoint q);

// Riemannian area of the fundamental domain (tori only).
double area(const SurfaceModel& surface);

// Area-uniform base point draw (rejection against sup e^{2 lambda}).
ChartPoint sample_area_point(const SurfaceModel& surface, CounterRng& rng);

// Liouville-uniform draw from the unit tangent bundle: base point with
// density proportional to e^{2 lambda}, direction angle uniform.
UnitTangentState sample_unit_tangent(const SurfaceModel& surface, CounterRng& rng);

// Unit-speed state at the given chart point and euclidean angle.
UnitTangentState unit_state(const SurfaceModel& surface, ChartPoint p, double angle);

} // namespace magflow
