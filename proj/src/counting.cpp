#include "magflow/counting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace magflow {

namespace {

double chart_dist(const SurfaceModel& surface, ChartPoint a, ChartPoint b) {
    TangentVector d = displacement(surface, a, b);
    return std::sqrt(d.du * d.du + d.dv * d.dv);
}

// Difference of two wrapped displacement components, unwrapped across the seam.
double wrap_half_len(double x, double L) {
    double r = x - L * std::floor(x / L + 0.5);
    if (r <= -L * 0.5) r += L;
    if (r > L * 0.5) r -= L;
    return r;
}

double wrap_angle(double phi) {
    double r = std::fmod(phi, 2.0 * M_PI);
    if (r < 0.0) r += 2.0 * M_PI;
    return r;
}

// Largest chart-space speed on the surface; used to convert parameter cell
// sizes into a residual threshold for the scan.
double max_chart_speed(const SurfaceModel& surface) {
    if (surface.kind() == SurfaceKind::FlatTorus) return 1.0;
    const int N = 64;
    double m = 0.0;
    for (int i = 0; i <= N; ++i)
        for (int j = 0; j <= N; ++j)
            m = std::max(m, std::exp(-surface.lambda(
                                ChartPoint{i * surface.Lx() / N, j * surface.Ly() / N})));
    return m;
}

} // namespace

ChartPoint shoot(const SurfaceModel& surface, ChartPoint x, double angle, double t,
                 const CountOptions& opts) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("shoot: counting requires a compact (torus) surface");
    UnitTangentState s0 = unit_state(surface, x, angle);
    detail::RawState cur{s0.point.u, s0.point.v, s0.velocity.du, s0.velocity.dv};
    long n_full = static_cast<long>(std::floor(t / opts.step + 1e-12));
    double tail = t - n_full * opts.step;
    detail::rk4_advance(surface, cur, n_full, opts.step);
    if (tail > 1e-12 * std::max(1.0, t)) detail::rk4_advance(surface, cur, 1, tail);
    return wrap(surface, ChartPoint{cur.u, cur.v});
}

ConnectionRoot refine_root(const SurfaceModel& surface, ChartPoint x, ChartPoint y,
                           double guess_angle, double guess_t, double T,
                           const CountOptions& opts) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("refine_root: counting requires a torus surface");
    double phi = guess_angle;
    double t = guess_t;
    auto evaluate = [&](double phi_e, double t_e) {
        return variational_endpoint(surface, unit_state(surface, x, phi_e), t_e, opts.step);
    };
    auto residual_of = [&](const VariationalState& vs) {
        return displacement(surface, y, wrap(surface, vs.base.point)); // end - y, wrapped
    };
    auto in_range = [&](double t_e) {
        return t_e >= 0.25 * opts.t_min && t_e <= T + 4.0 * opts.time_cell;
    };

    VariationalState vs = evaluate(phi, t);
    TangentVector res = residual_of(vs);
    double res_norm = std::sqrt(res.du * res.du + res.dv * res.dv);
    for (int iter = 0; iter < opts.max_newton; ++iter) {
        // Conjugate-point check comes first: a vanishing alpha-determinant
        // means a continuum of nearby returns even if this iterate already
        // sits on one of them.
        double adet = alpha_determinant(surface, vs);
        if (std::abs(adet) < 1e-8)
            throw SingularJacobianError("refine_root: singular shooting Jacobian (conjugate point)");
        if (res_norm < opts.tol_pos) return ConnectionRoot{wrap_angle(phi), t, res_norm, adet};
        // Jacobian columns: d end / d angle = delta_x, d end / d t = velocity.
        double j11 = vs.delta_x.du, j12 = vs.base.velocity.du;
        double j21 = vs.delta_x.dv, j22 = vs.base.velocity.dv;
        double det = j11 * j22 - j12 * j21;
        double dphi = (-res.du * j22 + res.dv * j12) / det;
        double dt = (-res.dv * j11 + res.du * j21) / det;

        // Full step first; the trial integration doubles as the next
        // iterate's Jacobian when accepted.
        bool accepted = false;
        if (in_range(t + dt)) {
            VariationalState vs_try = evaluate(phi + dphi, t + dt);
            TangentVector res_try = residual_of(vs_try);
            double norm_try = std::sqrt(res_try.du * res_try.du + res_try.dv * res_try.dv);
            if (norm_try < res_norm) {
                phi += dphi;
                t += dt;
                vs = vs_try;
                res = res_try;
                res_norm = norm_try;
                accepted = true;
            }
        }
        if (!accepted) {
            // Damped fallback: halve with cheap endpoint-only shots.
            double lambda_step = 0.5;
            for (int halving = 1; halving <= 6 && !accepted; ++halving, lambda_step *= 0.5) {
                double phi_try = phi + lambda_step * dphi;
                double t_try = t + lambda_step * dt;
                if (!in_range(t_try)) continue;
                ChartPoint end_try = shoot(surface, x, phi_try, t_try, opts);
                if (chart_dist(surface, y, end_try) < res_norm) {
                    phi = phi_try;
                    t = t_try;
                    vs = evaluate(phi, t);
                    res = residual_of(vs);
                    res_norm = std::sqrt(res.du * res.du + res.dv * res.dv);
                    accepted = true;
                }
            }
        }
        if (!accepted)
            throw RefinementError("refine_root: no residual decrease after step halving");
    }
    throw RefinementError("refine_root: iteration cap reached, residual " +
                          std::to_string(res_norm));
}

CountResult count_connections(const SurfaceModel& surface, ChartPoint x, ChartPoint y, double T,
                              const CountOptions& opts) {
    if (!surface.is_torus())
        throw UnsupportedOperationError("count_connections: requires a torus surface");
    if (opts.t_min < 10.0 * opts.step - 1e-12)
        throw ConfigurationError("count_connections: t_min must be at least 10 * step");
    ChartPoint xw = wrap(surface, x), yw = wrap(surface, y);
    if (chart_dist(surface, xw, yw) < 1e-12 && !opts.allow_equal_endpoints)
        throw DegenerateTargetError(
            "count_connections: x == y is a continuum-degenerate target; "
            "enable allow_equal_endpoints to force it");

    CountResult result;

    // Scan grid: angle cells x time cells, sampled on one trajectory per angle.
    const double dphi = 2.0 * M_PI / opts.n_angle;
    long k_sub = std::max(1L, static_cast<long>(std::llround(opts.time_cell / opts.step)));
    const double cell = k_sub * opts.step;
    long n_time = static_cast<long>(std::floor(T / cell + 1e-9));
    long i0 = std::max(1L, static_cast<long>(std::ceil(opts.t_min / cell - 1e-9)));
    if (n_time < i0) return result;

    const double vmax = max_chart_speed(surface);
    const long n_rows = n_time - i0 + 1;
    std::vector<TangentVector> disp(static_cast<size_t>(opts.n_angle) * n_rows);
    std::vector<double> grid(static_cast<size_t>(opts.n_angle) * n_rows);

    // The scan only has to localize minima to a cell, so it integrates one RK4
    // step per cell; Newton then refines on the fine step. Displacement
    // vectors are kept for the finite-difference seed polish below.
    for (int j = 0; j < opts.n_angle; ++j) {
        UnitTangentState s0 = unit_state(surface, xw, j * dphi);
        detail::RawState cur{s0.point.u, s0.point.v, s0.velocity.du, s0.velocity.dv};
        for (long i = 1; i <= n_time; ++i) {
            detail::rk4_advance(surface, cur, 1, cell);
            if (i >= i0) {
                size_t idx = static_cast<size_t>(j) * n_rows + (i - i0);
                TangentVector d = displacement(surface, yw, ChartPoint{cur.u, cur.v});
                disp[idx] = d;
                grid[idx] = std::sqrt(d.du * d.du + d.dv * d.dv);
            }
        }
        result.flags.cells_scanned += n_rows;
    }

    // A ring of returns (x = y with a constant field at the Larmor period)
    // puts an entire time row below the candidate threshold; every root on it
    // is singular, so it must be flagged at scan level, before refinement.
    // Regular systems keep well under a quarter of a row (isolated roots only
    // touch a few cells each).
    const long ring_threshold = std::max(2L, static_cast<long>(opts.n_angle / 4));
    auto row_threshold = [&](long r) {
        double t_i = (i0 + r) * cell;
        return 3.0 * vmax * (0.5 * t_i * dphi + 0.5 * cell) + opts.tol_pos;
    };
    std::vector<char> ring_row(n_rows, 0);
    for (long r = 0; r < n_rows; ++r) {
        double thr = row_threshold(r);
        long below = 0;
        for (int j = 0; j < opts.n_angle; ++j)
            if (grid[static_cast<size_t>(j) * n_rows + r] <= thr) ++below;
        if (below >= ring_threshold) {
            ring_row[r] = 1;
            result.flags.continuum_degenerate = true;
        }
    }

    // Candidate cells: strict-ish local minima under a travel-distance threshold.
    std::vector<std::pair<int, long>> seeds;
    for (int j = 0; j < opts.n_angle; ++j) {
        for (long r = 0; r < n_rows; ++r) {
            if (ring_row[r]) continue;
            double val = grid[static_cast<size_t>(j) * n_rows + r];
            if (val > row_threshold(r)) continue;
            bool is_min = true;
            for (int djj = -1; djj <= 1 && is_min; ++djj) {
                int jj = (j + djj + opts.n_angle) % opts.n_angle;
                for (long dr = -1; dr <= 1; ++dr) {
                    long rr = r + dr;
                    if (rr < 0 || rr >= n_rows || (djj == 0 && dr == 0)) continue;
                    double other = grid[static_cast<size_t>(jj) * n_rows + rr];
                    if (other < val || (other == val && (djj < 0 || (djj == 0 && dr < 0)))) {
                        is_min = false;
                        break;
                    }
                }
            }
            if (is_min) seeds.emplace_back(j, i0 + r);
        }
    }
    result.flags.newton_seeds = static_cast<long>(seeds.size());

    // One Newton step with a finite-difference Jacobian taken from the grid
    // neighbours; costs nothing and typically lands within ~1e-4 of the root,
    // saving exact-Jacobian iterations in refine_root.
    auto polish_seed = [&](int j, long i, double& phi, double& t) {
        long r = i - i0;
        if (r < 1 || r >= n_rows - 1) return;
        int jm = (j + opts.n_angle - 1) % opts.n_angle;
        int jp = (j + 1) % opts.n_angle;
        auto at = [&](int jj, long rr) -> const TangentVector& {
            return disp[static_cast<size_t>(jj) * n_rows + rr];
        };
        const TangentVector& c = at(j, r);
        auto diff = [&](double a, double b, double L) { return wrap_half_len(a - b, L); };
        double j11 = diff(at(jp, r).du, at(jm, r).du, surface.Lx()) / (2.0 * dphi);
        double j21 = diff(at(jp, r).dv, at(jm, r).dv, surface.Ly()) / (2.0 * dphi);
        double j12 = diff(at(j, r + 1).du, at(j, r - 1).du, surface.Lx()) / (2.0 * cell);
        double j22 = diff(at(j, r + 1).dv, at(j, r - 1).dv, surface.Ly()) / (2.0 * cell);
        double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-12) return;
        double dp = (-c.du * j22 + c.dv * j12) / det;
        double dt = (-c.dv * j11 + c.du * j21) / det;
        if (std::abs(dp) > dphi || std::abs(dt) > cell) return;
        phi += dp;
        t += dt;
    };

    std::vector<ConnectionRoot> roots;
    for (auto [j, i] : seeds) {
        double phi = j * dphi, t0 = i * cell;
        polish_seed(j, i, phi, t0);
        try {
            ConnectionRoot root = refine_root(surface, xw, yw, phi, t0, T, opts);
            if (root.t >= opts.t_min - 1e-12 && root.t <= T + 1e-12) roots.push_back(root);
        } catch (const RefinementError&) {
            ++result.flags.newton_failures;
        } catch (const SingularJacobianError&) {
            ++result.flags.newton_failures;
        }
    }

    // Deduplicate in parameter space, deterministically ordered by (angle, t).
    std::sort(roots.begin(), roots.end(), [](const ConnectionRoot& a, const ConnectionRoot& b) {
        return a.angle != b.angle ? a.angle < b.angle : a.t < b.t;
    });
    const double da = opts.dedupe_angle();
    const double dt = opts.dedupe_time();
    std::vector<ConnectionRoot> unique;
    for (const ConnectionRoot& r : roots) {
        bool dup = false;
        for (const ConnectionRoot& u : unique) {
            double dang = std::abs(r.angle - u.angle);
            dang = std::min(dang, 2.0 * M_PI - dang);
            if (dang <= da && std::abs(r.t - u.t) <= dt) {
                dup = true;
                break;
            }
        }
        if (!dup) unique.push_back(r);
    }

    // Flags: near-singular Jacobians and continuum rings of refined roots.
    for (const ConnectionRoot& r : unique)
        if (std::abs(r.jacobian_det) < 1e-4) result.flags.suspected_multiplicity = true;
    std::vector<ConnectionRoot> by_time = unique;
    std::sort(by_time.begin(), by_time.end(),
              [](const ConnectionRoot& a, const ConnectionRoot& b) { return a.t < b.t; });
    long run = 1;
    for (size_t i = 1; i < by_time.size(); ++i) {
        if (by_time[i].t - by_time[i - 1].t <= dt) {
            if (++run >= ring_threshold) result.flags.continuum_degenerate = true;
        } else {
            run = 1;
        }
    }

    result.roots = std::move(unique);
    result.count = static_cast<long>(result.roots.size());
    return result;
}

} // namespace magflow
