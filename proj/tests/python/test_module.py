"""Smoke tests for the compiled extension (imported from the build tree)."""

import math

import pytest

import _core as mf


def unit_torus(s=0.0):
    return mf.SurfaceModel.flat_torus(1.0, 1.0, s)


def test_surface_constructors():
    assert unit_torus().area() == pytest.approx(1.0)
    assert mf.SurfaceModel.flat_torus(2.0, 3.0, 0.5).area() == pytest.approx(6.0)
    assert mf.SurfaceModel.hyperbolic_plane(0.6).field_strength == 0.6
    ct = mf.SurfaceModel.conformal_torus(1.0, 1.0, "0.1*sin(2*pi*u)", "1", 0.7)
    assert ct.area() > 0.9


def test_surface_from_config():
    m = mf.SurfaceModel.from_config("kind = flat_torus\nLx = 2\nLy = 2\ns = 1\n")
    assert m.area() == pytest.approx(4.0)
    with pytest.raises(mf.ConfigError):
        mf.SurfaceModel.from_config("kind = flat_torus\ns = abc\n")


def test_trajectory_rows():
    rows = mf.trajectory(unit_torus(), 0.0, 0.0, 0.0, 0.5, h=1e-3)
    assert len(rows) == 501
    t, u, v, du, dv, energy = rows[-1]
    assert t == pytest.approx(0.5)
    assert u == pytest.approx(0.5, abs=1e-12)
    assert v == pytest.approx(0.0, abs=1e-12)
    assert energy == pytest.approx(1.0, abs=1e-12)


def test_alpha_determinant_along():
    times, dets = mf.alpha_determinant_along(unit_torus(), 0.1, 0.2, 0.7, 2.0)
    assert len(times) == len(dets)
    # geodesic case: det(t) = t
    assert max(abs(d - t) for t, d in zip(times, dets)) < 1e-8


def test_log_det_growth_hyperbolic():
    g = mf.log_det_growth(mf.SurfaceModel.hyperbolic_plane(0.0), 0.0, 1.0, 0.3, 20.0)
    assert abs(g["rate"] - 1.0) <= 0.05
    lo, hi = g["window"]
    assert lo < hi


def test_count_connections():
    res = mf.count_connections(
        unit_torus(), mf.ChartPoint(0.0, 0.0), mf.ChartPoint(0.5, 0.0), 1.6
    )
    assert res["count"] == 8
    assert not res["continuum_degenerate"]
    assert len(res["roots"]) == 8
    for root in res["roots"]:
        assert root["residual"] <= 1e-6
        assert 0.1 <= root["t"] <= 1.6


def test_count_options_roundtrip():
    opts = mf.CountOptions()
    assert opts.n_angle == 720
    opts.allow_equal_endpoints = True
    res = mf.count_connections(
        unit_torus(), mf.ChartPoint(0.2, 0.7), mf.ChartPoint(0.2, 0.7), 1.6, opts
    )
    assert res["count"] == 8


def test_estimators_agree_on_geodesic_torus():
    rhs = mf.rhs_integral(unit_torus(), 4.0, n_theta=50)
    assert rhs["value"] == pytest.approx(math.pi * 16.0, rel=1e-4)
    lhs = mf.lhs_integral(unit_torus(), 4.0, n_pairs=50)
    assert abs(lhs["value"] - math.pi * 16.0) <= 3.0 * lhs["std_error"]


def test_lemma_check_report():
    rep = mf.lemma_check(unit_torus(), [2.0], n_theta=20, n_pairs=20)
    assert rep["status"] == "PASS"
    assert rep["rows"][0]["pass"]


def test_entropy_report():
    rep = mf.entropy_report(
        mf.SurfaceModel.hyperbolic_plane(0.6), 20.0, n_theta=1, reference=0.8
    )
    assert rep["pass"]
    assert abs(rep["rate"] - 0.8) <= 0.05
