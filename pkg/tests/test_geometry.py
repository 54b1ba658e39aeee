from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from solitonflow import geometry as geo
from solitonflow.integrator import IntegratorConfig, integrate
from solitonflow.launcher import launch_left
from solitonflow.profile_ode import Signature

PLUS = Signature(1, 1)


def test_euclidean_preset():
    g = geo.make_preset("euclidean", 3)
    assert g.h(2.0) == 1.0
    assert g.left_singular.q_prime == 0.5
    assert g.domain == (0.0, math.inf)


def test_horosphere_preset():
    g = geo.make_preset("horosphere", 2)
    assert all(g.h(s) == -1.0 for s in (-5.0, 0.0, 3.0))
    assert g.left_singular is None and g.right_singular is None


def test_sphere_preset():
    g = geo.make_preset("sphere", 2)
    assert g.h(math.pi / 4) == pytest.approx(1.0, abs=1e-15)
    assert g.domain == (-math.pi / 2, math.pi / 2)
    assert g.left_singular.h1 == 1.0 and g.right_singular.h1 == 1.0
    assert geo.SPHERE_SIGN_NOTE in g.assumptions


@pytest.mark.parametrize("n", [0, 1, 2.5, True])
def test_invalid_dimension(n):
    with pytest.raises(geo.GeometryError):
        geo.make_preset("euclidean", n)


def test_unknown_preset():
    with pytest.raises(geo.GeometryError):
        geo.make_preset("torus", 2)


@pytest.mark.parametrize("name, lo, hi", [("euclidean", 0.01, 50.0), ("horosphere", -20.0, 20.0),
                                          ("sphere", -1.5, 1.5)])
@pytest.mark.parametrize("n", [2, 3, 5])
def test_h_times_q_is_one(name, lo, hi, n):
    g = geo.make_preset(name, n)
    for s in np.linspace(lo, hi, 1000):
        if s == 0.0 and name == "sphere":
            continue
        assert abs(g.h(s) * g.q(s) - 1) <= 1e-12


def test_sphere_antisymmetry():
    g = geo.sphere(3)
    for s in np.linspace(-1.5, 1.5, 1000):
        assert g.h(-s) == -g.h(s)


def test_revolution_plane():
    g = geo.make_preset("revolution", 2, x="s", z="0")
    assert g.left_singular.q_prime == pytest.approx(1.0, abs=1e-6)
    assert g.h(2.0) == 0.5
    assert g.embedding == "revolution"


def test_revolution_sphere_cap():
    g = geo.revolution("sin(s)", "-cos(s)", s_max=3.0)
    assert g.chart(1.0) == pytest.approx((math.sin(1.0), -math.cos(1.0)))


@pytest.mark.parametrize("x, z", [("2*s", "0"), ("s+1", "0"), ("-s", "0"), ("sin(s)", "0")])
def test_revolution_rejects_bad_curves(x, z):
    with pytest.raises(geo.HypothesisError):
        geo.revolution(x, z, s_max=3.0)


def test_revolution_needs_curve():
    with pytest.raises(geo.GeometryError):
        geo.make_preset("revolution", 2)


def test_from_expression_matches_preset():
    e = geo.from_expression("(n-1)/s", (0.0, math.inf), n=2, left=True)
    p = geo.euclidean(2)
    assert max(abs(e.h(s) - p.h(s)) for s in np.linspace(0.01, 100, 500)) < 1e-12
    assert e.left_singular.q_prime == pytest.approx(1.0, abs=1e-6)


def test_from_expression_both_ends():
    g = geo.from_expression("1/(s*(2-s))", (0.0, 2.0), left=True, right=True)
    assert abs(g.left_singular.q_prime - 2.0) < 1e-6
    assert abs(g.right_singular.q_prime + 2.0) < 1e-6
    report = g.description["endpoint_measurements"]
    assert set(report) == {"q_at_a", "q_prime_at_a", "q_at_b", "q_prime_at_b"}


def test_from_expression_nonvanishing_q():
    with pytest.raises(geo.HypothesisError) as info:
        geo.from_expression("-1", (0.0, 1.0), left=True)
    assert info.value.measured["q_at_a"] == pytest.approx(-1.0)


def test_from_expression_parse_error_propagates():
    from solitonflow.expr import ParseError
    with pytest.raises(ParseError):
        geo.from_expression("tan(s", (0.0, 1.0))


def test_hypothesis_report_deterministic():
    for name in ("euclidean", "sphere", "horosphere"):
        g = geo.make_preset(name, 3)
        assert geo.hypothesis_report(g, 1) == geo.hypothesis_report(g, 1)
    rep = geo.hypothesis_report(geo.euclidean(3), 1)
    assert rep["left"]["q_prime"] == 0.5 and rep["left"]["eps_tilde_q_prime_nonnegative"]
    rep = geo.hypothesis_report(geo.sphere(3), 1)
    assert rep["right"]["h1"] == 0.5
    assert not rep["left"]["eps_tilde_q_prime_nonnegative"]


def test_as_dict_is_json_ready():
    import json
    d = geo.euclidean(2).as_dict()
    assert d["domain"] == [0.0, "inf"]
    json.dumps(d, allow_nan=False)


@pytest.mark.parametrize("n", [2, 3])
def test_mean_curvature_residual(n):
    # a converged profile: tightened tolerance so the dense output is accurate between samples
    cfg = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)
    traj = launch_left(geo.euclidean(n), PLUS, cfg=cfg, s_target=5.0)
    for s in np.linspace(0.05, 4.9, 40):
        assert abs(geo.mean_curvature_residual(traj, n, float(s))) < 1e-9


def test_residual_detects_corruption():
    traj = integrate(PLUS, geo.euclidean(2).h, 0.5, 0.25, 0.0, 3.0)
    bad = replace(traj, w=traj.w + 0.1)
    assert abs(geo.mean_curvature_residual(bad, 2, 1.0)) > 1e-3


def test_residual_outside_range():
    traj = integrate(PLUS, geo.euclidean(2).h, 0.5, 0.25, 0.0, 3.0)
    with pytest.raises(ValueError):
        geo.mean_curvature_residual(traj, 2, 5.0)
