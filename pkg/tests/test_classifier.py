from __future__ import annotations

import math

import numpy as np
import pytest

from solitonflow import classifier as cl
from solitonflow import geometry as geo
from solitonflow.integrator import IntegratorConfig, integrate
from solitonflow.launcher import launch_left, launch_right
from solitonflow.profile_ode import Signature

PLUS = Signature(1, 1)


def test_bound_for_examples():
    assert cl.bound_for("B1", 2.0, 0.0) == pytest.approx(0.5 * math.log(3), abs=1e-15)
    assert cl.bound_for("C1", 4.0, 1.0) == 1.25
    assert cl.bound_for("B2", 2.0, 0.0) == pytest.approx(0.5 * math.log(3))
    assert cl.bound_for("E3", 3.0, 1.0) == pytest.approx(1 + 0.5 * math.log(2) / 2)


@pytest.mark.parametrize("case, lam", [("B1", 1.0), ("E2", 0.5), ("B2", -3.0), ("C1", 0.0),
                                       ("E1a", -1.0)])
def test_bound_for_inadmissible(case, lam):
    with pytest.raises(cl.BoundError):
        cl.bound_for(case, lam, 0.0)


def test_unknown_case():
    with pytest.raises(cl.BoundError):
        cl.bound_for("Z9", 2.0, 0.0)


def test_acoth_no_cancellation():
    lam = 1 + 1e-12
    assert math.isfinite(cl.acoth(lam))
    assert cl.acoth(2.0) == pytest.approx(0.5493061443340549, abs=1e-15)


def test_b1_sharp_margin():
    r = cl.verify_bound(cl.BoundCase.make("B1", 2.0, 0.0), lambda s: 0.0)
    assert r.passed and abs(r.margin) < 1e-6


def test_c1_example():
    r = cl.verify_bound(cl.BoundCase.make("C1", 3.0, 0.0), lambda s: 1.0)
    assert r.s_star < 1 / 3 and r.margin > 0


def test_e2_example():
    r = cl.verify_bound(cl.BoundCase.make("E2", 2.0, 0.0), lambda s: 1.0)
    assert r.s_star < cl.acoth(2.0)


@pytest.mark.parametrize("case", cl.CASE_IDS)
def test_grid_margins(case):
    for lam in cl.bound_grid(case):
        for c in (0.0, 1.5):
            r = cl.verify_bound(cl.BoundCase.make(case, lam, c))
            assert r.margin >= -1e-6, (case, lam, c, r)
            assert r.case.bound_a > c


def test_condition_violation_is_an_error():
    with pytest.raises(cl.ClauseConditionError):
        cl.verify_bound(cl.BoundCase.make("B1", 2.0, 0.0), lambda s: 1.0)
    with pytest.raises(cl.ClauseConditionError):
        cl.verify_bound(cl.BoundCase.make("C2", 2.0, 0.0), lambda s: 0.5)


def test_missing_blow_up_surfaces_as_failure():
    r = cl.verify_bound(cl.BoundCase.make("C1", 1.0, 0.0), lambda s: 1.0,
                        IntegratorConfig(max_steps=2))
    assert not r.passed and r.s_star is None and "no blow-up" in r.message


def test_e1_assumption_recorded():
    row = cl.verify_bound(cl.BoundCase.make("E1b", 2.0, 0.0)).as_dict()
    assert cl.E1_BOUND_NOTE in row["assumptions"]
    row = cl.verify_bound(cl.BoundCase.make("B1", 2.0, 0.0)).as_dict()
    assert row["assumptions"] == []


def test_d1_runs_every_admissible_subclause():
    r = cl.verify_bound(cl.BoundCase.make("D1", 2.0, 0.0), lambda s: -1.0)
    assert [cid for cid, _ in r.sub_results] == ["E1a", "E1b"]
    assert r.margin == min(res[1] for _, res in r.sub_results)


def test_classify_blow_up():
    geom = geo.horosphere(2)
    traj = integrate(PLUS, geom.h, 0.0, 0.0, 0.0, 2.0)
    out = cl.classify(traj, geom, PLUS)
    assert out.kind == "FiniteBlowUp" and out.sign == 1
    assert abs(out.s_star - math.pi / 4) < 1e-4


def test_classify_bowl_global():
    geom = geo.euclidean(2)
    traj = launch_left(geom, PLUS, s_target=100.0)
    assert cl.classify(traj, geom, PLUS).kind == "GlobalToEnd"


def test_classify_sphere_right_launch_endpoint_zero():
    geom = geo.sphere(2)
    out = cl.classify(launch_right(geom, PLUS), geom, PLUS)
    assert out.kind == "EndpointZero"


def test_classify_sphere_interior_start_reaches_zero():
    # sum of h diverges at pi/2, so w is driven to 0 there
    geom = geo.sphere(2)
    traj = integrate(PLUS, geom.h, 0.0, 3.0, 0.0, geom.b - 1e-6)
    out = cl.classify(traj, geom, PLUS)
    assert out.kind == "EndpointZero"
    assert 0 < traj.w[-1] < 1e-4


def test_classify_endpoint_finite():
    # h = 1/sqrt(1-s) has a finite integral; w tends to w1 > 0 with w' -> -inf
    geom = geo.from_expression("1/sqrt(1-s)", (0.0, 1.0))
    traj = integrate(PLUS, geom.h, 0.0, 5.0, 0.0, 1.0 - 1e-9)
    out = cl.classify(traj, geom, PLUS)
    assert out.kind == "EndpointFinite"
    assert out.derivative_sign == -1 and out.w1 > 0


def test_classify_low_confidence_on_failed_run():
    geom = geo.euclidean(2)
    traj = integrate(PLUS, geom.h, 1.0, 0.0, 0.0, 10.0, IntegratorConfig(max_steps=2))
    out = cl.classify(traj, geom, PLUS)
    assert out.kind == "GlobalToEnd" and out.low_confidence


def test_classify_is_deterministic():
    geom = geo.sphere(2)
    traj = integrate(PLUS, geom.h, 0.0, 1.0, 0.0, geom.b - 1e-6)
    assert cl.classify(traj, geom, PLUS) == cl.classify(traj, geom, PLUS)


@pytest.mark.parametrize("w0", [-5.0, 0.0, 5.0])
def test_euclidean_interior_starts(w0):
    geom = geo.euclidean(2)
    traj = integrate(PLUS, geom.h, 1.0, w0, 0.0, 100.0)
    assert cl.classify(traj, geom, PLUS).kind == "GlobalToEnd"
    g = 1 - np.array([geom.h(s) for s in traj.s]) * traj.w
    flips = np.nonzero(np.sign(g[1:]) != np.sign(g[:-1]))[0]
    if len(flips):
        tail = traj.w[flips[0] + 1:]
        cap = max(w0, float(np.max(traj.s)))  # max of 1/h = s on the range
        assert np.all(tail >= -1e-10) and np.all(tail <= cap + 1e-8)


def test_asymptotic_ratio():
    for n, s_end in ((2, 100.0), (5, 200.0)):
        geom = geo.euclidean(n)
        traj = launch_left(geom, PLUS, s_target=s_end)
        assert abs(cl.asymptotic_ratio(traj, geom.h) - 1) < 0.02
    for n in (2, 3):
        geom = geo.horosphere(n)
        traj = integrate(PLUS, geom.h, 0.0, -1 / (n - 1), 0.0, 5.0)
        assert cl.asymptotic_ratio(traj, geom.h) == 1.0


def test_outcome_json():
    out = cl.Outcome("FiniteBlowUp", s_star=0.5, sign=-1)
    assert out.as_dict() == {"kind": "FiniteBlowUp", "s_star": 0.5, "sign": -1}
