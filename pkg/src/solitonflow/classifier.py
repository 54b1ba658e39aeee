"""Trajectory fate classification and the finite-time blow-up bound clauses."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import GeometrySpec
from .integrator import IntegratorConfig, Trajectory, integrate
from .profile_ode import Signature, rhs_reduced

E1_BOUND_NOTE = ("bound for clauses E1a/E1b/D1 taken as a = c + 1/lambda; these clauses "
                 "come without an explicit bound")
D1_NOTE = ("D1 is the bundled form of E1a and E1b; every sub-clause whose h-condition "
           "holds is integrated and the smallest margin reported")
MARGIN_TOL = 1e-6


@dataclass(frozen=True)
class TailConfig:
    window: float = 0.05
    zero_tol: float = 1e-4
    steep_rhs: float = 1e4
    endpoint_tol: float = 1e-3  # relative to the integrated span


@dataclass(frozen=True)
class Outcome:
    """Fate of a trajectory.

    kind: ``GlobalToEnd``, ``FiniteBlowUp`` (``s_star``, ``sign``),
    ``EndpointFinite`` (``w1``, ``derivative_sign``) or ``EndpointZero``
    (``slope``).
    """

    kind: str
    s_star: float | None = None
    sign: int | None = None
    w1: float | None = None
    derivative_sign: int | None = None
    slope: float | None = None
    low_confidence: bool = False

    def as_dict(self) -> dict:
        out = {"kind": self.kind}
        for name in ("s_star", "sign", "w1", "derivative_sign", "slope"):
            value = getattr(self, name)
            if value is not None:
                out[name] = value
        if self.low_confidence:
            out["low_confidence"] = True
        return out


def classify(traj: Trajectory, geom: GeometrySpec, sig: Signature,
             tail: TailConfig | None = None) -> Outcome:
    tail = tail or TailConfig()
    stop = traj.stop
    if stop.kind == "blow_up":
        return Outcome("FiniteBlowUp", s_star=stop.s, sign=stop.sign)
    if stop.kind != "reached_end" or len(traj) < 2:
        return Outcome("GlobalToEnd", low_confidence=True)
    end = geom.b if traj.direction == "forward" else geom.a
    s_end = float(traj.s[-1])
    span = abs(s_end - float(traj.s[0]))
    if not math.isfinite(end) or abs(end - s_end) > tail.endpoint_tol * span:
        return Outcome("GlobalToEnd")

    k = max(2, int(math.ceil(tail.window * len(traj))))
    w_tail = np.abs(traj.w[-k:])
    w_end = float(traj.w[-1])
    if abs(w_end) < tail.zero_tol and np.all(np.diff(w_tail) <= 0):
        slope = (0.0 - w_end) / (end - s_end)
        return Outcome("EndpointZero", slope=slope)
    d_tail = np.abs(traj.dw[-k:])
    if d_tail[-1] > tail.steep_rhs and d_tail[-1] >= d_tail[0]:
        return Outcome("EndpointFinite", w1=w_end,
                       derivative_sign=int(math.copysign(1, traj.dw[-1])))
    return Outcome("GlobalToEnd", low_confidence=True)


def asymptotic_ratio(traj: Trajectory, h_fn: Callable[[float], float]) -> float:
    return h_fn(float(traj.s[-1])) * float(traj.w[-1])


# -- blow-up bounds ----------------------------------------------------------

def acoth(x: float) -> float:
    if not abs(x) > 1:
        raise ValueError(f"acoth needs |x| > 1, got {x!r}")
    return 0.5 * math.log((x + 1) / (x - 1))


@dataclass(frozen=True)
class _Clause:
    sig: Signature
    slope_sign: int
    kind: str  # "acoth", "acoth_scaled", "inverse"
    condition: str
    holds: Callable[[float, float], bool]  # (h value, lambda) -> bool
    witness: Callable[[float], float]  # lambda -> constant h satisfying the condition


CLAUSES: dict[str, _Clause] = {
    "B1": _Clause(Signature(1, -1), +1, "acoth", "h <= 0",
                  lambda h, lam: h <= 0, lambda lam: 0.0),
    "B2": _Clause(Signature(1, -1), -1, "acoth_scaled", "h <= -1",
                  lambda h, lam: h <= -1, lambda lam: -1.0),
    "C1": _Clause(Signature(-1, -1), -1, "inverse", "h > 0",
                  lambda h, lam: h > 0, lambda lam: 1.0),
    "C2": _Clause(Signature(-1, -1), +1, "inverse", "h > 1/lambda",
                  lambda h, lam: h > 1 / lam, lambda lam: 2.0 / lam),
    "E1a": _Clause(Signature(1, 1), +1, "inverse", "h < 0",
                   lambda h, lam: h < 0, lambda lam: -1.0),
    "E1b": _Clause(Signature(1, 1), -1, "inverse", "h < -1/lambda",
                   lambda h, lam: h < -1 / lam, lambda lam: -2.0 / lam),
    "E2": _Clause(Signature(-1, 1), -1, "acoth", "h > 0",
                  lambda h, lam: h > 0, lambda lam: 1.0),
    "E3": _Clause(Signature(-1, 1), +1, "acoth_scaled", "h > 1",
                  lambda h, lam: h > 1, lambda lam: 2.0),
}
CASE_IDS = ("B1", "B2", "C1", "C2", "D1", "E1a", "E1b", "E2", "E3")
ACOTH_GRID = (1.5, 2.0, 4.0, 8.0)
INVERSE_GRID = (0.5, 1.0, 2.0, 4.0)


class BoundError(ValueError):
    """Inadmissible lambda or unknown clause."""


class ClauseConditionError(ValueError):
    """The supplied h does not satisfy the clause's condition on [c, a]."""


def _kind(case_id: str) -> str:
    if case_id == "D1":
        return "inverse"
    if case_id not in CLAUSES:
        raise BoundError(f"unknown case {case_id!r}; choose from {', '.join(CASE_IDS)}")
    return CLAUSES[case_id].kind


def bound_for(case_id: str, lam: float, c: float) -> float:
    kind = _kind(case_id)
    if not math.isfinite(lam) or not math.isfinite(c):
        raise BoundError("lambda and c must be finite")
    if kind == "inverse":
        if not lam > 0:
            raise BoundError(f"case {case_id} needs lambda > 0, got {lam!r}")
        return c + 1.0 / lam
    if not lam > 1:
        raise BoundError(f"case {case_id} needs lambda > 1, got {lam!r}")
    if kind == "acoth":
        return c + acoth(lam)
    return c + acoth(lam) / (lam - 1)


def witness(case_id: str, lam: float) -> Callable[[float], float]:
    """Constant h satisfying the clause's condition (strictly, where strict)."""
    cid = "E1b" if case_id == "D1" else case_id
    _kind(cid)
    value = CLAUSES[cid].witness(lam)
    return lambda s: value


@dataclass(frozen=True)
class BoundCase:
    id: str
    sig: Signature
    lam: float
    c: float
    h_condition: str
    bound_a: float

    @classmethod
    def make(cls, case_id: str, lam: float, c: float = 0.0) -> "BoundCase":
        a = bound_for(case_id, lam, c)
        if case_id == "D1":
            return cls("D1", Signature(1, 1), lam, c, "h < 0 (slope +lambda) or "
                       "h < -1/lambda (slope -lambda)", a)
        cl = CLAUSES[case_id]
        return cls(case_id, cl.sig, lam, c, cl.condition, a)


@dataclass(frozen=True)
class BoundResult:
    case: BoundCase
    s_star: float | None
    margin: float | None
    passed: bool
    assumptions: tuple[str, ...] = ()
    message: str = ""
    sub_results: tuple = field(default_factory=tuple)

    def as_dict(self) -> dict:
        return {"case": self.case.id, "lambda": self.case.lam, "c": self.case.c,
                "bound_a": self.case.bound_a, "s_star": self.s_star,
                "margin": self.margin, "passed": self.passed,
                "assumptions": list(self.assumptions),
                **({"message": self.message} if self.message else {})}


def _check_condition(case_id: str, h_fn, lam: float, c: float, a: float,
                     samples: int = 1001) -> bool:
    cl = CLAUSES[case_id]
    return all(cl.holds(h_fn(float(s)), lam) for s in np.linspace(c, a, samples))


def _run_clause(case_id: str, case: BoundCase, h_fn, cfg) -> tuple[float | None, float | None, str]:
    cl = CLAUSES[case_id]
    w0 = cl.slope_sign * case.lam
    traj = integrate(cl.sig, h_fn, case.c, w0, 0.0, case.bound_a + 1.0, cfg)
    if traj.stop.kind != "blow_up":
        return None, None, f"no blow-up before a+1 (stop: {traj.stop.kind} at s={traj.stop.s!r})"
    return traj.stop.s, case.bound_a - traj.stop.s, ""


def verify_bound(case: BoundCase, h_fn: Callable[[float], float] | None = None,
                 cfg: IntegratorConfig | None = None) -> BoundResult:
    """Integrate from (c, +-lambda) and compare the blow-up location with the bound a.

    Passes when margin = a - s_star >= -1e-6.  Raises ClauseConditionError
    if ``h_fn`` violates the clause's condition on a sample of [c, a].
    """
    h_fn = h_fn or witness(case.id, case.lam)
    notes = []
    if case.id in ("E1a", "E1b", "D1"):
        notes.append(E1_BOUND_NOTE)
    if case.id == "D1":
        notes.append(D1_NOTE)
        subs = [cid for cid in ("E1a", "E1b")
                if _check_condition(cid, h_fn, case.lam, case.c, case.bound_a)]
        if not subs:
            raise ClauseConditionError(f"h satisfies neither E1a nor E1b conditions on "
                                       f"[{case.c}, {case.bound_a}]")
    else:
        if not _check_condition(case.id, h_fn, case.lam, case.c, case.bound_a):
            raise ClauseConditionError(f"h violates '{case.h_condition}' on "
                                       f"[{case.c}, {case.bound_a}]")
        subs = [case.id]
    results = [_run_clause(cid, case, h_fn, cfg) for cid in subs]
    missing = [msg for s, m, msg in results if s is None]
    if missing:
        return BoundResult(case, None, None, False, tuple(notes), "; ".join(missing))
    s_star, margin = min(((s, m) for s, m, _ in results), key=lambda p: p[1])
    return BoundResult(case, s_star, margin, margin >= -MARGIN_TOL, tuple(notes),
                       sub_results=tuple(zip(subs, results)))


def bound_grid(case_id: str) -> tuple[float, ...]:
    return INVERSE_GRID if _kind(case_id) == "inverse" else ACOTH_GRID


def rhs_at_end(traj: Trajectory, h_fn, sig: Signature) -> float:
    return rhs_reduced(sig, h_fn(float(traj.s[-1])), float(traj.w[-1]))
