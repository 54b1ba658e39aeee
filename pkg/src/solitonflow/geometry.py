"""Orbit geometries: the coefficient h(s), its reciprocal q, and endpoint data."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import expr as ex
from .integrator import Trajectory, resample, slope_at

SPHERE_SIGN_NOTE = (
    "sphere: orbit mean curvature taken as h(s)=(n-1)tan(s) so that 1-h*w reproduces "
    "w'=(1+w^2)(1-(n-1)tan(s)w); the closed form h(s)=(1-n)tan(s) has the opposite sign"
)
HOROSPHERE_CHART_NOTE = (
    "horosphere: upper half-space chart with x_n = exp(-s), orientation fixed by h = -(n-1)"
)

PRESETS = ("euclidean", "horosphere", "sphere", "revolution")


class GeometryError(ValueError):
    pass


class HypothesisError(GeometryError):
    """A structural hypothesis (vanishing q, sign of q', curve conditions) fails.

    ``measured`` carries the offending numbers for reporting.
    """

    def __init__(self, message: str, measured: dict | None = None):
        super().__init__(message)
        self.measured = dict(measured or {})


@dataclass(frozen=True)
class SingularEndpointData:
    """Endpoint where h blows up and q = 1/h vanishes.

    ``q_prime`` is the one-sided limit of q' there; at a right endpoint the
    customary datum is h1 = lim h'/h^2 = -q'(b).
    """

    location: float
    side: str
    q_prime: float

    def __post_init__(self) -> None:
        if self.side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")

    @property
    def h1(self) -> float:
        return -self.q_prime

    def as_dict(self) -> dict:
        return {"location": self.location, "side": self.side,
                "q_prime": self.q_prime, "h1": self.h1}


@dataclass(frozen=True)
class GeometrySpec:
    name: str
    domain: tuple[float, float]
    h: Callable[[float], float]
    q: Callable[[float], float]
    n: int
    left_singular: Optional[SingularEndpointData] = None
    right_singular: Optional[SingularEndpointData] = None
    embedding: Optional[str] = None
    chart: Optional[Callable[[float], tuple[float, float]]] = None
    description: dict = field(default_factory=dict)
    assumptions: tuple[str, ...] = ()

    @property
    def a(self) -> float:
        return self.domain[0]

    @property
    def b(self) -> float:
        return self.domain[1]

    def as_dict(self) -> dict:
        out = {"name": self.name, "n": self.n,
               "domain": [_json_float(self.a), _json_float(self.b)],
               **self.description}
        if self.embedding:
            out["embedding"] = self.embedding
        if self.left_singular:
            out["left_singular"] = self.left_singular.as_dict()
        if self.right_singular:
            out["right_singular"] = self.right_singular.as_dict()
        return out


def _json_float(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _safe_recip(fn):
    def recip(s: float) -> float:
        v = fn(s)
        if v == 0.0:
            raise ex.DomainError(f"reciprocal of zero at s={s!r}")
        return 1.0 / v
    return recip


def _check_n(n, minimum: int = 2) -> int:
    if isinstance(n, bool) or int(n) != n or n < minimum:
        raise GeometryError(f"dimension n must be an integer >= {minimum}, got {n!r}")
    return int(n)


def euclidean(n: int) -> GeometrySpec:
    n = _check_n(n)
    k = n - 1

    def h(s):
        if s == 0.0:
            raise ex.DomainError("h is singular at s=0")
        return k / s

    return GeometrySpec(
        name="euclidean", domain=(0.0, math.inf), h=h, q=lambda s: s / k, n=n,
        left_singular=SingularEndpointData(0.0, "left", 1.0 / k),
        embedding="rotation", chart=lambda s: (s, 0.0),
        description={"preset": "euclidean", "h": "(n-1)/s"},
    )


def horosphere(n: int) -> GeometrySpec:
    n = _check_n(n)
    hv = -float(n - 1)
    qv = -1.0 / (n - 1)
    return GeometrySpec(
        name="horosphere", domain=(-math.inf, math.inf), h=lambda s: hv, q=lambda s: qv, n=n,
        embedding="horosphere" if n == 2 else None,
        chart=lambda s: (math.exp(-s), 0.0),
        description={"preset": "horosphere", "h": "-(n-1)"},
        assumptions=(HOROSPHERE_CHART_NOTE,),
    )


def sphere(n: int) -> GeometrySpec:
    n = _check_n(n)
    k = n - 1
    half = math.pi / 2

    def h(s):
        if not -half < s < half:
            raise ex.DomainError(f"s={s!r} outside (-pi/2, pi/2)")
        return k * math.tan(s)

    def q(s):
        t = math.tan(s)
        if t == 0.0:
            raise ex.DomainError("q is singular at s=0")
        return 1.0 / (k * t)

    qp = -1.0 / k
    return GeometrySpec(
        name="sphere", domain=(-half, half), h=h, q=q, n=n,
        left_singular=SingularEndpointData(-half, "left", qp),
        right_singular=SingularEndpointData(half, "right", qp),
        embedding="latitude" if n == 2 else None,
        chart=lambda s: (math.cos(s), -math.sin(s)),
        description={"preset": "sphere", "h": "(n-1)*tan(s)"},
        assumptions=(SPHERE_SIGN_NOTE,),
    )


def revolution(x_text: str, z_text: str, n: int = 2, s_max: float = 10.0,
               samples: int = 400, params: dict | None = None) -> GeometrySpec:
    """Surface of revolution generated by an arclength curve (x(s), z(s)), h = 1/x.

    The curve is checked on (0, s_max], which becomes the domain.
    """
    n = _check_n(n, minimum=1)
    params = {"n": n, **(params or {})}
    names = tuple(params)
    x = ex.parse(x_text, names).bind(params)
    z = ex.parse(z_text, names).bind(params)
    grid = np.linspace(s_max / samples, s_max, samples)
    xs = [x(s) for s in grid]
    if min(xs) <= 0:
        raise HypothesisError("profile curve must have x(s) > 0 for s > 0",
                              {"min_x": float(min(xs))})
    x_near = x(1e-9 * s_max)
    if abs(x_near) > 1e-6:
        raise HypothesisError("profile curve must reach the axis: x(s) -> 0 as s -> 0",
                              {"x_near_0": x_near})
    x0 = ex._fd(x, 0.0, "+")
    if not x0 > 0:
        raise HypothesisError("profile curve needs x'(0) > 0", {"x_prime_0": x0})
    for s in grid:
        speed2 = ex._fd(x, s, None) ** 2 + ex._fd(z, s, None) ** 2
        if abs(speed2 - 1.0) > 1e-6:
            raise HypothesisError("profile curve is not parametrised by arclength",
                                  {"s": float(s), "speed_squared": speed2})

    return GeometrySpec(
        name="revolution", domain=(0.0, float(s_max)), h=_safe_recip(x), q=x, n=n,
        left_singular=SingularEndpointData(0.0, "left", x0),
        embedding="revolution", chart=lambda s: (x(s), z(s)),
        description={"preset": "revolution", "x": x_text, "z": z_text, "h": "1/x(s)"},
    )


def make_preset(name: str, n: int, **extra) -> GeometrySpec:
    if name == "euclidean":
        return euclidean(n)
    if name == "horosphere":
        return horosphere(n)
    if name == "sphere":
        return sphere(n)
    if name == "revolution":
        if "x" not in extra or "z" not in extra:
            raise GeometryError("revolution preset needs profile curve expressions x and z")
        return revolution(extra.pop("x"), extra.pop("z"), n, **extra)
    raise GeometryError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def _limit_at(fn, s: float, side: str) -> float:
    """Quadratic extrapolation of fn to s from three interior points."""
    d = (2.0 ** -52) ** (1.0 / 3.0) * max(1.0, abs(s))
    sign = 1.0 if side == "+" else -1.0
    v1, v2, v3 = (fn(s + sign * k * d) for k in (1, 2, 3))
    return 3.0 * v1 - 3.0 * v2 + v3


def from_expression(h_text: str, domain: tuple[float, float], n: int = 2,
                    left: bool = False, right: bool = False,
                    params: dict | None = None, samples: int = 200) -> GeometrySpec:
    """Geometry from an expression for h(s) on the open interval ``domain``.

    With ``left``/``right`` the endpoint is treated as singular: q(endpoint)
    must vanish (checked by extrapolation to 1e-6) and q' there is measured
    by one-sided differences.
    """
    a, b = map(float, domain)
    if not a < b:
        raise GeometryError("domain must satisfy a < b")
    params = {"n": n, **(params or {})}
    e = ex.parse(h_text, tuple(params))
    h = e.bind(params)
    q = _safe_recip(h)
    lo = a if math.isfinite(a) else min(-10.0, b - 10.0)
    hi = b if math.isfinite(b) else max(10.0, lo + 10.0)
    grid = np.linspace(lo, hi, samples + 2)[1:-1]
    for s in grid:
        h(float(s))  # raises EvalError if h is not evaluable on the grid

    report = {}
    left_data = right_data = None
    for flag, side, loc, key in ((left, "+", a, "a"), (right, "-", b, "b")):
        if not flag:
            continue
        if not math.isfinite(loc):
            raise HypothesisError(f"singular endpoint {key} must be finite", {key: loc})
        q_end = _limit_at(q, loc, side)
        report[f"q_at_{key}"] = q_end
        if abs(q_end) > 1e-6:
            raise HypothesisError(f"q = 1/h does not vanish at {key}={loc!r}", dict(report))
        qp = ex._fd(q, loc, side)
        report[f"q_prime_at_{key}"] = qp
        data = SingularEndpointData(loc, "left" if side == "+" else "right", qp)
        if side == "+":
            left_data = data
        else:
            right_data = data
    return GeometrySpec(
        name="expression", domain=(a, b), h=h, q=q, n=int(n),
        left_singular=left_data, right_singular=right_data,
        description={"h_expression": h_text, "params": dict(sorted(params.items())),
                     "endpoint_measurements": report},
    )


def hypothesis_report(geom: GeometrySpec, eps_tilde: int) -> dict:
    """Conditions for launching from a singular endpoint: q vanishes, sign of eps_t*q'."""
    out = {}
    if geom.left_singular is not None:
        qp = geom.left_singular.q_prime
        out["left"] = {"location": geom.a, "q_prime": qp,
                       "eps_tilde_q_prime_nonnegative": eps_tilde * qp >= 0}
    if geom.right_singular is not None:
        out["right"] = {"location": geom.b, "h1": geom.right_singular.h1}
    return out


def mean_curvature_residual(profile: Trajectory, n: int, s: float) -> float:
    """Residual of the rotational translating-soliton equation for a Euclidean profile.

    R = w'/(1+w^2)^(3/2) + (n-1) w/(s sqrt(1+w^2)) - 1/sqrt(1+w^2), with w'
    taken from the trajectory's stored slope channel (the ODE right-hand side
    at integration time), so a profile whose w was altered afterwards shows a
    nonzero residual.
    """
    if s <= 0:
        raise ValueError("s must be positive")
    (state,) = resample(profile, [s])
    w = state.w
    root = math.sqrt(1.0 + w * w)
    dw = slope_at(profile, s)
    return dw / root ** 3 + (n - 1) * w / (s * root) - 1.0 / root
