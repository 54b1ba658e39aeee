"""Closed forms for the horosphere profile equation w' = (1+w^2)(1+(n-1)w).

Along solutions F(w(s)) - s is constant, where

    F(t) = [(n-1) ln(|1+(n-1)t| / sqrt(1+t^2)) + atan t] / (1+(n-1)^2)

has F'(t) = 1/((1+(n-1)t)(1+t^2)).  Starting above the equilibrium
-1/(n-1), w increases to +inf at K = s0 + K0 - F(w0); starting below, w
decreases to -inf at K = s0 + K1 - F(w0), with K0, K1 the limits of F at
+inf and -inf.  The integration constant of F is fixed to 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

CONSTANT_TOL = 1e-13


class PoleError(ValueError):
    pass


def _check_n(n: int) -> int:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    return int(n)


def first_integral(t: float, n: int) -> float:
    k = _check_n(n) - 1
    lin = 1.0 + k * t
    if lin == 0.0:
        raise PoleError(f"F has a pole at t = -1/(n-1) = {-1.0 / k!r}")
    return (k * math.log(abs(lin) / math.hypot(1.0, t)) + math.atan(t)) / (1 + k * k)


def first_integral_prime(t: float, n: int) -> float:
    k = _check_n(n) - 1
    return 1.0 / ((1.0 + k * t) * (1.0 + t * t))


def branch_limit(branch: int, n: int) -> float:
    """K0 (branch 2, t -> +inf) or K1 (branch 3, t -> -inf)."""
    k = _check_n(n) - 1
    log_term = k * math.log(k) if k > 1 else 0.0
    if branch == 2:
        return (log_term + math.pi / 2) / (1 + k * k)
    if branch == 3:
        return (log_term - math.pi / 2) / (1 + k * k)
    raise ValueError("branch must be 2 or 3")


@dataclass(frozen=True)
class HyperbolicCase:
    case: int  # 1 constant, 2 above the equilibrium, 3 below
    n: int
    s0: float
    f0: float
    K: float | None = None
    blowup_sign: int = 0

    @property
    def constant_slope(self) -> float | None:
        return -1.0 / (self.n - 1) if self.case == 1 else None

    def as_dict(self) -> dict:
        return {"case": self.case, "n": self.n, "s0": self.s0, "f0": self.f0,
                "K": self.K, "constant_slope": self.constant_slope,
                "blowup_sign": self.blowup_sign or None}


def predict(n: int, s0: float, f0: float, exact_constant: bool = False) -> HyperbolicCase:
    """Classify the initial slope and predict the blow-up parameter.

    ``exact_constant`` asserts f0 = -1/(n-1) symbolically; otherwise values
    within 1e-13 of it are treated as the constant solution.
    """
    n = _check_n(n)
    eq = -1.0 / (n - 1)
    if exact_constant or abs(f0 - eq) <= CONSTANT_TOL:
        return HyperbolicCase(1, n, s0, eq if exact_constant else f0)
    branch = 2 if f0 > eq else 3
    K = s0 + (branch_limit(branch, n) - first_integral(f0, n))
    return HyperbolicCase(branch, n, s0, f0, K, 1 if branch == 2 else -1)


def invert_branch(F_target: float, branch: int, n: int) -> float:
    """Solve F(t) = F_target on the monotone branch (2: t > -1/(n-1), 3: t < -1/(n-1))."""
    n = _check_n(n)
    limit = branch_limit(branch, n)
    if not F_target < limit:
        raise ValueError(f"F_target={F_target!r} must lie below the branch limit {limit!r}")
    eq = -1.0 / (n - 1)
    g = lambda t: first_integral(t, n) - F_target
    # Along either branch F increases with the distance from the equilibrium,
    # from -inf up to the branch limit.
    direction = 1.0 if branch == 2 else -1.0
    at = lambda gap: g(eq + direction * gap)
    far = 1.0
    while at(far) < 0:
        far *= 2.0
        if far > 1e300:
            raise ValueError("could not bracket the inverse")
    near = far
    while at(near) > 0:
        near *= 0.5
    lo, hi = sorted((eq + direction * near, eq + direction * far))
    return brentq(g, lo, hi, xtol=1e-300, rtol=4 * 2.0 ** -52, maxiter=500)
