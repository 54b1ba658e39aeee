"""Starting trajectories at singular endpoints where h blows up and q = 1/h vanishes.

In the autonomous picture (s, w)' = (q(s), (eps_t + eps w^2)(q(s) - w)) the
endpoint (e, 0) is a fixed point with linearization [[q'(e), 0],
[eps_t q'(e), -eps_t]].  The profile through it is tangent to the eigenvector
(eps_t + q'(e), eps_t q'(e)), so its slope there is
eps_t q'(e) / (eps_t + q'(e)).  A trajectory is seeded a distance ``delta``
inside the interval along that tangent and handed to the integrator.
"""

from __future__ import annotations

import math
from dataclasses import replace

from .geometry import GeometrySpec, HypothesisError
from .integrator import IntegratorConfig, Trajectory, integrate
from .profile_ode import Signature

Q0_NOTE = ("q'(a)=0: neighbouring profiles through the endpoint differ by exponentially "
           "small terms; the launched trajectory is one representative")
RIGHT_SEED_NOTE = ("right endpoint seeded along the node eigen-slope "
                   "eps_t*q'(b)/(eps_t+q'(b)) = h1/(h1-1) for eps=eps_t=1")
RESONANT_NOTE = ("right endpoint with h1 = eps_t (resonant node): seeded with "
                 "w = -eps_t*u*ln(u), u = b - s")


# measured endpoint derivatives carry finite-difference noise
SIGN_TOL = 1e-8


class UnsupportedEndpoint(ValueError):
    pass


def initial_slope(q_prime: float, eps_tilde: int) -> float:
    """Slope of the invariant curve through the singular fixed point."""
    denom = eps_tilde + q_prime
    if denom == 0:
        raise UnsupportedEndpoint(
            f"degenerate eigenvector: eps_tilde + q' = 0 (q'={q_prime!r})")
    return eps_tilde * q_prime / denom


def default_delta(geom: GeometrySpec) -> float:
    width = geom.b - geom.a
    return min(1e-6, 1e-6 * width) if math.isfinite(width) else 1e-6


def launch_left(geom: GeometrySpec, sig: Signature, delta: float | None = None,
                cfg: IntegratorConfig | None = None, f1: float = 0.0,
                s_target: float | None = None) -> Trajectory:
    data = geom.left_singular
    if data is None:
        raise HypothesisError(f"geometry {geom.name!r} has no singular left endpoint")
    qp = data.q_prime
    if abs(qp) <= SIGN_TOL:
        qp = 0.0
    if sig.epsilon_tilde * qp < 0:
        raise HypothesisError("launch needs eps_tilde * q'(a) >= 0",
                              {"q_prime": qp, "eps_tilde": sig.epsilon_tilde})
    delta = default_delta(geom) if delta is None else float(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    a = data.location
    if s_target is None:
        if not math.isfinite(geom.b):
            raise ValueError("s_target is required on an unbounded interval")
        s_target = geom.b - delta
    m = initial_slope(qp, sig.epsilon_tilde)
    s0 = a + delta
    traj = integrate(sig, geom.h, s0, m * delta, f1 + 0.5 * m * delta * delta, s_target, cfg)
    notes = [Q0_NOTE] if qp == 0 else []
    return replace(traj, anchor=(a, 0.0, f1),
                   info={"launch": "left", "slope": m, "delta": delta, "assumptions": notes})


def launch_right(geom: GeometrySpec, sig: Signature, delta: float | None = None,
                 cfg: IntegratorConfig | None = None, f1: float = 0.0,
                 s_target: float | None = None) -> Trajectory:
    """Backward trajectory from a right endpoint where w tends to 0.

    For eps = eps_t the endpoint is a node: every nearby profile reaches
    w = 0 there, all but one tangent to the slow eigendirection.  The seed
    follows the eigenvector (eps_t + q'(b), eps_t q'(b)); at the resonance
    h1 = eps_t the expansion w = -eps_t u ln u (u = b - s) is used instead.
    """
    data = geom.right_singular
    if data is None:
        raise HypothesisError(f"geometry {geom.name!r} has no singular right endpoint")
    if sig.product != 1:
        raise HypothesisError("right endpoint launch needs eps = eps_tilde",
                              sig.as_dict())
    h1 = data.h1
    if sig.epsilon_tilde * h1 < -SIGN_TOL:
        raise HypothesisError("right endpoint launch needs eps_tilde * h1 >= 0",
                              {"h1": h1, "eps_tilde": sig.epsilon_tilde})
    delta = default_delta(geom) if delta is None else float(delta)
    if not delta > 0:
        raise ValueError("delta must be positive")
    b = data.location
    if s_target is None:
        if not math.isfinite(geom.a):
            raise ValueError("s_target is required on an unbounded interval")
        s_target = geom.a + delta
    et = sig.epsilon_tilde
    qp = 0.0 if abs(data.q_prime) <= SIGN_TOL else data.q_prime
    if et + qp == 0:
        # w(b - u) = -eps_t u ln u;  f(b - u) = f1 - int_0^u w
        w0 = -et * delta * math.log(delta)
        f0 = f1 + et * (0.5 * delta * delta * math.log(delta) - 0.25 * delta * delta)
        m = None  # slope diverges logarithmically
        note = RESONANT_NOTE
    else:
        m = initial_slope(qp, et)
        w0 = -m * delta
        f0 = f1 + 0.5 * m * delta * delta
        note = RIGHT_SEED_NOTE
    traj = integrate(sig, geom.h, b - delta, w0, f0, s_target, cfg)
    return replace(traj, anchor=(b, 0.0, f1),
                   info={"launch": "right", "slope": m, "delta": delta, "assumptions": [note]})
