"""Adaptive Dormand-Prince 5(4) integration of the coupled (f, w) profile system."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .profile_ode import ProfileState, Signature, rhs_reduced

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
# 5th order weights minus embedded 4th order weights
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

# Continuous extension of order 4 for the DP5 pair: over a step of length h
# from y_old, y(x) = y_old + h * K^T P [x, x^2, x^3, x^4] with K the 7 stages.
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

STOP_KINDS = ("reached_end", "blow_up", "step_underflow", "max_steps", "eval_error")


@dataclass(frozen=True)
class IntegratorConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    w_max: float = 1e8
    h_min: float | None = None  # defaults to 1e-14 * span
    max_steps: int = 10_000_000

    def __post_init__(self) -> None:
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not self.w_max > 1:
            raise ValueError("w_max must exceed 1")
        if self.h_min is not None and not self.h_min > 0:
            raise ValueError("h_min must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")

    def as_dict(self) -> dict:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "w_max": self.w_max,
            "h_min": self.h_min,
            "max_steps": self.max_steps,
        }


@dataclass(frozen=True)
class StopReason:
    """Why an integration ended.

    ``kind`` is one of ``STOP_KINDS``.  For ``blow_up``, ``s`` is the located
    crossing of ``|w| = w_max`` and ``sign`` the sign of w there; ``s_probe``
    and ``w_probe`` record the first probe state with ``|w| >= w_max``.
    """

    kind: str
    s: float
    sign: int = 0
    s_probe: float | None = None
    w_probe: float | None = None
    message: str = ""

    def __post_init__(self) -> None:
        if self.kind not in STOP_KINDS:
            raise ValueError(f"unknown stop kind {self.kind!r}")

    def as_dict(self) -> dict:
        out = {"kind": self.kind, "s": self.s}
        if self.kind == "blow_up":
            out["sign"] = self.sign
        if self.message:
            out["message"] = self.message
        return out


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Trajectory:
    """Accepted integration samples of (s, w, f) plus the slope ``dw`` = w'(s).

    ``anchor``, when set, is the singular endpoint state (s, w, f) a launched
    trajectory passes through; it is not one of the samples.  ``dense``
    holds, per step, the increments of the order-4 continuous extension for
    (w, f) (shape (N-1, 2, 4)); without it interpolation falls back to cubic
    Hermite.
    """

    s: np.ndarray
    w: np.ndarray
    f: np.ndarray
    dw: np.ndarray
    stop: StopReason
    direction: str = "forward"
    anchor: tuple[float, float, float] | None = None
    info: dict = field(default_factory=dict)
    dense: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in ("s", "w", "f", "dw"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.dense is not None:
            object.__setattr__(self, "dense", _frozen(self.dense).reshape(-1, 2, 4))
            if len(self.dense) != max(len(self.s) - 1, 0):
                object.__setattr__(self, "dense", None)
        if not (len(self.s) == len(self.w) == len(self.f) == len(self.dw)):
            raise ValueError("sample arrays must have equal length")
        if self.direction not in ("forward", "backward"):
            raise ValueError("direction must be 'forward' or 'backward'")

    def __len__(self) -> int:
        return len(self.s)

    @property
    def states(self) -> list[ProfileState]:
        return [ProfileState(float(a), float(b), float(c))
                for a, b, c in zip(self.s, self.w, self.f)]

    def with_info(self, **kw) -> "Trajectory":
        return replace(self, info={**self.info, **kw})


class _HFailure(Exception):
    pass


def _dopri_step(fun, t, y0, y1, k1, h):
    """One DP5 step for (f, w); returns (f, w, k7, err_f, err_w, dense increments)."""
    ks = [k1]
    for i in range(1, 7):
        a = _A[i]
        yf = y0 + h * sum(a[j] * ks[j][0] for j in range(i))
        yw = y1 + h * sum(a[j] * ks[j][1] for j in range(i))
        ks.append(fun(t + _C[i] * h, yf, yw))
    nf = y0 + h * sum(_B[j] * ks[j][0] for j in range(6))
    nw = y1 + h * sum(_B[j] * ks[j][1] for j in range(6))
    ef = h * sum(_E[j] * ks[j][0] for j in range(7))
    ew = h * sum(_E[j] * ks[j][1] for j in range(7))
    q = h * (np.array(ks).T @ _P)  # rows: f, w
    return nf, nw, ks[6], ef, ew, q[::-1]


def integrate(sig: Signature, h_fn: Callable[[float], float], s0: float, w0: float,
              f0: float, s_target: float, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate f' = w, w' = (eps_t + eps w^2)(1 - h w) from s0 towards s_target.

    Never raises for numerical trouble; the outcome is carried by
    ``Trajectory.stop``.  Backward runs (s_target < s0) integrate in u = -s.
    """
    cfg = cfg or IntegratorConfig()
    if s0 == s_target:
        raise ValueError("s0 and s_target must differ")
    if not all(math.isfinite(v) for v in (s0, w0, f0, s_target)):
        raise ValueError("initial data must be finite")
    direction = 1.0 if s_target > s0 else -1.0
    span = abs(s_target - s0)
    h_min = cfg.h_min if cfg.h_min is not None else 1e-14 * span

    def h_at(s: float) -> float:
        try:
            v = float(h_fn(s))
        except (ArithmeticError, ValueError) as exc:
            raise _HFailure(str(exc)) from None
        if not math.isfinite(v):
            raise _HFailure(f"h is not finite at s={s!r}")
        return v

    # Internal time t = direction * s; d/dt = direction * d/ds.
    def fun(t: float, yf: float, yw: float) -> tuple[float, float]:
        hv = h_at(direction * t)
        return direction * yw, direction * rhs_reduced(sig, hv, yw)

    t, t_end = direction * s0, direction * s_target
    yf, yw = float(f0), float(w0)
    ss, ws, fs, dws, dense = [s0], [yw], [yf], [], []

    def finish(stop: StopReason) -> Trajectory:
        if len(dws) < len(ss):
            try:
                dws.append(rhs_reduced(sig, h_at(ss[-1]), ws[-1]))
            except _HFailure:
                dws.append(float("nan"))
        return Trajectory(np.array(ss), np.array(ws), np.array(fs), np.nan_to_num(np.array(dws)),
                          stop, "forward" if direction > 0 else "backward",
                          dense=np.array(dense).reshape(-1, 2, 4))

    try:
        k1 = fun(t, yf, yw)
    except _HFailure as exc:
        return finish(StopReason("eval_error", s0, message=str(exc)))
    dws.append(direction * k1[1])

    def err_norm(ef, ew, nf, nw):
        sf = cfg.abs_tol + cfg.rel_tol * max(abs(yf), abs(nf))
        sw = cfg.abs_tol + cfg.rel_tol * max(abs(yw), abs(nw))
        return math.sqrt(0.5 * ((ef / sf) ** 2 + (ew / sw) ** 2))

    h = _initial_step(fun, t, yf, yw, k1, cfg, span)
    err_old = 1e-4
    beta = 0.04
    alpha = 0.2 - 0.75 * beta
    n_steps = 0
    rejected_last = False

    while True:
        if n_steps >= cfg.max_steps:
            return finish(StopReason("max_steps", direction * t))
        remaining = t_end - t
        last = h >= remaining
        if last:
            h = remaining
        if h < h_min and not last:
            if abs(yw) > math.sqrt(cfg.w_max) and yw * dws[-1] * direction > 0:
                return finish(StopReason("blow_up", direction * t, sign=int(math.copysign(1, yw)),
                                         message="step collapse with |w| growing"))
            return finish(StopReason("step_underflow", direction * t))
        try:
            nf, nw, k7, ef, ew, q = _dopri_step(fun, t, yf, yw, k1, h)
            err = err_norm(ef, ew, nf, nw)
        except _HFailure as exc:
            # h may be undefined inside the step; retry smaller, give up below h_min.
            h *= 0.25
            if h < h_min:
                return finish(StopReason("eval_error", direction * t, message=str(exc)))
            continue
        except OverflowError:
            err = math.inf
        if not math.isfinite(err):
            h *= 0.2
            rejected_last = True
            continue
        n_steps += 1
        if err <= 1.0:
            t_new = t_end if last else t + h
            if abs(nw) >= cfg.w_max:
                return _locate_blowup(fun, t, yf, yw, k1, h, cfg, span, direction,
                                      ss, ws, fs, dws, dense, finish)
            t, yf, yw, k1 = t_new, nf, nw, k7
            ss.append(direction * t)
            ws.append(yw)
            fs.append(yf)
            dws.append(direction * k1[1])
            dense.append(q)
            if last:
                return finish(StopReason("reached_end", direction * t))
            err = max(err, 1e-10)
            fac = err ** -alpha * err_old ** beta
            fac = min(10.0, max(0.2, 0.9 * fac))
            if rejected_last:
                fac = min(fac, 1.0)
            h *= fac
            err_old = err
            rejected_last = False
        else:
            h *= max(0.2, 0.9 * err ** -alpha)
            rejected_last = True


def _initial_step(fun, t, yf, yw, k1, cfg, span):
    sf = cfg.abs_tol + cfg.rel_tol * abs(yf)
    sw = cfg.abs_tol + cfg.rel_tol * abs(yw)
    d0 = math.hypot(yf / sf, yw / sw) / math.sqrt(2)
    d1 = math.hypot(k1[0] / sf, k1[1] / sw) / math.sqrt(2)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, span)
    try:
        k2 = fun(t + h0, yf + h0 * k1[0], yw + h0 * k1[1])
        d2 = math.hypot((k2[0] - k1[0]) / sf, (k2[1] - k1[1]) / sw) / math.sqrt(2) / h0
    except (_HFailure, OverflowError):
        return h0 * 1e-3
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, span)


def _locate_blowup(fun, t, yf, yw, k1, h, cfg, span, direction, ss, ws, fs, dws, dense, finish):
    """Bisect the step length until |w| = w_max is bracketed to 1e-12 * span."""
    lo, hi = 0.0, h
    w_hi = math.inf
    lo_state = None
    while hi - lo > 1e-12 * span:
        mid = 0.5 * (lo + hi)
        try:
            nf, nw, k7, _, _, q = _dopri_step(fun, t, yf, yw, k1, mid)
            crossed = not math.isfinite(nw) or abs(nw) >= cfg.w_max
        except (_HFailure, OverflowError):
            crossed, nw = True, math.inf
        if crossed:
            hi, w_hi = mid, nw
        else:
            lo, lo_state = mid, (nf, nw, k7, q)
    if lo_state is not None:
        nf, nw, k7, q = lo_state
        dense.append(q)
        ss.append(direction * (t + lo))
        ws.append(nw)
        fs.append(nf)
        dws.append(direction * k7[1])
        sign = int(math.copysign(1, nw))
    else:
        sign = int(math.copysign(1, yw))
    s_star = direction * (t + 0.5 * (lo + hi))
    return finish(StopReason("blow_up", s_star, sign=sign, s_probe=direction * (t + hi),
                             w_probe=w_hi))


def _hermite(s0, s1, y0, y1, d0, d1, s):
    hh = s1 - s0
    x = (s - s0) / hh
    h00 = (1 + 2 * x) * (1 - x) ** 2
    h10 = x * (1 - x) ** 2
    h01 = x * x * (3 - 2 * x)
    h11 = x * x * (x - 1)
    return h00 * y0 + h10 * hh * d0 + h01 * y1 + h11 * hh * d1


def _hermite_slope(s0, s1, y0, y1, d0, d1, s):
    hh = s1 - s0
    x = (s - s0) / hh
    return (6 * x * x - 6 * x) * (y0 - y1) / hh + (3 * x * x - 4 * x + 1) * d0 \
        + (3 * x * x - 2 * x) * d1


def _segment(traj: Trajectory, s: float) -> tuple[int, bool]:
    """Index j of the step containing s (samples j, j+1) and whether s is sample j."""
    key = traj.s if traj.direction == "forward" else -traj.s
    g = s if traj.direction == "forward" else -s
    lo, hi = key[0], key[-1]
    if not lo <= g <= hi:
        raise ValueError(f"s={s!r} outside trajectory range "
                         f"[{min(traj.s[0], traj.s[-1])!r}, {max(traj.s[0], traj.s[-1])!r}]")
    j = int(np.searchsorted(key, g))
    if key[j] == g:
        return j, True
    return j - 1, False


def _interp(traj: Trajectory, s: float) -> tuple[float, float, float]:
    """(w, f, dw/ds) at s between samples."""
    j, exact = _segment(traj, s)
    if exact:
        return float(traj.w[j]), float(traj.f[j]), float(traj.dw[j])
    s0, s1 = traj.s[j], traj.s[j + 1]
    if traj.dense is not None:
        x = (s - s0) / (s1 - s0)
        p = np.array([x, x * x, x ** 3, x ** 4])
        dp = np.array([1.0, 2 * x, 3 * x * x, 4 * x ** 3]) / (s1 - s0)
        qw, qf = traj.dense[j]
        return (float(traj.w[j] + qw @ p), float(traj.f[j] + qf @ p), float(qw @ dp))
    w0, w1, d0, d1 = traj.w[j], traj.w[j + 1], traj.dw[j], traj.dw[j + 1]
    w = _hermite(s0, s1, w0, w1, d0, d1, s)
    f = _hermite(s0, s1, traj.f[j], traj.f[j + 1], w0, w1, s)
    return float(w), float(f), float(_hermite_slope(s0, s1, w0, w1, d0, d1, s))


def slope_at(traj: Trajectory, s: float) -> float:
    """w'(s) from the stored slope channel: exact at samples, interpolated between."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return _interp(traj, float(s))[2]


def resample(traj: Trajectory, grid) -> list[ProfileState]:
    """States at the grid points; samples are returned exactly.

    Between samples the integrator's order-4 continuous extension is used,
    or cubic Hermite on (w, dw) and (f, w) for trajectories without it.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    out = []
    for g in grid:
        g = float(g)
        w, f, _ = _interp(traj, g)
        out.append(ProfileState(g, w, f))
    return out
