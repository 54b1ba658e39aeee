"""Command-line interface: solve, verify-bounds, hyperbolic-predict, mesh.

Exit codes: 0 success (a detected blow-up is a successful result), 2 bad
flags or expression syntax, 3 numeric failure, 4 violated hypothesis or
bound, or a geometry without a mesh embedding.  Output files are written
to a temporary name and renamed only when the command succeeds.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from . import classifier as cl
from . import expr as ex
from . import geometry as geo
from . import hyperbolic as hyp
from .builder import MeshError, NoEmbeddingError, SolitonProfile, build_mesh, build_profile, obj_text
from .integrator import IntegratorConfig, integrate
from .launcher import UnsupportedEndpoint, launch_left, launch_right
from .profile_ode import Signature

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_HYPOTHESIS = 0, 2, 3, 4
NUMERIC_STOPS = ("step_underflow", "max_steps", "eval_error")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# -- output helpers ------------------------------------------------------------

def atomic_write(path: str | Path, data: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data.encode("utf-8"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_text(rows) -> str:
    buf = io.StringIO()
    buf.write("s,w,f\n")
    for s, w, f in rows:
        buf.write(f"{float(s)!r},{float(w)!r},{float(f)!r}\n")
    return buf.getvalue()


def read_profile_csv(path: str) -> list[tuple[float, float, float]]:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["s", "w", "f"]:
                raise CliError(EXIT_USAGE, f"{path}: expected header 's,w,f', got {header!r}")
            rows = []
            for lineno, rec in enumerate(reader, start=2):
                if len(rec) != 3:
                    raise CliError(EXIT_USAGE, f"{path}:{lineno}: expected 3 fields")
                try:
                    vals = tuple(float(v) for v in rec)
                except ValueError:
                    raise CliError(EXIT_USAGE, f"{path}:{lineno}: non-numeric field") from None
                if not all(math.isfinite(v) for v in vals):
                    raise CliError(EXIT_USAGE, f"{path}:{lineno}: non-finite value")
                rows.append(vals)
    except OSError as exc:
        raise CliError(EXIT_USAGE, f"cannot read {path}: {exc.strerror}") from None
    return rows


def svg_text(rows, width: int = 640, height: int = 240) -> str:
    """Two stacked panels: w(s) on top, f(s) below."""
    s = [r[0] for r in rows]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{2 * height}" '
             f'viewBox="0 0 {width} {2 * height}">',
             f'<rect width="{width}" height="{2 * height}" fill="white"/>']
    for panel, (idx, label, colour) in enumerate(((1, "w", "#1f5fa8"), (2, "f", "#a8401f"))):
        ys = [r[idx] for r in rows]
        lo_s, hi_s = min(s), max(s)
        lo_y, hi_y = min(ys), max(ys)
        span_s = (hi_s - lo_s) or 1.0
        span_y = (hi_y - lo_y) or 1.0
        top = panel * height
        pts = " ".join(
            f"{10 + (x - lo_s) / span_s * (width - 20):.3f},"
            f"{top + height - 10 - (y - lo_y) / span_y * (height - 30):.3f}"
            for x, y in zip(s, ys))
        parts.append(f'<text x="12" y="{top + 16}" font-family="monospace" font-size="12">'
                     f'{label}(s)  [{lo_y:.6g}, {hi_y:.6g}]</text>')
        parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{pts}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# -- argument parsing ------------------------------------------------------------

def _sign(text: str) -> int:
    if text in ("1", "+1"):
        return 1
    if text == "-1":
        return -1
    raise argparse.ArgumentTypeError(f"expected +1 or -1, got {text!r}")


def _finite(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a finite number, got {text!r}")
    return value


def _bound(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if math.isnan(value):
        raise argparse.ArgumentTypeError("NaN is not a valid bound")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.isidentifier():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    return name, _finite(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solitonflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="integrate a profile and classify its fate")
    p.add_argument("--eps", type=_sign, required=True)
    p.add_argument("--epst", type=_sign, required=True)
    p.add_argument("--preset", choices=geo.PRESETS)
    p.add_argument("--n", type=_positive_int, default=2)
    p.add_argument("--x", help="revolution preset: x(s) of the arclength profile curve")
    p.add_argument("--z", help="revolution preset: z(s) of the arclength profile curve")
    p.add_argument("--h", dest="h_expr", metavar="EXPR", help="h(s) expression")
    p.add_argument("--domain", nargs=2, type=_bound, metavar=("A", "B"),
                   help="interval for --h; for the revolution preset B sets the curve length")
    p.add_argument("--param", type=_param, action="append", default=[], metavar="NAME=VALUE")
    start = p.add_mutually_exclusive_group(required=True)
    start.add_argument("--start-interior", nargs=3, type=_finite, metavar=("S0", "W0", "F0"))
    start.add_argument("--start-left", action="store_true")
    start.add_argument("--start-right", action="store_true")
    p.add_argument("--f1", type=_finite, default=0.0, help="f at the singular endpoint")
    p.add_argument("--delta", type=_finite, help="seed offset from a singular endpoint")
    p.add_argument("--target", type=_finite)
    p.add_argument("--rel-tol", type=_finite, default=1e-10)
    p.add_argument("--abs-tol", type=_finite, default=1e-12)
    p.add_argument("--w-max", type=_finite, default=1e8)
    p.add_argument("--out", help="profile CSV")
    p.add_argument("--json", dest="json_out", help="run record JSON")
    p.add_argument("--svg", help="chart of w(s) and f(s)")
    p.add_argument("--record-timing", action="store_true",
                   help="include wall-clock time in the run record (breaks byte identity)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify-bounds", help="check blow-up bounds numerically")
    p.add_argument("--case", choices=cl.CASE_IDS)
    p.add_argument("--lambda", dest="lam", type=_finite)
    p.add_argument("--c", type=_finite, default=0.0)
    p.add_argument("--h", dest="h_expr", metavar="EXPR")
    p.add_argument("--grid", action="store_true",
                   help="run the standard lambda grid (all cases unless --case is given)")
    p.add_argument("--rel-tol", type=_finite, default=1e-10)
    p.add_argument("--json", dest="json_out")
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("hyperbolic-predict", help="closed-form horosphere prediction")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--s0", type=_finite, required=True)
    p.add_argument("--f0", type=_finite, required=True)
    p.add_argument("--constant", action="store_true",
                   help="treat f0 as exactly -1/(n-1)")
    p.add_argument("--integrate", action="store_true",
                   help="also locate the blow-up numerically")
    p.add_argument("--json", dest="json_out")
    p.set_defaults(func=cmd_hyperbolic_predict)

    p = sub.add_parser("mesh", help="export an OBJ surface from a profile CSV")
    p.add_argument("--profile", required=True)
    p.add_argument("--preset", choices=geo.PRESETS, required=True)
    p.add_argument("--n", type=_positive_int, default=2)
    p.add_argument("--x")
    p.add_argument("--z")
    p.add_argument("--angles", type=_positive_int, default=64)
    p.add_argument("--stride", type=_positive_int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mesh)
    return parser


# -- commands -------------------------------------------------------------------

def _preset(name: str, n: int, extra: dict) -> geo.GeometrySpec:
    try:
        return geo.make_preset(name, n, **extra)
    except geo.HypothesisError:
        raise
    except geo.GeometryError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None


def _geometry(args) -> geo.GeometrySpec:
    if args.preset and args.h_expr:
        raise CliError(EXIT_USAGE, "use either --preset or --h, not both")
    if args.preset:
        extra = {}
        if args.preset == "revolution":
            if args.x is None or args.z is None:
                raise CliError(EXIT_HYPOTHESIS, "revolution preset needs --x and --z")
            extra = {"x": args.x, "z": args.z, "params": dict(args.param)}
            if args.domain is not None:
                # the curve starts on the axis at s = 0; only the far end is free
                extra["s_max"] = args.domain[1]
        elif args.domain is not None:
            raise CliError(EXIT_USAGE, f"--domain is fixed by the {args.preset} preset")
        return _preset(args.preset, args.n, extra)
    if args.h_expr is None or args.domain is None:
        raise CliError(EXIT_USAGE, "give --preset or both --h and --domain")
    return geo.from_expression(args.h_expr, tuple(args.domain), n=args.n,
                               left=args.start_left, right=args.start_right,
                               params=dict(args.param))


def _record_flags(args) -> dict:
    out = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        if isinstance(value, tuple):
            value = list(value)
        if key == "param":
            value = [list(v) for v in value]
        out[key] = value
    return out


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    geom = _geometry(args)
    sig = Signature(args.eps, args.epst)
    cfg = IntegratorConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol, w_max=args.w_max)
    if args.start_left:
        traj = launch_left(geom, sig, args.delta, cfg, args.f1, args.target)
    elif args.start_right:
        traj = launch_right(geom, sig, args.delta, cfg, args.f1, args.target)
    else:
        s0, w0, f0 = args.start_interior
        if not geom.a < s0 < geom.b:
            raise CliError(EXIT_USAGE, f"S0={s0!r} is outside the open domain ({geom.a}, {geom.b})")
        target = args.target
        if target is None:
            if not math.isfinite(geom.b):
                raise CliError(EXIT_USAGE, "--target is required on an unbounded interval")
            target = geom.b - 1e-6 * min(1.0, geom.b - geom.a)
        traj = integrate(sig, geom.h, s0, w0, f0, target, cfg)
    if traj.stop.kind in NUMERIC_STOPS:
        raise CliError(EXIT_NUMERIC, f"integration failed: {traj.stop.kind} at s={traj.stop.s!r}"
                       + (f" ({traj.stop.message})" if traj.stop.message else ""))

    f_ref = args.f1 if (args.start_left or args.start_right) else args.start_interior[2]
    profile = build_profile(traj, f_ref, geom, sig)
    assumptions = list(dict.fromkeys([*geom.assumptions, *profile.metadata["assumptions"]]))
    record = {
        "tool": "solitonflow",
        "version": __version__,
        "command": "solve",
        "flags": _record_flags(args),
        "geometry": geom.as_dict(),
        "signature": sig.as_dict(),
        "config": cfg.as_dict(),
        "outcome": profile.outcome.as_dict(),
        "stop": traj.stop.as_dict(),
        "samples": len(profile),
        "seed": {"launch": profile.metadata["launch"], "delta": profile.metadata["delta"],
                 "slope": traj.info.get("slope")},
        "assumptions": assumptions,
    }
    if args.record_timing:
        record["wall_clock_s"] = time.perf_counter() - t0
    outputs = []
    if args.out:
        outputs.append((args.out, csv_text(profile.samples.tolist())))
    if args.svg:
        outputs.append((args.svg, svg_text(profile.samples.tolist())))
    if args.json_out:
        outputs.append((args.json_out, json_text(record)))
    for path, text in outputs:
        atomic_write(path, text)
    sys.stdout.write(json_text({"outcome": record["outcome"], "samples": record["samples"]}))
    return EXIT_OK


def cmd_verify_bounds(args) -> int:
    if args.grid:
        cases = [args.case] if args.case else list(cl.CASE_IDS)
        jobs = [(cid, lam) for cid in cases for lam in cl.bound_grid(cid)]
    else:
        if args.case is None or args.lam is None:
            raise CliError(EXIT_USAGE, "give --case and --lambda, or --grid")
        jobs = [(args.case, args.lam)]
    cfg = IntegratorConfig(rel_tol=args.rel_tol)
    h_fn = ex.parse(args.h_expr, ()).bind({}) if args.h_expr else None
    rows = []
    for cid, lam in jobs:
        try:
            case = cl.BoundCase.make(cid, lam, args.c)
        except cl.BoundError as exc:
            raise CliError(EXIT_USAGE, str(exc)) from None
        try:
            result = cl.verify_bound(case, h_fn, cfg)
        except cl.ClauseConditionError as exc:
            raise CliError(EXIT_HYPOTHESIS, f"{cid}: {exc}") from None
        rows.append(result.as_dict())
    text = json_text({"tool": "solitonflow", "version": __version__, "command": "verify-bounds",
                      "flags": _record_flags(args), "rows": rows})
    ok = all(r["passed"] for r in rows)
    if ok and args.json_out:
        atomic_write(args.json_out, text)
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def cmd_hyperbolic_predict(args) -> int:
    try:
        pred = hyp.predict(args.n, args.s0, args.f0, exact_constant=args.constant)
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    out = pred.as_dict()
    if args.integrate and pred.K is not None:
        geom = geo.horosphere(args.n)
        traj = integrate(Signature(1, 1), geom.h, args.s0, args.f0, 0.0, pred.K + 1.0)
        if traj.stop.kind != "blow_up":
            raise CliError(EXIT_NUMERIC, f"no blow-up located (stop: {traj.stop.kind})")
        out["s_star_numeric"] = traj.stop.s
        out["difference"] = traj.stop.s - pred.K
    text = json_text(out)
    if args.json_out:
        atomic_write(args.json_out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_mesh(args) -> int:
    rows = read_profile_csv(args.profile)
    extra = {}
    if args.preset == "revolution":
        if args.x is None or args.z is None:
            raise CliError(EXIT_HYPOTHESIS, "revolution preset has no embedding without --x and --z")
        extra = {"x": args.x, "z": args.z}
        s_last = max((float(r[0]) for r in rows), default=0.0)
        if s_last > 0:
            # check the curve only as far as the profile reaches
            extra["s_max"] = s_last
    geom = _preset(args.preset, args.n, extra)
    profile = SolitonProfile(geom.as_dict(), Signature(), rows, cl.Outcome("GlobalToEnd"))
    try:
        mesh = build_mesh(profile, args.angles, args.stride, geom)
    except NoEmbeddingError as exc:
        raise CliError(EXIT_HYPOTHESIS, str(exc)) from None
    except MeshError as exc:
        raise CliError(EXIT_USAGE, str(exc)) from None
    atomic_write(args.out, obj_text(mesh))
    sys.stdout.write(json_text({"vertices": len(mesh.vertices), "faces": len(mesh.faces)}))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with 2 on bad flags
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ex.ParseError, ex.UnknownFunctionError, ex.UnknownIdentifierError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except geo.HypothesisError as exc:
        detail = f" {json.dumps(exc.measured, sort_keys=True)}" if exc.measured else ""
        print(f"error: hypothesis violated: {exc}{detail}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (UnsupportedEndpoint, geo.GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except ex.ExpressionError as exc:
        print(f"error: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
