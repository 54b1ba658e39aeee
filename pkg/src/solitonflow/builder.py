"""Assemble soliton profiles from trajectories and export surface meshes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classifier import Outcome, classify
from .geometry import GeometryError, GeometrySpec
from .integrator import Trajectory
from .profile_ode import Signature

MIN_FACE_AREA = 1e-12


class MeshError(GeometryError):
    pass


class NoEmbeddingError(MeshError):
    pass


@dataclass(frozen=True)
class SolitonProfile:
    geometry: dict
    signature: Signature
    samples: np.ndarray  # shape (N, 3): s, w, f; sorted by s
    outcome: Outcome
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        arr = np.array(self.samples, dtype=float).reshape(-1, 3)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def s(self) -> np.ndarray:
        return self.samples[:, 0]

    @property
    def w(self) -> np.ndarray:
        return self.samples[:, 1]

    @property
    def f(self) -> np.ndarray:
        return self.samples[:, 2]

    def __len__(self) -> int:
        return len(self.samples)


def _rows(traj: Trajectory) -> np.ndarray:
    rows = np.column_stack([traj.s, traj.w, traj.f]) if len(traj) else np.empty((0, 3))
    if traj.anchor is not None:
        rows = np.vstack([np.asarray(traj.anchor, dtype=float)[None, :], rows])
    return rows


def build_profile(traj: Trajectory, f1: float, geom: GeometrySpec | None = None,
                  sig: Signature | None = None, outcome: Outcome | None = None,
                  metadata: dict | None = None) -> SolitonProfile:
    """Profile with f shifted so that f(first sample) = f1.

    A launched trajectory carries its singular anchor (a or b, w=0), which
    becomes the first sample and is where f1 is imposed.  Samples are
    stored in increasing s.
    """
    rows = _rows(traj)
    if len(rows):
        rows[:, 2] += f1 - rows[0, 2]
        rows = rows[np.argsort(rows[:, 0], kind="stable")]
    sig = sig or Signature()
    if outcome is None:
        outcome = classify(traj, geom, sig) if geom is not None else Outcome("GlobalToEnd", low_confidence=True)
    meta = {"delta": traj.info.get("delta"), "launch": traj.info.get("launch", "interior"),
            "stop": traj.stop.as_dict(), "assumptions": list(traj.info.get("assumptions", []))}
    meta.update(metadata or {})
    return SolitonProfile(geom.as_dict() if geom is not None else {}, sig, rows, outcome, meta)


def rebase(profile: SolitonProfile, f1: float) -> SolitonProfile:
    """Same profile with f shifted so the first sample has f = f1."""
    rows = np.array(profile.samples)
    if len(rows):
        rows[:, 2] += f1 - rows[0, 2]
    return SolitonProfile(profile.geometry, profile.signature, rows, profile.outcome,
                          dict(profile.metadata))


@dataclass(frozen=True)
class SurfaceMesh:
    vertices: np.ndarray  # (V, 3)
    faces: np.ndarray  # (F, 4), 0-based
    ring_s: np.ndarray  # s value of each ring
    heights: np.ndarray | None = None  # per-vertex f where the embedding is not a graph in z
    boundary: tuple[int, int] = (0, 0)  # first and last ring index

    def __post_init__(self) -> None:
        for name in ("vertices", "faces", "ring_s", "heights"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr)
                arr.setflags(write=False)
                object.__setattr__(self, name, arr)


def _ring(kind: str, s: float, f: float, theta: np.ndarray, chart) -> tuple[np.ndarray, float]:
    """Vertices of one ring and its distance to the rotation axis."""
    if kind == "rotation":
        r, z = s, f
    elif kind == "latitude":
        r, z = math.cos(s), -math.sin(s)
    elif kind == "revolution":
        r, z = chart(s)
    elif kind == "horosphere":
        # strip over x1 in [-1, 1] at height x2 = e^{-s}; "theta" holds x1 samples
        y = math.exp(-s)
        return np.column_stack([theta, np.full_like(theta, y), np.full_like(theta, f)]), 1.0
    else:
        raise NoEmbeddingError(f"no mesh embedding {kind!r}")
    pts = np.column_stack([r * np.cos(theta), r * np.sin(theta), np.full_like(theta, z)])
    return pts, abs(r)


def _quad_areas(p: np.ndarray) -> np.ndarray:
    """Areas of quads given as an array of shape (F, 4, 3)."""
    a = p[:, 1] - p[:, 0]
    b = p[:, 2] - p[:, 0]
    c = p[:, 3] - p[:, 0]
    return 0.5 * (np.linalg.norm(np.cross(a, b), axis=1) + np.linalg.norm(np.cross(b, c), axis=1))


def build_mesh(profile: SolitonProfile, angular_resolution: int, s_stride: int = 1,
               geom: GeometrySpec | None = None) -> SurfaceMesh:
    """Mesh of the soliton graph for a 2-dimensional orbit space.

    Rotational embeddings use closed rings of ``angular_resolution`` vertices
    and quads between consecutive rings; rings of zero radius are skipped.
    Sphere and revolution meshes carry f as a per-vertex height channel.
    """
    kind = geom.embedding if geom is not None else profile.geometry.get("embedding")
    if kind is None:
        raise NoEmbeddingError("geometry has no mesh embedding")
    if geom is not None and geom.n != 2:
        raise NoEmbeddingError("mesh export needs n = 2")
    if isinstance(angular_resolution, bool) or int(angular_resolution) != angular_resolution \
            or angular_resolution < 3:
        raise MeshError("angular resolution must be an integer >= 3")
    if s_stride < 1:
        raise MeshError("s_stride must be >= 1")
    k = int(angular_resolution)
    closed = kind != "horosphere"
    theta = (np.arange(k) * (2 * math.pi / k) if closed else np.linspace(-1.0, 1.0, k))
    chart = geom.chart if geom is not None else None

    rows = profile.samples[::s_stride]
    verts, ring_s, heights = [], [], []
    for s, _, f in rows:
        pts, radius = _ring(kind, float(s), float(f), theta, chart)
        if radius == 0.0:
            continue
        verts.append(pts)
        ring_s.append(float(s))
        heights.append(np.full(k, float(f)))
    if len(verts) < 2:
        raise MeshError("need at least two rings to form faces")
    vertices = np.vstack(verts)
    cols = k if closed else k - 1
    r = np.repeat(np.arange(len(verts) - 1), cols)[:, None]
    j = np.tile(np.arange(cols), len(verts) - 1)[:, None]
    jn = (j + 1) % k
    quads = np.hstack([r * k + j, r * k + jn, (r + 1) * k + jn, (r + 1) * k + j]).astype(np.int64)
    faces_arr = quads[_quad_areas(vertices[quads]) > MIN_FACE_AREA]
    carry_height = kind in ("latitude", "revolution")
    return SurfaceMesh(vertices, faces_arr, np.array(ring_s),
                       np.concatenate(heights) if carry_height else None,
                       (0, len(verts) - 1))


def obj_text(mesh: SurfaceMesh) -> str:
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += ["f " + " ".join(str(i + 1) for i in face) for face in mesh.faces.tolist()]
    return "\n".join(lines) + "\n"


def write_obj(mesh: SurfaceMesh, path: str | Path) -> None:
    Path(path).write_bytes(obj_text(mesh).encode("utf-8"))
