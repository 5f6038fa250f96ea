"""Explicit fiber maps with known fiber volumes.

The classical circle, three-sphere, and seven-sphere bundles over
spheres are built from normed-algebra multiplication (complex,
quaternion, octonion via the standard doubling construction), together
with coordinate maps on spheres, projective spaces, and flat tori whose
fibers have closed-form volumes.  Each map supports evaluation, fiber
meshing, analytic fiber volume, volume profiles over target grids, and
certificate checks against registered lower bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, UsageError
from .meshes import (
    SubmanifoldMesh,
    circle_mesh,
    clifford_torus_mesh,
    subsphere_mesh,
)
from .reports import Certificate
from .spaces import SpaceDescriptor, sphere_volume

_ON_SPHERE_TOL = 1e-8
_HOPF_KINDS = ("hopf_3_2", "hopf_7_4", "hopf_15_8")


# ---------------------------------------------------------------------------
# normed-algebra arithmetic (doubling construction)
# ---------------------------------------------------------------------------

def algebra_conjugate(x: np.ndarray) -> np.ndarray:
    """Conjugate in the dimension-1/2/4/8 normed algebra: negate imaginaries."""
    x = np.asarray(x, dtype=float)
    out = -x.copy()
    out[..., 0] = x[..., 0]
    return out


def algebra_multiply(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Product in the real, complex, quaternion, or octonion algebra.

    Shapes broadcast over leading axes; the trailing axis is the algebra
    dimension, doubled by (a,b)(c,d) = (ac - conj(d)b, da + b conj(c)).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x.shape[-1]
    if y.shape[-1] != d:
        raise UsageError("algebra factors must share a dimension")
    if d not in (1, 2, 4, 8):
        raise DomainError(f"algebra dimension must be 1, 2, 4, or 8, got {d}")
    if d == 1:
        return x * y
    h = d // 2
    a, b = x[..., :h], x[..., h:]
    c, e = y[..., :h], y[..., h:]
    left = algebra_multiply(a, c) - algebra_multiply(algebra_conjugate(e), b)
    right = algebra_multiply(e, a) + algebra_multiply(b, algebra_conjugate(c))
    return np.concatenate([left, right], axis=-1)


# ---------------------------------------------------------------------------
# map descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FiberMap:
    """A named map together with its source and target spaces.

    ``matrix``, ``lengths``, ``kept``, and ``base`` carry kind-specific
    data (projection matrix, torus lengths, kept target axes, or the
    map being quotiented).
    """

    kind: str
    source: SpaceDescriptor
    target: SpaceDescriptor
    matrix: np.ndarray | None = None
    lengths: tuple = ()
    kept: tuple = ()
    base: "FiberMap | None" = None
    # generic dimension of the fibers, for bound lookups
    fiber_dim: int = field(default=0)


def hopf_map(total_dim: int) -> FiberMap:
    """The bundle over the half-dimensional sphere, total_dim in {3, 7, 15}."""
    if total_dim not in (3, 7, 15):
        raise DomainError(f"total sphere dimension must be 3, 7, or 15, got {total_dim}")
    half = (total_dim + 1) // 2
    return FiberMap(
        kind=f"hopf_{total_dim}_{half}",
        source=SpaceDescriptor.sphere(total_dim),
        target=SpaceDescriptor.sphere(half),
        fiber_dim=half - 1,
    )


def rp_quotient_of(base: FiberMap) -> FiberMap:
    """Quotient an even map by the antipodal action on its source sphere."""
    if base.kind not in _HOPF_KINDS:
        raise UsageError(
            "antipodal quotients are registered for the hopf kinds only"
        )
    n = base.source.dim
    return FiberMap(
        kind="rp_quotient_of",
        source=SpaceDescriptor.real_projective(n),
        target=base.target,
        base=base,
        fiber_dim=base.fiber_dim,
    )


def abs_z1_on_s3() -> FiberMap:
    """|first complex coordinate| on the unit 3-sphere, target [0, 1]."""
    return FiberMap(
        kind="abs_z1_on_S3",
        source=SpaceDescriptor.sphere(3),
        target=SpaceDescriptor.cube(1, 1.0),
        fiber_dim=2,
    )


def abs_z1_on_rp3() -> FiberMap:
    return FiberMap(
        kind="abs_z1_on_RP3",
        source=SpaceDescriptor.real_projective(3),
        target=SpaceDescriptor.cube(1, 1.0),
        fiber_dim=2,
    )


def x1_squared_on_rp2() -> FiberMap:
    """Square of the first coordinate on the projective plane."""
    return FiberMap(
        kind="x1_squared_on_RP2",
        source=SpaceDescriptor.real_projective(2),
        target=SpaceDescriptor.cube(1, 1.0),
        fiber_dim=1,
    )


def linear_projection(n: int, matrix: np.ndarray) -> FiberMap:
    """Restriction of an orthonormal-row linear map to the unit n-sphere."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[1] != n + 1:
        raise UsageError(f"projection matrix must have {n + 1} columns")
    k = matrix.shape[0]
    if not 1 <= k <= n:
        raise DomainError(f"target dimension must lie in 1..{n}, got {k}")
    gram = matrix @ matrix.T
    if np.abs(gram - np.eye(k)).max() > 1e-9:
        raise UsageError("projection matrix rows must be orthonormal")
    return FiberMap(
        kind="linear_projection",
        source=SpaceDescriptor.sphere(n),
        target=SpaceDescriptor.ball(k),
        matrix=matrix,
        fiber_dim=n - k,
    )


def torus_projection(lengths, kept) -> FiberMap:
    """Coordinate projection of a flat torus onto the ``kept`` axes."""
    lengths = tuple(float(a) for a in np.atleast_1d(np.asarray(lengths, dtype=float)))
    kept = tuple(int(i) for i in kept)
    n = len(lengths)
    if len(kept) == 0 or len(set(kept)) != len(kept):
        raise UsageError("kept axes must be distinct and nonempty")
    if any(i < 0 or i >= n for i in kept):
        raise UsageError(f"kept axes must index into 0..{n - 1}")
    if len(kept) >= n:
        raise DomainError("projection must drop at least one axis")
    return FiberMap(
        kind="torus_projection",
        source=SpaceDescriptor.torus(lengths),
        target=SpaceDescriptor.torus([lengths[i] for i in kept]),
        lengths=lengths,
        kept=kept,
        fiber_dim=n - len(kept),
    )


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _require_unit(p: np.ndarray, what: str) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if abs(np.linalg.norm(p) - 1.0) > _ON_SPHERE_TOL:
        raise DomainError(f"{what} must be a unit vector")
    return p


def _check_source(fmap: FiberMap, p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (fmap.source.ambient_dim,):
        raise DomainError(
            f"point has shape {p.shape}, source needs ({fmap.source.ambient_dim},)"
        )
    if fmap.source.kind in ("sphere", "real_projective"):
        p = _require_unit(p, "source point")
    return p


def evaluate(fmap: FiberMap, p) -> np.ndarray:
    """Image of source point ``p``; target points are 1-d arrays."""
    p = _check_source(fmap, p)
    kind = fmap.kind
    if kind in _HOPF_KINDS:
        d = (fmap.source.dim + 1) // 2
        a, b = p[:d], p[d:]
        s = a @ a - b @ b
        c = 2.0 * algebra_multiply(a, algebra_conjugate(b))
        return np.concatenate([[s], c])
    if kind == "rp_quotient_of":
        return evaluate(fmap.base, p)
    if kind in ("abs_z1_on_S3", "abs_z1_on_RP3"):
        return np.array([math.hypot(p[0], p[1])])
    if kind == "x1_squared_on_RP2":
        return np.array([p[0] ** 2])
    if kind == "linear_projection":
        return fmap.matrix @ p
    if kind == "torus_projection":
        lengths = np.asarray(fmap.lengths)
        kept = list(fmap.kept)
        return np.mod(p[kept], lengths[kept])
    raise UsageError(f"unknown map kind {fmap.kind!r}")


# ---------------------------------------------------------------------------
# fibers
# ---------------------------------------------------------------------------

class EmptyFiber:
    """Sentinel for fibers over points outside the image."""

    def __repr__(self) -> str:
        return "EmptyFiber()"


EMPTY_FIBER = EmptyFiber()


def _bundle_fiber_frame(total_dim: int, y: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the great-sphere fiber over ``y``.

    Over y = (s, c) the fiber is the unit sphere of the graph of left
    multiplication: pairs (x, m x) with m = conj(c)/(1+s), or the
    mirrored chart (m x, x) with m = c/(1-s) when s < 0.  Rows come out
    orthonormal because left multiplication scales the inner product by
    |m|^2 in a normed algebra.
    """
    d = (total_dim + 1) // 2
    y = _require_unit(np.asarray(y, dtype=float), "target point")
    if y.shape != (d + 1,):
        raise DomainError(f"target point needs shape ({d + 1},)")
    s, c = y[0], y[1:]
    basis = np.eye(d)
    if s >= 0.0:
        m = algebra_conjugate(c) / (1.0 + s)
        pairs = np.concatenate([basis, algebra_multiply(m, basis)], axis=1)
    else:
        m = c / (1.0 - s)
        pairs = np.concatenate([algebra_multiply(m, basis), basis], axis=1)
    return pairs / math.sqrt(1.0 + float(m @ m))


def _point_mesh(point: np.ndarray) -> SubmanifoldMesh:
    return SubmanifoldMesh(np.asarray([point], dtype=float), np.array([[0]]))


def _subsphere_level(resolution: int, fiber_dim: int) -> int:
    # 4 * 2^level segments per great circle of the refined cross-polytope.
    level = max(0, math.ceil(math.log2(max(resolution, 4) / 4.0)))
    cap = 6 if fiber_dim <= 2 else 4
    if level > cap:
        raise UsageError(
            f"resolution {resolution} needs subdivision level {level} > {cap}"
        )
    return level


def _interval_value(fmap: FiberMap, y) -> float:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.shape != (1,):
        raise DomainError("target point for an interval map is a single value")
    t = float(y[0])
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"target value {t} outside [0, 1]")
    return t


def _flat_fiber_mesh(fmap: FiberMap, y: np.ndarray, resolution: int) -> SubmanifoldMesh:
    """Sub-torus over the dropped axes, kept coordinates pinned to y."""
    lengths = np.asarray(fmap.lengths)
    y = np.mod(np.asarray(y, dtype=float), lengths[list(fmap.kept)])
    if y.shape != (len(fmap.kept),):
        raise DomainError("target point dimension mismatch")
    dropped = [i for i in range(len(lengths)) if i not in fmap.kept]
    n = len(lengths)
    # Closed grids duplicate the seam vertex at coordinate = length, so the
    # mesh tiles the fundamental domain with no chord across it.
    if len(dropped) == 1:
        axis = dropped[0]
        t = np.linspace(0.0, lengths[axis], resolution + 1)
        verts = np.zeros((resolution + 1, n))
        verts[:, axis] = t
        for col, i in enumerate(fmap.kept):
            verts[:, i] = y[col]
        idx = np.arange(resolution)
        return SubmanifoldMesh(verts, np.stack([idx, idx + 1], axis=1))
    if len(dropped) == 2:
        a0, a1 = dropped
        u = np.linspace(0.0, lengths[a0], resolution + 1)
        w = np.linspace(0.0, lengths[a1], resolution + 1)
        U, W = np.meshgrid(u, w, indexing="ij")
        verts = np.zeros(((resolution + 1) * (resolution + 1), n))
        verts[:, a0] = U.ravel()
        verts[:, a1] = W.ravel()
        for col, i in enumerate(fmap.kept):
            verts[:, i] = y[col]

        def vid(i: int, j: int) -> int:
            return i * (resolution + 1) + j

        simps = []
        for i in range(resolution):
            for j in range(resolution):
                simps.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
                simps.append([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
        return SubmanifoldMesh(verts, np.array(simps, dtype=np.int64))
    raise UsageError("torus fiber meshes support at most two dropped axes")


def fiber_mesh(fmap: FiberMap, y, resolution: int = 64):
    """Simplicial mesh of the fiber over ``y``; EMPTY_FIBER when it is empty.

    ``resolution`` is the per-circle vertex count for circle and torus
    fibers, and the approximate per-great-circle segment count for
    sphere fibers of dimension 2 or 3.
    """
    if resolution < 3:
        raise UsageError("resolution must be at least 3")
    kind = fmap.kind
    if kind in _HOPF_KINDS:
        frame = _bundle_fiber_frame(fmap.source.dim, y)
        if fmap.fiber_dim == 1:
            return circle_mesh(frame, segments=resolution)
        if fmap.fiber_dim == 3:
            return subsphere_mesh(frame, _subsphere_level(resolution, 3))
        raise UsageError("fiber meshes are available for fibers of dim <= 3")
    if kind == "rp_quotient_of":
        # Representatives upstairs; projective distances fold antipodes.
        return fiber_mesh(fmap.base, y, resolution)
    if kind in ("abs_z1_on_S3", "abs_z1_on_RP3"):
        t = _interval_value(fmap, y)
        if t == 0.0:
            return circle_mesh(np.eye(4)[2:], segments=resolution)
        if t == 1.0:
            return circle_mesh(np.eye(4)[:2], segments=resolution)
        return clifford_torus_mesh(t, math.sqrt(1.0 - t * t), res=resolution)
    if kind == "x1_squared_on_RP2":
        t = _interval_value(fmap, y)
        if t == 1.0:
            return _point_mesh([1.0, 0.0, 0.0])
        return circle_mesh(
            np.eye(3)[1:],
            segments=resolution,
            radius=math.sqrt(1.0 - t),
            center=[math.sqrt(t), 0.0, 0.0],
        )
    if kind == "linear_projection":
        y = np.asarray(y, dtype=float)
        if y.shape != (fmap.target.dim,):
            raise DomainError("target point dimension mismatch")
        rsq = 1.0 - float(y @ y)
        center = fmap.matrix.T @ y
        if rsq < -1e-12:
            return EMPTY_FIBER
        if rsq <= 1e-12:
            return _point_mesh(center)
        u, sv, _ = np.linalg.svd(fmap.matrix.T, full_matrices=True)
        null_frame = u[:, fmap.target.dim:].T
        radius = math.sqrt(rsq)
        if fmap.fiber_dim == 1:
            return circle_mesh(null_frame, segments=resolution, radius=radius,
                               center=center)
        if fmap.fiber_dim in (2, 3):
            unit = subsphere_mesh(null_frame, _subsphere_level(resolution, fmap.fiber_dim))
            return SubmanifoldMesh(unit.vertices * radius + center, unit.simplices)
        raise UsageError("fiber meshes are available for fibers of dim <= 3")
    if kind == "torus_projection":
        return _flat_fiber_mesh(fmap, y, resolution)
    raise UsageError(f"unknown map kind {fmap.kind!r}")


def fiber_volume(fmap: FiberMap, y) -> float:
    """Closed-form volume of the fiber over ``y`` (0 for empty fibers)."""
    kind = fmap.kind
    if kind in _HOPF_KINDS:
        _bundle_fiber_frame(fmap.source.dim, y)
        return sphere_volume(fmap.fiber_dim)
    if kind == "rp_quotient_of":
        return 0.5 * fiber_volume(fmap.base, y)
    if kind == "abs_z1_on_S3":
        t = _interval_value(fmap, y)
        if t in (0.0, 1.0):
            return 2.0 * math.pi
        return 4.0 * math.pi**2 * t * math.sqrt(1.0 - t * t)
    if kind == "abs_z1_on_RP3":
        # Antipodes act freely on every fiber, halving its volume.
        t = _interval_value(fmap, y)
        if t in (0.0, 1.0):
            return math.pi
        return 2.0 * math.pi**2 * t * math.sqrt(1.0 - t * t)
    if kind == "x1_squared_on_RP2":
        t = _interval_value(fmap, y)
        if t == 0.0:
            # The zero set is a single great circle folded onto itself.
            return math.pi
        if t == 1.0:
            return 0.0
        return 2.0 * math.pi * math.sqrt(1.0 - t)
    if kind == "linear_projection":
        y = np.asarray(y, dtype=float)
        if y.shape != (fmap.target.dim,):
            raise DomainError("target point dimension mismatch")
        rsq = 1.0 - float(y @ y)
        if rsq <= 0.0:
            return 0.0
        return sphere_volume(fmap.fiber_dim) * rsq ** (fmap.fiber_dim / 2.0)
    if kind == "torus_projection":
        dropped = [i for i in range(len(fmap.lengths)) if i not in fmap.kept]
        return float(np.prod([fmap.lengths[i] for i in dropped]))
    raise UsageError(f"unknown map kind {fmap.kind!r}")


@dataclass(frozen=True)
class WaistProfile:
    """Fiber volumes over a target grid, plus the grid argmax."""

    points: list
    volumes: np.ndarray
    argmax: int

    @property
    def best_point(self):
        return self.points[self.argmax]

    @property
    def best_volume(self) -> float:
        return float(self.volumes[self.argmax])


def waist_profile(fmap: FiberMap, y_grid) -> WaistProfile:
    points = list(y_grid)
    if not points:
        raise UsageError("target grid must be nonempty")
    volumes = np.array([fiber_volume(fmap, y) for y in points])
    return WaistProfile(points, volumes, int(np.argmax(volumes)))


# ---------------------------------------------------------------------------
# bound certificates
# ---------------------------------------------------------------------------

def _default_grid(fmap: FiberMap) -> list:
    target = fmap.target
    if target.kind == "sphere":
        rng = np.random.default_rng(0x0F1B)
        pts = rng.normal(size=(16, target.ambient_dim))
        return list(pts / np.linalg.norm(pts, axis=1, keepdims=True))
    if target.kind == "cube":
        return [np.array([t]) for t in np.linspace(0.0, 1.0, 201)]
    if target.kind == "ball":
        grid = []
        for r in np.linspace(0.0, 0.999, 51):
            y = np.zeros(target.dim)
            y[0] = r
            grid.append(y)
        return grid
    if target.kind == "torus":
        lengths = np.asarray(target.params)
        return [lengths * f for f in (0.0, 0.25, 0.5, 0.75)]
    raise UsageError(f"no default grid for target kind {target.kind!r}")


def _bound_for(fmap: FiberMap, bound_ref: str) -> float:
    if bound_ref == "equatorial-fiber-volume":
        if fmap.source.kind != "sphere":
            raise UsageError("equatorial bound applies to sphere sources")
        return sphere_volume(fmap.fiber_dim)
    if bound_ref == "projective-fiber-volume":
        if fmap.source.kind != "real_projective":
            raise UsageError("projective bound applies to projective sources")
        return 0.5 * sphere_volume(fmap.fiber_dim)
    if bound_ref == "projective-torus-area":
        if not (fmap.source.kind == "real_projective" and fmap.source.dim == 3
                and fmap.target.dim == 1):
            raise UsageError(
                "torus-area bound applies to interval maps on 3-dim projective space"
            )
        return math.pi**2
    if bound_ref == "torus-fiber-product":
        if fmap.kind != "torus_projection":
            raise UsageError("product bound applies to torus projections")
        dropped = [i for i in range(len(fmap.lengths)) if i not in fmap.kept]
        return float(np.prod([fmap.lengths[i] for i in dropped]))
    raise UsageError(f"unknown bound_ref {bound_ref!r}")


def verify_waist_bound(
    fmap: FiberMap,
    bound_ref: str,
    tolerance: float = 1e-3,
    y_grid=None,
) -> Certificate:
    """Certificate that the sup of fiber volumes clears a registered bound."""
    bound = _bound_for(fmap, bound_ref)
    grid = list(y_grid) if y_grid is not None else _default_grid(fmap)
    profile = waist_profile(fmap, grid)
    measured = profile.best_volume
    verdict = "pass" if measured >= bound * (1.0 - tolerance) else "fail"
    best = profile.best_point
    return Certificate(
        bound_ref=bound_ref,
        bound=float(bound),
        measured=measured,
        direction="lower",
        verdict=verdict,
        tolerance=tolerance,
        details={
            "map": fmap.kind,
            "measured_at": np.asarray(best, dtype=float).tolist(),
            "grid_size": len(grid),
        },
    )


# ---------------------------------------------------------------------------
# exploratory search on the 2-sphere
# ---------------------------------------------------------------------------

def even_sphere_exploration(
    trials: int = 8,
    resolution: int = 128,
    levels: int = 40,
    seed: int = 0,
) -> dict:
    """Search perturbed height functions on the 2-sphere for small waists.

    Maps f(x) = x3 + alpha (x1^2 - x2^2) + 2 beta x1 x2 are scanned on a
    latitude/longitude grid; level-set lengths come from marching-squares
    contours.  The reported best sup is a low-resolution observation, not
    evidence in either direction, and is labeled accordingly.
    """
    try:
        from skimage import measure
    except ImportError as exc:
        raise UsageError("exploration requires scikit-image") from exc
    if trials < 1 or resolution < 16 or levels < 4:
        raise UsageError("need trials >= 1, resolution >= 16, levels >= 4")
    rng = np.random.default_rng(seed)
    theta = np.linspace(0.0, np.pi, resolution + 1)
    phi = np.linspace(0.0, 2.0 * np.pi, 2 * resolution + 1)  # wrapped column
    T, P = np.meshgrid(theta, phi, indexing="ij")
    xyz = np.stack(
        [np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1
    )

    def contour_points(grid_pts):
        # grid index -> angles -> ambient coordinates
        ti = np.interp(grid_pts[:, 0], np.arange(len(theta)), theta)
        pi_ = np.interp(grid_pts[:, 1], np.arange(len(phi)), phi)
        return np.stack(
            [np.sin(ti) * np.cos(pi_), np.sin(ti) * np.sin(pi_), np.cos(ti)],
            axis=1,
        )

    params = [(0.0, 0.0)] + [tuple(rng.uniform(-0.5, 0.5, size=2)) for _ in range(trials - 1)]
    best = None
    for alpha, beta in params:
        values = (
            xyz[..., 2]
            + alpha * (xyz[..., 0] ** 2 - xyz[..., 1] ** 2)
            + 2.0 * beta * xyz[..., 0] * xyz[..., 1]
        )
        lo, hi = values.min(), values.max()
        margin = 0.02 * (hi - lo)
        sup_len = 0.0
        for level in np.linspace(lo + margin, hi - margin, levels):
            total = 0.0
            for contour in measure.find_contours(values, level):
                pts = contour_points(contour)
                total += float(np.linalg.norm(np.diff(pts, axis=0), axis=1).sum())
            sup_len = max(sup_len, total)
        if best is None or sup_len < best[0]:
            best = (sup_len, alpha, beta)
    return {
        "best_sup": best[0],
        "best_params": {"alpha": best[1], "beta": best[2]},
        "maps_tried": len(params),
        "levels": levels,
        "resolution": resolution,
        "reference_bound": 2.0 * math.pi,
        "conclusive": False,
        "note": "low-resolution scan over a restricted family; observational only",
    }
