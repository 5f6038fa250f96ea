"""Grid bending of parallel-flat families and the cycle volumes it produces.

The unit cube is subdivided into a cubical grid.  Space is tiled by joins
K = phi * eta, where phi is an (n-k)-face of the grid and eta is a facet
of the boundary of the dual k-face transversal to phi; every point q has
join coordinates q = (1-t)x + ty with x on phi and y on eta.  The bending
map collapses each join segment onto its primal end x, except for a thin
collar near the dual end, which is stretched back over the whole segment
(on the collar the map is an exact 1/epsilon homothety about y, so it is
continuous and fixes the primal skeleton).

Pushing a family of parallel (n-k)-flats through this map yields cycles
whose volume splits into a skeleton part (full primal faces, each counted
once) and a collar part (a curved remainder, integrated numerically).
``cup_bound_check`` compares measured totals against the grid-count upper
bound and the subcube partition lower bound; ``algebraic_family_volume``
measures the competing construction in the plane, zero sets of random
bivariate polynomials, by Cauchy-Crofton line sampling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Any

import numpy as np
from scipy import ndimage

from .errors import DomainError, GeneralPositionError, SamplingError, UsageError
from .reports import Certificate, EstimateReport
from .rng import chunk_sizes, split_rngs, spawn_rng, worker_count

__all__ = [
    "Grid",
    "TileAssignment",
    "FlatFamily",
    "DeformationReport",
    "CupBoundReport",
    "tile_decompose",
    "skeleton_collapse",
    "perpendicular_family",
    "random_flat_family",
    "deform_family",
    "cup_bound_check",
    "zero_set_length",
    "algebraic_family_volume",
]

# Default samples per unit length along each fiber axis.
_LINE_RESOLUTION = 2048
_PLANE_RESOLUTION = 64

# A fiber may approach a dual face no closer than this (sup distance).
_CLEARANCE_FLOOR = 1.0e-9

_SUPPORTED_PAIRS = ((2, 1), (3, 1), (3, 2))


@dataclass(frozen=True)
class Grid:
    """Cubical grid on the unit cube with ``subdivisions`` cells per axis.

    The dual grid is the same lattice shifted by half a cell along every
    axis; its vertices sit at the cell centers.
    """

    dim: int
    subdivisions: int

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError("grid dimension must be at least 1")
        if self.subdivisions < 1:
            raise DomainError("subdivisions must be at least 1")

    @property
    def spacing(self) -> float:
        return 1.0 / self.subdivisions

    @property
    def cube_count(self) -> int:
        return self.subdivisions**self.dim

    def face_count(self, face_dim: int) -> int:
        """Number of ``face_dim``-faces of the grid inside the unit cube."""
        n, sub = self.dim, self.subdivisions
        if not 0 <= face_dim <= n:
            raise DomainError("face dimension outside [0, dim]")
        return math.comb(n, face_dim) * sub**face_dim * (sub + 1) ** (n - face_dim)

    def skeleton_volume(self, face_dim: int) -> float:
        """Total ``face_dim``-volume of the ``face_dim``-skeleton."""
        return self.face_count(face_dim) * self.spacing**face_dim


@dataclass(frozen=True)
class TileAssignment:
    """Join coordinates of one point: the tile that contains it plus x, y, t.

    The primal face is spanned by ``free_axes`` (cell index per free axis in
    ``cells``) and pinned to the lattice planes in ``fixed_planes``; the dual
    facet is selected by ``facet_axis`` and ``facet_sign``.  ``facet_sign`` is
    0 exactly when t = 0 and the facet is ambiguous (the point sits on the
    primal face, where all choices agree).
    """

    free_axes: tuple[int, ...]
    cells: tuple[int, ...]
    fixed_planes: tuple[tuple[int, int], ...]
    facet_axis: int
    facet_sign: int
    x: np.ndarray
    y: np.ndarray
    t: float


@dataclass(frozen=True)
class _JoinCoords:
    """Vectorized join coordinates in lattice units (cells are unit cubes)."""

    lattice: np.ndarray
    nearest: np.ndarray
    order: np.ndarray
    cells: np.ndarray
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray


def _check_codim(n: int, k: int) -> None:
    if not 1 <= k <= n - 1:
        raise DomainError(f"k must lie in [1, {n - 1}] for dimension {n}")


def _join_coordinates(points: np.ndarray, subdivisions: int, k: int) -> _JoinCoords:
    """Join coordinates of ``points`` (shape (m, n), unit-cube units).

    Sorting the axes by distance to the nearest lattice plane identifies the
    tile: the n-k best-centered axes span the primal face, the next one sets
    the join parameter t, the remaining k-1 ride along the dual facet.  Ties
    (points on a tile boundary) are broken by axis index; every choice yields
    the same reconstruction, so the perturbation rule only fixes labels.
    """
    u = np.asarray(points, dtype=float) * subdivisions
    m, n = u.shape
    nearest = np.round(u)
    e = np.abs(u - nearest)
    order = np.argsort(-e, axis=1, kind="stable")
    free = order[:, : n - k]
    facet = order[:, n - k : n - k + 1]
    trail = order[:, n - k + 1 :]

    t = 2.0 * np.take_along_axis(e, facet, axis=1)[:, 0]
    u_free = np.take_along_axis(u, free, axis=1)
    # points exactly on the far wall of the last cell belong to that cell
    cells = np.clip(np.floor(u_free), 0.0, subdivisions - 1.0)
    centers = cells + 0.5

    one_minus = 1.0 - t
    safe = np.where(one_minus > 0.0, one_minus, 1.0)
    x = nearest.copy()
    x_free = (u_free - t[:, None] * centers) / safe[:, None]
    x_free = np.where(one_minus[:, None] > 0.0, x_free, centers)
    np.put_along_axis(x, free, x_free, axis=1)

    y = nearest.copy()
    np.put_along_axis(y, free, centers, axis=1)
    u_facet = np.take_along_axis(u, facet, axis=1)
    n_facet = np.take_along_axis(nearest, facet, axis=1)
    np.put_along_axis(y, facet, n_facet + np.where(u_facet >= n_facet, 0.5, -0.5), axis=1)
    if trail.size:
        u_trail = np.take_along_axis(u, trail, axis=1)
        n_trail = np.take_along_axis(nearest, trail, axis=1)
        tt = np.where(t > 0.0, t, 1.0)[:, None]
        y_trail = n_trail + np.where(t[:, None] > 0.0, (u_trail - n_trail) / tt, 0.0)
        np.put_along_axis(y, trail, y_trail, axis=1)
    return _JoinCoords(u, nearest, order, cells, t, x, y)


def tile_decompose(grid: Grid, k: int, point) -> TileAssignment:
    """Locate ``point`` in the join tiling and return its coordinates.

    The returned pieces satisfy q = (1-t) x + t y with x on the primal
    (n-k)-face and y on the selected facet of the dual face boundary.
    """
    _check_codim(grid.dim, k)
    pt = np.asarray(point, dtype=float)
    if pt.shape != (grid.dim,):
        raise UsageError(f"expected a point of dimension {grid.dim}")
    jc = _join_coordinates(pt[None, :], grid.subdivisions, k)
    order = jc.order[0]
    free = order[: grid.dim - k]
    pairs = sorted(zip(free.tolist(), jc.cells[0].astype(int).tolist()))
    fixed = sorted(int(a) for a in order[grid.dim - k :])
    facet_axis = int(order[grid.dim - k])
    lat = jc.lattice[0, facet_axis] - jc.nearest[0, facet_axis]
    facet_sign = 0 if lat == 0.0 else (1 if lat > 0.0 else -1)
    return TileAssignment(
        free_axes=tuple(a for a, _ in pairs),
        cells=tuple(c for _, c in pairs),
        fixed_planes=tuple((a, int(jc.nearest[0, a])) for a in fixed),
        facet_axis=facet_axis,
        facet_sign=facet_sign,
        x=jc.x[0] / grid.subdivisions,
        y=jc.y[0] / grid.subdivisions,
        t=float(jc.t[0]),
    )


def _collapse(points: np.ndarray, subdivisions: int, k: int, epsilon: float):
    """Bend ``points``; returns (images in unit-cube units, join parameters)."""
    jc = _join_coordinates(points, subdivisions, k)
    stretch = jc.t > 1.0 - epsilon
    images = np.where(stretch[:, None], jc.y + (jc.lattice - jc.y) / epsilon, jc.x)
    return images / subdivisions, jc.t


def skeleton_collapse(grid: Grid, k: int, epsilon: float, points) -> np.ndarray:
    """Apply the bending map to one point or a batch of points.

    Points with join parameter t <= 1 - epsilon collapse to their primal
    end; the residual collar is the epsilon-homothet of the tile about the
    dual facet and is stretched back over the full tile.  The map fixes the
    primal (n-k)-skeleton, and for k = 1 the whole cube boundary, pointwise;
    for k > 1 each boundary facet is mapped into itself.
    """
    _check_codim(grid.dim, k)
    if not 0.0 < epsilon < 1.0:
        raise DomainError("epsilon must lie in (0, 1)")
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    images, _ = _collapse(np.atleast_2d(pts), grid.subdivisions, k, epsilon)
    return images[0] if single else images


@dataclass(frozen=True)
class FlatFamily:
    """Parallel (n-k)-flats perpendicular to a common k-flat.

    ``base_frame`` (k, n) and ``fiber_frame`` (n-k, n) are orthonormal rows
    spanning mutually orthogonal directions; each row of ``anchors`` is a
    point of one fiber.  Fibers are understood clipped to the unit cube.
    """

    base_frame: np.ndarray
    fiber_frame: np.ndarray
    anchors: np.ndarray

    def __post_init__(self):
        base = np.ascontiguousarray(np.asarray(self.base_frame, dtype=float))
        fiber = np.ascontiguousarray(np.asarray(self.fiber_frame, dtype=float))
        anchors = np.ascontiguousarray(np.atleast_2d(np.asarray(self.anchors, dtype=float)))
        if base.ndim != 2 or fiber.ndim != 2 or base.shape[1] != fiber.shape[1]:
            raise UsageError("frames must be 2-d with a common ambient dimension")
        n = base.shape[1]
        if base.shape[0] + fiber.shape[0] != n:
            raise UsageError("base and fiber frames must span complementary dimensions")
        if anchors.shape[1] != n:
            raise UsageError("anchor dimension does not match the frames")
        stack = np.vstack([base, fiber])
        if not np.allclose(stack @ stack.T, np.eye(n), atol=1.0e-8):
            raise UsageError("frames must be orthonormal and mutually orthogonal")
        object.__setattr__(self, "base_frame", base)
        object.__setattr__(self, "fiber_frame", fiber)
        object.__setattr__(self, "anchors", anchors)

    @property
    def dim(self) -> int:
        return self.base_frame.shape[1]

    @property
    def base_dim(self) -> int:
        return self.base_frame.shape[0]

    @property
    def fiber_dim(self) -> int:
        return self.fiber_frame.shape[0]

    @property
    def count(self) -> int:
        return len(self.anchors)


def perpendicular_family(base_frame, anchors) -> FlatFamily:
    """Family of fibers orthogonal to the flat spanned by ``base_frame`` rows.

    The rows are orthonormalized; the fiber directions are computed as the
    orthogonal complement, so only the base orientation and the anchor
    points need to be supplied.
    """
    base = np.atleast_2d(np.asarray(base_frame, dtype=float))
    if base.ndim != 2 or not 1 <= base.shape[0] < base.shape[1]:
        raise UsageError("base frame must have shape (k, n) with 1 <= k < n")
    _, s, vt = np.linalg.svd(base, full_matrices=True)
    if s.min() <= 1.0e-12 * s.max():
        raise UsageError("base frame rows are linearly dependent")
    k = base.shape[0]
    return FlatFamily(vt[:k], vt[k:], anchors)


def _random_family(rng: np.random.Generator, n: int, k: int, count: int) -> FlatFamily:
    mat = rng.standard_normal((n, n))
    q, _ = np.linalg.qr(mat)
    return FlatFamily(q[:, :k].T.copy(), q[:, k:].T.copy(), rng.random((count, n)))


def random_flat_family(dim: int, k: int, count: int, seed: int = 0) -> FlatFamily:
    """Uniformly random orientation and anchors; slopes are continuous, so
    the general-position requirement holds almost surely."""
    _check_codim(dim, k)
    if count < 1:
        raise UsageError("count must be positive")
    return _random_family(spawn_rng(seed), dim, k, count)


# ---------------------------------------------------------------------------
# fiber traces: clipped samples of each fiber plus its join-parameter profile


def _clip_line_to_box(anchor, direction, lo, hi):
    """Parameter interval of a line inside an axis box, or None."""
    s0, s1 = -np.inf, np.inf
    for a, d, b0, b1 in zip(anchor, direction, lo, hi):
        if abs(d) < 1.0e-15:
            if not b0 <= a <= b1:
                return None
            continue
        c0, c1 = (b0 - a) / d, (b1 - a) / d
        s0 = max(s0, min(c0, c1))
        s1 = min(s1, max(c0, c1))
    if not np.isfinite(s0) or s1 - s0 <= 1.0e-12:
        return None
    return s0, s1


def _box_corners(lo, hi):
    return np.array(list(product(*zip(lo, hi))), dtype=float)


_EDGE_PAIRS3 = [
    (i, j)
    for i in range(8)
    for j in range(i + 1, 8)
    if bin(i ^ j).count("1") == 1
]


def _clip_plane_to_box(anchor, frame, lo, hi):
    """Vertices (in frame parameters, counterclockwise) of a plane section
    of an axis box in R^3, or None when the section is empty."""
    normal = np.cross(frame[0], frame[1])
    corners = _box_corners(lo, hi)
    g = (corners - anchor) @ normal
    pts = [corners[i] for i in range(8) if g[i] == 0.0]
    for i, j in _EDGE_PAIRS3:
        if (g[i] < 0.0) != (g[j] < 0.0):
            w = g[i] / (g[i] - g[j])
            pts.append(corners[i] + w * (corners[j] - corners[i]))
    if len(pts) < 3:
        return None
    params = (np.asarray(pts) - anchor) @ frame.T
    params = np.unique(np.round(params / 1.0e-10) * 1.0e-10, axis=0)
    if len(params) < 3:
        return None
    center = params.mean(axis=0)
    angles = np.arctan2(params[:, 1] - center[1], params[:, 0] - center[0])
    return params[np.argsort(angles, kind="stable")]


def _polygon_area(params: np.ndarray) -> float:
    x, y = params[:, 0], params[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


class _LineTrace:
    """Samples of a clipped 1-d fiber and its join-parameter profile."""

    def __init__(self, index, anchor, direction, s0, s1, resolution, subdivisions, k):
        self.index = index
        self.anchor = np.asarray(anchor, dtype=float)
        self.direction = np.asarray(direction, dtype=float)
        self.subdivisions = subdivisions
        self.k = k
        count = max(32, int(math.ceil((s1 - s0) * resolution)) + 1)
        self.s = np.linspace(s0, s1, count)
        self.t = self.t_at(self.s)

    def points_at(self, s):
        return self.anchor + np.asarray(s)[:, None] * self.direction

    def t_at(self, s):
        return _join_coordinates(self.points_at(s), self.subdivisions, self.k).t

    def peaks(self, count):
        """Largest ``count`` local maxima of t, refined, descending.

        Each entry is (value, parameter)."""
        t, s = self.t, self.s
        inner = np.flatnonzero((t[1:-1] >= t[:-2]) & (t[1:-1] > t[2:])) + 1
        cand = list(inner)
        if len(t) >= 2 and t[0] > t[1]:
            cand.append(0)
        if len(t) >= 2 and t[-1] > t[-2]:
            cand.append(len(t) - 1)
        cand.sort(key=lambda i: -t[i])
        out = []
        for i in cand[: count + 4]:
            lo = s[max(i - 1, 0)]
            hi = s[min(i + 1, len(s) - 1)]
            best_v, best_s = t[i], s[i]
            # five 65-point rounds pin the peak parameter to ~1e-11, well
            # inside the clearance floor used by the general-position check
            for _ in range(5):
                fan = np.linspace(lo, hi, 65)
                tv = self.t_at(fan)
                j = int(np.argmax(tv))
                if tv[j] > best_v:
                    best_v, best_s = float(tv[j]), float(fan[j])
                lo, hi = fan[max(j - 1, 0)], fan[min(j + 1, 64)]
            out.append((best_v, best_s))
        out.sort(key=lambda p: -p[0])
        return out[:count]

    def component_count(self, threshold):
        mask = self.t > threshold
        return int(np.count_nonzero(np.diff(mask.astype(np.int8)) == 1) + mask[0])

    def collar_volume(self, epsilon):
        """Length of the bent image of the collar crossings."""
        threshold = 1.0 - epsilon
        mask = self.t > threshold
        if not mask.any():
            return 0.0
        edges = np.flatnonzero(np.diff(mask.astype(np.int8)))
        starts = [0] if mask[0] else []
        starts += list(edges[np.diff(mask.astype(np.int8))[edges] == 1] + 1)
        stops = list(edges[np.diff(mask.astype(np.int8))[edges] == -1])
        if mask[-1]:
            stops.append(len(mask) - 1)
        total = 0.0
        for i0, i1 in zip(starts, stops):
            lo = self.s[max(i0 - 1, 0)]
            hi = self.s[min(i1 + 1, len(self.s) - 1)]
            fine = np.linspace(lo, hi, 1025)
            images, tv = _collapse(
                self.points_at(fine), self.subdivisions, self.k, epsilon
            )
            seg = np.linalg.norm(np.diff(images, axis=0), axis=1)
            inside = np.maximum(tv[1:], tv[:-1]) > threshold
            total += float(seg[inside].sum())
        return total

    def face_rows(self, epsilon):
        keep = self.t <= 1.0 - epsilon
        return _face_key_rows(
            self.points_at(self.s[keep]), self.subdivisions, self.k
        )


class _PlaneTrace:
    """Grid samples of a clipped 2-d fiber (in R^3) with its t field."""

    def __init__(self, index, anchor, frame, polygon, resolution, subdivisions, k):
        self.index = index
        self.anchor = np.asarray(anchor, dtype=float)
        self.frame = np.asarray(frame, dtype=float)
        self.subdivisions = subdivisions
        self.k = k
        lo = polygon.min(axis=0)
        hi = polygon.max(axis=0)
        self.step = 1.0 / resolution
        na = max(8, int(math.ceil((hi[0] - lo[0]) * resolution)) + 1)
        nb = max(8, int(math.ceil((hi[1] - lo[1]) * resolution)) + 1)
        self.a = np.linspace(lo[0], hi[0], na)
        self.b = np.linspace(lo[1], hi[1], nb)
        aa, bb = np.meshgrid(self.a, self.b, indexing="ij")
        self.params = np.stack([aa, bb], axis=-1)
        pts = self.points_at(self.params.reshape(-1, 2)).reshape(na, nb, 3)
        self.inside = ((pts >= 0.0) & (pts <= 1.0)).all(axis=2)
        t = _join_coordinates(
            pts.reshape(-1, 3), subdivisions, k
        ).t.reshape(na, nb)
        self.t = np.where(self.inside, t, -1.0)

    def points_at(self, params):
        return self.anchor + np.asarray(params) @ self.frame

    def t_at(self, params):
        return _join_coordinates(self.points_at(params), self.subdivisions, self.k).t

    def peaks(self, count):
        footprint = ndimage.maximum_filter(self.t, size=3, mode="constant", cval=-2.0)
        mask = (self.t == footprint) & self.inside
        ia, ib = np.nonzero(mask)
        vals = self.t[ia, ib]
        top = np.argsort(-vals, kind="stable")[: count + 4]
        out = []
        for pick in top:
            pa, pb = self.a[ia[pick]], self.b[ib[pick]]
            half = self.step
            best_v = float(vals[pick])
            best_p = (pa, pb)
            for _ in range(5):
                ga = np.linspace(best_p[0] - half, best_p[0] + half, 25)
                gb = np.linspace(best_p[1] - half, best_p[1] + half, 25)
                pg = np.stack(np.meshgrid(ga, gb, indexing="ij"), axis=-1).reshape(-1, 2)
                tv = self.t_at(pg)
                j = int(np.argmax(tv))
                if tv[j] > best_v:
                    best_v = float(tv[j])
                    best_p = (float(pg[j, 0]), float(pg[j, 1]))
                half /= 8.0
            out.append((best_v, best_p))
        out.sort(key=lambda p: -p[0])
        return out[:count]

    def component_count(self, threshold):
        labels, n_comp = ndimage.label(self.t > threshold)
        return int(n_comp)

    def collar_volume(self, epsilon):
        """Area of the bent image of the collar crossings.

        Grid cells touching the collar are triangulated and refined until
        the sub-triangle edge resolves the collar scale, then pushed through
        the map; the image areas of sub-triangles with a collar-majority of
        vertices are summed."""
        threshold = 1.0 - epsilon
        collar = self.t > threshold
        if not collar.any():
            return 0.0
        near = ndimage.binary_dilation(collar, iterations=1)
        quad = near[:-1, :-1] | near[1:, :-1] | near[:-1, 1:] | near[1:, 1:]
        quad &= (
            self.inside[:-1, :-1]
            & self.inside[1:, :-1]
            & self.inside[:-1, 1:]
            & self.inside[1:, 1:]
        )
        ia, ib = np.nonzero(quad)
        if len(ia) == 0:
            return 0.0
        p00 = self.params[ia, ib]
        p10 = self.params[ia + 1, ib]
        p01 = self.params[ia, ib + 1]
        p11 = self.params[ia + 1, ib + 1]
        tris = np.concatenate(
            [
                np.stack([p00, p10, p11], axis=1),
                np.stack([p00, p11, p01], axis=1),
            ]
        )
        collar_scale = epsilon * 0.5 / self.subdivisions
        depth = min(5, max(2, int(math.ceil(math.log2(self.step / collar_scale))) + 3))
        for _ in range(depth):
            m01 = 0.5 * (tris[:, 0] + tris[:, 1])
            m12 = 0.5 * (tris[:, 1] + tris[:, 2])
            m20 = 0.5 * (tris[:, 2] + tris[:, 0])
            tris = np.concatenate(
                [
                    np.stack([tris[:, 0], m01, m20], axis=1),
                    np.stack([m01, tris[:, 1], m12], axis=1),
                    np.stack([m20, m12, tris[:, 2]], axis=1),
                    np.stack([m01, m12, m20], axis=1),
                ]
            )
        flat = tris.reshape(-1, 2)
        pts = self.points_at(flat)
        images, tv = _collapse(pts, self.subdivisions, self.k, epsilon)
        tv = tv.reshape(-1, 3)
        images = images.reshape(-1, 3, 3)
        keep = (tv > threshold).sum(axis=1) >= 2
        if not keep.any():
            return 0.0
        tri = images[keep]
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return float(0.5 * np.linalg.norm(cross, axis=1).sum())

    def face_rows(self, epsilon):
        keep = self.inside & (self.t <= 1.0 - epsilon) & (self.t >= 0.0)
        pts = self.points_at(self.params[keep])
        return _face_key_rows(pts, self.subdivisions, self.k)


def _face_key_rows(points, subdivisions, k):
    """Integer keys of the primal faces the collapsed points land on.

    A row is (axis role vector, per-axis index): the role flags the free
    axes; free indices are cell numbers, fixed ones lattice plane numbers."""
    jc = _join_coordinates(points, subdivisions, k)
    n = jc.lattice.shape[1]
    free = jc.order[:, : n - k]
    role = np.zeros(jc.lattice.shape, dtype=np.int64)
    np.put_along_axis(role, free, 1, axis=1)
    idx = jc.nearest.astype(np.int64)
    np.put_along_axis(idx, free, jc.cells.astype(np.int64), axis=1)
    return np.concatenate([role, idx], axis=1)


def _trace_fibers(family: FlatFamily, grid: Grid, resolution: int) -> tuple[list, int]:
    k = family.base_dim
    traces: list = []
    skipped = 0
    lo = np.zeros(family.dim)
    hi = np.ones(family.dim)
    for i, anchor in enumerate(family.anchors):
        if family.fiber_dim == 1:
            span = _clip_line_to_box(anchor, family.fiber_frame[0], lo, hi)
            if span is None:
                skipped += 1
                continue
            traces.append(
                _LineTrace(
                    i,
                    anchor,
                    family.fiber_frame[0],
                    *span,
                    resolution,
                    grid.subdivisions,
                    k,
                )
            )
        else:
            polygon = _clip_plane_to_box(anchor, family.fiber_frame, lo, hi)
            if polygon is None:
                skipped += 1
                continue
            traces.append(
                _PlaneTrace(
                    i, anchor, family.fiber_frame, polygon, resolution, grid.subdivisions, k
                )
            )
    return traces, skipped


def _general_position_check(family: FlatFamily, grid: Grid) -> None:
    """Exact fiber clearances from the dual (k-1)-faces near the cube.

    For k = 1 the dual faces are the cell centers and the clearance is the
    point-to-flat distance; for k = 2 in R^3 they are the dual lattice lines
    and the clearance is the line-to-line distance.  Approaches whose feet
    lie far outside the cube are ignored (fibers are clipped there anyway).
    """
    k = family.base_dim
    spacing = grid.spacing
    frame = family.fiber_frame
    if k == 1:
        idx = np.indices((grid.subdivisions,) * grid.dim).reshape(grid.dim, -1).T
        verts = (idx + 0.5) * spacing
        for i, anchor in enumerate(family.anchors):
            rel = verts - anchor
            feet = anchor + (rel @ frame.T) @ frame
            dist = np.linalg.norm(verts - feet, axis=1)
            near = ((feet > -spacing) & (feet < 1.0 + spacing)).all(axis=1)
            dist = np.where(near, dist, np.inf)
            j = int(np.argmin(dist))
            if dist[j] < _CLEARANCE_FLOOR:
                raise GeneralPositionError(
                    f"fiber {i} passes within {dist[j]:.3g} of the dual vertex "
                    f"at {verts[j].tolist()}",
                    offender=(i, tuple(verts[j])),
                )
        return
    if family.fiber_dim != 1 or grid.dim != 3:
        return
    direction = frame[0]
    sub = grid.subdivisions
    for axis in range(3):
        others = [b for b in range(3) if b != axis]
        axis_dir = np.zeros(3)
        axis_dir[axis] = 1.0
        cos = float(direction @ axis_dir)
        denom = cos * cos - 1.0
        for ia in range(sub):
            for ib in range(sub):
                base = np.zeros(3)
                base[others[0]] = (ia + 0.5) * spacing
                base[others[1]] = (ib + 0.5) * spacing
                rel = base - family.anchors
                if abs(denom) < 1.0e-14:
                    # fiber parallel to the dual line
                    drop = rel - (rel @ direction)[:, None] * direction
                    dist = np.linalg.norm(drop, axis=1)
                    feet_u = rel[:, axis]
                else:
                    wv = rel @ direction
                    wu = rel[:, axis]
                    s = (wv - cos * wu) / (-denom)
                    feet_u = (cos * wv - wu) / (-denom)
                    p1 = family.anchors + s[:, None] * direction
                    p2 = base + feet_u[:, None] * axis_dir
                    dist = np.linalg.norm(p1 - p2, axis=1)
                near = (feet_u > -spacing) & (feet_u < 1.0 + spacing)
                dist = np.where(near, dist, np.inf)
                j = int(np.argmin(dist))
                if dist[j] < _CLEARANCE_FLOOR:
                    raise GeneralPositionError(
                        f"fiber {j} passes within {dist[j]:.3g} of the dual "
                        f"line through {base.tolist()} along axis {axis}",
                        offender=(j, tuple(base)),
                    )


def _select_collar_width(traces, k, cap=0.25):
    """Half the worst clearance beyond the k nearest dual-face approaches.

    Each fiber may cross at most k collars, so the collar half-width stays
    below half the gap (in the join-parameter gauge) to every (k+1)-th
    closest approach."""
    width = cap
    for trace in traces:
        found = trace.peaks(k + 1)
        if len(found) > k:
            width = min(width, (1.0 - found[k][0]) / 2.0)
    if width < 1.0e-6:
        raise GeneralPositionError(
            "collar width underflow: fibers crowd more than k dual faces",
            offender=None,
        )
    return width


@dataclass(frozen=True)
class DeformationReport:
    """Measured volume of a bent family, split into skeleton and collar parts.

    ``volume_z1`` counts each primal face hit by a collapsed sample once
    (the mod-2 union); ``volume_z2`` integrates the image of the collar
    crossings at the sampling resolution.
    """

    volume_z1: float
    volume_z2: float
    total: float
    epsilon: float
    faces_hit: int
    fiber_components: tuple[int, ...]
    skipped_fibers: int
    resolution: int

    def to_record(self) -> dict[str, Any]:
        return {
            "kind": "deformation",
            "volume_z1": self.volume_z1,
            "volume_z2": self.volume_z2,
            "total": self.total,
            "epsilon": self.epsilon,
            "faces_hit": self.faces_hit,
            "fiber_components": list(self.fiber_components),
            "skipped_fibers": self.skipped_fibers,
            "resolution": self.resolution,
        }


def deform_family(
    family: FlatFamily,
    grid: Grid,
    epsilon: float | None = None,
    resolution: int | None = None,
) -> DeformationReport:
    """Push a family of parallel flats through the bending map and measure it.

    With ``epsilon`` unset, the collar width is chosen from the family's own
    clearances so that no fiber crosses more than k collars (k is the base
    dimension).  ``resolution`` is in samples per unit length along each
    fiber axis.
    """
    if family.dim != grid.dim:
        raise UsageError("family and grid dimensions differ")
    n, k = grid.dim, family.base_dim
    _check_codim(n, k)
    if family.fiber_dim not in (1, 2):
        raise UsageError("only fibers of dimension 1 or 2 are measurable")
    res = resolution or (_LINE_RESOLUTION if family.fiber_dim == 1 else _PLANE_RESOLUTION)
    if res < 8:
        raise UsageError("resolution too coarse")

    _general_position_check(family, grid)
    traces, skipped = _trace_fibers(family, grid, res)
    if not traces:
        raise UsageError("no fiber meets the unit cube")

    auto = epsilon is None
    if auto:
        eps = _select_collar_width(traces, k)
    else:
        if not 0.0 < epsilon < 1.0:
            raise DomainError("epsilon must lie in (0, 1)")
        eps = epsilon
    for _ in range(4):
        counts = [trace.component_count(1.0 - eps) for trace in traces]
        if max(counts) <= k:
            break
        if not auto:
            worst = traces[int(np.argmax(counts))]
            raise GeneralPositionError(
                f"fiber {worst.index} meets {max(counts)} collars at epsilon="
                f"{eps:g}; at most {k} are allowed",
                offender=(worst.index, eps),
            )
        eps /= 2.0
        if eps < 1.0e-6:
            raise GeneralPositionError(
                "collar width underflow while separating crossings", offender=None
            )

    rows = [trace.face_rows(eps) for trace in traces]
    stacked = np.concatenate([r for r in rows if len(r)], axis=0)
    faces = np.unique(stacked, axis=0)
    volume_z1 = len(faces) * grid.spacing ** (n - k)
    volume_z2 = sum(trace.collar_volume(eps) for trace in traces)
    return DeformationReport(
        volume_z1=float(volume_z1),
        volume_z2=float(volume_z2),
        total=float(volume_z1 + volume_z2),
        epsilon=float(eps),
        faces_hit=len(faces),
        fiber_components=tuple(counts),
        skipped_fibers=skipped,
        resolution=res,
    )


@dataclass(frozen=True)
class CupBoundReport:
    """Measured bending totals for random families against the grid bounds."""

    dim: int
    k: int
    subdivisions: int
    cube_count: int
    trials: int
    seed: int
    rows: tuple[dict, ...]
    max_total: float
    min_total: float
    upper_bound: float
    lower_reference: float
    ratio: float
    partition_min_ratio: float
    certificates: tuple[Certificate, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates)

    def to_record(self) -> dict[str, Any]:
        return {
            "kind": "cup-bound",
            "dim": self.dim,
            "k": self.k,
            "subdivisions": self.subdivisions,
            "cube_count": self.cube_count,
            "trials": self.trials,
            "seed": self.seed,
            "max_total": self.max_total,
            "min_total": self.min_total,
            "upper_bound": self.upper_bound,
            "lower_reference": self.lower_reference,
            "ratio": self.ratio,
            "partition_min_ratio": self.partition_min_ratio,
            "rows": list(self.rows),
            "certificates": [c.to_record() for c in self.certificates],
        }


def _partition_min_ratio(family: FlatFamily, grid: Grid) -> float:
    """Smallest fiber volume inside its own subcube, relative to spacing^(n-k).

    The family is re-anchored so one fiber passes through every subcube
    center; the intersection volume is computed exactly (chord length or
    section polygon area)."""
    n = grid.dim
    half = 0.5 * grid.spacing
    idx = np.indices((grid.subdivisions,) * n).reshape(n, -1).T
    centers = (idx + 0.5) * grid.spacing
    worst = np.inf
    for center in centers:
        lo = center - half
        hi = center + half
        if family.fiber_dim == 1:
            span = _clip_line_to_box(center, family.fiber_frame[0], lo, hi)
            vol = 0.0 if span is None else span[1] - span[0]
        else:
            polygon = _clip_plane_to_box(center, family.fiber_frame, lo, hi)
            vol = 0.0 if polygon is None else _polygon_area(polygon)
        worst = min(worst, vol / grid.spacing**family.fiber_dim)
    return float(worst)


def cup_bound_check(
    dim: int, k: int, subdivisions: int, trials: int = 8, seed: int = 0
) -> CupBoundReport:
    """Bend random perpendicular families and compare against the grid bounds.

    Each trial draws a fresh orientation and anchor tuple, measures the
    deformed total, and records a (slope, epsilon, z1, z2, total) row.  The
    maximum total is certified against 2^(n+k) C(n,k) p^(k/n); the minimum
    against 0.95 p^(k/n); and the subcube partition logic is checked exactly
    on a re-anchored family whose fibers pass through every subcube center.
    """
    if (dim, k) not in _SUPPORTED_PAIRS:
        raise UsageError(
            f"(dim, k) = ({dim}, {k}) is not implemented; "
            f"supported pairs: {_SUPPORTED_PAIRS}"
        )
    if not 1 <= subdivisions <= 8:
        raise UsageError("subdivisions must lie in [1, 8]")
    if trials < 1:
        raise UsageError("trials must be positive")
    grid = Grid(dim, subdivisions)
    p = grid.cube_count
    rngs = split_rngs(seed, trials + 1)

    def one_trial(index: int) -> dict:
        family = _random_family(rngs[index], dim, k, p)
        report = deform_family(family, grid)
        lead = family.fiber_frame[0]
        return {
            "trial": index,
            "slope": float(math.atan2(lead[1], lead[0])),
            "epsilon": report.epsilon,
            "volume_z1": report.volume_z1,
            "volume_z2": report.volume_z2,
            "total": report.total,
            "max_components": max(report.fiber_components),
        }

    with ThreadPoolExecutor(max_workers=min(worker_count(), trials)) as pool:
        trial_rows = list(pool.map(one_trial, range(trials)))

    totals = [row["total"] for row in trial_rows]
    max_total = max(totals)
    min_total = min(totals)
    lower_reference = p ** (k / dim)
    upper_bound = 2 ** (dim + k) * math.comb(dim, k) * lower_reference

    partition_family = _random_family(rngs[-1], dim, k, 1)
    partition_min = _partition_min_ratio(partition_family, grid)

    certificates = (
        Certificate(
            bound_ref="cup-power-upper",
            bound=float(upper_bound),
            measured=float(max_total),
            direction="upper",
            verdict="pass" if max_total <= upper_bound else "fail",
            tolerance=0.0,
            details={"lower_reference": lower_reference},
        ),
        Certificate(
            bound_ref="cup-power-lower",
            bound=float(0.95 * lower_reference),
            measured=float(min_total),
            direction="lower",
            verdict="pass" if min_total >= 0.95 * lower_reference else "fail",
            tolerance=0.0,
            details={},
        ),
        Certificate(
            bound_ref="cup-power-partition",
            bound=0.95,
            measured=float(partition_min),
            direction="lower",
            verdict="pass" if partition_min >= 0.95 else "fail",
            tolerance=0.0,
            details={"cells": p},
        ),
    )
    return CupBoundReport(
        dim=dim,
        k=k,
        subdivisions=subdivisions,
        cube_count=p,
        trials=trials,
        seed=seed,
        rows=tuple(trial_rows),
        max_total=float(max_total),
        min_total=float(min_total),
        upper_bound=float(upper_bound),
        lower_reference=float(lower_reference),
        ratio=float(max_total / lower_reference),
        partition_min_ratio=float(partition_min),
        certificates=certificates,
    )


# ---------------------------------------------------------------------------
# algebraic families: zero sets of bivariate polynomials, measured by Crofton


def _monomial_exponents(degree: int) -> list[tuple[int, int]]:
    return [
        (total - j, j) for total in range(degree + 1) for j in range(total + 1)
    ]


def _poly_values(coefficients, exponents, x, y):
    out = np.zeros_like(np.asarray(x, dtype=float))
    for c, (a, b) in zip(coefficients, exponents):
        if c != 0.0:
            out += c * x**a * y**b
    return out


def _is_degenerate(coefficients, exponents) -> bool:
    grid = np.linspace(0.0, 1.0, 41)
    xx, yy = np.meshgrid(grid, grid, indexing="ij")
    vals = _poly_values(coefficients, exponents, xx, yy)
    scale = float(np.max(np.abs(coefficients)))
    return float(np.max(np.abs(vals))) <= 1.0e-12 * scale


def zero_set_length(
    coefficients, degree: int, lines: int = 4096, seed: int = 0
) -> EstimateReport:
    """Cauchy-Crofton length of {f = 0} inside the unit square.

    Lines are drawn from the kinematic measure (uniform direction, uniform
    signed offset over the square's projection width); the length is half
    the measure-weighted mean root count.  Roots on each line come from the
    restricted univariate polynomial, interpolated at Chebyshev nodes.
    """
    if degree < 1:
        raise DomainError("degree must be at least 1")
    coeffs = np.asarray(coefficients, dtype=float)
    exponents = _monomial_exponents(degree)
    if coeffs.shape != (len(exponents),):
        raise UsageError(
            f"degree {degree} needs {len(exponents)} coefficients, got {coeffs.shape}"
        )
    if not coeffs.any():
        raise UsageError("zero polynomial has no zero-set length")
    if _is_degenerate(coeffs, exponents):
        raise UsageError("polynomial vanishes identically on the square")
    if lines < 16:
        raise UsageError("need at least 16 lines")

    nodes = np.cos(np.pi * (2.0 * np.arange(degree + 1) + 1.0) / (2.0 * (degree + 1)))
    vander = np.vander(nodes, degree + 1, increasing=True)
    workers = worker_count()
    rngs = split_rngs(seed, workers)
    weighted: list[np.ndarray] = []
    for rng, size in zip(rngs, chunk_sizes(lines, workers)):
        if size == 0:
            continue
        theta = rng.uniform(0.0, np.pi, size)
        normal = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        tangent = np.stack([-normal[:, 1], normal[:, 0]], axis=1)
        width = np.abs(normal).sum(axis=1)
        offset = np.minimum(normal, 0.0).sum(axis=1) + width * rng.random(size)
        anchors = offset[:, None] * normal
        hits = np.zeros(size)
        for i in range(size):
            span = _clip_line_to_box(anchors[i], tangent[i], (0.0, 0.0), (1.0, 1.0))
            if span is None:
                continue
            mid = 0.5 * (span[0] + span[1])
            half = 0.5 * (span[1] - span[0])
            pts = anchors[i] + (mid + half * nodes)[:, None] * tangent[i]
            restricted = np.linalg.solve(
                vander, _poly_values(coeffs, exponents, pts[:, 0], pts[:, 1])
            )
            top = float(np.max(np.abs(restricted)))
            if top <= 1.0e-13 * max(1.0, float(np.max(np.abs(coeffs)))):
                continue
            trimmed = np.where(np.abs(restricted) > 1.0e-13 * top, restricted, 0.0)
            roots = np.polynomial.polynomial.polyroots(np.trim_zeros(trimmed, "b"))
            if len(roots) == 0:
                continue
            real = np.abs(roots.imag) <= 1.0e-8 * (1.0 + np.abs(roots.real))
            inside = (roots.real >= -1.0 - 1.0e-9) & (roots.real <= 1.0 + 1.0e-9)
            hits[i] = int(np.count_nonzero(real & inside))
        weighted.append(width * hits)
    values = np.concatenate(weighted)
    value = 0.5 * np.pi * float(values.mean())
    std_error = 0.5 * np.pi * float(values.std(ddof=1)) / math.sqrt(len(values))
    return EstimateReport(
        value=value,
        std_error=std_error,
        samples=lines,
        seed=seed,
        method="cauchy-crofton-lines",
        details={"degree": degree, "bound": 2.0 * degree},
    )


def algebraic_family_volume(
    degree: int,
    lines: int = 4096,
    seed: int = 0,
    interpolation_points=None,
) -> EstimateReport:
    """Length of a random degree-``degree`` polynomial zero set in the square.

    With ``interpolation_points`` given, the polynomial is drawn from the
    subspace vanishing on those points (the coefficient count C(degree+2, 2)
    must exceed the point count).  Degenerate draws are resampled up to a
    retry cap.
    """
    if degree < 1:
        raise DomainError("degree must be at least 1")
    exponents = _monomial_exponents(degree)
    coeff_rng = spawn_rng(seed)
    basis = None
    n_points = 0
    if interpolation_points is not None:
        pts = np.atleast_2d(np.asarray(interpolation_points, dtype=float))
        if pts.shape[1] != 2:
            raise UsageError("interpolation points must be planar")
        n_points = len(pts)
        if len(exponents) <= n_points:
            raise UsageError(
                f"degree {degree} has {len(exponents)} coefficients; "
                f"interpolating {n_points} points needs a higher degree"
            )
        vmat = np.stack(
            [pts[:, 0] ** a * pts[:, 1] ** b for a, b in exponents], axis=1
        )
        _, svals, vt = np.linalg.svd(vmat)
        rank = int(np.count_nonzero(svals > 1.0e-12 * svals[0]))
        basis = vt[rank:]

    retries = 20
    for attempt in range(retries):
        if basis is None:
            coeffs = coeff_rng.standard_normal(len(exponents))
        else:
            coeffs = basis.T @ coeff_rng.standard_normal(len(basis))
        if not _is_degenerate(coeffs, exponents):
            break
    else:
        raise SamplingError(
            f"no non-degenerate polynomial in {retries} draws", acceptance_rate=0.0
        )
    report = zero_set_length(coeffs, degree, lines=lines, seed=seed + 0x7C0F)
    details = dict(report.details)
    details.update(
        {
            "resamples": attempt,
            "interpolated_points": n_points,
            "coefficients": coeffs.tolist(),
        }
    )
    return EstimateReport(
        value=report.value,
        std_error=report.std_error,
        samples=report.samples,
        seed=seed,
        method=report.method,
        details=details,
    )
