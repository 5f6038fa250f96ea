"""Simplicial meshes for embedded submanifolds, plus exact distance queries.

A ``SubmanifoldMesh`` is a plain vertex/simplex pair: vertices are rows
of an (V, m) float array, simplices rows of an (S, d+1) integer array.
The same structure serves curves in the plane, great subspheres of a
round sphere, and product tori; nothing here knows which space the mesh
lives in beyond its coordinates.

Distance queries are exact per simplex: the squared distance from a
point to a d-simplex is minimized over all faces by solving the Gram
system of each face and keeping feasible barycentric projections.  A
KD-tree over simplex centroids prunes candidates for large meshes.

Text format (one mesh per file)::

    dim <ncoords> <d>
    v x_1 ... x_ncoords
    ...
    s i_0 ... i_d
    ...
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import factorial

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, UsageError

__all__ = [
    "SubmanifoldMesh",
    "mesh_volume",
    "write_mesh",
    "read_mesh",
    "circle_mesh",
    "subsphere_mesh",
    "clifford_torus_mesh",
    "segment_mesh",
    "polyline_mesh",
    "flat_torus_slice_mesh",
    "MeshDistance",
]


@dataclass(frozen=True)
class SubmanifoldMesh:
    """Vertex/simplex arrays for a d-dimensional mesh in R^m."""

    vertices: np.ndarray
    simplices: np.ndarray

    def __post_init__(self):
        verts = np.ascontiguousarray(np.asarray(self.vertices, dtype=float))
        simps = np.ascontiguousarray(np.asarray(self.simplices, dtype=np.int64))
        if verts.ndim != 2 or simps.ndim != 2:
            raise UsageError("mesh arrays must be 2-d")
        if simps.size and (simps.min() < 0 or simps.max() >= len(verts)):
            raise UsageError("simplex indices out of vertex range")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "simplices", simps)

    @property
    def dim(self) -> int:
        return self.simplices.shape[1] - 1

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    def simplex_coords(self) -> np.ndarray:
        """Vertex coordinates per simplex, shape (S, d+1, m)."""
        return self.vertices[self.simplices]


def _simplex_volumes(coords: np.ndarray) -> np.ndarray:
    """Volumes of a stack of d-simplices given as (S, d+1, m) coordinates."""
    d = coords.shape[1] - 1
    if d == 0:
        return np.ones(len(coords))
    edges = coords[:, 1:, :] - coords[:, :1, :]
    gram = np.einsum("sik,sjk->sij", edges, edges)
    det = np.linalg.det(gram)
    return np.sqrt(np.clip(det, 0.0, None)) / factorial(d)


def mesh_volume(mesh: SubmanifoldMesh) -> float:
    """Total d-volume: sum of the Euclidean simplex volumes."""
    return float(np.sum(_simplex_volumes(mesh.simplex_coords())))


# ---------------------------------------------------------------------------
# text serialization
# ---------------------------------------------------------------------------

def write_mesh(mesh: SubmanifoldMesh, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(f"dim {mesh.ambient_dim} {mesh.dim}\n")
        for v in mesh.vertices:
            fh.write("v " + " ".join(repr(float(x)) for x in v) + "\n")
        for s in mesh.simplices:
            fh.write("s " + " ".join(str(int(i)) for i in s) + "\n")


def read_mesh(path: str) -> SubmanifoldMesh:
    verts: list[list[float]] = []
    simps: list[list[int]] = []
    header: tuple[int, int] | None = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            try:
                if tag == "dim":
                    if len(parts) != 3:
                        raise UsageError(f"line {lineno}: malformed header")
                    header = (int(parts[1]), int(parts[2]))
                elif tag == "v":
                    verts.append([float(x) for x in parts[1:]])
                elif tag == "s":
                    simps.append([int(x) for x in parts[1:]])
                else:
                    raise UsageError(f"line {lineno}: unknown record {tag!r}")
            except ValueError as exc:
                raise UsageError(f"line {lineno}: {exc}") from exc
    if header is None:
        raise UsageError("mesh file missing 'dim' header")
    n_field, d = header
    mesh = SubmanifoldMesh(np.array(verts), np.array(simps, dtype=np.int64).reshape(len(simps), d + 1))
    # Header counts coordinates; a sphere-dimension reading (one less) is
    # tolerated because both appear in the wild for spherical meshes.
    if mesh.ambient_dim not in (n_field, n_field + 1):
        raise UsageError(
            f"header announces {n_field} coordinates, vertices have {mesh.ambient_dim}"
        )
    return mesh


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------

def circle_mesh(frame: np.ndarray, segments: int = 256, radius: float = 1.0,
                center: np.ndarray | None = None) -> SubmanifoldMesh:
    """Inscribed polygon of the circle radius*|cos t f0 + sin t f1| + center.

    ``frame`` holds two orthonormal rows spanning the circle's plane.
    """
    frame = np.asarray(frame, dtype=float)
    if frame.shape[0] != 2:
        raise UsageError("circle frame must have two rows")
    t = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    verts = radius * (np.cos(t)[:, None] * frame[0] + np.sin(t)[:, None] * frame[1])
    if center is not None:
        verts = verts + np.asarray(center, dtype=float)
    idx = np.arange(segments)
    simps = np.stack([idx, (idx + 1) % segments], axis=1)
    return SubmanifoldMesh(verts, simps)


def _cross_polytope(d: int) -> tuple[np.ndarray, np.ndarray]:
    """Boundary complex of the (d+1)-cross-polytope: a combinatorial d-sphere."""
    k = d + 1
    verts = np.concatenate([np.eye(k), -np.eye(k)])
    simps = []
    for signs in np.ndindex(*(2,) * k):
        simps.append([axis + k * s for axis, s in enumerate(signs)])
    return verts, np.array(simps, dtype=np.int64)


def _subdivide(verts: np.ndarray, simps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One round of edge-midpoint subdivision for d <= 3 simplices."""
    d = simps.shape[1] - 1
    verts = list(verts)
    midpoint: dict[tuple[int, int], int] = {}

    def mid(i: int, j: int) -> int:
        key = (min(i, j), max(i, j))
        if key not in midpoint:
            midpoint[key] = len(verts)
            verts.append(0.5 * (verts[i] + verts[j]))
        return midpoint[key]

    out: list[list[int]] = []
    for s in simps:
        if d == 1:
            a, b = s
            m = mid(a, b)
            out += [[a, m], [m, b]]
        elif d == 2:
            a, b, c = s
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            out += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        elif d == 3:
            v0, v1, v2, v3 = s
            m01, m02, m03 = mid(v0, v1), mid(v0, v2), mid(v0, v3)
            m12, m13, m23 = mid(v1, v2), mid(v1, v3), mid(v2, v3)
            out += [
                [v0, m01, m02, m03],
                [v1, m01, m12, m13],
                [v2, m02, m12, m23],
                [v3, m03, m13, m23],
                # central octahedron split along the (m01, m23) diagonal
                [m01, m23, m02, m12],
                [m01, m23, m12, m13],
                [m01, m23, m13, m03],
                [m01, m23, m03, m02],
            ]
        else:
            raise DomainError(f"subdivision implemented for dim <= 3, got {d}")
    return np.array(verts), np.array(out, dtype=np.int64)


def subsphere_mesh(frame: np.ndarray, level: int = 3) -> SubmanifoldMesh:
    """Mesh of the great d-sphere spanned by ``frame`` ((d+1, m) orthonormal rows).

    Starts from the cross-polytope boundary, subdivides ``level`` times
    with vertices renormalized to the sphere, then maps by the frame.
    """
    frame = np.asarray(frame, dtype=float)
    d = frame.shape[0] - 1
    verts, simps = _cross_polytope(d)
    for _ in range(level):
        verts, simps = _subdivide(verts, simps)
        verts = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    return SubmanifoldMesh(verts @ frame, simps)


def clifford_torus_mesh(r1: float, r2: float, res: int = 64) -> SubmanifoldMesh:
    """Product torus {(r1 e^{ia}, r2 e^{ib})} in R^4, triangulated on a grid."""
    a = np.linspace(0.0, 2.0 * np.pi, res, endpoint=False)
    A, B = np.meshgrid(a, a, indexing="ij")
    verts = np.stack(
        [r1 * np.cos(A), r1 * np.sin(A), r2 * np.cos(B), r2 * np.sin(B)], axis=-1
    ).reshape(-1, 4)

    def vid(i: int, j: int) -> int:
        return (i % res) * res + (j % res)

    simps = []
    for i in range(res):
        for j in range(res):
            simps.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
            simps.append([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return SubmanifoldMesh(verts, np.array(simps, dtype=np.int64))


def segment_mesh(p, q, pieces: int = 1) -> SubmanifoldMesh:
    """Straight segment from p to q split into ``pieces`` sub-segments."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    t = np.linspace(0.0, 1.0, pieces + 1)
    verts = p[None, :] * (1 - t)[:, None] + q[None, :] * t[:, None]
    idx = np.arange(pieces)
    return SubmanifoldMesh(verts, np.stack([idx, idx + 1], axis=1))


def polyline_mesh(points: np.ndarray, closed: bool = False) -> SubmanifoldMesh:
    """Chain of segments through ``points`` (rows), optionally closed."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    idx = np.arange(n - 1)
    simps = np.stack([idx, idx + 1], axis=1)
    if closed:
        simps = np.concatenate([simps, [[n - 1, 0]]])
    return SubmanifoldMesh(points, simps.astype(np.int64))


def flat_torus_slice_mesh(lengths, fixed_axis: int, value: float, res: int = 32) -> SubmanifoldMesh:
    """Coordinate slice {x_fixed = value} of a flat torus, triangulated.

    The grid is closed by duplicating seam vertices at coordinate equal
    to the axis length: the mesh is a flat fundamental-domain tile, so
    no triangle is a chord across the domain and the mesh volume equals
    the product of the free lengths exactly.
    """
    lengths = np.asarray(lengths, dtype=float)
    n = len(lengths)
    free = [i for i in range(n) if i != fixed_axis]
    if len(free) == 1:
        a = lengths[free[0]]
        t = np.linspace(0.0, a, res + 1)
        verts = np.zeros((res + 1, n))
        verts[:, free[0]] = t
        verts[:, fixed_axis] = value
        idx = np.arange(res)
        simps = np.stack([idx, idx + 1], axis=1)
        return SubmanifoldMesh(verts, simps)
    if len(free) != 2:
        raise DomainError("slice mesh supports tori of dimension 2 or 3")
    a0, a1 = lengths[free[0]], lengths[free[1]]
    u = np.linspace(0.0, a0, res + 1)
    w = np.linspace(0.0, a1, res + 1)
    U, W = np.meshgrid(u, w, indexing="ij")
    verts = np.zeros(((res + 1) * (res + 1), n))
    verts[:, free[0]] = U.ravel()
    verts[:, free[1]] = W.ravel()
    verts[:, fixed_axis] = value

    def vid(i: int, j: int) -> int:
        return i * (res + 1) + j

    simps = []
    for i in range(res):
        for j in range(res):
            simps.append([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)])
            simps.append([vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)])
    return SubmanifoldMesh(verts, np.array(simps, dtype=np.int64))


# ---------------------------------------------------------------------------
# exact point-to-simplex distance
# ---------------------------------------------------------------------------

def _pairs_simplex_nearest(points: np.ndarray, simplex_coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest point on each paired simplex.

    ``points`` is (M, m), ``simplex_coords`` is (M, d+1, m); returns
    (distances (M,), nearest points (M, m)).  Exact: every face's
    affine projection is tested for barycentric feasibility.
    """
    M, m = points.shape
    d = simplex_coords.shape[1] - 1
    best = np.full(M, np.inf)
    best_pt = np.empty_like(points)
    for size in range(1, d + 2):
        for face in combinations(range(d + 1), size):
            fc = simplex_coords[:, face, :]
            if size == 1:
                proj = fc[:, 0, :]
                lam_ok = np.ones(M, dtype=bool)
            else:
                base = fc[:, 0, :]
                edges = fc[:, 1:, :] - base[:, None, :]
                gram = np.einsum("sik,sjk->sij", edges, edges)
                rhs = np.einsum("sik,sk->si", edges, points - base)
                try:
                    lam = np.linalg.solve(gram, rhs[..., None])[..., 0]
                except np.linalg.LinAlgError:
                    continue
                lam_ok = np.all(lam > 1e-12, axis=1) & (np.sum(lam, axis=1) < 1 - 1e-12)
                proj = base + np.einsum("si,sik->sk", lam, edges)
            dist = np.linalg.norm(points - proj, axis=1)
            upd = lam_ok & (dist < best)
            best[upd] = dist[upd]
            best_pt[upd] = proj[upd]
    return best, best_pt


class MeshDistance:
    """Exact nearest-point queries against a fixed mesh.

    Small meshes are scanned exhaustively; larger ones are pruned with a
    KD-tree over simplex centroids (``k_candidates`` nearest simplices
    per query point, generous enough for the well-shaped meshes used
    here).
    """

    EXHAUSTIVE_LIMIT = 192

    def __init__(self, mesh: SubmanifoldMesh, k_candidates: int = 16):
        self.mesh = mesh
        self._reduce(mesh.vertices)
        self.coords = self._project(mesh.vertices)[mesh.simplices]
        self.k = min(k_candidates, len(mesh.simplices))
        if len(mesh.simplices) > self.EXHAUSTIVE_LIMIT:
            self.tree = cKDTree(self.coords.mean(axis=1))
        else:
            self.tree = None

    def _reduce(self, vertices: np.ndarray) -> None:
        # Meshes often span a lower-dimensional affine subspace of the
        # ambient space (equatorial subspheres, planar slices).  Queries
        # split exactly into an in-subspace part plus a fixed-direction
        # residual, so the nearest-point search runs in reduced coordinates.
        self.origin = vertices.mean(axis=0)
        centered = vertices - self.origin
        _, svals, vt = np.linalg.svd(centered, full_matrices=False)
        scale = max(float(svals[0]), 1.0)
        rank = int(np.count_nonzero(svals > 1e-12 * scale))
        if rank < vertices.shape[1]:
            self.basis = vt[:rank].T  # (ambient, rank)
        else:
            self.basis = None

    def _project(self, points: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return points
        return (points - self.origin) @ self.basis

    def query(self, points: np.ndarray, chunk: int = 65536) -> tuple[np.ndarray, np.ndarray]:
        """Distances and nearest mesh points for query rows (M, m)."""
        points = np.asarray(points, dtype=float)
        M = len(points)
        dist = np.empty(M)
        nearest = np.empty_like(points)
        reduced = self._project(points)
        if self.basis is not None:
            centered = points - self.origin
            residual_sq = np.einsum("ij,ij->i", centered, centered) - np.einsum(
                "ij,ij->i", reduced, reduced
            )
            residual_sq = np.maximum(residual_sq, 0.0)
        for lo in range(0, M, chunk):
            hi = min(lo + chunk, M)
            d, q = self._query_block(reduced[lo:hi])
            if self.basis is not None:
                d = np.sqrt(d * d + residual_sq[lo:hi])
                q = q @ self.basis.T + self.origin
            dist[lo:hi] = d
            nearest[lo:hi] = q
        return dist, nearest

    def _query_block(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        M = len(pts)
        if self.tree is None:
            S = len(self.coords)
            rep_pts = np.repeat(pts, S, axis=0)
            rep_simp = np.tile(self.coords, (M, 1, 1))
            d, q = _pairs_simplex_nearest(rep_pts, rep_simp)
            d = d.reshape(M, S)
            pick = np.argmin(d, axis=1)
            rows = np.arange(M)
            return d[rows, pick], q.reshape(M, S, -1)[rows, pick]
        _, cand = self.tree.query(pts, k=self.k)
        cand = np.atleast_2d(cand)
        k = cand.shape[1]
        rep_pts = np.repeat(pts, k, axis=0)
        rep_simp = self.coords[cand.ravel()]
        d, q = _pairs_simplex_nearest(rep_pts, rep_simp)
        d = d.reshape(M, k)
        pick = np.argmin(d, axis=1)
        rows = np.arange(M)
        return d[rows, pick], q.reshape(M, k, -1)[rows, pick]
