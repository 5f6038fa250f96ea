"""Exact mod-2 relative chains in the unit cube and their recursive fillings.

Vertices carry Fraction coordinates, so cutting, coning, and mod-2
reduction cancel exactly; every identity asserted here is an equality of
reduced chains, never a numerical comparison.  Floating-point inputs are
converted once (floats are dyadic rationals, so the conversion is lossless)
and all later arithmetic stays in Q.

"Relative" means relative to the cube boundary: a face whose vertices all
lie on a wall is discarded by the boundary operator.  The filling operator
cuts a relative cycle along a cheap hyperplane, cones the halves onto the
opposite walls, and recurses on the slice; its cube-cover bookkeeping is a
deterministic function of the input cover alone, which makes the output
ledger reusable across different cycles with the same cover.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Sequence

import numpy as np

from .content import CubeCover, hausdorff_cover_weight
from .errors import DomainError, UsageError

# a coordinate is pinned to a wall when within this of 0 or 1
_WALL_TOL = Fraction(1, 10**12)
# slack for the point-in-cover check on the public fill entry
_COVER_TOL = 1.0e-9

Vertex = tuple[Fraction, ...]
Simplex = tuple[Vertex, ...]


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        return Fraction(float(value))
    raise UsageError(f"coordinates must be rational or float, got {type(value).__name__}")


def _make_simplex(vertices) -> Simplex:
    return tuple(sorted(tuple(_to_fraction(c) for c in v) for v in vertices))


def _affinely_independent(simplex: Simplex) -> bool:
    """Exact rank test of the edge vectors over Q."""
    rows = [
        [c - b for c, b in zip(v, simplex[0])] for v in simplex[1:]
    ]
    need = len(rows)
    if need == 0:
        return True
    cols = len(simplex[0])
    rank = 0
    for col in range(cols):
        pivot = next((r for r in range(rank, need) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        lead = rows[rank]
        for r in range(rank + 1, need):
            if rows[r][col] != 0:
                scale = rows[r][col] / lead[col]
                rows[r] = [a - scale * b for a, b in zip(rows[r], lead)]
        rank += 1
        if rank == need:
            return True
    return False


def _on_wall(vertex: Vertex) -> bool:
    return any(c <= _WALL_TOL or c >= 1 - _WALL_TOL for c in vertex)


def _face_in_boundary(simplex: Iterable[Vertex]) -> bool:
    """Discard rule for relative chains: every vertex pinned to the cube boundary."""
    return all(_on_wall(v) for v in simplex)


@dataclass(frozen=True)
class Mod2Chain:
    """Formal sum of simplices with implicit Z/2 coefficients, kept reduced.

    Simplices are stored as sorted tuples of exact rational vertices;
    construction cancels repeated simplices in pairs, rejects degenerate
    ones, and pins every coordinate to [0, 1].
    """

    dim: int
    simplices: tuple[Simplex, ...]

    def __post_init__(self):
        if self.dim < 0:
            raise DomainError("chain dimension must be >= 0")
        seen: set[Simplex] = set()
        ambient = None
        for raw in self.simplices:
            simplex = _make_simplex(raw)
            if len(simplex) != self.dim + 1:
                raise UsageError(
                    f"a {self.dim}-simplex needs {self.dim + 1} vertices, got {len(simplex)}"
                )
            if len(set(simplex)) != len(simplex):
                raise UsageError("degenerate simplex: repeated vertex")
            for vertex in simplex:
                if ambient is None:
                    ambient = len(vertex)
                if len(vertex) != ambient:
                    raise UsageError("simplices live in different ambient dimensions")
                if any(c < 0 or c > 1 for c in vertex):
                    raise DomainError("vertex coordinates must lie in [0, 1]")
            if not _affinely_independent(simplex):
                raise UsageError("degenerate simplex: affinely dependent vertices")
            seen ^= {simplex}
        object.__setattr__(self, "simplices", tuple(sorted(seen)))

    def __len__(self) -> int:
        return len(self.simplices)

    @property
    def is_empty(self) -> bool:
        return not self.simplices

    @property
    def ambient_dim(self) -> int | None:
        return len(self.simplices[0][0]) if self.simplices else None


def chain_sum(*chains: Mod2Chain) -> Mod2Chain:
    """Mod-2 sum (symmetric difference of simplex sets)."""
    if not chains:
        raise UsageError("chain_sum needs at least one chain")
    dim = chains[0].dim
    acc: set[Simplex] = set()
    for chain in chains:
        if chain.dim != dim:
            raise UsageError("cannot add chains of different dimensions")
        acc ^= set(chain.simplices)
    return Mod2Chain(dim, tuple(acc))


def boundary(z: Mod2Chain) -> Mod2Chain:
    """Mod-2 boundary relative to the cube walls.

    A face is discarded when every vertex lies on the boundary of the
    unit cube, each within 1e-12 of some wall.
    """
    if z.dim < 1:
        raise UsageError("boundary needs a chain of dimension >= 1")
    faces: set[Simplex] = set()
    for simplex in z.simplices:
        for i in range(len(simplex)):
            faces ^= {simplex[:i] + simplex[i + 1 :]}
    kept = [face for face in faces if not _face_in_boundary(face)]
    return Mod2Chain(z.dim - 1, tuple(kept))


# ---------------------------------------------------------------------------
# cover bookkeeping


@dataclass(frozen=True)
class CoverLedger:
    """A cube cover together with the dimension its weight is measured in."""

    cover: CubeCover
    k: int
    weight: float

    def __post_init__(self):
        if self.k < 0:
            raise DomainError("ledger dimension must be >= 0")
        expected = hausdorff_cover_weight(self.cover, self.k)
        if abs(self.weight - expected) > 1.0e-12 * max(1.0, abs(expected)):
            raise UsageError(
                f"ledger weight {self.weight} is inconsistent with its cover "
                f"(recomputed {expected})"
            )

    @classmethod
    def from_cover(cls, cover: CubeCover, k: int) -> "CoverLedger":
        return cls(cover, k, hausdorff_cover_weight(cover, k))


def _best_cut(lo: np.ndarray, hi: np.ndarray, edges: np.ndarray, k: int) -> float:
    """Midpoint of the leftmost interval minimizing the slice weight.

    The slice weight S(t) = sum of edge^(k-1) over cubes meeting {x = t} is
    piecewise constant between consecutive cube faces; its integral is the
    total cover weight, so the minimum never exceeds it.
    """
    points = np.unique(np.concatenate([[0.0, 1.0], np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)]))
    best_t = None
    best_s = math.inf
    for a, b in zip(points[:-1], points[1:]):
        mid = 0.5 * (a + b)
        inside = (lo < mid) & (mid < hi)
        s = float(np.sum(edges[inside] ** (k - 1))) if np.any(inside) else 0.0
        if s < best_s:
            best_s = s
            best_t = mid
    return float(best_t)


def choose_cut(ledger: CoverLedger, axis: int) -> float:
    """Cheapest hyperplane coordinate along ``axis`` for the ledger's cover."""
    if len(ledger.cover) == 0:
        raise UsageError("cannot cut an empty cover")
    n = ledger.cover.corners.shape[1]
    if not 0 <= axis < n:
        raise UsageError(f"axis must lie in [0, {n - 1}]")
    lo = ledger.cover.corners[:, axis]
    return _best_cut(lo, lo + ledger.cover.edges, ledger.cover.edges, ledger.k)


# ---------------------------------------------------------------------------
# coning and cutting


def cone_to_facet(z: Mod2Chain, axis: int, side: int) -> Mod2Chain:
    """Prism chain between ``z`` and its projection onto the facet x_axis = side.

    Uses the standard staircase triangulation of each prism in the sorted
    vertex order, which restricts consistently to shared faces; degenerate
    prism simplices (from vertices already on the facet) vanish mod 2 and
    are dropped.  The chain must not touch the opposite facet.
    """
    if side not in (0, 1):
        raise UsageError("side must be 0 or 1")
    if z.is_empty:
        return Mod2Chain(z.dim + 1, ())
    n = z.ambient_dim
    if not 0 <= axis < n:
        raise UsageError(f"axis must lie in [0, {n - 1}]")
    opposite = Fraction(1 - side)
    target = Fraction(side)
    for simplex in z.simplices:
        for vertex in simplex:
            if abs(vertex[axis] - opposite) <= _WALL_TOL:
                raise UsageError("chain touches the facet opposite the cone target")
    pieces: set[Simplex] = set()
    for simplex in z.simplices:
        shadow = tuple(
            v[:axis] + (target,) + v[axis + 1 :] for v in simplex
        )
        for i in range(len(simplex)):
            prism = shadow[: i + 1] + simplex[i:]
            if len(set(prism)) != len(prism):
                continue
            candidate = tuple(sorted(prism))
            if not _affinely_independent(candidate):
                continue
            pieces ^= {candidate}
    return Mod2Chain(z.dim + 1, tuple(pieces))


def _halves(z: Mod2Chain, axis: int, t: Fraction) -> tuple[Mod2Chain, Mod2Chain]:
    """Assign every simplex wholly to one side of the hyperplane {x_axis = t}.

    Simplices straddling the plane go to the side away from the wall they
    touch (low by default); subdividing them instead would make the filling
    boundary return the subdivided cycle, which reduced-chain equality can
    tell apart from the original.  A simplex touching both walls along the
    axis cannot be coned either way and is rejected.
    """
    low: list[Simplex] = []
    high: list[Simplex] = []
    for simplex in z.simplices:
        coords = [v[axis] for v in simplex]
        if all(c <= t for c in coords):
            low.append(simplex)
        elif all(c >= t for c in coords):
            high.append(simplex)
        else:
            hits_far = any(c >= 1 - _WALL_TOL for c in coords)
            hits_near = any(c <= _WALL_TOL for c in coords)
            if hits_far and hits_near:
                raise UsageError("a simplex spans both walls along the cut axis")
            (high if hits_far else low).append(simplex)
    return Mod2Chain(z.dim, tuple(low)), Mod2Chain(z.dim, tuple(high))


# ---------------------------------------------------------------------------
# the filling operator


def _covered(cover: CubeCover, z: Mod2Chain) -> bool:
    """Vertex and barycenter containment in the closed cover, with slack."""
    points = []
    for simplex in z.simplices:
        for vertex in simplex:
            points.append([float(c) for c in vertex])
        points.append([float(sum(col)) / len(simplex) for col in zip(*simplex)])
    pts = np.asarray(points)
    hit = np.zeros(len(pts), dtype=bool)
    for corner, edge in zip(cover.corners, cover.edges):
        inside = np.all(
            (pts >= corner - _COVER_TOL) & (pts <= corner + edge + _COVER_TOL), axis=1
        )
        hit |= inside
    return bool(hit.all())


def _long_boxes(corners: np.ndarray, edges: np.ndarray, axis: int):
    """Extend every cube along ``axis`` to span [0, 1], re-cut to its own size."""
    out_corners = []
    out_edges = []
    for corner, edge in zip(corners, edges):
        count = max(1, math.ceil(1.0 / edge)) if edge < 1.0 else 1
        for step in range(count):
            piece = corner.copy()
            piece[axis] = min(step * edge, 1.0 - edge) if edge < 1.0 else 0.0
            out_corners.append(piece)
            out_edges.append(edge)
    return out_corners, out_edges


def _fill_rec(
    z: Mod2Chain, corners: np.ndarray, edges: np.ndarray, k: int, axis: int
) -> tuple[Mod2Chain, list[np.ndarray], list[float]]:
    """Fill ``z`` against the cover; the output cubes depend on the cover only.

    The cut coordinate comes from the cover, the two halves of the cycle
    are coned onto the two walls along ``axis``, and the interface (the
    relative boundary of the low half) recurses one axis deeper against
    the slice of the cover.  The slice cover is carried even when the
    interface is empty, so two cycles with the same cover receive the
    same ledger.
    """
    t = _best_cut(corners[:, axis], corners[:, axis] + edges, edges, k)
    t_exact = Fraction(t)

    low, high = _halves(z, axis, t_exact)
    slice_cycle = boundary(low) if z.dim >= 1 else Mod2Chain(0, ())

    filled = chain_sum(cone_to_facet(low, axis, 0), cone_to_facet(high, axis, 1))
    out_corners, out_edges = _long_boxes(corners, edges, axis)

    inside = (corners[:, axis] < t) & (t < corners[:, axis] + edges)
    if k >= 1 and np.any(inside):
        slice_corners = corners[inside].copy()
        slice_corners[:, axis] = t
        slab_fill, slab_corners, slab_edges = _fill_rec(
            slice_cycle, slice_corners, edges[inside], k - 1, axis + 1
        )
        filled = chain_sum(
            filled,
            cone_to_facet(slab_fill, axis, 0),
            cone_to_facet(slab_fill, axis, 1),
        )
        for corner, edge in zip(slab_corners, slab_edges):
            cyl_corners, cyl_edges = _long_boxes(
                np.asarray([corner]), np.asarray([edge]), axis
            )
            out_corners.extend(cyl_corners)
            out_edges.extend(cyl_edges)
    elif k >= 1 and not slice_cycle.is_empty:
        raise UsageError("the cut produced a slice outside every cube of the cover")

    return filled, out_corners, out_edges


def fill(z: Mod2Chain, ledger: CoverLedger) -> tuple[Mod2Chain, CoverLedger]:
    """Fill a relative cycle; returns the filling chain and its cover ledger.

    The filling satisfies boundary(fill) = z exactly as reduced chains, and
    the output weight is at most (2^(k+2) - 2) times the input weight.  The
    output cover is a function of the input cover alone.
    """
    n = ledger.cover.corners.shape[1]
    if ledger.k != z.dim:
        raise UsageError("ledger dimension does not match the cycle dimension")
    if z.is_empty:
        empty = CubeCover(np.zeros((0, n)), np.zeros(0))
        return Mod2Chain(z.dim + 1, ()), CoverLedger.from_cover(empty, z.dim + 1)
    if z.ambient_dim != n:
        raise UsageError("cycle and cover live in different ambient dimensions")
    if not z.dim < n:
        raise DomainError("cycle dimension must be below the ambient dimension")
    if any(_face_in_boundary(s) for s in z.simplices):
        raise UsageError("a simplex of the cycle lies inside the cube boundary")
    if z.dim >= 1 and not boundary(z).is_empty:
        raise UsageError("chain is not a relative cycle")
    if not _covered(ledger.cover, z):
        raise UsageError("the cover does not cover the cycle")
    filled, corners, edges = _fill_rec(
        z, ledger.cover.corners, ledger.cover.edges, z.dim, 0
    )
    cover = CubeCover(np.asarray(corners), np.asarray(edges))
    return filled, CoverLedger.from_cover(cover, z.dim + 1)


def filling_constant(k: int) -> int:
    """Weight amplification ceiling of one filling step: 2^(k+2) - 2.

    Recurrence: the long boxes cost a factor 2, and the slice filling
    (one dimension lower) is cylindered at another factor 2, giving
    A_k = 2 A_{k-1} + 2 with A_0 = 2.
    """
    if k < 0:
        raise DomainError("dimension must be >= 0")
    return 2 ** (k + 2) - 2


# ---------------------------------------------------------------------------
# star assignment on barycentric subdivisions


@dataclass(frozen=True)
class StarAssignment:
    """Minimal-element assignment on the barycentric subdivision.

    ``assignment`` maps each chain of nested faces to its smallest face;
    ``set_sizes`` counts, per subdivision vertex (a face of the input),
    the distinct assigned faces over all chains through it.  The reported
    maximum runs over faces below the top dimension: a top face trivially
    collects every one of its 2^(k+1) - 1 subfaces, while faces of
    dimension <= k - 1 stay within the 2^k - 1 ceiling.
    """

    dim: int
    assignment: dict[tuple, tuple]
    set_sizes: dict[tuple, int]
    max_set_size: int
    bound: int


def _face_closure(maximal: Iterable[Sequence]) -> set[frozenset]:
    faces: set[frozenset] = set()
    for simplex in maximal:
        vertices = frozenset(simplex)
        if not vertices:
            raise UsageError("simplices must be nonempty")
        for size in range(1, len(vertices) + 1):
            for subset in itertools.combinations(sorted(vertices), size):
                faces.add(frozenset(subset))
    return faces


def star_assignment(maximal_simplices: Iterable[Sequence]) -> StarAssignment:
    """Assign each nested-face chain its minimal face and census the pullbacks.

    The input is an abstract complex given by its maximal simplices over
    hashable vertices.  Chains of the face poset are the simplices of the
    barycentric subdivision; assigning each chain its smallest face pulls
    at most 2^k - 1 distinct faces onto any subdivision vertex of
    dimension below the top.
    """
    faces = _face_closure(maximal_simplices)
    if not faces:
        raise UsageError("the complex has no faces")
    dim = max(len(f) for f in faces) - 1

    by_key = {f: tuple(sorted(f)) for f in faces}
    supersets = {
        f: sorted((g for g in faces if f < g), key=lambda g: (len(g), by_key[g]))
        for f in faces
    }

    chains: list[tuple[frozenset, ...]] = []

    def grow(chain: tuple[frozenset, ...]):
        chains.append(chain)
        for nxt in supersets[chain[-1]]:
            grow(chain + (nxt,))

    for face in sorted(faces, key=lambda f: (len(f), by_key[f])):
        grow((face,))

    assignment: dict[tuple, tuple] = {}
    collected: dict[frozenset, set[frozenset]] = {f: set() for f in faces}
    for chain in chains:
        smallest = chain[0]
        assignment[tuple(by_key[f] for f in chain)] = by_key[smallest]
        for member in chain:
            collected[member].add(smallest)

    set_sizes = {by_key[f]: len(collected[f]) for f in faces}
    max_size = 0
    for face, pulled in collected.items():
        if len(face) - 1 < dim:
            max_size = max(max_size, len(pulled))
    bound = 2**dim - 1
    if max_size > bound:
        raise RuntimeError(
            f"star assignment census {max_size} exceeds the 2^k - 1 ceiling {bound}"
        )
    return StarAssignment(
        dim=dim,
        assignment=assignment,
        set_sizes=set_sizes,
        max_set_size=max_size,
        bound=bound,
    )


# ---------------------------------------------------------------------------
# partition boundary identity on toy grids


_HASH_PRIMES = (73856093, 19349663, 83492791)


def _vertex_bits(index: tuple[int, ...]) -> tuple[int, ...]:
    mixed = 0x9E3779B9
    for axis, i in enumerate(index):
        mixed ^= (i + 1) * _HASH_PRIMES[axis % 3]
        mixed = (mixed * 2654435761) % (1 << 32)
    return tuple((mixed >> axis) & 1 for axis in range(len(index)))


def _vertex_label(index: tuple[int, ...], labels: np.ndarray) -> int:
    """Part owning the vertex after the deterministic corner perturbation.

    The vertex moves by 2^-20 along each axis, direction given by its hash
    bit, inward at the walls; the part of the cell containing the moved
    point becomes the vertex label.
    """
    shape = labels.shape
    bits = _vertex_bits(index)
    cell = []
    for axis, i in enumerate(index):
        step = -1 if bits[axis] else 0
        cell.append(min(max(i + step, 0), shape[axis] - 1))
    return int(labels[tuple(cell)])


def _kuhn_simplices(shape: tuple[int, ...]):
    """Kuhn triangulation of the grid: one simplex per (cell, axis order)."""
    n = len(shape)
    for cell in itertools.product(*(range(s) for s in shape)):
        for order in itertools.permutations(range(n)):
            vertices = [tuple(cell)]
            current = list(cell)
            for axis in order:
                current[axis] += 1
                vertices.append(tuple(current))
            yield vertices


def partition_chains(parts: Sequence[np.ndarray]) -> dict[tuple[int, ...], Mod2Chain]:
    """Intersection chains C_I of a grid partition, one per part subset.

    Each part is a boolean cell mask; together they must partition the
    grid.  Labels are transferred to grid vertices through the hashed
    2^-20 corner perturbation, and C_I is realized as the union of the
    barycentric-subdivision simplices whose smallest face carries every
    label of I.  C_I has dimension n - |I| + 1; larger subsets are empty.
    """
    if not parts:
        raise UsageError("a partition needs at least one part")
    masks = [np.asarray(p, dtype=bool) for p in parts]
    shape = masks[0].shape
    n = len(shape)
    if n < 1 or n > 3:
        raise DomainError("toy grids only: 1 <= dimension <= 3")
    if len(masks) > 6:
        raise UsageError("toy grids only: at most 6 parts")
    if any(m.shape != shape for m in masks):
        raise UsageError("part masks must share one grid shape")
    if max(shape) >= 2**20:
        raise UsageError("grid too fine for the 2^-20 perturbation")
    total = np.zeros(shape, dtype=int)
    for mask in masks:
        total += mask.astype(int)
    if not np.all(total == 1):
        raise UsageError("parts do not form a partition of the grid")

    labels = np.full(shape, -1, dtype=int)
    for index, mask in enumerate(masks):
        labels[mask] = index

    position = {}
    vertex_label = {}
    for index in itertools.product(*(range(s + 1) for s in shape)):
        position[index] = tuple(Fraction(i, s) for i, s in zip(index, shape))
        vertex_label[index] = _vertex_label(index, labels)

    def barycenter(face: tuple) -> Vertex:
        pts = [position[v] for v in face]
        return tuple(sum(col) / len(face) for col in zip(*pts))

    part_ids = range(len(masks))
    collected: dict[tuple[int, ...], set[Simplex]] = {}
    for size in range(1, min(len(masks), n + 1) + 1):
        for subset in itertools.combinations(part_ids, size):
            collected[subset] = set()

    for simplex in _kuhn_simplices(shape):
        vertices = tuple(simplex)
        vlabels = [vertex_label[v] for v in vertices]
        # chains of nested faces with consecutive dimensions |I|-1 .. n; the
        # smallest face carries the labels of I bijectively
        for subset in collected:
            want = set(subset)
            for base in itertools.combinations(range(n + 1), len(subset)):
                if {vlabels[i] for i in base} != want:
                    continue
                rest = [i for i in range(n + 1) if i not in base]
                for extension in itertools.permutations(rest):
                    chain = [frozenset(base)]
                    for nxt in extension:
                        chain.append(chain[-1] | {nxt})
                    geometric = tuple(
                        sorted(
                            barycenter(tuple(vertices[i] for i in sorted(member)))
                            for member in chain
                        )
                    )
                    collected[subset].add(geometric)

    return {
        subset: Mod2Chain(n + 1 - len(subset), tuple(simplices))
        for subset, simplices in collected.items()
    }


@dataclass(frozen=True)
class PartitionReport:
    """Outcome of the boundary identity check over all part subsets."""

    dim: int
    part_count: int
    identities_checked: int
    holds: bool
    failures: tuple[tuple[int, ...], ...]
    chain_sizes: dict[tuple[int, ...], int]


def partition_boundary_identity(parts: Sequence[np.ndarray]) -> PartitionReport:
    """Check boundary(C_I) = sum over i of C_(I + i) for every part subset I.

    Verified as exact equalities of reduced chains, for |I| from 1 up to
    n + 1 (where the left side is a 0-chain and both sides must vanish).
    """
    chains = partition_chains(parts)
    masks = [np.asarray(p, dtype=bool) for p in parts]
    n = masks[0].ndim
    part_ids = range(len(masks))

    failures = []
    checked = 0
    for subset, chain in sorted(chains.items(), key=lambda kv: (len(kv[0]), kv[0])):
        checked += 1
        others = [i for i in part_ids if i not in subset]
        rhs_parts = [
            chains[tuple(sorted(subset + (i,)))]
            for i in others
            if tuple(sorted(subset + (i,))) in chains
        ]
        rhs = (
            chain_sum(*rhs_parts)
            if rhs_parts
            else Mod2Chain(max(chain.dim - 1, 0), ())
        )
        if chain.dim >= 1:
            lhs = boundary(chain)
        else:
            lhs = Mod2Chain(0, ())
        if set(lhs.simplices) != set(rhs.simplices):
            failures.append(subset)
    return PartitionReport(
        dim=n,
        part_count=len(masks),
        identities_checked=checked,
        holds=not failures,
        failures=tuple(failures),
        chain_sizes={subset: len(chain) for subset, chain in sorted(chains.items())},
    )


# ---------------------------------------------------------------------------
# serialization


def write_chain(path, chain: Mod2Chain) -> None:
    """Text format: a `dim k` header, then one simplex per line as rationals."""
    with open(path, "w") as handle:
        handle.write(f"dim {chain.dim}\n")
        for simplex in chain.simplices:
            flat = [str(c) for vertex in simplex for c in vertex]
            handle.write(" ".join(flat) + "\n")


def read_chain(path) -> Mod2Chain:
    with open(path) as handle:
        header = handle.readline().split()
        if len(header) != 2 or header[0] != "dim":
            raise UsageError("chain file must start with a 'dim k' header")
        dim = int(header[1])
        simplices = []
        for line in handle:
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) % (dim + 1):
                raise UsageError("coordinate count is not a multiple of the vertex count")
            ambient = len(tokens) // (dim + 1)
            values = [Fraction(token) for token in tokens]
            simplices.append(
                tuple(
                    tuple(values[v * ambient : (v + 1) * ambient])
                    for v in range(dim + 1)
                )
            )
    return Mod2Chain(dim, tuple(simplices))


def write_ledger(path, ledger: CoverLedger) -> None:
    """CSV rows of corner coordinates, edge, dimension, and total weight."""
    n = ledger.cover.corners.shape[1]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"corner_{i}" for i in range(n)] + ["edge", "k", "weight"])
        for corner, edge in zip(ledger.cover.corners, ledger.cover.edges):
            writer.writerow(
                [repr(float(c)) for c in corner]
                + [repr(float(edge)), ledger.k, repr(ledger.weight)]
            )


def read_ledger(path) -> CoverLedger:
    with open(path, newline="") as handle:
        rows = list(csv.reader(handle))
    if len(rows) < 2:
        raise UsageError("ledger file has no cubes")
    header = rows[0]
    n = sum(1 for name in header if name.startswith("corner_"))
    corners = []
    edges = []
    k = None
    for row in rows[1:]:
        corners.append([float(c) for c in row[:n]])
        edges.append(float(row[n]))
        k = int(row[n + 1])
    return CoverLedger.from_cover(CubeCover(np.asarray(corners), np.asarray(edges)), k)
