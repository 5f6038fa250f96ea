"""Monte Carlo integral geometry for mesh volumes.

Codimension-k volume of a mesh in the unit sphere is recovered from the
expected intersection count with Haar-random great k-subspheres; the
Euclidean variant intersects a mesh in R^n with random affine flats and is
calibrated once per dimension pair against a unit flat reference.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GeneralPositionError, UsageError
from .meshes import SubmanifoldMesh, mesh_volume
from .reports import EstimateReport
from .rng import chunk_sizes, split_rngs, worker_count
from .spaces import ball_volume, sphere_volume

# Relative threshold below which an intersection is treated as touching a
# simplex face or as tangent, and the equator is re-drawn perturbed.
_DEGENERATE_TOL = 1e-10

# Magnitude of the deterministic frame perturbation used to break ties.
_TIE_STEP = 1e-9

_CALIBRATION_SEED = 0x51D7
_CALIBRATION_SAMPLES = 400_000

_euclidean_calibration: dict[tuple[int, int], float] = {}


@dataclass(frozen=True)
class EquatorialSubsphere:
    """Great k-subsphere of S^n, stored as an orthonormal basis.

    ``frame`` has shape (k+1, n+1) and spans the subspace whose unit sphere
    is the equator; ``complement`` holds the remaining n-k basis vectors.
    """

    frame: np.ndarray
    complement: np.ndarray

    @property
    def k(self) -> int:
        return self.frame.shape[0] - 1

    @property
    def n(self) -> int:
        return self.frame.shape[1] - 1


def haar_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix of shape (n, n)."""
    gauss = rng.standard_normal((n, n))
    q, r = np.linalg.qr(gauss)
    # Sign correction makes the distribution exactly Haar.
    return q * np.sign(np.diag(r))


def sample_equator(n: int, k: int, rng: np.random.Generator) -> EquatorialSubsphere:
    """Draw a Haar-random great k-subsphere of S^n."""
    if not 0 <= k < n:
        raise DomainError(f"equator dimension k={k} must satisfy 0 <= k < n={n}")
    q = haar_orthogonal(n + 1, rng)
    return EquatorialSubsphere(frame=q[:, : k + 1].T.copy(), complement=q[:, k + 1 :].T.copy())


def _tie_rotation(n: int, tie_breaker: int, magnitude: float) -> np.ndarray:
    """Small deterministic rotation indexed by the sample that needed it."""
    gen = np.random.default_rng(0xA11CE + 7919 * (tie_breaker + 1))
    skew = gen.standard_normal((n, n))
    skew = (skew - skew.T) / 2.0
    skew *= magnitude / max(np.abs(skew).max(), 1e-300)
    q, r = np.linalg.qr(np.eye(n) + skew)
    return q * np.sign(np.diag(r))


def _nullspace_rays(mats: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Right null vectors of a batch of (m, m+1) matrices.

    Returns (rays, quality) where quality is scaled so that values near zero
    flag a degenerate (rank-deficient) system.
    """
    m = mats.shape[-2]
    if m == 1:
        a = mats[..., 0, :]
        rays = np.stack([-a[..., 1], a[..., 0]], axis=-1)
    elif m == 2:
        rays = np.cross(mats[..., 0, :], mats[..., 1, :])
    else:
        # Cofactor expansion generalizes the cross product to (m, m+1).
        cols = np.arange(m + 1)
        parts = []
        for j in range(m + 1):
            minor = mats[..., :, cols != j]
            parts.append((-1.0) ** j * np.linalg.det(minor))
        rays = np.stack(parts, axis=-1)
    row_scale = np.prod(np.linalg.norm(mats, axis=-1), axis=-1)
    quality = np.linalg.norm(rays, axis=-1) / np.maximum(row_scale, 1e-300)
    return rays, quality


def _count_one(vertices: np.ndarray, simplices: np.ndarray, complement: np.ndarray) -> tuple[int, bool]:
    """Intersection count of the meshed cone with one equatorial subspace.

    Returns (count, clean); clean is False when any simplex produced a
    configuration too close to degenerate to trust the sign test.
    """
    corners = vertices[simplices]  # (S, d+1, n+1)
    mats = corners @ complement.T  # (S, d+1, n-k)
    mats = np.swapaxes(mats, -1, -2)  # (S, n-k, d+1)
    rays, quality = _nullspace_rays(mats)
    degenerate = quality < _DEGENERATE_TOL
    scale = np.abs(rays).max(axis=-1, keepdims=True)
    lam = rays / np.maximum(scale, 1e-300)
    margin = _DEGENERATE_TOL
    inside = np.all(lam > margin, axis=-1) | np.all(lam < -margin, axis=-1)
    # A barycentric coordinate at zero with no sign conflict elsewhere means
    # the equator grazes a simplex face; the hit could be split with a
    # neighbor, so the whole count is re-done against a perturbed frame.
    solid_pos = (lam > margin).sum(axis=-1)
    solid_neg = (lam < -margin).sum(axis=-1)
    grazing = (np.abs(lam).min(axis=-1) <= margin) & ((solid_pos == 0) | (solid_neg == 0))
    suspect = degenerate | grazing
    return int(np.count_nonzero(inside & ~degenerate)), not bool(suspect.any())


def count_intersections(
    mesh: SubmanifoldMesh,
    equator: EquatorialSubsphere,
    tie_breaker: int = 0,
) -> int:
    """Number of transverse intersections of ``mesh`` with ``equator``.

    Near-degenerate hits are re-counted against a deterministically
    perturbed copy of the equator frame.
    """
    count, clean, _ = _count_with_flag(mesh, equator, tie_breaker)
    if not clean:
        raise GeneralPositionError(
            "intersection count unstable after frame perturbation",
            offender=equator.frame,
        )
    return count


def _count_with_flag(
    mesh: SubmanifoldMesh,
    equator: EquatorialSubsphere,
    tie_breaker: int,
) -> tuple[int, bool, bool]:
    """Count with retry; returns (count, clean, perturbed)."""
    n_amb = mesh.vertices.shape[1]
    if equator.frame.shape[1] != n_amb:
        raise UsageError(
            f"equator lives in R^{equator.frame.shape[1]}, mesh in R^{n_amb}"
        )
    expected_dim = equator.n - equator.k
    if mesh.dim != expected_dim:
        raise UsageError(
            f"mesh dimension {mesh.dim} incompatible with k={equator.k}; "
            f"expected {expected_dim}"
        )
    count, clean = _count_one(mesh.vertices, mesh.simplices, equator.complement)
    if clean:
        return count, True, False
    magnitude = _TIE_STEP
    for attempt in range(3):
        rot = _tie_rotation(n_amb, tie_breaker + attempt, magnitude)
        perturbed = equator.complement @ rot
        count, clean = _count_one(mesh.vertices, mesh.simplices, perturbed)
        if clean:
            return count, True, True
        magnitude *= 10.0
    return count, False, True


def crofton_volume(
    mesh: SubmanifoldMesh,
    k: int,
    samples: int,
    seed: int,
) -> EstimateReport:
    """Codim-k volume of a mesh in S^n from random equator intersections.

    The estimator is (1/2) * s_{n-k} * E[#intersections] over Haar great
    k-subspheres; the result is deterministic for a fixed (seed, worker
    count) pair.
    """
    if samples <= 0:
        raise UsageError("samples must be positive")
    n = mesh.vertices.shape[1] - 1
    if not 0 <= k < n:
        raise DomainError(f"codimension k={k} out of range for S^{n}")
    if mesh.dim != n - k:
        raise UsageError(
            f"mesh dimension {mesh.dim} does not match codimension {k} in S^{n}"
        )
    radii = np.linalg.norm(mesh.vertices, axis=1)
    if np.abs(radii - 1.0).max() > 1e-6:
        raise UsageError("mesh vertices must lie on the unit sphere")

    workers = worker_count()
    sizes = chunk_sizes(samples, workers)
    rngs = split_rngs(seed, len(sizes))
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    counts = np.empty(samples, dtype=np.int64)
    perturbed_total = [0] * len(sizes)

    def run(worker: int) -> None:
        rng = rngs[worker]
        base = int(offsets[worker])
        for i in range(sizes[worker]):
            eq = sample_equator(n, k, rng)
            c, clean, perturbed = _count_with_flag(mesh, eq, tie_breaker=base + i)
            if not clean:
                raise GeneralPositionError(
                    "equator intersection count unstable", offender=eq.frame
                )
            counts[base + i] = c
            if perturbed:
                perturbed_total[worker] += 1

    if len(sizes) == 1:
        run(0)
    else:
        with ThreadPoolExecutor(max_workers=len(sizes)) as pool:
            list(pool.map(run, range(len(sizes))))

    factor = 0.5 * sphere_volume(n - k)
    mean = counts.mean()
    stderr = counts.std(ddof=1) / np.sqrt(samples) if samples > 1 else 0.0
    return EstimateReport(
        value=float(factor * mean),
        std_error=float(factor * stderr),
        samples=samples,
        seed=seed,
        method="crofton-great-subsphere",
        details={
            "n": n,
            "k": k,
            "mean_count": float(mean),
            "perturbed_samples": int(sum(perturbed_total)),
            "workers": len(sizes),
        },
    )


def _flat_counts(
    mesh_corners: np.ndarray,
    radius: float,
    n: int,
    d: int,
    samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Intersection counts of random codim-d affine flats with a d-mesh."""
    n_simplices = mesh_corners.shape[0]
    counts = np.empty(samples, dtype=np.int64)
    block = max(1, 2**22 // max(1, n_simplices * (d + 1) ** 2))
    done = 0
    while done < samples:
        b = min(block, samples - done)
        gauss = rng.standard_normal((b, n, n))
        q, r = np.linalg.qr(gauss)
        q = q * np.sign(np.einsum("...ii->...i", r))[:, None, :]
        perp = q[:, :, n - d :]  # offsets live in the d-dim orthogonal part
        raw = rng.standard_normal((b, d))
        raw /= np.maximum(np.linalg.norm(raw, axis=1, keepdims=True), 1e-300)
        offsets = raw * (radius * rng.random(b) ** (1.0 / d))[:, None]
        # Solve [perp^T W^T; 1^T] lam = [offset; 1] per (flat, simplex).
        top = np.einsum("sva,bad->bsdv", mesh_corners, perp)  # (b, S, d, d+1)
        mats = np.concatenate(
            [top, np.ones((b, n_simplices, 1, d + 1))], axis=2
        )
        rhs = np.concatenate([offsets, np.ones((b, 1))], axis=1)  # (b, d+1)
        det = np.linalg.det(mats)
        good = np.abs(det) > 1e-12
        lam = np.full((b, n_simplices, d + 1), -1.0)
        if good.any():
            rhs_full = np.broadcast_to(rhs[:, None, :], lam.shape)
            lam[good] = np.linalg.solve(mats[good], rhs_full[good][..., None])[..., 0]
        counts[done : done + b] = np.count_nonzero(
            np.all(lam > 1e-12, axis=-1), axis=-1
        )
        done += b
    return counts


def _unit_flat_reference(n: int, d: int) -> SubmanifoldMesh:
    """Centered unit d-cube inside R^n, triangulated."""
    if d == 1:
        verts = np.zeros((2, n))
        verts[0, 0] = -0.5
        verts[1, 0] = 0.5
        return SubmanifoldMesh(verts, np.array([[0, 1]]))
    if d == 2:
        verts = np.zeros((4, n))
        verts[:, :2] = [[-0.5, -0.5], [0.5, -0.5], [0.5, 0.5], [-0.5, 0.5]]
        return SubmanifoldMesh(verts, np.array([[0, 1, 2], [0, 2, 3]]))
    if d == 3:
        corners = np.array(
            [[x, y, z] for x in (-0.5, 0.5) for y in (-0.5, 0.5) for z in (-0.5, 0.5)]
        )
        verts = np.zeros((8, n))
        verts[:, :3] = corners
        # Six tetrahedra around the main diagonal 0 -> 7.
        path = [(0, 1, 3, 7), (0, 3, 2, 7), (0, 2, 6, 7), (0, 6, 4, 7), (0, 4, 5, 7), (0, 5, 1, 7)]
        return SubmanifoldMesh(verts, np.array(path))
    raise DomainError(f"no unit flat reference for dimension {d}")


def _calibration_constant(n: int, d: int) -> float:
    """E[count] per unit d-volume at radius 1, measured once per (n, d)."""
    key = (n, d)
    if key not in _euclidean_calibration:
        reference = _unit_flat_reference(n, d)
        rng = np.random.default_rng(_CALIBRATION_SEED + 131 * n + d)
        counts = _flat_counts(
            reference.vertices[reference.simplices],
            1.0,
            n,
            d,
            _CALIBRATION_SAMPLES,
            rng,
        )
        _euclidean_calibration[key] = float(counts.mean()) / mesh_volume(reference)
    return _euclidean_calibration[key]


def cauchy_crofton_euclidean(
    mesh: SubmanifoldMesh,
    samples: int,
    seed: int,
    bounding_radius: float | None = None,
) -> EstimateReport:
    """Volume of a d-mesh in R^n from random affine (n-d)-flat crossings.

    Flats are drawn with Haar direction and offset uniform in the ball of
    ``bounding_radius`` inside the orthogonal complement.  The kinematic
    constant is calibrated once per (n, d) on a centered unit flat.
    """
    if samples <= 0:
        raise UsageError("samples must be positive")
    n = mesh.vertices.shape[1]
    d = mesh.dim
    if not 1 <= d < n:
        raise DomainError(f"mesh dimension {d} unusable in R^{n}")
    extent = float(np.linalg.norm(mesh.vertices, axis=1).max())
    if bounding_radius is None:
        bounding_radius = 1.05 * extent
    elif extent > bounding_radius * (1 + 1e-12):
        raise UsageError(
            f"mesh extends to radius {extent:.6g}, outside the sampling "
            f"region of radius {bounding_radius:.6g}"
        )

    kappa = _calibration_constant(n, d)
    workers = worker_count()
    sizes = chunk_sizes(samples, workers)
    rngs = split_rngs(seed, len(sizes))
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    counts = np.empty(samples, dtype=np.int64)
    corners = mesh.vertices[mesh.simplices]

    def run(worker: int) -> None:
        block = _flat_counts(corners, bounding_radius, n, d, sizes[worker], rngs[worker])
        counts[offsets[worker] : offsets[worker] + sizes[worker]] = block

    if len(sizes) == 1:
        run(0)
    else:
        with ThreadPoolExecutor(max_workers=len(sizes)) as pool:
            list(pool.map(run, range(len(sizes))))

    scale = bounding_radius**d / kappa
    mean = counts.mean()
    stderr = counts.std(ddof=1) / np.sqrt(samples) if samples > 1 else 0.0
    return EstimateReport(
        value=float(scale * mean),
        std_error=float(scale * stderr),
        samples=samples,
        seed=seed,
        method="cauchy-crofton-flats",
        details={
            "n": n,
            "d": d,
            "bounding_radius": float(bounding_radius),
            "calibration": kappa,
            "mean_count": float(mean),
            "workers": len(sizes),
        },
    )
