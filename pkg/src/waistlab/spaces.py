"""Ambient spaces: descriptors, volumes, geodesics, uniform sampling.

The estimators downstream all run on a small zoo of spaces: round
spheres, Euclidean balls and cubes, flat tori, the two projective
families, and convex bodies given by oracles.  A ``SpaceDescriptor``
pins down the space and its coordinate conventions:

* ``sphere(n)``       unit n-sphere in R^(n+1);
* ``ball(n)``         unit n-ball in R^n;
* ``cube(n, sides)``  axis box prod (0, a_i), coordinates in R^n;
* ``torus(lengths)``  flat torus prod R/(a_i Z), lengths sorted ascending;
* ``real_projective(n)``     unit-vector representatives in R^(n+1), x ~ -x;
* ``complex_projective(n)``  unit vectors in C^(n+1) stored as 2n+2 reals
  interleaved (re_0, im_0, re_1, im_1, ...), z ~ e^(i theta) z;
* ``convex_body(body)``      membership-oracle body in R^n.

Projective representatives are canonicalized so the first coordinate of
modulus above 1e-9 is positive (real case) or real positive (complex
case).  Complex projective space carries the metric induced by the unit
sphere through the circle quotient, so its geodesic diameter is pi/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi
from typing import Any

import numpy as np

from .errors import DomainError, SamplingError, UsageError

__all__ = [
    "SpaceDescriptor",
    "AmbientPoint",
    "ball_volume",
    "sphere_volume",
    "total_volume",
    "canonicalize",
    "geodesic_distance",
    "sample_uniform",
    "sample_points",
]


# ---------------------------------------------------------------------------
# volume constants
# ---------------------------------------------------------------------------

def ball_volume(k: int) -> float:
    """Volume v_k = pi^(k/2) / (k/2)! of the unit k-ball; v_0 = 1."""
    if k < 0:
        raise DomainError(f"ball dimension must be >= 0, got {k}")
    return pi ** (k / 2) / gamma(k / 2 + 1)


def sphere_volume(i: int) -> float:
    """Volume s_i = (i+1) v_(i+1) of the unit i-sphere; s_0 = 2."""
    if i < 0:
        raise DomainError(f"sphere dimension must be >= 0, got {i}")
    return (i + 1) * ball_volume(i + 1)


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpaceDescriptor:
    """Identifies a space and the coordinates its points are written in.

    ``ambient_dim`` is the length of a coordinate vector; ``dim`` the
    intrinsic dimension.  ``params`` holds kind-specific data (cube
    sides, torus lengths, the convex body oracle).
    """

    kind: str
    dim: int
    ambient_dim: int
    params: tuple = field(default=())
    body: Any = field(default=None, compare=False)

    # -- constructors -------------------------------------------------------

    @staticmethod
    def sphere(n: int) -> "SpaceDescriptor":
        if n < 0:
            raise DomainError(f"sphere dimension must be >= 0, got {n}")
        return SpaceDescriptor("sphere", n, n + 1)

    @staticmethod
    def ball(n: int) -> "SpaceDescriptor":
        if n < 1:
            raise DomainError(f"ball dimension must be >= 1, got {n}")
        return SpaceDescriptor("ball", n, n)

    @staticmethod
    def cube(n: int, sides=1.0) -> "SpaceDescriptor":
        sides_arr = np.broadcast_to(np.asarray(sides, dtype=float), (n,))
        if np.any(sides_arr <= 0):
            raise DomainError("cube sides must be strictly positive")
        return SpaceDescriptor("cube", n, n, tuple(float(s) for s in sides_arr))

    @staticmethod
    def torus(lengths) -> "SpaceDescriptor":
        lengths = tuple(float(a) for a in np.atleast_1d(np.asarray(lengths, dtype=float)))
        if any(a <= 0 for a in lengths):
            raise DomainError("torus lengths must be strictly positive")
        if list(lengths) != sorted(lengths):
            raise DomainError("torus lengths must be sorted ascending")
        n = len(lengths)
        return SpaceDescriptor("torus", n, n, lengths)

    @staticmethod
    def real_projective(n: int) -> "SpaceDescriptor":
        if n < 1:
            raise DomainError(f"projective dimension must be >= 1, got {n}")
        return SpaceDescriptor("real_projective", n, n + 1)

    @staticmethod
    def complex_projective(n: int) -> "SpaceDescriptor":
        if n < 1:
            raise DomainError(f"projective dimension must be >= 1, got {n}")
        return SpaceDescriptor("complex_projective", 2 * n, 2 * n + 2, (n,))

    @staticmethod
    def convex_body(body) -> "SpaceDescriptor":
        n = int(body.dim)
        return SpaceDescriptor("convex_body", n, n, (), body)


@dataclass(frozen=True)
class AmbientPoint:
    """A point together with the space its coordinates refer to."""

    space: SpaceDescriptor
    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=float)
        if coords.shape != (self.space.ambient_dim,):
            raise UsageError(
                f"point has {coords.shape} coordinates, space expects "
                f"({self.space.ambient_dim},)"
            )
        object.__setattr__(self, "coords", coords)


# ---------------------------------------------------------------------------
# total volume
# ---------------------------------------------------------------------------

def total_volume(space: SpaceDescriptor) -> float:
    """Riemannian volume of the space.

    Complex projective volume is pinned through the circle-bundle
    quotient of the odd sphere: vol CP^n = s_(2n+1) / (2 pi), which
    gives vol CP^1 = pi.
    """
    if space.kind == "sphere":
        return sphere_volume(space.dim)
    if space.kind == "ball":
        return ball_volume(space.dim)
    if space.kind in ("cube", "torus"):
        return float(np.prod(space.params))
    if space.kind == "real_projective":
        return sphere_volume(space.dim) / 2.0
    if space.kind == "complex_projective":
        return sphere_volume(space.ambient_dim - 1) / (2.0 * pi)
    if space.kind == "convex_body":
        raise UsageError("convex bodies have no closed-form volume; estimate it")
    raise UsageError(f"unknown space kind {space.kind!r}")


# ---------------------------------------------------------------------------
# canonical representatives
# ---------------------------------------------------------------------------

def _as_complex(x: np.ndarray) -> np.ndarray:
    return x[..., 0::2] + 1j * x[..., 1::2]


def _from_complex(z: np.ndarray) -> np.ndarray:
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def canonicalize(space: SpaceDescriptor, x: np.ndarray) -> np.ndarray:
    """Canonical coordinate representative of a point (vectorized).

    Projective points are scaled so the first coordinate of modulus
    above 1e-9 is positive (respectively real positive); torus points
    are wrapped into the fundamental domain.  Other kinds pass through.
    """
    x = np.asarray(x, dtype=float)
    if space.kind == "real_projective":
        pick = np.abs(x) > 1e-9
        first = np.argmax(pick, axis=-1)
        lead = np.take_along_axis(x, first[..., None], axis=-1)[..., 0]
        sign = np.where(lead < 0, -1.0, 1.0)
        return x * sign[..., None]
    if space.kind == "complex_projective":
        z = _as_complex(x)
        pick = np.abs(z) > 1e-9
        first = np.argmax(pick, axis=-1)
        lead = np.take_along_axis(z, first[..., None], axis=-1)[..., 0]
        mod = np.abs(lead)
        phase = np.where(mod > 0, np.conj(lead) / np.where(mod > 0, mod, 1.0), 1.0)
        return _from_complex(z * phase[..., None])
    if space.kind == "torus":
        return np.mod(x, np.asarray(space.params))
    return x


# ---------------------------------------------------------------------------
# geodesic distance
# ---------------------------------------------------------------------------

def _coords_of(space: SpaceDescriptor, p) -> np.ndarray:
    if isinstance(p, AmbientPoint):
        if p.space != space:
            raise UsageError("point belongs to a different space")
        return p.coords
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1] != space.ambient_dim:
        raise UsageError(
            f"coordinates of length {arr.shape[-1]} passed to a space with "
            f"ambient dimension {space.ambient_dim}"
        )
    return arr


def geodesic_distance(space: SpaceDescriptor, p, q) -> np.ndarray:
    """Geodesic distance between points of one space (vectorized).

    Spheres use arccos of the dot product; real projective space takes
    the shorter lift min(d, pi - d) = arccos |<p, q>|; complex
    projective space measures the spherical distance between the two
    circle fibers, arccos |<z, w>_C|; tori minimize over deck
    translations coordinate-wise; flat kinds are Euclidean.
    """
    a = _coords_of(space, p)
    b = _coords_of(space, q)
    if space.kind == "sphere":
        return np.arccos(np.clip(np.sum(a * b, axis=-1), -1.0, 1.0))
    if space.kind == "real_projective":
        return np.arccos(np.clip(np.abs(np.sum(a * b, axis=-1)), 0.0, 1.0))
    if space.kind == "complex_projective":
        herm = np.sum(_as_complex(a) * np.conj(_as_complex(b)), axis=-1)
        return np.arccos(np.clip(np.abs(herm), 0.0, 1.0))
    if space.kind == "torus":
        lengths = np.asarray(space.params)
        delta = np.abs(a - b) % lengths
        delta = np.minimum(delta, lengths - delta)
        return np.sqrt(np.sum(delta * delta, axis=-1))
    # ball, cube, convex_body: induced Euclidean metric
    return np.sqrt(np.sum((a - b) ** 2, axis=-1))


# ---------------------------------------------------------------------------
# uniform sampling
# ---------------------------------------------------------------------------

_REJECTION_CAP = 200  # rounds of batch rejection before giving up


def sample_points(space: SpaceDescriptor, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` independent uniform points, shape (count, ambient_dim).

    Spheres normalize Gaussian vectors; balls push sphere samples by a
    radial power; projective spaces canonicalize sphere samples; convex
    bodies reject from the bounding box, raising ``SamplingError`` with
    the observed acceptance rate if _REJECTION_CAP rounds do not fill
    the request.
    """
    if count < 0:
        raise DomainError("sample count must be >= 0")
    if space.kind == "sphere":
        g = rng.standard_normal((count, space.ambient_dim))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    if space.kind == "ball":
        sph = sample_points(SpaceDescriptor.sphere(space.dim - 1), count, rng)
        r = rng.random(count) ** (1.0 / space.dim)
        return sph * r[:, None]
    if space.kind == "cube":
        return rng.random((count, space.dim)) * np.asarray(space.params)
    if space.kind == "torus":
        return rng.random((count, space.dim)) * np.asarray(space.params)
    if space.kind == "real_projective":
        sph = sample_points(SpaceDescriptor.sphere(space.dim), count, rng)
        return canonicalize(space, sph)
    if space.kind == "complex_projective":
        sph = sample_points(SpaceDescriptor.sphere(space.ambient_dim - 1), count, rng)
        return canonicalize(space, sph)
    if space.kind == "convex_body":
        return _sample_body(space.body, count, rng)
    raise UsageError(f"unknown space kind {space.kind!r}")


def _sample_body(body, count: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = body.bounding_box()
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    out = np.empty((count, body.dim))
    have = 0
    drawn = 0
    accepted = 0
    batch = max(4 * count, 256)
    for _ in range(_REJECTION_CAP):
        if have >= count:
            break
        cand = lo + rng.random((batch, body.dim)) * (hi - lo)
        keep = cand[body.contains(cand)]
        drawn += batch
        accepted += len(keep)
        take = min(count - have, len(keep))
        out[have:have + take] = keep[:take]
        have += take
    if have < count:
        rate = accepted / max(drawn, 1)
        raise SamplingError(
            f"rejection sampling stalled after {drawn} draws "
            f"(acceptance rate {rate:.2e})",
            acceptance_rate=rate,
        )
    return out


def sample_uniform(space: SpaceDescriptor, rng: np.random.Generator) -> AmbientPoint:
    """Single uniform point wrapped as an ``AmbientPoint``."""
    return AmbientPoint(space, sample_points(space, 1, rng)[0])
