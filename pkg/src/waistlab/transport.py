"""Volume-respecting transport maps with 1-Lipschitz certificates.

The maps here push the standard Gaussian weight e^(-pi |x|^2) onto
uniform measures: coordinate-wise onto the open unit cube, radially
onto unit-volume balls, and products thereof.  A separate family
projects round spheres onto balls (coordinate projection, which is
1-Lipschitz on the sphere) and carries the pushforward densities used
by the limiting argument:

* mu_m on B^n with density s_m (1 - |x|^2)^((m-1)/2), total mass s_(n+m);
* rho''_m(y) = (1 - 2 pi |y|^2 / (m-1))^((m-1)/2), increasing in m to
  the Gaussian e^(-pi |y|^2) wherever defined.

The one-dimensional building block is y(x) = integral_0^x e^(-pi t^2) dt,
a 1-Lipschitz bijection of R onto (-1/2, 1/2).  The radial n-ball map
solves y^n = integral_0^x n r^(n-1) e^(-pi r^2) dr, so y <= x and
y' <= 1; in properly split frames the restricted Jacobian determinant
is bounded below by the Gaussian density (eigenvalue interlacing).

Scalar entry points use adaptive quadrature (absolute target 1e-13) and
a bracketed bisection + Newton polish, exactly as documented; batch
entry points evaluate the same integrals on fixed Gauss-Legendre panels
whose error is far below the 1e-13 budget.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import exp, pi

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, UsageError
from .spaces import sphere_volume

__all__ = [
    "TransportMap",
    "gauss_to_interval",
    "gauss_to_ball_radial",
    "apply",
    "jacobian_matrix",
    "jacobian_singular_values",
    "restricted_determinant",
    "gaussian_rho",
    "density_mu_m",
    "density_rho_m",
    "builtin_transports",
    "gaussian_transports",
]

_FD_STEP = 1e-6
_QUAD_ABS = 1e-13


# ---------------------------------------------------------------------------
# map descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransportMap:
    """Descriptor for one of the builtin transport kinds."""

    kind: str
    n: int = 0
    m: int = 0
    factors: tuple = ()
    parts: tuple = ()

    @staticmethod
    def interval() -> "TransportMap":
        return TransportMap("gauss_to_interval", n=1)

    @staticmethod
    def ball(n: int) -> "TransportMap":
        if n < 1:
            raise DomainError("ball transport needs dimension >= 1")
        return TransportMap("gauss_to_ball", n=n)

    @staticmethod
    def product(*parts: "TransportMap") -> "TransportMap":
        if not parts:
            raise UsageError("product transport needs at least one part")
        return TransportMap("product", parts=tuple(parts))

    @staticmethod
    def scale(factors) -> "TransportMap":
        factors = tuple(float(f) for f in np.atleast_1d(factors))
        return TransportMap("coordinate_scale", factors=factors)

    @staticmethod
    def archimedes(n: int, m: int) -> "TransportMap":
        if n < 1 or m < 1:
            raise DomainError("archimedes projection needs n, m >= 1")
        return TransportMap("archimedes_projection", n=n, m=m)

    @property
    def dim_in(self) -> int:
        if self.kind == "gauss_to_interval":
            return 1
        if self.kind == "gauss_to_ball":
            return self.n
        if self.kind == "coordinate_scale":
            return len(self.factors)
        if self.kind == "product":
            return sum(p.dim_in for p in self.parts)
        if self.kind == "archimedes_projection":
            return self.n + self.m + 1
        raise UsageError(f"unknown transport kind {self.kind!r}")

    @property
    def dim_out(self) -> int:
        if self.kind == "archimedes_projection":
            return self.n
        if self.kind == "product":
            return sum(p.dim_out for p in self.parts)
        return self.dim_in


# ---------------------------------------------------------------------------
# one-dimensional integrals
# ---------------------------------------------------------------------------

def _gauss_integral_scalar(x: float) -> float:
    val, _ = quad(lambda t: exp(-pi * t * t), 0.0, x, epsabs=_QUAD_ABS, epsrel=1e-12)
    return val


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(40)


def _panels(limits: np.ndarray, max_width: float = 0.25) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights for [0, x] per batch entry.

    Splits each interval into equal panels of width <= max_width so the
    40-point rule is effectively exact for the smooth integrands here.
    Returns (nodes, weights, owner row index).
    """
    x = np.asarray(limits, dtype=float)
    counts = np.maximum(1, np.ceil(np.abs(x) / max_width)).astype(int)
    rows, nodes, weights = [], [], []
    for i, (xi, c) in enumerate(zip(x, counts)):
        edges = np.linspace(0.0, xi, c + 1)
        mid = 0.5 * (edges[1:] + edges[:-1])
        half = 0.5 * (edges[1:] - edges[:-1])
        nodes.append((mid[:, None] + half[:, None] * _GL_NODES).ravel())
        weights.append((half[:, None] * _GL_WEIGHTS).ravel())
        rows.append(np.full(c * len(_GL_NODES), i))
    return np.concatenate(nodes), np.concatenate(weights), np.concatenate(rows)


def _gauss_integral_batch(x: np.ndarray) -> np.ndarray:
    nodes, weights, rows = _panels(x)
    vals = np.exp(-pi * nodes * nodes) * weights
    out = np.zeros(len(x))
    np.add.at(out, rows, vals)
    return out


def gauss_to_interval(x):
    """y(x) = integral_0^x e^(-pi t^2) dt, the Gaussian-to-interval map.

    Odd, strictly increasing, 1-Lipschitz, with range (-1/2, 1/2).
    Scalars go through adaptive quadrature; arrays through panelized
    Gauss-Legendre (same 1e-13 absolute budget).
    """
    if np.isscalar(x):
        return _gauss_integral_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    flat = arr.ravel()
    if len(flat) <= 64:
        out = np.array([_gauss_integral_scalar(v) for v in flat])
    else:
        out = _gauss_integral_batch(flat)
    return out.reshape(arr.shape)


def _radial_mass_scalar(x: float, n: int) -> float:
    val, _ = quad(
        lambda r: n * r ** (n - 1) * exp(-pi * r * r), 0.0, x,
        epsabs=_QUAD_ABS, epsrel=1e-12,
    )
    return val


def _radial_mass_batch(x: np.ndarray, n: int) -> np.ndarray:
    nodes, weights, rows = _panels(x)
    vals = n * nodes ** (n - 1) * np.exp(-pi * nodes * nodes) * weights
    out = np.zeros(len(x))
    np.add.at(out, rows, vals)
    return out


def gauss_to_ball_radial(x: float, n: int) -> float:
    """Radius map of the Gaussian-to-ball transport in dimension n.

    Solves y^n = integral_0^x n r^(n-1) e^(-pi r^2) dr by bisection
    bracketed in [0, x] followed by a Newton polish.  Satisfies y <= x
    with slope at most 1.
    """
    if n < 1:
        raise DomainError("radial transport needs n >= 1")
    if x < 0:
        raise DomainError("radius argument must be >= 0")
    if x == 0.0:
        return 0.0
    mass = _radial_mass_scalar(x, n)
    lo, hi = 0.0, x
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid ** n < mass:
            lo = mid
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    for _ in range(4):
        g = y ** n - mass
        dg = n * y ** (n - 1)
        if dg == 0.0:
            break
        y -= g / dg
    return float(min(max(y, 0.0), x))


def _radius_map_batch(r: np.ndarray, n: int) -> np.ndarray:
    # same function as gauss_to_ball_radial; the n-th root is taken
    # directly since y^n equals the radial mass by definition
    return _radial_mass_batch(r, n) ** (1.0 / n)


# ---------------------------------------------------------------------------
# applying maps
# ---------------------------------------------------------------------------

def apply(tmap: TransportMap, x) -> np.ndarray:
    """Apply a transport map to a point or a batch of row vectors."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    pts = arr[None, :] if single else arr
    if pts.shape[1] != tmap.dim_in:
        raise UsageError(
            f"map expects {tmap.dim_in} input coordinates, got {pts.shape[1]}"
        )
    out = _apply_block(tmap, pts)
    return out[0] if single else out


def _apply_block(tmap: TransportMap, pts: np.ndarray) -> np.ndarray:
    if tmap.kind == "gauss_to_interval":
        return gauss_to_interval(pts)
    if tmap.kind == "gauss_to_ball":
        r = np.linalg.norm(pts, axis=1)
        safe = np.where(r > 0, r, 1.0)
        if len(r) <= 64:
            y = np.array([gauss_to_ball_radial(v, tmap.n) for v in r])
        else:
            y = _radius_map_batch(r, tmap.n)
        return pts * (y / safe)[:, None]
    if tmap.kind == "coordinate_scale":
        return pts * np.asarray(tmap.factors)
    if tmap.kind == "product":
        outs = []
        lo = 0
        for part in tmap.parts:
            hi = lo + part.dim_in
            outs.append(_apply_block(part, pts[:, lo:hi]))
            lo = hi
        return np.concatenate(outs, axis=1)
    if tmap.kind == "archimedes_projection":
        norms = np.linalg.norm(pts, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise DomainError("archimedes projection is defined on the unit sphere")
        return pts[:, : tmap.n]
    raise UsageError(f"unknown transport kind {tmap.kind!r}")


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

def _interval_slope(x: np.ndarray) -> np.ndarray:
    return np.exp(-pi * x * x)


def jacobian_matrix(tmap: TransportMap, x: np.ndarray) -> np.ndarray:
    """Jacobian at a point: analytic for coordinate-wise kinds, central
    finite differences (step 1e-6) otherwise.

    For the radial map the origin returns the analytic isotropic limit
    (slope 1 in every direction).  For sphere-domain projections the
    Jacobian is taken along an orthonormal tangent frame, so the matrix
    has dim_out rows and (dim of the sphere) columns.
    """
    x = np.asarray(x, dtype=float)
    if tmap.kind == "gauss_to_interval":
        return np.diag(np.atleast_1d(_interval_slope(x)))
    if tmap.kind == "coordinate_scale":
        return np.diag(np.asarray(tmap.factors))
    if tmap.kind == "product":
        blocks = []
        lo = 0
        for part in tmap.parts:
            hi = lo + part.dim_in
            blocks.append(jacobian_matrix(part, x[lo:hi]))
            lo = hi
        rows = sum(b.shape[0] for b in blocks)
        cols = sum(b.shape[1] for b in blocks)
        out = np.zeros((rows, cols))
        r = c = 0
        for b in blocks:
            out[r:r + b.shape[0], c:c + b.shape[1]] = b
            r += b.shape[0]
            c += b.shape[1]
        return out
    if tmap.kind == "gauss_to_ball":
        r = float(np.linalg.norm(x))
        if r < 1e-12:
            return np.eye(tmap.n)  # y'(0) = 1, isotropic
        return _fd_jacobian(tmap, x)
    if tmap.kind == "archimedes_projection":
        frame = _tangent_frame(x)
        cols = []
        h = _FD_STEP
        for v in frame.T:
            plus = _apply_block(tmap, _geodesic_step(x, v, h)[None, :])[0]
            minus = _apply_block(tmap, _geodesic_step(x, v, -h)[None, :])[0]
            cols.append((plus - minus) / (2 * h))
        return np.stack(cols, axis=1)
    raise UsageError(f"unknown transport kind {tmap.kind!r}")


def _fd_jacobian(tmap: TransportMap, x: np.ndarray) -> np.ndarray:
    h = _FD_STEP
    cols = []
    for i in range(tmap.dim_in):
        e = np.zeros(tmap.dim_in)
        e[i] = h
        plus = _apply_block(tmap, (x + e)[None, :])[0]
        minus = _apply_block(tmap, (x - e)[None, :])[0]
        cols.append((plus - minus) / (2 * h))
    return np.stack(cols, axis=1)


def _tangent_frame(x: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the tangent space of the sphere at x (columns)."""
    n = len(x)
    q, _ = np.linalg.qr(np.concatenate([x[:, None], np.eye(n)], axis=1))
    return q[:, 1:n]


def _geodesic_step(x: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    return np.cos(h) * x + np.sin(h) * v


def jacobian_singular_values(tmap: TransportMap, x) -> np.ndarray:
    """Singular values of the differential at ``x``, descending."""
    x = np.asarray(x, dtype=float)
    if tmap.kind in ("gauss_to_interval", "coordinate_scale"):
        if tmap.kind == "gauss_to_interval":
            vals = np.abs(np.atleast_1d(_interval_slope(x)))
        else:
            vals = np.abs(np.asarray(tmap.factors))
        return np.sort(vals)[::-1]
    if tmap.kind == "product":
        vals = []
        lo = 0
        for part in tmap.parts:
            hi = lo + part.dim_in
            vals.append(jacobian_singular_values(part, x[lo:hi]))
            lo = hi
        return np.sort(np.concatenate(vals))[::-1]
    jac = jacobian_matrix(tmap, x)
    return np.linalg.svd(jac, compute_uv=False)


def gaussian_rho(x) -> float:
    """Standard Gaussian density factor rho(x) = e^(-pi |x|^2)."""
    x = np.asarray(x, dtype=float)
    return float(np.exp(-pi * np.sum(x * x)))


def restricted_determinant(tmap: TransportMap, x, frame: np.ndarray) -> float:
    """sqrt(det(A^T A)) for A = (Jacobian at x) composed with ``frame``.

    ``frame`` holds orthonormal columns spanning the subspace the
    differential is restricted to.  For the Gaussian transports this is
    bounded below by gaussian_rho(x) up to 1e-6 relative slack
    (eigenvalue interlacing: all singular values are <= 1 and their
    full product is exactly the Gaussian density).
    """
    frame = np.asarray(frame, dtype=float)
    if frame.ndim != 2 or frame.shape[0] != np.asarray(x).shape[-1]:
        raise UsageError("frame must have one column per restricted direction")
    gram = frame.T @ frame
    if not np.allclose(gram, np.eye(frame.shape[1]), atol=1e-9):
        raise UsageError("frame columns must be orthonormal")
    jac = jacobian_matrix(tmap, np.asarray(x, dtype=float))
    a = jac @ frame
    det = np.linalg.det(a.T @ a)
    return float(np.sqrt(max(det, 0.0)))


# ---------------------------------------------------------------------------
# projection densities
# ---------------------------------------------------------------------------

def density_mu_m(n: int, m: int, x) -> float:
    """Density of mu_m = pushforward of the round sphere S^(n+m) on B^n.

    Equals s_m (1 - |x|^2)^((m-1)/2) inside the ball, 0 outside; its
    integral over B^n is s_(n+m).
    """
    if n < 1 or m < 1:
        raise DomainError("density_mu_m needs n, m >= 1")
    x = np.asarray(x, dtype=float)
    r2 = float(np.sum(x * x))
    if r2 >= 1.0:
        return 0.0
    return sphere_volume(m) * (1.0 - r2) ** ((m - 1) / 2)


def density_rho_m(m: int, y) -> float:
    """Rescaled projection density rho''_m(y), supported on |y|^2 < (m-1)/(2 pi).

    Increases monotonically in m to the Gaussian e^(-pi |y|^2).
    """
    if m < 2:
        raise DomainError("density_rho_m needs m >= 2")
    y = np.asarray(y, dtype=float)
    r2 = float(np.sum(y * y))
    base = 1.0 - 2.0 * pi * r2 / (m - 1)
    if base <= 0.0:
        return 0.0
    return base ** ((m - 1) / 2)


# ---------------------------------------------------------------------------
# builtin registry
# ---------------------------------------------------------------------------

def builtin_transports() -> list[tuple[str, TransportMap]]:
    """Named instances covered by the 1-Lipschitz certificate."""
    interval = TransportMap.interval()
    entries = [
        ("cube_1", interval),
        ("cube_2", TransportMap.product(interval, interval)),
        ("cube_3", TransportMap.product(interval, interval, interval)),
        ("cube_4", TransportMap.product(*([interval] * 4))),
        ("ball_2", TransportMap.ball(2)),
        ("ball_3", TransportMap.ball(3)),
        ("ball_2x3", TransportMap.product(TransportMap.ball(2), TransportMap.ball(3))),
        ("interval_x_ball_2", TransportMap.product(interval, TransportMap.ball(2))),
        ("archimedes_1_1", TransportMap.archimedes(1, 1)),
        ("archimedes_2_1", TransportMap.archimedes(2, 1)),
        ("archimedes_1_2", TransportMap.archimedes(1, 2)),
        ("archimedes_2_3", TransportMap.archimedes(2, 3)),
    ]
    return entries


def gaussian_transports() -> list[tuple[str, TransportMap]]:
    """The subset whose full Jacobian determinant equals the Gaussian density."""
    return [(name, t) for name, t in builtin_transports()
            if not name.startswith("archimedes")]
