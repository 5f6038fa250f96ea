"""Command line runner emitting reproducible JSON/CSV verification reports.

Every subcommand assembles a report document: tool metadata, the
effective configuration (defaults included), a list of records, and the
overall verdict.  Records are estimates and certificates; every record
carries a ``bound_ref`` tag naming the inequality it checks against.
Identical (config, seed, worker count) triples produce byte-identical
documents except for the wall-clock ``timing_seconds`` field.

Exit codes: 0 when every certificate passes, 1 when any fails, 2 for
usage errors (bad flags, malformed config files, invalid names).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import importlib.metadata
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable

import numpy as np
from scipy.integrate import quad

from .content import CubeCover, lower_minkowski_content
from .convex import (
    ConvexBody,
    central_section_volume,
    inscribed_touching_pair,
    min_section_search,
    width,
)
from .errors import DomainError, UsageError
from .fibrations import (
    abs_z1_on_rp3,
    abs_z1_on_s3,
    fiber_mesh,
    fiber_volume,
    hopf_map,
    rp_quotient_of,
    torus_projection,
    verify_waist_bound,
    waist_profile,
    x1_squared_on_rp2,
)
from .filling import (
    CoverLedger,
    Mod2Chain,
    boundary,
    fill,
    filling_constant,
    partition_boundary_identity,
    star_assignment,
)
from .integral_geometry import cauchy_crofton_euclidean, crofton_volume
from .isoperimetry import boundary_content, half_slab, random_half_volume
from .meshes import circle_mesh, clifford_torus_mesh, read_mesh, subsphere_mesh
from .reports import Certificate, EstimateReport
from .rng import worker_count
from .spaces import SpaceDescriptor, ball_volume, sphere_volume
from .sweepout import (
    Grid,
    algebraic_family_volume,
    cup_bound_check,
    deform_family,
    random_flat_family,
)
from .transport import (
    builtin_transports,
    density_mu_m,
    density_rho_m,
    gaussian_rho,
    gaussian_transports,
    jacobian_singular_values,
    restricted_determinant,
)

__all__ = ["main", "run_criterion", "SUITE_NAMES", "BOUND_REFS"]

TOOL = "waistlab"
SCHEMA = 1

try:
    VERSION = importlib.metadata.version("waistlab")
except importlib.metadata.PackageNotFoundError:  # pragma: no cover
    VERSION = "0.1.0"


# ---------------------------------------------------------------------------
# bound registry
# ---------------------------------------------------------------------------

# Registry of citable bounds; every emitted record names one of these.
BOUND_REFS = {
    "equatorial-fiber-volume": "round sphere bundles have fibers of equatorial volume",
    "projective-fiber-volume": "projective quotients halve the equatorial fiber volume",
    "projective-torus-area": "the folded Clifford torus attains area pi^2",
    "torus-fiber-product": "torus projection fibers multiply the dropped lengths",
    "waist-profile": "fiber volume sampled over the target grid",
    "crofton-calibration": "random equator counts recover the submanifold volume",
    "minkowski-content": "neighborhood volumes extrapolate to the codim-k content",
    "gaussian-lipschitz": "transport maps are 1-Lipschitz",
    "restricted-determinant": "restricted Jacobians dominate the Gaussian density",
    "radial-mass": "pushforward densities integrate to the sphere volume",
    "smoothing-monotone": "smoothed densities increase to the Gaussian limit",
    "pullback-equality": "the diameter attains equality in the pullback bound",
    "cube-section-vaaler": "central cube sections have volume at least one",
    "central-section": "Monte Carlo central section volume",
    "normalized-ball-section": "some central section is at most the ball section",
    "width-inradius": "symmetric bodies have width twice the inradius",
    "torus-slab-boundary": "half-slab boundaries attain twice the small-face area",
    "parallelotope-isoperimetry": "half-volume sets have boundary at least the small face",
    "bending-total": "deformed families stay within the skeleton-collar budget",
    "bending-skeleton": "the skeleton part stays within its face budget",
    "bending-collar": "the collar part stays within its crossing budget",
    "cup-power-upper": "cup power families stay under the constructed upper bound",
    "cup-power-lower": "cup power families stay above the partition lower bound",
    "cup-power-partition": "some tile keeps a constant fraction per fiber",
    "algebraic-degree": "degree-d pencil fibers have length at most 2d",
    "filling-boundary": "the constructed filling has the prescribed boundary",
    "filling-ledger-ratio": "filling covers cost at most 2^(k+2)-2 times the cycle cover",
    "filling-cover-independence": "the filling ledger depends only on the input cover",
    "star-census": "first-met stars collect at most 2^k-1 faces",
    "partition-identity": "partition chains satisfy the boundary identity",
    "repro-bytes": "identical config and seed reproduce identical records",
}

# Accepted spellings that map onto registry tags.
_BOUND_ALIASES = {"even-map-pi": "projective-fiber-volume"}


# ---------------------------------------------------------------------------
# option plumbing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Opt:
    """One CLI option: flag name, coercion kind, default, help text."""

    name: str
    kind: str  # int | float | str | flag | floats | ints
    default: Any
    help: str
    choices: tuple | None = None
    required: bool = False


_COMMON = (
    Opt("out", "str", None, "write the JSON document to this path"),
    Opt("csv", "str", None, "also write one CSV table per record kind"),
    Opt("config", "str", None, "INI config file; CLI flags override it"),
    Opt("workers", "int", None, "worker count recorded for the run"),
)


def _coerce(opt: Opt, raw: Any) -> Any:
    if raw is None or not isinstance(raw, str):
        return raw
    try:
        if opt.kind == "int":
            return int(raw)
        if opt.kind == "float":
            return float(raw)
        if opt.kind == "flag":
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if opt.kind == "floats":
            return tuple(float(part) for part in raw.split(",") if part.strip())
        if opt.kind == "ints":
            return tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise UsageError(f"option {opt.name!r} got a malformed value {raw!r}")
    return raw


def _effective_config(command: str, args: argparse.Namespace) -> dict[str, Any]:
    """Defaults, then config-file section values, then explicit flags."""
    spec = _SPECS[command] + _COMMON
    by_name = {opt.name: opt for opt in spec}
    cfg = {opt.name: opt.default for opt in spec}

    path = getattr(args, "config", None)
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        if not parser.read(path):
            raise UsageError(f"config file {path!r} is missing or unreadable")
        if parser.has_section(command):
            own = set(parser.options(command)) - set(parser.defaults())
            for key in own:
                name = key.replace("-", "_")
                if name not in by_name:
                    raise UsageError(
                        f"config section [{command}] has an unknown key {key!r}"
                    )
            for key, raw in parser.items(command):
                name = key.replace("-", "_")
                if name in by_name:
                    cfg[name] = _coerce(by_name[name], raw)
        cfg["config"] = path

    for opt in spec:
        given = getattr(args, opt.name, None)
        if given is not None:
            cfg[opt.name] = _coerce(opt, given)
    for opt in spec:
        if opt.required and cfg[opt.name] is None:
            raise UsageError(f"option --{opt.name.replace('_', '-')} is required")
        if opt.choices is not None and cfg[opt.name] is not None:
            if cfg[opt.name] not in opt.choices:
                raise UsageError(
                    f"option --{opt.name.replace('_', '-')} must be one of "
                    f"{', '.join(map(str, opt.choices))}"
                )
    if cfg["workers"] is None:
        cfg["workers"] = worker_count()
    return cfg


# ---------------------------------------------------------------------------
# record helpers
# ---------------------------------------------------------------------------


def _clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, arrays to lists, keys to str."""
    if isinstance(obj, dict):
        out = {}
        for key, val in obj.items():
            if isinstance(key, tuple):
                key = ",".join(str(part) for part in key)
            out[str(key)] = _clean(val)
        return out
    if isinstance(obj, (list, tuple)):
        return [_clean(item) for item in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(item) for item in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _cert(
    ref: str,
    bound: float,
    measured: float,
    direction: str,
    tolerance: float = 0.0,
    details: dict | None = None,
) -> dict:
    slack = tolerance * abs(bound)
    if direction == "lower":
        ok = measured >= bound - slack
    elif direction == "upper":
        ok = measured <= bound + slack
    else:
        raise UsageError(f"unknown certificate direction {direction!r}")
    cert = Certificate(
        bound_ref=ref,
        bound=float(bound),
        measured=float(measured),
        direction=direction,
        verdict="pass" if ok else "fail",
        tolerance=float(tolerance),
        details=details or {},
    )
    return cert.to_record()


def _cert_pair(ref, exact, measured, rel, details=None) -> list[dict]:
    """Equality within a relative tolerance as a floor and a ceiling."""
    return [
        _cert(ref, exact, measured, "lower", rel, details),
        _cert(ref, exact, measured, "upper", rel, details),
    ]


def _erec(report: EstimateReport, ref: str, **extra) -> dict:
    rec = report.to_record()
    rec["bound_ref"] = ref
    rec.update(extra)
    return rec


def _estimate(value, std, samples, seed, method, ref, details=None, **extra) -> dict:
    rep = EstimateReport(
        value=float(value),
        std_error=float(std),
        samples=int(samples),
        seed=int(seed),
        method=method,
        details=details or {},
    )
    return _erec(rep, ref, **extra)


# ---------------------------------------------------------------------------
# shared object registries
# ---------------------------------------------------------------------------

_FIBER_MAPS: dict[str, Callable] = {
    "hopf3": lambda: hopf_map(3),
    "hopf7": lambda: hopf_map(7),
    "hopf15": lambda: hopf_map(15),
    "rp3": lambda: rp_quotient_of(hopf_map(3)),
    "rp7": lambda: rp_quotient_of(hopf_map(7)),
    "abs-z1-s3": abs_z1_on_s3,
    "abs-z1-rp3": abs_z1_on_rp3,
    "x1sq-rp2": x1_squared_on_rp2,
}

# Default certificate tag per builtin map, where one applies.
_MAP_BOUNDS = {
    "hopf3": "equatorial-fiber-volume",
    "hopf7": "equatorial-fiber-volume",
    "hopf15": "equatorial-fiber-volume",
    "rp3": "projective-fiber-volume",
    "rp7": "projective-fiber-volume",
    "abs-z1-rp3": "projective-torus-area",
    "torus": "torus-fiber-product",
}


def _fiber_map(cfg: dict):
    name = cfg["map"]
    if name == "torus":
        lengths = cfg.get("lengths") or (1.0, 2.0, 3.0)
        kept = cfg.get("kept")
        if kept is None:
            kept = (len(lengths) - 1,)
        return torus_projection(lengths, kept=kept)
    if name not in _FIBER_MAPS:
        known = ", ".join(sorted(_FIBER_MAPS) + ["torus"])
        raise UsageError(f"unknown map {name!r}; choose one of {known}")
    return _FIBER_MAPS[name]()


def _resolve_bound(tag: str) -> str:
    tag = _BOUND_ALIASES.get(tag, tag)
    if tag not in BOUND_REFS:
        known = ", ".join(sorted(BOUND_REFS))
        raise UsageError(f"unknown bound {tag!r}; registry has {known}")
    return tag


def _profile_grid(fmap, size: int, seed: int) -> list:
    if size < 2:
        raise UsageError("grid size must be at least 2")
    target = fmap.target
    if target.kind == "cube":
        return [np.array([t]) for t in np.linspace(0.0, 1.0, size)]
    if target.kind == "sphere":
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(size, target.ambient_dim))
        return list(pts / np.linalg.norm(pts, axis=1, keepdims=True))
    if target.kind == "torus":
        axes = [
            np.linspace(0.0, length, size, endpoint=False)
            for length in target.lengths
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return list(np.stack([m.ravel() for m in mesh], axis=1))
    raise UsageError(f"no profile grid for target kind {target.kind!r}")


def _builtin_mesh(name: str):
    if name == "greatcircle-s2":
        return circle_mesh(np.eye(3)[:2])
    if name == "equator-s1-s3":
        return circle_mesh(np.eye(4)[:2])
    if name == "subsphere-s2-s3":
        return subsphere_mesh(np.eye(4)[:3])
    if name == "clifford-t2-s3":
        r = 1.0 / math.sqrt(2.0)
        return clifford_torus_mesh(r, r)
    raise UsageError(
        "unknown shape; choose greatcircle-s2, equator-s1-s3, "
        "subsphere-s2-s3 or clifford-t2-s3"
    )


def _mesh_from(cfg: dict):
    path, shape = cfg.get("mesh"), cfg.get("shape")
    if (path is None) == (shape is None):
        raise UsageError("give exactly one of --mesh and --shape")
    return read_mesh(path) if path is not None else _builtin_mesh(shape)


def _space_from(text: str) -> SpaceDescriptor:
    kind, _, rest = text.partition(":")
    try:
        if kind == "sphere":
            return SpaceDescriptor.sphere(int(rest))
        if kind == "rp":
            return SpaceDescriptor.real_projective(int(rest))
        if kind == "cube":
            return SpaceDescriptor.cube(int(rest))
        if kind == "ball":
            return SpaceDescriptor.ball(int(rest))
        if kind == "torus":
            return SpaceDescriptor.torus(tuple(float(x) for x in rest.split(",")))
    except ValueError:
        raise UsageError(f"malformed space {text!r}")
    raise UsageError(
        f"unknown space kind {kind!r}; use sphere:N, rp:N, cube:N, ball:N "
        "or torus:a,b,..."
    )


def _convex_body(cfg: dict) -> ConvexBody:
    name, dim = cfg["body"], cfg["dim"]
    if name == "cube":
        return ConvexBody.cube(dim, side=cfg.get("side", 1.0))
    if name == "ball":
        return ConvexBody.p_ball(dim)
    if name == "cross":
        return ConvexBody.p_ball(dim, exponent=1.0)
    if name == "pball":
        return ConvexBody.p_ball(dim, exponent=cfg.get("exponent", 2.0))
    if name == "ball-product":
        blocks = cfg.get("blocks")
        if not blocks:
            raise UsageError("--blocks is required for body ball-product")
        return ConvexBody.product_of_balls(blocks)
    raise UsageError(
        f"unknown body {name!r}; choose cube, ball, cross, pball or ball-product"
    )


# ---------------------------------------------------------------------------
# randomized relative cycles for the filling demos
# ---------------------------------------------------------------------------


def _fr_point(coords) -> tuple:
    return tuple(Fraction(float(c)) for c in coords)


def _segment(a, b) -> tuple:
    return tuple(sorted((a, b)))


def _rand_loop(rng, n: int) -> Mod2Chain:
    count = int(rng.integers(3, 9))
    pts = [_fr_point(rng.uniform(0.1, 0.9, size=n)) for _ in range(count)]
    sides = tuple(_segment(pts[i], pts[(i + 1) % count]) for i in range(count))
    return Mod2Chain(1, sides)


def _rand_path(rng, n: int) -> Mod2Chain:
    # At least two segments: a single wall-to-wall edge would lie entirely
    # inside the cube boundary and is not a fillable input.
    count = int(rng.integers(2, 7))
    pts = [_fr_point(rng.uniform(0.1, 0.9, size=n)) for _ in range(count + 1)]
    pts[0] = (Fraction(0),) + pts[0][1:]
    pts[-1] = (Fraction(1),) + pts[-1][1:]
    return Mod2Chain(1, tuple(_segment(pts[i], pts[i + 1]) for i in range(count)))


def _rand_points(rng, n: int) -> Mod2Chain:
    count = int(rng.integers(1, 5))
    pts = {_fr_point(rng.uniform(0.1, 0.9, size=n)) for _ in range(count)}
    return Mod2Chain(0, tuple((p,) for p in pts))


def _rand_surface(rng) -> Mod2Chain:
    count = int(rng.integers(1, 4))
    tets = []
    for _ in range(count):
        corners = rng.uniform(0.15, 0.85, size=(4, 3))
        tets.append(tuple(_fr_point(row) for row in corners))
    return boundary(Mod2Chain(3, tuple(tets)))


def _demo_cycle(rng, n: int, k: int) -> Mod2Chain:
    if k == 0:
        return _rand_points(rng, n)
    if k == 1:
        return _rand_loop(rng, n) if rng.random() < 0.5 else _rand_path(rng, n)
    if k == 2 and n == 3:
        return _rand_surface(rng)
    raise UsageError(f"no cycle generator for dimension {k} in the {n}-cube")


def _bounding_ledger(z: Mod2Chain, pad: float = 0.05) -> CoverLedger:
    corners, edges = [], []
    for simplex in z.simplices:
        arr = np.array([[float(c) for c in v] for v in simplex])
        lo, hi = arr.min(axis=0), arr.max(axis=0)
        edge = min(float((hi - lo).max()) + 2 * pad, 1.0)
        corners.append(np.clip(lo - pad, 0.0, 1.0 - edge))
        edges.append(edge)
    cover = CubeCover(np.array(corners), np.array(edges))
    return CoverLedger.from_cover(cover, z.dim)


def _random_complex(rng, dim: int) -> tuple:
    vertex_count = int(rng.integers(dim + 1, dim + 6))
    simplex_count = int(rng.integers(1, 6))
    tops = set()
    for _ in range(simplex_count):
        picked = rng.choice(vertex_count, size=dim + 1, replace=False)
        tops.add(tuple(sorted(int(v) for v in picked)))
    return tuple(sorted(tops))


def _random_partition(rng, n: int, resolution: int, parts: int) -> list[np.ndarray]:
    labels = rng.integers(0, parts, size=(resolution,) * n)
    # Relabel so every part is nonempty; empty parts make no chains.
    present = np.unique(labels)
    flat = np.searchsorted(present, labels)
    return [flat == i for i in range(len(present))]


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _run_waist_verify(cfg: dict) -> list[dict]:
    fmap = _fiber_map(cfg)
    tag = _resolve_bound(cfg["bound"])
    grid = None
    if cfg["grid_size"] is not None:
        grid = _profile_grid(fmap, cfg["grid_size"], cfg["seed"])
    cert = verify_waist_bound(fmap, tag, tolerance=cfg["tolerance"], y_grid=grid)
    return [cert.to_record()]


def _run_waist_profile(cfg: dict) -> list[dict]:
    fmap = _fiber_map(cfg)
    grid = _profile_grid(fmap, cfg["grid_size"], cfg["seed"])
    profile = waist_profile(fmap, grid)
    records = [
        _estimate(
            vol, 0.0, 1, cfg["seed"], "waist-profile", "waist-profile",
            details={"y": _clean(point), "map": fmap.kind},
        )
        for point, vol in zip(profile.points, profile.volumes)
    ]
    tag = _MAP_BOUNDS.get(cfg["map"])
    if tag is not None:
        records.append(verify_waist_bound(fmap, tag, y_grid=grid).to_record())
    return records


def _run_crofton_estimate(cfg: dict) -> list[dict]:
    mesh = _mesh_from(cfg)
    if cfg["euclidean"]:
        rep = cauchy_crofton_euclidean(
            mesh, cfg["samples"], cfg["seed"], bounding_radius=cfg["radius"]
        )
    else:
        rep = crofton_volume(mesh, cfg["codim"], cfg["samples"], cfg["seed"])
    records = [_erec(rep, "crofton-calibration")]
    if cfg["expect"] is not None:
        records += _cert_pair(
            "crofton-calibration", cfg["expect"], rep.value, cfg["rel_tol"]
        )
    return records


def _run_content_minkowski(cfg: dict) -> list[dict]:
    space = _space_from(cfg["space"])
    mesh = _mesh_from(cfg)
    rep = lower_minkowski_content(
        space, mesh, cfg["codim"], cfg["schedule"], cfg["samples"], cfg["seed"],
        model=cfg["model"],
    )
    records = [_erec(rep, "minkowski-content")]
    if cfg["expect"] is not None:
        records += _cert_pair(
            "minkowski-content", cfg["expect"], rep.value, cfg["rel_tol"]
        )
    return records


def _run_transport_check(cfg: dict) -> list[dict]:
    wanted = cfg["maps"]
    pairs = [(name, tmap) for name, tmap in builtin_transports()
             if wanted == "all" or name in set(wanted.split(","))]
    if not pairs:
        raise UsageError(f"no builtin transport matches {cfg['maps']!r}")
    gaussian_names = {name for name, _ in gaussian_transports()}
    tol = cfg["tolerance"]
    records = []
    for index, (name, tmap) in enumerate(pairs):
        rng = np.random.default_rng((cfg["seed"], 0x11, index))
        worst = 0.0
        for _ in range(cfg["points"]):
            x = rng.normal(size=tmap.dim_in)
            if name not in gaussian_names:
                x /= np.linalg.norm(x)
            worst = max(worst, float(jacobian_singular_values(tmap, x)[0]))
        records.append(
            _cert("gaussian-lipschitz", 1.0, worst, "upper", tol,
                  {"map": name, "points": cfg["points"]})
        )
    gauss_pairs = [(n, t) for n, t in pairs if n in gaussian_names]
    if gauss_pairs and cfg["det_pairs"] > 0:
        rng = np.random.default_rng((cfg["seed"], 0xDE7))
        worst = math.inf
        for i in range(cfg["det_pairs"]):
            name, tmap = gauss_pairs[i % len(gauss_pairs)]
            n = tmap.dim_in
            x = rng.normal(size=n) * 0.8
            k = int(rng.integers(1, n + 1))
            frame, _ = np.linalg.qr(rng.normal(size=(n, k)))
            det = restricted_determinant(tmap, x, frame)
            worst = min(worst, det / gaussian_rho(x))
        records.append(
            _cert("restricted-determinant", 1.0, worst, "lower", tol,
                  {"pairs": cfg["det_pairs"], "maps": len(gauss_pairs)})
        )
    return records


def _run_convex_width(cfg: dict) -> list[dict]:
    body = _convex_body(cfg)
    w, direction = width(body, starts=cfg["starts"])
    radius, _ = inscribed_touching_pair(body, starts=cfg["starts"])
    gap = abs(2.0 * radius - w) / w
    return [
        _estimate(w, 0.0, cfg["starts"], 0, "support-width", "width-inradius",
                  details={"body": body.kind, "dim": body.dim,
                           "direction": _clean(direction)}),
        _estimate(radius, 0.0, cfg["starts"], 0, "inscribed-radius",
                  "width-inradius", details={"body": body.kind}),
        _cert("width-inradius", cfg["tolerance"], gap, "upper", 0.0,
              {"body": body.kind, "dim": body.dim, "width": w,
               "inradius": radius}),
    ]


def _run_convex_section(cfg: dict) -> list[dict]:
    body = _convex_body(cfg)
    axes = cfg["axes"]
    if axes is None:
        axes = tuple(range(body.dim - cfg["codim"]))
    if any(a < 0 or a >= body.dim for a in axes):
        raise UsageError("section axes must index body coordinates")
    frame = np.eye(body.dim)[list(axes)]
    rep = central_section_volume(body, frame, samples=cfg["samples"],
                                 seed=cfg["seed"])
    records = [_erec(rep, "central-section")]
    if cfg["expect"] is not None:
        records += _cert_pair("central-section", cfg["expect"], rep.value,
                              cfg["rel_tol"])
    return records


def _run_convex_zhang(cfg: dict) -> list[dict]:
    body = _convex_body(cfg)
    result = min_section_search(
        body, cfg["codim"], restarts=cfg["restarts"], steps=cfg["steps"],
        samples=cfg["samples"], seed=cfg["seed"],
    )
    return [
        _erec(result.report, "normalized-ball-section"),
        result.certificate.to_record(),
    ]


def _run_iso_torus(cfg: dict) -> list[dict]:
    lengths = cfg["lengths"]
    field = half_slab(lengths, cfg["resolution"], axis=cfg["axis"])
    rep = boundary_content(field)
    axis = cfg["axis"] % len(lengths)
    exact = 2.0 * float(np.prod([l for i, l in enumerate(lengths) if i != axis]))
    records = [_erec(rep, "torus-slab-boundary")]
    records += _cert_pair(
        "torus-slab-boundary", exact, rep.value, cfg["rel_tol"],
        {"lengths": list(lengths), "resolution": cfg["resolution"]},
    )
    return records


def _run_iso_box(cfg: dict) -> list[dict]:
    lengths = cfg["lengths"]
    bound = float(np.prod(lengths[:-1])) if len(lengths) > 1 else 1.0
    values = []
    for i in range(cfg["sets"]):
        field = random_half_volume(
            lengths, cfg["resolution"], seed=cfg["seed"] * 1000 + i,
            smoothing=cfg["smoothing"], periodic=False,
        )
        values.append(boundary_content(field).value)
    records = [
        _estimate(
            min(values), 0.0, cfg["sets"], cfg["seed"], "boundary-content-min",
            "parallelotope-isoperimetry",
            details={"mean": float(np.mean(values)), "sets": cfg["sets"],
                     "resolution": cfg["resolution"]},
        ),
        _cert("parallelotope-isoperimetry", bound, min(values), "lower", 0.05,
              {"sets": cfg["sets"], "lengths": list(lengths)}),
    ]
    return records


def _bend_records(sub: int, seed: int) -> list[dict]:
    p = sub * sub
    root = float(sub)
    family = random_flat_family(2, 1, p, seed=seed)
    rep = deform_family(family, Grid(2, sub))
    details = {"p": p, "subdivisions": sub, "epsilon": rep.epsilon,
               "resolution": rep.resolution}
    return [
        _estimate(rep.total, 0.0, p, seed, "bending-total", "bending-total",
                  details=details),
        _estimate(rep.volume_z1, 0.0, p, seed, "bending-skeleton",
                  "bending-skeleton", details={"p": p}),
        _estimate(rep.volume_z2, 0.0, p, seed, "bending-collar",
                  "bending-collar", details={"p": p}),
        _cert("bending-total", 4.0 * root + 2.0, rep.total, "upper", 0.0,
              {"p": p}),
        _cert("bending-total", 0.95 * root, rep.total, "lower", 0.0, {"p": p}),
        _cert("bending-skeleton", 2.0 * root + 2.0, rep.volume_z1, "upper",
              0.0, {"p": p}),
        _cert("bending-collar", 2.0 * root, rep.volume_z2, "upper", 0.0,
              {"p": p}),
    ]


def _run_sweepout_bend(cfg: dict) -> list[dict]:
    if (cfg["dim"], cfg["k"]) != (2, 1):
        raise UsageError("bend certificates are calibrated for --dim 2 --k 1")
    return _bend_records(cfg["subdivisions"], cfg["seed"])


def _run_sweepout_cup(cfg: dict) -> list[dict]:
    report = cup_bound_check(
        cfg["dim"], cfg["k"], cfg["subdivisions"], trials=cfg["trials"],
        seed=cfg["seed"],
    )
    records = [
        _estimate(
            row["total"], 0.0, report.cube_count, cfg["seed"], "cup-trial",
            "cup-power-upper", details=dict(row),
        )
        for row in report.rows
    ]
    records += [cert.to_record() for cert in report.certificates]
    return records


def _run_sweepout_algebraic(cfg: dict) -> list[dict]:
    rep = algebraic_family_volume(cfg["degree"], lines=cfg["lines"],
                                  seed=cfg["seed"])
    bound = float(rep.details["bound"])
    tol = 3.0 * rep.std_error / bound if bound else 0.0
    return [
        _erec(rep, "algebraic-degree"),
        _cert("algebraic-degree", bound, rep.value, "upper", tol,
              {"degree": cfg["degree"]}),
    ]


def _run_fill_demo(cfg: dict) -> list[dict]:
    if not 1 <= cfg["n"] <= 3:
        raise UsageError("the demo runs in ambient dimension 1, 2 or 3")
    if not 0 <= cfg["k"] < cfg["n"]:
        raise UsageError("cycle dimension must be below the ambient dimension")
    rng = np.random.default_rng(cfg["seed"])
    records = []
    for index in range(cfg["cycles"]):
        z = _demo_cycle(rng, cfg["n"], cfg["k"])
        ledger = _bounding_ledger(z)
        filled, out = fill(z, ledger)
        exact = boundary(filled) == z if filled.dim >= 1 else z.is_empty
        ratio = out.weight / ledger.weight if ledger.weight > 0 else 0.0
        details = {"cycle": index, "simplices": len(z),
                   "filling_simplices": len(filled)}
        records.append(
            _cert("filling-boundary", 1.0, 1.0 if exact else 0.0, "lower",
                  0.0, details)
        )
        records.append(
            _cert("filling-ledger-ratio", float(filling_constant(cfg["k"])),
                  ratio, "upper", 0.0, details)
        )
    return records


def _run_fill_assign(cfg: dict) -> list[dict]:
    if not 1 <= cfg["dim"] <= 3:
        raise UsageError("star censuses are checked for dimensions 1 to 3")
    rng = np.random.default_rng(cfg["seed"])
    records = []
    for index in range(cfg["complexes"]):
        tops = _random_complex(rng, cfg["dim"])
        result = star_assignment(tops)
        records.append(
            _cert("star-census", float(result.bound),
                  float(result.max_set_size), "upper", 0.0,
                  {"complex": index, "maximal_simplices": len(tops)})
        )
    return records


def _run_fill_partition(cfg: dict) -> list[dict]:
    if not 1 <= cfg["n"] <= 3:
        raise UsageError("partitions are checked in dimensions 1 to 3")
    if not 2 <= cfg["parts"] <= 6:
        raise UsageError("use between 2 and 6 parts")
    rng = np.random.default_rng(cfg["seed"])
    masks = _random_partition(rng, cfg["n"], cfg["resolution"], cfg["parts"])
    report = partition_boundary_identity(masks)
    return [
        _cert("partition-identity", float(report.identities_checked),
              float(report.identities_checked - len(report.failures)),
              "lower", 0.0,
              {"parts": report.part_count, "dim": report.dim,
               "chain_sizes": _clean(report.chain_sizes)}),
    ]


# ---------------------------------------------------------------------------
# acceptance suite criteria
# ---------------------------------------------------------------------------


def _crit_vaaler(seed: int) -> list[dict]:
    records = []
    for n in range(2, 7):
        body = ConvexBody.cube(n)
        rng = np.random.default_rng((seed, 0xA1, n))
        worst = math.inf
        for i in range(100):
            basis, _ = np.linalg.qr(rng.normal(size=(n, n)))
            rep = central_section_volume(
                body, basis[:, : n - 1].T, samples=100_000,
                seed=seed * 100_000 + n * 1000 + i,
            )
            worst = min(worst, rep.value + 3.0 * rep.std_error)
        records.append(
            _cert("cube-section-vaaler", 1.0, worst, "lower", 0.0,
                  {"dim": n, "sections": 100, "samples": 100_000})
        )
    return records


def _crit_crofton(seed: int) -> list[dict]:
    records = []
    for shape, codim in (("greatcircle-s2", 1), ("equator-s1-s3", 2)):
        rep = crofton_volume(_builtin_mesh(shape), codim, 10_000, seed)
        records.append(_erec(rep, "crofton-calibration", shape=shape))
        records += _cert_pair(
            "crofton-calibration", 2.0 * math.pi, rep.value, 0.02,
            {"shape": shape, "codim": codim},
        )
    return records


def _crit_transport(seed: int) -> list[dict]:
    cfg = {"maps": "all", "points": 1000, "det_pairs": 100, "seed": seed,
           "tolerance": 1e-6}
    return _run_transport_check(cfg)


def _crit_mass(seed: int) -> list[dict]:
    records = []
    for n, m in ((1, 1), (2, 1), (1, 2)):
        if n == 1:
            total = quad(lambda t: density_mu_m(1, m, [t]), -1.0, 1.0)[0]
        else:
            total = quad(
                lambda r: 2.0 * math.pi * r * density_mu_m(2, m, [r, 0.0]),
                0.0, 1.0,
            )[0]
        records += _cert_pair("radial-mass", sphere_volume(n + m), total,
                              0.005, {"n": n, "m": m})
    radii = np.linspace(0.0, 1.5, 16)
    worst = 0.0
    for r in radii:
        values = [density_rho_m(m, [r, 0.0]) for m in (10, 100, 1000)]
        gauss = math.exp(-math.pi * r * r)
        steps = np.diff(values + [gauss])
        worst = max(worst, float(-steps.min()))
    records.append(
        _cert("smoothing-monotone", 1e-12, worst, "upper", 0.0,
              {"orders": [10, 100, 1000], "points": len(radii)})
    )
    return records


def _crit_pullback(seed: int) -> list[dict]:
    lhs = quad(lambda t: density_mu_m(2, 1, [t, 0.0]), -1.0, 1.0)[0]
    rhs = sphere_volume(2)
    records = [
        _estimate(lhs, 0.0, 1, seed, "diameter-pullback-mass",
                  "pullback-equality", details={"n": 2, "m": 1}),
    ]
    records += _cert_pair("pullback-equality", rhs, lhs, 0.005,
                          {"n": 2, "m": 1})
    return records


# Meshed cross-check settings: schedules stay where the even-power fit
# has negligible truncation bias and the sample counts pin the realized
# error well inside the 1 percent gate.
_WIDE3 = (0.5, 0.42, 0.35, 0.29, 0.24, 0.2)
_WIDE7 = (0.7, 0.6, 0.5, 0.42, 0.35, 0.3)

_FIBRATION_CASES = (
    ("hopf3", "equatorial-fiber-volume", 2.0 * math.pi, "sphere", 3, 2,
     256, _WIDE3, 1_000_000, 21),
    ("rp3", "projective-fiber-volume", math.pi, "rp", 3, 2,
     256, _WIDE3, 2_000_000, 22),
    ("abs-z1-rp3", "projective-torus-area", math.pi**2, "rp", 3, 1,
     48, (0.3, 0.25, 0.2, 0.15), 400_000, 23),
    ("hopf7", "equatorial-fiber-volume", 2.0 * math.pi**2, "sphere", 7, 4,
     12, _WIDE7, 400_000, 21),
    ("rp7", "projective-fiber-volume", math.pi**2, "rp", 7, 4,
     12, _WIDE7, 400_000, 24),
)


def _best_point(name: str, fmap):
    if name == "abs-z1-rp3":
        return np.array([1.0 / math.sqrt(2.0)])
    if fmap.target.ambient_dim == 3:
        return np.eye(3)[2]
    return np.eye(fmap.target.ambient_dim)[0]


def _crit_fibrations(seed: int) -> list[dict]:
    records = []
    for (name, tag, exact, space_kind, space_dim, codim, resolution,
         schedule, samples, mesh_seed) in _FIBRATION_CASES:
        fmap = _FIBER_MAPS[name]()
        best = _best_point(name, fmap)
        measured = fiber_volume(fmap, best)
        records += _cert_pair(tag, exact, measured, 1e-6, {"map": name})
        grid = None
        if name == "abs-z1-rp3":
            grid = [np.array([t]) for t in
                    sorted(set(np.linspace(0.0, 1.0, 201)) | {float(best[0])})]
        records.append(
            verify_waist_bound(fmap, tag, tolerance=1e-6,
                               y_grid=grid).to_record()
        )
        mesh = fiber_mesh(fmap, best if best.size > 1 else float(best[0]),
                          resolution)
        space = (SpaceDescriptor.sphere(space_dim) if space_kind == "sphere"
                 else SpaceDescriptor.real_projective(space_dim))
        rep = lower_minkowski_content(
            space, mesh, codim, schedule, samples, seed=seed * 100 + mesh_seed,
            model="even",
        )
        records.append(_erec(rep, "minkowski-content", map=name))
        records += _cert_pair("minkowski-content", exact, rep.value, 0.01,
                              {"map": name, "resolution": resolution})
    return records


def _crit_torus(seed: int) -> list[dict]:
    fmap = torus_projection((1.0, 2.0, 3.0), kept=(2,))
    measured = fiber_volume(fmap, np.array([0.0]))
    records = [verify_waist_bound(fmap, "torus-fiber-product").to_record()]
    records += _cert_pair("torus-fiber-product", 2.0, measured, 0.0,
                          {"lengths": [1.0, 2.0, 3.0], "kept": [2]})
    for lengths in ((1.0,), (1.0, 2.0)):
        field = half_slab(lengths, 256)
        rep = boundary_content(field)
        exact = 2.0 * float(np.prod(lengths[:-1])) if len(lengths) > 1 else 2.0
        records.append(_erec(rep, "torus-slab-boundary",
                             lengths=list(lengths)))
        records += _cert_pair("torus-slab-boundary", exact, rep.value, 0.05,
                              {"lengths": list(lengths), "resolution": 256})
    return records


def _crit_halfsets(seed: int) -> list[dict]:
    cfg = {"lengths": (1.0, 1.0), "resolution": 256, "sets": 50, "seed": seed,
           "smoothing": 10.0}
    return _run_iso_box(cfg)


def _crit_convex(seed: int) -> list[dict]:
    bodies = [ConvexBody.cube(n) for n in (2, 3, 4)]
    bodies += [ConvexBody.p_ball(n) for n in (2, 3, 4)]
    bodies += [ConvexBody.p_ball(n, exponent=1.0) for n in (2, 3, 4)]
    bodies.append(ConvexBody.product_of_balls((2, 3)))
    records = []
    for body in bodies:
        w, _ = width(body)
        radius, _ = inscribed_touching_pair(body)
        gap = abs(2.0 * radius - w) / w
        records.append(
            _cert("width-inradius", 1e-6, gap, "upper", 0.0,
                  {"body": body.kind, "dim": body.dim, "width": w,
                   "inradius": radius})
        )
    for n in range(2, 6):
        for body in (ConvexBody.cube(n), ConvexBody.p_ball(n, exponent=1.0)):
            result = min_section_search(
                body, 1, restarts=4, steps=40, samples=20_000,
                seed=seed * 10 + n,
            )
            records.append(_erec(result.report, "normalized-ball-section",
                                 body=body.kind, dim=n))
            records.append(result.certificate.to_record())
    return records


def _crit_bending(seed: int) -> list[dict]:
    records = []
    for sub in range(2, 9):
        records += _bend_records(sub, seed * 100 + sub)
    return records


def _crit_filling(seed: int) -> list[dict]:
    rng = np.random.default_rng((seed, 0xF1))
    plans = []
    while len(plans) < 200:
        plans.append((2, 0))
        plans.append((2, 1))
        plans.append((3, 1))
        plans.append((3, 2))
        plans.append((3, 0))
    plans = plans[:200]
    exact_count = 0
    worst_ratio = 0.0
    for n, k in plans:
        z = _demo_cycle(rng, n, k)
        ledger = _bounding_ledger(z)
        filled, out = fill(z, ledger)
        exact = boundary(filled) == z if filled.dim >= 1 else z.is_empty
        exact_count += bool(exact)
        if ledger.weight > 0:
            ratio = out.weight / ledger.weight / filling_constant(k)
            worst_ratio = max(worst_ratio, ratio)
    records = [
        _cert("filling-boundary", 1.0, exact_count / 200.0, "lower", 0.0,
              {"cycles": 200}),
        _cert("filling-ledger-ratio", 1.0, worst_ratio, "upper", 0.0,
              {"cycles": 200, "normalized": True}),
    ]
    cover = CubeCover(
        np.array([[0.1, 0.1], [0.45, 0.3], [0.2, 0.55]]),
        np.array([0.4, 0.45, 0.42]),
    )
    loops = (
        ((Fraction(1, 5), Fraction(1, 5)), (Fraction(1, 2), Fraction(2, 5)),
         (Fraction(3, 10), Fraction(7, 10))),
        ((Fraction(1, 4), Fraction(1, 4)), (Fraction(11, 20), Fraction(7, 20)),
         (Fraction(2, 5), Fraction(4, 5)), (Fraction(1, 5), Fraction(3, 5))),
    )
    chains = [
        Mod2Chain(1, tuple(_segment(pts[i], pts[(i + 1) % len(pts)])
                           for i in range(len(pts))))
        for pts in loops
    ]
    ledgers = [fill(z, CoverLedger.from_cover(cover, 1))[1] for z in chains]
    same = (
        np.array_equal(ledgers[0].cover.corners, ledgers[1].cover.corners)
        and np.array_equal(ledgers[0].cover.edges, ledgers[1].cover.edges)
        and ledgers[0].k == ledgers[1].k
        and ledgers[0].weight == ledgers[1].weight
    )
    records.append(
        _cert("filling-cover-independence", 1.0, 1.0 if same else 0.0,
              "lower", 0.0, {"cycles": 2, "cubes": 3})
    )
    rng = np.random.default_rng((seed, 0x57A))
    for k in (1, 2, 3):
        worst = 0
        for _ in range(10):
            result = star_assignment(_random_complex(rng, k))
            worst = max(worst, result.max_set_size)
        records.append(
            _cert("star-census", float(2**k - 1), float(worst), "upper", 0.0,
                  {"dim": k, "complexes": 10})
        )
    return records


def _crit_repro(seed: int) -> list[dict]:
    def snapshot() -> str:
        recs = [crofton_volume(_builtin_mesh("greatcircle-s2"), 1, 2000,
                               seed).to_record()]
        recs += [cert.to_record()
                 for cert in cup_bound_check(2, 1, 2, trials=2,
                                             seed=seed).certificates]
        return json.dumps(_clean(recs), sort_keys=True)

    first, second = snapshot(), snapshot()
    return [
        _cert("repro-bytes", 1.0, 1.0 if first == second else 0.0, "lower",
              0.0, {"bytes": len(first)})
    ]


SUITE_CRITERIA: tuple[tuple[str, Callable[[int], list[dict]]], ...] = (
    ("vaaler", _crit_vaaler),
    ("crofton", _crit_crofton),
    ("transport", _crit_transport),
    ("mass", _crit_mass),
    ("pullback", _crit_pullback),
    ("fibrations", _crit_fibrations),
    ("torus", _crit_torus),
    ("halfsets", _crit_halfsets),
    ("convex", _crit_convex),
    ("bending", _crit_bending),
    ("filling", _crit_filling),
    ("repro", _crit_repro),
)

SUITE_NAMES = tuple(name for name, _ in SUITE_CRITERIA)


def run_criterion(name: str, seed: int = 0) -> tuple[list[dict], bool]:
    """Run one acceptance criterion; returns (records, all certificates pass)."""
    table = dict(SUITE_CRITERIA)
    if name not in table:
        raise UsageError(
            f"unknown criterion {name!r}; choose from {', '.join(SUITE_NAMES)}"
        )
    records = [_clean(rec) for rec in table[name](seed)]
    return records, _all_pass(records)


def _run_suite(cfg: dict) -> list[dict]:
    selected = SUITE_NAMES
    if cfg["only"] is not None:
        wanted = tuple(part.strip() for part in cfg["only"].split(",")
                       if part.strip())
        unknown = [name for name in wanted if name not in SUITE_NAMES]
        if unknown:
            raise UsageError(
                f"unknown criteria {', '.join(unknown)}; "
                f"choose from {', '.join(SUITE_NAMES)}"
            )
        selected = wanted
    table = dict(SUITE_CRITERIA)
    records = []
    for name in selected:
        for rec in table[name](cfg["seed"]):
            rec = dict(rec)
            rec["criterion"] = name
            records.append(rec)
    return records


# ---------------------------------------------------------------------------
# document assembly and output
# ---------------------------------------------------------------------------


def _all_pass(records: list[dict]) -> bool:
    return all(rec["verdict"] == "pass" for rec in records
               if rec.get("kind") == "certificate")


def _document(command: str, cfg: dict, records: list[dict],
              elapsed: float) -> dict:
    shown = {key: _clean(val) for key, val in cfg.items()}
    return {
        "tool": TOOL,
        "version": VERSION,
        "schema": SCHEMA,
        "command": command,
        "config": shown,
        "records": [_clean(rec) for rec in records],
        "passed": _all_pass(records),
        "timing_seconds": elapsed,
    }


def _csv_cell(value: Any) -> Any:
    if isinstance(value, (dict, list)):
        return json.dumps(value, sort_keys=True)
    return value


def _write_csv(path: str, records: list[dict]) -> None:
    by_kind: dict[str, list[dict]] = {}
    for rec in records:
        by_kind.setdefault(rec.get("kind", "record"), []).append(rec)
    stem, ext = os.path.splitext(path)
    for kind, rows in sorted(by_kind.items()):
        columns = sorted({key for row in rows for key in row})
        target = f"{stem}-{kind}{ext or '.csv'}"
        with open(target, "w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_csv_cell(row.get(col, "")) for col in columns])


def _emit(doc: dict, cfg: dict) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if cfg.get("out"):
        with open(cfg["out"], "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)
    if cfg.get("csv"):
        _write_csv(cfg["csv"], doc["records"])
    certs = [rec for rec in doc["records"]
             if rec.get("kind") == "certificate"]
    failed = sum(rec["verdict"] != "pass" for rec in certs)
    print(
        f"{doc['command']}: {'pass' if doc['passed'] else 'FAIL'} "
        f"({len(certs)} certificates, {failed} failing)",
        file=sys.stderr,
    )


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

_SEED = Opt("seed", "int", 0, "seed for every random draw in the run")

_SPECS: dict[str, tuple[Opt, ...]] = {
    "waist verify": (
        Opt("map", "str", None, "builtin map name", required=True),
        Opt("bound", "str", None, "bound registry tag", required=True),
        Opt("tolerance", "float", 1e-3, "relative slack for the bound"),
        Opt("grid_size", "int", None, "override the target grid size"),
        Opt("lengths", "floats", None, "torus lengths, ascending"),
        Opt("kept", "ints", None, "kept coordinates of the torus projection"),
        _SEED,
    ),
    "waist profile": (
        Opt("map", "str", None, "builtin map name", required=True),
        Opt("grid_size", "int", 201, "number of target grid points"),
        Opt("lengths", "floats", None, "torus lengths, ascending"),
        Opt("kept", "ints", None, "kept coordinates of the torus projection"),
        _SEED,
    ),
    "crofton estimate": (
        Opt("mesh", "str", None, "path of a mesh file"),
        Opt("shape", "str", None, "builtin mesh name"),
        Opt("codim", "int", 1, "codimension of the mesh in the sphere"),
        Opt("samples", "int", 10_000, "number of random equators"),
        Opt("euclidean", "flag", False, "use affine flats in euclidean space"),
        Opt("radius", "float", None, "bounding radius for euclidean flats"),
        Opt("expect", "float", None, "certify the estimate against this value"),
        Opt("rel_tol", "float", 0.02, "relative tolerance for --expect"),
        _SEED,
    ),
    "content minkowski": (
        Opt("space", "str", None, "ambient space, e.g. sphere:3 or rp:3",
            required=True),
        Opt("mesh", "str", None, "path of a mesh file"),
        Opt("shape", "str", None, "builtin mesh name"),
        Opt("codim", "int", None, "codimension of the subset", required=True),
        Opt("schedule", "floats", (0.35, 0.3, 0.25, 0.2),
            "decreasing neighborhood radii"),
        Opt("samples", "int", 200_000, "Monte Carlo samples"),
        Opt("model", "str", "even", "extrapolation model",
            choices=("linear", "even")),
        Opt("expect", "float", None, "certify the estimate against this value"),
        Opt("rel_tol", "float", 0.02, "relative tolerance for --expect"),
        _SEED,
    ),
    "transport check": (
        Opt("maps", "str", "all", "comma list of builtin maps, or all"),
        Opt("points", "int", 1000, "points per map for the Lipschitz check"),
        Opt("det_pairs", "int", 100, "(point, subspace) pairs for determinants"),
        Opt("tolerance", "float", 1e-6, "relative slack for both checks"),
        _SEED,
    ),
    "convex width": (
        Opt("body", "str", None, "body name", required=True),
        Opt("dim", "int", 3, "body dimension"),
        Opt("exponent", "float", 2.0, "p for pball bodies"),
        Opt("side", "float", 1.0, "side length for cubes"),
        Opt("blocks", "ints", None, "block dims for ball-product"),
        Opt("starts", "int", 64, "direction starts for the search"),
        Opt("tolerance", "float", 1e-6, "relative width/inradius gap"),
    ),
    "convex section": (
        Opt("body", "str", None, "body name", required=True),
        Opt("dim", "int", 3, "body dimension"),
        Opt("exponent", "float", 2.0, "p for pball bodies"),
        Opt("side", "float", 1.0, "side length for cubes"),
        Opt("blocks", "ints", None, "block dims for ball-product"),
        Opt("axes", "ints", None, "coordinates spanning the section"),
        Opt("codim", "int", 1, "codimension when --axes is omitted"),
        Opt("samples", "int", 100_000, "Monte Carlo samples"),
        Opt("expect", "float", None, "certify the estimate against this value"),
        Opt("rel_tol", "float", 0.02, "relative tolerance for --expect"),
        _SEED,
    ),
    "convex zhang": (
        Opt("body", "str", None, "body name", required=True),
        Opt("dim", "int", 3, "body dimension"),
        Opt("exponent", "float", 2.0, "p for pball bodies"),
        Opt("side", "float", 1.0, "side length for cubes"),
        Opt("blocks", "ints", None, "block dims for ball-product"),
        Opt("codim", "int", 1, "section codimension"),
        Opt("restarts", "int", 4, "random restarts of the descent"),
        Opt("steps", "int", 40, "descent steps per restart"),
        Opt("samples", "int", 20_000, "Monte Carlo samples per evaluation"),
        _SEED,
    ),
    "iso torus": (
        Opt("lengths", "floats", (1.0, 2.0), "torus side lengths"),
        Opt("resolution", "int", 256, "grid resolution per axis"),
        Opt("axis", "int", -1, "slab axis"),
        Opt("rel_tol", "float", 0.05, "relative tolerance for the content"),
    ),
    "iso box": (
        Opt("lengths", "floats", (1.0, 1.0), "box side lengths"),
        Opt("resolution", "int", 256, "grid resolution per axis"),
        Opt("sets", "int", 50, "number of random half-volume sets"),
        Opt("smoothing", "float", 10.0, "Gaussian smoothing of the noise"),
        _SEED,
    ),
    "sweepout bend": (
        Opt("dim", "int", 2, "ambient dimension"),
        Opt("k", "int", 1, "parameter dimension"),
        Opt("subdivisions", "int", None, "grid subdivisions per side",
            required=True),
        _SEED,
    ),
    "sweepout cup": (
        Opt("dim", "int", 2, "ambient dimension"),
        Opt("k", "int", 1, "parameter dimension"),
        Opt("subdivisions", "int", 2, "grid subdivisions per side"),
        Opt("trials", "int", 8, "random families to try"),
        _SEED,
    ),
    "sweepout algebraic": (
        Opt("degree", "int", None, "pencil degree", required=True),
        Opt("lines", "int", 4096, "sampling lines"),
        _SEED,
    ),
    "fill demo": (
        Opt("n", "int", 2, "ambient cube dimension"),
        Opt("k", "int", 0, "cycle dimension"),
        Opt("cycles", "int", 5, "number of random cycles"),
        _SEED,
    ),
    "fill assign": (
        Opt("dim", "int", 2, "complex dimension"),
        Opt("complexes", "int", 10, "number of random complexes"),
        _SEED,
    ),
    "fill partition": (
        Opt("n", "int", 2, "ambient cube dimension"),
        Opt("resolution", "int", 16, "labels per axis"),
        Opt("parts", "int", 3, "number of parts"),
        _SEED,
    ),
    "suite": (
        Opt("only", "str", None, "comma list of criteria to run"),
        _SEED,
    ),
}

_HANDLERS: dict[str, Callable[[dict], list[dict]]] = {
    "waist verify": _run_waist_verify,
    "waist profile": _run_waist_profile,
    "crofton estimate": _run_crofton_estimate,
    "content minkowski": _run_content_minkowski,
    "transport check": _run_transport_check,
    "convex width": _run_convex_width,
    "convex section": _run_convex_section,
    "convex zhang": _run_convex_zhang,
    "iso torus": _run_iso_torus,
    "iso box": _run_iso_box,
    "sweepout bend": _run_sweepout_bend,
    "sweepout cup": _run_sweepout_cup,
    "sweepout algebraic": _run_sweepout_algebraic,
    "fill demo": _run_fill_demo,
    "fill assign": _run_fill_assign,
    "fill partition": _run_fill_partition,
    "suite": _run_suite,
}

_GROUP_HELP = {
    "waist": "fiber volumes and waist bound certificates",
    "crofton": "integral geometry volume estimators",
    "content": "Minkowski content estimators",
    "transport": "Lipschitz transport certificates",
    "convex": "widths, sections and minimal section search",
    "iso": "flat isoperimetry on tori and boxes",
    "sweepout": "grid sweepouts, bending and cup power budgets",
    "fill": "mod 2 filling, star censuses and partitions",
}


def _add_options(parser: argparse.ArgumentParser, command: str) -> None:
    for opt in _SPECS[command] + _COMMON:
        flag = "--" + opt.name.replace("_", "-")
        if opt.kind == "flag":
            parser.add_argument(flag, dest=opt.name, action="store_const",
                                const="true", default=None, help=opt.help)
        else:
            parser.add_argument(flag, dest=opt.name, default=None,
                                metavar=opt.kind.upper(), help=opt.help)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waistlab",
        description="numerical certificates for waist, section and filling bounds",
    )
    parser.add_argument("--version", action="version",
                        version=f"{TOOL} {VERSION}")
    groups = parser.add_subparsers(dest="group", required=True)
    seen: dict[str, Any] = {}
    for command in _SPECS:
        head, _, tail = command.partition(" ")
        if not tail:
            sub = groups.add_parser(head, help="run the acceptance matrix")
            _add_options(sub, command)
            sub.set_defaults(_command=command)
            continue
        if head not in seen:
            group = groups.add_parser(head, help=_GROUP_HELP[head])
            seen[head] = group.add_subparsers(dest="action", required=True)
        sub = seen[head].add_parser(tail, help=f"{head} {tail}")
        _add_options(sub, command)
        sub.set_defaults(_command=command)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    command = args._command
    try:
        cfg = _effective_config(command, args)
        os.environ["WAISTLAB_WORKERS"] = str(cfg["workers"])
        started = time.perf_counter()
        records = _HANDLERS[command](cfg)
        doc = _document(command, cfg, records, time.perf_counter() - started)
        _emit(doc, cfg)
        return 0 if doc["passed"] else 1
    except (UsageError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
