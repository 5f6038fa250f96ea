"""Volume constants, descriptor validation, sampling, and distances."""

from math import pi, sqrt

import numpy as np
import pytest

from waistlab.errors import DomainError, SamplingError, UsageError
from waistlab.spaces import (
    AmbientPoint,
    SpaceDescriptor,
    ball_volume,
    canonicalize,
    geodesic_distance,
    sample_points,
    sample_uniform,
    sphere_volume,
    total_volume,
)

# closed forms: v_k = pi^(k/2) / (k/2)!, s_i = (i+1) v_(i+1)
BALL_VOLUMES = {
    0: 1.0,
    1: 2.0,
    2: pi,
    3: 4.0 * pi / 3.0,
    4: pi**2 / 2.0,
    8: pi**4 / 24.0,
}

SPHERE_VOLUMES = {
    1: 2.0 * pi,
    2: 4.0 * pi,
    3: 2.0 * pi**2,
    7: pi**4 / 3.0,
}


class _Triangle:
    """Membership oracle for the triangle x + y <= 1 in the unit square."""

    dim = 2

    def bounding_box(self):
        return np.zeros(2), np.ones(2)

    def contains(self, pts):
        pts = np.asarray(pts)
        inside_box = np.all((pts >= 0) & (pts <= 1), axis=1)
        return inside_box & (pts.sum(axis=1) <= 1.0)


class _Empty:
    dim = 3

    def bounding_box(self):
        return np.zeros(3), np.ones(3)

    def contains(self, pts):
        return np.zeros(len(pts), dtype=bool)


def test_ball_volume_closed_forms():
    for k, expect in BALL_VOLUMES.items():
        assert ball_volume(k) == pytest.approx(expect, rel=1e-14)


def test_ball_volume_recursion():
    # v_k = v_(k-2) * 2 pi / k
    for k in range(2, 20):
        assert ball_volume(k) == pytest.approx(
            ball_volume(k - 2) * 2 * pi / k, rel=1e-13
        )


def test_sphere_volume_closed_forms():
    for i, expect in SPHERE_VOLUMES.items():
        assert sphere_volume(i) == pytest.approx(expect, rel=1e-14)


def test_sphere_volume_is_ball_derivative():
    for i in range(1, 12):
        assert sphere_volume(i) == pytest.approx((i + 1) * ball_volume(i + 1))


def test_volume_peaks():
    vols = [ball_volume(k) for k in range(16)]
    assert int(np.argmax(vols)) == 5
    surf = [sphere_volume(i) for i in range(1, 16)]
    assert surf.index(max(surf)) + 1 == 6


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------

def test_descriptor_dimensions():
    assert SpaceDescriptor.sphere(3).ambient_dim == 4
    assert SpaceDescriptor.ball(2).ambient_dim == 2
    assert SpaceDescriptor.cube(4).ambient_dim == 4
    assert SpaceDescriptor.real_projective(7).ambient_dim == 8
    assert SpaceDescriptor.complex_projective(2).ambient_dim == 6
    assert SpaceDescriptor.complex_projective(2).dim == 4
    assert SpaceDescriptor.torus((1.0, 2.0)).dim == 2


def test_torus_lengths_validated():
    with pytest.raises(DomainError):
        SpaceDescriptor.torus((2.0, 1.0))  # must be ascending
    with pytest.raises(DomainError):
        SpaceDescriptor.torus((0.0, 1.0))


def test_total_volumes():
    assert total_volume(SpaceDescriptor.sphere(2)) == pytest.approx(4 * pi)
    assert total_volume(SpaceDescriptor.sphere(3)) == pytest.approx(2 * pi**2)
    assert total_volume(SpaceDescriptor.ball(3)) == pytest.approx(4 * pi / 3)
    assert total_volume(SpaceDescriptor.cube(5)) == pytest.approx(1.0)
    assert total_volume(SpaceDescriptor.torus((1.0, 3.0))) == pytest.approx(3.0)
    assert total_volume(SpaceDescriptor.real_projective(3)) == pytest.approx(pi**2)
    # CP^1 is a round 2-sphere of radius 1/2
    assert total_volume(SpaceDescriptor.complex_projective(1)) == pytest.approx(pi)
    assert total_volume(SpaceDescriptor.complex_projective(3)) == pytest.approx(
        sphere_volume(7) / (2 * pi)
    )


def test_convex_body_volume_needs_estimation():
    with pytest.raises(UsageError):
        total_volume(SpaceDescriptor.convex_body(_Triangle()))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def test_sphere_samples_on_sphere():
    space = SpaceDescriptor.sphere(4)
    pts = sample_points(space, 500, np.random.default_rng(11))
    assert pts.shape == (500, 5)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    # isotropy: coordinate means vanish like 1/sqrt(N)
    assert np.all(np.abs(pts.mean(axis=0)) < 0.1)


def test_ball_samples_radial_law():
    space = SpaceDescriptor.ball(3)
    pts = sample_points(space, 20000, np.random.default_rng(7))
    r = np.linalg.norm(pts, axis=1)
    assert r.max() <= 1.0
    # P(r <= 1/2) = (1/2)^3
    assert np.mean(r <= 0.5) == pytest.approx(0.125, abs=0.01)


def test_cube_samples_uniform():
    space = SpaceDescriptor.cube(2)
    pts = sample_points(space, 20000, np.random.default_rng(3))
    assert pts.min() >= 0.0 and pts.max() <= 1.0
    inside = np.mean((pts[:, 0] < 0.25) & (pts[:, 1] < 0.5))
    assert inside == pytest.approx(0.125, abs=0.01)


def test_projective_samples_canonical():
    space = SpaceDescriptor.real_projective(3)
    pts = sample_points(space, 200, np.random.default_rng(5))
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    for row in pts:
        lead = row[np.abs(row) > 1e-9][0]
        assert lead > 0


def test_complex_projective_samples_canonical():
    space = SpaceDescriptor.complex_projective(2)
    pts = sample_points(space, 100, np.random.default_rng(5))
    z = pts[:, 0::2] + 1j * pts[:, 1::2]
    np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, atol=1e-12)
    for row in z:
        lead = row[np.abs(row) > 1e-9][0]
        assert abs(lead.imag) < 1e-9 and lead.real > 0


def test_convex_body_rejection_sampling():
    body = SpaceDescriptor.convex_body(_Triangle())
    pts = sample_points(body, 4000, np.random.default_rng(19))
    assert pts.shape == (4000, 2)
    assert np.all(pts.sum(axis=1) <= 1.0 + 1e-12)


def test_convex_body_sampling_failure():
    body = SpaceDescriptor.convex_body(_Empty())
    with pytest.raises(SamplingError) as err:
        sample_points(body, 10, np.random.default_rng(0))
    assert err.value.acceptance_rate == 0.0


def test_sample_uniform_wraps_point():
    space = SpaceDescriptor.sphere(2)
    p = sample_uniform(space, np.random.default_rng(1))
    assert isinstance(p, AmbientPoint)
    assert p.space == space
    assert np.linalg.norm(p.coords) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def test_sphere_distance():
    s2 = SpaceDescriptor.sphere(2)
    e = np.eye(3)
    assert geodesic_distance(s2, e[0], e[1]) == pytest.approx(pi / 2)
    assert geodesic_distance(s2, e[0], -e[0]) == pytest.approx(pi)


def test_projective_distance_caps_at_half_pi():
    rp = SpaceDescriptor.real_projective(2)
    e = np.eye(3)
    assert geodesic_distance(rp, e[0], -e[0]) == pytest.approx(0.0, abs=1e-12)
    assert geodesic_distance(rp, e[0], e[1]) == pytest.approx(pi / 2)
    pts = sample_points(rp, 50, np.random.default_rng(23))
    for i in range(0, 50, 2):
        assert geodesic_distance(rp, pts[i], pts[i + 1]) <= pi / 2 + 1e-12


def test_complex_projective_distance():
    cp = SpaceDescriptor.complex_projective(1)
    a = np.array([1.0, 0.0, 0.0, 0.0])
    b = np.array([0.0, 0.0, 1.0, 0.0])
    ib = np.array([0.0, 0.0, 0.0, 1.0])  # same line as b
    assert geodesic_distance(cp, a, b) == pytest.approx(pi / 2)
    assert geodesic_distance(cp, b, ib) == pytest.approx(0.0, abs=1e-12)


def test_torus_distance_wraps():
    t = SpaceDescriptor.torus((1.0, 2.0))
    a = np.array([0.05, 0.1])
    b = np.array([0.95, 1.9])
    assert geodesic_distance(t, a, b) == pytest.approx(sqrt(0.1**2 + 0.2**2))


def test_distance_rejects_space_mismatch():
    s2 = SpaceDescriptor.sphere(2)
    t = SpaceDescriptor.torus((1.0, 1.0))
    p = AmbientPoint(t, np.array([0.5, 0.5]))
    with pytest.raises(UsageError):
        geodesic_distance(s2, p, np.array([1.0, 0.0, 0.0]))


def test_distance_batched():
    s2 = SpaceDescriptor.sphere(2)
    pts = sample_points(s2, 64, np.random.default_rng(2))
    d = geodesic_distance(s2, pts, pts[::-1])
    assert d.shape == (64,)
    np.testing.assert_allclose(d, d[::-1], atol=1e-12)


def test_canonicalize_torus():
    t = SpaceDescriptor.torus((1.0, 2.0))
    out = canonicalize(t, np.array([1.25, -0.5]))
    np.testing.assert_allclose(out, [0.25, 1.5])


def test_canonicalize_projective_idempotent():
    rp = SpaceDescriptor.real_projective(4)
    pts = sample_points(rp, 40, np.random.default_rng(77))
    np.testing.assert_allclose(canonicalize(rp, pts), pts, atol=1e-15)
    np.testing.assert_allclose(canonicalize(rp, -pts), pts, atol=1e-15)
