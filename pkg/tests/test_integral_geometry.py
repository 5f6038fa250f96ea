"""Crofton-type estimators checked against closed-form lengths and areas."""

import numpy as np
import pytest

from waistlab.errors import DomainError, UsageError
from waistlab.integral_geometry import (
    EquatorialSubsphere,
    cauchy_crofton_euclidean,
    count_intersections,
    crofton_volume,
    sample_equator,
    _calibration_constant,
)
from waistlab.meshes import (
    SubmanifoldMesh,
    circle_mesh,
    polyline_mesh,
    segment_mesh,
    subsphere_mesh,
)

TWO_PI = 2.0 * np.pi


def great_circle(n_ambient: int, segments: int = 256) -> SubmanifoldMesh:
    frame = np.eye(n_ambient)[:2]
    return circle_mesh(frame, segments)


def union(a: SubmanifoldMesh, b: SubmanifoldMesh) -> SubmanifoldMesh:
    verts = np.vstack([a.vertices, b.vertices])
    simps = np.vstack([a.simplices, b.simplices + len(a.vertices)])
    return SubmanifoldMesh(verts, simps)


def odd_zero_set_mesh(coefficient: float = 0.35, segments: int = 720) -> SubmanifoldMesh:
    """Polyline along the zero set of x3 - c*(x1^3) on the unit 2-sphere.

    The defining function is odd, so the curve meets every great circle and
    its length is at least 2*pi.  Solved per azimuth by bisection; the root
    is unique because the residual is strictly increasing in the height.
    """
    theta = np.linspace(0.0, TWO_PI, segments, endpoint=False)
    cos3 = np.cos(theta) ** 3
    lo = np.full_like(theta, -0.6)
    hi = np.full_like(theta, 0.6)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        residual = mid - coefficient * (1.0 - mid**2) ** 1.5 * cos3
        hi = np.where(residual > 0, mid, hi)
        lo = np.where(residual > 0, lo, mid)
    z = 0.5 * (lo + hi)
    r = np.sqrt(1.0 - z**2)
    points = np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=1)
    return polyline_mesh(points, closed=True)


class TestEquatorSampling:
    def test_frame_and_complement_are_orthonormal(self):
        rng = np.random.default_rng(41)
        eq = sample_equator(5, 2, rng)
        assert eq.frame.shape == (3, 6)
        assert eq.complement.shape == (3, 6)
        basis = np.vstack([eq.frame, eq.complement])
        assert np.allclose(basis @ basis.T, np.eye(6), atol=1e-12)
        assert eq.k == 2 and eq.n == 5

    def test_same_seed_reproduces_frame(self):
        a = sample_equator(3, 1, np.random.default_rng(7))
        b = sample_equator(3, 1, np.random.default_rng(7))
        assert np.array_equal(a.frame, b.frame)

    def test_bad_dimension_rejected(self):
        rng = np.random.default_rng(0)
        with pytest.raises(DomainError):
            sample_equator(3, 3, rng)
        with pytest.raises(DomainError):
            sample_equator(3, -1, rng)


class TestSphericalCrofton:
    def test_great_circle_is_hit_exactly_twice(self):
        report = crofton_volume(great_circle(3), k=1, samples=2000, seed=11)
        # Every great circle crosses the cone over the polygon twice, so the
        # estimator has zero variance and returns 2*pi on the nose.
        assert report.value == pytest.approx(TWO_PI, rel=1e-12)
        assert report.std_error == 0.0
        assert report.details["mean_count"] == 2.0
        assert report.details["perturbed_samples"] == 0

    def test_small_circle_matches_sine_law(self):
        rho = 1.0
        frame = np.eye(3)[:2] * np.sin(rho)
        mesh = circle_mesh(frame, 512)
        mesh = SubmanifoldMesh(mesh.vertices + np.array([0.0, 0.0, np.cos(rho)]), mesh.simplices)
        report = crofton_volume(mesh, k=1, samples=8000, seed=5)
        target = TWO_PI * np.sin(rho)
        assert abs(report.value - target) < max(4 * report.std_error, 0.02 * target)

    def test_equatorial_circle_in_s3(self):
        report = crofton_volume(great_circle(4), k=2, samples=1500, seed=7)
        assert report.value == pytest.approx(TWO_PI, rel=1e-12)
        assert report.std_error == 0.0

    def test_great_two_sphere_in_s3(self):
        mesh = subsphere_mesh(np.eye(4)[:3], level=3)
        report = crofton_volume(mesh, k=1, samples=600, seed=9)
        assert report.value == pytest.approx(4.0 * np.pi, rel=1e-12)

    def test_orthogonal_circles_add_exactly(self):
        a = great_circle(4)
        b = circle_mesh(np.eye(4)[2:], 256)
        report = crofton_volume(union(a, b), k=2, samples=500, seed=13)
        assert report.details["mean_count"] == 4.0
        assert report.value == pytest.approx(4.0 * np.pi, rel=1e-12)

    def test_doubled_mesh_doubles_the_estimate(self):
        single = great_circle(3)
        report = crofton_volume(union(single, single), k=1, samples=400, seed=3)
        assert report.value == pytest.approx(2.0 * TWO_PI, rel=1e-12)

    def test_odd_zero_set_is_at_least_equator_length(self):
        mesh = odd_zero_set_mesh()
        report = crofton_volume(mesh, k=1, samples=4000, seed=17)
        assert report.value + 3 * report.std_error >= TWO_PI * (1 - 1e-3)

    def test_vertex_aligned_equator_is_perturbed_not_crashed(self):
        mesh = great_circle(3)
        through_vertex = EquatorialSubsphere(
            frame=np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
            complement=np.array([[0.0, 1.0, 0.0]]),
        )
        assert count_intersections(mesh, through_vertex, tie_breaker=4) == 2

    def test_input_validation(self):
        mesh = great_circle(3)
        with pytest.raises(UsageError):
            crofton_volume(mesh, k=1, samples=0, seed=1)
        with pytest.raises(DomainError):
            crofton_volume(mesh, k=2, samples=10, seed=1)
        off_sphere = SubmanifoldMesh(mesh.vertices * 1.5, mesh.simplices)
        with pytest.raises(UsageError):
            crofton_volume(off_sphere, k=1, samples=10, seed=1)
        flat = segment_mesh(np.zeros(3), np.ones(3), pieces=2)
        with pytest.raises(UsageError):
            crofton_volume(flat, k=1, samples=10, seed=1)

    def test_determinism_for_fixed_seed_and_workers(self, monkeypatch):
        monkeypatch.setenv("WAISTLAB_WORKERS", "3")
        mesh = odd_zero_set_mesh(segments=240)
        first = crofton_volume(mesh, k=1, samples=900, seed=23)
        second = crofton_volume(mesh, k=1, samples=900, seed=23)
        assert first.value == second.value
        assert first.std_error == second.std_error
        assert first.details == second.details
        assert first.details["workers"] == 3


class TestEuclideanCrofton:
    def test_line_calibration_matches_closed_form(self):
        # For lines in the plane the reference constant is 1/pi exactly.
        assert _calibration_constant(2, 1) == pytest.approx(1.0 / np.pi, rel=0.01)

    def test_unit_segment_length(self):
        seg = segment_mesh(np.array([0.0, 0.0]), np.array([1.0, 0.0]), pieces=1)
        report = cauchy_crofton_euclidean(seg, samples=100_000, seed=21)
        assert abs(report.value - 1.0) < 0.02

    def test_quarter_circle_in_unit_square(self):
        frame = np.eye(2) * 0.25
        mesh = circle_mesh(frame, 256)
        mesh = SubmanifoldMesh(mesh.vertices + 0.5, mesh.simplices)
        report = cauchy_crofton_euclidean(mesh, samples=100_000, seed=29)
        assert abs(report.value - np.pi / 2) < 0.02 * (np.pi / 2)

    def test_circle_length_in_three_dimensions(self):
        frame = np.zeros((2, 3))
        frame[0, 0] = frame[1, 1] = 0.3
        mesh = circle_mesh(frame, 256)
        report = cauchy_crofton_euclidean(mesh, samples=60_000, seed=31)
        target = TWO_PI * 0.3
        assert abs(report.value - target) < max(4 * report.std_error, 0.02 * target)

    def test_rectangle_area_in_three_dimensions(self):
        verts = np.array(
            [[-0.25, -0.4, 0.0], [0.25, -0.4, 0.0], [0.25, 0.4, 0.0], [-0.25, 0.4, 0.0]]
        )
        mesh = SubmanifoldMesh(verts, np.array([[0, 1, 2], [0, 2, 3]]))
        report = cauchy_crofton_euclidean(mesh, samples=60_000, seed=37)
        assert abs(report.value - 0.4) < max(4 * report.std_error, 0.02 * 0.4)

    def test_disjoint_union_adds_exactly_under_shared_flats(self):
        a = segment_mesh(np.array([-0.6, -0.2]), np.array([-0.1, -0.2]), pieces=1)
        b = segment_mesh(np.array([0.1, 0.3]), np.array([0.6, 0.3]), pieces=2)
        radius = 1.2
        ra = cauchy_crofton_euclidean(a, samples=20_000, seed=41, bounding_radius=radius)
        rb = cauchy_crofton_euclidean(b, samples=20_000, seed=41, bounding_radius=radius)
        rab = cauchy_crofton_euclidean(union(a, b), samples=20_000, seed=41, bounding_radius=radius)
        assert rab.value == pytest.approx(ra.value + rb.value, abs=1e-12)

    def test_rotation_invariance_within_noise(self):
        seg = segment_mesh(np.array([-0.5, 0.0]), np.array([0.5, 0.0]), pieces=1)
        angle = 0.7
        rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        turned = SubmanifoldMesh(seg.vertices @ rot.T, seg.simplices)
        first = cauchy_crofton_euclidean(seg, samples=40_000, seed=43, bounding_radius=0.8)
        second = cauchy_crofton_euclidean(turned, samples=40_000, seed=44, bounding_radius=0.8)
        spread = np.hypot(first.std_error, second.std_error)
        assert abs(first.value - second.value) < 4 * spread

    def test_mesh_outside_region_rejected(self):
        seg = segment_mesh(np.array([0.0, 0.0]), np.array([2.0, 0.0]), pieces=1)
        with pytest.raises(UsageError):
            cauchy_crofton_euclidean(seg, samples=10, seed=1, bounding_radius=1.0)

    def test_zero_samples_rejected(self):
        seg = segment_mesh(np.array([0.0, 0.0]), np.array([1.0, 0.0]), pieces=1)
        with pytest.raises(UsageError):
            cauchy_crofton_euclidean(seg, samples=0, seed=1)
