"""Tests for fiber maps: algebra, evaluation, fibers, bounds."""

import math

import numpy as np
import pytest

from waistlab.content import lower_minkowski_content
from waistlab.errors import DomainError, UsageError
from waistlab.fibrations import (
    EMPTY_FIBER,
    algebra_conjugate,
    algebra_multiply,
    abs_z1_on_rp3,
    abs_z1_on_s3,
    even_sphere_exploration,
    evaluate,
    fiber_mesh,
    fiber_volume,
    hopf_map,
    linear_projection,
    rp_quotient_of,
    torus_projection,
    verify_waist_bound,
    waist_profile,
    x1_squared_on_rp2,
)
from waistlab.meshes import mesh_volume
from waistlab.spaces import SpaceDescriptor, sphere_volume


def random_unit(rng, dim):
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


class TestAlgebra:
    def test_quaternion_table(self):
        i = np.array([0.0, 1.0, 0.0, 0.0])
        j = np.array([0.0, 0.0, 1.0, 0.0])
        k = np.array([0.0, 0.0, 0.0, 1.0])
        assert np.allclose(algebra_multiply(i, j), k)
        assert np.allclose(algebra_multiply(j, k), i)
        assert np.allclose(algebra_multiply(k, i), j)
        assert np.allclose(algebra_multiply(i, i), [-1.0, 0.0, 0.0, 0.0])

    def test_conjugate_reverses_products(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            x, y = rng.normal(size=4), rng.normal(size=4)
            lhs = algebra_conjugate(algebra_multiply(x, y))
            rhs = algebra_multiply(algebra_conjugate(y), algebra_conjugate(x))
            assert np.abs(lhs - rhs).max() < 1e-12

    def test_octonion_norms_multiply(self):
        rng = np.random.default_rng(32)
        for _ in range(50):
            x, y = rng.normal(size=8), rng.normal(size=8)
            got = np.linalg.norm(algebra_multiply(x, y))
            want = np.linalg.norm(x) * np.linalg.norm(y)
            assert abs(got - want) < 1e-10 * max(1.0, want)

    def test_octonions_alternative_not_associative(self):
        rng = np.random.default_rng(33)
        for _ in range(20):
            x, y = rng.normal(size=8), rng.normal(size=8)
            lhs = algebra_multiply(x, algebra_multiply(x, y))
            rhs = algebra_multiply(algebra_multiply(x, x), y)
            assert np.abs(lhs - rhs).max() < 1e-12
        e = np.eye(8)
        lhs = algebra_multiply(e[1], algebra_multiply(e[2], e[4]))
        rhs = algebra_multiply(algebra_multiply(e[1], e[2]), e[4])
        assert np.abs(lhs - rhs).max() > 1.0

    def test_validation(self):
        with pytest.raises(DomainError):
            algebra_multiply(np.zeros(3), np.zeros(3))
        with pytest.raises(UsageError):
            algebra_multiply(np.zeros(4), np.zeros(8))


class TestEvaluate:
    def test_north_pole(self):
        assert np.allclose(evaluate(hopf_map(3), [1.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0])

    @pytest.mark.parametrize("total_dim", [3, 7, 15])
    def test_unit_image_and_evenness(self, total_dim):
        rng = np.random.default_rng(total_dim)
        fmap = hopf_map(total_dim)
        for _ in range(10):
            p = random_unit(rng, total_dim + 1)
            y = evaluate(fmap, p)
            assert abs(np.linalg.norm(y) - 1.0) < 1e-12
            assert np.abs(evaluate(fmap, -p) - y).max() < 1e-12

    def test_modulus_map(self):
        y = evaluate(abs_z1_on_s3(), [0.6, 0.0, 0.8, 0.0])
        assert np.allclose(y, [0.6])

    def test_coordinate_square(self):
        fmap = x1_squared_on_rp2()
        assert np.allclose(evaluate(fmap, [1.0, 0.0, 0.0]), [1.0])
        assert np.allclose(evaluate(fmap, [0.0, 1.0, 0.0]), [0.0])

    def test_torus_projection_mod(self):
        fmap = torus_projection((1.0, 2.0, 3.0), kept=(2,))
        assert np.allclose(evaluate(fmap, np.array([0.3, 1.5, 2.7])), [2.7])
        assert np.allclose(evaluate(fmap, np.array([0.3, 1.5, 3.5])), [0.5])

    def test_linear(self):
        A = np.eye(2, 4)
        fmap = linear_projection(3, A)
        p = random_unit(np.random.default_rng(0), 4)
        assert np.allclose(evaluate(fmap, p), A @ p)

    def test_invalid_points(self):
        with pytest.raises(DomainError):
            evaluate(hopf_map(3), [2.0, 0.0, 0.0, 0.0])
        with pytest.raises(DomainError):
            evaluate(hopf_map(3), [1.0, 0.0, 0.0])


class TestConstructors:
    def test_bad_total_dim(self):
        with pytest.raises(DomainError):
            hopf_map(5)

    def test_quotient_restricted(self):
        with pytest.raises(UsageError):
            rp_quotient_of(abs_z1_on_s3())

    def test_linear_validation(self):
        with pytest.raises(UsageError):
            linear_projection(3, np.ones((2, 4)))
        with pytest.raises(DomainError):
            linear_projection(3, np.eye(4))
        with pytest.raises(UsageError):
            linear_projection(3, np.eye(2, 5))

    def test_torus_validation(self):
        with pytest.raises(UsageError):
            torus_projection((1.0, 2.0), kept=())
        with pytest.raises(DomainError):
            torus_projection((1.0, 2.0), kept=(0, 1))
        with pytest.raises(UsageError):
            torus_projection((1.0, 2.0), kept=(3,))


class TestFiberGeometry:
    @pytest.mark.parametrize("total_dim,res", [(3, 64), (7, 16)])
    def test_fibers_map_to_base(self, total_dim, res):
        rng = np.random.default_rng(41 + total_dim)
        fmap = hopf_map(total_dim)
        for sign in (1.0, -1.0):
            y = evaluate(fmap, random_unit(rng, total_dim + 1))
            y[0] = sign * abs(y[0])
            y /= np.linalg.norm(y)
            mesh = fiber_mesh(fmap, y, resolution=res)
            assert np.abs(np.linalg.norm(mesh.vertices, axis=1) - 1.0).max() < 1e-12
            back = np.array([evaluate(fmap, v) for v in mesh.vertices[:40]])
            assert np.abs(back - y).max() < 1e-12

    def test_modulus_fiber_torus(self):
        fmap = abs_z1_on_s3()
        t = 0.6
        mesh = fiber_mesh(fmap, t, resolution=64)
        radii = np.hypot(mesh.vertices[:, 0], mesh.vertices[:, 1])
        assert np.abs(radii - t).max() < 1e-12
        exact = 4.0 * math.pi**2 * t * math.sqrt(1 - t * t)
        assert abs(mesh_volume(mesh) - exact) < 0.005 * exact

    def test_modulus_fiber_endpoints(self):
        fmap = abs_z1_on_s3()
        for t, axes in ((0.0, (2, 3)), (1.0, (0, 1))):
            mesh = fiber_mesh(fmap, t, resolution=128)
            live = np.ptp(mesh.vertices, axis=0) > 1e-12
            assert set(np.nonzero(live)[0]) == set(axes)
            assert abs(mesh_volume(mesh) - 2.0 * math.pi) < 0.01

    def test_square_fiber_circle(self):
        fmap = x1_squared_on_rp2()
        mesh = fiber_mesh(fmap, 0.5, resolution=256)
        assert np.abs(mesh.vertices[:, 0] ** 2 - 0.5).max() < 1e-12
        assert np.abs(np.linalg.norm(mesh.vertices, axis=1) - 1.0).max() < 1e-12
        assert abs(mesh_volume(mesh) - 2 * math.pi * math.sqrt(0.5)) < 0.01

    def test_linear_fiber(self):
        rng = np.random.default_rng(44)
        A = np.linalg.qr(rng.normal(size=(4, 2)))[0].T
        fmap = linear_projection(3, A)
        y = np.array([0.6, 0.0])
        mesh = fiber_mesh(fmap, y, resolution=128)
        assert np.abs(mesh.vertices @ A.T - y).max() < 1e-12
        assert np.abs(np.linalg.norm(mesh.vertices, axis=1) - 1.0).max() < 1e-12
        exact = 2 * math.pi * math.sqrt(1 - 0.36)
        assert abs(mesh_volume(mesh) - exact) < 0.01 * exact

    def test_point_and_empty_fibers(self):
        A = np.eye(2, 4)
        fmap = linear_projection(3, A)
        point = fiber_mesh(fmap, np.array([1.0, 0.0]), 16)
        assert point.dim == 0 and np.allclose(point.vertices[0], [1, 0, 0, 0])
        assert fiber_mesh(fmap, np.array([1.5, 0.0]), 16) is EMPTY_FIBER
        assert repr(EMPTY_FIBER) == "EmptyFiber()"
        square = x1_squared_on_rp2()
        assert fiber_mesh(square, 1.0, 16).dim == 0

    def test_torus_fiber_volumes_exact(self):
        fmap = torus_projection((1.0, 2.0, 3.0), kept=(2,))
        mesh = fiber_mesh(fmap, np.array([0.5]), 16)
        assert mesh_volume(mesh) == pytest.approx(2.0)
        assert np.allclose(mesh.vertices[:, 2], 0.5)
        narrow = torus_projection((1.0, 2.0, 3.0), kept=(1, 2))
        mesh1 = fiber_mesh(narrow, np.array([0.3, 0.4]), 16)
        assert mesh_volume(mesh1) == pytest.approx(1.0)

    def test_mesh_restrictions(self):
        with pytest.raises(UsageError):
            fiber_mesh(hopf_map(15), np.eye(9)[0], 16)
        with pytest.raises(UsageError):
            fiber_mesh(hopf_map(3), np.eye(3)[0], 2)
        with pytest.raises(UsageError):
            fiber_mesh(hopf_map(7), np.eye(5)[0], 2000)

    def test_mesh_volume_convergence(self):
        fmap = hopf_map(7)
        y = np.eye(5)[0]
        exact = sphere_volume(3)
        errors = [
            abs(mesh_volume(fiber_mesh(fmap, y, resolution=r)) - exact)
            for r in (16, 32, 64)
        ]
        assert errors[0] > errors[1] > errors[2]
        assert errors[2] < 0.015 * exact


class TestFiberVolume:
    def test_tightness_pins(self):
        assert fiber_volume(hopf_map(3), np.eye(3)[1]) == pytest.approx(2 * math.pi, abs=1e-12)
        assert fiber_volume(hopf_map(7), np.eye(5)[2]) == pytest.approx(2 * math.pi**2, abs=1e-12)
        assert fiber_volume(hopf_map(15), np.eye(9)[3]) == pytest.approx(math.pi**4 / 3, abs=1e-12)
        assert fiber_volume(rp_quotient_of(hopf_map(3)), np.eye(3)[0]) == pytest.approx(math.pi, abs=1e-12)
        assert fiber_volume(rp_quotient_of(hopf_map(7)), np.eye(5)[0]) == pytest.approx(math.pi**2, abs=1e-12)
        t = 1 / math.sqrt(2)
        assert fiber_volume(abs_z1_on_rp3(), t) == pytest.approx(math.pi**2, abs=1e-12)

    def test_modulus_profile_laws(self):
        up, down = abs_z1_on_s3(), abs_z1_on_rp3()
        for t in (0.2, 0.5, 0.9):
            exact = 4 * math.pi**2 * t * math.sqrt(1 - t * t)
            assert fiber_volume(up, t) == pytest.approx(exact, abs=1e-12)
            assert fiber_volume(down, t) == pytest.approx(exact / 2, abs=1e-12)
        assert fiber_volume(up, 0.0) == pytest.approx(2 * math.pi)
        assert fiber_volume(down, 1.0) == pytest.approx(math.pi)

    def test_square_map_values(self):
        fmap = x1_squared_on_rp2()
        assert fiber_volume(fmap, 0.0) == pytest.approx(math.pi)
        assert fiber_volume(fmap, 0.36) == pytest.approx(2 * math.pi * 0.8)
        assert fiber_volume(fmap, 1.0) == 0.0

    def test_linear_law(self):
        rng = np.random.default_rng(45)
        A = np.linalg.qr(rng.normal(size=(5, 2)))[0].T
        fmap = linear_projection(4, A)
        assert fiber_volume(fmap, np.zeros(2)) == pytest.approx(sphere_volume(2))
        r = 0.7
        expect = sphere_volume(2) * (1 - r * r)
        assert fiber_volume(fmap, np.array([r, 0.0])) == pytest.approx(expect)
        assert fiber_volume(fmap, np.array([1.2, 0.0])) == 0.0

    def test_quotient_halves_upstairs(self):
        rng = np.random.default_rng(46)
        for total_dim in (3, 7, 15):
            up = hopf_map(total_dim)
            down = rp_quotient_of(up)
            for _ in range(100):
                y = random_unit(rng, up.target.ambient_dim)
                assert fiber_volume(down, y) == 0.5 * fiber_volume(up, y)

    def test_constant_over_targets_meshed(self):
        rng = np.random.default_rng(47)
        fmap = hopf_map(3)
        vols = []
        for _ in range(100):
            y = random_unit(rng, 3)
            vols.append(mesh_volume(fiber_mesh(fmap, y, resolution=32)))
        vols = np.array(vols)
        assert np.ptp(vols) < 1e-9 * vols.mean()


class TestProfilesAndCertificates:
    def test_modulus_profile_argmax(self):
        prof = waist_profile(abs_z1_on_rp3(), [np.array([t]) for t in np.linspace(0, 1, 11)])
        assert prof.argmax == 7
        expect = 2 * math.pi**2 * 0.7 * math.sqrt(1 - 0.49)
        assert prof.best_volume == pytest.approx(expect, abs=1e-12)
        assert prof.best_volume >= 0.997 * math.pi**2

    def test_constant_profiles(self):
        rng = np.random.default_rng(48)
        prof = waist_profile(hopf_map(3), [random_unit(rng, 3) for _ in range(20)])
        assert np.ptp(prof.volumes) == 0.0
        assert prof.volumes[0] == pytest.approx(2 * math.pi)
        torus = torus_projection((1.0, 2.0, 3.0), kept=(2,))
        tprof = waist_profile(torus, [np.array([v]) for v in (0.0, 1.0, 2.9)])
        assert np.all(tprof.volumes == 2.0)

    def test_square_profile_monotone(self):
        grid = [np.array([t]) for t in np.linspace(0.01, 0.99, 50)]
        prof = waist_profile(x1_squared_on_rp2(), grid)
        assert np.all(np.diff(prof.volumes) < 0)

    def test_certificates_pass(self):
        cert = verify_waist_bound(rp_quotient_of(hopf_map(3)), "projective-fiber-volume")
        assert cert.passed and cert.bound == pytest.approx(math.pi)
        assert cert.measured == pytest.approx(math.pi)
        assert cert.details["map"] == "rp_quotient_of"

        cert = verify_waist_bound(linear_projection(3, np.eye(2, 4)), "equatorial-fiber-volume")
        assert cert.passed and cert.bound == pytest.approx(2 * math.pi)
        assert np.allclose(cert.details["measured_at"], [0.0, 0.0])

        cert = verify_waist_bound(abs_z1_on_rp3(), "projective-torus-area")
        assert cert.passed and cert.bound == pytest.approx(math.pi**2)

        cert = verify_waist_bound(abs_z1_on_rp3(), "projective-fiber-volume")
        assert cert.passed and cert.bound == pytest.approx(2 * math.pi)

        torus = torus_projection((1.0, 2.0, 3.0), kept=(2,))
        cert = verify_waist_bound(torus, "torus-fiber-product")
        assert cert.passed and cert.measured == pytest.approx(2.0)
        assert cert.to_record()["kind"] == "certificate"

    def test_certificate_applicability(self):
        with pytest.raises(UsageError):
            verify_waist_bound(hopf_map(3), "torus-fiber-product")
        with pytest.raises(UsageError):
            verify_waist_bound(hopf_map(3), "projective-fiber-volume")
        with pytest.raises(UsageError):
            verify_waist_bound(hopf_map(3), "no-such-bound")


class TestMeshedContentCrossChecks:
    def test_circle_bundle_fiber_content(self):
        mesh = fiber_mesh(hopf_map(3), np.array([0.2, 0.9, np.sqrt(1 - 0.85)]), 256)
        rep = lower_minkowski_content(
            SpaceDescriptor.sphere(3), mesh, 2, [0.35, 0.3, 0.25, 0.2],
            200_000, seed=61, model="even",
        )
        exact = 2 * math.pi
        assert abs(rep.value - exact) <= max(5 * rep.std_error, 0.015 * exact)

    def test_projective_circle_fiber_content(self):
        mesh = fiber_mesh(rp_quotient_of(hopf_map(3)), np.eye(3)[2], 256)
        rep = lower_minkowski_content(
            SpaceDescriptor.real_projective(3), mesh, 2, [0.35, 0.3, 0.25, 0.2],
            200_000, seed=62, model="even",
        )
        assert abs(rep.value - math.pi) <= max(5 * rep.std_error, 0.015 * math.pi)

    def test_clifford_fiber_content(self):
        mesh = fiber_mesh(abs_z1_on_rp3(), 1 / math.sqrt(2), 48)
        rep = lower_minkowski_content(
            SpaceDescriptor.real_projective(3), mesh, 1, [0.3, 0.25, 0.2, 0.15],
            150_000, seed=63, model="even",
        )
        exact = math.pi**2
        assert abs(rep.value - exact) <= max(5 * rep.std_error, 0.015 * exact)


class TestExploration:
    def test_best_sup_near_reference(self):
        out = even_sphere_exploration(trials=3, resolution=96, levels=20, seed=5)
        ref = out["reference_bound"]
        assert 0.9 * ref <= out["best_sup"] <= 1.2 * ref
        assert out["conclusive"] is False
        assert out["maps_tried"] == 3

    def test_validation(self):
        with pytest.raises(UsageError):
            even_sphere_exploration(trials=0)
