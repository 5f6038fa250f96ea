"""Transport maps: oracle agreement, Lipschitz certificates, densities."""

from math import exp, pi, sqrt

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import erf, gammainc

from waistlab.errors import DomainError, UsageError
from waistlab.spaces import ball_volume, sphere_volume
from waistlab.transport import (
    TransportMap,
    apply,
    builtin_transports,
    density_mu_m,
    density_rho_m,
    gauss_to_ball_radial,
    gauss_to_interval,
    gaussian_rho,
    gaussian_transports,
    jacobian_matrix,
    jacobian_singular_values,
    restricted_determinant,
)


def _interval_oracle(x):
    # integral_0^x e^(-pi t^2) dt = erf(sqrt(pi) x) / 2
    return erf(sqrt(pi) * x) / 2.0


def _ball_radius_oracle(x, n):
    # y^n = gammainc(n/2, pi x^2) / v_n
    return (gammainc(n / 2, pi * x * x) / ball_volume(n)) ** (1.0 / n)


def test_interval_map_frozen_values():
    assert gauss_to_interval(0.25) == pytest.approx(0.23455797446502968, abs=1e-13)
    assert gauss_to_interval(1.0) == pytest.approx(0.4939055589075986, abs=1e-13)
    assert gauss_to_interval(3.0) == pytest.approx(0.4999999999999726, abs=1e-13)


def test_interval_map_matches_erf():
    rng = np.random.default_rng(101)
    xs = rng.normal(size=40) * 2
    for x in xs:
        assert gauss_to_interval(float(x)) == pytest.approx(
            _interval_oracle(x), abs=1e-12
        )


def test_interval_map_odd_and_bounded():
    for x in (0.1, 0.7, 2.5):
        assert gauss_to_interval(-x) == pytest.approx(-gauss_to_interval(x), abs=1e-14)
        assert abs(gauss_to_interval(x)) < 0.5


def test_interval_batch_path_matches_scalar():
    rng = np.random.default_rng(55)
    xs = rng.normal(size=300) * 2.5  # large enough for the panel path
    batch = gauss_to_interval(xs)
    scalars = np.array([gauss_to_interval(float(x)) for x in xs])
    np.testing.assert_allclose(batch, scalars, atol=1e-12)


def test_ball_radius_frozen_values():
    assert gauss_to_ball_radial(0.5, 2) == pytest.approx(0.4161493393335448, abs=1e-11)
    assert gauss_to_ball_radial(1.0, 3) == pytest.approx(0.5992485103280264, abs=1e-11)
    assert gauss_to_ball_radial(2.0, 5) == pytest.approx(0.7173463551234155, abs=1e-11)


def test_ball_radius_matches_gammainc():
    rng = np.random.default_rng(7)
    for _ in range(40):
        n = int(rng.integers(1, 7))
        x = float(rng.uniform(0.01, 3.0))
        assert gauss_to_ball_radial(x, n) == pytest.approx(
            _ball_radius_oracle(x, n), abs=1e-11
        )


def test_ball_radius_contracts():
    rng = np.random.default_rng(9)
    for _ in range(30):
        n = int(rng.integers(1, 6))
        x = float(rng.uniform(0.0, 3.0))
        y = gauss_to_ball_radial(x, n)
        assert y <= x + 1e-12
        # slope at most 1 (finite difference)
        h = 1e-5
        dy = (gauss_to_ball_radial(x + h, n) - y) / h
        assert dy <= 1.0 + 1e-6


def test_ball_map_image_is_unit_volume_ball():
    # pushing Gaussians through the radial map fills the ball of volume 1
    tmap = TransportMap.ball(2)
    rng = np.random.default_rng(17)
    pts = rng.normal(size=(20000, 2)) / sqrt(2 * pi)  # density e^(-pi |x|^2)
    img = apply(tmap, pts)
    r = np.linalg.norm(img, axis=1)
    r_max = 1 / sqrt(pi)  # radius of the unit-volume disk
    assert r.max() <= r_max + 1e-9
    # uniformity: P(|y| <= rho) = pi rho^2
    rho = 0.4
    assert np.mean(r <= rho) == pytest.approx(pi * rho**2, abs=0.01)


def test_apply_dimension_check():
    with pytest.raises(UsageError):
        apply(TransportMap.ball(3), np.zeros(2))


def test_archimedes_requires_unit_sphere():
    tmap = TransportMap.archimedes(2, 1)
    with pytest.raises(DomainError):
        apply(tmap, np.array([0.5, 0.0, 0.0, 0.0]))
    out = apply(tmap, np.array([0.6, 0.8, 0.0, 0.0]))
    np.testing.assert_allclose(out, [0.6, 0.8])


def test_product_map_blocks():
    tmap = TransportMap.product(TransportMap.interval(), TransportMap.ball(2))
    x = np.array([0.5, 0.3, -0.4])
    out = apply(tmap, x)
    assert out[0] == pytest.approx(gauss_to_interval(0.5), abs=1e-13)
    r_in = np.linalg.norm(x[1:])
    np.testing.assert_allclose(
        out[1:], x[1:] * gauss_to_ball_radial(r_in, 2) / r_in, atol=1e-11
    )


# ---------------------------------------------------------------------------
# derivatives and certificates
# ---------------------------------------------------------------------------

def test_interval_jacobian_analytic():
    jac = jacobian_matrix(TransportMap.interval(), np.array([0.8]))
    assert jac[0, 0] == pytest.approx(exp(-pi * 0.64), rel=1e-13)


def test_radial_origin_is_isotropic():
    jac = jacobian_matrix(TransportMap.ball(3), np.zeros(3))
    np.testing.assert_allclose(jac, np.eye(3), atol=1e-12)


def test_radial_jacobian_matches_analytic_det():
    # det of the radial map differential is exactly e^(-pi r^2)
    tmap = TransportMap.ball(3)
    rng = np.random.default_rng(13)
    for _ in range(10):
        # moderate radius keeps the density far above the FD noise floor
        x = rng.normal(size=3) * 0.6
        jac = jacobian_matrix(tmap, x)
        det = np.linalg.det(jac)
        assert det == pytest.approx(gaussian_rho(x), rel=1e-4)


def test_singular_values_at_most_one():
    rng = np.random.default_rng(29)
    for name, tmap in gaussian_transports():
        for _ in range(6):
            x = rng.normal(size=tmap.dim_in)
            sv = jacobian_singular_values(tmap, x)
            assert sv[0] <= 1.0 + 1e-9, name


def test_archimedes_singular_values_on_sphere():
    rng = np.random.default_rng(77)
    for n, m in [(1, 1), (2, 1), (1, 2), (2, 3)]:
        tmap = TransportMap.archimedes(n, m)
        for _ in range(5):
            x = rng.normal(size=n + m + 1)
            x /= np.linalg.norm(x)
            sv = jacobian_singular_values(tmap, x)
            assert sv[0] <= 1.0 + 1e-5


def test_restricted_determinant_dominates_gaussian():
    rng = np.random.default_rng(41)
    for name, tmap in gaussian_transports():
        n = tmap.dim_in
        for _ in range(4):
            x = rng.normal(size=n) * 0.8
            k = int(rng.integers(1, n + 1))
            q, _ = np.linalg.qr(rng.normal(size=(n, k)))
            det = restricted_determinant(tmap, x, q)
            assert det >= gaussian_rho(x) * (1 - 1e-6), name


def test_restricted_determinant_frame_validation():
    tmap = TransportMap.ball(2)
    with pytest.raises(UsageError):
        restricted_determinant(tmap, np.zeros(2), np.ones((2, 2)))


def test_scale_map_singular_values():
    tmap = TransportMap.scale([0.5, 2.0])
    sv = jacobian_singular_values(tmap, np.zeros(2))
    np.testing.assert_allclose(sv, [2.0, 0.5])
    # expansive scales are not certified
    names = [name for name, _ in gaussian_transports()]
    assert all(not t.factors for _, t in gaussian_transports())
    assert "cube_2" in names and "ball_3" in names


def test_builtin_registry_shapes():
    for name, tmap in builtin_transports():
        assert tmap.dim_in >= 1
        assert tmap.dim_out >= 1
        if name.startswith("archimedes"):
            assert tmap.dim_out < tmap.dim_in


# ---------------------------------------------------------------------------
# projection densities
# ---------------------------------------------------------------------------

def test_density_mu_m_values():
    # n = 2, m = 1: density is s_1 = 2 pi inside the disk
    assert density_mu_m(2, 1, np.zeros(2)) == pytest.approx(2 * pi)
    assert density_mu_m(2, 1, np.array([1.5, 0.0])) == 0.0
    # n = 1, m = 2: 4 pi sqrt(1 - x^2)
    assert density_mu_m(1, 2, np.array([0.6])) == pytest.approx(4 * pi * 0.8)


def test_density_mu_m_total_mass():
    # integral over B^1 of s_m (1 - x^2)^((m-1)/2) dx = s_(1+m)
    for m in (1, 2, 3, 6):
        total, _ = quad(lambda x: density_mu_m(1, m, np.array([x])), -1, 1)
        assert total == pytest.approx(sphere_volume(1 + m), rel=1e-9)


def test_density_rho_m_monotone_to_gaussian():
    rng = np.random.default_rng(3)
    for _ in range(20):
        y = rng.normal(size=2) * 0.5
        gauss = exp(-pi * float(y @ y))
        prev = 0.0
        for m in (2, 4, 8, 32, 128):
            val = density_rho_m(m, y)
            assert val <= gauss + 1e-12
            assert val >= prev - 1e-12
            prev = val
        assert density_rho_m(100000, y) == pytest.approx(gauss, abs=1e-4)


def test_density_rho_m_support():
    m = 5
    edge = sqrt((m - 1) / (2 * pi))
    assert density_rho_m(m, np.array([edge + 0.01, 0.0])) == 0.0
    with pytest.raises(DomainError):
        density_rho_m(1, np.zeros(2))
