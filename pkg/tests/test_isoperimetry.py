"""Tests for grid isoperimetry: profiles, halving translations, interfaces."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from waistlab import isoperimetry as iso
from waistlab.errors import DomainError, UsageError


class TestGaussianProfile:
    def test_endpoints(self):
        assert iso.gaussian_profile(0.0) == 0.0
        assert iso.gaussian_profile(50.0) == pytest.approx(1.0, abs=1e-15)

    def test_matches_quadrature(self):
        for t in (0.05, 0.1, 0.5, 1.0, 2.0, 3.0):
            want = quad(lambda s: math.exp(-math.pi * s * s), -t, t, epsabs=1e-14)[0]
            assert iso.gaussian_profile(t) == pytest.approx(want, abs=1e-13)

    def test_small_t_slope_is_two(self):
        # profile(t)/(2t) -> 1, the normalization the box bound rests on.
        for t in (1e-4, 1e-6):
            assert iso.gaussian_profile(t) / (2.0 * t) == pytest.approx(1.0, abs=1e-7)

    def test_rejects_negative(self):
        with pytest.raises(DomainError):
            iso.gaussian_profile(-0.1)


class TestBinaryField:
    def test_basic_properties(self):
        field = iso.half_slab((1.0, 2.0), (64, 256))
        assert field.dim == 2
        assert field.resolution == (64, 256)
        assert field.spacings == (1.0 / 64, 2.0 / 256)
        assert field.cell_volume == pytest.approx((1.0 / 64) * (2.0 / 256))
        assert field.fraction == 0.5

    def test_half_slab_axis_choice(self):
        field = iso.half_slab((1.0, 1.0), 32, axis=0)
        assert field.occupancy[:16].all() and not field.occupancy[16:].any()
        field = iso.half_slab((1.0, 1.0), 32, axis=-1)
        assert field.occupancy[:, :16].all() and not field.occupancy[:, 16:].any()
        with pytest.raises(UsageError):
            iso.half_slab((1.0, 1.0), (32, 31), axis=1)

    def test_random_half_volume_is_exactly_half(self):
        field = iso.random_half_volume((1.0, 1.0), 128, seed=5)
        assert np.count_nonzero(field.occupancy) == 128 * 128 // 2
        again = iso.random_half_volume((1.0, 1.0), 128, seed=5)
        assert np.array_equal(field.occupancy, again.occupancy)
        other = iso.random_half_volume((1.0, 1.0), 128, seed=6)
        assert not np.array_equal(field.occupancy, other.occupancy)
        with pytest.raises(DomainError):
            iso.random_half_volume((1.0, 1.0), 128, seed=0, smoothing=0.0)

    def test_validation(self):
        with pytest.raises(DomainError):
            iso.BinaryField((0.0, 1.0), np.zeros((4, 4), dtype=bool))
        with pytest.raises(UsageError):
            iso.BinaryField((1.0, 1.0), np.zeros(16, dtype=bool))
        with pytest.raises(UsageError):
            iso.BinaryField((1.0, 1.0), np.zeros((1, 8), dtype=bool))

    def test_io_round_trip(self, tmp_path):
        for periodic in (True, False):
            field = iso.random_half_volume((1.0, 2.0), (32, 64), seed=9, periodic=periodic)
            path = tmp_path / f"field_{int(periodic)}.bin"
            iso.write_field(field, path)
            back = iso.read_field(path)
            assert back.lengths == field.lengths
            assert back.periodic == field.periodic
            assert np.array_equal(back.occupancy, field.occupancy)

    def test_read_rejects_other_files(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"not a field\n\nxxxx")
        with pytest.raises(UsageError):
            iso.read_field(path)


class TestHalvingTranslations:
    def test_half_slab_boxes_are_exact(self):
        for axis in (0, 1):
            field = iso.half_slab((1.0, 1.0), 128, axis=axis)
            boxes = iso.torus_halving_translations(field)
            assert len(boxes) == 4
            for box in boxes:
                assert box.shape == (64, 64)
                assert box.fraction == 0.5

    def test_random_fields_meet_quantization_bound(self):
        field = iso.random_half_volume((1.0, 1.0), 128, seed=3)
        boxes = iso.torus_halving_translations(field)
        for box in boxes:
            assert abs(box.fraction - 0.5) <= 2.0 / 128

    def test_boxes_tile_the_torus(self):
        for seed in (0, 1, 2):
            field = iso.random_half_volume((1.0, 1.0), 64, seed=seed)
            boxes = iso.torus_halving_translations(field)
            coverage = np.zeros(field.resolution, dtype=int)
            for box in boxes:
                coverage += box.mask(field.resolution)
            assert (coverage == 1).all()

    def test_three_dimensional_split(self):
        field = iso.random_half_volume((1.0, 1.0, 1.0), 32, seed=7, smoothing=4.0)
        boxes = iso.torus_halving_translations(field)
        assert len(boxes) == 8
        coverage = np.zeros(field.resolution, dtype=int)
        for box in boxes:
            assert box.shape == (16, 16, 16)
            assert abs(box.fraction - 0.5) <= 3.0 / 32
            coverage += box.mask(field.resolution)
        assert (coverage == 1).all()

    def test_deterministic(self):
        field = iso.random_half_volume((1.0, 1.0), 64, seed=11)
        first = iso.torus_halving_translations(field)
        second = iso.torus_halving_translations(field)
        assert [(b.starts, b.shape, b.fraction) for b in first] == [
            (b.starts, b.shape, b.fraction) for b in second
        ]

    def test_validation(self):
        box_field = iso.half_slab((1.0, 1.0), 64, periodic=False)
        with pytest.raises(UsageError):
            iso.torus_halving_translations(box_field)
        odd = iso.BinaryField((1.0,), np.arange(9) < 4, periodic=True)
        with pytest.raises(UsageError):
            iso.torus_halving_translations(odd)
        lopsided = iso.BinaryField((1.0, 1.0), np.ones((64, 64), dtype=bool))
        with pytest.raises(UsageError):
            iso.torus_halving_translations(lopsided)


class TestBoundaryContent:
    def test_torus_half_slab_attains_the_bound(self):
        # Interface = two parallel circles; counts are cell-exact, so
        # the fit reproduces 2*prod(a_i) to roundoff.
        report = iso.boundary_content(iso.half_slab((1.0, 1.0), 256))
        assert report.value == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(report.details["ratios"], 2.0, atol=1e-12)

    def test_torus_rectangular_lengths(self):
        field = iso.half_slab((1.0, 2.0), (128, 256), axis=1)
        assert iso.boundary_content(field).value == pytest.approx(2.0, abs=1e-9)
        field = iso.half_slab((1.0, 2.0), (128, 256), axis=0)
        assert iso.boundary_content(field).value == pytest.approx(4.0, abs=1e-9)

    def test_box_half_slab(self):
        field = iso.half_slab((1.0, 1.0), 256, axis=0, periodic=False)
        assert iso.boundary_content(field).value == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_sets_are_flagged(self):
        empty = iso.BinaryField((1.0, 1.0), np.zeros((32, 32), dtype=bool))
        report = iso.boundary_content(empty)
        assert report.value == 0.0
        assert report.details["degenerate"]
        full = iso.BinaryField((1.0, 1.0), np.ones((32, 32), dtype=bool))
        assert iso.boundary_content(full).details["degenerate"]

    def test_random_torus_sets_beat_the_bound(self):
        for seed in range(12):
            field = iso.random_half_volume((1.0, 1.0), 256, seed=seed)
            assert iso.boundary_content(field).value >= 2.0 * 0.95

    def test_random_box_sets_beat_the_bound(self):
        for seed in range(12):
            field = iso.random_half_volume((1.0, 1.0), 256, seed=seed, periodic=False)
            assert iso.boundary_content(field).value >= 1.0 * 0.95

    def test_tracks_contour_length(self):
        measure = pytest.importorskip("skimage.measure")
        field = iso.random_half_volume((1.0, 1.0), 256, seed=0)
        padded = np.pad(field.occupancy.astype(float), ((0, 1), (0, 1)), mode="wrap")
        h = field.spacings[0]
        truth = sum(
            np.linalg.norm(np.diff(c, axis=0), axis=1).sum() * h
            for c in measure.find_contours(padded, 0.5)
        )
        report = iso.boundary_content(field)
        assert report.value == pytest.approx(truth, rel=0.03)

    def test_schedule_validation(self):
        field = iso.half_slab((1.0, 1.0), 64)
        with pytest.raises(UsageError):
            iso.boundary_content(field, t_schedule=[0.1, 0.05])
        with pytest.raises(UsageError):
            iso.boundary_content(field, t_schedule=[0.05, 0.1, 0.2])
        with pytest.raises(UsageError):
            iso.boundary_content(field, t_schedule=[0.1, 0.05, -0.01])
