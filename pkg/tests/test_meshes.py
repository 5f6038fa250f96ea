"""Simplicial meshes: volumes, refinement, file format, exact distances."""

from math import pi, sqrt

import numpy as np
import pytest
from scipy.optimize import minimize

from waistlab.errors import UsageError
from waistlab.meshes import (
    MeshDistance,
    SubmanifoldMesh,
    circle_mesh,
    clifford_torus_mesh,
    mesh_volume,
    polyline_mesh,
    read_mesh,
    segment_mesh,
    subsphere_mesh,
    write_mesh,
)


def test_simplex_volumes_exact():
    # unit right triangle and unit right tetrahedron
    tri = SubmanifoldMesh(
        np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
        np.array([[0, 1, 2]]),
    )
    assert mesh_volume(tri) == pytest.approx(0.5, rel=1e-14)
    tet = SubmanifoldMesh(
        np.vstack([np.zeros(3), np.eye(3)]),
        np.array([[0, 1, 2, 3]]),
    )
    assert mesh_volume(tet) == pytest.approx(1.0 / 6.0, rel=1e-14)


def test_embedded_triangle_volume():
    # same triangle, rotated into R^4: volume is isometry invariant
    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    base = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    verts = base @ q[:2]
    tri = SubmanifoldMesh(verts, np.array([[0, 1, 2]]))
    assert mesh_volume(tri) == pytest.approx(0.5, rel=1e-12)


def test_circle_mesh_length():
    m = 500
    c = circle_mesh(np.eye(3)[:2], segments=m, radius=2.0)
    # inscribed polygon length is exactly 2 m r sin(pi/m)
    assert mesh_volume(c) == pytest.approx(2 * m * 2.0 * np.sin(pi / m), rel=1e-12)
    assert mesh_volume(c) == pytest.approx(4 * pi, rel=1e-4)


def test_subsphere_mesh_converges():
    frame = np.eye(3)
    areas = [mesh_volume(subsphere_mesh(frame, level=lvl)) for lvl in (2, 3, 4)]
    # inscribed: increasing, below 4 pi, within 0.4% at level 4
    assert areas[0] < areas[1] < areas[2] < 4 * pi
    assert areas[2] == pytest.approx(4 * pi, rel=4e-3)


def test_subsphere_mesh_three_dim():
    frame = np.eye(4)
    m = subsphere_mesh(frame, level=3)
    np.testing.assert_allclose(np.linalg.norm(m.vertices, axis=1), 1.0, atol=1e-12)
    assert mesh_volume(m) == pytest.approx(2 * pi**2, rel=0.04)


def test_subsphere_mesh_lives_in_frame():
    # 2-sphere spanned by a random orthonormal 3-frame in R^5
    rng = np.random.default_rng(8)
    q, _ = np.linalg.qr(rng.normal(size=(5, 3)))
    m = subsphere_mesh(q.T, level=3)
    assert m.ambient_dim == 5
    # all vertices inside span(q): projection is the identity on them
    proj = m.vertices @ q @ q.T
    np.testing.assert_allclose(proj, m.vertices, atol=1e-12)
    assert mesh_volume(m) == pytest.approx(4 * pi, rel=0.02)


def test_clifford_torus_area():
    r = 1 / sqrt(2)
    m = clifford_torus_mesh(r, r, res=64)
    np.testing.assert_allclose(np.linalg.norm(m.vertices, axis=1), 1.0, atol=1e-12)
    assert mesh_volume(m) == pytest.approx(4 * pi**2 * r * r, rel=2e-3)


def test_mesh_roundtrip(tmp_path):
    m = subsphere_mesh(np.eye(3), level=2)
    path = tmp_path / "sphere.mesh"
    write_mesh(m, path)
    back = read_mesh(path)
    np.testing.assert_allclose(back.vertices, m.vertices, atol=1e-15)
    np.testing.assert_array_equal(back.simplices, m.simplices)


def test_read_mesh_rejects_garbage(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("dim x y\n")
    with pytest.raises(UsageError):
        read_mesh(path)


def test_mesh_index_validation():
    with pytest.raises(UsageError):
        SubmanifoldMesh(np.zeros((3, 2)), np.array([[0, 1, 5]]))


# ---------------------------------------------------------------------------
# exact point-to-simplex distances
# ---------------------------------------------------------------------------

def _oracle_distance(point, verts):
    """Constrained least squares on the simplex, solved by SLSQP."""
    k = len(verts)
    res = minimize(
        lambda lam: np.sum((point - lam @ verts) ** 2),
        np.full(k, 1.0 / k),
        constraints=[{"type": "eq", "fun": lambda lam: lam.sum() - 1.0}],
        bounds=[(0.0, 1.0)] * k,
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 200},
    )
    return sqrt(res.fun)


def test_distance_to_triangle_known():
    tri = SubmanifoldMesh(np.eye(3), np.array([[0, 1, 2]]))
    dist = MeshDistance(tri)
    d, nearest = dist.query(np.zeros((1, 3)))
    assert d[0] == pytest.approx(1 / sqrt(3), rel=1e-12)
    np.testing.assert_allclose(nearest[0], np.full(3, 1 / 3), atol=1e-12)
    # beyond a vertex the nearest point is that vertex
    d, nearest = dist.query(np.array([[3.0, 0.0, 0.0]]))
    assert d[0] == pytest.approx(2.0, rel=1e-12)
    np.testing.assert_allclose(nearest[0], [1.0, 0.0, 0.0], atol=1e-12)


def test_distance_matches_slsqp_oracle():
    rng = np.random.default_rng(31)
    for trial in range(30):
        dim = int(rng.integers(2, 5))
        k = int(rng.integers(1, dim + 1))  # simplex with k+1 vertices
        verts = rng.normal(size=(k + 1, dim))
        mesh = SubmanifoldMesh(verts, np.arange(k + 1)[None, :])
        point = rng.normal(size=dim) * 2
        d, _ = MeshDistance(mesh).query(point[None, :])
        assert d[0] == pytest.approx(_oracle_distance(point, verts), abs=1e-6)


def test_segment_distance():
    seg = segment_mesh(np.array([0.0, 0.0]), np.array([1.0, 0.0]))
    d, nearest = MeshDistance(seg).query(np.array([[0.5, 2.0], [-1.0, 0.0]]))
    np.testing.assert_allclose(d, [2.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(nearest[0], [0.5, 0.0], atol=1e-12)


def test_polyline_closed_distance():
    square = polyline_mesh(
        np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), closed=True
    )
    assert mesh_volume(square) == pytest.approx(4.0, rel=1e-14)
    d, _ = MeshDistance(square).query(np.array([[0.5, 0.5]]))
    assert d[0] == pytest.approx(0.5, rel=1e-12)


def test_tree_path_matches_exhaustive():
    # enough simplices to engage the kd-tree candidate path
    m = subsphere_mesh(np.eye(3), level=4)
    assert m.simplices.shape[0] > 192
    rng = np.random.default_rng(44)
    pts = rng.normal(size=(200, 3)) * 1.5
    d_tree, near_tree = MeshDistance(m).query(pts)
    # brute force over every simplex
    coords = m.simplex_coords()
    best = np.full(len(pts), np.inf)
    for s in range(coords.shape[0]):
        from waistlab.meshes import _pairs_simplex_nearest

        ds, _ = _pairs_simplex_nearest(
            pts, np.broadcast_to(coords[s], (len(pts),) + coords[s].shape)
        )
        best = np.minimum(best, ds)
    np.testing.assert_allclose(d_tree, best, atol=1e-10)
    # nearest points realize the reported distances
    np.testing.assert_allclose(
        np.linalg.norm(pts - near_tree, axis=1), d_tree, atol=1e-10
    )


def test_distance_on_sphere_mesh_approximates_true():
    # distance from 2x north pole to the unit sphere is about 1
    m = subsphere_mesh(np.eye(3), level=4)
    d, _ = MeshDistance(m).query(np.array([[0.0, 0.0, 2.0]]))
    assert d[0] == pytest.approx(1.0, abs=2e-3)
