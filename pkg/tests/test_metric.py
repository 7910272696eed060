import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plcurv import metric
from plcurv.fixtures import grid_torus, one_vertex_torus
from plcurv.metric import DegenerateTriangleError, corner_angles
from plcurv.surface import TriangulatedSurface

# values frozen from mpmath (40 digits) arccos of the law of cosines
ACOS_M1_8 = 1.696124157962962016105888677996836160147
ACOS_3_4 = 0.7227342478134156111783773526413333620252
# curvature of the tetrahedron with
# l01=1, l02=1.1, l03=1.2, l12=1.3, l13=0.9, l23=1.05 (mpmath arccos sums)
TETRA_K = [3.182373389495868506927, 3.023431017706643769417,
           3.497482521985352377203, 2.863083685171308300304]

sides = st.floats(0.01, 100.0)


@st.composite
def triangles(draw):
    a, b = draw(sides), draw(sides)
    lo, hi = abs(a - b), a + b
    t = draw(st.floats(0.001, 0.999))
    return a, b, lo + t * (hi - lo)


def test_angles_match_oracle():
    A, B, C = corner_angles(3.0, 2.0, 2.0)
    assert A == pytest.approx(ACOS_M1_8, abs=1e-15)
    assert B == pytest.approx(ACOS_3_4, abs=1e-15)
    assert C == pytest.approx(ACOS_3_4, abs=1e-15)


def test_equilateral():
    assert np.allclose(corner_angles(1.0, 1.0, 1.0), np.pi / 3, atol=1e-15)


def test_right_triangle():
    A, B, C = corner_angles(5.0, 4.0, 3.0)
    assert A == pytest.approx(np.pi / 2, abs=1e-15)
    assert B == pytest.approx(np.arctan2(4, 3), abs=1e-15)


def test_needle_triangle_accurate():
    # thin isosceles: the apex angle is 2 asin(eps / 2)
    eps = 1e-9
    A, B, C = corner_angles(eps, 1.0, 1.0)
    assert A == pytest.approx(2 * np.arcsin(eps / 2), rel=1e-12)
    assert B + C == pytest.approx(np.pi - A, abs=1e-15)


@pytest.mark.parametrize("abc", [(1.0, 1.0, 2.0), (1.0, 2.0, 4.0), (0.0, 1.0, 1.0),
                                 (np.nan, 1.0, 1.0)])
def test_degenerate_rejected(abc):
    with pytest.raises(DegenerateTriangleError):
        corner_angles(*abc)


def test_array_input_reports_index():
    a = np.array([1.0, 1.0, 1.0])
    with pytest.raises(DegenerateTriangleError) as info:
        corner_angles(a, a, np.array([1.0, 3.0, 1.0]))
    assert info.value.face == 1


@settings(max_examples=300, deadline=None)
@given(triangles())
def test_angle_properties(abc):
    a, b, c = abc
    A, B, C = corner_angles(a, b, c)
    assert A + B + C == pytest.approx(np.pi, abs=4e-15)
    assert min(A, B, C) > 0
    # larger side opposite larger angle
    order_sides = np.argsort([a, b, c], kind="stable")
    angs = np.array([A, B, C])
    assert np.all(np.diff(angs[order_sides]) >= -1e-15)
    # scale invariance
    assert np.allclose(corner_angles(7.3 * a, 7.3 * b, 7.3 * c), (A, B, C),
                       atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(triangles())
def test_angles_agree_with_high_precision_acos(abc):
    a, b, c = abc
    with mpmath.workdps(40):
        x, y, z = (mpmath.mpf(v) for v in abc)
        ref = [mpmath.acos((q * q + r * r - p * p) / (2 * q * r))
               for p, q, r in ((x, y, z), (y, z, x), (z, x, y))]
    got = corner_angles(a, b, c)
    assert np.allclose(got, [float(v) for v in ref], rtol=0, atol=2e-14)


def _tetra(lengths_by_pair):
    faces = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
    surface = TriangulatedSurface.from_faces(4, faces)
    ev = np.sort(surface.edge_vertices, axis=1)
    lengths = np.array([lengths_by_pair[tuple(p)] for p in ev.tolist()])
    return surface, lengths


def test_curvature_oracle_perturbed_tetrahedron():
    surface, lengths = _tetra({(0, 1): 1.0, (0, 2): 1.1, (0, 3): 1.2, (1, 2): 1.3,
                               (1, 3): 0.9, (2, 3): 1.05})
    K = metric.curvature(surface, lengths)
    assert np.allclose(K, TETRA_K, atol=1e-14)


def test_regular_tetrahedron_curvature(tetra):
    surface, lengths = tetra
    assert np.allclose(metric.curvature(surface, lengths), np.pi, atol=1e-14)


def test_flat_tori():
    s, l = one_vertex_torus()
    assert abs(metric.curvature(s, l)[0]) < 1e-14
    s, l = grid_torus(4, 3, seed=3, jitter=0.2)
    assert np.max(np.abs(metric.curvature(s, l))) < 1e-13


def test_gauss_bonnet(mesh, rng):
    surface, lengths = mesh
    for _ in range(10):
        u = rng.uniform(-0.3, 0.3, surface.n_vertices)
        scaled = metric.vertex_scale(surface, lengths, u)
        if metric.triangle_violations(surface, scaled).size:
            continue
        assert abs(metric.gauss_bonnet_residual(surface, scaled)) <= 1e-10 * surface.n_vertices


def test_vertex_scale_formula(tetra):
    surface, lengths = tetra
    u = np.array([0.1, -0.2, 0.3, 0.0])
    out = metric.vertex_scale(surface, lengths, u)
    i, j = surface.edge_vertices.T
    assert np.allclose(out, lengths * np.exp((u[i] + u[j]) / 2), rtol=1e-15)


def test_vertex_scale_loops_scale_by_full_factor():
    s, l = one_vertex_torus()
    assert np.allclose(metric.vertex_scale(s, l, [0.5]), np.exp(0.5) * l)


def test_constant_scale_keeps_angles(mesh):
    surface, lengths = mesh
    scaled = metric.vertex_scale(surface, lengths, np.full(surface.n_vertices, 0.7))
    assert np.allclose(metric.face_angles(surface, scaled),
                       metric.face_angles(surface, lengths), atol=1e-14)


def test_alpha_curvature_scaling_law(rng):
    K = rng.normal(size=5)
    u = rng.normal(size=5)
    lam, alpha = 2.5, 1.7
    R = metric.alpha_curvature(K, u, alpha)
    # angles do not change under u + log(lam), only the weight
    R2 = metric.alpha_curvature(K, u + np.log(lam), alpha)
    assert np.allclose(R2, lam ** (-alpha) * R, rtol=1e-14)
    assert np.array_equal(metric.alpha_curvature(K, u, 0.0), K)


def test_face_areas_match_cross_product():
    pos = np.array([[0.0, 0, 0], [2, 0, 0], [0.5, 1.5, 0], [0.3, 0.2, 1.1]])
    faces = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]
    surface = TriangulatedSurface.from_faces(4, faces)
    ev = surface.edge_vertices
    lengths = np.linalg.norm(pos[ev[:, 0]] - pos[ev[:, 1]], axis=1)
    expect = [0.5 * np.linalg.norm(np.cross(pos[b] - pos[a], pos[c] - pos[a]))
              for a, b, c in surface.faces]
    assert np.allclose(metric.face_areas(surface, lengths), expect, rtol=1e-14)


def test_face_angle_layout(tetra):
    surface, lengths = tetra
    lengths = lengths * np.linspace(0.9, 1.1, lengths.size)
    ang = metric.face_angles(surface, lengths)
    fl = metric.face_lengths(surface, lengths)
    # angle at corner 0 is opposite halfedge 1 (corner 1 -> corner 2)
    a, b, c = fl[:, 1], fl[:, 2], fl[:, 0]
    assert np.allclose(ang[:, 0], np.arccos((b * b + c * c - a * a) / (2 * b * c)), atol=1e-14)
