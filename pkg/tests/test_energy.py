import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from plcurv import metric
from plcurv.delaunay import delaunay_certificate
from plcurv.energy import (
    EnergyState,
    energy_gradient,
    energy_hessian,
    lobachevsky,
    replay_metric,
    surface_energy,
    triangle_energy_F,
    triangle_energy_h,
)
from plcurv.fixtures import grid_torus

from conftest import fixture_mesh

# -int_0^x log|2 sin t| dt by mpmath quadrature (40 digits)
LOB_PI_6 = 0.5074708032048268125106012771372601429708
LOB_PI_3 = 0.3383138688032178750070675180915067619806


def lob_oracle(x):
    # half the Clausen function Cl2(2x), mpmath's clsin(2, .)
    return float(mpmath.clsin(2, 2 * mpmath.mpf(x)) / 2)


def test_lobachevsky_known_values():
    assert lobachevsky(np.pi / 6) == pytest.approx(LOB_PI_6, abs=1e-15)
    assert lobachevsky(np.pi / 3) == pytest.approx(LOB_PI_3, abs=1e-15)
    # L(pi/4) is half of Catalan's constant
    assert lobachevsky(np.pi / 4) == pytest.approx(float(mpmath.catalan) / 2, abs=1e-15)
    assert lobachevsky(0.0) == 0.0
    # np.pi sits 1.2e-16 above pi, where the slope is about 37
    assert lobachevsky(np.pi) == pytest.approx(lob_oracle(np.pi), abs=1e-16)
    assert lobachevsky(np.pi / 2) == pytest.approx(lob_oracle(np.pi / 2), abs=1e-16)


def test_lobachevsky_matches_clausen(rng):
    x = rng.uniform(-10, 10, 300)
    ref = np.array([lob_oracle(v) for v in x])
    assert np.max(np.abs(lobachevsky(x) - ref)) < 1e-15


def test_lobachevsky_matches_fourier_series():
    # L(x) = 1/2 sum sin(2 n x) / n^2, slowly convergent; accelerate by
    # summing a long partial sum and the tail bound is 1/(2N)
    x = np.linspace(0.1, 3.0, 7)
    n = np.arange(1, 200001)[:, None]
    series = 0.5 * np.sum(np.sin(2 * n * x) / n**2, axis=0)
    assert np.allclose(lobachevsky(x), series, atol=5e-6)


def test_lobachevsky_near_zero():
    # L(x) ~ x - x log(2x) for small x
    for x in (1e-300, 1e-20, 1e-8):
        assert lobachevsky(x) == pytest.approx(x - x * np.log(2 * x), rel=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(-50, 50))
def test_lobachevsky_odd_and_periodic(x):
    assert lobachevsky(-x) == -lobachevsky(x)
    y = x + np.pi
    # y carries a rounding error of up to half an ulp, amplified by the slope
    slope = abs(np.log(abs(2 * np.sin(x)))) if np.sin(x) != 0 else 800.0
    assert abs(lobachevsky(y) - lobachevsky(x)) <= 1e-14 + slope * abs(np.spacing(y))


def test_lobachevsky_derivative():
    x = np.linspace(0.2, 3.0, 15)
    h = 1e-6
    fd = (lobachevsky(x + h) - lobachevsky(x - h)) / (2 * h)
    assert np.allclose(fd, -np.log(np.abs(2 * np.sin(x))), atol=1e-8)


@st.composite
def random_triangle(draw):
    a = draw(st.floats(0.5, 2.0))
    b = draw(st.floats(0.5, 2.0))
    t = draw(st.floats(0.15, 0.85))
    c = abs(a - b) + t * (a + b - abs(a - b))
    u = [draw(st.floats(-0.1, 0.1)) for _ in range(3)]
    return (a, b, c), u


def _valid(u, lij, ljk, lki):
    x = np.array([lij * np.exp((u[0] + u[1]) / 2), ljk * np.exp((u[1] + u[2]) / 2),
                  lki * np.exp((u[2] + u[0]) / 2)])
    s = np.sort(x)
    return s[0] + s[1] > s[2] * (1 + 1e-9)


@settings(max_examples=100, deadline=None)
@given(random_triangle(), st.floats(-2, 2))
def test_triangle_translation(tri, t):
    (lij, ljk, lki), u = tri
    if not _valid(u, lij, ljk, lki):
        return
    ut = [x + t for x in u]
    dh = triangle_energy_h(*ut, lij, ljk, lki) - triangle_energy_h(*u, lij, ljk, lki)
    dF = triangle_energy_F(*ut, lij, ljk, lki) - triangle_energy_F(*u, lij, ljk, lki)
    assert abs(dh + np.pi * t) <= 1e-10
    assert abs(dF + np.pi * t) <= 1e-10


def _F_by_quadrature(u, lij, ljk, lki):
    u = np.asarray(u)

    def integrand(s):
        us = s * u
        x_ij = lij * np.exp((us[0] + us[1]) / 2)
        x_jk = ljk * np.exp((us[1] + us[2]) / 2)
        x_ki = lki * np.exp((us[2] + us[0]) / 2)
        th = metric.corner_angles(x_jk, x_ki, x_ij)
        return -float(np.dot(th, u))

    return integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13)[0]


def test_F_explicit_form_matches_line_integral(rng):
    n_done = 0
    while n_done < 20:
        lij, ljk, lki = rng.uniform(0.6, 1.6, 3)
        u = rng.uniform(-0.4, 0.4, 3)
        ok = all(_valid(s * u, lij, ljk, lki) for s in np.linspace(0, 1, 11))
        if not ok or not _valid([0, 0, 0], lij, ljk, lki):
            continue
        n_done += 1
        F = triangle_energy_F(*u, lij, ljk, lki)
        assert F == pytest.approx(_F_by_quadrature(u, lij, ljk, lki), abs=1e-8)


def test_F_minus_h_constant(rng):
    lij, ljk, lki = 1.0, 1.2, 0.9
    diffs = []
    for _ in range(30):
        u = rng.uniform(-0.2, 0.2, 3)
        diffs.append(triangle_energy_F(*u, lij, ljk, lki) - triangle_energy_h(*u, lij, ljk, lki))
    assert np.var(diffs) <= 1e-10
    assert np.ptp(diffs) < 1e-12


def _energy(state, u):
    s = state.copy()
    s.move_to(u)
    return surface_energy(s)


def test_gradient_is_curvature(rng):
    for name in ("tetrahedron", "icosahedron", "genus2"):
        surface, lengths = fixture_mesh(name)
        u = rng.uniform(-0.3, 0.3, surface.n_vertices)
        st0 = EnergyState(surface, lengths, u)
        g = energy_gradient(st0)
        h = 1e-5
        for i in rng.choice(surface.n_vertices, size=min(6, surface.n_vertices), replace=False):
            d = np.zeros(surface.n_vertices)
            d[i] = h
            fd = (_energy(st0, u + d) - _energy(st0, u - d)) / (2 * h)
            assert fd == pytest.approx(g[i], abs=1e-6)


def test_hessian_properties(rng):
    for name in ("tetrahedron", "icosahedron", "torus1v", "genus2"):
        surface, lengths = fixture_mesh(name)
        u = rng.uniform(-0.3, 0.3, surface.n_vertices)
        H = energy_hessian(EnergyState(surface, lengths, u))
        D = H.toarray()
        assert np.array_equal(D, D.T)
        assert np.all(D.sum(axis=1) == 0.0)
        assert np.linalg.eigvalsh(D)[0] >= -1e-10


def test_hessian_kernel_is_constants(genus2):
    surface, lengths = genus2
    D = energy_hessian(EnergyState(surface, lengths)).toarray()
    ev = np.linalg.eigvalsh(D)
    assert abs(ev[0]) < 1e-12
    assert ev[1] > 1e-3


def test_hessian_matches_gradient_differences(rng):
    surface, lengths = fixture_mesh("icosahedron")
    u = rng.uniform(-0.2, 0.2, surface.n_vertices)
    state = EnergyState(surface, lengths, u)
    H = energy_hessian(state).toarray()
    h = 1e-6
    for i in range(surface.n_vertices):
        d = np.zeros(surface.n_vertices)
        d[i] = h
        a, b = state.copy(), state.copy()
        a.move_to(u + d)
        b.move_to(u - d)
        fd = (a.gradient() - b.gradient()) / (2 * h)
        assert np.allclose(fd, H[:, i], atol=1e-5)


def test_energy_translation(mesh, rng):
    surface, lengths = mesh
    chi = surface.euler_characteristic()
    u = rng.uniform(-0.5, 0.5, surface.n_vertices)
    state = EnergyState(surface, lengths, u)
    for c in (-1.3, 0.4, 2.0):
        assert abs(_energy(state, u + c) - surface_energy(state) - 2 * np.pi * c * chi) <= 1e-9


def test_move_to_keeps_delaunay_and_small_offsets(genus2, rng):
    surface, lengths = genus2
    state = EnergyState(surface, lengths)
    assert state.initial_flips
    for _ in range(3):
        state.move_to(rng.uniform(-1, 1, surface.n_vertices))
        assert delaunay_certificate(state.surface, state.lengths) == []
    assert state.flip_log
    assert abs(state.offset) < 1e-12


def test_path_independence(genus2, rng):
    surface, lengths = genus2
    u = rng.uniform(-1, 1, surface.n_vertices)
    a = EnergyState(surface, lengths, u)
    b = EnergyState(surface, lengths, rng.uniform(-1, 1, surface.n_vertices))
    b.move_to(u)
    assert surface_energy(a) == pytest.approx(surface_energy(b), abs=1e-10)
    assert np.allclose(energy_gradient(a), energy_gradient(b), atol=1e-12)
    assert np.allclose(metric.total_area(a.surface, a.lengths),
                       metric.total_area(b.surface, b.lengths), rtol=1e-13)


def test_replay_metric(genus2, rng):
    surface, lengths = genus2
    u = rng.uniform(-1, 1, surface.n_vertices)
    state = EnergyState(surface, lengths, u)
    s2, l2 = replay_metric(surface, lengths, u, state.initial_flips,
                           [r["edge"] for r in state.flip_log])
    assert np.array_equal(s2.faces, state.surface.faces)
    assert np.allclose(l2, state.lengths, rtol=1e-13)


def test_cocircular_background_has_no_initial_flips():
    s, l = grid_torus(3, 3)
    state = EnergyState(s, l)
    assert state.initial_flips == []
    assert np.allclose(energy_gradient(state), 0.0, atol=1e-14)


def test_degenerate_background_rejected(tetra):
    surface, lengths = tetra
    lengths[0] = 10.0
    with pytest.raises(metric.DegenerateTriangleError):
        EnergyState(surface, lengths)


def test_move_to_shape_checked(tetra):
    state = EnergyState(*tetra)
    with pytest.raises(ValueError, match="expected 4"):
        state.move_to(np.zeros(3))
