import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from invmetrics.geometry import BoundaryCurve, PlanarDomain
from invmetrics.potential import (
    PoleProximityError,
    SolverError,
    annulus_uniformize,
    build_solver,
    greens,
    modulus,
    riemann_map,
    robin_constant,
)

from oracles import annulus_harmonic_part, disk_green, two_circle_modulus

DISK = PlanarDomain.disk()
ANN = PlanarDomain.annulus(0.2)
ELL = PlanarDomain.ellipse(2, 1)
ECC = PlanarDomain.disk_with_hole(0.3, 0.2)


def test_consistency_at_build():
    assert build_solver(DISK, 256).consistency <= 1e-12
    assert build_solver(ANN, 256).consistency <= 1e-10
    with pytest.raises(SolverError):
        build_solver(DISK, 100)
    with pytest.raises(SolverError):
        build_solver(DISK, 32)


def test_near_touching_curves_rejected():
    with pytest.raises(SolverError, match="nearly touch"):
        build_solver(PlanarDomain.disk_with_hole(0.795, 0.2), 64)


def test_disk_green_examples():
    s = build_solver(DISK, 256)
    assert greens(s, 0)(0.5) == pytest.approx(math.log(0.5), abs=1e-14)
    g = greens(s, 0.3)
    z = np.array([0.1 + 0.2j, -0.5, 0.6j, 0.7 - 0.1j])
    assert np.max(np.abs(g(z) - disk_green(0.3, z))) <= 1e-9


@pytest.mark.parametrize("a, want", [(0, 0.0), (0.6, -math.log(0.64)), (-0.4 + 0.5j, -math.log(1 - 0.41))])
def test_disk_robin(a, want):
    assert robin_constant(greens(build_solver(DISK, 256), a)) == pytest.approx(want, abs=1e-9)


@pytest.mark.parametrize("a", [math.sqrt(0.2), 0.3, 0.8])
def test_annulus_green_matches_series(a):
    s = build_solver(ANN, 256)
    g = greens(s, a)
    z = np.array([0.5, 0.3j, -0.6 + 0.2j, 0.25 - 0.1j, 0.9])
    want = np.log(np.abs(z - a)) + annulus_harmonic_part(0.2, a, z)
    assert np.max(np.abs(g(z) - want)) <= 1e-8
    assert g.robin == pytest.approx(annulus_harmonic_part(0.2, a, a), abs=1e-8)


def test_green_vanishes_off_nodes():
    for D in (ELL, ECC):
        s = build_solver(D, 256)
        g = greens(s, 0.1 - 0.5j if D is ECC else 0.4 + 0.3j)
        t = (np.arange(64) + 0.37) * 2 * np.pi / 64
        for which in range(D.connectivity):
            assert np.max(np.abs(g.on_boundary(which, t))) <= 1e-9


def _interior(D, n, seed):
    from invmetrics.geometry import interior_samples

    return interior_samples(D, n, 0.1, seed=seed)


@pytest.mark.parametrize("D", [ELL, ECC], ids=["ellipse", "eccentric"])
def test_green_symmetry(D):
    s = build_solver(D, 256)
    pts = _interior(D, 10, 1)
    for a, b in zip(pts[:5], pts[5:]):
        assert greens(s, a)(b) == pytest.approx(greens(s, b)(a), abs=1e-8)


@pytest.mark.parametrize("D", [DISK, ELL, ANN, ECC], ids=["disk", "ellipse", "annulus", "eccentric"])
def test_green_negative(D):
    s = build_solver(D, 256)
    pts = _interior(D, 400, 2)
    g = greens(s, pts[0])
    assert np.all(g(pts[1:]) < 0)


def test_spectral_convergence():
    a = 0.7
    z = np.array([0.1, -0.3 + 0.4j, 0.5j])
    errs = []
    for n in (64, 128, 256, 512):
        g = greens(build_solver(DISK, n), a)
        errs.append(np.max(np.abs(g(z) - disk_green(a, z))))
    for e0, e1 in zip(errs, errs[1:]):
        if e0 > 1e-11:
            assert e1 <= e0 / 4
    assert errs[-1] <= 1e-11


def test_pole_guard():
    s = build_solver(DISK, 64)
    with pytest.raises(PoleProximityError):
        greens(s, 0.99)


def test_modulus_examples():
    assert modulus(build_solver(PlanarDomain.annulus(0.5), 256)) == pytest.approx(0.5, abs=1e-12)
    assert modulus(build_solver(ANN, 256)) == pytest.approx(0.2, abs=1e-12)
    q, _ = two_circle_modulus(0.3, 0.2)
    assert modulus(build_solver(ECC, 512)) == pytest.approx(q, abs=1e-10)
    with pytest.raises(SolverError):
        modulus(build_solver(DISK, 64))


@settings(max_examples=5, deadline=None)
@given(st.floats(0, 2 * np.pi), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.floats(0.3, 4))
def test_modulus_rigid_motion_invariance(phi, shift, scale):
    M = ECC.transformed(rotation=np.exp(1j * phi), shift=shift, scale=scale)
    assert modulus(build_solver(M, 256)) == pytest.approx(modulus(build_solver(ECC, 256)), abs=1e-10)


def test_riemann_map_disk():
    s = build_solver(DISK, 256)
    z = np.array([0.1 + 0.2j, -0.5, 0.6j, 0.95])
    assert np.max(np.abs(riemann_map(s, 0)(z) - z)) <= 1e-10
    f = riemann_map(s, 0.4)
    assert np.max(np.abs(f(z) - (z - 0.4) / (1 - 0.4 * z))) <= 1e-9
    assert np.max(np.abs(f.derivative(z) - 0.84 / (1 - 0.4 * z) ** 2)) <= 1e-9
    assert f.derivative_at_center == pytest.approx(1 / 0.84, abs=1e-10)


def test_riemann_map_ellipse_boundary():
    s = build_solver(ELL, 512)
    f = riemann_map(s, 0)
    assert abs(f(0)) <= 1e-12
    assert f.derivative(0).real > 0 and abs(f.derivative(0).imag) <= 1e-10
    t = (np.arange(97) + 0.5) * 2 * np.pi / 97
    w = f(ELL.outer.point(t) * (1 - 1e-12))
    assert np.max(np.abs(np.abs(w) - 1)) <= 1e-8
    with pytest.raises(SolverError):
        riemann_map(build_solver(ANN, 64), 0.5)


def test_annulus_chart_concentric():
    ch = annulus_uniformize(build_solver(ANN, 256))
    assert ch.q == pytest.approx(0.2, abs=1e-12)
    z = np.array([0.3, 0.5j, -0.7 + 0.1j, 0.21, 0.99])
    assert np.max(np.abs(np.abs(ch(z)) - np.abs(z))) <= 1e-9


def test_annulus_chart_eccentric():
    ch = annulus_uniformize(build_solver(ECC, 512))
    t = (np.arange(61) + 0.5) * 2 * np.pi / 61
    outer = ch(ECC.outer.point(t) * (1 - 1e-13))
    inner = ch(ECC.inner.point(t) + 1e-13 * (ECC.inner.point(t) - 0.3))
    assert np.max(np.abs(np.abs(outer) - 1)) <= 1e-8
    assert np.max(np.abs(np.abs(inner) - ch.q)) <= 1e-8
    z = _interior(ECC, 20, 3)
    w = ch(z)
    assert np.all((np.abs(w) > ch.q) & (np.abs(w) < 1))
    assert np.max(np.abs(ch.inverse(w) - z)) <= 1e-8


def test_fourier_domain_solver():
    D = PlanarDomain(BoundaryCurve.from_coeffs({1: 1.0, 2: 0.1, -1: 0.05j}))
    s = build_solver(D, 256)
    assert s.consistency <= 1e-10
    g = greens(s, 0.1)
    assert g(0.3) < 0
