import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from invmetrics.jets import (
    JetError,
    MonomialKey,
    PolynomialMap,
    RealJet,
    hessian_form,
    jet_compose,
    jet_multiply,
    kappa_p,
    normalize_planar,
    normalize_scv,
    planar_curvature,
    planar_pattern_residual,
    random_jet,
    scv_pattern_residual,
)


def J1(*terms):
    return RealJet.from_terms(1, [((a,), (b,), c) for a, b, c in terms])


LIN = (1, 0, 1.0)


# -- sympy oracle: z and zbar as independent symbols ---------------------------

def _gens(n):
    return sp.symbols(f"z0:{n}") + sp.symbols(f"w0:{n}")


def _num(c):
    c = complex(c)
    return sp.Float(c.real, 30) + sp.I * sp.Float(c.imag, 30)


def _trunc(poly):
    return sp.Poly.from_dict({m: c for m, c in poly.as_dict().items() if sum(m) <= 4} or {(0,) * len(poly.gens): 0},
                             *poly.gens, domain=poly.domain)


def to_poly(j):
    d = {k.alpha + k.beta: _num(c) for k, c in j.coeffs.items()}
    return sp.Poly.from_dict(d or {(0,) * (2 * j.dim): 0}, *_gens(j.dim), domain="EX")


def from_poly(poly, n):
    out = {}
    for mon, c in poly.as_dict().items():
        if sum(mon) <= 4 and c != 0:
            out[MonomialKey(tuple(mon[:n]), tuple(mon[n:]))] = complex(sp.N(c))
    return out


def sympy_multiply(a, b):
    return _trunc(to_poly(a) * to_poly(b))


def sympy_compose(j, psi):
    """Symbolic substitution z_i -> psi_i(z), w_i -> conj(psi_i)(w) (small inputs only)."""
    n = j.dim
    gens = _gens(n)
    z, w = gens[:n], gens[n:]
    subs = {}
    for i, comp in enumerate(psi.components):
        subs[z[i]] = sum(_num(c) * sp.Mul(*[z[m] ** a[m] for m in range(n)]) for a, c in comp)
        subs[w[i]] = sum(_num(complex(c).conjugate()) * sp.Mul(*[w[m] ** a[m] for m in range(n)]) for a, c in comp)
    expr = sp.expand(to_poly(j).as_expr().xreplace(subs))
    return sp.Poly(expr, *gens)


# -- plain-dict oracle: full expansion, truncation only at the end ---------------

def dict_of(j):
    return {k.alpha + k.beta: c for k, c in j.coeffs.items()}


def dict_mul(p, q):
    out = {}
    for a, x in p.items():
        for b, y in q.items():
            e = tuple(u + v for u, v in zip(a, b))
            out[e] = out.get(e, 0) + x * y
    return out


def dict_compose(j, psi):
    n = j.dim
    images = [{tuple(a) + (0,) * n: c for a, c in comp} for comp in psi.components]
    images += [{(0,) * n + tuple(a): complex(c).conjugate() for a, c in comp} for comp in psi.components]
    total = {}
    for mon, c in dict_of(j).items():
        term = {(0,) * (2 * n): c}
        for v, e in enumerate(mon):
            for _ in range(e):
                term = dict_mul(term, images[v])
        for e, x in term.items():
            total[e] = total.get(e, 0) + x
    return total


def truncated(p, n):
    return {MonomialKey(e[:n], e[n:]): c for e, c in p.items() if sum(e) <= 4 and c != 0}


def assert_close(j, coeffs, tol=1e-12):
    keys = set(j.coeffs) | set(coeffs)
    for k in keys:
        assert abs(j.coeffs.get(k, 0) - coeffs.get(k, 0)) <= tol, k


# -- multiplication ----------------------------------------------------------

def test_multiply_identity():
    assert jet_multiply(RealJet.linear_normal(1), RealJet.one(1)) == RealJet.linear_normal(1)


def test_multiply_against_oracle():
    a = J1((0, 0, 1.0), (1, 0, -1.0))
    b = J1(LIN, (2, 0, 1.0), (1, 1, 3.0))
    got = jet_multiply(a, b)
    assert_close(got, from_poly(sympy_multiply(a, b), 1))
    # low-order part reads z + zbar + z zbar
    assert got.coeff((1,), (0,)) == 1 and got.coeff((1,), (1,)) == 1
    assert got.coeff((2,), (0,)) == 0


def test_multiply_dimension_mismatch():
    with pytest.raises(JetError):
        jet_multiply(RealJet.one(1), RealJet.one(2))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 2))
def test_reality_closure_and_truncation(seed, dim):
    rng = np.random.default_rng(seed)
    a, b = random_jet(rng, dim), random_jet(rng, dim)
    prod = jet_multiply(a, b)
    assert prod.is_real()
    for k, c in prod.coeffs.items():
        assert prod.coeffs.get(k.swap(), 0) == c.conjugate()
    assert_close(prod, truncated(dict_mul(dict_of(a), dict_of(b)), dim), 1e-10)


# -- composition -------------------------------------------------------------

def test_compose_identity():
    j = RealJet.linear_normal(1)
    assert jet_compose(j, PolynomialMap.identity(1)) == j


def test_compose_cubic():
    psi = PolynomialMap.from_dicts([{(1,): 1.0, (3,): -1.0}])
    got = jet_compose(RealJet.linear_normal(1), psi)
    assert got == J1(LIN, (3, 0, -1.0))


def test_compose_quadratic_against_oracle():
    psi = PolynomialMap.from_dicts([{(1,): 1.0, (2,): 1.0}])
    j = J1((1, 1, 1.0))
    got = jet_compose(j, psi)
    assert got == J1((1, 1, 1.0), (2, 1, 1.0), (2, 2, 1.0))
    assert_close(got, from_poly(sympy_compose(j, psi), 1))


def test_compose_rejects_singular_linear_part():
    with pytest.raises(JetError):
        PolynomialMap.from_dicts([{(2,): 1.0}])


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_compose_matches_oracle_two_variables(seed):
    rng = np.random.default_rng(seed)
    j = random_jet(rng, 2)
    c = lambda: complex(rng.normal(), rng.normal())  # noqa: E731
    psi = PolynomialMap.from_dicts([
        {(1, 0): 1.0, (1, 1): c(), (0, 2): c(), (2, 1): c()},
        {(0, 1): 1.0 + 0.5j, (1, 0): 0.3, (2, 0): c()},
    ])
    got = jet_compose(j, psi)
    assert got.is_real()
    assert_close(got, truncated(dict_compose(j, psi), 2), 1e-9)


# -- curvature ---------------------------------------------------------------

@pytest.mark.parametrize("terms, kappa", [
    ([LIN, (2, 0, 1.0), (1, 1, 3.0)], 1.0),
    ([LIN, (1, 1, 1.0)], 1.0),
    ([LIN, (2, 0, 1j), (1, 1, 3.0)], 3.0),
])
def test_planar_curvature(terms, kappa):
    assert planar_curvature(J1(*terms)) == pytest.approx(kappa, abs=1e-15)


def test_planar_curvature_needs_normal_linear_part():
    with pytest.raises(JetError):
        planar_curvature(J1((1, 0, 2.0), (1, 1, 1.0)))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
       st.floats(-3, 3))
def test_curvature_transformation_rules(seed, a, b):
    j = random_jet(np.random.default_rng(seed), 1)
    k = planar_curvature(j)
    mult = RealJet.from_terms(1, [((0,), (0,), 1.0), ((1,), (0,), -a)])
    assert planar_curvature(jet_multiply(j, mult)) == pytest.approx(k, abs=1e-12 * (1 + abs(a)))
    rot = PolynomialMap.from_dicts([{(1,): 1.0, (2,): 1j * b}])
    assert planar_curvature(jet_compose(j, rot)) == pytest.approx(k, abs=1e-12 * (1 + abs(b)))
    tol = 1e-12 * (1 + abs(a)) ** 4
    # the pullback through psi = z + a z^2 defines psi^{-1}(D)
    shift = PolynomialMap.from_dicts([{(1,): 1.0, (2,): a}])
    assert planar_curvature(jet_compose(j, shift)) == pytest.approx(k - 2 * a.real, abs=tol)
    # the image psi(D) is defined through the inverse series z - a z^2 + 2a^2 z^3 - 5a^3 z^4
    inverse = PolynomialMap.from_dicts([{(1,): 1.0, (2,): -a, (3,): 2 * a * a, (4,): -5 * a**3}])
    assert planar_curvature(jet_compose(j, inverse)) == pytest.approx(k + 2 * a.real, abs=tol)


def test_hessian_examples():
    assert hessian_form(J1((1, 1, 1.0)), 0, [1, 0]) == pytest.approx(2)
    assert hessian_form(RealJet.linear_normal(1), 0, [0.3, -2]) == 0
    j = J1(LIN, (1, 1, 1.0))
    # finite differences of 2x + x^2 + y^2 along y
    f = lambda y: 2 * 0 + 0 + y * y  # noqa: E731
    h = 1e-4
    fd = (f(h) - 2 * f(0) + f(-h)) / h**2
    assert hessian_form(j, 0, [0, 1]) == pytest.approx(fd, rel=1e-8)


def test_hessian_away_from_origin_matches_finite_differences():
    j = random_jet(np.random.default_rng(3), 2)
    p = np.array([0.1 - 0.05j, 0.07j])
    v = np.array([0.3, -1.0, 0.5, 0.2])
    dz = v[0::2] + 1j * v[1::2]
    h = 1e-4
    fd = (j(p + h * dz) - 2 * j(p) + j(p - h * dz)) / h**2
    assert hessian_form(j, p, v) == pytest.approx(fd, rel=1e-6)


def test_kappa_p_examples():
    assert kappa_p(J1(LIN, (1, 1, 1.0))) == pytest.approx(1.0, abs=1e-14)
    two = RealJet.from_terms(2, [((1, 0), (0, 0), 1.0), ((1, 0), (1, 0), 1.0), ((0, 1), (0, 1), 1.0)])
    assert kappa_p(two) == pytest.approx(1.0, abs=1e-14)
    assert kappa_p(J1(LIN, (1, 1, 1.0)).scaled(2.0)) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(JetError):
        kappa_p(J1((1, 1, 1.0)))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_kappa_p_equals_planar_curvature(seed):
    j = random_jet(np.random.default_rng(seed), 1)
    assert kappa_p(j) == pytest.approx(planar_curvature(j), abs=1e-12)


# -- normal forms ------------------------------------------------------------

def test_planar_normal_form_of_translated_disk():
    rep = normalize_planar(J1(LIN, (1, 1, 1.0)), 1.0)
    assert rep.final_jet == J1(LIN, (1, 1, 1.0), (2, 2, 1.0))
    assert rep.kappa == 1.0


def test_planar_normal_form_preserves_curvature():
    rep = normalize_planar(J1(LIN, (2, 0, 1.0), (1, 1, 3.0)), 0.7)
    assert rep.kappa == 1.0
    assert rep.final_jet.coeff((1,), (1,)).real == pytest.approx(1.0, abs=1e-14)


def test_planar_step_order():
    rep = normalize_planar(random_jet(np.random.default_rng(0), 1), 0.0)
    kinds = [s.kind for s in rep.steps]
    assert kinds[0] == "multiplier"
    assert rep.steps[-1].kind == "coordinate-change"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(-2, 2))
def test_planar_normal_form_property(seed, target):
    j = random_jet(np.random.default_rng(seed), 1)
    rep = normalize_planar(j, target)
    assert planar_pattern_residual(rep.final_jet, target) <= 1e-12
    assert rep.replay(j) == rep.final_jet
    assert rep.final_jet.is_real()


def test_scv_already_normal():
    j = RealJet.from_terms(2, [((1, 0), (0, 0), 1.0), ((1, 0), (1, 0), 1.0), ((0, 1), (0, 1), 1.0)])
    rep = normalize_scv(j)
    assert rep.kappa == 1.0 and rep.tau > 0
    assert rep.steps[-1].label == "quartic term"
    assert rep.final_jet.coeff((0, 2), (0, 2)) == pytest.approx(0.25)
    assert scv_pattern_residual(rep.final_jet) <= 1e-12


def test_scv_removes_holomorphic_quadratic():
    j = RealJet.from_terms(2, [((1, 0), (0, 0), 1.0), ((1, 0), (1, 0), 1.0), ((0, 1), (0, 1), 1.0),
                               ((1, 1), (0, 0), 1.0)])
    rep = normalize_scv(j)
    step = next(s for s in rep.steps if s.label == "holomorphic quadratic")
    assert dict(step.change.components[0]) == {(1, 0): 1.0, (1, 1): -1.0}
    assert scv_pattern_residual(rep.final_jet) <= 1e-12
    # the recorded change agrees with direct symbolic substitution
    before = RealJet(2, j.coeffs)
    for s in rep.steps[: rep.steps.index(step)]:
        before = s.apply(before)
    assert_close(step.apply(before), truncated(dict_compose(before, step.change), 2), 1e-10)


def test_scv_rejects_indefinite_hessian():
    j = RealJet.from_terms(3, [((1, 0, 0), (0, 0, 0), 1.0), ((0, 1, 0), (0, 1, 0), 1.0),
                               ((0, 0, 1), (0, 0, 1), -1.0)])
    with pytest.raises(JetError):
        normalize_scv(j)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_scv_normal_form_property(seed):
    j = random_jet(np.random.default_rng(seed), 2)
    rep = normalize_scv(j)
    assert scv_pattern_residual(rep.final_jet) <= 1e-12
    assert rep.tau > 0
    assert rep.replay(j) == rep.final_jet
    assert rep.kappa == planar_curvature(j.slice_first())


def test_text_round_trip():
    j = random_jet(np.random.default_rng(5), 2)
    assert RealJet.from_text(j.to_text()) == j
    assert RealJet.from_text("1 0 1 0\n0 1 1 0\n") == RealJet.linear_normal(1)


def test_reality_is_enforced():
    with pytest.raises(JetError):
        RealJet(1, {MonomialKey((1,), (0,)): 1.0, MonomialKey((0,), (1,)): 2.0})
