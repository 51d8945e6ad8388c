"""Truncated Taylor jets of real defining functions and their normal forms.

A jet is a real-valued polynomial of total degree <= 4 in ``z`` and ``conj(z)``
(n complex variables), stored through its Hermitian coefficient table

    phi(z) = sum_{alpha, beta} c[alpha, beta] z^alpha conj(z)^beta,
    c[beta, alpha] = conj(c[alpha, beta]).

Two kinds of normalising steps act on jets: multiplication by a real
multiplier (another jet with constant term 1) and substitution of a
holomorphic polynomial map tangent to a linear isomorphism.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

MAXDEG = 4
ZERO_TOL = 1e-12


class JetError(ValueError):
    pass


class MonomialKey(NamedTuple):
    alpha: tuple[int, ...]
    beta: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.alpha) + sum(self.beta)

    def swap(self) -> "MonomialKey":
        return MonomialKey(self.beta, self.alpha)


def _unit(n: int, i: int, k: int = 1) -> tuple[int, ...]:
    e = [0] * n
    e[i] = k
    return tuple(e)


def _zero(n: int) -> tuple[int, ...]:
    return (0,) * n


def _add(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


# ---------------------------------------------------------------------------
# raw polynomial arithmetic in (z, conj z), truncated at MAXDEG


def _poly_mul(p: Mapping[MonomialKey, complex], q: Mapping[MonomialKey, complex]) -> dict:
    out: dict[MonomialKey, complex] = {}
    for kp, cp in p.items():
        dp = kp.degree
        for kq, cq in q.items():
            if dp + kq.degree > MAXDEG:
                continue
            key = MonomialKey(_add(kp.alpha, kq.alpha), _add(kp.beta, kq.beta))
            out[key] = out.get(key, 0j) + cp * cq
    return out


def _poly_add(p: Mapping, q: Mapping, scale: complex = 1.0) -> dict:
    out = dict(p)
    for k, c in q.items():
        out[k] = out.get(k, 0j) + scale * c
    return out


def _deriv(p: Mapping[MonomialKey, complex], i: int, anti: bool) -> dict:
    out: dict[MonomialKey, complex] = {}
    for k, c in p.items():
        e = k.beta if anti else k.alpha
        if e[i] == 0:
            continue
        e2 = list(e)
        e2[i] -= 1
        key = MonomialKey(k.alpha, tuple(e2)) if anti else MonomialKey(tuple(e2), k.beta)
        out[key] = out.get(key, 0j) + c * e[i]
    return out


def _poly_eval(p: Mapping[MonomialKey, complex], z: np.ndarray) -> complex:
    zb = np.conj(z)
    total = 0j
    for k, c in p.items():
        total += c * np.prod(z ** np.array(k.alpha)) * np.prod(zb ** np.array(k.beta))
    return complex(total)


# ---------------------------------------------------------------------------


class RealJet:
    """Degree-4 jet of a real function of n complex variables.

    The Hermitian constraint is checked on construction (relative tolerance
    ``ZERO_TOL``) and then enforced exactly: each conjugate pair is stored as
    a value and its conjugate, diagonal keys as real numbers.
    """

    __slots__ = ("dim", "coeffs")

    def __init__(self, dim: int, coeffs: Mapping[MonomialKey, complex] | None = None, *, check: bool = True):
        if dim < 1:
            raise JetError("dimension must be positive")
        self.dim = dim
        raw: dict[MonomialKey, complex] = {}
        for key, c in (coeffs or {}).items():
            key = MonomialKey(tuple(key[0]), tuple(key[1]))
            if len(key.alpha) != dim or len(key.beta) != dim:
                raise JetError(f"multi-index {key} does not match dimension {dim}")
            if min(key.alpha + key.beta) < 0:
                raise JetError(f"negative exponent in {key}")
            if key.degree > MAXDEG:
                continue
            raw[key] = raw.get(key, 0j) + complex(c)
        scale = max((abs(c) for c in raw.values()), default=0.0)
        canon: dict[MonomialKey, complex] = {}
        for key, c in raw.items():
            mate = key.swap()
            cm = raw.get(mate, 0j)
            if check and abs(c - cm.conjugate()) > ZERO_TOL * max(scale, 1.0):
                raise JetError(f"coefficients of {key} and {mate} are not conjugate: {c} vs {cm}")
            if key == mate:
                val = complex(0.5 * (c.real + cm.real), 0.0)
            elif key < mate:
                val = 0.5 * (c + cm.conjugate())
            else:
                val = 0.5 * (cm + c.conjugate()).conjugate()
            if val != 0:
                canon[key] = val
        self.coeffs = canon

    # -- construction helpers -------------------------------------------
    @classmethod
    def from_terms(cls, dim: int, terms: Iterable[tuple[Sequence[int], Sequence[int], complex]]) -> "RealJet":
        """Build from (alpha, beta, c) triples; conjugate partners are added.

        Each triple contributes ``c z^alpha zbar^beta`` plus its conjugate when
        alpha != beta, so callers list one representative per real term.
        """
        acc: dict[MonomialKey, complex] = {}
        for a, b, c in terms:
            key = MonomialKey(tuple(a), tuple(b))
            acc[key] = acc.get(key, 0j) + complex(c)
            if key.alpha != key.beta:
                mate = key.swap()
                acc[mate] = acc.get(mate, 0j) + complex(c).conjugate()
        return cls(dim, acc)

    @classmethod
    def one(cls, dim: int) -> "RealJet":
        return cls(dim, {MonomialKey(_zero(dim), _zero(dim)): 1.0})

    @classmethod
    def linear_normal(cls, dim: int) -> "RealJet":
        """The jet 2 Re(z_1)."""
        return cls.from_terms(dim, [(_unit(dim, 0), _zero(dim), 1.0)])

    # -- access -----------------------------------------------------------
    def coeff(self, alpha: Sequence[int], beta: Sequence[int]) -> complex:
        return self.coeffs.get(MonomialKey(tuple(alpha), tuple(beta)), 0j)

    def __getitem__(self, key) -> complex:
        return self.coeff(key[0], key[1])

    def degree_part(self, d: int) -> "RealJet":
        return RealJet(self.dim, {k: c for k, c in self.coeffs.items() if k.degree == d}, check=False)

    def max_abs(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def __call__(self, z) -> float:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if z.shape != (self.dim,):
            raise JetError("point has wrong dimension")
        return _poly_eval(self.coeffs, z).real

    def is_real(self, tol: float = 0.0) -> bool:
        for k, c in self.coeffs.items():
            if abs(c - self.coeff(k.beta, k.alpha).conjugate()) > tol:
                return False
        return True

    def __eq__(self, other) -> bool:
        return isinstance(other, RealJet) and self.dim == other.dim and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        return f"RealJet(dim={self.dim}, {len(self.coeffs)} terms)"

    def __add__(self, other: "RealJet") -> "RealJet":
        _same_dim(self, other)
        return RealJet(self.dim, _poly_add(self.coeffs, other.coeffs), check=False)

    def __sub__(self, other: "RealJet") -> "RealJet":
        _same_dim(self, other)
        return RealJet(self.dim, _poly_add(self.coeffs, other.coeffs, -1.0), check=False)

    def scaled(self, s: float) -> "RealJet":
        return RealJet(self.dim, {k: s * c for k, c in self.coeffs.items()}, check=False)

    def slice_first(self) -> "RealJet":
        """Restriction to the z_1-line (z' = 0), as a one-variable jet."""
        out = {}
        for k, c in self.coeffs.items():
            if any(k.alpha[1:]) or any(k.beta[1:]):
                continue
            out[MonomialKey(k.alpha[:1], k.beta[:1])] = c
        return RealJet(1, out, check=False)

    # -- text format ------------------------------------------------------
    def to_text(self) -> str:
        lines = []
        for k in sorted(self.coeffs):
            c = self.coeffs[k]
            a = ",".join(map(str, k.alpha))
            b = ",".join(map(str, k.beta))
            lines.append(f"{a} {b} {c.real!r} {c.imag!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, dim: int | None = None) -> "RealJet":
        """Parse ``alpha beta re im`` lines (``#`` starts a comment).

        Every stored coefficient is listed, conjugate partners included, so
        ``from_text(j.to_text()) == j`` exactly.
        """
        coeffs: dict[MonomialKey, complex] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 4:
                raise JetError(f"line {lineno}: expected 'alpha beta re im'")
            try:
                a = tuple(int(x) for x in parts[0].split(","))
                b = tuple(int(x) for x in parts[1].split(","))
                c = complex(float(parts[2]), float(parts[3]))
            except ValueError as exc:
                raise JetError(f"line {lineno}: {exc}") from None
            if dim is None:
                dim = len(a)
            key = MonomialKey(a, b)
            coeffs[key] = coeffs.get(key, 0j) + c
        if dim is None:
            raise JetError("empty jet literal and no dimension given")
        return cls(dim, coeffs)


def _same_dim(a, b) -> None:
    if a.dim != b.dim:
        raise JetError(f"dimension mismatch: {a.dim} vs {b.dim}")


@dataclass(frozen=True)
class PolynomialMap:
    """Holomorphic polynomial map C^n -> C^n fixing the origin.

    ``components[i]`` maps holomorphic multi-indices to coefficients.
    """

    dim: int
    components: tuple[tuple[tuple[tuple[int, ...], complex], ...], ...]

    def __post_init__(self):
        if len(self.components) != self.dim:
            raise JetError("one component per variable required")
        for comp in self.components:
            for a, _ in comp:
                if len(a) != self.dim:
                    raise JetError("multi-index has wrong length")
                if sum(a) == 0:
                    raise JetError("polynomial map must fix the origin")
                if sum(a) > MAXDEG:
                    raise JetError("component degree exceeds 4")
        if abs(np.linalg.det(self.linear_part())) < 1e-14:
            raise JetError("polynomial map has non-invertible linear part")

    @classmethod
    def from_dicts(cls, comps: Sequence[Mapping[tuple[int, ...], complex]]) -> "PolynomialMap":
        n = len(comps)
        return cls(n, tuple(tuple(sorted((tuple(a), complex(c)) for a, c in comp.items() if c != 0)) for comp in comps))

    @classmethod
    def identity(cls, dim: int) -> "PolynomialMap":
        return cls.from_dicts([{_unit(dim, i): 1.0} for i in range(dim)])

    def linear_part(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=complex)
        for i, comp in enumerate(self.components):
            for a, c in comp:
                if sum(a) == 1:
                    m[i, a.index(1)] += c
        return m

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.array([sum(c * np.prod(z ** np.array(a)) for a, c in comp) for comp in self.components])


# ---------------------------------------------------------------------------
# operations


def jet_multiply(a: RealJet, b: RealJet) -> RealJet:
    _same_dim(a, b)
    return RealJet(a.dim, _poly_mul(a.coeffs, b.coeffs), check=False)


def jet_compose(j: RealJet, psi: PolynomialMap) -> RealJet:
    """Pull back ``j`` through ``psi``: the jet of ``j(psi(z))``."""
    if j.dim != psi.dim:
        raise JetError(f"dimension mismatch: {j.dim} vs {psi.dim}")
    n = j.dim
    zero = _zero(n)
    var_images: list[dict] = []
    for comp in psi.components:
        var_images.append({MonomialKey(a, zero): c for a, c in comp})
    for comp in psi.components:
        var_images.append({MonomialKey(zero, a): c.conjugate() for a, c in comp})

    memo: dict[tuple[int, ...], dict] = {(0,) * (2 * n): {MonomialKey(zero, zero): 1.0 + 0j}}

    def image(e: tuple[int, ...]) -> dict:
        if e in memo:
            return memo[e]
        v = next(i for i, x in enumerate(e) if x)
        lower = list(e)
        lower[v] -= 1
        res = _poly_mul(image(tuple(lower)), var_images[v])
        memo[e] = res
        return res

    out: dict[MonomialKey, complex] = {}
    for key in sorted(j.coeffs):
        c = j.coeffs[key]
        for k2, c2 in image(key.alpha + key.beta).items():
            out[k2] = out.get(k2, 0j) + c * c2
    return RealJet(n, out, check=False)


def _check_linear_normal(j: RealJet) -> None:
    n = j.dim
    zero = _zero(n)
    scale = max(j.max_abs(), 1.0)
    if abs(j.coeff(zero, zero)) > ZERO_TOL * scale:
        raise JetError("defining-function jet must vanish at the origin")
    for i in range(n):
        want = 1.0 if i == 0 else 0.0
        if abs(j.coeff(_unit(n, i), zero) - want) > ZERO_TOL * scale:
            raise JetError("linear part must equal 2 Re(z_1)")


def planar_curvature(j: RealJet) -> float:
    """b - 2 Re(a) for j = 2 Re(z + a z^2) + b |z|^2 + O(|z|^3)."""
    if j.dim != 1:
        raise JetError("planar_curvature needs a one-variable jet")
    _check_linear_normal(j)
    a = j.coeff((2,), (0,))
    b = j.coeff((1,), (1,)).real
    return b - 2.0 * a.real


def _direction_operator(p: Mapping, w: np.ndarray) -> dict:
    """Apply sum_k w_k d/dz_k + conj(w_k) d/dzbar_k (a real directional derivative)."""
    out: dict[MonomialKey, complex] = {}
    for k in range(len(w)):
        if w[k] == 0:
            continue
        out = _poly_add(out, _deriv(p, k, anti=False), complex(w[k]))
        out = _poly_add(out, _deriv(p, k, anti=True), complex(w[k]).conjugate())
    return out


def _real_to_complex(v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (2 * n,):
        raise JetError(f"real vector must have length {2 * n}")
    return v[0::2] + 1j * v[1::2]


def hessian_form(j: RealJet, p=None, v=None) -> float:
    """Real Hessian of the jet polynomial at ``p`` applied to the real vector ``v``.

    Coordinates are ordered (x_1, y_1, ..., x_n, y_n) with z_k = x_k + i y_k.
    """
    n = j.dim
    p = np.zeros(n, dtype=complex) if p is None else np.atleast_1d(np.asarray(p, dtype=complex))
    if p.shape != (n,):
        raise JetError("point has wrong dimension")
    w = _real_to_complex(v, n)
    d2 = _direction_operator(_direction_operator(j.coeffs, w), w)
    return _poly_eval(d2, p).real


def gradient(j: RealJet, p=None) -> np.ndarray:
    n = j.dim
    p = np.zeros(n, dtype=complex) if p is None else np.atleast_1d(np.asarray(p, dtype=complex))
    g = np.empty(2 * n)
    for k in range(n):
        dk = _poly_eval(_deriv(j.coeffs, k, anti=False), p)
        g[2 * k] = 2.0 * dk.real
        g[2 * k + 1] = -2.0 * dk.imag
    return g


def kappa_p(j: RealJet, etap=None) -> float:
    """Curvature H(J eta)/|eta|^3 of the boundary slice along the complex normal."""
    eta = gradient(j) if etap is None else np.asarray(etap, dtype=float)
    norm = float(np.linalg.norm(eta))
    if norm == 0.0:
        raise JetError("zero gradient: not a defining function at the origin")
    jeta = np.empty_like(eta)
    jeta[0::2] = -eta[1::2]
    jeta[1::2] = eta[0::2]
    return hessian_form(j, None, jeta) / norm**3


# ---------------------------------------------------------------------------
# normal forms


@dataclass(frozen=True)
class Step:
    kind: str  # "multiplier" or "coordinate-change"
    label: str
    multiplier: RealJet | None = None
    change: PolynomialMap | None = None

    def apply(self, j: RealJet) -> RealJet:
        if self.kind == "multiplier":
            return jet_multiply(j, self.multiplier)
        return jet_compose(j, self.change)


@dataclass
class NormalFormReport:
    steps: list[Step]
    final_jet: RealJet
    kappa: float
    quartic: float | None = None
    tau: float | None = None
    linear_change: np.ndarray | None = field(default=None, repr=False)

    def replay(self, j: RealJet) -> RealJet:
        for s in self.steps:
            j = s.apply(j)
        return j


class _Pipeline:
    def __init__(self, jet: RealJet):
        self.jet = jet
        self.steps: list[Step] = []

    def multiply(self, label: str, terms) -> None:
        n = self.jet.dim
        zero = _zero(n)
        m = RealJet.from_terms(n, [(zero, zero, 1.0)] + [(a, b, -c) for a, b, c in terms if c != 0])
        if len(m.coeffs) == 1:
            return
        self._push(Step("multiplier", label, multiplier=m))

    def change(self, label: str, comps) -> None:
        psi = PolynomialMap.from_dicts(comps)
        if psi == PolynomialMap.identity(self.jet.dim):
            return
        self._push(Step("coordinate-change", label, change=psi))

    def _push(self, step: Step) -> None:
        self.steps.append(step)
        self.jet = step.apply(self.jet)


def _first_variable_steps(pl: _Pipeline, target_quartic: float) -> None:
    """Normalise the z_1 slice to 2Re z_1 + kappa|z_1|^2 + target|z_1|^4.

    Multipliers and coordinate changes involve z_1 only, so in several
    variables the slice evolves exactly as in the one-variable problem.
    """
    n = pl.jet.dim
    z = lambda k: _unit(n, 0, k)  # noqa: E731
    zero = _zero(n)

    def c(k, l):
        return pl.jet.coeff(z(k) if k else zero, z(l) if l else zero)

    def e1_poly(k, coef):
        comps = [{_unit(n, i): 1.0} for i in range(n)]
        comps[0] = {_unit(n, 0): 1.0, z(k): coef}
        return comps

    a = c(2, 0)
    pl.multiply("quadratic", [(z(1), zero, a)])
    mixed = c(1, 2)
    pl.multiply("mixed cubic", [(z(2), zero, mixed.conjugate())])
    pure = c(3, 0)
    if pure != 0:
        pl.change("pure cubic", e1_poly(3, -pure))
    s = 0.5 * (c(2, 2).real - target_quartic)
    pl.multiply("quartic |z|^4", [(z(1), z(2), s)])
    f = c(3, 1)
    pl.multiply("quartic z^3 zbar", [(z(3), zero, f)])
    d40 = c(4, 0)
    if d40 != 0:
        pl.change("pure quartic", e1_poly(4, -d40))


def normalize_planar(j: RealJet, target_quartic: float = 0.0) -> NormalFormReport:
    """Bring ``2Re z + h.o.t.`` to ``2Re z + kappa|z|^2 + target|z|^4`` (degree 4)."""
    if j.dim != 1:
        raise JetError("normalize_planar needs a one-variable jet")
    kappa = planar_curvature(j)
    pl = _Pipeline(j)
    _first_variable_steps(pl, float(target_quartic))
    final = pl.jet
    return NormalFormReport(pl.steps, final, kappa=kappa, quartic=final.coeff((2,), (2,)).real)


def planar_pattern_residual(j: RealJet, target_quartic: float) -> float:
    """Largest deviation from 2Re z + kappa|z|^2 + target|z|^4, relative to max |coeff|."""
    allowed = {((1,), (0,)), ((0,), (1,)), ((1,), (1,))}
    worst = abs(j.coeff((2,), (2,)) - target_quartic)
    worst = max(worst, abs(j.coeff((1,), (0,)) - 1.0))
    for k, c in j.coeffs.items():
        if (k.alpha, k.beta) in allowed or (k.alpha, k.beta) == ((2,), (2,)):
            continue
        worst = max(worst, abs(c))
    return worst / max(j.max_abs(), 1.0)


def _hermitian_block(j: RealJet) -> np.ndarray:
    n = j.dim
    h = np.zeros((n - 1, n - 1), dtype=complex)
    for i in range(1, n):
        for k in range(1, n):
            h[i - 1, k - 1] = j.coeff(_unit(n, i), _unit(n, k))
    return h


def _diagonalizing_matrix(h: np.ndarray) -> np.ndarray:
    """B with B^T h conj(B) = I, i.e. sum h_ik z_i conj(z_k) = |w|^2 for z' = B w'."""
    hb = np.conj(h)
    evals, evecs = np.linalg.eigh(hb)
    if evals.min() <= 1e-12 * max(1.0, abs(evals).max()):
        raise JetError("complex Hessian in z' is not positive definite: not strictly pseudoconvex")
    order = np.argsort(-evals, kind="stable")
    evals, evecs = evals[order], evecs[:, order]
    for col in range(evecs.shape[1]):
        v = evecs[:, col]
        lead = v[np.flatnonzero(np.abs(v) > 1e-14)[0]]
        evecs[:, col] = v * (abs(lead) / lead)
    return evecs / np.sqrt(evals)


def normalize_scv(j: RealJet, tau_tilde: float = 0.5) -> NormalFormReport:
    """Normal form 2Re z_1 + kappa|z_1|^2 + |z'|^2 + tau|z_1|^4 + (allowed terms).

    Allowed remainder: monomials of degree >= 3 that are at least quadratic
    in z' (they are O(|z'|^2)O(|z|)).
    """
    n = j.dim
    if n < 2:
        raise JetError("normalize_scv needs at least two variables")
    _check_linear_normal(j)
    zero = _zero(n)
    e = lambda i, k=1: _unit(n, i, k)  # noqa: E731
    # strict pseudoconvexity is a property of the input; check before any step
    _diagonalizing_matrix(_hermitian_block(j))

    kappa = planar_curvature(j.slice_first())
    pl = _Pipeline(j)
    _first_variable_steps(pl, 1.0)

    b_mat = _diagonalizing_matrix(_hermitian_block(pl.jet))
    comps = [{e(0): 1.0}]
    for i in range(1, n):
        comps.append({e(k): b_mat[i - 1, k - 1] for k in range(1, n) if b_mat[i - 1, k - 1] != 0})
    pl.change("diagonalise z' Hessian", comps)

    # b_j z_1 zbar_j terms
    terms = []
    for jj in range(1, n):
        b = pl.jet.coeff(e(0), e(jj))
        terms.append((zero, e(jj), b))
    pl.multiply("mixed z_1 zbar_j", terms)

    # holomorphic quadratic terms, z_1^2 excluded (already zero)
    quad = {}
    for k, c in pl.jet.coeffs.items():
        if k.degree == 2 and sum(k.beta) == 0 and k.alpha != e(0, 2):
            quad[k.alpha] = -c
    if quad:
        comps = [{e(0): 1.0, **quad}] + [{e(i): 1.0} for i in range(1, n)]
        pl.change("holomorphic quadratic", comps)

    # terms linear in z': a z_j z_1^k zbar_1^l, k + l = 2 then 3
    for total in (2, 3):
        for jj in range(1, n):
            for l in range(total, 0, -1):
                k = total - l
                a = pl.jet.coeff(_add(e(jj), e(0, k)), e(0, l))
                pl.multiply(f"z_{jj + 1} z_1^{k} zbar_1^{l}", [(_add(e(jj), e(0, k)), e(0, l - 1), a)])
            a = pl.jet.coeff(_add(e(jj), e(0, total)), zero)
            if a != 0:
                comps = [{e(0): 1.0, _add(e(jj), e(0, total)): -a}] + [{e(i): 1.0} for i in range(1, n)]
                pl.change(f"z_{jj + 1} z_1^{total}", comps)

    comps = [{e(0): 1.0}] + [{e(i): 1.0, e(i, 2): tau_tilde} for i in range(1, n)]
    pl.change("quartic term", comps)

    final = pl.jet
    tau = final.coeff(e(0, 2), e(0, 2)).real
    return NormalFormReport(pl.steps, final, kappa=kappa, tau=tau, linear_change=b_mat)


def scv_pattern_residual(j: RealJet) -> float:
    """Largest off-pattern coefficient of an SCV normal form, relative to max |coeff|."""
    n = j.dim
    zero = _zero(n)
    e1 = _unit(n, 0)
    worst = abs(j.coeff(e1, zero) - 1.0)
    for k, c in j.coeffs.items():
        zp = sum(k.alpha[1:]) + sum(k.beta[1:])
        d = k.degree
        if d == 1:
            ok = k.alpha == e1 or k.beta == e1
        elif d == 2:
            if zp == 0:
                ok = k.alpha == e1 and k.beta == e1
            elif zp == 2 and sum(k.alpha) == 1:
                ok = True  # Hermitian z' block, checked below
            else:
                ok = False
        elif zp == 0:
            ok = k.alpha == _unit(n, 0, 2) and k.beta == _unit(n, 0, 2)
        else:
            ok = zp >= 2
        if not ok:
            worst = max(worst, abs(c))
    h = _hermitian_block(j)
    worst = max(worst, float(np.abs(h - np.eye(n - 1)).max()))
    return worst / max(j.max_abs(), 1.0)


def random_jet(rng: np.random.Generator, dim: int = 1, scale: float = 1.0) -> RealJet:
    """Random real jet with linear part 2Re(z_1); the z' Hessian block is positive definite."""
    zero = _zero(dim)
    terms = [(_unit(dim, 0), zero, 1.0)]
    seen = set()
    for d in range(2, MAXDEG + 1):
        for key in _keys_of_degree(dim, d):
            if key in seen or key.swap() in seen:
                continue
            seen.add(key)
            c = scale * complex(rng.normal(), rng.normal())
            if key.alpha == key.beta:
                c = c.real
            terms.append((key.alpha, key.beta, c))
    j = RealJet.from_terms(dim, terms)
    if dim > 1:
        m = rng.normal(size=(dim - 1, dim - 1)) + 1j * rng.normal(size=(dim - 1, dim - 1))
        h = m @ m.conj().T + 0.5 * np.eye(dim - 1)
        coeffs = dict(j.coeffs)
        for i in range(1, dim):
            for k in range(1, dim):
                coeffs[MonomialKey(_unit(dim, i), _unit(dim, k))] = h[i - 1, k - 1]
        j = RealJet(dim, coeffs)
    return j


def _keys_of_degree(dim: int, d: int):
    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    for e in compositions(d, 2 * dim):
        yield MonomialKey(e[:dim], e[dim:])


def binomial_count(dim: int) -> int:
    return math.comb(2 * dim + MAXDEG, MAXDEG)
