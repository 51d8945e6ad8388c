"""Invariant metric densities on planar domains and on the unit ball.

Normalisation: the unit-disk density is 1/(1 - |z|^2), so hyperbolic
lengths are artanh-distances (the curvature -4 metric).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .geometry import GeometryError, PlanarDomain, boundary_distance, interior_samples
from .potential import (
    DEFAULT_NODES,
    AnnulusChart,
    DiskChart,
    PoleProximityError,
    build_solver,
    greens,
    robin_constant,
)


class MetricKind(str, Enum):
    KOBAYASHI = "kobayashi"
    CARATHEODORY = "caratheodory"
    SUITA = "suita"
    BALL = "ball"


class UnsupportedDomain(ValueError):
    pass


@dataclass(frozen=True)
class MetricSample:
    point: complex
    direction: complex
    kind: MetricKind
    value: float
    delta: float


# ---------------------------------------------------------------------------
# model domains


def disk_density(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    if np.any(r >= 1):
        raise ValueError("disk_density needs |z| < 1")
    return 1.0 / ((1.0 - r) * (1.0 + r))


def round_disk_density(center: complex, radius: float, z) -> np.ndarray:
    """R / (R^2 - |z - c|^2), written to keep digits next to the boundary."""
    r = np.abs(np.asarray(z, dtype=complex) - center)
    if np.any(r >= radius):
        raise ValueError("point outside the disk")
    return radius / ((radius - r) * (radius + r))


def annulus_density(q: float, w) -> np.ndarray:
    """Poincare density of {q < |w| < 1} from its strip covering w = exp(zeta)."""
    w = np.asarray(w, dtype=complex)
    r = np.abs(w)
    if np.any((r <= q) | (r >= 1)):
        raise ValueError("point outside the annulus")
    width = -math.log(q)
    return math.pi / (2 * width * r * np.sin(math.pi * np.log(r / q) / width))


def annulus_robin(q: float, w) -> np.ndarray:
    """Robin constant h_w(w) of {q < |w| < 1}, from the Laurent-series Green's function.

    Closed-form logarithms carry the slowly convergent parts; the remaining
    series converges like q^(4k).
    """
    r = np.abs(np.asarray(w, dtype=complex))
    if np.any((r <= q) | (r >= 1)):
        raise ValueError("point outside the annulus")
    logr = np.log(r)
    q2 = q * q
    val = (
        -(logr**2) / math.log(q)
        - np.log1p(-r * r)
        - np.log1p(-q2 / (r * r))
        - np.log1p(-q2 * r * r)
        + 2 * math.log1p(-q2)
    )
    k = 1
    while True:
        q2k = q2**k
        term = q2k * q2k * (r ** (-k) - r**k) ** 2 / (k * (1 - q2k))
        val = val + term
        if np.all(term <= 1e-18 * np.abs(val) + 1e-300) or k > 10000:
            break
        k += 1
    return val


def annulus_suita(q: float, w) -> np.ndarray:
    return np.exp(annulus_robin(q, w))


def ball_kobayashi(n: int, z, v) -> float:
    """Kobayashi metric of the unit ball in C^n for v complex-parallel to z (or z = 0)."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    if z.shape != (n,) or v.shape != (n,):
        raise ValueError("point and direction must have n components")
    nz = float(np.linalg.norm(z))
    if nz >= 1:
        raise ValueError("point outside the unit ball")
    nv = float(np.linalg.norm(v))
    if nz > 0 and nv > 0 and abs(abs(np.vdot(z, v)) - nz * nv) > 1e-12 * nz * nv:
        raise ValueError("ball_kobayashi is implemented for radial directions only")
    return nv / ((1.0 - nz) * (1.0 + nz))


# ---------------------------------------------------------------------------
# charts


@lru_cache(maxsize=32)
def disk_chart(domain: PlanarDomain, nodes: int = DEFAULT_NODES, center: complex | None = None) -> DiskChart:
    solver = build_solver(domain, nodes)
    if center is None:
        center = default_center(domain, nodes)
    return DiskChart(solver, center)


@lru_cache(maxsize=32)
def annulus_chart(domain: PlanarDomain, nodes: int = DEFAULT_NODES) -> AnnulusChart:
    return AnnulusChart(build_solver(domain, nodes))


def default_center(domain: PlanarDomain, nodes: int = DEFAULT_NODES) -> complex:
    solver = build_solver(domain, nodes)
    c = complex(dict(domain.outer.fourier).get(0, 0j))
    if abs(domain.winding(c) - 1) < 1e-6 and solver.boundary_gap(c)[0] > 0.2 * solver.characteristic_size():
        return c
    cand = interior_samples(domain, 64, 2 * solver.spacing)
    return complex(cand[np.argmax(solver.boundary_gap(cand))])


def _require_connectivity(D: PlanarDomain) -> None:
    if D.connectivity > 2:
        raise UnsupportedDomain("connectivity > 2 is not supported")


def _sample(D, z, kind, value, direction=1.0) -> MetricSample:
    delta, _ = boundary_distance(D, z)
    return MetricSample(complex(z), complex(direction), kind, float(value), float(delta))


# ---------------------------------------------------------------------------
# planar metrics


def kobayashi_value(D: PlanarDomain, z, nodes: int = DEFAULT_NODES, method: str = "auto", center=None) -> np.ndarray:
    """Kobayashi density at the points ``z`` (vectorised, no bookkeeping).

    ``method="auto"`` uses closed forms on round disks and concentric annuli
    and numerical charts elsewhere; ``method="chart"`` always uses charts.
    """
    _require_connectivity(D)
    z = np.asarray(z, dtype=complex)
    if method not in ("auto", "chart"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        disk = D.round_disk()
        if disk is not None:
            return round_disk_density(disk[0], disk[1], z)
        ann = D.round_annulus()
        if ann is not None:
            c, radius, q = ann
            return annulus_density(q, (z - c) / radius) / radius
    if D.connectivity == 1:
        chart = disk_chart(D, nodes, center)
        f = chart(z)
        return np.abs(chart.derivative(z)) / (1.0 - np.abs(f) ** 2)
    chart = annulus_chart(D, nodes)
    return annulus_density(chart.q, chart(z)) * np.abs(chart.derivative(z))


def kobayashi(D: PlanarDomain, z, nodes: int = DEFAULT_NODES, method: str = "auto", direction=1.0) -> MetricSample:
    value = kobayashi_value(D, complex(z), nodes, method)
    return _sample(D, z, MetricKind.KOBAYASHI, value[()], direction)


def caratheodory_value(D: PlanarDomain, z, nodes: int = DEFAULT_NODES, method: str = "auto") -> np.ndarray:
    if D.connectivity != 1:
        raise UnsupportedDomain("caratheodory: multiply connected unsupported")
    # the Riemann map is extremal for both problems on simply connected domains
    return kobayashi_value(D, z, nodes, method)


def caratheodory(D: PlanarDomain, z, nodes: int = DEFAULT_NODES, method: str = "auto", direction=1.0) -> MetricSample:
    value = caratheodory_value(D, complex(z), nodes, method)
    return _sample(D, z, MetricKind.CARATHEODORY, value[()], direction)


# Trapezoid error on the pole's boundary data decays like exp(-2 pi gap / h);
# six spacings puts it below 1e-15.
GREEN_SAFE_GAP = 6.0


def suita_value(D: PlanarDomain, a, nodes: int = DEFAULT_NODES, method: str = "auto") -> np.ndarray:
    """Suita density exp(h_a(a)).

    ``green``: Robin constant from the Dirichlet solver (pole guard applies).
    ``chart``: transport of the model density through the uniformising chart
    (on the annulus the model Robin constant is a Laurent series).
    ``auto``: closed forms on round domains, else ``green`` for poles at
    least GREEN_SAFE_GAP node spacings from the boundary and ``chart`` closer in.
    """
    _require_connectivity(D)
    a = np.asarray(a, dtype=complex)
    if method not in ("auto", "green", "chart"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        disk = D.round_disk()
        if disk is not None:
            return round_disk_density(disk[0], disk[1], a)
        ann = D.round_annulus()
        if ann is not None:
            c, radius, q = ann
            return annulus_suita(q, (a - c) / radius) / radius
    if method in ("auto", "green"):
        solver = build_solver(D, nodes)
        flat = a.ravel()
        out = np.empty(flat.shape)
        near = solver.boundary_gap(flat) < GREEN_SAFE_GAP * solver.spacing
        for i, p in enumerate(flat):
            if method == "auto" and near[i]:
                out[i] = _suita_chart(D, p, nodes)
                continue
            try:
                out[i] = math.exp(robin_constant(greens(solver, p)))
            except PoleProximityError:
                if method == "green":
                    raise
                out[i] = _suita_chart(D, p, nodes)
        return out.reshape(a.shape)
    return _suita_chart(D, a, nodes)


def _suita_chart(D: PlanarDomain, a, nodes: int):
    if D.connectivity == 1:
        return kobayashi_value(D, a, nodes, "chart")
    chart = annulus_chart(D, nodes)
    return annulus_suita(chart.q, chart(a)) * np.abs(chart.derivative(a))


def suita(D: PlanarDomain, a, nodes: int = DEFAULT_NODES, method: str = "auto") -> MetricSample:
    value = suita_value(D, complex(a), nodes, method)
    return _sample(D, a, MetricKind.SUITA, np.asarray(value)[()])


def metric_value(D: PlanarDomain, kind, z, nodes: int = DEFAULT_NODES, method: str = "auto") -> np.ndarray:
    kind = MetricKind(kind)
    if kind is MetricKind.KOBAYASHI:
        return kobayashi_value(D, z, nodes, "auto" if method == "green" else method)
    if kind is MetricKind.CARATHEODORY:
        return caratheodory_value(D, z, nodes, "auto" if method == "green" else method)
    if kind is MetricKind.SUITA:
        return suita_value(D, z, nodes, method)
    raise UnsupportedDomain("the ball metric is not a planar metric")


# ---------------------------------------------------------------------------
# deck group of the annulus and the Myrberg product


def _mobius_apply(m: np.ndarray, x):
    return (m[0, 0] * x + m[0, 1]) / (m[1, 0] * x + m[1, 1])


@dataclass(frozen=True)
class DeckGroup:
    """Deck group of the universal covering disk -> {q < |w| < 1}, 0 -> w.

    The covering factors as disk -> upper half-plane (Cayley, 0 -> t0) ->
    strip {log q < Re zeta < 0} -> annulus (exp).  The generator is the
    dilation t -> lam t of the half-plane conjugated back to the disk.
    """

    q: float
    basepoint: complex
    lam: float
    t0: complex

    def element(self, n: int) -> np.ndarray:
        t0, t0c = self.t0, self.t0.conjugate()
        c = np.array([[1, -t0], [1, -t0c]], dtype=complex)
        cinv = np.array([[-t0c, t0], [-1, 1]], dtype=complex)
        d = np.array([[self.lam**n, 0], [0, 1]], dtype=complex)
        m = c @ d @ cinv
        return m / np.abs(m).max()  # projective; det may underflow with lam**n

    def orbit(self, n: int) -> complex:
        """phi^n(0)."""
        t = self.lam**n * self.t0
        return (t - self.t0) / (t - self.t0.conjugate())

    def cover(self, x):
        """The covering map disk -> annulus, sending 0 to the basepoint."""
        x = np.asarray(x, dtype=complex)
        t = (self.t0 - self.t0.conjugate() * x) / (1 - x)
        s = -1j * np.log(t)
        width = -math.log(self.q)
        return np.exp(math.log(self.q) + width * s / math.pi)

    @property
    def angle(self) -> float:
        return cmath.phase(self.t0)


def deck_group(q: float, w: complex) -> DeckGroup:
    w = complex(w)
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    if not q < abs(w) < 1:
        raise ValueError("basepoint outside the annulus")
    width = -math.log(q)
    s0 = complex(math.pi * (math.log(abs(w)) - math.log(q)) / width, math.pi * cmath.phase(w) / width)
    t0 = cmath.exp(1j * s0)
    lam = math.exp(-2 * math.pi**2 / width)
    return DeckGroup(q, w, lam, t0)


@dataclass(frozen=True)
class LoopFactor:
    n: int
    length: float
    factor: float


def loop_factor(g: DeckGroup, n: int) -> LoopFactor:
    if n == 0:
        raise ValueError("loop_factor needs n != 0")
    f = abs(g.orbit(n))
    length = 0.5 * math.log((1 + f) / (1 - f)) if f < 1 else math.inf
    return LoopFactor(n, length, f)


def loop_length_factor(length: float) -> float:
    """(e^{2l} - 1)/(e^{2l} + 1)."""
    if math.isinf(length):
        return 1.0
    e = math.exp(2 * length)
    return (e - 1) / (e + 1)


@dataclass(frozen=True)
class MyrbergProduct:
    value: float
    defect: float  # 1 - value, without cancellation
    tail_bound: float
    terms: int


def myrberg_product(g: DeckGroup | None, tol: float = 1e-14, max_terms: int = 10**6) -> MyrbergProduct:
    """Product of |phi(0)| over the non-trivial deck transformations.

    Factors for n and -n coincide.  -log factor_n <= 2 lam^n / (1 - lam^n)
    gives the tail bound added to the error estimate.
    """
    if g is None:
        return MyrbergProduct(1.0, 0.0, 0.0, 0)
    if not 0 < tol <= 1e-6:
        raise ValueError("tol must lie in (0, 1e-6]")
    c2 = math.cos(2 * g.angle)
    lam = g.lam
    total = 0.0
    n = 0
    while True:
        n += 1
        x = lam**n
        logf = math.log1p(-x) - 0.5 * math.log1p(x * x - 2 * x * c2)
        total += 2 * logf
        tail = 2 * 2 * lam ** (n + 1) / ((1 - lam) * (1 - lam ** (n + 1)))
        if -math.expm1(logf) < tol and tail < tol:
            break
        if n >= max_terms:
            raise RuntimeError(f"Myrberg product did not converge: tail bound {tail:.3g} after {n} terms")
    return MyrbergProduct(math.exp(total), -math.expm1(total), tail, n)


def myrberg_quotient(g: DeckGroup | None, tol: float = 1e-14) -> float:
    """S/K at the basepoint as the Myrberg product (1 for the trivial group)."""
    return myrberg_product(g, tol).value


def annulus_defect(q: float, w) -> np.ndarray:
    """1 - S/K on {q < |w| < 1} at each point, via the Myrberg product."""
    w = np.atleast_1d(np.asarray(w, dtype=complex))
    return np.array([myrberg_product(deck_group(q, p)).defect for p in w])


def annulus_quotient(q: float, w) -> np.ndarray:
    """S/K on {q < |w| < 1} at each point, via the Myrberg product."""
    return 1.0 - annulus_defect(q, w)


def domain_defect(D: PlanarDomain, z, nodes: int = DEFAULT_NODES) -> np.ndarray:
    """1 - S/K at points of D through its uniformisation and the Myrberg product."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if D.connectivity == 1:
        return np.zeros(z.shape)
    ann = D.round_annulus()
    if ann is not None:
        c, radius, q = ann
        return annulus_defect(q, (z - c) / radius)
    chart = annulus_chart(D, nodes)
    return annulus_defect(chart.q, chart(z))


def domain_quotient(D: PlanarDomain, z, nodes: int = DEFAULT_NODES) -> np.ndarray:
    return 1.0 - domain_defect(D, z, nodes)


__all__ = [
    "GeometryError",
    "MetricKind",
    "MetricSample",
    "UnsupportedDomain",
    "annulus_density",
    "annulus_defect",
    "annulus_quotient",
    "annulus_robin",
    "annulus_suita",
    "ball_kobayashi",
    "caratheodory",
    "deck_group",
    "disk_density",
    "domain_defect",
    "domain_quotient",
    "kobayashi",
    "loop_factor",
    "myrberg_product",
    "myrberg_quotient",
    "suita",
]
