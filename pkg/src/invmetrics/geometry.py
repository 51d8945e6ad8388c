"""Planar domains bounded by analytic (truncated Fourier) Jordan curves.

Config files read by the command line describe one of these domains as
``key = value`` items, one or more per line, separated by commas::

    kind = ellipse, a = 2, b = 1          # circle | ellipse | fourier | annulus
    inner = circle, inner.radius = 0.1, inner.center = -0.5
    point = 0.0, point.which = outer      # boundary parameter t for scans
    metrics = kobayashi suita

Curve keys are ``radius``, ``center``, ``a``, ``b``, ``angle`` and ``q``
(annulus only).  A ``fourier`` curve takes lines ``k re im`` giving the
coefficient of exp(ikt).  Run keys: ``nodes``, ``delta_min``, ``delta_max``,
``grid``, ``tol``, ``method``, ``cone_eta``, ``z``.  ``#`` starts a comment.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .jets import MonomialKey, RealJet

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class BoundaryCurve:
    """gamma(t) = sum_k c_k exp(ikt), oriented so that the domain lies on its left."""

    fourier: tuple[tuple[int, complex], ...]

    @classmethod
    def from_coeffs(cls, coeffs: dict[int, complex] | Sequence[tuple[int, complex]]) -> "BoundaryCurve":
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        acc: dict[int, complex] = {}
        for k, c in items:
            acc[int(k)] = acc.get(int(k), 0j) + complex(c)
        return cls(tuple(sorted((k, c) for k, c in acc.items() if c != 0)))

    @classmethod
    def circle(cls, center: complex = 0.0, radius: float = 1.0, clockwise: bool = False) -> "BoundaryCurve":
        if radius <= 0:
            raise GeometryError("radius must be positive")
        return cls.from_coeffs({0: center, (-1 if clockwise else 1): radius})

    @classmethod
    def ellipse(cls, a: float, b: float, center: complex = 0.0, angle: float = 0.0) -> "BoundaryCurve":
        """(a cos t, b sin t), rotated by ``angle`` and translated."""
        if a <= 0 or b <= 0:
            raise GeometryError("semi-axes must be positive")
        rot = cmath.exp(1j * angle)
        return cls.from_coeffs({0: center, 1: rot * (a + b) / 2, -1: rot * (a - b) / 2})

    @property
    def modes(self) -> np.ndarray:
        return np.array([k for k, _ in self.fourier])

    @property
    def coeff_array(self) -> np.ndarray:
        return np.array([c for _, c in self.fourier], dtype=complex)

    def __call__(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        k = self.modes
        c = self.coeff_array * (1j * k) ** order
        return np.exp(1j * np.multiply.outer(t, k)) @ c

    def point(self, t):
        return self(t, 0)

    def reversed(self) -> "BoundaryCurve":
        return BoundaryCurve.from_coeffs({-k: c for k, c in self.fourier})

    def transformed(self, rotation: complex = 1.0, shift: complex = 0.0, scale: float = 1.0) -> "BoundaryCurve":
        rot = complex(rotation) / abs(rotation)
        coeffs = {k: scale * rot * c for k, c in self.fourier}
        coeffs[0] = coeffs.get(0, 0j) + shift
        return BoundaryCurve.from_coeffs(coeffs)

    def signed_area(self) -> float:
        # A = (1/2) Im int conj(gamma) gamma' dt = pi sum k |c_k|^2
        return math.pi * sum(k * abs(c) ** 2 for k, c in self.fourier)

    def circle_data(self) -> tuple[complex, float] | None:
        """(center, radius) when the curve is a round circle, else None."""
        ks = [k for k, _ in self.fourier if k != 0]
        if len(ks) != 1 or abs(ks[0]) != 1:
            return None
        d = dict(self.fourier)
        return d.get(0, 0j), abs(d[ks[0]])

    def curvature(self, t):
        """Signed curvature; positive where the domain (on the left) is locally convex."""
        d1, d2 = self(t, 1), self(t, 2)
        return np.imag(np.conj(d1) * d2) / np.abs(d1) ** 3

    def nearest(self, z: complex, samples: int = 512, iters: int = 30, tol: float = 1e-13):
        """(distance, t) of the point of the curve closest to ``z``.

        Grid minimiser over ``samples`` parameters, then Newton on
        d/dt |gamma(t) - z|^2 = 0.
        """
        grid = TWO_PI * np.arange(samples) / samples
        pts = self.point(grid)
        t = float(grid[np.argmin(np.abs(pts - z))])
        for _ in range(iters):
            g0, g1, g2 = (complex(self(t, o)) for o in (0, 1, 2))
            r = g0 - z
            f = (r.conjugate() * g1).real
            fp = abs(g1) ** 2 + (r.conjugate() * g2).real
            if fp <= 0:
                break
            dt = f / fp
            t -= dt
            if abs(dt) < tol:
                break
        t = t % TWO_PI
        return abs(complex(self.point(t)) - z), t

    def check(self, samples: int = 256) -> None:
        t = TWO_PI * np.arange(samples) / samples
        d1 = self(t, 1)
        if np.min(np.abs(d1)) < 1e-12 * max(1.0, np.max(np.abs(d1))):
            raise GeometryError("degenerate tangent on the curve")
        p = self.point(t)
        if _has_self_intersection(p):
            raise GeometryError("boundary curve is not simple")


def _has_self_intersection(p: np.ndarray) -> bool:
    a = p
    b = np.roll(p, -1)
    n = len(p)

    def cross(u, v):
        return (np.conj(u) * v).imag

    d = b - a
    # orientation tests for all segment pairs
    o1 = cross(d[:, None], a[None, :] - a[:, None])
    o2 = cross(d[:, None], b[None, :] - a[:, None])
    o3 = cross(d[None, :], a[:, None] - a[None, :])
    o4 = cross(d[None, :], b[:, None] - a[None, :])
    hit = (o1 * o2 < 0) & (o3 * o4 < 0)
    idx = np.arange(n)
    near = (np.abs(idx[:, None] - idx[None, :]) <= 1) | (np.abs(idx[:, None] - idx[None, :]) == n - 1)
    return bool(np.any(hit & ~near))


@dataclass(frozen=True)
class BoundaryPoint:
    which: str  # "outer" or "inner"
    t: float

    def __post_init__(self):
        if self.which not in ("outer", "inner"):
            raise GeometryError(f"unknown boundary component {self.which!r}")
        object.__setattr__(self, "t", float(self.t) % TWO_PI)


@dataclass(frozen=True)
class PlanarDomain:
    """Domain bounded by ``outer`` and, optionally, one ``inner`` curve.

    Orientation is normalised on construction: the outer curve runs
    counter-clockwise, the inner one clockwise.
    """

    outer: BoundaryCurve
    inner: BoundaryCurve | None = None

    def __post_init__(self):
        outer = self.outer if self.outer.signed_area() > 0 else self.outer.reversed()
        object.__setattr__(self, "outer", outer)
        outer.check()
        if self.inner is not None:
            inner = self.inner if self.inner.signed_area() < 0 else self.inner.reversed()
            object.__setattr__(self, "inner", inner)
            inner.check()
            t = TWO_PI * np.arange(256) / 256
            if np.any(np.round(_winding(outer, inner.point(t))) != 1):
                raise GeometryError("inner curve must lie strictly inside the outer curve")

    # -- constructors -----------------------------------------------------
    @classmethod
    def disk(cls, radius: float = 1.0, center: complex = 0.0) -> "PlanarDomain":
        return cls(BoundaryCurve.circle(center, radius))

    @classmethod
    def ellipse(cls, a: float, b: float, center: complex = 0.0) -> "PlanarDomain":
        return cls(BoundaryCurve.ellipse(a, b, center))

    @classmethod
    def annulus(cls, q: float, radius: float = 1.0, center: complex = 0.0) -> "PlanarDomain":
        if not 0 < q < 1:
            raise GeometryError("annulus needs 0 < q < 1")
        return cls(BoundaryCurve.circle(center, radius), BoundaryCurve.circle(center, q * radius, clockwise=True))

    @classmethod
    def disk_with_hole(cls, hole_center: complex, hole_radius: float, radius: float = 1.0, center: complex = 0.0):
        return cls(BoundaryCurve.circle(center, radius), BoundaryCurve.circle(hole_center, hole_radius, clockwise=True))

    # -- structure --------------------------------------------------------
    @property
    def connectivity(self) -> int:
        return 1 if self.inner is None else 2

    @property
    def curves(self) -> tuple[BoundaryCurve, ...]:
        return (self.outer,) if self.inner is None else (self.outer, self.inner)

    def curve(self, which: str) -> BoundaryCurve:
        if which == "outer":
            return self.outer
        if which == "inner" and self.inner is not None:
            return self.inner
        raise GeometryError(f"domain has no {which} boundary")

    def round_disk(self) -> tuple[complex, float] | None:
        """(center, radius) if the domain is a round disk."""
        return None if self.inner is not None else self.outer.circle_data()

    def round_annulus(self) -> tuple[complex, float, float] | None:
        """(center, outer radius, q) for a concentric round annulus."""
        if self.inner is None:
            return None
        co, ci = self.outer.circle_data(), self.inner.circle_data()
        if co is None or ci is None or abs(co[0] - ci[0]) > 1e-15 * max(1.0, abs(co[0])):
            return None
        return co[0], co[1], ci[1] / co[1]

    def transformed(self, rotation: complex = 1.0, shift: complex = 0.0, scale: float = 1.0) -> "PlanarDomain":
        inner = None if self.inner is None else self.inner.transformed(rotation, shift, scale)
        return PlanarDomain(self.outer.transformed(rotation, shift, scale), inner)

    def winding(self, z) -> np.ndarray:
        """Total winding number of the oriented boundary about ``z`` (1 inside, 0 outside)."""
        z = np.asarray(z, dtype=complex)
        w = _winding(self.outer, z)
        if self.inner is not None:
            w = w + _winding(self.inner, z)
        return w

    def contains(self, z) -> bool:
        delta, _ = self._nearest(complex(z))
        if delta < 1e-14:
            return False
        return _inside_by_foot(self, complex(z))

    def _nearest(self, z: complex):
        best = None
        for which in ("outer", "inner") if self.inner is not None else ("outer",):
            d, t = self.curve(which).nearest(z)
            if best is None or d < best[0]:
                best = (d, BoundaryPoint(which, t))
        return best

    def point(self, p: BoundaryPoint) -> complex:
        return complex(self.curve(p.which).point(p.t))


def _winding(curve: BoundaryCurve, z, samples: int = 1024) -> np.ndarray:
    t = TWO_PI * np.arange(samples) / samples
    g, dg = curve.point(t), curve(t, 1)
    z = np.asarray(z, dtype=complex)
    vals = (dg / (g - z[..., None])).sum(axis=-1) / samples
    return np.real(vals / 1j)


def _inside_by_foot(D: PlanarDomain, z: complex) -> bool:
    _, foot = D._nearest(z)
    n = outward_normal(D, foot)
    return ((z - D.point(foot)) * n.conjugate()).real < 0


# ---------------------------------------------------------------------------
# operations


def outward_normal(D: PlanarDomain, p: BoundaryPoint) -> complex:
    d1 = complex(D.curve(p.which)(p.t, 1))
    if abs(d1) < 1e-14:
        raise GeometryError("degenerate tangent")
    return -1j * d1 / abs(d1)


def boundary_curvature(D: PlanarDomain, p: BoundaryPoint) -> float:
    d1 = complex(D.curve(p.which)(p.t, 1))
    if abs(d1) < 1e-14:
        raise GeometryError("degenerate tangent")
    return float(D.curve(p.which).curvature(p.t))


def boundary_distance(D: PlanarDomain, z: complex) -> tuple[float, BoundaryPoint]:
    """Distance from interior ``z`` to the boundary and the foot point."""
    z = complex(z)
    delta, foot = D._nearest(z)
    if delta < 1e-14:
        raise GeometryError(f"point {z} lies on the boundary")
    n = outward_normal(D, foot)
    if ((z - D.point(foot)) * n.conjugate()).real > 0:
        raise GeometryError(f"point {z} lies outside the domain")
    return delta, foot


def normal_ray(D: PlanarDomain, p: BoundaryPoint, deltas) -> np.ndarray:
    """Points p - delta * n_p on the inward normal, checked to lie in D."""
    deltas = np.asarray(deltas, dtype=float)
    base = D.point(p)
    n = outward_normal(D, p)
    pts = base - deltas * n
    for i, z in enumerate(pts):
        if deltas[i] <= 0:
            raise GeometryError(f"delta[{i}] = {deltas[i]} must be positive")
        if not D.contains(z):
            raise GeometryError(f"normal ray leaves the domain at index {i} (delta={deltas[i]})")
    return pts


@dataclass(frozen=True)
class PinchedCone:
    """{z : |Im w| < eta (Re w)^2, -nu < Re w < 0}, w = exp(-i theta)(z - apex)."""

    apex: complex
    theta: float
    eta: float = 1.0
    nu: float = 0.1

    def contains(self, z) -> bool:
        return cone_contains(self, self.theta, z)


def cone_contains(cone: PinchedCone, theta: float, z) -> bool:
    w = cmath.exp(-1j * theta) * (complex(z) - cone.apex)
    return abs(w.imag) < cone.eta * w.real**2 and -cone.nu < w.real < 0


def pinched_cone(D: PlanarDomain, p: BoundaryPoint, eta: float = 1.0, nu: float | None = None) -> PinchedCone:
    kappa = boundary_curvature(D, p)
    if nu is None:
        nu = min(0.1, 0.1 / abs(kappa)) if kappa != 0 else 0.1
    n = outward_normal(D, p)
    cone = PinchedCone(D.point(p), cmath.phase(n), eta, nu)
    # sanity: sample points of the cone must be interior
    for x in np.linspace(0.05, 0.95, 7) * nu:
        for s in (-0.9, 0.0, 0.9):
            z = cone.apex + cmath.exp(1j * cone.theta) * complex(-x, s * eta * x * x)
            if not D.contains(z):
                raise GeometryError("pinched cone is not contained in the domain; decrease nu")
    return cone


def _series_compose(f: np.ndarray, g: np.ndarray, order: int) -> np.ndarray:
    """Coefficients of f(g(y)) up to y^order, g(0) = 0."""
    out = np.zeros(order + 1)
    power = np.zeros(order + 1)
    power[0] = 1.0
    for k in range(len(f)):
        if k > 0:
            power = np.convolve(power, g)[: order + 1]
        out += f[k] * power
    return out


def local_jet(D: PlanarDomain, p: BoundaryPoint) -> tuple[RealJet, tuple[complex, float]]:
    """Degree-4 jet of a defining function at ``p`` and the frame used.

    In coordinates w = exp(-i theta)(z - p), theta the angle of the outward
    normal, the boundary is the graph x = g(y) and rho = 2(x - g(y)).
    """
    curve = D.curve(p.which)
    d = [complex(curve(p.t, k)) for k in range(5)]
    if abs(d[1]) < 1e-14:
        raise GeometryError("degenerate tangent")
    n = -1j * d[1] / abs(d[1])
    rot = n.conjugate()
    xs = np.array([0.0] + [(rot * d[k]).real / math.factorial(k) for k in range(1, 5)])
    ys = np.array([0.0] + [(rot * d[k]).imag / math.factorial(k) for k in range(1, 5)])
    # invert y(s): s = y/y1 + ... up to order 4 by fixed-point iteration
    s_of_y = np.zeros(5)
    s_of_y[1] = 1.0 / ys[1]
    for _ in range(4):
        ys_comp = _series_compose(ys, s_of_y, 4)
        corr = ys_comp.copy()
        corr[1] -= 1.0
        s_of_y = s_of_y - corr / ys[1]
    g = _series_compose(xs, s_of_y, 4)
    # rho = w + wbar - 2 sum_k g_k y^k, y = (w - wbar)/(2i)
    coeffs: dict[MonomialKey, complex] = {MonomialKey((1,), (0,)): 1.0, MonomialKey((0,), (1,)): 1.0}
    for k in range(2, 5):
        if g[k] == 0:
            continue
        # y^k = (2i)^-k sum_m C(k,m) w^m (-wbar)^(k-m)
        for m in range(k + 1):
            c = -2.0 * g[k] * math.comb(k, m) * (-1) ** (k - m) / (2j) ** k
            key = MonomialKey((m,), (k - m,))
            coeffs[key] = coeffs.get(key, 0j) + c
    return RealJet(1, coeffs), (D.point(p), cmath.phase(n))


def focal_radius(D: PlanarDomain, p: BoundaryPoint) -> float:
    k = boundary_curvature(D, p)
    return math.inf if k <= 0 else 1.0 / k


def interior_samples(D: PlanarDomain, count: int, margin: float, seed: int = 0) -> np.ndarray:
    """Pseudo-random interior points at distance >= margin from the boundary."""
    rng = np.random.default_rng(seed)
    t = TWO_PI * np.arange(512) / 512
    pts = D.outer.point(t)
    lo = complex(pts.real.min(), pts.imag.min())
    hi = complex(pts.real.max(), pts.imag.max())
    nodes = np.concatenate([c.point(t) for c in D.curves])
    out: list[complex] = []
    for _ in range(200):
        cand = lo.real + (hi.real - lo.real) * rng.random(4 * count) + 1j * (lo.imag + (hi.imag - lo.imag) * rng.random(4 * count))
        w = D.winding(cand)
        cand = cand[np.abs(w - 1) < 1e-3]
        dmin = np.abs(cand[:, None] - nodes[None, :]).min(axis=1)
        out.extend(cand[dmin >= margin])
        if len(out) >= count:
            break
    if len(out) < count:
        raise GeometryError("could not find interior sample points with the requested margin")
    return np.array(out[:count])
