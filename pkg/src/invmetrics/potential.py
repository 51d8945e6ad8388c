"""Dirichlet problems on smooth planar domains by a double-layer Nystrom method.

The interior potential is written as the real part of a Cauchy integral,

    u(z) = Re (1/2 pi i) oint mu(tau) / (tau - z) dtau  +  A log|z - c|,

with every boundary curve oriented so the domain lies on its left and
A = int_inner mu ds (zero for simply connected domains; c lies in the
hole).  Discretised with the periodic trapezoid rule this converges
spectrally on analytic curves.  The Cauchy integral is an analytic
completion of u, which gives harmonic conjugates, Riemann maps and the
annulus chart.  Values close to the boundary are evaluated with the
barycentric Cauchy formula applied to boundary values of analytic
functions, never with the raw layer potential.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .geometry import PlanarDomain

TWO_PI = 2.0 * math.pi
DEFAULT_NODES = 512
CONSISTENCY_TOL = 1e-10


class SolverError(RuntimeError):
    pass


class PoleProximityError(SolverError):
    """Raised when a pole or an evaluation point is too close to the boundary."""


def _fft_derivative(values: np.ndarray) -> np.ndarray:
    n = len(values)
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(values))


def _hilbert(values: np.ndarray) -> np.ndarray:
    """Periodic Hilbert transform, multiplier -i sign(k)."""
    n = len(values)
    k = np.fft.fftfreq(n, 1.0 / n)
    mult = -1j * np.sign(k)
    mult[n // 2] = 0.0
    return np.fft.ifft(mult * np.fft.fft(values))


def trig_interp(values: np.ndarray, t) -> np.ndarray:
    """Evaluate the trigonometric interpolant of equispaced samples at ``t``."""
    n = len(values)
    coef = np.fft.fft(values) / n
    coef[n // 2] *= 0.5  # split the Nyquist mode between +-n/2
    k = np.append(np.fft.fftfreq(n, 1.0 / n), n // 2)
    coef = np.append(coef, coef[n // 2])
    t = np.asarray(t, dtype=float)
    return np.exp(1j * np.multiply.outer(t, k)) @ coef


class DirichletSolver:
    """Factorised Nystrom discretisation on a fixed domain (immutable after build)."""

    def __init__(self, domain: PlanarDomain, nodes: int = DEFAULT_NODES):
        if nodes < 64 or nodes & (nodes - 1):
            raise SolverError(f"node count must be a power of two >= 64, got {nodes}")
        self.domain = domain
        self.n = nodes
        self.ncurves = domain.connectivity
        t = TWO_PI * np.arange(nodes) / nodes
        self.t = t
        self.h = TWO_PI / nodes
        z, dz, d2z = [], [], []
        for c in domain.curves:
            z.append(c.point(t))
            dz.append(c(t, 1))
            d2z.append(c(t, 2))
        self.z = np.concatenate(z)
        self.dz = np.concatenate(dz)
        self.d2z = np.concatenate(d2z)
        self.speed = np.abs(self.dz)
        self.spacing = float(self.h * self.speed.max())
        self.blocks = [slice(i * nodes, (i + 1) * nodes) for i in range(self.ncurves)]
        m = len(self.z)

        if self.ncurves == 2:
            inner = domain.inner.point(t)
            gap = np.abs(inner[:, None] - self.z[self.blocks[0]][None, :]).min()
            if gap < 4 * self.spacing:
                raise SolverError(f"boundary curves nearly touch (gap {gap:.3g}); increase nodes")
            self.hole = complex(dict(domain.inner.fourier).get(0, 0j))
            if abs(_winding_inner(domain, self.hole) + 1) > 1e-6:
                self.hole = complex(inner.mean())
                if abs(_winding_inner(domain, self.hole) + 1) > 1e-6:
                    raise SolverError("could not place the logarithmic source inside the hole")

        diff = self.z[None, :] - self.z[:, None]
        np.fill_diagonal(diff, 1.0)
        cauchy = self.dz[None, :] / diff
        diag = self.d2z / (2 * self.dz)
        np.fill_diagonal(cauchy, diag)
        kmat = (self.h / TWO_PI) * cauchy.imag
        amat = 0.5 * np.eye(m) + kmat
        if self.ncurves == 2:
            inner_cols = self.blocks[1]
            amat[:, inner_cols] += np.log(np.abs(self.z - self.hole))[:, None] * (self.h * self.speed[inner_cols])[None, :]
        self._lu = sla.lu_factor(amat)

        # boundary completion: Phi^- = (1/2) mu + P mu + (i/2) H[mu] on each curve
        pmat = cauchy.copy()
        for b in self.blocks:
            tt = self.t
            dt = tt[None, :] - tt[:, None]
            with np.errstate(divide="ignore", invalid="ignore"):
                cot = 0.5 / np.tan(dt / 2)
            np.fill_diagonal(cot, 0.0)
            pmat[b, b] = pmat[b, b] - cot
        self._pmat = (self.h / (2j * math.pi)) * pmat

        self.consistency = self._consistency_residual()
        if self.consistency > CONSISTENCY_TOL:
            raise SolverError(f"constant-data consistency check failed: residual {self.consistency:.3e}")

    # -- solving ----------------------------------------------------------
    def solve(self, data: np.ndarray) -> "LayerDensity":
        data = np.asarray(data, dtype=float)
        if data.shape != self.z.shape:
            raise SolverError("boundary data has wrong shape")
        mu = sla.lu_solve(self._lu, data)
        a = 0.0
        if self.ncurves == 2:
            b = self.blocks[1]
            a = float(np.sum(mu[b] * self.speed[b]) * self.h)
        return LayerDensity(self, mu, a)

    def _consistency_residual(self) -> float:
        dens = self.solve(np.ones_like(self.z.real))
        pts = self._probe_points()
        return float(np.max(np.abs(dens.potential(pts, guard=False) - 1.0)))

    def _probe_points(self) -> np.ndarray:
        # points pulled inward from the outer curve
        b = self.blocks[0]
        idx = np.arange(0, self.n, self.n // 8)
        zo = self.z[b][idx]
        normal = -1j * self.dz[b][idx] / self.speed[b][idx]
        size = self.characteristic_size()
        for frac in (0.25, 0.4, 0.55, 0.7):
            pts = zo - frac * size * normal
            ok = (self.domain.winding(pts).round() == 1) & (self.boundary_gap(pts) > 3 * self.spacing)
            if np.any(ok):
                return pts[ok]
        raise SolverError("could not place interior probe points")

    def characteristic_size(self) -> float:
        b = self.blocks[0]
        return float(np.abs(self.z[b] - self.z[b].mean()).min())

    def boundary_gap(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return np.abs(z[:, None] - self.z[None, :]).min(axis=1)

    def guard(self, z, what: str = "point") -> None:
        gap = self.boundary_gap(z)
        if np.any(gap < 2 * self.spacing):
            raise PoleProximityError(
                f"{what} within two node spacings of the boundary (gap {gap.min():.3g} < {2 * self.spacing:.3g})"
            )

    # -- analytic functions from boundary values ----------------------------
    def cauchy_eval(self, values: np.ndarray, z) -> np.ndarray:
        """Barycentric Cauchy formula for a function analytic in the domain.

        ``values`` are boundary values at the nodes of every curve.  Accurate
        up to the boundary for well-resolved data.
        """
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        z = z.ravel()
        diff = self.z[None, :] - z[:, None]
        out = np.empty(len(z), dtype=complex)
        hit = np.abs(diff) == 0
        rows = hit.any(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            c = self.dz[None, :] / diff
            out = (c @ values) / c.sum(axis=1)
        if np.any(rows):
            out[rows] = values[np.argmax(hit[rows], axis=1)]
        return out.reshape(shape)

    def derivative_values(self, values: np.ndarray) -> np.ndarray:
        """Boundary values of f' from boundary values of an analytic f."""
        out = np.empty_like(values, dtype=complex)
        for b in self.blocks:
            out[b] = _fft_derivative(values[b]) / self.dz[b]
        return out


def _winding_inner(domain: PlanarDomain, z: complex) -> float:
    t = TWO_PI * np.arange(512) / 512
    g, dg = domain.inner.point(t), domain.inner(t, 1)
    return float((dg / (g - z)).sum().imag / 512)


@dataclass
class LayerDensity:
    solver: DirichletSolver
    mu: np.ndarray
    log_coeff: float

    def potential(self, z, guard: bool = True) -> np.ndarray:
        s = self.solver
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        z = z.ravel()
        if guard:
            s.guard(z)
        k = (s.h / TWO_PI) * np.imag(s.dz[None, :] / (s.z[None, :] - z[:, None]))
        u = k @ self.mu
        if s.ncurves == 2:
            u = u + self.log_coeff * np.log(np.abs(z - s.hole))
        return u.reshape(shape)

    def cauchy(self, z, guard: bool = True) -> np.ndarray:
        """The single-valued analytic part Phi (Re Phi + A log|z-c| = u)."""
        s = self.solver
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        z = z.ravel()
        if guard:
            s.guard(z)
        c = (s.h / (2j * math.pi)) * (s.dz[None, :] / (s.z[None, :] - z[:, None]))
        return (c @ self.mu).reshape(shape)

    def boundary_cauchy(self) -> np.ndarray:
        """Interior boundary values of Phi at the nodes."""
        s = self.solver
        vals = 0.5 * self.mu + s._pmat @ self.mu
        for b in s.blocks:
            vals[b] += 0.5j * _hilbert(self.mu[b])
        return vals


@lru_cache(maxsize=32)
def build_solver(domain: PlanarDomain, nodes: int = DEFAULT_NODES) -> DirichletSolver:
    return DirichletSolver(domain, nodes)


# ---------------------------------------------------------------------------
# Green's functions


class GreenFunction:
    """G_a(z) = log|z - a| + h_a(z), vanishing on the boundary, negative inside."""

    def __init__(self, solver: DirichletSolver, pole: complex):
        pole = complex(pole)
        solver.guard(pole, "pole")
        if abs(solver.domain.winding(pole) - 1) > 1e-6:
            raise SolverError(f"pole {pole} is not inside the domain")
        self.solver = solver
        self.pole = pole
        self.density = solver.solve(-np.log(np.abs(solver.z - pole)))
        self.robin = float(self.density.potential(pole)[()])

    def h(self, z) -> np.ndarray:
        return self.density.potential(z)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.log(np.abs(z - self.pole)) + self.h(z)

    def on_boundary(self, which: int, t) -> np.ndarray:
        """G at arbitrary parameters of boundary curve ``which``, from the trace of h."""
        s = self.solver
        b = s.blocks[which]
        phi = self.density.boundary_cauchy()[b]
        hvals = trig_interp(phi.real, t).real
        curve = s.domain.curves[which]
        z = curve.point(t)
        if s.ncurves == 2:
            hvals = hvals + self.density.log_coeff * np.log(np.abs(z - s.hole))
        return np.log(np.abs(z - self.pole)) + hvals


def greens(solver: DirichletSolver, a: complex) -> GreenFunction:
    return GreenFunction(solver, a)


def robin_constant(g: GreenFunction) -> float:
    return g.robin


# ---------------------------------------------------------------------------
# conformal charts


def modulus(solver: DirichletSolver) -> float:
    """q of the conformally equivalent annulus {q < |w| < 1}."""
    if solver.ncurves != 2:
        raise SolverError("modulus needs a doubly connected domain")
    data = np.zeros(len(solver.z))
    data[solver.blocks[1]] = 1.0
    dens = solver.solve(data)
    # u = 0 outer, 1 inner; its conjugate has period 2 pi A, so A log q = 1
    return math.exp(1.0 / dens.log_coeff)


class DiskChart:
    """Riemann map f: D -> unit disk, f(a) = 0, f'(a) > 0."""

    def __init__(self, solver: DirichletSolver, center: complex):
        if solver.ncurves != 1:
            raise SolverError("riemann_map: conjugate period is nonzero, domain is multiply connected")
        g = GreenFunction(solver, center)
        self.solver = solver
        self.center = complex(center)
        dens = g.density
        rot = -dens.cauchy(self.center).imag[()]
        phi = dens.boundary_cauchy() + 1j * rot
        self.boundary_values = (solver.z - self.center) * np.exp(phi)
        self.boundary_derivative = solver.derivative_values(self.boundary_values)
        self.derivative_at_center = math.exp(g.robin)
        self.error_estimate = self._modulus_defect()

    def _modulus_defect(self) -> float:
        tm = self.solver.t + self.solver.h / 2
        return float(np.max(np.abs(np.abs(trig_interp(self.boundary_values, tm)) - 1.0)))

    def __call__(self, z) -> np.ndarray:
        return self.solver.cauchy_eval(self.boundary_values, z)

    def derivative(self, z) -> np.ndarray:
        return self.solver.cauchy_eval(self.boundary_derivative, z)


def riemann_map(solver: DirichletSolver, a: complex) -> DiskChart:
    return DiskChart(solver, a)


class AnnulusChart:
    """Conformal map of a doubly connected domain onto {q < |w| < 1}.

    Outer boundary goes to |w| = 1, inner boundary to |w| = q.
    """

    def __init__(self, solver: DirichletSolver):
        if solver.ncurves != 2:
            raise SolverError("annulus_uniformize needs a doubly connected domain")
        data = np.zeros(len(solver.z))
        data[solver.blocks[1]] = 1.0
        dens = solver.solve(data)
        self.solver = solver
        self.q = math.exp(1.0 / dens.log_coeff)
        logq = math.log(self.q)
        # log q (u + i u~) = log q Phi + log(z - c) since log q * A = 1
        self.boundary_values = (solver.z - solver.hole) * np.exp(logq * dens.boundary_cauchy())
        self.boundary_derivative = solver.derivative_values(self.boundary_values)
        self._dw = self.boundary_derivative * solver.dz
        self.error_estimate = self._modulus_defect()

    def _modulus_defect(self) -> float:
        s = self.solver
        tm = s.t + s.h / 2
        out = np.abs(np.abs(trig_interp(self.boundary_values[s.blocks[0]], tm)) - 1.0).max()
        inner = np.abs(np.abs(trig_interp(self.boundary_values[s.blocks[1]], tm)) - self.q).max()
        return float(max(out, inner))

    def __call__(self, z) -> np.ndarray:
        return self.solver.cauchy_eval(self.boundary_values, z)

    def derivative(self, z) -> np.ndarray:
        return self.solver.cauchy_eval(self.boundary_derivative, z)

    def inverse(self, w, iters: int = 20, tol: float = 1e-14) -> np.ndarray:
        """Preimage of annulus points: Cauchy formula in the w-plane, then Newton."""
        s = self.solver
        w = np.atleast_1d(np.asarray(w, dtype=complex))
        diff = self.boundary_values[None, :] - w[:, None]
        c = self._dw[None, :] / diff
        z = (c @ s.z) / c.sum(axis=1)
        for _ in range(iters):
            f = self(z) - w
            step = f / self.derivative(z)
            z = z - step
            if np.max(np.abs(step)) < tol:
                break
        return z


def annulus_uniformize(solver: DirichletSolver) -> AnnulusChart:
    return AnnulusChart(solver)
