"""Independent closed-form and series oracles shared by the tests."""
import math

import numpy as np
from scipy.optimize import brentq


def disk_green(a, z):
    return np.log(np.abs((z - a) / (1 - np.conj(a) * z)))


def annulus_harmonic_part(q, a, z, modes=200):
    """h_a(z) on {q < |z| < 1} for a real pole a, by separation of variables.

    On |z| = 1: log|z - a| = -sum a^n cos(n t)/n; on |z| = q:
    log|z - a| = log a - sum (q/a)^n cos(n t)/n.  h_a takes minus these.
    """
    z = np.asarray(z, dtype=complex)
    r, th = np.abs(z), np.angle(z)
    out = (-math.log(a) / math.log(q)) * np.log(r)
    for n in range(1, modes + 1):
        # A r^n + B r^-n with B = q^n b keeps every power bounded
        qn = q**n
        rhs = np.array([a**n / n, (q / a) ** n / n])
        m = np.array([[1.0, qn], [qn, 1.0]])
        A, b = np.linalg.solve(m, rhs)
        out = out + (A * r**n + b * (q / r) ** n) * np.cos(n * th)
    return out


def two_circle_modulus(c, rho):
    """q for the domain between |z| = 1 and |z - c| = rho (real c).

    The disk automorphism T(z) = (z - l)/(1 - l z) with real l making the
    images of c - rho and c + rho symmetric about 0 centres the inner circle.
    """
    T = lambda l, z: (z - l) / (1 - l * z)  # noqa: E731
    f = lambda l: T(l, c - rho) + T(l, c + rho)  # noqa: E731
    l = brentq(f, c - rho + 1e-15, c + rho - 1e-15, xtol=1e-16, rtol=1e-15)
    return abs(T(l, c + rho)), l


def strip_annulus_density(q, w):
    """Poincare density of {q < |w| < 1} via w -> strip {|Im s| < pi/2} -> disk (tanh)."""
    w = complex(w)
    L = -math.log(q)
    s = -1j * (math.pi / L) * (np.log(w) - math.log(q) / 2)
    x = np.tanh(s / 2)
    dx = 0.5 / np.cosh(s / 2) ** 2 * (-1j * math.pi / L) / w
    return abs(dx) / (1 - abs(x) ** 2)
