"""Asymptotic experiments along inward normal rays.

Every fit here is ordinary least squares in fixed index order, so results are
reproducible bit for bit for a fixed configuration.
"""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    BoundaryPoint,
    GeometryError,
    PlanarDomain,
    boundary_curvature,
    boundary_distance,
    focal_radius,
    normal_ray,
    outward_normal,
)
from .metrics import (
    MetricKind,
    MetricSample,
    annulus_chart,
    disk_chart,
    domain_defect,
    kobayashi_value,
    metric_value,
    suita_value,
)
from .potential import DEFAULT_NODES, PoleProximityError

log = logging.getLogger(__name__)

MIN_FIT_POINTS = 8


class ConfigError(ValueError):
    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ScanError(RuntimeError):
    pass


class FitError(ValueError):
    pass


def log_grid(delta_min: float = 1e-3, delta_max: float = 1e-1, count: int = 24) -> np.ndarray:
    return np.geomspace(delta_min, delta_max, count)


def _loglog_slope(x, y) -> float:
    x, y = np.asarray(x, float), np.abs(np.asarray(y, float))
    ok = (x > 0) & (y > 0) & np.isfinite(y)
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


# ---------------------------------------------------------------------------
# scans


@dataclass(frozen=True)
class ScanConfig:
    domain: PlanarDomain
    point: BoundaryPoint = BoundaryPoint("outer", 0.0)
    kinds: tuple[str, ...] = ("kobayashi",)
    delta_min: float = 1e-3
    delta_max: float = 1e-1
    count: int = 24
    nodes: int = DEFAULT_NODES
    method: str = "auto"
    cone_eta: float | None = None  # sample on z = p - d n + i (eta/2) d^2 n instead of the ray

    def grid(self) -> np.ndarray:
        return log_grid(self.delta_min, self.delta_max, self.count)

    @property
    def kappa(self) -> float:
        return boundary_curvature(self.domain, self.point)

    def uses_chart(self) -> bool:
        D = self.domain
        closed = D.round_disk() is not None or D.round_annulus() is not None
        return self.method == "chart" or not closed

    def validate(self) -> None:
        problems = []
        if not 0 < self.delta_min < self.delta_max:
            problems.append("need 0 < delta_min < delta_max")
        if self.count < 2:
            problems.append("grid needs at least 2 points")
        for k in self.kinds:
            try:
                if MetricKind(k) is MetricKind.BALL:
                    problems.append("the ball metric cannot be scanned on a planar domain")
            except ValueError:
                problems.append(f"unknown metric kind {k!r}")
        if self.cone_eta is not None and self.cone_eta <= 0:
            problems.append("cone eta must be positive")
        if not problems:
            rf = focal_radius(self.domain, self.point)
            if self.delta_max >= rf:
                problems.append(f"delta_max {self.delta_max:g} is not below the focal radius {rf:.6g}")
        if not problems and self.uses_chart():
            err = _chart_error(self.domain, self.nodes)
            if self.delta_min < 10 * err:
                problems.append(f"delta_min {self.delta_min:g} is below 10x the chart error {err:.3g}")
        if problems:
            raise ConfigError(problems)


def _chart_error(D: PlanarDomain, nodes: int) -> float:
    chart = disk_chart(D, nodes) if D.connectivity == 1 else annulus_chart(D, nodes)
    return chart.error_estimate


def sample_points(cfg: ScanConfig) -> np.ndarray:
    deltas = cfg.grid()
    pts = normal_ray(cfg.domain, cfg.point, deltas)
    if cfg.cone_eta is not None:
        n = outward_normal(cfg.domain, cfg.point)
        pts = pts + 1j * n * (cfg.cone_eta / 2) * deltas**2
    return pts


def _evaluate(cfg: ScanConfig, kind: str, pts: np.ndarray) -> np.ndarray:
    """Values at the points; NaN marks points dropped by the pole guard."""
    D = cfg.domain
    try:
        return np.asarray(metric_value(D, kind, pts, cfg.nodes, cfg.method), dtype=float)
    except PoleProximityError:
        pass
    out = np.empty(len(pts))
    for i, z in enumerate(pts):
        try:
            out[i] = metric_value(D, kind, z, cfg.nodes, cfg.method)
        except PoleProximityError as exc:
            log.warning("dropping grid index %d for %s: %s", i, kind, exc)
            out[i] = math.nan
    return out


def scan(cfg: ScanConfig) -> list[MetricSample]:
    """Samples ordered by grid index, then by kind; delta is the geometric distance."""
    cfg.validate()
    pts = sample_points(cfg)
    deltas = []
    for i, z in enumerate(pts):
        try:
            deltas.append(boundary_distance(cfg.domain, z)[0])
        except GeometryError as exc:
            raise ScanError(f"grid index {i}: {exc}") from exc
    values = {}
    for kind in cfg.kinds:
        try:
            vals = _evaluate(cfg, kind, pts)
        except Exception as exc:
            raise ScanError(f"{kind} on the grid: {exc}") from exc
        if np.isnan(vals).any():
            if np.isfinite(vals).sum() < MIN_FIT_POINTS:
                raise ScanError(f"{kind}: fewer than {MIN_FIT_POINTS} grid points survive the pole guard")
        bad = np.flatnonzero(np.isfinite(vals) & (vals <= 0))
        if bad.size:
            raise ScanError(f"{kind}: non-positive value at grid index {bad[0]}")
        values[kind] = vals
    out = []
    for i, z in enumerate(pts):
        for kind in cfg.kinds:
            v = values[kind][i]
            if np.isfinite(v):
                out.append(MetricSample(complex(z), complex(-outward_normal(cfg.domain, cfg.point)), MetricKind(kind), float(v), float(deltas[i])))
    return out


# ---------------------------------------------------------------------------
# expansion fits


@dataclass(frozen=True)
class ExpansionFit:
    kappa_used: float
    c0: float
    c1: float
    rms: float
    slope: float
    c_minus1: float  # free fit of F against 1/delta, 1, delta; should be 1/2
    count: int
    c2: float | None = None

    @property
    def c0_error(self) -> float:
        return abs(self.c0 - self.kappa_used / 4)


def fit_expansion(samples, kappa: float, order: int = 1) -> ExpansionFit:
    """Fit F(delta) - 1/(2 delta) by c0 + c1 delta (+ c2 delta^2 for order=2).

    ``samples`` is a sequence of MetricSample of a single kind, or a pair of
    arrays (delta, value).
    """
    if isinstance(samples, tuple) and len(samples) == 2:
        d, v = (np.asarray(a, dtype=float) for a in samples)
    else:
        samples = list(samples)
        if len({s.kind for s in samples}) > 1:
            raise FitError("fit_expansion needs samples of one metric kind")
        d = np.array([s.delta for s in samples])
        v = np.array([s.value for s in samples])
    if len(d) < MIN_FIT_POINTS:
        raise FitError(f"need at least {MIN_FIT_POINTS} samples, got {len(d)}")
    if order not in (1, 2):
        raise FitError("order must be 1 or 2")
    resid = v - 0.5 / d
    cols = [np.ones_like(d), d] + ([d * d] if order == 2 else [])
    a = np.column_stack(cols)
    coef, _, rank, _ = np.linalg.lstsq(a, resid, rcond=None)
    if rank < a.shape[1]:
        raise FitError("degenerate delta grid")
    rms = float(np.sqrt(np.mean((resid - a @ coef) ** 2)))
    free = np.linalg.lstsq(np.column_stack([1 / d, np.ones_like(d), d]), v, rcond=None)[0]
    slope = _loglog_slope(d, resid - kappa / 4)
    return ExpansionFit(
        float(kappa), float(coef[0]), float(coef[1]), rms, slope, float(free[0]), len(d),
        float(coef[2]) if order == 2 else None,
    )


# ---------------------------------------------------------------------------
# comparisons


@dataclass(frozen=True)
class ComparisonFit:
    deltas: np.ndarray
    difference: np.ndarray  # F_A - F_B
    quotient_defect: np.ndarray  # F_A / F_B - 1
    difference_slope: float
    quotient_slope: float

    @property
    def max_difference(self) -> float:
        return float(np.max(np.abs(self.difference)))


def comparison_gap(D: PlanarDomain, p: BoundaryPoint, kind_a: str = "suita", kind_b: str = "kobayashi",
                   deltas=None, nodes: int = DEFAULT_NODES, method: str = "auto") -> ComparisonFit:
    deltas = log_grid() if deltas is None else np.asarray(deltas, dtype=float)
    pts = normal_ray(D, p, deltas)
    d = np.array([boundary_distance(D, z)[0] for z in pts])
    fa = np.asarray(metric_value(D, kind_a, pts, nodes, method), dtype=float)
    fb = np.asarray(metric_value(D, kind_b, pts, nodes, method), dtype=float)
    diff = fa - fb
    quot = diff / fb
    return ComparisonFit(d, diff, quot, _loglog_slope(d, diff), _loglog_slope(d, quot))


@dataclass(frozen=True)
class QuotientFit:
    deltas: np.ndarray  # one row per ray
    defects: np.ndarray  # 1 - S/K, same shape
    ratios: np.ndarray  # defect / delta^2
    a_lower: float
    a_upper: float
    exponent: float
    ray_exponents: tuple[float, ...]


def quotient_bounds(D: PlanarDomain, rays=None, deltas=None, nodes: int = DEFAULT_NODES,
                    source: str = "auto") -> QuotientFit:
    """1 - S/K along inward rays and its delta^2 law.

    ``source="myrberg"`` takes S/K from the deck-group product (doubly
    connected only), ``"metrics"`` from separate S and K evaluations;
    ``"auto"`` picks the first for doubly connected domains.
    """
    deltas = log_grid() if deltas is None else np.asarray(deltas, dtype=float)
    if rays is None:
        rays = [BoundaryPoint("outer", 0.0)]
    if source == "auto":
        source = "myrberg" if D.connectivity == 2 else "metrics"
    if source not in ("myrberg", "metrics"):
        raise ValueError(f"unknown source {source!r}")
    dd, defects = [], []
    for p in rays:
        pts = normal_ray(D, p, deltas)
        dd.append([boundary_distance(D, z)[0] for z in pts])
        if source == "myrberg":
            defects.append(domain_defect(D, pts, nodes))
        else:
            s = np.asarray(suita_value(D, pts, nodes), dtype=float)
            k = np.asarray(kobayashi_value(D, pts, nodes), dtype=float)
            defects.append((k - s) / k)
    dd, defects = np.array(dd), np.array(defects)
    ratios = defects / dd**2
    per_ray = tuple(_loglog_slope(r, f) for r, f in zip(dd, defects))
    return QuotientFit(dd, defects, ratios, float(ratios.min()), float(ratios.max()),
                       _loglog_slope(dd.ravel(), defects.ravel()), per_ray)


# ---------------------------------------------------------------------------
# localisation


@dataclass(frozen=True)
class LocalisationFit:
    deltas: np.ndarray
    gaps: np.ndarray  # F_sub - F_D
    slope: float

    @property
    def min_gap(self) -> float:
        return float(self.gaps.min())

    @property
    def max_gap(self) -> float:
        return float(self.gaps.max())


def _validate_shared_arc(D: PlanarDomain, Dt: PlanarDomain, p: BoundaryPoint, arc: float, tol: float) -> None:
    curve = D.curve(p.which)
    for t in p.t + np.linspace(-arc, arc, 41):
        z = complex(curve.point(t))
        dist = min(c.nearest(z)[0] for c in Dt.curves)
        if dist > tol:
            raise GeometryError(f"boundaries disagree near p: offset {dist:.3g} at t={t % (2 * math.pi):.6f}")


def localisation_check(D: PlanarDomain, Dt: PlanarDomain, p: BoundaryPoint, deltas=None,
                       nodes: int = DEFAULT_NODES, kind: str = "kobayashi", arc: float = 0.3,
                       tol: float = 1e-12) -> LocalisationFit:
    """Gap F_Dt - F_D along the inward normal at p, for Dt inside D sharing an arc through p."""
    deltas = log_grid() if deltas is None else np.asarray(deltas, dtype=float)
    _validate_shared_arc(D, Dt, p, arc, tol)
    pts = normal_ray(D, p, deltas)
    d = np.array([boundary_distance(D, z)[0] for z in pts])
    for i, z in enumerate(pts):
        if not Dt.contains(z):
            raise GeometryError(f"ray point {i} is not in the subdomain")
    gaps = np.asarray(metric_value(Dt, kind, pts, nodes), float) - np.asarray(metric_value(D, kind, pts, nodes), float)
    return LocalisationFit(d, gaps, _loglog_slope(d, gaps))


@dataclass(frozen=True)
class LocalChangeFit:
    a: complex
    constant: float
    expected: float
    c1: float
    rms: float


def localchange_check(a: complex, deltas=None, eta: float = 1.0) -> LocalChangeFit:
    """Expansion constant of the pullback of the translated disk under z + a z^2.

    The translated disk {2 Re w + |w|^2 < 0} has curvature 1 at 0; its
    preimage under psi has curvature 1 - 2 Re a.  The density is sampled on
    z = -x + i (eta/2) x^2, inside the pinched cone, and F - 1/(2|z|) is fitted
    by a quadratic in |z|.
    """
    a = complex(a)
    x = np.geomspace(1e-4, 1e-2, 24) if deltas is None else np.asarray(deltas, dtype=float)
    z = -x + 1j * (eta / 2) * x**2
    r = np.abs(z)
    if a != 0 and r.max() >= 1 / (2 * abs(a)):
        raise GeometryError("z + a z^2 is not known to be injective on the sampled region")
    w = z + a * z * z
    den = -(2 * w.real + np.abs(w) ** 2)
    if np.any(den <= 0):
        raise GeometryError("sample point maps outside the translated disk")
    f = np.abs(1 + 2 * a * z) / den
    fit = fit_expansion((r, f), 1 - 2 * a.real, order=2)
    return LocalChangeFit(a, fit.c0, (1 - 2 * a.real) / 4, fit.c1, fit.rms)


# ---------------------------------------------------------------------------
# characterisation


@dataclass(frozen=True)
class CharacterizationReport:
    connectivity: int
    disk_like: bool
    max_defect: float
    a_lower: float | None = None
    a_upper: float | None = None
    exponent: float | None = None
    squeezing: str = "not computed"
    lines: tuple[str, ...] = field(default=())

    def text(self) -> str:
        return "\n".join(self.lines)


def characterization_report(D: PlanarDomain, nodes: int = DEFAULT_NODES, tol: float = 1e-8,
                            deltas=None) -> CharacterizationReport:
    if D.connectivity == 1:
        from .geometry import interior_samples

        pts = interior_samples(D, 24, 0.05 * _size(D), seed=7)
        ray = normal_ray(D, BoundaryPoint("outer", 0.0), log_grid(1e-3, 1e-1, 8) * _size(D))
        pts = np.concatenate([pts, ray])
        s = np.asarray(suita_value(D, pts, nodes), float)
        k = np.asarray(kobayashi_value(D, pts, nodes), float)
        defect = float(np.max(np.abs(1 - s / k)))
        ok = defect <= tol
        lines = (
            "characterization: simply connected",
            f"quotient defect max|1 - S/K| = {defect:.3e} (tolerance {tol:g})",
            "disk-like" if ok else "quotient defect above tolerance",
            "squeezing function: not computed",
        )
        return CharacterizationReport(1, ok, defect, lines=lines)
    fit = quotient_bounds(D, deltas=deltas, nodes=nodes)
    defect = float(fit.defects.max())
    ok = False
    lines = (
        "characterization: doubly connected",
        f"defect ~ c delta^2, c in [{fit.a_lower:.6g}, {fit.a_upper:.6g}], exponent {fit.exponent:.4f}",
        "not disk-like",
        "squeezing function: not computed",
    )
    return CharacterizationReport(2, ok, defect, fit.a_lower, fit.a_upper, fit.exponent, lines=lines)


def _size(D: PlanarDomain) -> float:
    t = 2 * math.pi * np.arange(256) / 256
    pts = D.outer.point(t)
    return float(np.abs(pts - pts.mean()).min())


# ---------------------------------------------------------------------------
# output


def samples_csv(samples, kappa: float) -> str:
    """CSV with columns delta,kind,value,leading,residual (leading = 1/(2 delta) + kappa/4)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["delta", "kind", "value", "leading", "residual"])
    for s in samples:
        lead = 0.5 / s.delta + kappa / 4
        w.writerow([repr(s.delta), MetricKind(s.kind).value, repr(s.value), repr(lead), repr(s.value - lead)])
    return buf.getvalue()


def report_block(title: str, values: dict, checks=()) -> str:
    """Plain-text report: a title, key = value lines, then PASS/FAIL lines."""
    out = [f"== {title} =="]
    for k, v in values.items():
        out.append(f"{k} = {v:.10g}" if isinstance(v, float) else f"{k} = {v}")
    for name, passed in checks:
        out.append(f"{'PASS' if passed else 'FAIL'} {name}")
    return "\n".join(out) + "\n"
