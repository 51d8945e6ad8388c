"""Command-line front end.

Exit codes: 0 success, 1 operational error (bad config, solver failure,
unsupported input), 2 a theorem check missed its tolerance.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import platform
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .experiments import (
    ConfigError,
    ScanConfig,
    characterization_report,
    comparison_gap,
    fit_expansion,
    localisation_check,
    log_grid,
    quotient_bounds,
    report_block,
    samples_csv,
    scan,
)
from .geometry import BoundaryCurve, BoundaryPoint, GeometryError, PlanarDomain, boundary_curvature
from .jets import JetError, RealJet, normalize_planar, normalize_scv, planar_pattern_residual, scv_pattern_residual
from .metrics import MetricKind, UnsupportedDomain, ball_kobayashi, metric_value
from .potential import DEFAULT_NODES, SolverError, build_solver, modulus

OK, OPERATIONAL, THEOREM = 0, 1, 2

CURVE_KINDS = ("circle", "ellipse", "fourier", "annulus")
CURVE_KEYS = ("radius", "center", "a", "b", "angle", "q")
RUN_KEYS = ("point", "point.which", "metrics", "z", "nodes", "delta_min", "delta_max", "grid", "tol", "method", "cone_eta")
DEFAULTS = {
    "point": 0.0,
    "point.which": "outer",
    "metrics": ("kobayashi",),
    "nodes": DEFAULT_NODES,
    "delta_min": 1e-3,
    "delta_max": 1e-1,
    "grid": 24,
    "method": "auto",
}


# ---------------------------------------------------------------------------
# config files


@dataclass
class CurveSpec:
    kind: str | None = None
    params: dict = field(default_factory=dict)
    fourier: list = field(default_factory=list)


@dataclass
class Config:
    outer: CurveSpec
    inner: CurveSpec | None
    settings: dict
    source: str = ""

    def domain(self) -> PlanarDomain:
        outer = _build_curve(self.outer)
        if self.outer.kind == "annulus":
            p = self.outer.params
            return PlanarDomain.annulus(p.get("q"), p.get("radius", 1.0), p.get("center", 0j))
        inner = None if self.inner is None else _build_curve(self.inner)
        return PlanarDomain(outer, inner)

    def canonical(self) -> dict:
        def curve(c):
            if c is None:
                return None
            return {"kind": c.kind, "params": {k: _jsonable(v) for k, v in sorted(c.params.items())},
                    "fourier": [[k, v.real, v.imag] for k, v in c.fourier]}

        return {"outer": curve(self.outer), "inner": curve(self.inner),
                "settings": {k: _jsonable(v) for k, v in sorted(self.settings.items())}}

    def echo(self) -> str:
        lines = [f"kind = {self.outer.kind}"]
        lines += [f"{k} = {_fmt(v)}" for k, v in sorted(self.outer.params.items())]
        if self.inner is not None:
            lines.append(f"inner = {self.inner.kind}")
            lines += [f"inner.{k} = {_fmt(v)}" for k, v in sorted(self.inner.params.items())]
        lines += [f"{k} = {_fmt(v)}" for k, v in sorted(self.settings.items())]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return " ".join(map(str, v))
    return repr(v) if isinstance(v, float) else str(v)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, tuple):
        return list(v)
    return v


def _build_curve(c: CurveSpec) -> BoundaryCurve:
    p = c.params
    if c.kind in ("circle", "annulus"):
        return BoundaryCurve.circle(p.get("center", 0j), p.get("radius", 1.0))
    if c.kind == "ellipse":
        return BoundaryCurve.ellipse(p["a"], p["b"], p.get("center", 0j), p.get("angle", 0.0))
    return BoundaryCurve.from_coeffs(c.fourier)


_NUMBER = re.compile(r"^[-+0-9.eEj() ]+$")


def _number(text: str, lineno: int, key: str):
    text = text.strip()
    if not text or not _NUMBER.match(text):
        raise ConfigError(f"line {lineno}: {key}: not a number: {text!r}")
    try:
        val = complex(text.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"line {lineno}: {key}: not a number: {text!r}") from None
    return val.real if val.imag == 0 and "j" not in text else val


def parse_config_text(text: str, source: str = "<string>") -> Config:
    outer, inner = CurveSpec(), None
    settings: dict = {}
    current = outer
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(f"line {lineno}: expected 'key = value' or a Fourier line 'k re im'")
            try:
                k = int(parts[0])
                c = complex(float(parts[1]), float(parts[2]))
            except ValueError:
                raise ConfigError(f"line {lineno}: malformed Fourier line {line!r}") from None
            current.fourier.append((k, c))
            continue
        for item in line.split(","):
            if "=" not in item:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {item.strip()!r}")
            key, val = (s.strip() for s in item.split("=", 1))
            if key == "kind":
                outer.kind = val
            elif key == "inner":
                inner = CurveSpec(kind=val)
                current = inner
            elif key.startswith("inner."):
                sub = key[6:]
                if inner is None:
                    raise ConfigError(f"line {lineno}: {key} before 'inner = ...'")
                if sub not in CURVE_KEYS:
                    raise ConfigError(f"line {lineno}: unknown key {key!r}")
                inner.params[sub] = _number(val, lineno, key)
            elif key in CURVE_KEYS:
                outer.params[key] = _number(val, lineno, key)
            elif key in RUN_KEYS:
                settings[key] = _setting(key, val, lineno)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
    for k, v in DEFAULTS.items():
        settings.setdefault(k, v)
    cfg = Config(outer, inner, settings, source)
    _validate(cfg)
    return cfg


def _setting(key: str, val: str, lineno: int):
    if key == "point.which":
        if val not in ("outer", "inner"):
            raise ConfigError(f"line {lineno}: point.which must be outer or inner")
        return val
    if key == "metrics":
        return tuple(val.split())
    if key == "method":
        return val
    if key in ("nodes", "grid"):
        try:
            return int(val)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} must be an integer") from None
    return _number(val, lineno, key)


def _validate(cfg: Config) -> None:
    problems = []
    o = cfg.outer
    if o.kind is None:
        problems.append("missing 'kind'")
    elif o.kind not in CURVE_KINDS:
        problems.append(f"unknown kind {o.kind!r}")
    problems += _curve_problems(o, "")
    if cfg.inner is not None:
        if o.kind == "annulus":
            problems.append("an annulus already has its inner curve")
        if cfg.inner.kind not in ("circle", "ellipse", "fourier"):
            problems.append(f"unknown inner kind {cfg.inner.kind!r}")
        problems += _curve_problems(cfg.inner, "inner.")
    s = cfg.settings
    n = s["nodes"]
    if n < 64 or n & (n - 1):
        problems.append("nodes must be a power of two >= 64")
    if not 0 < s["delta_min"] < s["delta_max"]:
        problems.append("need 0 < delta_min < delta_max")
    if s["grid"] < 2:
        problems.append("grid must have at least 2 points")
    for m in s["metrics"]:
        if m not in [k.value for k in MetricKind]:
            problems.append(f"unknown metric {m!r}")
    if s["method"] not in ("auto", "chart", "green"):
        problems.append(f"unknown method {s['method']!r}")
    if problems:
        raise ConfigError(problems)


def _curve_problems(c: CurveSpec, prefix: str) -> list[str]:
    p, out = c.params, []
    for key in ("radius", "a", "b", "q", "angle"):
        if isinstance(p.get(key), complex):
            out.append(f"{prefix}{key} must be real")
    if out:
        return out
    if c.kind in ("circle", "annulus") and p.get("radius", 1.0) <= 0:
        out.append(f"{prefix}radius must be positive")
    if c.kind == "ellipse":
        for key in ("a", "b"):
            if key not in p:
                out.append(f"{prefix}{key} is required for an ellipse")
            elif p[key] <= 0:
                out.append(f"{prefix}{key} must be positive")
    if c.kind == "annulus":
        if "q" not in p:
            out.append("q is required for an annulus")
        elif not 0 < p["q"] < 1:
            out.append("q must lie in (0, 1)")
    if c.kind == "fourier" and not c.fourier:
        out.append(f"{prefix or 'outer '}fourier curve needs 'k re im' lines")
    if c.kind != "fourier" and c.fourier:
        out.append(f"Fourier lines given for a {c.kind} curve")
    return out


def parse_config(path) -> Config:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    return parse_config_text(path.read_text(), str(path))


# ---------------------------------------------------------------------------
# manifests and outputs


def config_hash(cfg: Config, extra: dict | None = None) -> str:
    blob = json.dumps({"config": cfg.canonical(), "extra": extra or {}}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def run_manifest(command: str, cfg: Config | None, extra: dict, started: float, outputs: list[str]) -> dict:
    import scipy

    return {
        "command": command,
        "config_hash": config_hash(cfg, extra) if cfg is not None else None,
        "nodes": extra.get("nodes"),
        "tolerances": {"tol": extra.get("tol")},
        "versions": {"invmetrics": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                     "python": platform.python_version()},
        "wall_time": round(time.perf_counter() - started, 6),
        "outputs": outputs,
    }


def plot_scan(path: Path, deltas, values, residuals, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "invmetrics"
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    ax1.loglog(deltas, values, "o-", ms=3)
    ax1.set_xlabel("delta")
    ax1.set_ylabel("density")
    r = np.abs(residuals)
    ax2.loglog(deltas[r > 0], r[r > 0], "s-", ms=3)
    ax2.set_xlabel("delta")
    ax2.set_ylabel("|F - 1/(2 delta) - kappa/4|")
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


class Run:
    """Collects report text and files for one command."""

    def __init__(self, args, command: str):
        self.args = args
        self.command = command
        self.started = time.perf_counter()
        self.report: list[str] = []
        self.files: dict[str, str] = {}
        self.failed = False

    def check(self, name: str, passed: bool) -> tuple[str, bool]:
        self.failed |= not passed
        return name, passed

    def block(self, title, values, checks=()) -> None:
        self.report.append(report_block(title, values, checks))

    def finish(self, cfg: Config | None, extra: dict) -> int:
        text = "".join(self.report)
        sys.stdout.write(text)
        if self.args.out:
            out = Path(self.args.out)
            out.mkdir(parents=True, exist_ok=True)
            for name, content in self.files.items():
                (out / name).write_text(content)
            (out / "report.txt").write_text(text)
            names = sorted(self.files) + ["report.txt"]
            if getattr(self, "plot", None) is not None:
                plot_scan(out / f"{self.command}.svg", *self.plot)
                names.append(f"{self.command}.svg")
            manifest = run_manifest(self.command, cfg, extra, self.started, names)
            (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        return THEOREM if self.failed else OK


# ---------------------------------------------------------------------------
# commands


def _settings(args, cfg: Config) -> dict:
    s = dict(cfg.settings)
    for flag, key in (("nodes", "nodes"), ("delta_min", "delta_min"), ("delta_max", "delta_max"), ("grid", "grid")):
        v = getattr(args, flag, None)
        if v is not None:
            s[key] = v
    s["tol"] = args.tol if args.tol is not None else s.get("tol")
    return s


def _point(s: dict) -> BoundaryPoint:
    return BoundaryPoint(s["point.which"], float(s["point"]))


def cmd_domain_validate(args) -> int:
    cfg = parse_config(args.config)
    run = Run(args, "domain-validate")
    D = cfg.domain()
    s = _settings(args, cfg)
    t = np.linspace(0, 2 * np.pi, 256, endpoint=False)
    vals = {"connectivity": D.connectivity}
    for c, name in zip(D.curves, ("outer", "inner")):
        k = c.curvature(t)
        vals[f"{name}.curvature_min"] = float(k.min())
        vals[f"{name}.curvature_max"] = float(k.max())
    solver = build_solver(D, s["nodes"])
    vals["consistency"] = solver.consistency
    if D.connectivity == 2:
        vals["modulus"] = modulus(solver)
    sys.stdout.write(cfg.echo())
    run.block("domain", vals)
    return run.finish(cfg, {"nodes": s["nodes"]})


def cmd_jet_normalize(args) -> int:
    run = Run(args, "jet-normalize")
    path = Path(args.config)
    if not path.exists():
        raise ConfigError(f"{path}: no such file")
    j = RealJet.from_text(path.read_text())
    tol = args.tol if args.tol is not None else 1e-12
    if j.dim == 1:
        rep = normalize_planar(j, args.target)
        res = planar_pattern_residual(rep.final_jet, args.target)
        vals = {"kappa": rep.kappa, "quartic": rep.quartic, "steps": len(rep.steps), "off_pattern": res}
        checks = [run.check("off-pattern coefficients", res <= tol)]
    else:
        rep = normalize_scv(j)
        res = scv_pattern_residual(rep.final_jet)
        vals = {"kappa": rep.kappa, "tau": rep.tau, "steps": len(rep.steps), "off_pattern": res}
        checks = [run.check("off-pattern coefficients", res <= tol), run.check("tau > 0", rep.tau > 0)]
    checks.append(run.check("replay reproduces the final jet", rep.replay(j) == rep.final_jet))
    for i, st in enumerate(rep.steps):
        run.report.append(f"step {i}: {st.kind} {st.label}\n")
    run.block("normal form", vals, checks)
    run.files["final_jet.txt"] = rep.final_jet.to_text()
    run.report.append(rep.final_jet.to_text())
    return run.finish(None, {"tol": tol})


def cmd_metric_eval(args) -> int:
    cfg = parse_config(args.config)
    s = _settings(args, cfg)
    run = Run(args, "metric-eval")
    kind = MetricKind(args.kind)
    z = args.z if args.z is not None else s.get("z")
    if z is None:
        raise ConfigError("metric eval needs a point: --z or 'z = ...' in the config")
    z = complex(z)
    if kind is MetricKind.BALL:
        value = ball_kobayashi(2, [z, 0], [1, 0])
        run.block(f"{kind.value}", {"z": str(z), "value": value})
        return run.finish(cfg, {"kind": kind.value})
    D = cfg.domain()
    method = s["method"] if kind is MetricKind.SUITA or s["method"] != "green" else "auto"
    value = float(metric_value(D, kind, z, s["nodes"], method))
    run.block(kind.value, {"z": str(z), "value": value, "nodes": s["nodes"]})
    return run.finish(cfg, {"kind": kind.value, "z": [z.real, z.imag], "nodes": s["nodes"]})


def cmd_scan(args) -> int:
    cfg = parse_config(args.config)
    s = _settings(args, cfg)
    run = Run(args, "scan")
    D = cfg.domain()
    p = _point(s)
    sc = ScanConfig(D, p, tuple(s["metrics"]), s["delta_min"], s["delta_max"], s["grid"], s["nodes"], s["method"],
                    s.get("cone_eta"))
    samples = scan(sc)
    kappa = boundary_curvature(D, p)
    tol = s["tol"] if s["tol"] is not None else 5e-3
    run.files["scan.csv"] = samples_csv(samples, kappa)
    for kind in sc.kinds:
        sub = [x for x in samples if x.kind.value == kind]
        vals = {"kind": kind, "kappa": kappa, "samples": len(sub)}
        checks = []
        if len(sub) >= 8:
            fit = fit_expansion(sub, kappa)
            vals.update({"c0": fit.c0, "c1": fit.c1, "rms": fit.rms, "slope": fit.slope, "c_minus1": fit.c_minus1})
            checks.append(run.check(f"|c0 - kappa/4| <= {tol:g}", fit.c0_error <= tol))
        run.block(f"expansion {kind}", vals, checks)
        if args.plot and kind == sc.kinds[0]:
            d = np.array([x.delta for x in sub])
            v = np.array([x.value for x in sub])
            run.plot = (d, v, v - 0.5 / d - kappa / 4, f"{kind}, kappa = {kappa:.6g}")
    return run.finish(cfg, s)


def cmd_compare(args) -> int:
    cfg = parse_config(args.config)
    s = _settings(args, cfg)
    run = Run(args, "compare")
    D = cfg.domain()
    kinds = list(s["metrics"])
    if len(kinds) != 2:
        kinds = ["suita", "kobayashi"]
    grid = log_grid(s["delta_min"], s["delta_max"], s["grid"])
    fit = comparison_gap(D, _point(s), kinds[0], kinds[1], grid, s["nodes"], s["method"])
    tol = s["tol"] if s["tol"] is not None else 1e-9
    identical = fit.max_difference <= tol * float(np.max(0.5 / fit.deltas))
    vals = {"kinds": " ".join(kinds), "max_difference": fit.max_difference,
            "difference_slope": fit.difference_slope, "quotient_slope": fit.quotient_slope}
    if identical:
        checks = [run.check("metrics coincide on the grid", True)]
    else:
        checks = [run.check("difference slope >= 0.9", fit.difference_slope >= 0.9),
                  run.check("quotient slope >= 1.9", fit.quotient_slope >= 1.9)]
    run.block("comparison", vals, checks)
    rows = ["delta,difference,quotient_defect"] + [f"{d!r},{a!r},{b!r}" for d, a, b in
                                                  zip(fit.deltas, fit.difference, fit.quotient_defect)]
    run.files["compare.csv"] = "\n".join(rows) + "\n"
    return run.finish(cfg, s)


def cmd_quotient_bounds(args) -> int:
    cfg = parse_config(args.config)
    s = _settings(args, cfg)
    run = Run(args, "quotient-bounds")
    D = cfg.domain()
    grid = log_grid(s["delta_min"], s["delta_max"], s["grid"])
    fit = quotient_bounds(D, [_point(s)], grid, s["nodes"])
    vals = {"a_lower": fit.a_lower, "a_upper": fit.a_upper, "exponent": fit.exponent,
            "max_defect": float(np.max(np.abs(fit.defects)))}
    if D.connectivity == 2:
        tol = s["tol"] if s["tol"] is not None else 0.05
        checks = [run.check(f"|exponent - 2| <= {tol:g}", abs(fit.exponent - 2) <= tol),
                  run.check("a_lower > 0", fit.a_lower > 0),
                  run.check("a_upper finite", math.isfinite(fit.a_upper))]
    else:
        tol = s["tol"] if s["tol"] is not None else 1e-8
        checks = [run.check(f"max |1 - S/K| <= {tol:g}", vals["max_defect"] <= tol)]
    run.block("quotient bounds", vals, checks)
    rows = ["delta,defect,ratio"] + [f"{d!r},{f!r},{r!r}" for d, f, r in
                                     zip(fit.deltas.ravel(), fit.defects.ravel(), fit.ratios.ravel())]
    run.files["quotient.csv"] = "\n".join(rows) + "\n"
    return run.finish(cfg, s)


def cmd_localize(args) -> int:
    """The config domain is the subdomain; the comparison domain drops its inner curve."""
    cfg = parse_config(args.config)
    s = _settings(args, cfg)
    run = Run(args, "localize")
    Dt = cfg.domain()
    D = PlanarDomain(Dt.outer)
    grid = log_grid(s["delta_min"], s["delta_max"], s["grid"])
    fit = localisation_check(D, Dt, _point(s), grid, s["nodes"])
    tol = s["tol"] if s["tol"] is not None else 1e-9
    same = Dt.inner is None
    vals = {"min_gap": fit.min_gap, "max_gap": fit.max_gap, "slope": fit.slope}
    if same:
        checks = [run.check(f"gap identically 0 (<= {tol:g})", np.max(np.abs(fit.gaps)) <= tol)]
    else:
        checks = [run.check("gap >= 0", fit.min_gap >= -tol), run.check("gap slope >= 0.9", fit.slope >= 0.9)]
    run.block("localisation", vals, checks)
    rows = ["delta,gap"] + [f"{d!r},{g!r}" for d, g in zip(fit.deltas, fit.gaps)]
    run.files["localize.csv"] = "\n".join(rows) + "\n"
    return run.finish(cfg, s)


def cmd_report(args) -> int:
    cfg = parse_config(args.config)
    s = _settings(args, cfg)
    run = Run(args, "report")
    D = cfg.domain()
    tol = s["tol"] if s["tol"] is not None else 1e-8
    grid = log_grid(s["delta_min"], s["delta_max"], s["grid"])
    rep = characterization_report(D, s["nodes"], tol, grid)
    run.report.append(rep.text() + "\n")
    if D.connectivity == 1:
        run.check("simply connected domain is disk-like", rep.disk_like)
    else:
        run.check("delta^2 defect has a positive constant", rep.a_lower is not None and rep.a_lower > 0)
    run.report.append(("FAIL" if run.failed else "PASS") + " characterization consistent\n")
    return run.finish(cfg, s)


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="domain config file (jet literal file for 'jet normalize')")
    common.add_argument("--nodes", type=int, help="quadrature nodes per boundary curve")
    common.add_argument("--delta-min", type=float, dest="delta_min")
    common.add_argument("--delta-max", type=float, dest="delta_max")
    common.add_argument("--grid", type=int, help="number of log-spaced deltas")
    common.add_argument("--tol", type=float, help="tolerance of the theorem check")
    common.add_argument("--plot", action="store_true", help="write an SVG next to the CSV")
    common.add_argument("--out", help="output directory")

    ap = argparse.ArgumentParser(prog="invmetrics", description="Invariant metrics on planar domains.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    dom = sub.add_parser("domain").add_subparsers(dest="action", required=True)
    dom.add_parser("validate", parents=[common]).set_defaults(func=cmd_domain_validate)
    jet = sub.add_parser("jet").add_subparsers(dest="action", required=True)
    jn = jet.add_parser("normalize", parents=[common])
    jn.add_argument("--target", type=float, default=0.0, help="planar |z|^4 coefficient")
    jn.set_defaults(func=cmd_jet_normalize)
    met = sub.add_parser("metric").add_subparsers(dest="action", required=True)
    me = met.add_parser("eval", parents=[common])
    me.add_argument("--kind", default="kobayashi", choices=[k.value for k in MetricKind])
    me.add_argument("--z", type=complex)
    me.set_defaults(func=cmd_metric_eval)
    for name, fn in (("scan", cmd_scan), ("compare", cmd_compare), ("quotient-bounds", cmd_quotient_bounds),
                     ("localize", cmd_localize), ("report", cmd_report)):
        sub.add_parser(name, parents=[common]).set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GeometryError, SolverError, UnsupportedDomain, JetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return OPERATIONAL


if __name__ == "__main__":
    sys.exit(main())
