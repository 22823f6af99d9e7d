"""Command-line front end: energies, pressures, distance sweeps, boxed sums and validation.

Exit statuses: 0 success, 1 usage error, 2 numerical non-convergence,
3 validation failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import __version__
from .boxrenorm import BoxLadder, dirichlet_casimir, lifshitz_1d_oracle, slab_casimir
from .constants import NATURAL, SI
from .dielectric import DielectricModel, format_model, model_from_params, parse_model
from .errors import CasimirError, ConvergenceError, ValidationError
from .lifshitz import HalfspaceSystem, energy_per_area, force_per_area, ideal_energy_per_area
from .quad import QuadratureSpec, Transform
from .validation import CHECKS, DIRICHLET_LADDER, SLAB_LADDER, run_validate

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE, EXIT_VALIDATION = 0, 1, 2, 3
MODES = ("energy", "force", "sweep", "boxrenorm", "validate")
COLUMNS = ("d_m", "energy_J_per_m2", "energy_err", "force_N_per_m2", "force_err", "eta")
BOX_COLUMNS = ("L", "Lambda", "unsubtracted", "subtracted")
CHECK_COLUMNS = ("check", "target", "computed", "tolerance", "passed")


class UsageError(CasimirError):
    """Bad command line or configuration; ``key`` names the offending setting."""

    def __init__(self, message, key=None):
        self.key = key
        named = key is None or re.search(rf"(?<![\w-]){re.escape(key)}(?![\w-])", message)
        super().__init__(message if named else f"{key}: {message}")


@dataclass(frozen=True)
class SweepSpec:
    d_min: float
    d_max: float
    points: int
    spacing: str = "log"

    def __post_init__(self):
        if not (self.d_min > 0 and math.isfinite(self.d_max)):
            raise UsageError(f"d_min must be > 0, got {self.d_min!r}", key="d_min")
        if not self.d_min < self.d_max:
            raise UsageError(f"d_min ({self.d_min!r}) must be < d_max ({self.d_max!r})", key="d_max")
        if self.points < 2:
            raise UsageError(f"points must be >= 2, got {self.points!r}", key="points")
        if self.spacing not in ("linear", "log"):
            raise UsageError(f"spacing must be 'linear' or 'log', got {self.spacing!r}", key="spacing")

    def distances(self) -> np.ndarray:
        if self.spacing == "log":
            grid = np.geomspace(self.d_min, self.d_max, self.points)
        else:
            grid = np.linspace(self.d_min, self.d_max, self.points)
        grid[0], grid[-1] = self.d_min, self.d_max
        return grid


@dataclass(frozen=True)
class BoxSpec:
    geometry: str = "dirichlet"
    a: float = 1.0
    index: float = 2.0
    thickness: float = 2.0
    lengths: tuple = ()
    cutoffs: tuple = ()
    regulator: str = "exponential"
    reference_fraction: float = 0.5

    def ladder(self) -> BoxLadder:
        default = DIRICHLET_LADDER if self.geometry == "dirichlet" else SLAB_LADDER
        try:
            return BoxLadder(self.lengths or default.lengths, self.cutoffs or default.cutoffs)
        except ValidationError as exc:
            raise UsageError(str(exc), key=exc.key or "lengths") from None


@dataclass(frozen=True)
class RunConfig:
    mode: str
    left: Optional[DielectricModel] = None
    right: Optional[DielectricModel] = None
    d: Optional[float] = None
    sweep: Optional[SweepSpec] = None
    box: Optional[BoxSpec] = None
    only: tuple = ()
    quad: QuadratureSpec = QuadratureSpec()
    format: str = "csv"
    output: Optional[str] = None
    jobs: int = 1
    inject_ideal_error: float = 0.0

    def system(self, d: float) -> HalfspaceSystem:
        return HalfspaceSystem(self.left, self.right, d, SI)

    def resolved(self) -> dict:
        """JSON-ready echo of every setting that affects the numbers."""
        out = {"mode": self.mode}
        if self.left is not None:
            out["left"] = format_model(self.left)
            out["right"] = format_model(self.right)
            out["hbar"], out["c"] = SI.hbar, SI.c
        if self.d is not None:
            out["d"] = self.d
        if self.sweep is not None:
            out["sweep"] = asdict(self.sweep)
        if self.box is not None:
            box = asdict(self.box)
            ladder = self.box.ladder()
            box["lengths"], box["cutoffs"] = list(ladder.lengths), list(ladder.cutoffs)
            out["box"] = box
        if self.mode == "validate":
            out["only"] = list(self.only) or list(CHECKS)
        out["quad"] = {
            "rel_tol": self.quad.rel_tol,
            "abs_tol": self.quad.abs_tol,
            "max_evals": self.quad.max_evals,
            "transform": self.quad.transform.value,
        }
        return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--config", default=S, help="JSON run configuration; flags override its values")
    p.add_argument("--model-left", default=S, help="left medium, e.g. drude:wp=1.3e16,gamma=6e13")
    p.add_argument("--model-right", default=S, help="right medium")
    p.add_argument("--d", type=float, default=S, help="separation in m")
    p.add_argument("--rel-tol", type=float, default=S)
    p.add_argument("--abs-tol", type=float, default=S)
    p.add_argument("--max-evals", type=int, default=S)
    p.add_argument("--transform", choices=[t.value for t in Transform], default=S)
    p.add_argument("--format", choices=("csv", "json"), default=S)
    p.add_argument("--output", default=S, help="output path (default stdout)")
    p.add_argument("--jobs", type=int, default=S, help="worker processes (default $CASIMIR_JOBS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="casimirbox", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _add_common(parser)
    sub = parser.add_subparsers(dest="mode", metavar="MODE", parser_class=_Parser)
    S = argparse.SUPPRESS
    for mode, text in (("energy", "energy per area (J/m^2)"), ("force", "pressure (N/m^2)")):
        _add_common(sub.add_parser(mode, help=text))
    sweep = sub.add_parser("sweep", help="energy, pressure and reduction factor over a distance grid")
    _add_common(sweep)
    sweep.add_argument("--d-min", type=float, default=S)
    sweep.add_argument("--d-max", type=float, default=S)
    sweep.add_argument("--points", type=int, default=S)
    sweep.add_argument("--spacing", choices=("linear", "log"), default=S)
    box = sub.add_parser("boxrenorm", help="1D box-renormalized energy (hbar = c = 1)")
    _add_common(box)
    box.add_argument("--geometry", choices=("dirichlet", "slabs"), default=S)
    box.add_argument("--a", type=float, default=S, help="gap between the plates or slabs")
    box.add_argument("--index", type=float, default=S, help="slab refractive index")
    box.add_argument("--thickness", type=float, default=S, help="slab thickness")
    box.add_argument("--lengths", default=S, help="comma-separated box sizes")
    box.add_argument("--cutoffs", default=S, help="comma-separated cutoffs")
    box.add_argument("--regulator", choices=("exponential", "gaussian"), default=S)
    box.add_argument("--reference-fraction", type=float, default=S)
    val = sub.add_parser("validate", help="run the canonical checks")
    _add_common(val)
    val.add_argument("--only", action="append", choices=sorted(CHECKS), default=S, help="run only this check (repeatable)")
    val.add_argument("--inject-ideal-error", type=float, default=S, help=S)
    return parser


_FILE_KEYS = {"mode", "left", "right", "d", "sweep", "box", "only", "quad", "output", "jobs"}


def _load_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc.strerror}", key="config") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path!r} is not valid JSON: {exc}", key="config") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object", key="config")
    for key in data:
        if key not in _FILE_KEYS:
            raise UsageError(f"unknown config key {key!r}", key=key)
    return data


def _model(value, key: str) -> DielectricModel:
    try:
        if isinstance(value, str):
            return parse_model(value)
        if isinstance(value, dict) and "model" in value:
            params = {k: v for k, v in value.items() if k != "model"}
            return model_from_params(str(value["model"]), params)
    except ValidationError as exc:
        raise UsageError(f"{key}: {exc}", key=exc.key or key) from None
    raise UsageError(f"{key} must be a model string or an object with a 'model' field", key=key)


def _floats(text, key):
    if isinstance(text, (list, tuple)):
        items = text
    else:
        items = [t for t in str(text).split(",") if t.strip()]
    try:
        return tuple(float(t) for t in items)
    except (TypeError, ValueError):
        raise UsageError(f"{key} must be a list of numbers, got {text!r}", key=key) from None


def _section(data: dict, name: str, allowed: set) -> dict:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise UsageError(f"{name} must be an object", key=name)
    for key in section:
        if key not in allowed:
            raise UsageError(f"unknown key {key!r} in {name}", key=key)
    return dict(section)


def _jobs_default(environ) -> int:
    raw = environ.get("CASIMIR_JOBS")
    if raw is None or raw == "":
        return 1
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"CASIMIR_JOBS must be an integer, got {raw!r}", key="CASIMIR_JOBS") from None


def parse_config(argv=None, environ=None) -> RunConfig:
    """Resolve a :class:`RunConfig` from flags and an optional JSON file.

    Flags override file values. Any problem raises :class:`UsageError` with
    the offending key.
    """
    environ = os.environ if environ is None else environ
    ns = vars(build_parser().parse_args(argv))
    data = _load_file(ns["config"]) if "config" in ns else {}

    mode = ns.get("mode") or data.get("mode")
    if mode is None:
        raise UsageError(f"no mode given; choose one of {', '.join(MODES)}", key="mode")
    if mode not in MODES:
        raise UsageError(f"unknown mode {mode!r}", key="mode")
    quad = _section(data, "quad", {"rel_tol", "abs_tol", "max_evals", "transform"})
    for flag in ("rel_tol", "abs_tol", "max_evals", "transform"):
        if flag in ns:
            quad[flag] = ns[flag]
    try:
        quad_spec = QuadratureSpec(**quad)
    except ValidationError as exc:
        raise UsageError(str(exc), key=exc.key) from None
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc), key="quad") from None

    out = _section(data, "output", {"format", "path"}) if isinstance(data.get("output"), dict) else {}
    fmt = ns.get("format", out.get("format", "csv"))
    if fmt not in ("csv", "json"):
        raise UsageError(f"format must be 'csv' or 'json', got {fmt!r}", key="format")
    output = ns.get("output", out.get("path"))

    jobs = ns.get("jobs", data.get("jobs", _jobs_default(environ)))
    if not isinstance(jobs, int) or jobs < 1:
        raise UsageError(f"jobs must be a positive integer, got {jobs!r}", key="jobs")

    common = dict(quad=quad_spec, format=fmt, output=output, jobs=jobs, mode=mode)
    has_system = any(k in ns for k in ("model_left", "model_right", "d")) or any(k in data for k in ("left", "right", "d"))

    if mode == "validate":
        if has_system or "sweep" in data or "box" in data:
            key = next(k for k in ("model_left", "model_right", "d", "left", "right", "sweep", "box") if k in ns or k in data)
            raise UsageError("validate runs built-in cases and takes no system settings", key=key.replace("_", "-"))
        only = ns.get("only", data.get("only", []))
        if isinstance(only, str):
            only = [only]
        for name in only:
            if name not in CHECKS:
                raise UsageError(f"unknown check {name!r}", key="only")
        return RunConfig(only=tuple(only), inject_ideal_error=ns.get("inject_ideal_error", 0.0), **common)

    if mode == "boxrenorm":
        if has_system or "sweep" in data:
            raise UsageError("boxrenorm takes no half-space settings", key="model-left" if has_system else "sweep")
        box = _section(data, "box", set(BoxSpec.__dataclass_fields__))
        for flag in BoxSpec.__dataclass_fields__:
            if flag in ns:
                box[flag] = ns[flag]
        for key in ("lengths", "cutoffs"):
            if key in box:
                box[key] = _floats(box[key], key)
        geometry = box.get("geometry", "dirichlet")
        if geometry not in ("dirichlet", "slabs"):
            raise UsageError(f"unknown geometry {geometry!r}", key="geometry")
        if geometry == "dirichlet" and any(k in box for k in ("index", "thickness")):
            raise UsageError("dirichlet geometry has no slab parameters", key="index" if "index" in box else "thickness")
        try:
            spec = BoxSpec(**box)
        except TypeError as exc:
            raise UsageError(str(exc), key="box") from None
        if not spec.a > 0 or not spec.index >= 1 or not spec.thickness > 0:
            key = "a" if not spec.a > 0 else ("index" if not spec.index >= 1 else "thickness")
            raise UsageError(f"invalid {key} = {getattr(spec, key)!r}", key=key)
        spec.ladder()
        return RunConfig(box=spec, **common)

    if "box" in data:
        raise UsageError(f"{mode} takes no box settings", key="box")
    left = ns.get("model_left", data.get("left"))
    right = ns.get("model_right", data.get("right"))
    if left is None:
        raise UsageError("missing left medium", key="model-left")
    if right is None:
        raise UsageError("missing right medium", key="model-right")
    left, right = _model(left, "model-left"), _model(right, "model-right")
    d = ns.get("d", data.get("d"))

    if mode == "sweep":
        sweep = _section(data, "sweep", {"d_min", "d_max", "points", "spacing"})
        for flag in ("d_min", "d_max", "points", "spacing"):
            if flag in ns:
                sweep[flag] = ns[flag]
        if d is not None:
            raise UsageError("a sweep takes d_min/d_max, not a single d", key="d")
        for key in ("d_min", "d_max", "points"):
            if key not in sweep:
                raise UsageError(f"sweep requires {key}", key=key.replace("_", "-"))
        try:
            spec = SweepSpec(float(sweep["d_min"]), float(sweep["d_max"]), int(sweep["points"]), sweep.get("spacing", "log"))
        except (TypeError, ValueError):
            raise UsageError("sweep bounds must be numbers", key="sweep") from None
        return RunConfig(left=left, right=right, sweep=spec, **common)

    if "sweep" in data:
        raise UsageError(f"{mode} takes a single d, not a sweep", key="sweep")
    if d is None:
        raise UsageError("missing separation", key="d")
    try:
        d = float(d)
    except (TypeError, ValueError):
        raise UsageError(f"d must be a number, got {d!r}", key="d") from None
    if not (d > 0 and math.isfinite(d)):
        raise UsageError(f"d must be > 0, got {d!r}", key="d")
    return RunConfig(left=left, right=right, d=d, **common)


def _row(config: RunConfig, d: float, energy: bool, force: bool) -> dict:
    """One output row; a failed integral leaves NaN and a ``flag`` message."""
    row = {k: None for k in COLUMNS}
    row["d_m"] = float(d)
    flags = []
    system = config.system(d)
    if energy:
        try:
            report = energy_per_area(system, config.quad)
            row["energy_J_per_m2"], row["energy_err"] = report.value, report.abs_error_estimate
            row["eta"] = report.value / ideal_energy_per_area(d, system.constants)
        except ConvergenceError as exc:
            row["energy_J_per_m2"] = row["energy_err"] = row["eta"] = math.nan
            flags.append(f"energy: {exc}")
    if force:
        try:
            report = force_per_area(system, config.quad)
            row["force_N_per_m2"], row["force_err"] = report.value, report.abs_error_estimate
        except ConvergenceError as exc:
            row["force_N_per_m2"] = row["force_err"] = math.nan
            flags.append(f"force: {exc}")
    row["flag"] = "; ".join(flags) or None
    return row


def _sweep_point(config: RunConfig, d: float) -> dict:
    return _row(config, d, True, True)


def run_sweep(config: RunConfig) -> list[dict]:
    """Rows in ascending ``d``; points are independent, so the worker count never changes a value."""
    if config.mode != "sweep" or config.sweep is None:
        raise UsageError("run_sweep needs a sweep configuration", key="mode")
    grid = [float(d) for d in config.sweep.distances()]
    if config.jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=min(config.jobs, len(grid))) as pool:
            return list(pool.map(_sweep_point, [config] * len(grid), grid))
    return [_sweep_point(config, d) for d in grid]


def _header(config: RunConfig) -> list[str]:
    return [
        f"casimirbox {__version__}",
        "config: " + json.dumps(config.resolved(), sort_keys=True),
    ]


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(config: RunConfig, rows: list[dict], columns, extra: Optional[dict] = None) -> str:
    """Serialize rows in the configured format with the resolved configuration embedded."""
    if config.format == "json":
        doc = {"version": __version__, "config": config.resolved(), "rows": rows}
        if extra:
            doc.update(extra)
        return json.dumps(doc, indent=2, allow_nan=True) + "\n"
    buf = io.StringIO()
    for line in _header(config):
        buf.write(f"# {line}\n")
    for row in rows:
        if row.get("flag"):
            buf.write(f"# flagged d_m={row['d_m']!r}: {row['flag']}\n")
    for key, value in (extra or {}).items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_csv_value(row.get(c)) for c in columns])
    return buf.getvalue()


def _emit(config: RunConfig, text: str, stdout) -> None:
    if config.output:
        with open(config.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _run_box(config: RunConfig):
    spec = config.box
    ladder = spec.ladder()
    extra = {}
    try:
        if spec.geometry == "dirichlet":
            report = dirichlet_casimir(spec.a, ladder, reference_fraction=spec.reference_fraction,
                                       regulator=spec.regulator, constants=NATURAL)
            extra["reference"] = {"exact": -math.pi / (24.0 * spec.a)}
        else:
            report = slab_casimir(spec.a, spec.index, spec.thickness, ladder,
                                  reference_fraction=spec.reference_fraction, regulator=spec.regulator,
                                  constants=NATURAL)
            extra["reference"] = {"lifshitz_1d": lifshitz_1d_oracle(spec.a, spec.index, spec.thickness, NATURAL)}
    except ConvergenceError as exc:
        rows = [
            {"L": L, "Lambda": lam, "unsubtracted": None, "subtracted": value}
            for (L, lam), value in sorted((exc.ladder or {}).items())
        ]
        extra["result"] = {"value": exc.estimate, "error": exc.error, "converged": False}
        return rows, extra, EXIT_CONVERGENCE
    rows = []
    for L in ladder.lengths:
        for lam in ladder.cutoffs:
            tag = f"[L={L:g},Lambda={lam:g}]"
            rows.append({
                "L": L,
                "Lambda": lam,
                "unsubtracted": report.diagnostic("E_A" + tag),
                "subtracted": report.diagnostic("E_sub" + tag),
            })
    extra["result"] = {
        "value": report.value,
        "error": report.abs_error_estimate,
        "converged": True,
        "max_weyl_deviation": report.diagnostic("max_weyl_deviation"),
    }
    return rows, extra, EXIT_OK


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute a resolved configuration and return the exit status."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    if config.mode == "validate":
        results = run_validate(config.only, perturb_ideal=config.inject_ideal_error, jobs=config.jobs)
        for r in results:
            stderr.write(r.line() + "\n")
        rows = [{"check": r.name, "target": r.target, "computed": r.computed,
                 "tolerance": r.tolerance, "passed": r.passed} for r in results]
        _emit(config, render(config, rows, CHECK_COLUMNS), stdout)
        return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATION
    if config.mode == "boxrenorm":
        rows, extra, status = _run_box(config)
        _emit(config, render(config, rows, BOX_COLUMNS, extra), stdout)
        return status
    if config.mode == "sweep":
        rows = run_sweep(config)
    else:
        rows = [_row(config, config.d, config.mode == "energy", config.mode == "force")]
    _emit(config, render(config, rows, COLUMNS), stdout)
    flagged = [r for r in rows if r.get("flag")]
    for r in flagged:
        stderr.write(f"casimirbox: d = {r['d_m']!r}: {r['flag']}\n")
    return EXIT_CONVERGENCE if flagged else EXIT_OK


def main(argv=None) -> int:
    try:
        config = parse_config(argv)
    except (UsageError, ValidationError) as exc:
        sys.stderr.write(f"casimirbox: error: {exc}\n")
        return EXIT_USAGE
    try:
        return run(config)
    except ConvergenceError as exc:
        sys.stderr.write(f"casimirbox: {exc}\n")
        return EXIT_CONVERGENCE
    except (ValidationError, OSError) as exc:
        sys.stderr.write(f"casimirbox: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
