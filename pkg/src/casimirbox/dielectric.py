r"""Dielectric response on the imaginary frequency axis.

Every model maps an imaginary frequency :math:`\xi \ge 0` (rad/s) to the real
permittivity :math:`\varepsilon(i\xi) \ge 1`. Models are frozen dataclasses and
evaluation is a pure function, so they can be shared freely between worker
processes.

A perfect conductor (and the :math:`\xi = 0` pole of plasma and Drude metals)
is represented by ``math.inf``; the reflection coefficients in
:mod:`casimirbox.lifshitz` map it to the ideal-mirror values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ExtrapolationError, ParseError, ValidationError

__all__ = [
    "DielectricModel",
    "Vacuum",
    "Constant",
    "PerfectConductor",
    "Plasma",
    "Drude",
    "LorentzTerm",
    "LorentzOscillators",
    "Tabulated",
    "eval_epsilon",
    "load_tabulated",
]

INFINITE = math.inf


def _check_xi(xi):
    xi = np.asarray(xi, dtype=float)
    if np.any(np.isnan(xi)) or np.any(xi < 0):
        raise DomainError("imaginary frequency xi must be >= 0")
    return xi


def _finish(xi, eps):
    """Return a Python float for scalar input, an array otherwise."""
    if np.ndim(xi) == 0:
        return float(eps)
    return np.broadcast_to(eps, np.shape(xi)).astype(float, copy=True)


class DielectricModel:
    """Base class; subclasses implement ``_eval`` on a float array."""

    #: name used by the command-line mini-language
    name = "model"

    def epsilon(self, xi):
        """Permittivity at imaginary frequency ``xi`` (scalar or array)."""
        xi = _check_xi(xi)
        return _finish(xi, self._eval(xi))

    __call__ = epsilon

    def _eval(self, xi):
        raise NotImplementedError

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class Vacuum(DielectricModel):
    name = "vacuum"

    def _eval(self, xi):
        return np.ones_like(xi)


@dataclass(frozen=True)
class Constant(DielectricModel):
    eps: float
    name = "constant"

    def __post_init__(self):
        if not (math.isfinite(self.eps) and self.eps >= 1.0):
            raise ValidationError(f"eps must be finite and >= 1, got {self.eps!r}", key="eps")

    def _eval(self, xi):
        return np.full_like(xi, self.eps)

    def params(self):
        return {"eps": self.eps}


@dataclass(frozen=True)
class PerfectConductor(DielectricModel):
    """Ideal mirror: infinite permittivity at every frequency."""

    name = "perfect"

    def _eval(self, xi):
        return np.full_like(xi, INFINITE)


@dataclass(frozen=True)
class Plasma(DielectricModel):
    """Dissipationless plasma, ``1 + wp^2 / xi^2``."""

    omega_p: float
    name = "plasma"

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ValidationError("omega_p must be > 0", key="wp")

    def _eval(self, xi):
        with np.errstate(divide="ignore"):
            return np.where(xi > 0, 1.0 + (self.omega_p / np.where(xi > 0, xi, 1.0)) ** 2, INFINITE)

    def params(self):
        return {"wp": self.omega_p}


@dataclass(frozen=True)
class Drude(DielectricModel):
    """Drude metal, ``1 + wp^2 / (xi (xi + gamma))``; infinite at ``xi = 0``."""

    omega_p: float
    gamma: float = 0.0
    name = "drude"

    def __post_init__(self):
        if not self.omega_p > 0:
            raise ValidationError("omega_p must be > 0", key="wp")
        if not self.gamma >= 0:
            raise ValidationError("gamma must be >= 0", key="gamma")

    def _eval(self, xi):
        safe = np.where(xi > 0, xi, 1.0)
        # written as a ratio of squares so that gamma = 0 reproduces Plasma exactly
        value = 1.0 + (self.omega_p / safe) ** 2 / (1.0 + self.gamma / safe)
        return np.where(xi > 0, value, INFINITE)

    def params(self):
        return {"wp": self.omega_p, "gamma": self.gamma}


@dataclass(frozen=True)
class LorentzTerm:
    strength: float
    omega: float
    gamma: float = 0.0

    def __post_init__(self):
        if not self.strength > 0:
            raise ValidationError("oscillator strength must be > 0", key="f")
        if not self.omega > 0:
            raise ValidationError("oscillator frequency must be > 0", key="w")
        if not self.gamma >= 0:
            raise ValidationError("oscillator damping must be >= 0", key="g")


@dataclass(frozen=True)
class LorentzOscillators(DielectricModel):
    """Sum of damped oscillators, ``1 + sum f_j w_j^2 / (w_j^2 + xi^2 + g_j xi)``."""

    terms: tuple[LorentzTerm, ...]
    name = "lorentz"

    def __post_init__(self):
        terms = tuple(t if isinstance(t, LorentzTerm) else LorentzTerm(*t) for t in self.terms)
        if not terms:
            raise ValidationError("at least one oscillator term is required", key="terms")
        object.__setattr__(self, "terms", terms)

    def _eval(self, xi):
        eps = np.ones_like(xi)
        for t in self.terms:
            eps = eps + t.strength * t.omega**2 / (t.omega**2 + xi * xi + t.gamma * xi)
        return eps

    def params(self):
        out = {}
        for j, t in enumerate(self.terms, 1):
            out.update({f"f{j}": t.strength, f"w{j}": t.omega, f"g{j}": t.gamma})
        return out


@dataclass(frozen=True)
class Tabulated(DielectricModel):
    """Tabulated ``eps(i xi)`` with log-log interpolation of ``eps - 1``.

    Queries below the first node always raise; queries above the last node
    raise unless ``clamp_high`` is set, in which case the last value is used.
    """

    grid: tuple[float, ...]
    values: tuple[float, ...]
    clamp_high: bool = False
    source: str | None = field(default=None, compare=False)
    name = "table"

    def __post_init__(self):
        grid = tuple(float(g) for g in self.grid)
        values = tuple(float(v) for v in self.values)
        if len(grid) != len(values):
            raise ValidationError("grid and values must have the same length", key="values")
        if len(grid) < 2:
            raise ValidationError("a tabulated model needs at least 2 nodes", key="grid")
        if not all(math.isfinite(g) for g in grid) or grid[0] < 0:
            raise ValidationError("grid values must be finite and >= 0", key="grid")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("grid must be strictly increasing", key="grid")
        if not all(math.isfinite(v) and v >= 1.0 for v in values):
            raise ValidationError("tabulated eps values must be finite and >= 1", key="eps")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def _eval(self, xi):
        grid = np.asarray(self.grid)
        chi = np.asarray(self.values) - 1.0
        if np.any(xi < grid[0]):
            raise ExtrapolationError(f"xi below tabulated range [{grid[0]:g}, {grid[-1]:g}]")
        if np.any(xi > grid[-1]) and not self.clamp_high:
            raise ExtrapolationError(
                f"xi above tabulated range [{grid[0]:g}, {grid[-1]:g}]; pass clamp_high=True to clamp"
            )
        q = np.minimum(xi, grid[-1])
        idx = np.clip(np.searchsorted(grid, q, side="right") - 1, 0, len(grid) - 2)
        x0, x1 = grid[idx], grid[idx + 1]
        y0, y1 = chi[idx], chi[idx + 1]
        # fall back to linear interpolation where a log is undefined
        loglog = (x0 > 0) & (y0 > 0) & (y1 > 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(loglog, np.log(q / x0) / np.log(x1 / x0), (q - x0) / (x1 - x0))
            out = np.where(loglog, y0 * (y1 / y0) ** s, y0 + (y1 - y0) * s)
        exact = q == x1
        out = np.where(exact, y1, np.where(q == x0, y0, out))
        # keep the result between the bracketing nodes despite rounding
        out = np.clip(out, np.minimum(y0, y1), np.maximum(y0, y1))
        return 1.0 + out

    def params(self):
        out = {"path": self.source} if self.source else {"nodes": len(self.grid)}
        if self.clamp_high:
            out["clamp"] = 1
        return out


def eval_epsilon(model: DielectricModel, xi):
    """Evaluate ``model`` at imaginary frequency ``xi`` (rad/s)."""
    return model.epsilon(xi)


def load_tabulated(path, clamp_high: bool = False) -> Tabulated:
    """Read a two-column ``xi_rad_per_s, eps_imag_axis`` text file.

    Lines starting with ``#`` and blank lines are skipped. Rows must already
    be in strictly increasing ``xi`` order.
    """
    path = Path(path)
    grid: list[float] = []
    values: list[float] = []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ParseError(f"expected 2 comma-separated columns, got {len(parts)}", line=lineno)
            try:
                xi, eps = float(parts[0]), float(parts[1])
            except ValueError:
                raise ParseError(f"non-numeric value in {line!r}", line=lineno) from None
            if not (math.isfinite(xi) and math.isfinite(eps)):
                raise ParseError("values must be finite", line=lineno)
            if eps < 1.0:
                raise ParseError(f"eps = {eps!r} < 1", line=lineno, key="eps")
            if grid and xi == grid[-1]:
                raise ParseError(f"duplicate xi = {xi!r}", line=lineno, key="xi")
            if grid and xi < grid[-1]:
                raise ParseError(f"xi = {xi!r} is not increasing", line=lineno, key="xi")
            grid.append(xi)
            values.append(eps)
    return Tabulated(tuple(grid), tuple(values), clamp_high=clamp_high, source=str(path))


def parse_model(text: str) -> DielectricModel:
    """Build a model from the ``name:key=value,key=value`` mini-language.

    >>> parse_model("drude:wp=1.3e16,gamma=6e13")
    Drude(omega_p=1.3e+16, gamma=60000000000000.0)
    """
    name, _, rest = text.strip().partition(":")
    name = name.strip().lower()
    kv: dict[str, str] = {}
    if rest.strip():
        for item in rest.split(","):
            key, sep, value = item.partition("=")
            key = key.strip().lower()
            if not sep or not key:
                raise ValidationError(f"malformed parameter {item!r} in model {text!r}", key=key or item)
            if key in kv:
                raise ValidationError(f"parameter {key!r} given twice", key=key)
            kv[key] = value.strip()
    return model_from_params(name, kv)


_ALIASES = {
    "vacuum": "vacuum",
    "constant": "constant",
    "const": "constant",
    "perfect": "perfect",
    "ideal": "perfect",
    "conductor": "perfect",
    "plasma": "plasma",
    "drude": "drude",
    "lorentz": "lorentz",
    "table": "table",
    "tabulated": "table",
}

_ALLOWED = {
    "vacuum": set(),
    "perfect": set(),
    "constant": {"eps"},
    "plasma": {"wp"},
    "drude": {"wp", "gamma"},
    "table": {"path", "clamp"},
}


def model_from_params(name: str, params: dict) -> DielectricModel:
    """Construct a model from a name and a flat ``{key: value}`` mapping."""
    kind = _ALIASES.get(name.lower())
    if kind is None:
        raise ValidationError(f"unknown model name {name!r}", key="model")

    def num(key):
        if key not in params:
            raise ValidationError(f"model {kind!r} requires parameter {key!r}", key=key)
        try:
            return float(params[key])
        except (TypeError, ValueError):
            raise ValidationError(f"parameter {key!r} is not a number: {params[key]!r}", key=key) from None

    if kind != "lorentz":
        unknown = set(params) - _ALLOWED[kind]
        if unknown:
            key = sorted(unknown)[0]
            raise ValidationError(f"unknown parameter {key!r} for model {kind!r}", key=key)
    if kind == "vacuum":
        return Vacuum()
    if kind == "perfect":
        return PerfectConductor()
    if kind == "constant":
        return Constant(num("eps"))
    if kind == "plasma":
        return Plasma(num("wp"))
    if kind == "drude":
        return Drude(num("wp"), num("gamma") if "gamma" in params else 0.0)
    if kind == "table":
        if "path" not in params:
            raise ValidationError("model 'table' requires parameter 'path'", key="path")
        clamp = str(params.get("clamp", "0")).lower() in {"1", "true", "yes"}
        return load_tabulated(params["path"], clamp_high=clamp)
    # lorentz: f1,w1[,g1],f2,w2[,g2],...
    indices = set()
    for key in params:
        head, digits = key[:1], key[1:]
        if head not in {"f", "w", "g"} or not digits.isdigit():
            raise ValidationError(f"unknown parameter {key!r} for model 'lorentz'", key=key)
        indices.add(int(digits))
    if not indices:
        raise ValidationError("model 'lorentz' requires parameters f1 and w1", key="f1")
    terms = []
    for j in sorted(indices):
        terms.append(LorentzTerm(num(f"f{j}"), num(f"w{j}"), num(f"g{j}") if f"g{j}" in params else 0.0))
    return LorentzOscillators(tuple(terms))


def format_model(model: DielectricModel) -> str:
    """Inverse of :func:`parse_model`, used to echo configurations."""
    params = model.params()
    if not params:
        return model.name
    return model.name + ":" + ",".join(f"{k}={v}" for k, v in params.items())


def is_dispersive(model: DielectricModel) -> bool:
    return not isinstance(model, (Vacuum, Constant, PerfectConductor))
