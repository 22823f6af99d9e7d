r"""Adaptive quadrature and limit extrapolation.

The integrands in this package all decay like :math:`e^{-x}`, so the default
semi-infinite treatment maps :math:`[a, \infty)` onto :math:`(0, 1]` through
:math:`x = a - s\ln u` and runs a globally adaptive Gauss-Kronrod (7/15)
scheme on the image. The reported error is the sum of the per-panel
:math:`|K_{15} - G_7|` differences, which is very pessimistic for smooth
integrands; that pessimism is relied upon by the callers.
"""
from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, DegenerateSequenceError, ValidationError

__all__ = [
    "Transform",
    "QuadratureSpec",
    "QuadResult",
    "LimitSequence",
    "integrate_finite",
    "integrate_semi_infinite",
    "integrate_wedge",
    "richardson_extrapolate",
    "extrapolation_weights",
]

# Kronrod 15-point abscissae on [0, 1] (descending) with weights; every other
# abscissa starting at index 1 is a 7-point Gauss node.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full symmetric node set on [-1, 1]
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[:3][::-1]


class Transform(enum.Enum):
    """Treatment of the infinite upper limit."""

    EXP_TAIL = "exp_tail"
    NONE = "none"


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-9
    abs_tol: float = 0.0
    max_evals: int = 10_000_000
    transform: Transform = Transform.EXP_TAIL

    def __post_init__(self):
        if isinstance(self.transform, str):
            object.__setattr__(self, "transform", Transform(self.transform))
        if self.rel_tol < 0 or self.abs_tol < 0:
            raise ValidationError("quadrature tolerances must be non-negative", key="rel_tol")
        if not (self.rel_tol > 0 or self.abs_tol > 0):
            raise ValidationError("one of rel_tol, abs_tol must be > 0", key="rel_tol")
        if self.max_evals < 1000:
            raise ValidationError("max_evals must be >= 1000", key="max_evals")

    def tightened(self, factor: float = 10.0) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol / factor, self.abs_tol / factor, self.max_evals, self.transform)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    evaluations: int = 0
    #: number of outer-integrand evaluations (nested integrals only)
    outer_evaluations: int = 0

    def __iter__(self):
        yield self.value
        yield self.error


class _Budget:
    """Evaluation counter shared by nested integrations."""

    def __init__(self, limit):
        self.limit = limit
        self.used = 0

    def charge(self, n):
        self.used += n
        return self.used <= self.limit


def _panel(g, a, b, aux):
    center = 0.5 * (a + b)
    half = 0.5 * (b - a)
    fx = np.asarray(g(center + half * NODES), dtype=float)
    if aux:
        vals, extra = fx[0], fx[1]
    else:
        vals = fx
    if not np.all(np.isfinite(vals)):
        raise ConvergenceError(f"integrand is not finite on [{a!r}, {b!r}]")
    k = half * float(KRONROD_WEIGHTS @ vals)
    err = abs(k - half * float(GAUSS_WEIGHTS @ vals))
    if aux:
        err += abs(half * float(KRONROD_WEIGHTS @ extra))
    return k, err


def _adaptive(g, lo, hi, rel_tol, abs_tol, budget, *, panels=2, aux=False):
    """Globally adaptive G7/K15 on ``[lo, hi]``; returns (value, error)."""
    heap = []
    frozen = []
    edges = np.linspace(lo, hi, panels + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        budget.charge(15)
        k, e = _panel(g, a, b, aux)
        heapq.heappush(heap, (-e, a, b, k))
    total = math.fsum(item[3] for item in heap)
    error = math.fsum(-item[0] for item in heap)
    while True:
        if error <= max(abs_tol, rel_tol * abs(total)):
            # running sums drift; confirm with exact sums before accepting
            items = heap + frozen
            total = math.fsum(item[3] for item in items)
            error = math.fsum(-item[0] for item in items)
            if error <= max(abs_tol, rel_tol * abs(total)):
                return total, error
        if not heap:
            raise ConvergenceError(
                "quadrature reached the floating-point resolution limit before the tolerance",
                estimate=total, error=error, evaluations=budget.used,
            )
        if not budget.charge(30):
            raise ConvergenceError(
                f"quadrature budget of {budget.limit} evaluations exhausted",
                estimate=total, error=error, evaluations=budget.used,
            )
        neg_e, a, b, k = heapq.heappop(heap)
        mid = 0.5 * (a + b)
        if not (a < mid < b):
            frozen.append((neg_e, a, b, k))
            continue
        k1, e1 = _panel(g, a, mid, aux)
        k2, e2 = _panel(g, mid, b, aux)
        heapq.heappush(heap, (-e1, a, mid, k1))
        heapq.heappush(heap, (-e2, mid, b, k2))
        total += k1 + k2 - k
        error += e1 + e2 + neg_e


def integrate_finite(f: Callable, a: float, b: float, spec: QuadratureSpec = QuadratureSpec()) -> QuadResult:
    """Adaptive integral of a vectorized ``f`` over the finite interval ``[a, b]``."""
    if b == a:
        return QuadResult(0.0, 0.0, 0)
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    budget = _Budget(spec.max_evals)
    value, error = _adaptive(f, a, b, spec.rel_tol, spec.abs_tol, budget)
    return QuadResult(sign * value, error, budget.used)


def _exp_tail(f, a, scale):
    def g(u):
        x = a - scale * np.log(u)
        return f(x) * (scale / u)
    return g


def _semi_infinite(f, a, rel_tol, abs_tol, budget, transform, scale):
    if transform is Transform.EXP_TAIL:
        return _adaptive(_exp_tail(f, a, scale), 0.0, 1.0, rel_tol, abs_tol, budget)
    # no change of variables: doubling panels until two consecutive ones are negligible
    total = error = 0.0
    width, left, quiet = scale, a, 0
    while quiet < 2:
        floor = max(abs_tol, 0.1 * rel_tol * abs(total))
        piece, piece_err = _adaptive(f, left, left + width, rel_tol, floor, budget)
        total += piece
        error += piece_err
        quiet = quiet + 1 if abs(piece) <= 0.1 * max(abs_tol, rel_tol * abs(total)) else 0
        left += width
        width *= 2.0
        if not math.isfinite(left):
            raise ConvergenceError("integrand tail never became negligible", estimate=total, error=error)
    return total, error + abs(piece)


def integrate_semi_infinite(
    f: Callable, a: float, spec: QuadratureSpec = QuadratureSpec(), *, scale: float = 1.0
) -> QuadResult:
    """Integrate a vectorized ``f`` over ``[a, inf)``.

    ``scale`` is the length over which the substitution ``x = a - scale*ln(u)``
    resolves the exponential tail; choose it no smaller than the decay length.

    Raises
    ------
    ConvergenceError
        If the budget runs out; the exception carries the best estimate.
    """
    budget = _Budget(spec.max_evals)
    value, error = _semi_infinite(f, a, spec.rel_tol, spec.abs_tol, budget, spec.transform, scale)
    return QuadResult(value, error, budget.used)


def integrate_wedge(
    g: Callable, spec: QuadratureSpec = QuadratureSpec(), *, scale: float = 2.0
) -> QuadResult:
    """Nested integral of ``g(zeta, x)`` over ``0 <= zeta <= x < inf``.

    ``g`` receives a scalar ``zeta`` and an array of ``x`` values. The inner
    integrals run at a tenth of the outer tolerance and their error estimates
    are integrated along with their values.
    """
    budget = _Budget(spec.max_evals)
    inner_rel, inner_abs = spec.rel_tol / 10, spec.abs_tol / 10

    def inner(zeta):
        return _semi_infinite(
            lambda x: g(zeta, x), zeta, inner_rel, inner_abs, budget, spec.transform, scale
        )

    outer_count = 0

    def outer(zetas):
        nonlocal outer_count
        outer_count += len(zetas)
        return np.array([inner(z) for z in zetas]).T

    if spec.transform is Transform.EXP_TAIL:
        def mapped(u):
            rows = outer(-scale * np.log(u))
            return rows * (scale / u)
        value, error = _adaptive(mapped, 0.0, 1.0, spec.rel_tol, spec.abs_tol, budget, aux=True)
    else:
        total = error = 0.0
        width, left, quiet = scale, 0.0, 0
        while quiet < 2:
            floor = max(spec.abs_tol, 0.1 * spec.rel_tol * abs(total))
            piece, piece_err = _adaptive(outer, left, left + width, spec.rel_tol, floor, budget, aux=True)
            total += piece
            error += piece_err
            quiet = quiet + 1 if abs(piece) <= 0.1 * max(spec.abs_tol, spec.rel_tol * abs(total)) else 0
            left += width
            width *= 2.0
        value, error = total, error + abs(piece)
    return QuadResult(value, error, budget.used, outer_count)


@dataclass(frozen=True)
class LimitSequence:
    """Values indexed by a growing control parameter.

    The model is ``value ~ A + B * param**(-model_order) + ...``.
    """

    params: tuple[float, ...]
    values: tuple[float, ...]
    model_order: float = 1.0

    def __post_init__(self):
        params = tuple(float(p) for p in self.params)
        values = tuple(float(v) for v in self.values)
        if len(params) != len(values):
            raise ValidationError("params and values must have equal length", key="values")
        if len(params) < 3:
            raise ValidationError("a limit sequence needs at least 3 entries", key="params")
        if any(b <= a for a, b in zip(params, params[1:])):
            raise ValidationError("params must be strictly increasing", key="params")
        if not self.model_order > 0:
            raise ValidationError("model_order must be > 0", key="model_order")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "values", values)


def _lagrange_weights(h: Sequence[float], offset: int = 0) -> list[float]:
    """Weights w_i with sum(w_i v_i) = value at h = 0 of the interpolant through (h_i, v_i)."""
    scale = max(abs(x) for x in h)
    weights = []
    for i, hi in enumerate(h):
        weight = 1.0
        for j, hj in enumerate(h):
            if j == i:
                continue
            if abs(hj - hi) <= 1e-14 * scale:
                raise DegenerateSequenceError(
                    "degenerate Richardson triple", (offset + min(i, j), offset + max(i, j))
                )
            weight *= hj / (hj - hi)
        weights.append(weight)
    return weights


def _lagrange_at_zero(h, v, offset):
    return math.fsum(w * vi for w, vi in zip(_lagrange_weights(h, offset), v))


def extrapolation_weights(params: Sequence[float], model_order: float) -> list[float]:
    """Weights the last Richardson triple assigns to the trailing three values."""
    return _lagrange_weights([p ** (-model_order) for p in params[-3:]], len(params) - 3)


def asymptotic_ratio(seq: LimitSequence, noise: float = 0.0) -> float:
    """Consistency of the last three values with the leading-order model.

    Returns the ratio of successive value differences divided by the ratio of
    successive ``h`` differences: 1 for a pure ``h`` correction, the ``h``
    ratio (2 for doubling) for a pure ``h**2`` correction. Values far outside
    that range mean the sequence is not yet asymptotic. NaN when the
    differences are not resolved above rounding or above ``noise``, the
    absolute uncertainty of the individual values.
    """
    h = [p ** (-seq.model_order) for p in seq.params[-3:]]
    v = seq.values[-3:]
    d1, d2 = v[1] - v[0], v[2] - v[1]
    if abs(d2) <= max(64 * np.finfo(float).eps * max(abs(x) for x in v), 8.0 * noise):
        return math.nan
    return (d1 / d2) / ((h[1] - h[0]) / (h[2] - h[1]))


def richardson_extrapolate(seq: LimitSequence) -> QuadResult:
    """Estimate the limit of ``seq`` as its control parameter goes to infinity.

    Each trailing triple is fitted exactly by ``A + B h + C h**2`` with
    ``h = param**(-model_order)``. The last triple gives the estimate; the
    error is its change from the previous triple, or from the two-point
    elimination on the last pair when only three entries exist.
    """
    h = [p ** (-seq.model_order) for p in seq.params]
    v = list(seq.values)
    if max(v) == min(v):
        return QuadResult(v[-1], 0.0, 0)
    n = len(v)
    last = _lagrange_at_zero(h[-3:], v[-3:], n - 3)
    if n >= 4:
        previous = _lagrange_at_zero(h[-4:-1], v[-4:-1], n - 4)
    else:
        previous = _lagrange_at_zero(h[-2:], v[-2:], n - 2)
    return QuadResult(last, abs(last - previous), 0)
