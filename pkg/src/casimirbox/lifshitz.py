r"""Zero-temperature Lifshitz energy and pressure between two half-spaces.

Everything is integrated in the dimensionless variables

.. math::
    \zeta = 2 d \xi / c, \qquad x = 2 d \kappa_0, \qquad 0 \le \zeta \le x,

so that

.. math::
    \frac{E}{A} = \frac{\hbar c}{32\pi^2 d^3}
        \int_0^\infty d\zeta \int_\zeta^\infty dx\,
        \sum_{p} x \ln\left(1 - r_p^{(1)} r_p^{(2)} e^{-x}\right)

and the pressure carries :math:`x^2 r r e^{-x} / (1 - r r e^{-x})` with the
prefactor :math:`\hbar c / 32\pi^2 d^4` and a minus sign (negative means
attraction). In these variables the in-medium wavenumber is
:math:`2 d\kappa_i = \sqrt{x^2 + (\varepsilon - 1)\zeta^2}`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import SI, PhysicalConstants
from .dielectric import DielectricModel, Vacuum
from .errors import ConvergenceError, DomainError, ValidationError
from .quad import QuadratureSpec, integrate_wedge

__all__ = [
    "HalfspaceSystem",
    "SpectralPoint",
    "WaveNumbers",
    "EnergyReport",
    "kappa",
    "wave_numbers",
    "r_tm",
    "r_te",
    "energy_integrand",
    "force_integrand",
    "energy_per_area",
    "force_per_area",
    "ideal_energy_per_area",
    "ideal_force_per_area",
    "ideal_ratio",
]

IDEAL_ENERGY_DENOMINATOR = 720.0
IDEAL_FORCE_DENOMINATOR = 240.0


@dataclass(frozen=True)
class HalfspaceSystem:
    left: DielectricModel
    right: DielectricModel
    gap_d: float
    constants: PhysicalConstants = SI

    def __post_init__(self):
        if not (math.isfinite(self.gap_d) and self.gap_d > 0):
            raise ValidationError(f"gap_d must be > 0, got {self.gap_d!r}", key="d")

    def at(self, gap_d: float) -> "HalfspaceSystem":
        """Same media and constants at another separation."""
        return HalfspaceSystem(self.left, self.right, gap_d, self.constants)


@dataclass(frozen=True)
class SpectralPoint:
    xi: float
    k: float

    def __post_init__(self):
        if not (self.xi >= 0 and self.k >= 0):
            raise DomainError("spectral point components must be >= 0")


@dataclass(frozen=True)
class WaveNumbers:
    kappa0: float
    kappa_med: float


@dataclass(frozen=True)
class EnergyReport:
    """A computed energy (J/m^2) or pressure (N/m^2) with its error budget."""

    value: float
    abs_error_estimate: float
    evaluations: int = 0
    diagnostics: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    def diagnostic(self, label: str) -> float:
        for key, number in self.diagnostics:
            if key == label:
                return number
        raise KeyError(label)


def kappa(xi, k, eps, c=1.0):
    """Normal wavenumber ``sqrt(k^2 + eps xi^2 / c^2)``; infinite for a perfect conductor."""
    xi, k, eps = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (xi, k, eps)))
    if np.any(xi < 0) or np.any(k < 0):
        raise DomainError("xi and k must be >= 0")
    with np.errstate(invalid="ignore"):
        value = np.sqrt(k * k + np.where(np.isinf(eps), 0.0, eps) * (xi / c) ** 2)
    value = np.where(np.isinf(eps), math.inf, value)
    return float(value) if value.ndim == 0 else value


def wave_numbers(point: SpectralPoint, eps: float, c: float = SI.c) -> WaveNumbers:
    return WaveNumbers(kappa(point.xi, point.k, 1.0, c), kappa(point.xi, point.k, eps, c))


def r_tm(kappa0, kappa_med, eps):
    """TM reflection coefficient at imaginary frequency, vacuum side."""
    kappa0, kappa_med, eps = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (kappa0, kappa_med, eps)))
    ideal = np.isinf(eps) | np.isinf(kappa_med)
    with np.errstate(invalid="ignore", divide="ignore"):
        num = eps * kappa0 - kappa_med
        den = eps * kappa0 + kappa_med
        value = np.where(den > 0, num / np.where(den > 0, den, 1.0), (eps - 1.0) / (eps + 1.0))
    value = np.where(ideal, 1.0, value)
    return float(value) if value.ndim == 0 else value


def r_te(kappa0, kappa_med):
    """TE reflection coefficient at imaginary frequency, vacuum side."""
    kappa0, kappa_med = np.broadcast_arrays(np.asarray(kappa0, dtype=float), np.asarray(kappa_med, dtype=float))
    ideal = np.isinf(kappa_med)
    with np.errstate(invalid="ignore", divide="ignore"):
        den = kappa0 + kappa_med
        value = np.where(den > 0, (kappa0 - kappa_med) / np.where(den > 0, den, 1.0), 0.0)
    value = np.where(ideal, -1.0, value)
    return float(value) if value.ndim == 0 else value


def _log1m(q, x):
    """``ln(1 - q e^{-x})`` for ``0 <= q <= 1``, accurate for small and large ``x``."""
    with np.errstate(divide="ignore"):
        small = np.log(-np.expm1(-x) + (1.0 - q) * np.exp(-x))
        large = np.log1p(-q * np.exp(-x))
    return np.where(x < math.log(2.0), small, large)


def _coefficients(x, zeta, eps):
    """``(r_TM, r_TE)`` in the scaled variables; the same algebra as :func:`r_tm`, :func:`r_te`."""
    if math.isinf(eps):
        return 1.0, -1.0
    s = np.sqrt(x * x + (eps - 1.0) * zeta * zeta)
    ex = eps * x
    den_tm, den_te = ex + s, x + s
    with np.errstate(invalid="ignore", divide="ignore"):
        tm, te = (ex - s) / den_tm, (x - s) / den_te
    # corner x = zeta = 0 (also reached by underflow)
    return np.where(den_tm > 0, tm, (eps - 1.0) / (eps + 1.0)), np.where(den_te > 0, te, 0.0)


def _products(x, zeta, eps1, eps2):
    """Per-polarization reflection products ``r1 r2``."""
    tm1, te1 = _coefficients(x, zeta, eps1)
    tm2, te2 = _coefficients(x, zeta, eps2)
    return tm1 * tm2, te1 * te2


def _media(system, zeta):
    xi = zeta * system.constants.c / (2.0 * system.gap_d)
    return float(system.left.epsilon(xi)), float(system.right.epsilon(xi))


def _check_wedge(x, zeta):
    x = np.asarray(x, dtype=float)
    if np.any(np.asarray(zeta) < 0) or np.any(x < zeta):
        raise DomainError("integrand requires 0 <= zeta <= x")
    return x


def _energy_kernel(x, zeta, eps1, eps2):
    with np.errstate(invalid="ignore", divide="ignore"):
        tm, te = _products(x, zeta, eps1, eps2)
        value = x * (_log1m(tm, x) + _log1m(te, x))
    # corner (0, 0): x ln(...) -> 0
    return np.where(x > 0, value, 0.0)


def _force_kernel(x, zeta, eps1, eps2):
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        tm, te = _products(x, zeta, eps1, eps2)
        em1 = np.expm1(x)
        value = x * x * (tm / (em1 + (1.0 - tm)) + te / (em1 + (1.0 - te)))
    return np.where(x > 0, value, 0.0)


def energy_integrand(x, zeta, system: HalfspaceSystem):
    """Dimensionless energy integrand summed over both polarizations."""
    x = _check_wedge(x, zeta)
    eps1, eps2 = _media(system, float(zeta))
    value = _energy_kernel(x, float(zeta), eps1, eps2)
    return float(value) if value.ndim == 0 else value


def force_integrand(x, zeta, system: HalfspaceSystem):
    """Dimensionless pressure integrand (positive; the sign is applied outside)."""
    x = _check_wedge(x, zeta)
    eps1, eps2 = _media(system, float(zeta))
    value = _force_kernel(x, float(zeta), eps1, eps2)
    return float(value) if value.ndim == 0 else value


def _integrate(kernel, system, quad_spec, prefactor, what):
    if isinstance(system.left, Vacuum) or isinstance(system.right, Vacuum):
        return EnergyReport(0.0, 0.0, 0, (("outer_evaluations", 0.0), ("inner_evaluations", 0.0)))
    memo = {}

    def g(zeta, x):
        eps = memo.get(zeta)
        if eps is None:
            memo.clear()
            eps = memo[zeta] = _media(system, zeta)
        return kernel(x, zeta, *eps)

    try:
        result = integrate_wedge(g, quad_spec)
    except ConvergenceError as exc:
        raise ConvergenceError(
            f"{what} integral did not converge: {exc}",
            estimate=prefactor * exc.estimate, error=abs(prefactor) * exc.error, evaluations=exc.evaluations,
        ) from exc
    diagnostics = (
        ("integral", result.value),
        ("integral_error", result.error),
        ("outer_evaluations", float(result.outer_evaluations)),
        ("inner_evaluations", float(result.evaluations - result.outer_evaluations)),
    )
    return EnergyReport(prefactor * result.value, abs(prefactor) * result.error, result.evaluations, diagnostics)


def energy_per_area(system: HalfspaceSystem, quad_spec: QuadratureSpec = QuadratureSpec()) -> EnergyReport:
    """Casimir energy per unit area in J/m^2 (negative for attraction)."""
    hbar, c, d = system.constants.hbar, system.constants.c, system.gap_d
    prefactor = hbar * c / (32.0 * math.pi**2 * d**3)
    return _integrate(_energy_kernel, system, quad_spec, prefactor, "energy")


def force_per_area(system: HalfspaceSystem, quad_spec: QuadratureSpec = QuadratureSpec()) -> EnergyReport:
    """Casimir pressure ``-d(E/A)/dd`` in N/m^2; negative values attract."""
    hbar, c, d = system.constants.hbar, system.constants.c, system.gap_d
    prefactor = -hbar * c / (32.0 * math.pi**2 * d**4)
    return _integrate(_force_kernel, system, quad_spec, prefactor, "force")


def ideal_energy_per_area(gap_d: float, constants: PhysicalConstants = SI, denominator: float = IDEAL_ENERGY_DENOMINATOR) -> float:
    """``-pi^2 hbar c / (720 d^3)``, the perfect-mirror energy."""
    return -math.pi**2 * constants.hbar * constants.c / (denominator * gap_d**3)


def ideal_force_per_area(gap_d: float, constants: PhysicalConstants = SI, denominator: float = IDEAL_FORCE_DENOMINATOR) -> float:
    return -math.pi**2 * constants.hbar * constants.c / (denominator * gap_d**4)


def ideal_ratio(system: HalfspaceSystem, quad_spec: QuadratureSpec = QuadratureSpec()) -> float:
    """Reduction factor ``E / E_ideal`` at the same separation."""
    energy = energy_per_area(system, quad_spec).value
    return energy / ideal_energy_per_area(system.gap_d, system.constants)
