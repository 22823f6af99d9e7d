r"""Box renormalization of the one-dimensional zero-point energy.

A massless scalar field lives in a box :math:`[0, L]` with Dirichlet walls at
both ends. The box is filled with regions of constant refractive index;
internal boundaries are either plain interfaces (field and derivative
continuous) or zero-width Dirichlet plates. The regulated zero-point energy

.. math::
    E(\Lambda) = \frac{\hbar}{2} \sum_n \omega_n\, g(\omega_n / \Lambda)

diverges like :math:`\Lambda^2` times the optical length. Two configurations
of equal size and equal optical length share that divergence, so their
difference has a finite limit as :math:`\Lambda \to \infty` and then
:math:`L \to \infty`; both limits are taken by Richardson extrapolation.

Mode frequencies of layered boxes come from the Prufer phase
:math:`\psi(L; \omega)`, which starts at 0, increases strictly with
:math:`\omega` and passes :math:`m\pi` exactly at the m-th eigenfrequency.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .constants import NATURAL, PhysicalConstants
from .errors import ConvergenceError, DomainError, MissedModesError, ValidationError
from .lifshitz import EnergyReport
from .quad import LimitSequence, QuadratureSpec, asymptotic_ratio, extrapolation_weights, integrate_semi_infinite, richardson_extrapolate

__all__ = [
    "Region",
    "BoxConfiguration",
    "ModeSpectrum",
    "BoxLadder",
    "dirichlet_spectrum",
    "dispersion_determinant",
    "pruefer_phase",
    "find_modes",
    "regularized_sum",
    "divergence_exponent",
    "casimir_energy_boxed",
    "plates_configuration",
    "slabs_configuration",
    "dirichlet_casimir",
    "slab_casimir",
    "lifshitz_1d_oracle",
]

#: regulator profiles g(omega / Lambda)
REGULATORS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "exponential": lambda s: np.exp(-s),
    "gaussian": lambda s: np.exp(-s * s),
}
#: spectra are enumerated up to span * Lambda; the neglected tail is below 1e-17 relative
CUTOFF_SPAN = {"exponential": 50.0, "gaussian": 8.0}
WEYL_SLACK = 2
ROOT_RTOL = 1e-14
#: accepted range of :func:`asymptotic_ratio` for every ladder sequence
ASYMPTOTIC_WINDOW = (0.25, 4.0)


def _regulator(name):
    try:
        return REGULATORS[name]
    except KeyError:
        raise ValidationError(f"unknown regulator {name!r}; choose from {sorted(REGULATORS)}", key="regulator") from None


@dataclass(frozen=True)
class Region:
    length: float
    index: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValidationError(f"region length must be > 0, got {self.length!r}", key="length")
        if not (math.isfinite(self.index) and self.index >= 1.0):
            raise ValidationError(f"refractive index must be finite and >= 1, got {self.index!r}", key="index")


@dataclass(frozen=True)
class BoxConfiguration:
    """Layered one-dimensional box with Dirichlet walls at both outer ends.

    ``walls[i]`` marks the boundary between ``regions[i]`` and
    ``regions[i + 1]`` as a zero-width Dirichlet plate.
    """

    regions: tuple[Region, ...]
    walls: tuple[bool, ...] = ()

    def __post_init__(self):
        regions = tuple(r if isinstance(r, Region) else Region(*r) for r in self.regions)
        if not regions:
            raise ValidationError("a box needs at least one region", key="regions")
        walls = tuple(bool(w) for w in self.walls) or (False,) * (len(regions) - 1)
        if len(walls) != len(regions) - 1:
            raise ValidationError("walls must have one flag per internal boundary", key="walls")
        object.__setattr__(self, "regions", regions)
        object.__setattr__(self, "walls", walls)

    @classmethod
    def uniform(cls, length: float, index: float = 1.0) -> "BoxConfiguration":
        return cls((Region(length, index),))

    @property
    def total_length(self) -> float:
        return math.fsum(r.length for r in self.regions)

    @property
    def optical_length(self) -> float:
        return math.fsum(r.length * r.index for r in self.regions)

    @property
    def is_uniform(self) -> bool:
        return not any(self.walls) and len({r.index for r in self.regions}) == 1

    def segments(self) -> list["BoxConfiguration"]:
        """Split at the Dirichlet plates into independent boxes."""
        out, current = [], [self.regions[0]]
        for wall, region in zip(self.walls, self.regions[1:]):
            if wall:
                out.append(BoxConfiguration(tuple(current)))
                current = []
            current.append(region)
        out.append(BoxConfiguration(tuple(current)))
        return out


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Eigenfrequencies (rad/s) of one configuration below ``omega_max``."""

    omegas: np.ndarray
    omega_max: float
    optical_length: float
    c: float = 1.0
    config: BoxConfiguration | None = None

    def count_below(self, omega: float) -> int:
        return int(np.searchsorted(self.omegas, omega, side="left"))

    def weyl_estimate(self, omega: float) -> float:
        return omega * self.optical_length / (math.pi * self.c)

    def weyl_deviation(self) -> float:
        """Mode count below ``omega_max`` minus the Weyl estimate."""
        return len(self.omegas) - self.weyl_estimate(self.omega_max)

    def check_weyl(self, slack: float = WEYL_SLACK) -> None:
        deviation = self.weyl_deviation()
        if abs(deviation) > slack:
            raise MissedModesError(
                f"{len(self.omegas)} modes below {self.omega_max:g} but the Weyl estimate is "
                f"{self.weyl_estimate(self.omega_max):.2f}: missed or spurious modes"
            )
        if len(self.omegas) > 1 and not np.all(np.diff(self.omegas) > 0):
            raise MissedModesError("mode frequencies are not strictly increasing")


def dirichlet_spectrum(length: float, c: float, n_max: int) -> ModeSpectrum:
    """``n pi c / length`` for ``n = 1 .. n_max``."""
    if not length > 0:
        raise DomainError("segment length must be > 0")
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    step = math.pi * c / length
    omegas = np.arange(1, n_max + 1, dtype=float) * step
    # omega_max sits midway to the next mode so the Weyl estimate is unbiased
    return ModeSpectrum(omegas, (n_max + 0.5) * step, length, c, BoxConfiguration.uniform(length))


def _layers(config):
    lengths = np.array([r.length for r in config.regions])
    indices = np.array([r.index for r in config.regions])
    return lengths, indices


def pruefer_phase(config: BoxConfiguration, omega, c: float = 1.0):
    """Prufer angle of the solution with ``phi(0) = 0`` at the right wall.

    Walls are ignored; call this on a single segment.
    """
    return _phase_and_slope(config, omega, c)[0]


def _phase_and_slope(config, omega, c, slope=False):
    lengths, indices = _layers(config)
    k0 = np.asarray(omega, dtype=float) / c
    psi = np.zeros_like(k0)
    dpsi = np.zeros_like(k0) if slope else None
    previous = indices[0]
    for ell, n in zip(lengths, indices):
        if n != previous:
            # u = phi and w = phi' / (n k0) share an angle; w rescales by n_old / n_new
            ratio = n / previous
            m = np.round(psi / math.pi)
            delta = psi - m * math.pi
            psi = m * math.pi + np.arctan(np.tan(delta) * ratio)
            if slope:
                dpsi = dpsi * ratio / (np.cos(delta) ** 2 + (ratio * np.sin(delta)) ** 2)
        psi = psi + n * k0 * ell
        if slope:
            dpsi = dpsi + n * ell / c
        previous = n
    return psi, dpsi


def dispersion_determinant(config: BoxConfiguration, omega, c: float = 1.0):
    """Transfer-matrix value of ``phi(L) k0`` for ``phi(0) = 0, phi'(0) = k0``.

    Its zeros are the eigenfrequencies of a single segment.
    """
    lengths, indices = _layers(config)
    k0 = np.asarray(omega, dtype=float) / c
    u = np.zeros_like(k0)
    w = np.ones_like(k0)  # phi' / k0
    for ell, n in zip(lengths, indices):
        theta = n * k0 * ell
        cos, sin = np.cos(theta), np.sin(theta)
        u, w = u * cos + w * sin / n, -u * n * sin + w * cos
    return u


def _segment_roots(config, omega_max, c):
    l_opt = config.optical_length
    if config.is_uniform:
        step = math.pi * c / l_opt
        count = int(math.floor(omega_max / step))
        if count * step >= omega_max:
            count -= 1
        return np.arange(1, count + 1, dtype=float) * step
    # bracket each root on a grid no coarser than a quarter of the mean spacing
    h = 0.25 * math.pi * c / l_opt
    cells = int(math.ceil(omega_max / h))
    grid = np.linspace(0.0, omega_max, cells + 1)
    psi = pruefer_phase(config, grid, c)
    count = int(math.floor(psi[-1] / math.pi))
    if count and count * math.pi == psi[-1]:
        count -= 1
    if count == 0:
        return np.empty(0)
    targets = np.arange(1, count + 1) * math.pi
    upper = np.searchsorted(psi, targets, side="left")
    lo, hi = grid[upper - 1].copy(), grid[upper].copy()
    # Newton on the monotone phase, falling back to bisection outside the bracket
    x = 0.5 * (lo + hi)
    active = np.arange(len(x))
    for _ in range(100):
        xa, la, ha, ta = x[active], lo[active], hi[active], targets[active]
        psi, dpsi = _phase_and_slope(config, xa, c, slope=True)
        f = psi - ta
        la = np.where(f < 0, xa, la)
        ha = np.where(f > 0, xa, ha)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = xa - f / dpsi
        new = np.where((step > la) & (step < ha), step, 0.5 * (la + ha))
        new = np.where(f == 0, xa, new)
        x[active], lo[active], hi[active] = new, la, ha
        done = (np.abs(new - xa) <= ROOT_RTOL * xa) | (ha - la <= ROOT_RTOL * xa)
        active = active[~done]
        if active.size == 0:
            return x
    raise ConvergenceError("mode polishing did not converge", estimate=float(len(targets)))


def find_modes(config: BoxConfiguration, omega_max: float, c: float = 1.0) -> ModeSpectrum:
    """All eigenfrequencies of ``config`` below ``omega_max``.

    Each Dirichlet-separated segment is solved on its own; the Weyl count is
    checked per segment.

    Raises
    ------
    MissedModesError
        If a segment's mode count strays more than two from the Weyl estimate.
    """
    if not omega_max > math.pi * c / config.optical_length:
        raise DomainError("omega_max must exceed pi c / optical_length")
    parts = []
    for segment in config.segments():
        roots = _segment_roots(segment, omega_max, c)
        ModeSpectrum(roots, omega_max, segment.optical_length, c, segment).check_weyl()
        parts.append(roots)
    omegas = np.sort(np.concatenate(parts))
    return ModeSpectrum(omegas, omega_max, config.optical_length, c, config)


def _closed_form_exponential(l_opt, lam, hbar, c):
    t = math.pi * c / (l_opt * lam)
    return hbar * math.pi * c / (2.0 * l_opt) * math.exp(-t) / math.expm1(-t) ** 2


def _direct_sum(omegas, lam, hbar, regulator):
    g = _regulator(regulator)
    return 0.5 * hbar * math.fsum(omegas * g(omegas / lam))


def regularized_sum(
    source,
    Lambda: float,
    *,
    regulator: str = "exponential",
    hbar: float = 1.0,
    c: float = 1.0,
    closed_form: bool = True,
) -> float:
    """Regulated zero-point energy ``(hbar/2) sum omega g(omega/Lambda)``.

    ``source`` is a :class:`ModeSpectrum` or a :class:`BoxConfiguration`.
    Uniform segments of a configuration use the closed form for the
    exponential regulator (unless ``closed_form`` is false) and direct
    summation otherwise; layered segments are solved with :func:`find_modes`.
    """
    if not Lambda > 0:
        raise DomainError("Lambda must be > 0")
    _regulator(regulator)
    if isinstance(source, ModeSpectrum):
        if source.omega_max < CUTOFF_SPAN[regulator] * Lambda:
            raise DomainError(
                f"spectrum stops at {source.omega_max:g}; need {CUTOFF_SPAN[regulator] * Lambda:g} for this cutoff"
            )
        return _direct_sum(source.omegas, Lambda, hbar, regulator)
    total = []
    omega_max = CUTOFF_SPAN[regulator] * Lambda
    for segment in source.segments():
        if segment.is_uniform and regulator == "exponential" and closed_form:
            total.append(_closed_form_exponential(segment.optical_length, Lambda, hbar, c))
        elif segment.is_uniform:
            n_max = int(math.ceil(omega_max * segment.optical_length / (math.pi * c)))
            spectrum = dirichlet_spectrum(segment.optical_length, c, max(n_max, 1))
            total.append(_direct_sum(spectrum.omegas, Lambda, hbar, regulator))
        else:
            total.append(_direct_sum(find_modes(segment, omega_max, c).omegas, Lambda, hbar, regulator))
    return math.fsum(total)


def divergence_exponent(
    config: BoxConfiguration,
    cutoffs: Sequence[float],
    *,
    regulator: str = "exponential",
    constants: PhysicalConstants = NATURAL,
) -> float:
    """Least-squares slope of ``log E(Lambda)`` against ``log Lambda``."""
    energies = [regularized_sum(config, lam, regulator=regulator, hbar=constants.hbar, c=constants.c) for lam in cutoffs]
    slope, _ = np.polyfit(np.log(cutoffs), np.log(energies), 1)
    return float(slope)


@dataclass(frozen=True)
class BoxLadder:
    """Box sizes and cutoffs at which the subtracted energy is evaluated."""

    lengths: tuple[float, ...]
    cutoffs: tuple[float, ...]
    length_order: float = 1.0
    cutoff_order: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(v) for v in self.lengths))
        object.__setattr__(self, "cutoffs", tuple(float(v) for v in self.cutoffs))
        for key in ("lengths", "cutoffs"):
            values = getattr(self, key)
            if len(values) < 3 or any(b <= a for a, b in zip(values, values[1:])) or values[0] <= 0:
                raise ValidationError(f"{key} must hold >= 3 strictly increasing positive values", key=key)


class _EnergyCache:
    """Regulated energies of one configuration over a cutoff ladder.

    Layered segments are diagonalized once at the largest cutoff.
    """

    def __init__(self, config, cutoffs, regulator, constants):
        self.config = config
        self.spectra = []
        self.weyl = []
        omega_max = CUTOFF_SPAN[regulator] * max(cutoffs)
        for segment in config.segments():
            if segment.is_uniform:
                self.spectra.append(segment)
            else:
                spectrum = find_modes(segment, omega_max, constants.c)
                self.weyl.append(spectrum.weyl_deviation())
                self.spectra.append(spectrum)
        self.regulator = regulator
        self.constants = constants

    def parts(self, lam):
        hbar, c = self.constants.hbar, self.constants.c
        return [regularized_sum(s, lam, regulator=self.regulator, hbar=hbar, c=c) for s in self.spectra]


def casimir_energy_boxed(
    config_a: Callable[[float], BoxConfiguration],
    config_b: Callable[[float], BoxConfiguration],
    ladder: BoxLadder,
    *,
    regulator: str = "exponential",
    constants: PhysicalConstants = NATURAL,
) -> EnergyReport:
    """Casimir energy as the renormalized difference of two boxed configurations.

    ``config_a`` and ``config_b`` build the two configurations for a given box
    size. At every ladder point the regulated energies are subtracted; the
    cutoff limit is taken first at each box size, then the box-size limit.

    Raises
    ------
    ConvergenceError
        If the extrapolated value is not finite, its error exceeds its size, or
        a ladder sequence is not in its asymptotic regime (see
        :func:`casimirbox.quad.asymptotic_ratio`); ``exc.ladder`` then holds
        the raw subtracted values.
    """
    _regulator(regulator)
    diagnostics: list[tuple[str, float]] = []
    raw: dict[tuple[float, float], float] = {}
    per_length, cutoff_errors, weyl, ratios = [], [], [], []
    cutoff_weights = extrapolation_weights(ladder.cutoffs, ladder.cutoff_order)
    evaluations = 0
    for L in ladder.lengths:
        a, b = config_a(L), config_b(L)
        for name, cfg in (("A", a), ("B", b)):
            if abs(cfg.total_length - L) > 1e-12 * L:
                raise ValidationError(f"configuration {name} has length {cfg.total_length!r}, expected {L!r}", key="L")
        cache_a = _EnergyCache(a, ladder.cutoffs, regulator, constants)
        cache_b = _EnergyCache(b, ladder.cutoffs, regulator, constants)
        weyl.extend(cache_a.weyl + cache_b.weyl)
        unsubtracted, subtracted, magnitude = [], [], 0.0
        for lam in ladder.cutoffs:
            parts_a, parts_b = cache_a.parts(lam), cache_b.parts(lam)
            evaluations += 2
            e_a = math.fsum(parts_a)
            # one exact sum over both configurations avoids an extra rounding of the large totals
            e_sub = math.fsum(parts_a + [-p for p in parts_b])
            magnitude = max(magnitude, math.fsum(abs(p) for p in parts_a + parts_b))
            unsubtracted.append(e_a)
            subtracted.append(e_sub)
            raw[(L, lam)] = e_sub
            diagnostics.append((f"E_A[L={L:g},Lambda={lam:g}]", e_a))
            diagnostics.append((f"E_sub[L={L:g},Lambda={lam:g}]", e_sub))
        slope = float(np.polyfit(np.log(ladder.cutoffs), np.log(unsubtracted), 1)[0])
        diagnostics.append((f"divergence_exponent[L={L:g}]", slope))
        cutoff_seq = LimitSequence(ladder.cutoffs, subtracted, ladder.cutoff_order)
        # each regulated part is good to a few ulps of its own size
        noise = 4.0 * np.finfo(float).eps * magnitude
        ratios.append((f"asymptotic_ratio[L={L:g}]", asymptotic_ratio(cutoff_seq, noise)))
        limit = richardson_extrapolate(cutoff_seq)
        diagnostics.append((f"cutoff_limit[L={L:g}]", limit.value))
        diagnostics.append((f"cutoff_limit_error[L={L:g}]", limit.error))
        per_length.append(limit.value)
        cutoff_errors.append(limit.error)
    length_seq = LimitSequence(ladder.lengths, per_length, ladder.length_order)
    ratios.append(("asymptotic_ratio[length]", asymptotic_ratio(length_seq, max(cutoff_errors))))
    final = richardson_extrapolate(length_seq)
    length_weights = extrapolation_weights(ladder.lengths, ladder.length_order)
    # cutoff-limit errors propagate through the size elimination
    propagated = sum(abs(w) for w in length_weights) * max(cutoff_errors)
    error = final.error + propagated
    diagnostics.extend(("cutoff", lam) for lam in ladder.cutoffs)
    diagnostics.extend(("length", L) for L in ladder.lengths)
    diagnostics.append(("cutoff_amplification", sum(abs(w) for w in cutoff_weights)))
    diagnostics.append(("length_extrapolation_error", final.error))
    diagnostics.append(("max_weyl_deviation", max((abs(w) for w in weyl), default=0.0)))
    diagnostics.extend(ratios)
    lo, hi = ASYMPTOTIC_WINDOW
    stray = [label for label, r in ratios if not (math.isnan(r) or lo <= r <= hi)]
    if stray:
        raise ConvergenceError(
            f"ladder is not in the asymptotic regime ({stray[0]} = {dict(ratios)[stray[0]]:.3g}); "
            "raise the cutoffs or box sizes",
            estimate=final.value, error=max(error, abs(final.value)), ladder=raw,
        )
    if not (math.isfinite(final.value) and math.isfinite(error)) or error > abs(final.value):
        raise ConvergenceError(
            "box-renormalized energy did not converge over the ladder",
            estimate=final.value, error=error, ladder=raw,
        )
    return EnergyReport(final.value, error, evaluations, tuple(diagnostics))


def plates_configuration(L: float, separation: float) -> BoxConfiguration:
    """Two centered Dirichlet plates ``separation`` apart inside a box of size ``L``."""
    outer = 0.5 * (L - separation)
    if not outer > 0:
        raise ValidationError(f"plates at separation {separation!r} do not fit in L = {L!r}", key="L")
    return BoxConfiguration((Region(outer), Region(separation), Region(outer)), (True, True))


def slabs_configuration(L: float, separation: float, index: float, thickness: float) -> BoxConfiguration:
    """Two centered dielectric slabs with a vacuum gap of ``separation``."""
    outer = 0.5 * (L - separation - 2.0 * thickness)
    if not outer > 0:
        raise ValidationError(f"slabs at separation {separation!r} do not fit in L = {L!r}", key="L")
    slab = Region(thickness, index)
    return BoxConfiguration((Region(outer), slab, Region(separation), slab, Region(outer)))


def _call_fixed(builder, separation, args, L):
    return builder(L, separation, *args)


def _call_scaled(builder, fraction, args, L):
    return builder(L, fraction * L, *args)


def dirichlet_casimir(
    separation: float,
    ladder: BoxLadder,
    *,
    reference_fraction: float = 0.5,
    regulator: str = "exponential",
    constants: PhysicalConstants = NATURAL,
) -> EnergyReport:
    """Boxed Casimir energy of two Dirichlet plates; the reference pair sits at ``reference_fraction * L``."""
    return casimir_energy_boxed(
        functools.partial(_call_fixed, plates_configuration, separation, ()),
        functools.partial(_call_scaled, plates_configuration, reference_fraction, ()),
        ladder,
        regulator=regulator,
        constants=constants,
    )


def slab_casimir(
    separation: float,
    index: float,
    thickness: float,
    ladder: BoxLadder,
    *,
    reference_fraction: float = 0.5,
    regulator: str = "exponential",
    constants: PhysicalConstants = NATURAL,
) -> EnergyReport:
    """Boxed Casimir energy of two identical dielectric slabs."""
    args = (index, thickness)
    return casimir_energy_boxed(
        functools.partial(_call_fixed, slabs_configuration, separation, args),
        functools.partial(_call_scaled, slabs_configuration, reference_fraction, args),
        ladder,
        regulator=regulator,
        constants=constants,
    )


def lifshitz_1d_oracle(
    gap_a: float,
    index: float,
    thickness: float = math.inf,
    constants: PhysicalConstants = NATURAL,
    quad_spec: QuadratureSpec = QuadratureSpec(rel_tol=1e-11),
) -> float:
    r"""One-dimensional Lifshitz energy of two slabs across a vacuum gap.

    .. math::
        E(a) = \frac{\hbar c}{2\pi} \int_0^\infty d\kappa\,
            \ln\left(1 - r_s^2(\kappa) e^{-2\kappa a}\right),
        \qquad r_s = r \frac{1 - e^{-2n\kappa t}}{1 - r^2 e^{-2n\kappa t}},
        \quad r = \frac{1 - n}{1 + n}

    Evaluated in ``y = 2 kappa a``. ``index = inf`` gives a perfect mirror.
    """
    if not gap_a > 0:
        raise DomainError("gap must be > 0")
    if not index >= 1:
        raise DomainError("index must be >= 1")
    if not thickness >= 0:
        raise DomainError("thickness must be >= 0")
    if index == 1 or thickness == 0:
        return 0.0
    prefactor = constants.hbar * constants.c / (4.0 * math.pi * gap_a)
    if math.isinf(index):
        def integrand(y):
            return np.where(y < math.log(2.0), np.log(-np.expm1(-y)), np.log1p(-np.exp(-y)))
    else:
        r = (1.0 - index) / (1.0 + index)
        ratio = index * thickness / gap_a

        def integrand(y):
            with np.errstate(over="ignore"):
                decay = np.exp(-ratio * y)
                rs = r * (-np.expm1(-ratio * y)) / (1.0 - r * r * decay)
            return np.log1p(-rs * rs * np.exp(-y))

    result = integrate_semi_infinite(integrand, 0.0, quad_spec, scale=2.0)
    return prefactor * result.value
