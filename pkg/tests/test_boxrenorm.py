import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad as scipy_quad
from scipy.optimize import brentq

from casimirbox.boxrenorm import (
    BoxConfiguration,
    BoxLadder,
    ModeSpectrum,
    Region,
    casimir_energy_boxed,
    dirichlet_casimir,
    dirichlet_spectrum,
    dispersion_determinant,
    divergence_exponent,
    find_modes,
    lifshitz_1d_oracle,
    plates_configuration,
    pruefer_phase,
    regularized_sum,
    slab_casimir,
    slabs_configuration,
)
from casimirbox.constants import NATURAL, PhysicalConstants
from casimirbox.errors import ConvergenceError, DomainError, MissedModesError, ValidationError

LADDER = BoxLadder((50, 100, 200, 400), (200, 400, 800))
layered = st.lists(st.tuples(st.floats(0.2, 3.0), st.floats(1.0, 6.0)), min_size=2, max_size=4)


def _scan_roots(config, omega_max, cells=40000):
    """Independent oracle: sign changes of the transfer-matrix determinant, polished by brentq."""
    grid = np.linspace(1e-9, omega_max, cells + 1)
    det = dispersion_determinant(config, grid)
    idx = np.nonzero(np.sign(det[:-1]) * np.sign(det[1:]) < 0)[0]
    return np.array([brentq(lambda w: dispersion_determinant(config, w), grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15)
                     for i in idx])


def test_configuration_validation_and_segments():
    with pytest.raises(ValidationError):
        Region(0.0)
    with pytest.raises(ValidationError):
        Region(1.0, 0.5)
    with pytest.raises(ValidationError):
        BoxConfiguration(())
    cfg = plates_configuration(10.0, 1.0)
    assert cfg.total_length == pytest.approx(10.0)
    assert [s.total_length for s in cfg.segments()] == pytest.approx([4.5, 1.0, 4.5])
    slabs = slabs_configuration(20.0, 1.0, 2.0, 2.0)
    assert slabs.optical_length == pytest.approx(2 * 7.5 + 1.0 + 2 * 4.0)
    assert len(slabs.segments()) == 1 and not slabs.is_uniform
    with pytest.raises(ValidationError):
        plates_configuration(1.0, 2.0)


def test_dirichlet_spectrum_examples():
    np.testing.assert_allclose(dirichlet_spectrum(math.pi, 1.0, 3).omegas, [1.0, 2.0, 3.0], rtol=1e-15)
    np.testing.assert_allclose(dirichlet_spectrum(2 * math.pi, 1.0, 3).omegas, [0.5, 1.0, 1.5], rtol=1e-15)
    assert dirichlet_spectrum(2.0, 3.0, 1).omegas.tolist() == [pytest.approx(3 * math.pi / 2)]


def test_find_modes_uniform_examples():
    vacuum = find_modes(BoxConfiguration.uniform(2.0), 30.0)
    np.testing.assert_allclose(vacuum.omegas, dirichlet_spectrum(2.0, 1.0, len(vacuum.omegas)).omegas, rtol=1e-15)
    filled = find_modes(BoxConfiguration((Region(1.0, 1.5), Region(1.0, 1.5))), 30.0, c=2.0)
    m = np.arange(1, len(filled.omegas) + 1)
    np.testing.assert_allclose(filled.omegas, m * math.pi * 2.0 / (1.5 * 2.0), rtol=1e-13)


def test_dirichlet_spectrum_and_weyl():
    sp = dirichlet_spectrum(2.0, 1.0, 10)
    np.testing.assert_allclose(sp.omegas, np.arange(1, 11) * math.pi / 2, rtol=1e-15)
    assert abs(sp.weyl_deviation()) <= 0.5
    truncated = ModeSpectrum(sp.omegas[:5], sp.omega_max, 2.0)
    with pytest.raises(MissedModesError):
        truncated.check_weyl()


def test_uniform_phase_is_linear():
    cfg = BoxConfiguration.uniform(3.0, 1.5)
    omegas = np.linspace(0, 10, 11)
    np.testing.assert_allclose(pruefer_phase(cfg, omegas), omegas * 4.5, rtol=1e-14, atol=1e-14)


@settings(max_examples=25)
@given(layered)
def test_phase_monotone(regions):
    cfg = BoxConfiguration(tuple(Region(l, n) for l, n in regions))
    psi = pruefer_phase(cfg, np.linspace(0.0, 30.0, 3001))
    assert psi[0] == 0.0 and np.all(np.diff(psi) > 0)


def test_layered_roots_match_scan_oracle():
    cfg = BoxConfiguration((Region(1.3), Region(0.7, 2.5), Region(2.0)))
    oracle = _scan_roots(cfg, 40.0)
    spectrum = find_modes(cfg, 40.0)
    assert len(spectrum.omegas) == len(oracle) == 64
    np.testing.assert_allclose(spectrum.omegas, oracle, rtol=1e-13)


@settings(max_examples=15)
@given(layered)
def test_layered_roots_and_weyl(regions):
    cfg = BoxConfiguration(tuple(Region(l, n) for l, n in regions))
    omega_max = 25.0
    spectrum = find_modes(cfg, omega_max)
    assert abs(spectrum.weyl_deviation()) <= 2
    assert np.all(np.diff(spectrum.omegas) > 0)
    np.testing.assert_allclose(dispersion_determinant(cfg, spectrum.omegas), 0.0, atol=1e-9)


def test_find_modes_domain():
    with pytest.raises(DomainError):
        find_modes(BoxConfiguration.uniform(1.0), 1.0)


@pytest.mark.parametrize("length, lam", [(1.0, 3.0), (7.0, 40.0), (50.0, 200.0)])
def test_closed_form_matches_direct_sum(length, lam):
    cfg = BoxConfiguration.uniform(length)
    closed = regularized_sum(cfg, lam)
    direct = regularized_sum(cfg, lam, closed_form=False)
    assert closed == pytest.approx(direct, rel=1e-12)


def test_regularized_sum_examples():
    lam = 100 / math.pi
    t = math.pi**2 / 100
    closed = regularized_sum(BoxConfiguration.uniform(1.0), lam)
    assert closed == pytest.approx(math.pi / 2 * math.exp(-t) / (1 - math.exp(-t)) ** 2, rel=1e-13)
    assert regularized_sum(BoxConfiguration.uniform(1.0), lam, closed_form=False) == pytest.approx(closed, rel=1e-10)
    assert regularized_sum(BoxConfiguration.uniform(1.0), 1e-3) < 1e-300


def test_closed_form_expansion():
    # l Lambda^2 / (2 pi) - pi / (24 l) + pi^3 / (480 l^3 Lambda^2) + O(Lambda^-4)
    l, lam = 3.0, 50.0
    expansion = l * lam**2 / (2 * math.pi) - math.pi / (24 * l) + math.pi**3 / (480 * l**3 * lam**2)
    assert regularized_sum(BoxConfiguration.uniform(l), lam) - expansion == pytest.approx(0.0, abs=1e-9)


def test_regularized_sum_units_and_spectrum_reach():
    cfg = BoxConfiguration.uniform(2.0)
    units = PhysicalConstants(hbar=2.0, c=3.0)
    assert regularized_sum(cfg, 10.0, hbar=2.0, c=3.0) == pytest.approx(
        2.0 * regularized_sum(BoxConfiguration.uniform(2.0 / 3.0), 10.0), rel=1e-13
    )
    assert units.hbar == 2.0
    short = dirichlet_spectrum(2.0, 1.0, 5)
    with pytest.raises(DomainError):
        regularized_sum(short, 10.0)


def test_divergence_exponent_is_two():
    slope = divergence_exponent(plates_configuration(50.0, 1.0), np.geomspace(320, 3200, 10))
    assert slope == pytest.approx(2.0, abs=1e-5)


def test_dirichlet_scaling_in_gap():
    e1 = dirichlet_casimir(1.0, LADDER).value
    e2 = dirichlet_casimir(2.0, BoxLadder((100, 200, 400, 800), (100, 200, 400))).value
    assert e2 == pytest.approx(e1 / 2, rel=1e-5)


def test_dirichlet_reference_independence():
    half = dirichlet_casimir(1.0, LADDER)
    third = dirichlet_casimir(1.0, LADDER, reference_fraction=1 / 3)
    assert abs(half.value - third.value) <= 2 * max(half.abs_error_estimate, third.abs_error_estimate)


def test_identical_configurations_cancel_exactly():
    same = lambda L: slabs_configuration(L, 1.0, 1.5, 2.0)
    report = casimir_energy_boxed(same, same, BoxLadder((40, 80, 160), (5, 10, 20)))
    assert report.value == 0.0 and report.abs_error_estimate == 0.0
    assert all(v == 0.0 for k, v in report.diagnostics if k.startswith("E_sub"))


def test_dirichlet_natural_units_constants():
    units = PhysicalConstants(hbar=2.0, c=3.0)
    assert dirichlet_casimir(1.0, LADDER, constants=units).value == pytest.approx(-6 * math.pi / 24, rel=1e-4)


def test_boxed_error_covers_truth():
    report = dirichlet_casimir(1.0, LADDER)
    assert abs(report.value + math.pi / 24) <= report.abs_error_estimate
    assert report.diagnostic("asymptotic_ratio[length]") == pytest.approx(1.0, abs=0.1)


def test_preasymptotic_ladder_is_rejected():
    with pytest.raises(ConvergenceError) as info:
        dirichlet_casimir(1.0, BoxLadder((50, 100, 200), (0.1, 0.2, 0.4)))
    assert (50.0, 0.1) in info.value.ladder


def test_configuration_length_mismatch():
    with pytest.raises(ValidationError) as info:
        casimir_energy_boxed(lambda L: BoxConfiguration.uniform(L), lambda L: BoxConfiguration.uniform(L + 1), LADDER)
    assert info.value.key == "L"


def test_ladder_validation():
    with pytest.raises(ValidationError):
        BoxLadder((1, 2), (1, 2, 3))
    with pytest.raises(ValidationError):
        BoxLadder((1, 2, 3), (3, 2, 1))


def test_oracle_perfect_mirror_limit():
    assert lifshitz_1d_oracle(1.0, math.inf) == pytest.approx(-math.pi / 24, rel=1e-12)
    assert lifshitz_1d_oracle(2.0, math.inf, 5.0) == pytest.approx(-math.pi / 48, rel=1e-12)
    assert lifshitz_1d_oracle(1.0, 1.0, 2.0) == 0.0
    assert lifshitz_1d_oracle(1.0, 3.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        lifshitz_1d_oracle(1.0, 0.5)


@pytest.mark.parametrize("n, t", [(1.5, 2.0), (2.0, 2.0), (4.0, 0.3), (2.0, math.inf)])
def test_oracle_against_kappa_integral(n, t):
    # E = (1/2pi) int_0^inf dk ln(1 - R(k)^2 e^{-2 k a}) with the slab reflection R
    a = 1.0
    r = (1 - n) / (1 + n)

    def f(k):
        trans = 0.0 if math.isinf(t) else math.exp(-2 * n * k * t)
        big_r = r * (1 - trans) / (1 - r * r * trans)
        return math.log1p(-big_r * big_r * math.exp(-2 * k * a))

    expected = scipy_quad(f, 0, np.inf, epsabs=0, epsrel=1e-13, limit=400)[0] / (2 * math.pi)
    assert lifshitz_1d_oracle(a, n, t) == pytest.approx(expected, rel=1e-10)


def test_slab_thick_limit_and_error_budget():
    # a finite slab stops reflecting as kappa -> 0, so the half-space limit is approached slowly
    gaps = [lifshitz_1d_oracle(1.0, 2.0) - lifshitz_1d_oracle(1.0, 2.0, t) for t in (2.0, 20.0, 200.0, 2000.0)]
    assert all(g < 0 for g in gaps) and all(abs(b) < abs(a) for a, b in zip(gaps, gaps[1:]))
    report = slab_casimir(1.0, 2.0, 2.0, BoxLadder((100, 200, 400, 800), (10, 20, 40)))
    oracle = lifshitz_1d_oracle(1.0, 2.0, 2.0)
    assert abs(report.value - oracle) <= report.abs_error_estimate
    assert report.diagnostic("max_weyl_deviation") <= 2
