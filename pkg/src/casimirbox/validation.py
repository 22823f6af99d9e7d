"""Canonical end-to-end checks shared by ``casimirbox validate`` and the test-suite."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .boxrenorm import (
    BoxLadder,
    dirichlet_casimir,
    divergence_exponent,
    lifshitz_1d_oracle,
    plates_configuration,
    slab_casimir,
)
from .constants import NATURAL, SI
from .dielectric import PerfectConductor
from .lifshitz import (
    IDEAL_ENERGY_DENOMINATOR,
    IDEAL_FORCE_DENOMINATOR,
    HalfspaceSystem,
    energy_per_area,
    force_per_area,
    ideal_energy_per_area,
    ideal_force_per_area,
)
from .quad import QuadratureSpec

DIRICHLET_LADDER = BoxLadder((50, 100, 200, 400), (200, 400, 800))
SLAB_LADDER = BoxLadder((100, 200, 400, 800), (10, 20, 40))
#: cutoffs for the cancellation check; the leading correction scales as (Lambda a)^-2
CANCELLATION_CUTOFFS = (400.0, 800.0, 1600.0, 3200.0)
SLAB_INDICES = (1.2, 1.5, 2.0, 5.0)
SLAB_THICKNESS = 2.0
GAP = 1.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    target: float
    computed: float
    tolerance: float
    passed: bool
    seconds: float = 0.0
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        text = (
            f"{status} {self.name}: target={self.target:.12g} computed={self.computed:.12g} "
            f"tolerance={self.tolerance:g} ({self.seconds:.2f}s)"
        )
        return text + (f" [{self.note}]" if self.note else "")


def _relative(name, target, computed, tol, seconds, note=""):
    deviation = abs(computed / target - 1.0) if target else abs(computed)
    return CheckResult(name, target, computed, tol, bool(deviation < tol), seconds, note or f"rel.dev={deviation:.3g}")


def check_ideal3d(perturb: float = 0.0) -> list[CheckResult]:
    """Perfect mirrors at 1 um against the closed forms; ``perturb`` skews the 720 constant."""
    d = 1e-6
    system = HalfspaceSystem(PerfectConductor(), PerfectConductor(), d, SI)
    t0 = time.perf_counter()
    energy = energy_per_area(system, QuadratureSpec())
    t1 = time.perf_counter()
    force = force_per_area(system, QuadratureSpec())
    t2 = time.perf_counter()
    e_target = ideal_energy_per_area(d, SI, IDEAL_ENERGY_DENOMINATOR * (1.0 + perturb))
    f_target = ideal_force_per_area(d, SI, IDEAL_FORCE_DENOMINATOR)
    return [
        _relative("ideal3d.energy", e_target, energy.value, 1e-8, t1 - t0),
        _relative("ideal3d.force", f_target, force.value, 1e-8, t2 - t1),
    ]


def check_dirichlet1d() -> list[CheckResult]:
    t0 = time.perf_counter()
    report = dirichlet_casimir(GAP, DIRICHLET_LADDER, constants=NATURAL)
    target = -math.pi / (24.0 * GAP)
    return [_relative("dirichlet1d", target, report.value, 1e-4, time.perf_counter() - t0)]


def check_crossmethod(indices=SLAB_INDICES) -> list[CheckResult]:
    out = []
    for n in indices:
        t0 = time.perf_counter()
        boxed = slab_casimir(GAP, n, SLAB_THICKNESS, SLAB_LADDER, constants=NATURAL)
        oracle = lifshitz_1d_oracle(GAP, n, SLAB_THICKNESS, NATURAL)
        weyl = boxed.diagnostic("max_weyl_deviation")
        out.append(
            _relative(f"crossmethod[n={n:g}]", oracle, boxed.value, 1e-3, time.perf_counter() - t0,
                      f"rel.dev={abs(boxed.value / oracle - 1):.3g} weyl={weyl:.2f}")
        )
    return out


def check_divergence() -> list[CheckResult]:
    """Quadratic divergence of the raw sum and its cancellation in the difference."""
    t0 = time.perf_counter()
    L = DIRICHLET_LADDER.lengths[0]
    top = CANCELLATION_CUTOFFS[-1]
    slope = divergence_exponent(plates_configuration(L, GAP), np.geomspace(top / 10, top, 10), constants=NATURAL)
    ladder = BoxLadder((L, 2 * L, 4 * L), CANCELLATION_CUTOFFS)
    report = dirichlet_casimir(GAP, ladder, constants=NATURAL)
    last = report.diagnostic(f"E_sub[L={L:g},Lambda={CANCELLATION_CUTOFFS[-1]:g}]")
    previous = report.diagnostic(f"E_sub[L={L:g},Lambda={CANCELLATION_CUTOFFS[-2]:g}]")
    change = abs(last - previous) / abs(last)
    seconds = time.perf_counter() - t0
    return [
        CheckResult("divergence.exponent", 2.0, slope, 0.05, abs(slope - 2.0) <= 0.05, seconds),
        CheckResult("divergence.cancellation", 0.0, change, 1e-6, change < 1e-6, seconds,
                    f"L={L:g}, Lambda {CANCELLATION_CUTOFFS[-2]:g}->{CANCELLATION_CUTOFFS[-1]:g}"),
    ]


def check_regulator() -> list[CheckResult]:
    t0 = time.perf_counter()
    exponential = dirichlet_casimir(GAP, DIRICHLET_LADDER, regulator="exponential", constants=NATURAL)
    gaussian = dirichlet_casimir(GAP, DIRICHLET_LADDER, regulator="gaussian", constants=NATURAL)
    return [_relative("regulator", exponential.value, gaussian.value, 1e-4, time.perf_counter() - t0)]


CHECKS: dict[str, Callable[[], list[CheckResult]]] = {
    "ideal3d": check_ideal3d,
    "dirichlet1d": check_dirichlet1d,
    "crossmethod": check_crossmethod,
    "divergence": check_divergence,
    "regulator": check_regulator,
}


def _run_named(name: str, perturb: float) -> list[CheckResult]:
    if name == "ideal3d":
        return check_ideal3d(perturb)
    return CHECKS[name]()


def run_validate(only=None, *, perturb_ideal: float = 0.0, jobs: int = 1) -> list[CheckResult]:
    """Run the named checks (all by default) and return one row per sub-check."""
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check {unknown[0]!r}; choose from {sorted(CHECKS)}")
    if jobs > 1 and len(names) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            batches = list(pool.map(_run_named, names, [perturb_ideal] * len(names)))
    else:
        batches = [_run_named(n, perturb_ideal) for n in names]
    return [row for batch in batches for row in batch]
