"""Zero-temperature Casimir energies from the Lifshitz formula and from box-renormalized mode sums."""
__version__ = "0.1.0"

from .boxrenorm import (
    BoxConfiguration,
    BoxLadder,
    ModeSpectrum,
    Region,
    casimir_energy_boxed,
    dirichlet_casimir,
    find_modes,
    lifshitz_1d_oracle,
    regularized_sum,
    slab_casimir,
)
from .constants import NATURAL, SI, PhysicalConstants
from .dielectric import (
    Constant,
    DielectricModel,
    Drude,
    LorentzOscillators,
    LorentzTerm,
    PerfectConductor,
    Plasma,
    Tabulated,
    Vacuum,
    load_tabulated,
    parse_model,
)
from .errors import (
    CasimirError,
    ConvergenceError,
    DomainError,
    ExtrapolationError,
    ParseError,
    ValidationError,
)
from .lifshitz import (
    EnergyReport,
    HalfspaceSystem,
    energy_per_area,
    force_per_area,
    ideal_energy_per_area,
    ideal_force_per_area,
    r_te,
    r_tm,
)
from .quad import LimitSequence, QuadratureSpec, integrate_semi_infinite, integrate_wedge, richardson_extrapolate
