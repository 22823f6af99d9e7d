"""Physical constants used throughout the package."""
from __future__ import annotations

from dataclasses import dataclass

from scipy import constants as _codata

from .errors import ValidationError


@dataclass(frozen=True)
class PhysicalConstants:
    """Reduced Planck constant (J s) and speed of light (m/s)."""

    hbar: float = _codata.hbar
    c: float = _codata.c

    def __post_init__(self):
        if not (self.hbar > 0 and self.c > 0):
            raise ValidationError("physical constants must be positive", key="constants")


SI = PhysicalConstants()
#: hbar = c = 1, the units used by the one-dimensional box experiments
NATURAL = PhysicalConstants(1.0, 1.0)
