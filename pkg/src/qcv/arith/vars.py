"""Variable tables: which symbols exist, which are spectral, and exponent bounds."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm

from qcv.errors import ExponentDenominator

# Formal constants: the deformation parameter, the central unit kappa = q^c and
# the Yangian constant h.  Every other symbol is a spectral variable.
CONSTANTS = frozenset({"q", "kappa", "h"})


def is_spectral(name: str) -> bool:
    return name not in CONSTANTS


@dataclass(frozen=True)
class VarTable:
    """Ordered variable names with per-variable exponent-denominator bounds."""

    names: tuple[str, ...]
    denominators: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError(f"duplicate variable names in {self.names}")
        for name, d in self.denominators.items():
            if d < 1:
                raise ValueError(f"denominator bound for {name} must be >= 1")

    @classmethod
    def for_rank(cls, n: int, extra: tuple[str, ...] = ("z", "w")) -> "VarTable":
        names = ("q", "kappa", "h") + tuple(v for v in extra if v not in CONSTANTS)
        return cls(names, {"q": lcm(2, n)})

    def bound(self, name: str) -> int:
        return self.denominators.get(name, 1)

    def spectral(self) -> tuple[str, ...]:
        return tuple(v for v in self.names if is_spectral(v))

    def check_exponent(self, name: str, exp) -> None:
        if name not in self.names:
            raise KeyError(f"unknown variable {name!r}")
        e = Fraction(exp)
        if self.bound(name) % e.denominator:
            raise ExponentDenominator(
                f"exponent {e} of {name} has denominator {e.denominator}, "
                f"bound is {self.bound(name)}"
            )

    def with_vars(self, *names: str) -> "VarTable":
        new = self.names + tuple(v for v in names if v not in self.names)
        return VarTable(new, dict(self.denominators))
