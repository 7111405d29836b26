from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NewType, Optional

RngSeed = NewType("RngSeed", int)


class Sign(Enum):
    """Which double eigenvalue b~_+ = +sqrt(2k^2 - gamma^2) or b~_- = -sqrt(...) a family grows from."""
    PLUS = "+"
    MINUS = "-"

    @property
    def factor(self) -> int:
        return 1 if self is Sign.PLUS else -1


class Polarization(Enum):
    CIRCULAR = "circular"
    ELLIPTIC = "elliptic"


@dataclass(frozen=True)
class FamilyInfo:
    tag: str
    """Wire name, used in CSV labels and JSON."""
    polarization: Optional[Polarization]
    sign: Optional[Sign]


class Family(Enum):
    CIRCULAR_PLUS = FamilyInfo(tag="circular+", polarization=Polarization.CIRCULAR, sign=Sign.PLUS)
    CIRCULAR_MINUS = FamilyInfo(tag="circular-", polarization=Polarization.CIRCULAR, sign=Sign.MINUS)
    ELLIPTIC_PLUS = FamilyInfo(tag="elliptic+", polarization=Polarization.ELLIPTIC, sign=Sign.PLUS)
    ELLIPTIC_MINUS = FamilyInfo(tag="elliptic-", polarization=Polarization.ELLIPTIC, sign=Sign.MINUS)
    NUMERIC = FamilyInfo(tag="numeric", polarization=None, sign=None)

    @property
    def tag(self) -> str:
        return self.value.tag

    @staticmethod
    def from_tag(tag: str) -> Family:
        for family in Family:
            if family.value.tag == tag:
                return family
        raise ValueError(f"Unknown family tag {tag!r}")

    @staticmethod
    def of(polarization: Polarization, sign: Sign) -> Family:
        for family in Family:
            if family.value.polarization is polarization and family.value.sign is sign:
                return family
        raise ValueError(f"No family for {polarization}, {sign}")


class Axis(Enum):
    """Continuation parameter."""
    B = "b"
    GAMMA = "gamma"


class GhostPin(Enum):
    """Which part of the complex propagation constant is held fixed along a ghost branch."""
    MODULUS = "modulus"
    REAL = "real"
