from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np
import numpy.typing as npt
from dataclasses_json import DataClassJsonMixin

from base.data_types import Family
from base.errors import InvalidParametersError, NonFiniteStateError

# Four complex envelopes (u1, u2, u3, u4): u1, u3 live in the gain arm, u2, u4 in the lossy arm.
FieldState = npt.NDArray[np.complex128]

FIELD_SIZE = 4

# Partner component in the same arm (the other polarization): 1 <-> 3, 2 <-> 4 (zero based).
PARTNER = (2, 3, 0, 1)
# +1 for gain sites, -1 for lossy sites.
GAIN_PATTERN = np.array([1.0, -1.0, 1.0, -1.0])


@dataclass(frozen=True)
class CouplerParams(DataClassJsonMixin):
    k: float
    gamma: float
    alpha: int = 0
    delta1: float = 0.0
    delta2: float = 0.0
    keep_mismatch_terms: bool = False
    """Keep the exp(+-i delta z) four-wave terms at alpha = 0 (exploratory runs only)."""

    def __post_init__(self) -> None:
        for name in ("k", "gamma", "delta1", "delta2"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParametersError(f"{name} must be finite, got {getattr(self, name)}")
        if self.k <= 0:
            raise InvalidParametersError(f"Coupling k must be positive, got {self.k}")
        if self.gamma < 0:
            raise InvalidParametersError(f"Gain-loss gamma must be non-negative, got {self.gamma}")
        if self.alpha not in (0, 1):
            raise InvalidParametersError(f"alpha must be 0 or 1, got {self.alpha}")
        if self.alpha == 1 and (self.delta1 != 0 or self.delta2 != 0):
            raise InvalidParametersError("alpha = 1 is the zero-mismatch limit: delta1 and delta2 must vanish")
        if self.alpha == 1 and self.keep_mismatch_terms:
            raise InvalidParametersError("keep_mismatch_terms only applies to alpha = 0")

    @property
    def gamma_cr1(self) -> float:
        """Linear PT-breaking threshold sqrt(2) k."""
        return math.sqrt(2.0) * self.k

    @property
    def gamma_cr2(self) -> float:
        """Threshold where the alpha = 0 elliptic families disappear."""
        return self.k

    @property
    def autonomous(self) -> bool:
        return not self.keep_mismatch_terms

    @property
    def stationary_fwm(self) -> float:
        """Coefficient alpha/3 of the four-wave terms in the stationary equations."""
        return self.alpha / 3.0

    def with_gamma(self, gamma: float) -> CouplerParams:
        return dataclasses.replace(self, gamma=gamma)


def field_state(values: Union[Iterable[complex], npt.ArrayLike]) -> FieldState:
    """Validated, read-only copy of four complex amplitudes."""
    result = np.array(values, dtype=np.complex128).reshape(-1)
    if result.shape != (FIELD_SIZE,):
        raise NonFiniteStateError(f"A field state has {FIELD_SIZE} components, got shape {result.shape}")
    if not np.all(np.isfinite(result)):
        raise NonFiniteStateError(f"Non-finite field state {result}")
    result.flags.writeable = False
    return result


def to_real(w: npt.NDArray[np.complex128]) -> npt.NDArray[np.float64]:
    """(Re w, Im w) layout used by the real solvers."""
    return np.concatenate([w.real, w.imag])


def from_real(x: npt.NDArray[np.float64]) -> npt.NDArray[np.complex128]:
    n = x.shape[0] // 2
    return x[:n] + 1j * x[n:]


@dataclass(frozen=True, eq=False)
class StationaryMode:
    w: FieldState
    b: float
    params: CouplerParams
    family: Family = Family.NUMERIC

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2))

    def amplitudes(self) -> npt.NDArray[np.float64]:
        return np.abs(self.w)

    def phase_diffs(self) -> npt.NDArray[np.float64]:
        """arg(w_{j+1}) - arg(w_j), wrapped to (-pi, pi]."""
        diffs = np.angle(self.w[1:] * np.conj(self.w[:-1]))
        return np.asarray(diffs, dtype=np.float64)
