"""Bell-diagonal states, entanglement swapping and purification round maps.

Coefficient order throughout is (phi+, psi-, psi+, phi-). In Pauli-error
terms that is (I, Y, X, Z), so the error index of each coefficient in
(x-bit, z-bit) form is (0,0), (1,1), (1,0), (0,1).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

ATOL = 1e-12


class NoiseClass(enum.Enum):
    WERNER = "werner"
    BINARY = "binary"


class ProtocolId(enum.Enum):
    DEJMPS_BELL_DIAGONAL = "dejmps"
    DEJMPS_BINARY = "dejmps-binary"
    BBPSSW_WERNER = "bbpssw"
    PUMPING = "pumping"


class StateMismatchError(ValueError):
    """State shape is not the input class a protocol is defined for."""


@dataclass(frozen=True)
class BellDiagonalState:
    f1: float
    f2: float
    f3: float
    f4: float

    def __post_init__(self):
        coeffs = self.coefficients
        if any(c < -ATOL or c > 1 + ATOL for c in coeffs):
            raise ValueError(f"Bell coefficients must lie in [0, 1], got {coeffs}")
        if abs(sum(coeffs) - 1.0) > ATOL:
            raise ValueError(f"Bell coefficients must sum to 1, got {sum(coeffs)!r}")

    @property
    def fidelity(self) -> float:
        return self.f1

    @property
    def coefficients(self) -> tuple[float, float, float, float]:
        return (self.f1, self.f2, self.f3, self.f4)

    @classmethod
    def from_unnormalized(cls, f1, f2, f3, f4) -> "BellDiagonalState":
        total = f1 + f2 + f3 + f4
        vals = [max(0.0, v / total) for v in (f1, f2, f3, f4)]
        # push the rounding residue into the largest entry
        k = max(range(4), key=lambda i: vals[i])
        vals[k] += 1.0 - sum(vals)
        return cls(*vals)

    def is_werner(self, tol: float = 1e-10) -> bool:
        e = (1.0 - self.f1) / 3.0
        return all(abs(c - e) <= tol for c in (self.f2, self.f3, self.f4))

    def is_binary(self, tol: float = 1e-10) -> bool:
        return abs(self.f2) <= tol and abs(self.f4) <= tol


def werner(fidelity: float) -> BellDiagonalState:
    e = (1.0 - fidelity) / 3.0
    return BellDiagonalState(fidelity, e, e, 1.0 - fidelity - 2 * e)


def binary(fidelity: float) -> BellDiagonalState:
    """Bit-flip state: the only error component is psi+."""
    return BellDiagonalState(fidelity, 0.0, 1.0 - fidelity, 0.0)


def make_state(noise: NoiseClass, fidelity: float) -> BellDiagonalState:
    if noise is NoiseClass.WERNER:
        return werner(fidelity)
    return binary(fidelity)


def swap_fidelity(f_link: float) -> float:
    """Fidelity after swapping two Werner pairs of fidelity ``f_link``."""
    if not 0.25 <= f_link <= 1.0:
        raise ValueError(f"link fidelity must be in [0.25, 1], got {f_link}")
    return 0.25 + 0.75 * ((4.0 * f_link - 1.0) / 3.0) ** 2


def swap_fidelity_inverse(f_target: float) -> float:
    """Werner link fidelity whose swap lands exactly on ``f_target``."""
    if not 0.25 < f_target <= 1.0:
        raise ValueError(f"target fidelity must be in (0.25, 1], got {f_target}")
    return (1.0 + 3.0 * math.sqrt((4.0 * f_target - 1.0) / 3.0)) / 4.0


# Pauli error labels of (f1, f2, f3, f4) as (x, z) bits, packed to an int.
_ERROR_CODE = (0b00, 0b11, 0b10, 0b01)
_INDEX_OF_CODE = {code: i for i, code in enumerate(_ERROR_CODE)}


def swap_state(a: BellDiagonalState, b: BellDiagonalState) -> BellDiagonalState:
    """Bell-diagonal state left after swapping pairs ``a`` and ``b``.

    Errors compose by XOR of their Pauli labels. For two Werner inputs this
    reproduces :func:`swap_fidelity` and the output stays Werner.
    """
    out = [0.0] * 4
    for i, ca in enumerate(a.coefficients):
        for j, cb in enumerate(b.coefficients):
            out[_INDEX_OF_CODE[_ERROR_CODE[i] ^ _ERROR_CODE[j]]] += ca * cb
    return BellDiagonalState.from_unnormalized(*out)


def _check_purifiable(*states: BellDiagonalState) -> None:
    for s in states:
        if s.fidelity <= 0.5:
            raise ValueError(f"purification needs fidelity > 0.5, got {s.fidelity}")


def dejmps_two_input(
    primary: BellDiagonalState, base: BellDiagonalState
) -> tuple[float, BellDiagonalState]:
    """One DEJMPS round on two possibly different Bell-diagonal pairs.

    Returns the success probability and the post-selected state of the
    kept (``primary``) pair.
    """
    a1, a2, a3, a4 = primary.coefficients
    b1, b2, b3, b4 = base.coefficients
    p = (a1 + a2) * (b1 + b2) + (a3 + a4) * (b3 + b4)
    out = BellDiagonalState.from_unnormalized(
        a1 * b1 + a2 * b2,
        a3 * b4 + a4 * b3,
        a3 * b3 + a4 * b4,
        a1 * b2 + a2 * b1,
    )
    return p, out


def _check_shape(proto: ProtocolId, state: BellDiagonalState) -> None:
    if proto is ProtocolId.DEJMPS_BINARY and not state.is_binary():
        raise StateMismatchError(f"{proto.value} needs a bit-flip state, got {state}")
    if proto is ProtocolId.BBPSSW_WERNER and not state.is_werner():
        raise StateMismatchError(f"{proto.value} needs a Werner state, got {state}")
    if proto is ProtocolId.PUMPING:
        raise StateMismatchError("pumping is asymmetric; use pump_round")


def round_success_prob(proto: ProtocolId, state: BellDiagonalState) -> float:
    _check_shape(proto, state)
    f1, f2, f3, f4 = state.coefficients
    if proto is ProtocolId.BBPSSW_WERNER:
        f = state.fidelity
        return (f + (1 - f) / 3) ** 2 + (2 * (1 - f) / 3) ** 2
    return (f1 + f2) ** 2 + (f3 + f4) ** 2


def round_output_fidelity(proto: ProtocolId, state: BellDiagonalState) -> BellDiagonalState:
    """State after one successful symmetric round.

    BBPSSW output is re-twirled to Werner form so that the round map stays a
    function of fidelity alone.
    """
    _check_shape(proto, state)
    _check_purifiable(state)
    if proto is ProtocolId.BBPSSW_WERNER:
        f = state.fidelity
        num = f**2 + (1 - f) ** 2 / 9
        den = f**2 + 2 * f * (1 - f) / 3 + 5 * (1 - f) ** 2 / 9
        return werner(num / den)
    _, out = dejmps_two_input(state, state)
    return out


def pump_round(
    primary: BellDiagonalState, base: BellDiagonalState
) -> tuple[float, BellDiagonalState]:
    """Asymmetric DEJMPS step used by entanglement pumping."""
    _check_purifiable(primary, base)
    return dejmps_two_input(primary, base)
