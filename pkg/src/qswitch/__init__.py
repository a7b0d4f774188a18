"""Capacity regions, purification yields and max-weight simulation for a
single entanglement-distribution switch."""

from qswitch.bell import BellDiagonalState, NoiseClass, ProtocolId, binary, werner
from qswitch.capacity import Architecture, build_model, capacity_boundary, membership
from qswitch.config import SwitchConfig, build_switch, parse_config, preset
from qswitch.sim import estimate_stability
from qswitch.yields import plan_rounds, yield_model

__all__ = [
    "Architecture",
    "BellDiagonalState",
    "NoiseClass",
    "ProtocolId",
    "SwitchConfig",
    "binary",
    "build_model",
    "build_switch",
    "capacity_boundary",
    "estimate_stability",
    "membership",
    "parse_config",
    "plan_rounds",
    "preset",
    "werner",
    "yield_model",
]
