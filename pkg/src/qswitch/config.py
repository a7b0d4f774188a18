"""Switch configuration: flat ``section.key = value`` text files and presets.

Example::

    # default three-user setup
    switch.users = 3
    switch.alpha_max = 10
    link.p = 0.9
    link.fidelity = 0.90
    swap.q = 0.9
    app.f_th = 0.85

List values are comma separated. ``link.p`` takes one value for every
link or one per user. Per-pair swap probabilities are ``swap.q_12``
(1-based users); ``swap.q_21`` may also be given but must agree.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from qswitch.bell import NoiseClass, ProtocolId, swap_fidelity_inverse
from qswitch.capacity import Architecture, SwitchModel, build_model, swapped_input
from qswitch.links import LinkParams, db_per_km_to_theta, swap_success_matrix
from qswitch.schedules import user_pairs


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class SwitchConfig:
    users: int = 3
    alpha_max: int = 10
    p: tuple[float, ...] = (0.9, 0.9, 0.9)
    f_link: float = 0.90
    theta: Optional[float] = None
    distance_km: Optional[tuple[float, ...]] = None
    q: float = 0.9
    q_pairs: tuple[tuple[int, int, float], ...] = ()
    f_th: float = 0.85
    arch: str = "PS"
    protocol: str = "dejmps"
    noise: str = "werner"
    rates: tuple[float, ...] = ()
    horizon: int = 100_000
    replicas: int = 3
    seed: int = 0
    arrivals: str = "poisson"
    x_max: int = 64
    max_rounds: int = 32
    p_cut: float = 1e-12
    column_cap: int = 10**6
    slot_seconds: Optional[float] = None

    @property
    def n_pairs(self) -> int:
        return self.users * (self.users - 1) // 2

    def with_overrides(self, **changes) -> "SwitchConfig":
        return validate(dataclasses.replace(self, **changes))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


# config key -> (field, parser)
KEYS = {
    "switch.users": ("users", int),
    "switch.alpha_max": ("alpha_max", int),
    "link.p": ("p", _floats),
    "link.fidelity": ("f_link", float),
    "link.theta": ("theta", float),
    "link.distance_km": ("distance_km", _floats),
    "swap.q": ("q", float),
    "app.f_th": ("f_th", float),
    "arch": ("arch", str),
    "purification.protocol": ("protocol", str),
    "purification.noise": ("noise", str),
    "purification.max_rounds": ("max_rounds", int),
    "traffic.rates": ("rates", _floats),
    "sim.horizon": ("horizon", int),
    "sim.replicas": ("replicas", int),
    "sim.seed": ("seed", int),
    "sim.arrivals": ("arrivals", str),
    "tables.x_max": ("x_max", int),
    "lp.p_cut": ("p_cut", float),
    "lp.column_cap": ("column_cap", int),
    "meta.slot_seconds": ("slot_seconds", float),
}

ARCH_NAMES = {a.value.lower(): a for a in Architecture}
PROTOCOLS = ("dejmps", "dejmps-binary", "bbpssw", "pumping")

_FIBER_THETA = db_per_km_to_theta(0.2)

PRESETS = {
    "table4": {},
    "strict": {"f_th": 0.9},
    "bitflip": {"noise": "binary"},
    # 2.3 km links at 0.2 dB/km instead of the rounded p = 0.9
    "fiber": {
        "theta": _FIBER_THETA,
        "distance_km": (2.3, 2.3, 2.3),
        "p": (math.exp(-_FIBER_THETA * 2.3),) * 3,
    },
}


def preset(name: str) -> SwitchConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return validate(dataclasses.replace(SwitchConfig(), **PRESETS[name]))


def _apply(values: dict, key: str, raw: str, line: Optional[int]) -> None:
    key = key.strip()
    raw = raw.strip()
    if key.startswith("swap.q_"):
        tag = key[len("swap.q_") :]
        if len(tag) != 2 or not tag.isdigit():
            raise ConfigError(f"pair key must look like swap.q_12, got {key!r}", line)
        i, j = int(tag[0]) - 1, int(tag[1]) - 1
        try:
            v = float(raw)
        except ValueError:
            raise ConfigError(f"bad number for {key}: {raw!r}", line) from None
        values.setdefault("_q_pairs", []).append((i, j, v, line))
        return
    if key not in KEYS:
        raise ConfigError(f"unknown key {key!r}", line)
    name, conv = KEYS[key]
    try:
        values[name] = conv(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}", line) from None


def _merge_pairs(base: SwitchConfig, entries) -> tuple[tuple[int, int, float], ...]:
    table = {(i, j): v for i, j, v in base.q_pairs}
    given: dict[tuple[int, int], tuple[float, Optional[int]]] = {}
    for i, j, v, line in entries:
        if i == j:
            raise ConfigError(f"swap.q_{i + 1}{j + 1} names a single user", line)
        rev = given.get((j, i))
        if rev is not None and rev[0] != v:
            raise ConfigError(
                f"swap.q_{i + 1}{j + 1}={v} disagrees with swap.q_{j + 1}{i + 1}={rev[0]}", line
            )
        given[(i, j)] = (v, line)
        table[(min(i, j), max(i, j))] = v
    return tuple(sorted((i, j, v) for (i, j), v in table.items()))


def parse_text(text: str, base: Optional[SwitchConfig] = None) -> SwitchConfig:
    values: dict = {}
    seen: dict[str, int] = {}
    for n, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", n)
        key, raw = body.split("=", 1)
        _apply(values, key, raw, n)
        seen[key.strip()] = n
    try:
        return _build(values, base)
    except ConfigError as exc:
        if exc.line is not None:
            raise
        # point at the line of the key the message names, if any
        msg = str(exc)
        hits = [ln for key, ln in seen.items() if msg.startswith(key) or f" {key}" in msg]
        if not hits:
            raise
        raise ConfigError(msg, max(hits)) from None


def _build(values: dict, base: Optional[SwitchConfig]) -> SwitchConfig:
    cfg = base or SwitchConfig()
    entries = values.pop("_q_pairs", [])
    if entries:
        values["q_pairs"] = _merge_pairs(cfg, entries)
    return validate(dataclasses.replace(cfg, **values))


def parse_config(
    path: Optional[str | Path] = None,
    preset_name: Optional[str] = None,
    overrides: Iterable[str] = (),
) -> SwitchConfig:
    """Preset (default ``table4``), then file, then ``key=value`` overrides."""
    cfg = preset(preset_name or "table4")
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file {p} does not exist")
        cfg = parse_text(p.read_text(encoding="utf-8"), cfg)
    values: dict = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, raw = item.split("=", 1)
        _apply(values, key, raw, None)
    if values:
        cfg = _build(values, cfg)
    return cfg


def validate(cfg: SwitchConfig) -> SwitchConfig:
    def bad(msg):
        raise ConfigError(msg)

    if cfg.users < 2:
        bad("switch.users must be >= 2")
    if cfg.alpha_max < 1:
        bad("switch.alpha_max must be >= 1")
    if cfg.p and len(set(cfg.p)) == 1 and len(cfg.p) != cfg.users:
        cfg = dataclasses.replace(cfg, p=(cfg.p[0],) * cfg.users)
    if len(cfg.p) != cfg.users:
        bad(f"link.p needs 1 or {cfg.users} values, got {len(cfg.p)}")
    if any(not 0 < v <= 1 for v in cfg.p):
        bad("link.p values must lie in (0, 1]")
    if cfg.theta is not None and cfg.distance_km is not None:
        if len(cfg.distance_km) != cfg.users:
            bad(f"link.distance_km needs {cfg.users} values")
        for pi, d in zip(cfg.p, cfg.distance_km):
            if abs(pi - math.exp(-cfg.theta * d)) > 1e-12:
                bad("link.p is inconsistent with exp(-link.theta * link.distance_km)")
    if not 0.25 < cfg.f_link <= 1:
        bad("link.fidelity must lie in (0.25, 1]")
    if not 0 < cfg.q <= 1 or any(not 0 < v <= 1 for _, _, v in cfg.q_pairs):
        bad("swap probabilities must lie in (0, 1]")
    if any(not (0 <= i < j < cfg.users) for i, j, _ in cfg.q_pairs):
        bad("swap.q_ij names a user outside the switch")
    if not 0.5 < cfg.f_th < 1:
        bad("app.f_th must lie in (0.5, 1)")
    if cfg.arch.lower() not in ARCH_NAMES:
        bad(f"arch must be one of PS, SP, NoiseLess, got {cfg.arch!r}")
    if cfg.protocol not in PROTOCOLS:
        bad(f"purification.protocol must be one of {PROTOCOLS}")
    if cfg.noise not in ("werner", "binary"):
        bad("purification.noise must be werner or binary")
    if cfg.protocol == "bbpssw" and cfg.noise != "werner":
        bad("bbpssw is defined for Werner inputs only")
    if cfg.protocol == "dejmps-binary" and cfg.noise != "binary":
        bad("dejmps-binary needs purification.noise = binary")
    arch = ARCH_NAMES[cfg.arch.lower()]
    if arch is Architecture.PS and swap_fidelity_inverse(cfg.f_th) > 1:
        bad("PS link target exceeds 1")
    if arch is Architecture.SP and swapped_input(NoiseClass(cfg.noise), cfg.f_link).fidelity <= 0.5:
        bad("SP needs swapped fidelity > 0.5")
    if cfg.rates and (len(cfg.rates) != cfg.n_pairs or any(r < 0 for r in cfg.rates)):
        bad(f"traffic.rates needs {cfg.n_pairs} nonnegative values")
    if cfg.horizon < 1 or cfg.replicas < 1 or cfg.x_max < cfg.alpha_max:
        bad("sim.horizon, sim.replicas must be positive and tables.x_max >= alpha_max")
    if cfg.arrivals not in ("poisson", "deterministic"):
        bad("sim.arrivals must be poisson or deterministic")
    return cfg


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize(cfg: SwitchConfig) -> str:
    lines = []
    for key, (name, _) in KEYS.items():
        v = getattr(cfg, name)
        if v is None or v == ():
            continue
        lines.append(f"{key} = {_fmt(v)}")
    for i, j, v in cfg.q_pairs:
        lines.append(f"swap.q_{i + 1}{j + 1} = {v!r}")
    return "\n".join(lines) + "\n"


def architecture(cfg: SwitchConfig) -> Architecture:
    return ARCH_NAMES[cfg.arch.lower()]


def protocol_id(cfg: SwitchConfig) -> ProtocolId:
    if cfg.protocol == "dejmps":
        return ProtocolId.DEJMPS_BINARY if cfg.noise == "binary" else ProtocolId.DEJMPS_BELL_DIAGONAL
    return ProtocolId(cfg.protocol)


def link_params(cfg: SwitchConfig) -> LinkParams:
    return LinkParams(
        cfg.users,
        cfg.alpha_max,
        tuple(cfg.p),
        cfg.f_link,
        theta=cfg.theta,
        d=cfg.distance_km,
    )


def q_matrix(cfg: SwitchConfig) -> np.ndarray:
    table = {pr: cfg.q for pr in user_pairs(cfg.users)}
    table.update({(i, j): v for i, j, v in cfg.q_pairs})
    return swap_success_matrix(cfg.users, table)


def build_switch(cfg: SwitchConfig, arch: Optional[Architecture] = None) -> SwitchModel:
    return build_model(
        link_params(cfg),
        q_matrix(cfg),
        arch or architecture(cfg),
        protocol_id(cfg),
        NoiseClass(cfg.noise),
        cfg.f_th,
        x_max=cfg.x_max,
        max_rounds=cfg.max_rounds,
    )
