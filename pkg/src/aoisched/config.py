"""Experiment configuration: flat key = value files, named profiles, and
builders that turn a resolved configuration into simulator components.

All dimensional values are converted to linear SI units when the
configuration is resolved; dBm appears only in the file format.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import baselines, channel, info, mdp, phy


class ConfigError(ValueError):
    """Bad key, bad value, or inconsistent configuration."""


@dataclass
class ExperimentConfig:
    # cell dimensioning
    ue_count: int = 2
    subcarriers: int = 1
    info_types: int = 2
    subcarrier_spacing_hz: float = 10e3
    noise_psd_dbm_hz: float = -174.0
    slot_s: float = 0.01
    packet_bits: list = field(default_factory=lambda: [1000.0])
    buffer_bits: float = 0.0  # 0 -> one packet of every type fits
    p_max_dbm: float = 10.0
    circuit_w: float = 0.2
    cycles_per_bit: float = 737.5
    cpu_hz: float = 2e9
    capacitance: float = 2.5e-28
    # geometry, fading, quantization
    d0_m: float = 1.0
    cell_radius_m: float = 500.0
    ue_min_distance_m: float = 100.0
    ue_speed_mps: float = 10.0
    fading_variance: float = 1.0
    levels: int = 8
    # action space
    power_levels: int = 2
    quota: int = 2
    max_catalog_actions: int = 100_000
    # ages and the freshness constraint
    theta_cap_slots: int = 50
    kappa_min_s: float = 0.25
    penalty_weight: float = 1.0
    # training
    episodes: int = 200
    steps: int = 60
    replay: int = 200
    batch: int = 32
    eps0: float = 0.9
    eps_dec: float = 1e-4
    eps_min: float = 1e-4
    eps_mode: str = "linear"
    eps_exp_rate: float = 1e-4
    lr: float = 0.01
    gamma: float = 0.9
    clone_period: int = 100
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    clip_norm: float = 10.0
    double_dqn: bool = True
    train_on: str = "penalized"
    # evaluation and sweeps
    eval_episodes: int = 20
    scheme: str = "proposed"
    sweep_p_max_dbm: list = field(default_factory=lambda: [-10.0, 0.0, 10.0, 20.0, 30.0])
    sweep_packet_bits: list = field(default_factory=lambda: [500.0, 1000.0, 1500.0, 2000.0])
    sweep_subcarriers: list = field(default_factory=lambda: [2, 3])


PROFILES = {
    # Small, fast instance: every joint action is enumerable and a full
    # training run takes seconds, so sweeps across schemes stay cheap.
    "desk": {},
    # Reference-cell dimensioning.  The joint action lattice at this size is
    # astronomically large, so training requires raising
    # max_catalog_actions and is not practical with this implementation;
    # the profile exists for configuration parity and component reuse.
    "paper": {
        "ue_count": 5,
        "subcarriers": 2,
        "info_types": 5,
        "subcarrier_spacing_hz": 60e3,
        "power_levels": 4,
        "theta_cap_slots": 1000,
        "kappa_min_s": 5.0,
        "episodes": 400,
        "steps": 300,
        "ue_min_distance_m": 1.0,
    },
}

_LIST_FIELDS = {"packet_bits", "sweep_p_max_dbm", "sweep_packet_bits", "sweep_subcarriers"}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0) / 1000.0


def _parse_value(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown configuration key: {key}")
    raw = raw.strip()
    if key in _LIST_FIELDS:
        return [float(v.strip()) for v in raw.split(",") if v.strip()]
    kind = _FIELD_TYPES[key]
    if kind == "bool":
        if raw.lower() not in ("true", "false"):
            raise ConfigError(f"key {key}: expected true/false, got {raw!r}")
        return raw.lower() == "true"
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    """Flat UTF-8 key = value lines; # starts a comment; blanks ignored."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {line!r}")
        key, raw = body.split("=", 1)
        out[key.strip()] = _parse_value(key.strip(), raw)
    return out


def parse_config_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def serialize_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in _LIST_FIELDS:
            rendered = ",".join(repr(float(v)) for v in value)
        elif isinstance(value, bool):
            rendered = "true" if value else "false"
        elif isinstance(value, float):
            rendered = repr(value)
        else:
            rendered = str(value)
        lines.append(f"{f.name} = {rendered}")
    return "\n".join(lines) + "\n"


def resolve_config(profile: str = "desk", file_values: dict | None = None,
                   overrides: dict | None = None) -> ExperimentConfig:
    """Layer profile defaults, then a config file, then explicit overrides."""
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; pick one of {sorted(PROFILES)}")
    merged = dict(PROFILES[profile])
    merged.update(file_values or {})
    merged.update(overrides or {})
    unknown = set(merged) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown configuration key: {sorted(unknown)[0]}")
    cfg = replace(ExperimentConfig(), **merged)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig):
    positive = [
        "ue_count", "subcarriers", "info_types", "subcarrier_spacing_hz",
        "slot_s", "circuit_w", "cycles_per_bit", "cpu_hz", "capacitance",
        "episodes", "steps", "replay", "batch", "lr",
        "levels", "power_levels", "quota", "theta_cap_slots", "kappa_min_s",
        "d0_m", "cell_radius_m", "fading_variance", "eval_episodes",
        "clone_period", "max_catalog_actions",
    ]
    for key in positive:
        if getattr(cfg, key) <= 0:
            raise ConfigError(f"key {key}: must be positive")
    if cfg.scheme not in baselines.SCHEME_NAMES:
        raise ConfigError(
            f"key scheme: {cfg.scheme!r} not one of {baselines.SCHEME_NAMES}"
        )
    if cfg.train_on not in ("penalized", "raw"):
        raise ConfigError("key train_on: must be penalized or raw")
    if cfg.eps_mode not in ("linear", "exponential"):
        raise ConfigError("key eps_mode: must be linear or exponential")
    if not 0 <= cfg.gamma < 1:
        raise ConfigError("key gamma: must lie in [0, 1)")
    if cfg.batch > cfg.replay:
        raise ConfigError("key batch: must not exceed replay capacity")
    if not any(v > 0 for v in cfg.packet_bits):
        raise ConfigError("key packet_bits: need positive sizes")


def packet_vector(cfg: ExperimentConfig) -> np.ndarray:
    """Per-type packet sizes: one value broadcasts to all types."""
    values = list(cfg.packet_bits)
    if len(values) == 1:
        values = values * cfg.info_types
    if len(values) != cfg.info_types:
        raise ConfigError(
            "key packet_bits: need one size, or exactly one per information type"
        )
    return np.asarray(values, dtype=float)


@dataclass
class SimComponents:
    info_cfg: info.InfoConfig
    chan_cfg: channel.ChannelConfig
    radio_cfg: phy.RadioConfig
    comp_cfg: phy.ComputeConfig
    constraint_cfg: mdp.ConstraintConfig
    quantizer: channel.Quantizer
    grid: mdp.PowerGrid


def build_components(cfg: ExperimentConfig) -> SimComponents:
    bits = packet_vector(cfg)
    buffer_bits = cfg.buffer_bits if cfg.buffer_bits > 0 else float(bits.sum())
    info_cfg = info.InfoConfig(
        num_types=cfg.info_types,
        packet_bits=bits,
        buffer_bits=buffer_bits,
        slot_s=cfg.slot_s,
        age_cap_slots=cfg.theta_cap_slots,
    )
    chan_cfg = channel.ChannelConfig(
        fading_variance=cfg.fading_variance,
        ref_distance_m=cfg.d0_m,
        cell_radius_m=cfg.cell_radius_m,
        min_distance_m=cfg.ue_min_distance_m,
        ue_speed_mps=cfg.ue_speed_mps,
        levels=cfg.levels,
    )
    p_max_w = dbm_to_watts(cfg.p_max_dbm)
    radio_cfg = phy.RadioConfig(
        num_subcarriers=cfg.subcarriers,
        spacing_hz=cfg.subcarrier_spacing_hz,
        quota=cfg.quota,
        noise_psd_w_hz=dbm_to_watts(cfg.noise_psd_dbm_hz),
        p_max_w=p_max_w,
        circuit_w=cfg.circuit_w,
    )
    comp_cfg = phy.ComputeConfig(
        cycles_per_bit=cfg.cycles_per_bit,
        cpu_hz=cfg.cpu_hz,
        capacitance=cfg.capacitance,
    )
    constraint_cfg = mdp.ConstraintConfig(
        age_limit_s=cfg.kappa_min_s,
        penalty_weight=cfg.penalty_weight,
    )
    mean_pl = channel.mean_cubic_pathloss(
        cfg.d0_m, cfg.ue_min_distance_m, cfg.cell_radius_m
    )
    quantizer = channel.build_quantizer(cfg.levels, cfg.fading_variance, mean_pl)
    grid = mdp.build_power_grid(p_max_w, cfg.power_levels)
    return SimComponents(
        info_cfg, chan_cfg, radio_cfg, comp_cfg, constraint_cfg, quantizer, grid
    )


def build_scheme(cfg: ExperimentConfig, parts: SimComponents | None = None):
    parts = parts or build_components(cfg)
    return baselines.build_scheme(
        cfg.scheme,
        num_ues=cfg.ue_count,
        num_subcarriers=cfg.subcarriers,
        num_types=cfg.info_types,
        grid=parts.grid,
        p_max_w=parts.radio_cfg.p_max_w,
        quota=cfg.quota,
        max_actions=cfg.max_catalog_actions,
    )


def build_env(cfg: ExperimentConfig, catalog: mdp.ActionCatalog,
              rng: np.random.Generator,
              parts: SimComponents | None = None) -> mdp.NetworkEnv:
    parts = parts or build_components(cfg)
    return mdp.NetworkEnv(
        info_cfg=parts.info_cfg,
        chan_cfg=parts.chan_cfg,
        radio_cfg=parts.radio_cfg,
        comp_cfg=parts.comp_cfg,
        constraint_cfg=parts.constraint_cfg,
        quantizer=parts.quantizer,
        catalog=catalog,
        num_ues=cfg.ue_count,
        rng=rng,
    )


def train_settings(cfg: ExperimentConfig):
    from . import dqn, qlearning

    schedule = qlearning.ExplorationSchedule(
        eps0=cfg.eps0, eps_dec=cfg.eps_dec, eps_min=cfg.eps_min,
        mode=cfg.eps_mode, exp_rate=cfg.eps_exp_rate,
    )
    return dqn.TrainSettings(
        episodes=cfg.episodes,
        steps_per_episode=cfg.steps,
        batch_size=cfg.batch,
        replay_capacity=cfg.replay,
        lr=cfg.lr,
        gamma=cfg.gamma,
        schedule=schedule,
        clone_period=cfg.clone_period,
        beta1=cfg.adam_beta1,
        beta2=cfg.adam_beta2,
        eps_adam=cfg.adam_eps,
        clip_norm=cfg.clip_norm,
        double=cfg.double_dqn,
        train_on="reward_penalized" if cfg.train_on == "penalized" else "reward_raw",
    )
