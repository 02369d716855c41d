"""Uplink NOMA physical layer: SIC decode ordering, per-user SINR and
Shannon rate, and the radio/compute feasibility checks.

Decoding at the base station is successive: users with stronger channel
gain are decoded first, so a user only sees interference from co-assigned
users with weaker (or equal, higher-index) gain.  Exactly equal gains are
ordered by user index, lower index counting as stronger, which keeps the
interference relation a strict partial order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RadioConfig:
    num_subcarriers: int
    spacing_hz: float
    quota: int
    noise_psd_w_hz: float
    p_max_w: float
    circuit_w: float

    def __post_init__(self):
        if self.num_subcarriers < 1:
            raise ValueError("need at least one subcarrier")
        if self.spacing_hz <= 0:
            raise ValueError("subcarrier spacing must be positive")
        if self.quota < 1:
            raise ValueError("per-subcarrier quota must be >= 1")
        if self.p_max_w <= 0:
            raise ValueError("power budget must be positive")
        if self.circuit_w <= 0:
            raise ValueError("circuit power must be positive")


@dataclass(frozen=True)
class ComputeConfig:
    cycles_per_bit: float
    cpu_hz: float
    capacitance: float

    def __post_init__(self):
        if min(self.cycles_per_bit, self.cpu_hz, self.capacitance) <= 0:
            raise ValueError("compute parameters must be positive")


def weaker_order(gains: np.ndarray) -> np.ndarray:
    """Boolean tensor W[m, k, n]: user k interferes with user m on carrier n.

    True when k's gain is strictly lower, or equal with a higher user index.
    The relation is irreflexive and antisymmetric, so no co-assigned pair can
    interfere with each other both ways.
    """
    gains = np.asarray(gains, dtype=float)
    g_m = gains[:, None, :]
    g_k = gains[None, :, :]
    m_idx = np.arange(gains.shape[0])
    tie_break = m_idx[None, :, None] > m_idx[:, None, None]
    return (g_k < g_m) | ((g_k == g_m) & tie_break)


def sic_interferers(gains_on_carrier, assigned_on_carrier, user: int) -> list[int]:
    """Indices of co-assigned users whose signal remains when decoding ``user``."""
    gains = np.asarray(gains_on_carrier, dtype=float)
    assigned = np.asarray(assigned_on_carrier).astype(bool)
    if not assigned[user]:
        raise ValueError("user is not assigned on this subcarrier")
    weaker = weaker_order(gains[:, None])[:, :, 0]
    return [int(k) for k in np.flatnonzero(assigned & weaker[user])]


def sinr(powers, gains, assigned, spacing_hz: float, noise_psd_w_hz: float) -> np.ndarray:
    """Per-(user, carrier) SINR after SIC.

    ``powers`` and ``assigned`` may carry leading batch axes (..., M, N);
    ``gains`` is (M, N).  Unassigned entries come out as zero.
    """
    powers = np.asarray(powers, dtype=float)
    gains = np.asarray(gains, dtype=float)
    assigned = np.asarray(assigned, dtype=float)
    received = assigned * powers * gains
    interference = np.einsum("...kn,mkn->...mn", received, weaker_order(gains))
    return received / (spacing_hz * noise_psd_w_hz + interference)


def user_rate(assigned_row, sinr_row, spacing_hz: float):
    """Shannon rate summed over a user's assigned subcarriers, bits/s."""
    assigned_row = np.asarray(assigned_row, dtype=float)
    sinr_row = np.asarray(sinr_row, dtype=float)
    return spacing_hz * np.sum(assigned_row * np.log2(1.0 + sinr_row), axis=-1)


def check_rate_coverage(send_flags, packet_bits, rate_bps, slot_s: float) -> bool:
    """Scheduled bits must fit in one slot at the achieved rate (non-strict)."""
    load = np.sum(np.asarray(send_flags) * np.asarray(packet_bits, dtype=float), axis=-1)
    return bool(np.all(load <= np.asarray(rate_bps, dtype=float) * slot_s))


def check_subcarrier_quota(assigned, quota: int) -> bool:
    """No subcarrier may carry more than ``quota`` users."""
    return bool(np.all(np.sum(np.asarray(assigned), axis=-2) <= quota))


def check_power_budget(assigned_row, powers_row, p_max_w: float) -> bool:
    """Total transmit power of one user across its carriers, non-strict cap."""
    total = np.sum(np.asarray(assigned_row) * np.asarray(powers_row, dtype=float), axis=-1)
    return bool(np.all(total <= p_max_w))


def cpu_load(send_flags, packet_bits, cycles_per_bit: float, slot_s: float,
             cpu_hz: float) -> tuple[float, bool]:
    """Server CPU frequency needed to process this slot's deliveries.

    All scheduled bits must finish within the slot, so the demanded rate is
    total_bits * cycles_per_bit / slot_s; feasible when at most ``cpu_hz``.
    """
    bits = float(np.sum(np.asarray(send_flags) * np.asarray(packet_bits, dtype=float)))
    load = bits * cycles_per_bit / slot_s
    return load, load <= cpu_hz


def cpu_energy(load_hz: float, capacitance: float, slot_s: float) -> float:
    """Dynamic CPU energy over one slot: capacitance * f^3 * slot."""
    if load_hz < 0:
        raise ValueError("CPU load must be nonnegative")
    return capacitance * load_hz**3 * slot_s
