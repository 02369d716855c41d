"""Decision-process surface over the cell: state encoding, the discrete
joint action catalog, per-state feasibility masking, reward, and the
one-slot transition.

A joint action fixes, for every user, which subcarriers it transmits on,
at which discrete power level, and which buffered or fresh packets it
sends.  The catalog enumerates every structurally valid joint action once,
in lexicographic order over (assignment bits, power indices, send bits),
so an index into the catalog is a stable action id across runs.  Checks
that depend only on the action (subcarrier quota, per-user power budget)
are applied when the catalog is built; checks that depend on the current
state (packet availability, buffer space, CPU capacity, rate coverage)
are evaluated per slot as a boolean mask over the catalog.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import channel as chan
from . import info as uinfo
from . import phy


class InfeasibleActionError(ValueError):
    """The requested joint action violates a scheduling constraint."""


class CatalogTooLargeError(RuntimeError):
    """The joint action lattice exceeds the configured enumeration limit."""


@dataclass(frozen=True)
class PowerGrid:
    """Discrete transmit power levels 0, step, 2*step, ..., all below the cap."""

    levels: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        object.__setattr__(self, "levels", levels)
        if levels[0] != 0.0 or np.any(np.diff(levels) <= 0):
            raise ValueError("power levels must start at 0 and ascend")

    @property
    def num_steps(self) -> int:
        return len(self.levels) - 1


def build_power_grid(p_max_w: float, num_steps: int) -> PowerGrid:
    """Evenly spaced levels with step p_max/(num_steps+1).

    The top level is num_steps/(num_steps+1) of the budget, strictly below
    it, leaving headroom when several carriers are powered at once.
    """
    if num_steps < 1:
        raise ValueError("need at least one nonzero power level")
    step = p_max_w / (num_steps + 1)
    return PowerGrid(levels=np.arange(num_steps + 1, dtype=float) * step)


@dataclass(eq=False)
class ActionVector:
    """One joint action: assignment bits, power level indices, send bits.

    ``power_idx`` is -1 where the power does not come from the grid (the
    uniform-power scheme assigns exact fractions of the budget instead).
    """

    assign: np.ndarray
    power_idx: np.ndarray
    send: np.ndarray
    power_w: np.ndarray

    def key(self) -> tuple:
        return (
            tuple(int(v) for v in self.assign.ravel()),
            tuple(int(v) for v in self.power_idx.ravel()),
            tuple(int(v) for v in self.send.ravel()),
        )


@dataclass
class ActionCatalog:
    """Materialized joint action lattice with per-entry arrays.

    assign: (A, M, N) 0/1, power_idx: (A, M, N) grid indices (or -1),
    power_w: (A, M, N) watts, send: (A, M, F) 0/1.  Entries are in
    lexicographic order of (assign, power_idx, send) flattened row-major.
    """

    assign: np.ndarray
    power_idx: np.ndarray
    power_w: np.ndarray
    send: np.ndarray
    learned_dims: tuple[str, ...] = ("assign", "power", "send")

    def __len__(self) -> int:
        return self.assign.shape[0]

    def action(self, index: int) -> ActionVector:
        return ActionVector(
            assign=self.assign[index],
            power_idx=self.power_idx[index],
            send=self.send[index],
            power_w=self.power_w[index],
        )


def _radio_combinations(num_ues, num_subcarriers, grid, p_max_w, quota,
                        max_actions):
    """All (assign, power_idx) pairs passing quota and budget, in lex order."""
    cells = num_ues * num_subcarriers
    upper = (grid.num_steps + 2) ** cells
    if upper > max_actions:
        raise CatalogTooLargeError(
            f"radio lattice holds up to {upper} combinations; "
            f"limit is {max_actions} (raise max_catalog_actions to override)"
        )
    assign_rows, power_rows = [], []
    for rho_flat in itertools.product((0, 1), repeat=cells):
        rho = np.asarray(rho_flat, dtype=np.int8).reshape(num_ues, num_subcarriers)
        if not phy.check_subcarrier_quota(rho, quota):
            continue
        per_cell = [range(grid.num_steps + 1) if bit else (0,) for bit in rho_flat]
        for p_flat in itertools.product(*per_cell):
            p_idx = np.asarray(p_flat, dtype=np.int16).reshape(num_ues, num_subcarriers)
            watts = grid.levels[p_idx]
            if not phy.check_power_budget(rho, watts, p_max_w):
                continue
            assign_rows.append(rho)
            power_rows.append(p_idx)
    return np.stack(assign_rows), np.stack(power_rows)


def _send_patterns(num_ues, num_types) -> np.ndarray:
    """Every 0/1 send matrix, lexicographic over the flattened bits."""
    bits = num_ues * num_types
    block = np.asarray(
        list(itertools.product((0, 1), repeat=bits)), dtype=np.int8
    )
    return block.reshape(-1, num_ues, num_types)


def build_catalog(num_ues: int, num_subcarriers: int, num_types: int,
                  grid: PowerGrid, p_max_w: float, quota: int,
                  max_actions: int = 100_000,
                  include_send: bool = True,
                  power_mode: str = "grid") -> ActionCatalog:
    """Enumerate the joint action lattice for one scheme variant.

    power_mode "grid" couples each assigned carrier with a grid level;
    "uniform" splits the full budget evenly over the assigned carriers, so
    the lattice has no power dimension.  ``include_send=False`` likewise
    drops the send dimension (it is then decided outside the learner).
    """
    if power_mode == "grid":
        assign, power_idx = _radio_combinations(
            num_ues, num_subcarriers, grid, p_max_w, quota, max_actions
        )
        power_w = grid.levels[power_idx]
    elif power_mode == "uniform":
        cells = num_ues * num_subcarriers
        if 2 ** cells > max_actions:
            raise CatalogTooLargeError(
                f"assignment lattice holds 2^{cells} combinations; "
                f"limit is {max_actions}"
            )
        rows = [
            np.asarray(bits, dtype=np.int8).reshape(num_ues, num_subcarriers)
            for bits in itertools.product((0, 1), repeat=cells)
        ]
        rows = [r for r in rows if phy.check_subcarrier_quota(r, quota)]
        assign = np.stack(rows)
        carriers = assign.sum(axis=2, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            share = np.where(carriers > 0, p_max_w / np.maximum(carriers, 1), 0.0)
        power_w = assign * share
        power_idx = np.full_like(assign, -1, dtype=np.int16)
    else:
        raise ValueError(f"unknown power_mode {power_mode!r}")

    if include_send:
        sends = _send_patterns(num_ues, num_types)
    else:
        sends = np.zeros((1, num_ues, num_types), dtype=np.int8)

    n_radio, n_send = assign.shape[0], sends.shape[0]
    if n_radio * n_send > max_actions:
        raise CatalogTooLargeError(
            f"joint catalog would hold {n_radio * n_send} actions; "
            f"limit is {max_actions} (raise max_catalog_actions to override)"
        )
    return ActionCatalog(
        assign=np.repeat(assign, n_send, axis=0),
        power_idx=np.repeat(power_idx, n_send, axis=0),
        power_w=np.repeat(power_w, n_send, axis=0).astype(float),
        send=np.tile(sends, (n_radio, 1, 1)),
    )


@dataclass(frozen=True)
class ConstraintConfig:
    """Long-run freshness requirement and the weight of its soft penalty."""

    age_limit_s: float
    penalty_weight: float = 1.0

    def __post_init__(self):
        if self.age_limit_s <= 0:
            raise ValueError("age limit must be positive")
        if self.penalty_weight < 0:
            raise ValueError("penalty weight must be nonnegative")


def reward(rates_bps, transmit_powers_w, aaoi_s: float, circuit_w: float,
           num_ues: int) -> float:
    """Energy-spectral-efficiency-per-age figure of merit for one slot.

    Total throughput divided by (mean age times total consumed power),
    where consumed power counts every user's circuit draw plus all
    transmit power.  Strictly positive denominator since circuit_w > 0.
    """
    r_total = float(np.sum(rates_bps))
    p_total = float(np.sum(transmit_powers_w)) + num_ues * circuit_w
    return r_total / (aaoi_s * p_total)


def discounted_return(rewards, gamma: float) -> float:
    """Horizon-averaged discounted sum, weights gamma^t for t = 1..T."""
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    rewards = np.asarray(rewards, dtype=float)
    t = np.arange(1, len(rewards) + 1, dtype=float)
    return float(np.sum(gamma**t * rewards) / max(len(rewards), 1))


class NetworkEnv:
    """Single-cell uplink environment advanced one scheduling slot at a time.

    Owns all mutable state (positions, quantized gains, packet flags, ages)
    and a private random stream, so independent instances never interact.
    """

    def __init__(self, info_cfg: uinfo.InfoConfig, chan_cfg: chan.ChannelConfig,
                 radio_cfg: phy.RadioConfig, comp_cfg: phy.ComputeConfig,
                 constraint_cfg: ConstraintConfig, quantizer: chan.Quantizer,
                 catalog: ActionCatalog, num_ues: int,
                 rng: np.random.Generator):
        self.info_cfg = info_cfg
        self.chan_cfg = chan_cfg
        self.radio_cfg = radio_cfg
        self.comp_cfg = comp_cfg
        self.constraint_cfg = constraint_cfg
        self.quantizer = quantizer
        self.catalog = catalog
        self.num_ues = num_ues
        self.rng = rng

        bits = info_cfg.packet_bits
        self._cat_bits_per_ue = catalog.send.astype(float) @ bits
        total_bits = self._cat_bits_per_ue.sum(axis=1)
        self._cat_cpu_ok = (
            total_bits * comp_cfg.cycles_per_bit / info_cfg.slot_s <= comp_cfg.cpu_hz
        )
        self._send_block = _send_patterns(num_ues, info_cfg.num_types)
        self._send_block_bits = self._send_block.astype(float) @ bits

        self.slot = 0
        self.positions = None
        self.levels = None
        self.gains = None
        self.update_flags = None
        self.buffered = None
        self.age_s = None
        self.gen_slot = None
        self._age_running_sum = None
        self._age_running_count = 0

    # ------------------------------------------------------------------ state

    def reset(self) -> np.ndarray:
        """Fresh placements, cleared buffers, saturated ages, slot-1 channel."""
        cfg = self.info_cfg
        m, f = self.num_ues, cfg.num_types
        self.positions = chan.place_ues(
            self.rng, m, self.chan_cfg.cell_radius_m, self.chan_cfg.min_distance_m
        )
        self.buffered = np.zeros((m, f), dtype=np.int8)
        self.age_s = np.full((m, f), cfg.age_cap_s)
        self.gen_slot = np.full((m, f), -1, dtype=np.int64)
        self._age_running_sum = np.zeros((m, f))
        self._age_running_count = 0
        self.slot = 1
        self._sample_channel()
        self._sample_updates()
        return self.encode_state()

    def _sample_channel(self):
        m, n = self.num_ues, self.radio_cfg.num_subcarriers
        fading = chan.sample_fading(self.rng, self.chan_cfg.fading_variance, size=(m, n))
        dist = np.linalg.norm(self.positions, axis=1)
        raw = chan.channel_gain(
            fading, dist[:, None], self.chan_cfg.ref_distance_m, self.chan_cfg.pathloss_exp
        )
        state = chan.quantize_gain(raw, self.quantizer)
        self.levels = state.level
        self.gains = state.gain

    def _sample_updates(self):
        raw = uinfo.generate_updates(self.rng, self.info_cfg.num_types, size=self.num_ues)
        self._generated_this_slot = int(raw.sum())
        self.update_flags = uinfo.suppress_overflow_updates(
            self.buffered, raw, self.info_cfg.packet_bits, self.info_cfg.buffer_bits
        )

    @property
    def free_bits(self) -> np.ndarray:
        return uinfo.free_buffer_space(
            self.buffered, self.info_cfg.packet_bits, self.info_cfg.buffer_bits
        )

    def encode_state(self) -> np.ndarray:
        """Normalized observation: levels, fresh flags, free space, held flags, ages."""
        cfg = self.info_cfg
        return np.concatenate([
            self.levels.ravel() / self.quantizer.num_levels,
            self.update_flags.ravel().astype(float),
            np.atleast_1d(self.free_bits) / cfg.buffer_bits,
            self.buffered.ravel().astype(float),
            self.age_s.ravel() / cfg.age_cap_s,
        ])

    @property
    def state_dim(self) -> int:
        m, n, f = self.num_ues, self.radio_cfg.num_subcarriers, self.info_cfg.num_types
        return m * n + m * f + m + m * f + m * f

    # ------------------------------------------------------------- feasibility

    def _rates(self, assign_b, power_b) -> np.ndarray:
        snr = phy.sinr(
            power_b, self.gains, assign_b,
            self.radio_cfg.spacing_hz, self.radio_cfg.noise_psd_w_hz,
        )
        return phy.user_rate(assign_b, snr, self.radio_cfg.spacing_hz)

    def _send_feasible(self, send_b, bits_per_ue, rates) -> np.ndarray:
        """State-dependent checks for a batch of send matrices at given rates."""
        avail = (self.buffered | self.update_flags).astype(np.int8)
        send_ok = np.all(send_b <= avail[None], axis=(1, 2))
        avail_bits = (avail * self.info_cfg.packet_bits).sum(axis=1)
        leftover = avail_bits[None, :] - bits_per_ue
        buffer_ok = np.all(leftover <= self.info_cfg.buffer_bits, axis=1)
        rate_ok = np.all(bits_per_ue <= rates * self.info_cfg.slot_s, axis=1)
        return send_ok & buffer_ok & rate_ok

    def feasible_mask(self) -> np.ndarray:
        """Boolean mask over the catalog for the current state."""
        rates = self._rates(self.catalog.assign, self.catalog.power_w)
        mask = self._send_feasible(self.catalog.send, self._cat_bits_per_ue, rates)
        return mask & self._cat_cpu_ok

    def sample_feasible_send(self, assign, power_w,
                             rng: np.random.Generator) -> np.ndarray:
        """Uniform draw over all send matrices feasible under a fixed radio choice."""
        rates = self._rates(assign, power_w)
        bits = self._send_block_bits
        cpu_ok = (
            bits.sum(axis=1) * self.comp_cfg.cycles_per_bit / self.info_cfg.slot_s
            <= self.comp_cfg.cpu_hz
        )
        ok = self._send_feasible(self._send_block, bits, rates[None, :].repeat(len(bits), 0)) & cpu_ok
        choices = np.flatnonzero(ok)
        if not len(choices):
            return np.zeros_like(self._send_block[0])
        return self._send_block[choices[rng.integers(len(choices))]]

    # ------------------------------------------------------------------- step

    def step(self, action_index: int | None = None, *,
             send_override: np.ndarray | None = None,
             action: ActionVector | None = None):
        """Apply one joint action for the current slot.

        Returns (next_state, penalized_reward, record).  The record carries
        every per-slot quantity the experiment figures are built from.
        """
        if action is None:
            action = self.catalog.action(int(action_index))
        assign, power_w = action.assign, action.power_w
        send = action.send if send_override is None else np.asarray(send_override, dtype=np.int8)

        rates = self._rates(assign[None], power_w[None])[0]
        bits_per_ue = send.astype(float) @ self.info_cfg.packet_bits
        load_hz, cpu_ok = phy.cpu_load(
            send, self.info_cfg.packet_bits, self.comp_cfg.cycles_per_bit,
            self.info_cfg.slot_s, self.comp_cfg.cpu_hz,
        )
        ok = self._send_feasible(send[None], bits_per_ue[None], rates[None])[0]
        if not (ok and cpu_ok):
            raise InfeasibleActionError(
                f"joint action infeasible at slot {self.slot}"
            )

        new_buffered = uinfo.apply_buffer_update(self.buffered, self.update_flags, send)
        self.age_s, self.gen_slot = uinfo.update_aoi(
            self.age_s, self.gen_slot, send, self.update_flags, self.slot, self.info_cfg
        )
        aaoi = uinfo.average_aoi(self.age_s)

        reward_raw = reward(
            rates, assign * power_w, aaoi, self.radio_cfg.circuit_w, self.num_ues
        )
        self._age_running_sum += self.age_s
        self._age_running_count += 1
        running_mean = self._age_running_sum / self._age_running_count
        excess = np.maximum(0.0, running_mean - self.constraint_cfg.age_limit_s)
        penalty = self.constraint_cfg.penalty_weight * float(
            np.mean(excess / self.constraint_cfg.age_limit_s)
        )
        reward_penalized = reward_raw - penalty

        r_total = float(np.sum(rates))
        p_total = float(np.sum(assign * power_w)) + self.num_ues * self.radio_cfg.circuit_w
        record = {
            "reward_raw": reward_raw,
            "reward_penalized": reward_penalized,
            "r_total_bps": r_total,
            "p_total_w": p_total,
            "aaoi_s": aaoi,
            "ee_bits_per_joule_per_hz": r_total / (p_total * self.radio_cfg.spacing_hz),
            "cpu_energy_j": phy.cpu_energy(load_hz, self.comp_cfg.capacitance, self.info_cfg.slot_s),
            "transmitted": int(send.sum()),
            "generated": self._generated_this_slot,
        }

        self.buffered = new_buffered
        self.slot += 1
        self.positions = chan.move_ue(
            self.positions, self.chan_cfg.ue_speed_mps, self.info_cfg.slot_s,
            self.rng, self.chan_cfg.cell_radius_m,
        )
        self._sample_channel()
        self._sample_updates()
        return self.encode_state(), reward_penalized, record


def enumerate_feasible_actions(env: NetworkEnv) -> list[ActionVector]:
    """Every catalog action feasible in the environment's current state,
    in canonical (lexicographic) order."""
    mask = env.feasible_mask()
    return [env.catalog.action(i) for i in np.flatnonzero(mask)]
