"""Tabular Q-learning with epsilon-greedy exploration.

Only viable when the discrete state key space is tiny; the table doubles as
a verification oracle for the neural learner on such instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExplorationSchedule:
    """Linearly decaying exploration rate with a floor.

    ``mode`` may be "exponential", in which case eps(t) = eps0 * exp(-rate*t)
    floored at eps_min.
    """

    eps0: float = 0.9
    eps_dec: float = 1e-4
    eps_min: float = 1e-4
    mode: str = "linear"
    exp_rate: float = 1e-4

    def __post_init__(self):
        if not 0 <= self.eps0 <= 1:
            raise ValueError("eps0 must lie in [0, 1]")
        if self.eps_min < 0:
            raise ValueError("eps_min must be nonnegative")
        if self.mode not in ("linear", "exponential"):
            raise ValueError("mode must be linear or exponential")


def decay_epsilon(schedule: ExplorationSchedule, t: int) -> float:
    """Exploration probability after t steps."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if schedule.mode == "exponential":
        value = schedule.eps0 * np.exp(-schedule.exp_rate * t)
    else:
        value = schedule.eps0 - t * schedule.eps_dec
    return float(max(schedule.eps_min, value))


@dataclass(frozen=True)
class LearningRateSchedule:
    """Constant step size, or zeta0/(1+n) over per-pair visit counts n.

    The decaying mode sums to infinity while its squares stay summable for
    every (state, action) pair, which is what stochastic-approximation
    convergence asks for.
    """

    mode: str = "constant"
    zeta0: float = 0.1

    def __post_init__(self):
        if self.mode not in ("constant", "robbins_monro"):
            raise ValueError("mode must be constant or robbins_monro")
        if not 0 < self.zeta0 <= 1:
            raise ValueError("zeta0 must lie in (0, 1]")

    def rate(self, visits: int) -> float:
        if self.mode == "constant":
            return self.zeta0
        return self.zeta0 / (1.0 + visits)


class QTable:
    """Sparse state-action value table, zero for never-visited pairs."""

    def __init__(self):
        self._values: dict[tuple, float] = {}
        self._visits: dict[tuple, int] = {}

    def get(self, state_key, action: int) -> float:
        return self._values.get((state_key, action), 0.0)

    def set(self, state_key, action: int, value: float):
        self._values[(state_key, action)] = value

    def visits(self, state_key, action: int) -> int:
        return self._visits.get((state_key, action), 0)

    def count_visit(self, state_key, action: int) -> int:
        key = (state_key, action)
        self._visits[key] = self._visits.get(key, 0) + 1
        return self._visits[key]

    def __len__(self) -> int:
        return len(self._values)


def q_update(table: QTable, state_key, action: int, reward: float,
             next_state_key, feasible_next, zeta: float, gamma: float) -> float:
    """One temporal-difference backup toward reward + gamma * best next value.

    Returns the updated entry.  The max runs over the feasible next actions
    only, which is never empty because idling is always allowed.
    """
    if not 0 <= zeta < 1:
        raise ValueError("zeta must lie in [0, 1)")
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    feasible_next = list(feasible_next)
    if not feasible_next:
        raise ValueError("feasible next-action set must not be empty")
    best_next = max(table.get(next_state_key, a) for a in feasible_next)
    current = table.get(state_key, action)
    updated = current + zeta * (reward + gamma * best_next - current)
    table.set(state_key, action, updated)
    return updated


def select_action(table: QTable, state_key, feasible, epsilon: float,
                  rng: np.random.Generator) -> int:
    """Epsilon-greedy over the feasible set; value ties go to the lowest index."""
    feasible = list(feasible)
    if not feasible:
        raise ValueError("feasible action set must not be empty")
    if rng.uniform() < epsilon:
        return int(feasible[rng.integers(len(feasible))])
    values = [table.get(state_key, a) for a in feasible]
    return int(feasible[int(np.argmax(values))])


def state_key(levels, update_flags, buffered_flags, age_s, free_bits,
              slot_s: float, packet_unit_bits: float) -> tuple:
    """Hashable discretization of an environment state for the table.

    Ages are rounded to whole slots and free space to whole packet units,
    so the key space stays finite on tiny instances.
    """
    age_slots = np.rint(np.asarray(age_s, dtype=float) / slot_s).astype(int)
    free_units = np.rint(np.atleast_1d(free_bits) / packet_unit_bits).astype(int)
    return (
        tuple(int(v) for v in np.asarray(levels).ravel()),
        tuple(int(v) for v in np.asarray(update_flags).ravel()),
        tuple(int(v) for v in np.asarray(buffered_flags).ravel()),
        tuple(int(v) for v in age_slots.ravel()),
        tuple(int(v) for v in free_units.ravel()),
    )
