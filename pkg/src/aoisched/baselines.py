"""Comparison schemes.  Each one replaces exactly one decision dimension of
the full learner (subcarrier assignment, power allocation, or packet
transmission) and leaves the remaining dimensions to the DQN.

A scheme is a thin policy adapter around the environment: it owns the
action catalog the learner sees, the per-state feasibility mask, and the
translation from a chosen catalog index to the joint action actually
applied.
"""

from __future__ import annotations

import numpy as np

from . import mdp
from .mdp import ActionCatalog, NetworkEnv

SCHEME_NAMES = ("proposed", "oma", "matching", "uniform-power", "random-phi")


def match_subcarriers(gains: np.ndarray, quota: int,
                      user_capacity: int | None = None) -> np.ndarray:
    """Two-sided many-to-many deferred acceptance on channel gains.

    Users propose down their gain-sorted subcarrier lists; a subcarrier
    keeps its best ``quota`` proposers by gain (ties to the lower user
    index) and bumps the worst when a better one arrives.  Bumped users
    resume proposing, and nobody proposes to the same subcarrier twice, so
    the process ends after at most M*N proposals with no blocking pair
    left.  Returns the 0/1 assignment matrix.
    """
    gains = np.asarray(gains, dtype=float)
    num_users, num_carriers = gains.shape
    capacity = num_carriers if user_capacity is None else user_capacity

    prefs = [list(np.argsort(-gains[u], kind="stable")) for u in range(num_users)]
    cursor = [0] * num_users
    held: list[list[int]] = [[] for _ in range(num_carriers)]
    matched = [0] * num_users

    def priority(user, carrier):
        return (gains[user, carrier], -user)

    active = list(range(num_users))
    while active:
        user = active.pop()
        while matched[user] < capacity and cursor[user] < num_carriers:
            carrier = prefs[user][cursor[user]]
            cursor[user] += 1
            if len(held[carrier]) < quota:
                held[carrier].append(user)
                matched[user] += 1
            else:
                worst = min(held[carrier], key=lambda u: priority(u, carrier))
                if priority(user, carrier) > priority(worst, carrier):
                    held[carrier].remove(worst)
                    matched[worst] -= 1
                    held[carrier].append(user)
                    matched[user] += 1
                    if worst not in active:
                        active.append(worst)

    assign = np.zeros((num_users, num_carriers), dtype=np.int8)
    for carrier, users in enumerate(held):
        for user in users:
            assign[user, carrier] = 1
    return assign


def uniform_power(assign_row, p_max_w: float) -> np.ndarray:
    """Split the full budget evenly over a user's assigned subcarriers."""
    assign_row = np.asarray(assign_row, dtype=float)
    k = assign_row.sum()
    return assign_row * (p_max_w / k) if k > 0 else np.zeros_like(assign_row)


def random_transmission(env: NetworkEnv, assign, power_w,
                        rng: np.random.Generator) -> np.ndarray:
    """Uniform draw over every send matrix feasible under the given radio."""
    return env.sample_feasible_send(assign, power_w, rng)


def oma_restrict(catalog: ActionCatalog) -> np.ndarray:
    """Boolean mask of catalog entries with exclusive subcarrier occupancy."""
    return np.all(catalog.assign.sum(axis=1) <= 1, axis=-1)


class SchemePolicy:
    """Full joint learner: assignment, power, and transmission all trained."""

    name = "proposed"
    learned_dims = ("assign", "power", "send")
    fixed_dims = ()

    def __init__(self, catalog: ActionCatalog):
        self.catalog = catalog

    def mask(self, env: NetworkEnv) -> np.ndarray:
        return env.feasible_mask()

    def apply(self, env: NetworkEnv, action_index: int, rng: np.random.Generator):
        return env.step(action_index)


class OmaPolicy(SchemePolicy):
    """Exclusive subcarrier occupancy; interference-free by construction.

    Expects a catalog built with quota 1 so the learner's space is the
    restriction itself.
    """

    name = "oma"


class MatchingPolicy(SchemePolicy):
    """Assignment fixed per slot by deferred acceptance on the current gains."""

    name = "matching"
    learned_dims = ("power", "send")
    fixed_dims = ("assign",)

    def __init__(self, catalog: ActionCatalog, quota: int,
                 user_capacity: int | None = None):
        super().__init__(catalog)
        self.quota = quota
        self.user_capacity = user_capacity

    def mask(self, env: NetworkEnv) -> np.ndarray:
        target = match_subcarriers(env.gains, self.quota, self.user_capacity)
        pinned = np.all(self.catalog.assign == target[None], axis=(1, 2))
        return env.feasible_mask() & pinned


class UniformPowerPolicy(SchemePolicy):
    """Power fixed to an even split of the budget; expects a catalog built
    in uniform power mode (no power dimension to learn)."""

    name = "uniform-power"
    learned_dims = ("assign", "send")
    fixed_dims = ("power",)


class RandomSendPolicy(SchemePolicy):
    """Transmission decision replaced by a uniform feasible draw each slot;
    expects a catalog without the send dimension."""

    name = "random-phi"
    learned_dims = ("assign", "power")
    fixed_dims = ("send",)

    def apply(self, env: NetworkEnv, action_index: int, rng: np.random.Generator):
        action = self.catalog.action(int(action_index))
        send = random_transmission(env, action.assign, action.power_w, rng)
        return env.step(int(action_index), send_override=send)


def build_scheme(name: str, *, num_ues: int, num_subcarriers: int,
                 num_types: int, grid: mdp.PowerGrid, p_max_w: float,
                 quota: int, max_actions: int) -> SchemePolicy:
    """Construct the catalog variant and policy adapter for one scheme."""
    if name not in SCHEME_NAMES:
        raise ValueError(f"unknown scheme {name!r}; pick one of {SCHEME_NAMES}")
    common = dict(
        num_ues=num_ues, num_subcarriers=num_subcarriers, num_types=num_types,
        grid=grid, p_max_w=p_max_w, max_actions=max_actions,
    )
    if name == "proposed":
        return SchemePolicy(mdp.build_catalog(quota=quota, **common))
    if name == "oma":
        return OmaPolicy(mdp.build_catalog(quota=1, **common))
    if name == "matching":
        return MatchingPolicy(mdp.build_catalog(quota=quota, **common), quota=quota)
    if name == "uniform-power":
        return UniformPowerPolicy(
            mdp.build_catalog(quota=quota, power_mode="uniform", **common)
        )
    return RandomSendPolicy(
        mdp.build_catalog(quota=quota, include_send=False, **common)
    )
