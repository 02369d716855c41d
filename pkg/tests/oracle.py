"""Independent reference implementations used to check the package.

Everything here is deliberately dumb: scalar loops, full-lattice
enumeration, no reuse of the package's vectorized code paths.
"""

import itertools
import math

import numpy as np


def sinr_direct(powers, gains, assigned, spacing_hz, noise_psd):
    """Scalar-loop SINR: weaker co-assigned users interfere, ties broken so
    the lower index counts as stronger."""
    num_users, num_carriers = np.asarray(gains).shape
    out = np.zeros((num_users, num_carriers))
    for m in range(num_users):
        for n in range(num_carriers):
            if not assigned[m][n]:
                continue
            interference = 0.0
            for k in range(num_users):
                if k == m or not assigned[k][n]:
                    continue
                weaker = gains[k][n] < gains[m][n] or (
                    gains[k][n] == gains[m][n] and k > m
                )
                if weaker:
                    interference += powers[k][n] * gains[k][n]
            out[m][n] = powers[m][n] * gains[m][n] / (
                spacing_hz * noise_psd + interference
            )
    return out


def rates_direct(powers, gains, assigned, spacing_hz, noise_psd):
    snr = sinr_direct(powers, gains, assigned, spacing_hz, noise_psd)
    num_users, num_carriers = snr.shape
    return [
        spacing_hz
        * sum(
            assigned[m][n] * math.log2(1.0 + snr[m][n])
            for n in range(num_carriers)
        )
        for m in range(num_users)
    ]


def enumerate_feasible_direct(env, grid):
    """Filter the raw (assignment, power index, send) lattice against every
    scheduling constraint, returning the surviving action keys."""
    radio = env.radio_cfg
    comp = env.comp_cfg
    cfg = env.info_cfg
    num_users = env.num_ues
    num_carriers = radio.num_subcarriers
    num_types = cfg.num_types
    grid_levels = [float(v) for v in grid.levels]
    q = len(grid_levels) - 1

    avail = (env.buffered | env.update_flags).astype(int)
    bits = [float(b) for b in cfg.packet_bits]
    gains = env.gains

    keys = set()
    cells = num_users * num_carriers
    for rho_flat in itertools.product((0, 1), repeat=cells):
        rho = [list(rho_flat[u * num_carriers:(u + 1) * num_carriers])
               for u in range(num_users)]
        for p_flat in itertools.product(range(q + 1), repeat=cells):
            p_idx = [list(p_flat[u * num_carriers:(u + 1) * num_carriers])
                     for u in range(num_users)]
            structural = all(
                p_idx[u][n] == 0 or rho[u][n] == 1
                for u in range(num_users) for n in range(num_carriers)
            )
            if not structural:
                continue
            quota_ok = all(
                sum(rho[u][n] for u in range(num_users)) <= radio.quota
                for n in range(num_carriers)
            )
            if not quota_ok:
                continue
            powers = [[grid_levels[p_idx[u][n]] for n in range(num_carriers)]
                      for u in range(num_users)]
            budget_ok = all(
                sum(rho[u][n] * powers[u][n] for n in range(num_carriers))
                <= radio.p_max_w
                for u in range(num_users)
            )
            if not budget_ok:
                continue
            rates = rates_direct(powers, gains, rho, radio.spacing_hz,
                                 radio.noise_psd_w_hz)
            for send_flat in itertools.product((0, 1), repeat=num_users * num_types):
                send = [list(send_flat[u * num_types:(u + 1) * num_types])
                        for u in range(num_users)]
                if not all(
                    send[u][f] <= avail[u][f]
                    for u in range(num_users) for f in range(num_types)
                ):
                    continue
                leftover_ok = all(
                    sum((avail[u][f] and not send[u][f]) * bits[f]
                        for f in range(num_types)) <= cfg.buffer_bits
                    for u in range(num_users)
                )
                if not leftover_ok:
                    continue
                total_bits = sum(
                    send[u][f] * bits[f]
                    for u in range(num_users) for f in range(num_types)
                )
                if total_bits * comp.cycles_per_bit / cfg.slot_s > comp.cpu_hz:
                    continue
                rate_ok = all(
                    sum(send[u][f] * bits[f] for f in range(num_types))
                    <= rates[u] * cfg.slot_s
                    for u in range(num_users)
                )
                if not rate_ok:
                    continue
                keys.add((
                    tuple(v for row in rho for v in row),
                    tuple(v for row in p_idx for v in row),
                    tuple(v for row in send for v in row),
                ))
    return keys


def find_blocking_pair(gains, assign, quota, user_capacity=None):
    """Exhaustive blocking-pair search for a gain-priority matching.

    A pair (user, carrier) blocks when the user has spare capacity and is
    not on the carrier, while the carrier has a free slot or holds someone
    with strictly lower (gain, -index) priority.
    """
    gains = np.asarray(gains, dtype=float)
    num_users, num_carriers = gains.shape
    capacity = num_carriers if user_capacity is None else user_capacity
    for u in range(num_users):
        degree = int(assign[u].sum())
        for n in range(num_carriers):
            if assign[u][n]:
                continue
            wants = degree < capacity
            if not wants:
                continue
            holders = [k for k in range(num_users) if assign[k][n]]
            if len(holders) < quota:
                return (u, n)
            for k in holders:
                if (gains[u, n], -u) > (gains[k, n], -k):
                    return (u, n)
    return None
