"""Per-user packet generation, buffering, and information-age bookkeeping.

Each user terminal holds at most one packet per information type.  When a
type regenerates while an old packet of the same type is still buffered, the
old packet is overwritten in place (drop-and-replace).  Ages advance in whole
slots and saturate at a finite ceiling so the cold-start condition (nothing
received yet) stays representable in reward arithmetic.

All operations are elementwise over a trailing type axis, so they work
unchanged for a single user (shape ``(F,)``) or a stacked cell (``(M, F)``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class BufferOverflowError(RuntimeError):
    """Buffered packets exceed the buffer capacity (illegal state)."""


class InfeasibleTransmissionError(ValueError):
    """A send decision refers to a packet that is neither buffered nor new."""


@dataclass(frozen=True)
class InfoConfig:
    """Static description of the information types a user produces.

    num_types: number of independent information types per user.
    packet_bits: per-type packet size in bits, shape ``(num_types,)``.
    buffer_bits: per-user buffer capacity in bits.
    slot_s: scheduling slot duration in seconds.
    age_cap_slots: saturation ceiling for ages, in slots.
    """

    num_types: int
    packet_bits: np.ndarray
    buffer_bits: float
    slot_s: float
    age_cap_slots: int

    def __post_init__(self):
        bits = np.asarray(self.packet_bits, dtype=float)
        object.__setattr__(self, "packet_bits", bits)
        if self.num_types < 1:
            raise ValueError("num_types must be >= 1")
        if bits.shape != (self.num_types,):
            raise ValueError("packet_bits must have one entry per type")
        if np.any(bits <= 0):
            raise ValueError("packet sizes must be positive")
        if self.buffer_bits < bits.max():
            raise ValueError("buffer must hold at least the largest packet")
        if self.slot_s <= 0:
            raise ValueError("slot_s must be positive")
        if self.age_cap_slots < 1:
            raise ValueError("age_cap_slots must be >= 1")

    @property
    def age_cap_s(self) -> float:
        return self.age_cap_slots * self.slot_s


@dataclass
class UeState:
    """Mutable per-user bookkeeping.

    update_flags: 0/1 per type, packet freshly generated this slot.
    buffered_flags: 0/1 per type, packet held over from earlier slots.
    free_bits: unused buffer space, always buffer_bits - sum(buffered * sizes).
    age_s: per-type information age in seconds, multiples of slot_s.
    gen_slot: slot index when the buffered packet of each type was generated,
        -1 where no packet is buffered.
    """

    update_flags: np.ndarray
    buffered_flags: np.ndarray
    free_bits: float
    age_s: np.ndarray
    gen_slot: np.ndarray

    @classmethod
    def initial(cls, cfg: InfoConfig) -> "UeState":
        f = cfg.num_types
        return cls(
            update_flags=np.zeros(f, dtype=np.int8),
            buffered_flags=np.zeros(f, dtype=np.int8),
            free_bits=float(cfg.buffer_bits),
            age_s=np.full(f, cfg.age_cap_s),
            gen_slot=np.full(f, -1, dtype=np.int64),
        )


def generate_updates(rng: np.random.Generator, num_types: int, size=None) -> np.ndarray:
    """Draw fresh-packet flags uniformly over the power set of types.

    Independent fair bits per type make every subset equally likely
    (probability 2**-num_types).  ``size`` may add leading axes, e.g. one row
    per user.
    """
    shape = (num_types,) if size is None else (*np.atleast_1d(size), num_types)
    return rng.integers(0, 2, size=shape, dtype=np.int8)


def check_transmission_feasible(buffered_prev, update_flags, send_flags) -> bool:
    """A packet may be sent only if it is buffered or freshly generated."""
    buffered_prev = np.asarray(buffered_prev)
    update_flags = np.asarray(update_flags)
    send_flags = np.asarray(send_flags)
    return bool(np.all(send_flags <= (buffered_prev | update_flags)))


def apply_buffer_update(buffered_prev, update_flags, send_flags) -> np.ndarray:
    """One-slot buffer recursion: presence = (held or new) xor sent.

    Same-type regeneration overwrites the old packet in place, so presence
    stays binary.  Raises if the send decision is infeasible.
    """
    buffered_prev = np.asarray(buffered_prev, dtype=np.int8)
    update_flags = np.asarray(update_flags, dtype=np.int8)
    send_flags = np.asarray(send_flags, dtype=np.int8)
    if not check_transmission_feasible(buffered_prev, update_flags, send_flags):
        raise InfeasibleTransmissionError(
            "send decision targets a type with no buffered or fresh packet"
        )
    return (buffered_prev | update_flags) ^ send_flags


def free_buffer_space(buffered_flags, packet_bits, buffer_bits) -> np.ndarray | float:
    """Unused buffer space in bits; negative space is an illegal state."""
    buffered_flags = np.asarray(buffered_flags)
    packet_bits = np.asarray(packet_bits, dtype=float)
    free = buffer_bits - np.sum(buffered_flags * packet_bits, axis=-1)
    if np.any(free < 0):
        raise BufferOverflowError(
            f"buffered packets exceed capacity by {-np.min(free):g} bits"
        )
    return free if np.ndim(free) else float(free)


def suppress_overflow_updates(buffered_prev, update_flags, packet_bits, buffer_bits):
    """Drop fresh packets that would not fit next to the held ones.

    Only types that are new and not already buffered consume extra space
    (same-type regeneration replaces in place).  When space runs out, fresh
    packets are dropped lowest type index first.  Returns the admitted flags.
    """
    buffered_prev = np.asarray(buffered_prev, dtype=np.int8)
    update_flags = np.asarray(update_flags, dtype=np.int8)
    packet_bits = np.asarray(packet_bits, dtype=float)
    admitted = update_flags.copy()
    if admitted.ndim == 1:
        admitted = admitted[None, :]
        buffered_prev = np.asarray(buffered_prev, dtype=np.int8)[None, :]
        squeeze = True
    else:
        squeeze = False
    for row in range(admitted.shape[0]):
        held = buffered_prev[row]
        occupancy = float(np.sum((held | admitted[row]) * packet_bits))
        f = 0
        while occupancy > buffer_bits and f < admitted.shape[1]:
            if admitted[row, f] and not held[f]:
                admitted[row, f] = 0
                occupancy -= packet_bits[f]
            f += 1
        if occupancy > buffer_bits:
            raise BufferOverflowError("held packets alone exceed capacity")
    return admitted[0] if squeeze else admitted


def update_aoi(age_s, gen_slot, send_flags, update_flags, t: int, cfg: InfoConfig):
    """Advance per-type ages for slot ``t`` and refresh generation stamps.

    send & fresh   -> age resets to one slot (generated and delivered now).
    send & stale   -> age is the stored packet's full sojourn, inclusive of
                      its generation slot, read from the timestamp.
    no send        -> age grows by one slot, saturating at the ceiling.

    Returns ``(age_s, gen_slot)`` as new arrays.  ``gen_slot`` is stamped
    ``t`` wherever a fresh packet stays in the buffer, and cleared wherever
    the buffer slot empties.
    """
    age_s = np.asarray(age_s, dtype=float)
    gen_slot = np.asarray(gen_slot, dtype=np.int64)
    send_flags = np.asarray(send_flags, dtype=np.int8)
    update_flags = np.asarray(update_flags, dtype=np.int8)

    stale_send = (send_flags == 1) & (update_flags == 0)
    if np.any(stale_send & (gen_slot < 0)):
        raise InfeasibleTransmissionError(
            "stale transmission without a generation timestamp"
        )

    cap = cfg.age_cap_s
    delta = cfg.slot_s
    grown = np.minimum(age_s + delta, cap)
    sojourn = np.minimum((t - gen_slot + 1) * delta, cap)
    new_age = np.where(
        send_flags == 1,
        np.where(update_flags == 1, delta, sojourn),
        grown,
    )
    new_gen = np.where(
        (update_flags == 1) & (send_flags == 0),
        np.int64(t),
        np.where(send_flags == 1, np.int64(-1), gen_slot),
    )
    return new_age, new_gen


def average_aoi(age_s) -> float:
    """Arithmetic mean age over every (user, type) entry, in seconds."""
    return float(np.mean(np.asarray(age_s, dtype=float)))


def transmitted_ratio(transmitted: int, generated: int) -> float:
    """Fraction of generated packets that were actually sent, in [0, 1].

    The complement is the dropped fraction.  Undefined until at least one
    packet has been generated.
    """
    if generated <= 0:
        raise ValueError("transmitted_ratio undefined: no packets generated")
    return transmitted / generated
