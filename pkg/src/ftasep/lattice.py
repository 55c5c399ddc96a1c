"""Lattice states: 0/1 occupancy words on rings and segments.

A :class:`Configuration` is an immutable occupancy word together with its
topology.  Rings are cyclic; segments are finite windows embedded in the
integer line, with ``origin`` giving the lattice coordinate of index 0.
Sites outside a segment window are unknown: predicates that would need them
(``is_frozen`` near the edges, pattern counts) evaluate fully visible
positions only.

Equality of configurations and patterns is bytewise; in particular ring
equality is literal, not up to rotation, so the two alternating absorbing
words stay distinguishable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

RING = "ring"
SEGMENT = "segment"


@dataclass(frozen=True)
class Topology:
    """Ring or segment of ``length`` sites."""

    kind: str
    length: int

    def __post_init__(self):
        if self.kind not in (RING, SEGMENT):
            raise ValueError(f"unknown topology kind {self.kind!r}")
        if self.length < 1:
            raise ValueError("length must be positive")
        if self.kind == RING and self.length < 3:
            raise ValueError("a ring needs at least 3 sites (an active bond reads 3)")

    @classmethod
    def ring(cls, length: int) -> "Topology":
        return cls(RING, length)

    @classmethod
    def segment(cls, length: int) -> "Topology":
        return cls(SEGMENT, length)

    @property
    def is_ring(self) -> bool:
        return self.kind == RING


def _to_bits(values: Union[str, bytes, Sequence[int]]) -> bytes:
    if isinstance(values, str):
        if not set(values) <= {"0", "1"}:
            raise ValueError(f"occupancy string must be over '0'/'1', got {values!r}")
        return bytes(1 if c == "1" else 0 for c in values)
    if isinstance(values, (bytes, bytearray)):
        out = bytes(values)
    else:
        out = bytes(int(v) for v in values)
    if any(b not in (0, 1) for b in out):
        raise ValueError("occupancy values must be 0 or 1")
    return out


@dataclass(frozen=True)
class Pattern:
    """Finite 0/1 word used for occurrence counts and cylinder events."""

    word: bytes

    def __post_init__(self):
        if len(self.word) == 0:
            raise ValueError("pattern must be nonempty")
        if any(b not in (0, 1) for b in self.word):
            raise ValueError("pattern values must be 0 or 1")

    @classmethod
    def from_string(cls, s: str) -> "Pattern":
        return cls(_to_bits(s))

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.word)


PatternLike = Union[Pattern, str, bytes, Sequence[int]]


def as_pattern(p: PatternLike) -> Pattern:
    if isinstance(p, Pattern):
        return p
    return Pattern(_to_bits(p))


@dataclass(frozen=True)
class Configuration:
    """Immutable occupancy word with topology.

    ``occupancy[i]`` is the value at lattice coordinate ``origin + i``
    (rings keep ``origin = 0`` and wrap indices mod L).
    """

    topology: Topology
    occupancy: bytes
    origin: int = 0

    def __post_init__(self):
        if len(self.occupancy) != self.topology.length:
            raise ValueError(
                f"occupancy has {len(self.occupancy)} sites, topology says "
                f"{self.topology.length}"
            )
        if any(b not in (0, 1) for b in self.occupancy):
            raise ValueError("occupancy values must be 0 or 1")
        if self.topology.is_ring and self.origin != 0:
            raise ValueError("rings have no origin offset")

    @classmethod
    def ring(cls, values: Union[str, bytes, Sequence[int]]) -> "Configuration":
        bits = _to_bits(values)
        return cls(Topology.ring(len(bits)), bits)

    @classmethod
    def segment(
        cls, values: Union[str, bytes, Sequence[int]], origin: int = 0
    ) -> "Configuration":
        bits = _to_bits(values)
        return cls(Topology.segment(len(bits)), bits, origin)

    # -- basic queries -------------------------------------------------------

    def __len__(self) -> int:
        return self.topology.length

    def __getitem__(self, index: int) -> int:
        if self.topology.is_ring:
            return self.occupancy[index % len(self)]
        return self.occupancy[index]

    @property
    def particle_count(self) -> int:
        return sum(self.occupancy)

    def as_array(self) -> np.ndarray:
        """Read-only uint8 view of the occupancy word."""
        arr = np.frombuffer(self.occupancy, dtype=np.uint8)
        arr.flags.writeable = False
        return arr

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.occupancy)

    @property
    def coords(self) -> range:
        """Lattice coordinates covered by the window (segments)."""
        return range(self.origin, self.origin + len(self))

    def value_at(self, coord: int) -> int:
        """Occupancy at lattice coordinate ``coord``."""
        if self.topology.is_ring:
            return self.occupancy[coord % len(self)]
        i = coord - self.origin
        if not 0 <= i < len(self):
            raise IndexError(f"coordinate {coord} outside window {self.coords}")
        return self.occupancy[i]

    def slice_coords(self, lo: int, hi: int) -> "Configuration":
        """Sub-window [lo, hi] of a segment, as a new segment configuration."""
        if self.topology.is_ring:
            raise ValueError("slice_coords is a segment operation")
        i, j = lo - self.origin, hi - self.origin
        if not (0 <= i <= j < len(self)):
            raise ValueError(f"[{lo}, {hi}] not contained in window {self.coords}")
        return Configuration.segment(self.occupancy[i : j + 1], origin=lo)


def shift(config: Configuration, x: int) -> Configuration:
    """Spatial shift: the result at site y holds the old value at x + y.

    Rings rotate cyclically; for a segment the occupancy is unchanged and
    the window slides (new origin = origin - x).
    """
    if config.topology.is_ring:
        L = len(config)
        r = x % L
        occ = config.occupancy[r:] + config.occupancy[:r]
        return Configuration(config.topology, occ)
    return Configuration(config.topology, config.occupancy, config.origin - x)


def count_pattern(config: Configuration, pattern: PatternLike) -> int:
    """Number of occurrences of ``pattern``.

    Rings scan all L positions with wraparound; segments scan the
    L - len(pattern) + 1 fully visible positions.
    """
    pat = as_pattern(pattern)
    occ = config.as_array()
    L = len(config)
    m = len(pat)
    target = np.frombuffer(pat.word, dtype=np.uint8)
    if config.topology.is_ring:
        idx = (np.arange(L)[:, None] + np.arange(m)[None, :]) % L
        return int(np.all(occ[idx] == target, axis=1).sum())
    if m > L:
        raise ValueError(f"pattern of length {m} does not fit a segment of {L} sites")
    matches = np.ones(L - m + 1, dtype=bool)
    for i in range(m):
        matches &= occ[i : i + L - m + 1] == target[i]
    return int(matches.sum())


def pair_counts(config: Configuration) -> tuple[int, int, int, int]:
    """Adjacent-pair counts (n11, n10, n01, n00) on a ring.

    Satisfies n11 + n10 + n01 + n00 = L, n10 = n01 and n11 - n00 = 2k - L.
    """
    if not config.topology.is_ring:
        raise ValueError("pair_counts is defined on rings")
    a = config.as_array().astype(np.int64)
    b = np.roll(a, -1)
    n11 = int(np.sum(a & b))
    n10 = int(np.sum(a & (1 - b)))
    n01 = int(np.sum((1 - a) & b))
    n00 = int(np.sum((1 - a) & (1 - b)))
    return n11, n10, n01, n00


def alternating_config(L: int, parity: str) -> Configuration:
    """Ring of even length with particles on all sites of the given parity."""
    if L % 2 != 0:
        raise ValueError("alternating configurations need even L")
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    offset = 0 if parity == "even" else 1
    bits = bytes(1 if (x % 2) == offset else 0 for x in range(L))
    return Configuration.ring(bits)


def is_frozen(config: Configuration) -> bool:
    """True iff the word contains no occurrence of 110.

    The jump rate at x is η(x-1)η(x)(1-η(x+1)); a configuration without the
    110 motif has no active bond and the dynamics never leaves it.  On
    segments only fully visible triples are examined.
    """
    return count_pattern(config, "110") == 0


def is_no_adjacent_zeros(config: Configuration) -> bool:
    """True iff the word contains no 00 pair (maximal-island states)."""
    return count_pattern(config, "00") == 0


def first_double_zero(config: Configuration) -> int | None:
    """Least coordinate m > 0 with η(m-1) = η(m) = 0, or None if absent.

    Segment windows only; both m-1 and m must be visible.
    """
    if config.topology.is_ring:
        raise ValueError("first_double_zero is a segment operation")
    occ = config.as_array()
    pair = (occ[:-1] == 0) & (occ[1:] == 0)
    coords = config.origin + 1 + np.nonzero(pair)[0]
    coords = coords[coords > 0]
    return int(coords[0]) if coords.size else None
