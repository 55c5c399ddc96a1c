"""Seeded, replayable random streams.

Every random draw in the package flows through an :class:`RngStream` keyed
by ``(root_seed, stream_id)``; there is no global randomness source.  A
stream exposes two channels, both pure functions of the key pair:

* a scalar channel backed by a SplitMix64 counter sequence, consumed by the
  event kernels (``next_u64`` / ``exponential`` / ``index``).  ``counter``
  is the number of 64-bit words drawn so far and can be handed to a kernel
  and synced back, so Python-side stepping and the compiled kernel replay
  the exact same sequence.
* an array channel backed by numpy's counter-based Philox generator
  (``generator``), used for bulk sampling of initial conditions.

``clock_generator(coord)`` derives an independent child stream per lattice
coordinate.  The coupled segment engine attaches one Poisson clock to every
bond; keying the clock by the absolute coordinate (not the window index)
makes nested-window reruns of the same trial agree wherever boundary
influence has not reached.
"""

from __future__ import annotations

import math

import numpy as np

_MASK = (1 << 64) - 1

#: SplitMix64 counter increment (the golden-ratio gamma).
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

# Channel tags; keep distinct so derived streams never collide.
_KERNEL_CHANNEL = 1
_CLOCK_CHANNEL = 2
# Clock streams are keyed by signed site coordinate, shifted nonnegative.
_COORD_OFFSET = 1 << 40


def mix64(z: int) -> int:
    """SplitMix64 finalizer: a bijective mix of one 64-bit word."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def unit_from_u64(z: int) -> float:
    """Map a 64-bit word to a double strictly inside (0, 1).

    (k + 0.5) * 2^-52 is exactly representable for k < 2^52, so the result
    lies in [2^-53, 1 - 2^-53] with no rounding to the endpoints.
    """
    return ((z >> 12) + 0.5) * 2.0**-52


def index_from_u64(z: int, n: int) -> int:
    """Map a 64-bit word to an index in ``[0, n)`` (multiply-shift)."""
    return ((z >> 32) * n) >> 32


class RngStream:
    """Deterministic random stream keyed by ``(root_seed, stream_id)``.

    ``stream_id`` is conventionally the trial index.  Identical key pairs
    replay identical draw sequences on every channel, independent of thread
    scheduling or worker count.
    """

    def __init__(self, root_seed: int, stream_id: int = 0, counter: int = 0):
        self.root_seed = int(root_seed) & _MASK
        self.stream_id = int(stream_id) & _MASK
        self.counter = int(counter)
        self._kernel_key: int | None = None
        self._generator: np.random.Generator | None = None

    def __repr__(self) -> str:
        return (
            f"RngStream(root_seed={self.root_seed}, stream_id={self.stream_id}, "
            f"counter={self.counter})"
        )

    # -- scalar channel ----------------------------------------------------

    @property
    def kernel_key(self) -> int:
        """64-bit key of the scalar channel (shared with the numba kernels)."""
        if self._kernel_key is None:
            ss = np.random.SeedSequence(
                self.root_seed, spawn_key=(self.stream_id, _KERNEL_CHANNEL)
            )
            self._kernel_key = int(ss.generate_state(1, np.uint64)[0])
        return self._kernel_key

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.kernel_key + self.counter * GOLDEN_GAMMA) & _MASK)

    def uniform(self) -> float:
        """One double in (0, 1)."""
        return unit_from_u64(self.next_u64())

    def exponential(self, rate: float = 1.0) -> float:
        """One Exponential(rate) holding time."""
        if rate <= 0.0:
            raise ValueError(f"rate must be positive, got {rate}")
        return -math.log(self.uniform()) / rate

    def index(self, n: int) -> int:
        """One uniform index in ``[0, n)``."""
        if n <= 0:
            raise ValueError(f"n must be positive, got {n}")
        return index_from_u64(self.next_u64(), n)

    # -- array channel -----------------------------------------------------

    @property
    def generator(self) -> np.random.Generator:
        """Counter-based numpy generator for vectorized sampling."""
        if self._generator is None:
            key = np.array([self.root_seed, self.stream_id], dtype=np.uint64)
            self._generator = np.random.Generator(np.random.Philox(key=key))
        return self._generator

    # -- derived streams ----------------------------------------------------

    def clock_generator(self, coord: int) -> np.random.Generator:
        """Independent generator for the Poisson clock at lattice ``coord``."""
        ss = np.random.SeedSequence(
            self.root_seed,
            spawn_key=(self.stream_id, _CLOCK_CHANNEL, coord + _COORD_OFFSET),
        )
        return np.random.Generator(np.random.Philox(ss))
