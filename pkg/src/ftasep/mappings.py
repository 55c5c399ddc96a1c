"""Height-function and zero-range representations of exclusion states.

The height profile over a segment window turns occupancies into a lattice
path: h(x) - h(x-1) = 1 - 2 eta(x), anchored by h(0) = 2 N where N counts
particles that have crossed the bond (0, 1).  A jump at bond x lifts h(x)
by 2 and leaves every other height unchanged, so exclusion dynamics and
corner growth commute; the index alignment (growth site = jump bond site)
is frozen by a unit test.

The zero-range representation labels the holes of a ring configuration
cyclically from a tagged hole, H_0, H_1, ...; xi(i) = number of particles
in the gap to the left of hole i (between holes i-1 and i).  An exclusion
jump at bond x moves one xi-particle from the label of the hole at x+1 to
the next label, and the facilitation rule makes xi(i) >= 2 automatic.
Height profiles are not defined on rings (a cyclic height needs a winding
convention), and gaps at segment edges are unknown, so the zero-range map
is ring-only; ring analyses elsewhere use pair counts instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import Configuration, Topology


@dataclass(frozen=True)
class HeightProfile:
    """Integer lattice path with unit increments over a site window.

    ``heights[j]`` is the height at coordinate ``start + j``.  The absolute
    level is pinned by the crossing counter: h(0) = 2 * crossing_anchor when
    the window contains coordinate 0, else the left edge is pinned instead.
    """

    start: int
    heights: tuple[int, ...]
    crossing_anchor: int

    def __post_init__(self):
        if len(self.heights) < 1:
            raise ValueError("a height profile needs at least one site")
        for a, b in zip(self.heights, self.heights[1:]):
            if abs(b - a) != 1:
                raise ValueError(f"non-unit height increment {b - a} in profile")
        a0 = self.anchor_site
        if self.heights[a0 - self.start] != 2 * self.crossing_anchor:
            raise ValueError(
                f"height at the anchor site {a0} is {self.heights[a0 - self.start]}, "
                f"expected 2*{self.crossing_anchor}"
            )

    @property
    def end(self) -> int:
        return self.start + len(self.heights) - 1

    @property
    def anchor_site(self) -> int:
        return 0 if self.start <= 0 <= self.end else self.start

    def __len__(self) -> int:
        return len(self.heights)

    def height_at(self, x: int) -> int:
        i = x - self.start
        if not 0 <= i < len(self.heights):
            raise IndexError(f"site {x} outside profile window [{self.start}, {self.end}]")
        return self.heights[i]

    def lift(self, x: int) -> "HeightProfile":
        """Profile after corner growth at site x (height there grows by 2).

        The anchor advances when the growth happens at the counting bond.
        """
        if x not in height_jump_sites(self):
            raise ValueError(f"site {x} is not a growth site of this profile")
        h = list(self.heights)
        h[x - self.start] += 2
        anchor = self.crossing_anchor + (1 if x == 0 else 0)
        return HeightProfile(self.start, tuple(h), anchor)


def height_from_config(config: Configuration, crossing_anchor: int) -> HeightProfile:
    """Height profile of a segment window.

    The profile spans [origin - 1, origin + L - 1]; the extra left site
    carries the reference height from which the increments 1 - 2 eta(x)
    accumulate.
    """
    if config.topology.is_ring:
        raise ValueError("height profiles are defined on segment windows only")
    occ = config.as_array()
    rel = np.concatenate(([0], np.cumsum(1 - 2 * occ.astype(np.int64))))
    start = config.origin - 1
    anchor_site = 0 if start <= 0 <= start + len(rel) - 1 else start
    offset = 2 * crossing_anchor - int(rel[anchor_site - start])
    return HeightProfile(start, tuple(int(v) + offset for v in rel), crossing_anchor)


def config_from_height(profile: HeightProfile) -> tuple[Configuration, int]:
    """Inverse of :func:`height_from_config`: (configuration, crossing anchor).

    The occupancy is read off the increments, so the window loses the
    profile's leftmost site; round trips are exact.
    """
    if len(profile) < 2:
        raise ValueError("need at least two heights to read an occupancy")
    h = np.asarray(profile.heights, dtype=np.int64)
    occ = ((1 - np.diff(h)) // 2).astype(np.uint8)
    cfg = Configuration.segment(bytes(occ.tolist()), origin=profile.start + 1)
    return cfg, profile.crossing_anchor


def height_jump_sites(profile: HeightProfile) -> frozenset[int]:
    """Sites where the height may grow by 2 at rate one.

    Growth is allowed at x when h(x-2) - h(x) = 2 and h(x+1) - h(x) = 1,
    which is exactly the active-bond condition of the exclusion picture at
    the same site index.
    """
    h = profile.heights
    start = profile.start
    out = []
    for j in range(2, len(h) - 1):
        if h[j - 2] - h[j] == 2 and h[j + 1] - h[j] == 1:
            out.append(start + j)
    return frozenset(out)


@dataclass(frozen=True)
class ZeroRangeState:
    """Gap occupation numbers of a ring configuration, viewed from a tag.

    ``hole_positions[i]`` is the ring site of hole i, listed cyclically from
    the tagged hole H_0; ``occupancies[i]`` is the particle count of the gap
    between holes i-1 and i (cyclically, so label 0 owns the gap that wraps
    back to the last hole).
    """

    occupancies: tuple[int, ...]
    hole_positions: tuple[int, ...]
    ring_length: int

    def __post_init__(self):
        m = len(self.hole_positions)
        L = self.ring_length
        if m < 1:
            raise ValueError("need at least one hole")
        if len(self.occupancies) != m:
            raise ValueError("one gap per hole required")
        if any(x < 0 for x in self.occupancies):
            raise ValueError("gap occupancies must be nonnegative")
        if len(set(p % L for p in self.hole_positions)) != m:
            raise ValueError("hole positions must be distinct")
        if sum(self.occupancies) + m != L:
            raise ValueError("gap totals plus holes must tile the ring")
        for i in range(m):
            gap = (self.hole_positions[i] - self.hole_positions[i - 1] - 1) % L
            if gap != self.occupancies[i]:
                raise ValueError(
                    f"gap {i} holds {gap} sites between holes but occupancy says "
                    f"{self.occupancies[i]}"
                )

    @property
    def n_sites(self) -> int:
        return len(self.hole_positions)

    @property
    def total_particles(self) -> int:
        return sum(self.occupancies)

    @property
    def tagged_hole(self) -> int:
        return self.hole_positions[0]

    def apply_move(self, i: int) -> "ZeroRangeState":
        """Move one particle from gap i to gap i+1 (hole i steps left).

        Requires xi(i) >= 2: a gap holding a single particle has no active
        bond, so the move cannot occur.
        """
        m = self.n_sites
        if not 0 <= i < m:
            raise IndexError(f"no gap label {i}")
        if self.occupancies[i] < 2:
            raise ValueError(f"gap {i} holds {self.occupancies[i]} < 2 particles")
        xi = list(self.occupancies)
        xi[i] -= 1
        xi[(i + 1) % m] += 1
        holes = list(self.hole_positions)
        holes[i] = (holes[i] - 1) % self.ring_length
        return ZeroRangeState(tuple(xi), tuple(holes), self.ring_length)


def zero_range_from_config(config: Configuration, tagged_hole: int) -> ZeroRangeState:
    """Map a ring configuration to gap counts, labels anchored at a hole."""
    if not config.topology.is_ring:
        raise ValueError("the zero-range map is defined on rings")
    L = len(config)
    tagged_hole %= L
    if config.occupancy[tagged_hole] != 0:
        raise ValueError(f"tagged site {tagged_hole} is occupied")
    holes = [x for x in range(L) if config.occupancy[x] == 0]
    start = holes.index(tagged_hole)
    holes = holes[start:] + holes[:start]
    xi = tuple(
        (holes[i] - holes[i - 1] - 1) % L for i in range(len(holes))
    )
    return ZeroRangeState(xi, tuple(holes), L)


def config_from_zero_range(
    zr: ZeroRangeState, topology: Topology | None = None
) -> Configuration:
    """Place holes at their recorded positions; particles fill the rest."""
    if topology is not None:
        if not topology.is_ring or topology.length != zr.ring_length:
            raise ValueError(
                f"topology {topology} does not match a ring of {zr.ring_length} sites"
            )
    occ = bytearray([1]) * zr.ring_length
    for p in zr.hole_positions:
        occ[p] = 0
    return Configuration.ring(bytes(occ))


def zero_range_move_correspondence(
    config: Configuration, x: int, tagged_hole: int | None = None
) -> tuple[int, int]:
    """Gap move (i, i+1) induced by the exclusion jump at bond x.

    The jump fills the hole at x+1, whose label i loses one particle to the
    next label.  The facilitation factor eta(x-1) = 1 puts a second particle
    in gap i, so the zero-range rate condition xi(i) >= 2 holds automatically.
    Labels are anchored at ``tagged_hole`` (default: the lowest-index hole).
    """
    if not config.topology.is_ring:
        raise ValueError("the zero-range map is defined on rings")
    L = len(config)
    x %= L
    if not (
        config.occupancy[(x - 1) % L] == 1
        and config.occupancy[x] == 1
        and config.occupancy[(x + 1) % L] == 0
    ):
        raise ValueError(f"bond {x} is not active")
    if tagged_hole is None:
        tagged_hole = next(i for i in range(L) if config.occupancy[i] == 0)
    zr = zero_range_from_config(config, tagged_hole)
    i = zr.hole_positions.index((x + 1) % L)
    if zr.occupancies[i] < 2:
        raise AssertionError("active bond with a single-particle gap; mapping bug")
    return i, (i + 1) % zr.n_sites


def transport_tagged_hole(config: Configuration, x: int, tagged_hole: int) -> int:
    """Tagged-hole position after the jump at bond x (holes move left)."""
    L = len(config)
    if (x + 1) % L == tagged_hole % L:
        return x % L
    return tagged_hole % L
