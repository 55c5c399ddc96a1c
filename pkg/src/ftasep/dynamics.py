"""Exact event-driven simulation of the facilitated exclusion process.

A particle at x jumps to x+1 at rate 1 when x+1 is empty and x-1 occupied;
``active bond x`` means that rate factor is 1.  All rates are unit, so the
exact Gillespie step is an Exponential(n_active) holding time plus a
uniform choice from the active set.  :class:`SimState` with :func:`step`
and :func:`apply_jump` is the Python engine; :func:`run_until` runs the
compiled kernel in :mod:`ftasep._kernel`, which consumes the identical
SplitMix64 draw sequence, so both produce bit-identical trajectories.

Segments embed windows of the integer line.  Sites outside a window are
unknown, so the leftmost bond is never active; with ``exit_right`` the
rightmost site may jump out of the window (the off-window target is treated
as empty) and is counted in ``exited``.  Influence from the open right edge
travels left with the holes, which is why the window protocols below keep a
right buffer and validate verdicts by doubling the window.

The freezing protocol attaches an independent Poisson clock to every bond,
keyed by the bond's absolute lattice coordinate (see
:meth:`ftasep.rng.RngStream.clock_generator`).  Reruns of one trial on
nested windows replay the same clock field, so when the windows agree they
agree bit-for-bit, including the freezing time of the origin.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .lattice import Configuration, Topology
from .mappings import HeightProfile, height_from_config
from .rng import RngStream

#: CSV column layout of serialized trajectory samples.
TRAJECTORY_CSV_HEADER = ("time", "n11", "n10", "n01", "n00", "n_active", "N_t")


class FrozenStateError(RuntimeError):
    """Raised when a step is requested from a configuration with no active bond."""


class KernelInvariantError(RuntimeError):
    """Raised when an in-kernel self-check (conservation, coherence, ...) fails."""


def active_bonds(config: Configuration) -> frozenset[int]:
    """Sites x with eta(x-1) = eta(x) = 1 and eta(x+1) = 0.

    Rings wrap; on segments only fully visible triples qualify, so the
    window edges contribute no bonds.  Coordinates are returned (for rings
    these equal indices).
    """
    occ = np.ascontiguousarray(config.as_array())
    found = _kernel.scan_active(occ, config.topology.is_ring, False)
    return frozenset(int(x) + config.origin for x in found)


class SimState:
    """Mutable engine state: occupancy, indexed active set, clocks and counters.

    The active set is an array with a position map, giving O(1) insert,
    delete and uniform sampling.  A state is confined to one worker at a
    time; use :meth:`config` to snapshot an immutable value.

    With ``exit_right`` (segments only) the last site may jump out of the
    window; every exit increments ``exited`` and breaks in-window particle
    conservation by design.
    """

    def __init__(self, config: Configuration, exit_right: bool = False):
        if exit_right and config.topology.is_ring:
            raise ValueError("exit_right applies to segment windows only")
        self.topology = config.topology
        self.origin = config.origin
        self.exit_right = bool(exit_right)
        self.occ = np.array(config.as_array(), dtype=np.uint8)
        self.time = 0.0
        self.event_count = 0
        self.crossings = 0
        self.exited = 0
        # bond whose jumps cross (0, 1); absent on windows not covering 0
        if self.topology.is_ring:
            self.track_bond = 0
        else:
            idx = -self.origin
            self.track_bond = idx if 0 <= idx < len(self.occ) else -1
        self._rebuild_active()

    # -- active set ----------------------------------------------------------

    def _bond_active(self, i: int) -> bool:
        occ = self.occ
        L = occ.shape[0]
        if self.topology.is_ring:
            return bool(occ[(i - 1) % L] and occ[i] and not occ[(i + 1) % L])
        if i == 0:
            return False
        if i == L - 1:
            return bool(self.exit_right and occ[L - 2] and occ[L - 1])
        return bool(occ[i - 1] and occ[i] and not occ[i + 1])

    def _rebuild_active(self) -> None:
        L = self.occ.shape[0]
        self._items: list[int] = []
        self._pos = np.full(L, -1, dtype=np.int64)
        for i in range(L):
            if self._bond_active(i):
                self._pos[i] = len(self._items)
                self._items.append(i)

    def _recheck(self, i: int) -> None:
        act = self._bond_active(i)
        p = self._pos[i]
        if act and p < 0:
            self._pos[i] = len(self._items)
            self._items.append(i)
        elif not act and p >= 0:
            last = self._items[-1]
            self._items[p] = last
            self._pos[last] = p
            self._items.pop()
            self._pos[i] = -1

    @property
    def n_active(self) -> int:
        return len(self._items)

    def active_bonds(self) -> frozenset[int]:
        return frozenset(i + self.origin for i in self._items)

    # -- snapshots -------------------------------------------------------------

    @property
    def config(self) -> Configuration:
        return Configuration(self.topology, bytes(self.occ.tolist()), self.origin)

    @property
    def particle_count(self) -> int:
        return int(self.occ.sum())


def apply_jump(state: SimState, x: int) -> SimState:
    """Swap the occupancies of sites x and x+1 (the particle at x jumps).

    ``x`` is a lattice coordinate and must be an active bond.  The active
    set is updated incrementally by re-examining only x-1 .. x+2, the only
    bonds whose rate factor reads a changed site.
    """
    L = state.occ.shape[0]
    i = (x % L) if state.topology.is_ring else (x - state.origin)
    if not 0 <= i < L or not state._bond_active(i):
        raise ValueError(f"bond {x} is not active")
    state.occ[i] = 0
    if state.topology.is_ring:
        state.occ[(i + 1) % L] = 1
    elif i == L - 1:
        state.exited += 1
    else:
        state.occ[i + 1] = 1
    if i == state.track_bond:
        state.crossings += 1
    state.event_count += 1
    for s in range(i - 1, i + 3):
        if state.topology.is_ring:
            state._recheck(s % L)
        elif 0 <= s < L:
            state._recheck(s)
    return state


def step(state: SimState, rng: RngStream) -> SimState:
    """One exact Gillespie event: Exp(n_active) holding time, uniform bond.

    Raises :class:`FrozenStateError` from an absorbing state.  Deterministic
    given (state, rng counter); draws holding time first, then the bond,
    matching the compiled kernel word for word.
    """
    n = state.n_active
    if n == 0:
        raise FrozenStateError("no active bonds; the state is absorbing")
    state.time += rng.exponential(rate=n)
    i = state._items[rng.index(n)]
    return apply_jump(state, i + state.origin)


@dataclass(frozen=True)
class StopRule:
    """Stop at t_max, after max_events, or at absorption (always)."""

    t_max: float | None = None
    max_events: int | None = None


@dataclass(frozen=True)
class SamplingPlan:
    """What to record along a run.

    ``checkpoints`` are absolute times sampled in the pre-event state;
    ``event_stride`` adds a row every so many events (requires a finite
    ``max_events``); ``snapshots`` stores full configurations per row.
    """

    checkpoints: tuple[float, ...] | None = None
    event_stride: int = 0
    snapshots: bool = False


@dataclass
class TrajectoryRecord:
    """Sampled summaries of one run; times are strictly increasing."""

    times: np.ndarray
    n11: np.ndarray
    n10: np.ndarray
    n01: np.ndarray
    n00: np.ndarray
    n_active: np.ndarray
    crossings: np.ndarray
    exited: np.ndarray
    absorbed: bool
    absorption_time: float | None
    events: int
    final_config: Configuration
    snapshots: list[tuple[float, Configuration]] | None = None

    def __post_init__(self):
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("sample times must be strictly increasing")

    def to_csv_rows(self):
        """Rows matching TRAJECTORY_CSV_HEADER."""
        for j in range(len(self.times)):
            yield (
                float(self.times[j]),
                int(self.n11[j]),
                int(self.n10[j]),
                int(self.n01[j]),
                int(self.n00[j]),
                int(self.n_active[j]),
                int(self.crossings[j]),
            )


_EVENT_CAP = 1 << 62
_ROW_CAP = 1 << 22


def run_until(
    state: SimState,
    stop: StopRule,
    rng: RngStream,
    plan: SamplingPlan | None = None,
) -> TrajectoryRecord:
    """Run the compiled kernel until the stop condition; mutate ``state``.

    The rng's scalar counter advances exactly as if :func:`step` had been
    called per event, so Python stepping and kernel runs interleave freely.
    """
    plan = plan or SamplingPlan()
    t_max = math.inf if stop.t_max is None else float(stop.t_max)
    max_events = _EVENT_CAP if stop.max_events is None else int(stop.max_events)
    cps = np.asarray(sorted(plan.checkpoints or ()), dtype=np.float64)
    if np.any(np.diff(cps) <= 0):
        raise ValueError("checkpoints must be distinct")
    stride = int(plan.event_stride)
    if stride < 0:
        raise ValueError("event_stride must be nonnegative")
    n_rows = 3 + len(cps)
    if stride:
        if max_events >= _EVENT_CAP:
            raise ValueError("event_stride sampling needs a finite max_events cap")
        n_rows += max_events // stride + 1
    if n_rows > _ROW_CAP:
        raise ValueError(f"sampling plan would emit {n_rows} rows; refine it")

    L = state.occ.shape[0]
    out = np.empty((n_rows, _kernel.N_COLS), dtype=np.float64)
    snaps = np.empty((n_rows if plan.snapshots else 0, L), dtype=np.uint8)
    viol = np.zeros(_kernel.N_VIOL, dtype=np.int64)

    t, applied, absorbed, got, crossings, exited, counter, last_event_t = (
        _kernel.run_gillespie(
            state.occ,
            state.topology.is_ring,
            state.exit_right,
            np.uint64(rng.kernel_key),
            np.uint64(rng.counter),
            state.time,
            t_max,
            np.int64(max_events),
            cps,
            np.int64(stride),
            np.int64(state.track_bond),
            np.int64(state.crossings),
            np.int64(state.exited),
            bool(plan.snapshots),
            out,
            snaps,
            viol,
        )
    )
    if viol.any():
        names = ("conservation", "active-set coherence", "n00 monotone",
                 "n11 monotone", "pair identity")
        broken = ", ".join(f"{n}={int(v)}" for n, v in zip(names, viol) if v)
        raise KernelInvariantError(f"kernel self-checks failed: {broken}")

    rng.counter = int(counter)
    state.time = float(t)
    state.event_count += int(applied)
    state.crossings = int(crossings)
    state.exited = int(exited)
    state._rebuild_active()

    rows = out[:got]
    snapshots = None
    if plan.snapshots:
        snapshots = [
            (float(rows[j, _kernel.ROW_T]),
             Configuration(state.topology, bytes(snaps[j].tolist()), state.origin))
            for j in range(got)
        ]
    return TrajectoryRecord(
        times=rows[:, _kernel.ROW_T].copy(),
        n11=rows[:, _kernel.ROW_N11].astype(np.int64),
        n10=rows[:, _kernel.ROW_N10].astype(np.int64),
        n01=rows[:, _kernel.ROW_N01].astype(np.int64),
        n00=rows[:, _kernel.ROW_N00].astype(np.int64),
        n_active=rows[:, _kernel.ROW_ACTIVE].astype(np.int64),
        crossings=rows[:, _kernel.ROW_CROSS].astype(np.int64),
        exited=rows[:, _kernel.ROW_EXITED].astype(np.int64),
        absorbed=bool(absorbed),
        absorption_time=float(last_event_t) if absorbed else None,
        events=int(applied),
        final_config=state.config,
        snapshots=snapshots,
    )


def record_sites(profile: HeightProfile) -> frozenset[int]:
    """Sites whose height is >= every height to their left in the window.

    A left-to-right running-maximum scan; the leftmost site is trivially a
    record.  Records persist under the dynamics and stay unoccupied.
    """
    out = []
    best = -10**18
    for j, h in enumerate(profile.heights):
        if h >= best:
            out.append(profile.start + j)
            best = h
    return frozenset(out)


# ---------------------------------------------------------------------------
# coupled window runs and the doubling freezing protocol
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreezeProtocol:
    """Knobs of the doubling-window freezing protocol.

    ``window_start``/``window_max`` bound the half-width M of the window
    [-M, M]; ``right_buffer`` is the exclusion zone B near the open right
    edge; a run declares frozen once [x_r, M - B] has no active bond and no
    event touched [x_r, 0] during the trailing ``quiet_fraction`` of the
    simulated time.  Verdicts (and frozen times of site 0) must agree
    between windows M and 2M, else M doubles again up to ``window_max``.
    """

    window_start: int = 64
    window_max: int = 1024
    right_buffer: int = 16
    t_max: float = 400.0
    quiet_fraction: float = 0.25


@dataclass(frozen=True)
class WindowRunReport:
    verdict: str  # "frozen" | "active_at_horizon" | "no_record"
    freeze_time: float | None
    x_r: int | None
    t_end: float
    events: int
    window: int


@dataclass(frozen=True)
class FreezeReport:
    """Outcome of the doubling protocol for one initial condition."""

    verdict: str  # "frozen" | "active" | "inconclusive"
    conclusive: bool
    freeze_time: float | None
    window: int
    x_r: int | None
    runs: tuple[WindowRunReport, ...]


class _BondClock:
    """Lazily generated Poisson(1) ring times of one bond."""

    __slots__ = ("gen", "times", "next_i")

    def __init__(self, gen: np.random.Generator):
        self.gen = gen
        self.times: list[float] = []
        self.next_i = 0

    def time_of(self, i: int) -> float:
        while len(self.times) <= i:
            base = self.times[-1] if self.times else 0.0
            for dt in self.gen.standard_exponential(16):
                base += dt
                self.times.append(base)
        return self.times[i]


class _CoupledWindowRun:
    """Graphical-construction run on window coords [lo, hi], wall at lo.

    A ring of bond c's clock fires the swap only if c is active at that
    instant; inactive rings are discarded.  The clock field is a pure
    function of (trial stream, coordinate), so two windows replay the same
    field wherever they both contain it.  The right edge is open: bond hi
    treats the off-window site as empty and exits are counted.
    """

    def __init__(self, initial: Configuration, rng: RngStream, lo: int, hi: int):
        self.lo = lo
        self.hi = hi
        self.rng = rng
        window = initial.slice_coords(lo, hi)
        self.occ = np.array(window.as_array(), dtype=np.uint8)
        self.t = 0.0
        self.events = 0
        self.exited = 0
        self.last_le0 = 0.0  # last event touching a site <= 0
        self.last_site0 = 0.0  # last change of eta(0)
        self.clocks: dict[int, _BondClock] = {}
        self.heap: list[tuple[float, int, int]] = []
        self.active: set[int] = set()
        self.active_left = 0  # active bonds with coord <= hi - B (B set in run)
        self._buffer_edge = hi  # updated by run()
        for c in range(lo, hi + 1):
            if self._bond_active(c):
                self._activate(c)

    def _bond_active(self, c: int) -> bool:
        occ, lo, hi = self.occ, self.lo, self.hi
        if c <= lo or c > hi:
            return False  # wall on the left (and eta(lo) = 0 stays 0)
        i = c - lo
        if c == hi:
            return bool(occ[i - 1] and occ[i])
        return bool(occ[i - 1] and occ[i] and not occ[i + 1])

    def _activate(self, c: int) -> None:
        clock = self.clocks.get(c)
        if clock is None:
            clock = _BondClock(self.rng.clock_generator(c))
            self.clocks[c] = clock
        while clock.time_of(clock.next_i) <= self.t:
            clock.next_i += 1  # rings during inactive stretches are discarded
        heapq.heappush(self.heap, (clock.time_of(clock.next_i), c, clock.next_i))
        self.active.add(c)
        if c <= self._buffer_edge:
            self.active_left += 1

    def _deactivate(self, c: int) -> None:
        self.active.discard(c)
        if c <= self._buffer_edge:
            self.active_left -= 1

    def _recheck(self, c: int) -> None:
        act = self._bond_active(c)
        if act and c not in self.active:
            self._activate(c)
        elif not act and c in self.active:
            self._deactivate(c)

    def run(self, params: FreezeProtocol) -> tuple[str, float]:
        """Run to a frozen declaration or the horizon; return (verdict, time)."""
        self._buffer_edge = self.hi - params.right_buffer
        self.active_left = sum(1 for c in self.active if c <= self._buffer_edge)
        qf = params.quiet_fraction
        t_max = params.t_max
        while True:
            if not self.active:
                return "frozen", self.t
            if self.active_left == 0:
                t_star = 0.0 if self.last_le0 == 0.0 else self.last_le0 / (1.0 - qf)
                bound = self.heap[0][0] if self.heap else math.inf
                if t_star <= min(bound, t_max):
                    self.t = max(self.t, t_star)
                    return "frozen", self.t
            te, c, i = heapq.heappop(self.heap)
            clock = self.clocks[c]
            if i != clock.next_i:
                continue  # superseded entry
            if te > t_max:
                self.t = t_max
                return "active_at_horizon", self.t
            self.t = te
            clock.next_i += 1
            if c not in self.active or not self._bond_active(c):
                continue  # ring at an inactive bond: discarded
            # fire the swap at bond c
            i0 = c - self.lo
            self.occ[i0] = 0
            if c == self.hi:
                self.exited += 1
            else:
                self.occ[i0 + 1] = 1
            self.events += 1
            if c <= 0:
                self.last_le0 = te
            if c in (-1, 0):
                self.last_site0 = te
            for s in range(c - 1, c + 3):
                if self.lo <= s <= self.hi:
                    self._recheck(s)
            if c in self.active:  # the fired bond always deactivates
                self._deactivate(c)


def _run_window(
    initial: Configuration, rng: RngStream, m: int, params: FreezeProtocol
) -> WindowRunReport:
    window = initial.slice_coords(-m, m)
    profile = height_from_config(window, 0)
    records = record_sites(profile)
    candidates = [x for x in records if profile.start < x <= 0]
    if not candidates:
        return WindowRunReport("no_record", None, None, 0.0, 0, m)
    x_r = max(candidates)
    if initial.value_at(x_r) != 0:
        raise AssertionError(f"record site {x_r} is occupied; height bookkeeping bug")
    sim = _CoupledWindowRun(initial, rng, x_r, m)
    verdict, t_end = sim.run(params)
    freeze_time = sim.last_site0 if verdict == "frozen" else None
    return WindowRunReport(verdict, freeze_time, x_r, t_end, sim.events, m)


def freezing_time_origin(
    initial: Configuration, rng: RngStream, params: FreezeProtocol | None = None
) -> FreezeReport:
    """Doubling-window estimate of whether (and when) site 0 freezes.

    ``initial`` is a segment window around the origin (sampled from the
    target initial law); sub-windows [-M, M] of it are simulated against the
    shared clock field.  Each run walls itself at the rightmost record
    x_r <= 0 of its initial height profile (no particle can pass a record,
    and a record site stays empty, so the wall is exact within the window).
    A window whose profile shows no usable record cannot give a verdict and
    only triggers further doubling.
    """
    params = params or FreezeProtocol()
    cover = min(-initial.origin, initial.origin + len(initial) - 1)
    if params.window_start > cover:
        raise ValueError(
            f"initial window covers [-{cover}, {cover}]; protocol needs at least "
            f"[-{params.window_start}, {params.window_start}]"
        )
    m_max = min(params.window_max, cover)
    runs: list[WindowRunReport] = []
    prev: WindowRunReport | None = None
    m = params.window_start
    while m <= m_max:
        rep = _run_window(initial, rng, m, params)
        runs.append(rep)
        if prev is not None and _verdicts_agree(prev, rep):
            verdict = "frozen" if rep.verdict == "frozen" else "active"
            return FreezeReport(
                verdict, True, rep.freeze_time, m, rep.x_r, tuple(runs)
            )
        prev = rep
        m *= 2
    last = runs[-1] if runs else None
    return FreezeReport(
        "inconclusive",
        False,
        None,
        last.window if last else 0,
        last.x_r if last else None,
        tuple(runs),
    )


def _verdicts_agree(a: WindowRunReport, b: WindowRunReport) -> bool:
    if "no_record" in (a.verdict, b.verdict):
        return False
    if a.verdict != b.verdict:
        return False
    if a.verdict == "frozen":
        return a.freeze_time == b.freeze_time  # exact: runs share the clock field
    return True


# ---------------------------------------------------------------------------
# height growth probe
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeightProbeResult:
    """Height of the origin, h(t, 0) = 2 N_t, along checkpoint times."""

    times: np.ndarray
    heights: np.ndarray
    n11: np.ndarray
    n_active: np.ndarray
    origin_frozen: bool
    events: int


def height_growth_probe(
    initial: Configuration, rng: RngStream, t_checkpoints
) -> HeightProbeResult:
    """Track h(t, 0) on a segment window with an open right edge.

    The window must be wide enough that neither edge influences the origin
    before the last checkpoint (influence moves at most a few sites per unit
    time; the callers size buffers as horizon times a safety factor).
    ``origin_frozen`` is true when no particle crossed bond (0, 1) during
    the trailing quarter of the horizon.
    """
    cps = tuple(sorted(float(t) for t in t_checkpoints))
    if not cps:
        raise ValueError("need at least one checkpoint")
    horizon = cps[-1]
    state = SimState(initial, exit_right=True)
    if state.track_bond < 0:
        raise ValueError("the window must contain coordinate 0")
    quarter = 0.75 * horizon
    plan_cps = tuple(sorted(set(cps) | {quarter}))
    rec = run_until(state, StopRule(t_max=horizon), rng, SamplingPlan(checkpoints=plan_cps))
    idx = np.searchsorted(rec.times, cps)
    idx = np.clip(idx, 0, len(rec.times) - 1)
    qi = int(np.searchsorted(rec.times, quarter))
    qi = min(qi, len(rec.times) - 1)
    frozen = bool(rec.crossings[-1] == rec.crossings[qi])
    return HeightProbeResult(
        times=np.asarray(cps),
        heights=2 * rec.crossings[idx],
        n11=rec.n11[idx],
        n_active=rec.n_active[idx],
        origin_frozen=frozen,
        events=rec.events,
    )
