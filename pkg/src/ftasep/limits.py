"""Exact subcritical limit probabilities and their Monte Carlo endpoints.

Below half filling the process freezes, and the limiting law of a finite
word is computable by induction on the word length.  Words containing 11
have limit probability zero.  The base case is the single-site marginal; a
leading 10 is a difference of two shorter evaluations and a leading 01
drops its first site (both are pure additivity).  A leading 00 regenerates
the law: a double zero persists precisely when the sites to its left never
accumulate an excess (a ballot-type walk event of probability
(1 - 2 rho)/(1 - rho)^2), and behind a permanently frozen 00 the absorbed
word to the right is a deterministic left-to-right stabilization of the
initial Bernoulli field.  :func:`_wall_law` evaluates that stabilized word
law exactly with a small dynamic program; see its docstring for the scan
rule and why the naive per-site product over-constrains the outcome.

The recursion is right-additive by construction; translation consistency
on the left is not automatic, so :func:`consistency_check` verifies both
extension directions numerically and reports the worst violation instead
of silently accepting the table.

The t -> infinity statements live on the infinite lattice; the Monte Carlo
comparisons here use absorbed ring states as the finite stand-in and carry
that caveat in their reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SamplingPlan, SimState, StopRule, run_until
from .lattice import (
    Configuration,
    PatternLike,
    alternating_config,
    as_pattern,
    count_pattern,
    is_frozen,
)
from .rng import RngStream
from .stats import wilson_interval

_DOUBLE_ONE = b"\x01\x01"


def ballot_prob(rho: float) -> float:
    """P(S_N <= 1 for all N) for the +-1 walk with up-probability rho < 1/2.

    Closed form (1 - 2 rho)/(1 - rho)^2, equivalently one minus the squared
    one-level ascent probability rho/(1 - rho).
    """
    if not 0.0 < rho < 0.5:
        raise ValueError(f"rho must lie in (0, 1/2), got {rho}")
    return (1.0 - 2.0 * rho) / (1.0 - rho) ** 2


def ballot_prob_oracle(rho: float, depth: int = 60) -> float:
    """Independent check of :func:`ballot_prob` by truncated enumeration.

    Dynamic programming over all paths staying at or below 1 for ``depth``
    steps, minus the exact geometric tail: a path alive at level s continues
    to violate eventually with probability q^(2-s), q = rho/(1-rho) the
    classical one-level ascent probability.  The raw truncation error is
    far above 1e-9 for rho near 1/2, so the tail term is not optional.
    """
    if not 0.0 < rho < 0.5:
        raise ValueError(f"rho must lie in (0, 1/2), got {rho}")
    # levels -depth .. 1, offset so index 0 is level -depth
    probs = np.zeros(depth + 2)
    probs[depth] = 1.0  # level 0
    for _ in range(depth):
        nxt = np.zeros_like(probs)
        nxt[:-1] += probs[1:] * (1.0 - rho)  # down steps
        nxt[2:] += probs[1:-1] * rho  # up steps, killed above level 1
        probs = nxt
    q = rho / (1.0 - rho)
    stay = float(probs.sum())
    levels = np.arange(-depth, 2)
    tail = float(np.sum(probs * q ** (2 - levels)))
    return stay - tail


_memo: dict[tuple[float, bytes], float] = {}
_wall_memo: dict[tuple[float, bytes], float] = {}


def limit_prob(rho: float, pattern: PatternLike) -> float:
    """Exact limiting probability of a word under the subcritical dynamics."""
    if not 0.0 < rho < 0.5:
        raise ValueError(f"rho must lie in (0, 1/2), got {rho}")
    word = as_pattern(pattern).word
    return _limit(rho, word)


def _site_factor(rho: float, bit: int) -> float:
    return rho if bit else 1.0 - rho


def _wall_law(rho: float, v: bytes) -> float:
    """Probability that the stabilized word behind a frozen 00 equals v.

    Once a 00 pair is frozen, nothing crosses it, and the sites to its
    right absorb to a configuration that depends only on their own initial
    Bernoulli values, via a left-to-right scan: a site picks up its initial
    particle into a debt counter; one particle settles at the site whenever
    debt is positive and the previous site settled empty, else the site
    settles empty and any debt is pushed right.  (A settled particle blocks
    its right neighbor, and a particle that hops past its supporter lands
    one site on and freezes, which is exactly this rule.)  The naive
    product of per-site marginals is wrong here: settled particles force
    their successors empty and push displaced particles onward, so e.g. a
    settled 10 costs only the particle's own factor, not an extra empty
    factor.  The sum over initial words is organized as a dynamic program
    over (previous emission, debt), O(len^2) states.
    """
    key = (rho, v)
    cached = _wall_memo.get(key)
    if cached is not None:
        return cached
    states = {(0, 0): 1.0}
    for bit in v:
        nxt: dict[tuple[int, int], float] = {}
        for (prev, debt), p in states.items():
            for b, pb in ((0, 1.0 - rho), (1, rho)):
                d2 = debt + b
                if prev == 0 and d2 > 0:
                    emit, state = 1, (1, d2 - 1)
                else:
                    emit, state = 0, (0, d2)
                if emit != bit:
                    continue
                nxt[state] = nxt.get(state, 0.0) + p * pb
        states = nxt
        if not states:
            break
    value = sum(states.values())
    _wall_memo[key] = value
    return value


def _limit(rho: float, w: bytes) -> float:
    if _DOUBLE_ONE in w:
        return 0.0
    key = (rho, w)
    cached = _memo.get(key)
    if cached is not None:
        return cached
    n = len(w)
    if n == 1:
        value = _site_factor(rho, w[0])
    elif w[0] == 0 and w[1] == 0:
        value = (1.0 - 2.0 * rho) * _wall_law(rho, w[2:])
    elif w[0] == 1:  # w[1] == 0, else the 11 filter caught it
        value = _limit(rho, w[1:]) - _limit(rho, b"\x00\x00" + w[2:])
    else:  # w starts 01
        value = _limit(rho, w[1:])
    _memo[key] = value
    return value


def _words_without_11(n: int):
    """All 0/1 words of length n avoiding adjacent ones."""
    def extend(prefix: bytes):
        if len(prefix) == n:
            yield prefix
            return
        yield from extend(prefix + b"\x00")
        if not prefix or prefix[-1] == 0:
            yield from extend(prefix + b"\x01")

    yield from extend(b"")


@dataclass
class LimitMeasureTable:
    """Memoized limit probabilities for all words up to length n_max.

    Only 11-free words are stored; anything containing 11 has probability
    zero identically.
    """

    rho: float
    n_max: int
    memo: dict

    def prob(self, pattern: PatternLike) -> float:
        w = as_pattern(pattern).word
        if _DOUBLE_ONE in w:
            return 0.0
        got = self.memo.get(w)
        if got is None:
            got = limit_prob(self.rho, w)
            self.memo[w] = got
        return got

    def stored_words(self) -> list[bytes]:
        return sorted(self.memo, key=lambda w: (len(w), w))


def limit_table(rho: float, n_max: int) -> LimitMeasureTable:
    """Tabulate the recursion for every word of length <= n_max."""
    if not 1 <= n_max <= 24:
        raise ValueError(f"n_max must lie in [1, 24], got {n_max}")
    memo = {}
    for n in range(1, n_max + 1):
        for w in _words_without_11(n):
            memo[w] = limit_prob(rho, w)
    return LimitMeasureTable(rho, n_max, memo)


@dataclass(frozen=True)
class ConsistencyReport:
    """Worst additivity violations of a limit table, both directions."""

    max_right: float
    argmax_right: str
    max_left: float
    argmax_left: str
    min_entry: float
    max_entry: float

    @property
    def max_violation(self) -> float:
        return max(self.max_right, self.max_left)

    def ok(self, tol: float = 1e-12) -> bool:
        return (
            self.max_violation <= tol
            and self.min_entry >= -tol
            and self.max_entry <= 1.0 + tol
        )


def consistency_check(table: LimitMeasureTable) -> ConsistencyReport:
    """Verify P(w) = P(w0) + P(w1) and P(w) = P(0w) + P(1w) for all words.

    Words containing 11 are identically zero on both sides and are skipped.
    """
    max_r = max_l = 0.0
    arg_r = arg_l = ""
    lo, hi = 1.0, 0.0
    for w in table.stored_words():
        p = table.prob(w)
        lo = min(lo, p)
        hi = max(hi, p)
        if len(w) >= table.n_max:
            continue
        r = abs(p - table.prob(w + b"\x00") - table.prob(w + b"\x01"))
        if r > max_r:
            max_r, arg_r = r, str(as_pattern(w))
        l = abs(p - table.prob(b"\x00" + w) - table.prob(b"\x01" + w))
        if l > max_l:
            max_l, arg_l = l, str(as_pattern(w))
    return ConsistencyReport(max_r, arg_r, max_l, arg_l, lo, hi)


# ---------------------------------------------------------------------------
# Monte Carlo endpoints on rings
# ---------------------------------------------------------------------------


def _uniform_sector_config(L: int, k: int, rng: RngStream) -> Configuration:
    occ = np.zeros(L, dtype=np.uint8)
    occ[rng.generator.permutation(L)[:k]] = 1
    return Configuration.ring(bytes(occ.tolist()))


def default_decay_checkpoints(L: int) -> tuple[float, ...]:
    """Doubling time grid reaching past the coarsening scale ~ L^2."""
    cps, c = [], 1.0
    while c <= 2.0 * L * L:
        cps.append(c)
        c *= 2.0
    return tuple(cps)


@dataclass(frozen=True)
class CriticalTrialOutcome:
    """One half-filled ring run: absorbed parity plus sampled pair fractions."""

    parity: str
    absorption_time: float
    events: int
    f11: np.ndarray
    f10: np.ndarray
    f01: np.ndarray
    f00: np.ndarray


def critical_absorption_trial(
    L: int, stream: RngStream, checkpoints: tuple[float, ...]
) -> CriticalTrialOutcome:
    """Run one uniform-sector trial at half filling to absorption."""
    k = L // 2
    state = SimState(_uniform_sector_config(L, k, stream))
    rec = run_until(state, StopRule(), stream, SamplingPlan(checkpoints=checkpoints))
    if not rec.absorbed:
        raise RuntimeError("critical trial did not absorb; raise the caps")
    final = rec.final_config
    if final == alternating_config(L, "even"):
        parity = "even"
    elif final == alternating_config(L, "odd"):
        parity = "odd"
    else:
        raise AssertionError(f"absorbed in a non-alternating state {final.to_string()}")
    idx = np.searchsorted(rec.times, checkpoints)
    idx = np.clip(idx, 0, len(rec.times) - 1)
    return CriticalTrialOutcome(
        parity=parity,
        absorption_time=rec.absorption_time,
        events=rec.events,
        f11=rec.n11[idx] / L,
        f10=rec.n10[idx] / L,
        f01=rec.n01[idx] / L,
        f00=rec.n00[idx] / L,
    )


@dataclass
class CriticalAbsorptionStats:
    """Per-trial absorption outcomes at half filling plus pooled decay."""

    L: int
    trials: int
    parity: list[str]
    absorption_times: np.ndarray
    events: np.ndarray
    checkpoints: np.ndarray
    mean_f11: np.ndarray
    mean_f10: np.ndarray
    mean_f01: np.ndarray
    mean_f00: np.ndarray

    @property
    def even_fraction(self) -> float:
        return sum(1 for p in self.parity if p == "even") / self.trials

    def wilson(self, confidence: float = 0.95) -> tuple[float, float]:
        even = sum(1 for p in self.parity if p == "even")
        return wilson_interval(even, self.trials, confidence)


def critical_absorption_stats(
    L: int,
    trials: int,
    rng: RngStream,
    checkpoints: tuple[float, ...] | None = None,
) -> CriticalAbsorptionStats:
    """Run half-filled rings to absorption; record parity and pair decay.

    The initial law is uniform over the (L, L/2) sector.  Trial t uses the
    stream (rng.root_seed, rng.stream_id + t).  The only frozen states at
    half filling are the two alternating configurations; each trial asserts
    it landed on one and records which parity carries the particles.
    """
    if L % 2 != 0:
        raise ValueError("critical absorption needs even L")
    if trials < 1:
        raise ValueError("need at least one trial")
    checkpoints = tuple(sorted(checkpoints or default_decay_checkpoints(L)))
    outcomes = [
        critical_absorption_trial(L, RngStream(rng.root_seed, rng.stream_id + t), checkpoints)
        for t in range(trials)
    ]
    return CriticalAbsorptionStats(
        L=L,
        trials=trials,
        parity=[o.parity for o in outcomes],
        absorption_times=np.array([o.absorption_time for o in outcomes]),
        events=np.array([o.events for o in outcomes]),
        checkpoints=np.asarray(checkpoints),
        mean_f11=np.mean([o.f11 for o in outcomes], axis=0),
        mean_f10=np.mean([o.f10 for o in outcomes], axis=0),
        mean_f01=np.mean([o.f01 for o in outcomes], axis=0),
        mean_f00=np.mean([o.f00 for o in outcomes], axis=0),
    )


@dataclass(frozen=True)
class PatternComparison:
    pattern: str
    expected: float
    observed: float
    stderr: float
    z: float
    wilson_lo: float
    wilson_hi: float


@dataclass
class SubcriticalCompareReport:
    """Absorbed-state word frequencies against the exact recursion.

    z-scores use the spread of per-trial frequencies (occurrences within one
    ring are correlated, so pooled binomial errors would be too tight); the
    pooled Wilson interval is reported alongside.
    """

    rho: float
    L: int
    trials: int
    rows: list[PatternComparison]
    caveat: str = (
        "absorbed ring states stand in for the infinite-lattice limit; "
        "expect O(1/L) finite-size bias on top of the statistical error"
    )

    @property
    def max_abs_z(self) -> float:
        return max(abs(r.z) for r in self.rows)


def subcritical_absorb_trial(L: int, k: int, stream: RngStream) -> Configuration:
    """One uniform-sector ring trial run to its frozen state."""
    state = SimState(_uniform_sector_config(L, k, stream))
    rec = run_until(state, StopRule(), stream)
    if not rec.absorbed:
        raise RuntimeError("subcritical trial did not absorb")
    if not is_frozen(rec.final_config):
        raise AssertionError("run_until returned absorbed on an active state")
    return rec.final_config


def compare_final_frequencies(
    rho: float, L: int, finals: list[Configuration], n_pattern_max: int
) -> list[PatternComparison]:
    """Pooled word frequencies of frozen states against the exact recursion."""
    trials = len(finals)
    rows = []
    for n in range(1, n_pattern_max + 1):
        for word_int in range(2**n):
            word = format(word_int, f"0{n}b")
            expected = limit_prob(rho, word)
            counts = np.array([count_pattern(c, word) for c in finals], dtype=float)
            freqs = counts / L
            observed = float(freqs.mean())
            sd = float(freqs.std(ddof=1)) if trials > 1 else 0.0
            se = sd / np.sqrt(trials)
            # absorbed rings pin many frequencies exactly (no-11 states have
            # n10 = n01 = k, n00 = L - 2k); score those at float tolerance
            diff = observed - expected
            if abs(diff) <= 1e-12:
                z = 0.0
            elif se > 1e-12:
                z = diff / se
            else:
                z = math.inf
            lo, hi = wilson_interval(int(counts.sum()), trials * L)
            rows.append(
                PatternComparison(word, expected, observed, se, float(z), lo, hi)
            )
    return rows


def subcritical_empirical_compare(
    rho: float,
    L: int,
    trials: int,
    rng: RngStream,
    n_pattern_max: int = 3,
) -> SubcriticalCompareReport:
    """Absorb ring trials at density rho < 1/2 and compare word frequencies.

    The initial law is uniform over the (L, round(rho L)) sector; final
    frozen states are pooled over cyclic positions and trials.
    """
    if not 0.0 < rho < 0.5:
        raise ValueError(f"rho must lie in (0, 1/2), got {rho}")
    k = round(rho * L)
    finals = [
        subcritical_absorb_trial(L, k, RngStream(rng.root_seed, rng.stream_id + t))
        for t in range(trials)
    ]
    rows = compare_final_frequencies(rho, L, finals, n_pattern_max)
    return SubcriticalCompareReport(rho, L, trials, rows)
