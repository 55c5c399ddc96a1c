"""Invariant measures: samplers, exact cylinder probabilities, generator
expectations, and exact stationary analysis of small rings.

Above half filling the process has a family of renewal invariant measures
supported on the no-double-zero configurations: gaps between successive
holes are i.i.d. geometric.  Operationally these are the cylinder laws of a
two-state Markov chain with p(0,1) = 1, p(1,1) = (2 rho - 1)/rho and
stationary marginal (1 - rho, rho); both the sampler and the exact
probabilities below use that chain form, and the density relation
1/(1 - phi) + 1 = 1/(1 - rho) ties the chain back to the renewal gaps.

Invariance is checked as a machine-precision identity, never by sampling:
``generator_expectation`` evaluates the generator expectation of a cylinder
function as a finite signed sum over words on the support window extended
by two sites left and one right.

Ring sectors (L, k) are analyzed exactly: the generator matrix is built
state by state, communicating classes come from a strongly-connected
decomposition, and stationary rows / absorption probabilities from dense
linear solves with a residual check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .lattice import (
    Configuration,
    Pattern,
    PatternLike,
    as_pattern,
    count_pattern,
    is_frozen,
    is_no_adjacent_zeros,
)
from .rng import RngStream

#: a translation-invariant measure, as a map from finite words to probabilities
WordMeasure = Callable[[PatternLike], float]

SECTOR_STATE_CAP = 4000


class NumericalCheckError(RuntimeError):
    """An exact linear-algebra step exceeded its residual tolerance."""


def phi(rho: float) -> float:
    """Geometric-gap parameter (2 rho - 1)/rho of the renewal measure."""
    if not 0.5 < rho < 1.0:
        raise ValueError(f"rho must lie in (1/2, 1), got {rho}")
    return (2.0 * rho - 1.0) / rho


@dataclass(frozen=True)
class MarkovMeasureSpec:
    """Two-state chain whose path law gives the renewal measure's cylinders."""

    rho: float

    def __post_init__(self):
        if not 0.5 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (1/2, 1), got {self.rho}")

    @property
    def phi(self) -> float:
        return phi(self.rho)

    @property
    def transition(self) -> np.ndarray:
        """Row-stochastic p(i, j) indexed by occupancy values."""
        r = self.rho
        return np.array([[0.0, 1.0], [(1.0 - r) / r, (2.0 * r - 1.0) / r]])

    @property
    def stationary(self) -> np.ndarray:
        return np.array([1.0 - self.rho, self.rho])

    def self_check(self, tol: float = 1e-12) -> None:
        """Validate row sums, stationarity, and the density relation."""
        p = self.transition
        pi = self.stationary
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > tol:
            raise NumericalCheckError("transition rows do not sum to 1")
        if np.max(np.abs(pi @ p - pi)) > tol:
            raise NumericalCheckError("pi is not stationary for p")
        if not 0.0 <= self.phi < 1.0:
            raise NumericalCheckError("phi outside [0, 1)")
        lhs = 1.0 / (1.0 - self.phi) + 1.0
        rhs = 1.0 / (1.0 - self.rho)
        if abs(lhs - rhs) > tol * rhs:
            raise NumericalCheckError("density relation 1/(1-phi) + 1 = 1/(1-rho) broken")


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def bernoulli_sample(
    rho: float,
    L: int,
    rng: RngStream,
    *,
    ring: bool = False,
    origin: int = 0,
) -> Configuration:
    """Product-measure sample: i.i.d. site marginals with density rho."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    occ = (rng.generator.random(L) < rho).astype(np.uint8)
    bits = bytes(occ.tolist())
    return Configuration.ring(bits) if ring else Configuration.segment(bits, origin)


def mu_sample(rho: float, L: int, rng: RngStream, *, origin: int = 0) -> Configuration:
    """Renewal-measure sample on a segment window, via the two-state chain.

    The chain never moves 0 -> 0, so every sample avoids double zeros; the
    empirical density converges to rho and hole gaps are geometric.
    """
    spec = MarkovMeasureSpec(rho)
    ph = spec.phi
    us = rng.generator.random(L)
    bits = bytearray(L)
    state = 1 if us[0] < rho else 0
    bits[0] = state
    for i in range(1, L):
        state = 1 if (state == 0 or us[i] < ph) else 0
        bits[i] = state
    return Configuration.segment(bytes(bits), origin)


# ---------------------------------------------------------------------------
# exact cylinder probabilities
# ---------------------------------------------------------------------------


def mu_cylinder_prob(rho: float, pattern: PatternLike) -> float:
    """Exact renewal-measure probability of a word on consecutive sites."""
    spec = MarkovMeasureSpec(rho)
    w = as_pattern(pattern).word
    p = spec.stationary[w[0]]
    trans = spec.transition
    for a, b in zip(w, w[1:]):
        p *= trans[a, b]
    return float(p)


def mu_word_measure(rho: float) -> WordMeasure:
    """The renewal measure as a word-probability function."""
    spec = MarkovMeasureSpec(rho)
    pi = spec.stationary
    trans = spec.transition

    def prob(pattern: PatternLike) -> float:
        w = as_pattern(pattern).word
        p = pi[w[0]]
        for a, b in zip(w, w[1:]):
            p *= trans[a, b]
        return float(p)

    return prob


def product_word_measure(rho: float) -> WordMeasure:
    """The Bernoulli product measure as a word-probability function."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")

    def prob(pattern: PatternLike) -> float:
        w = as_pattern(pattern).word
        k = sum(w)
        return rho**k * (1.0 - rho) ** (len(w) - k)

    return prob


def ring_word_measure(states: Sequence[Configuration], probs: np.ndarray) -> WordMeasure:
    """Word probabilities of a distribution over ring states.

    Averages the cyclic occurrence frequency over the ring, which equals the
    anchored cylinder probability whenever the distribution is
    translation invariant (as the exact stationary solutions here are).
    """
    probs = np.asarray(probs, dtype=float)
    if len(states) != len(probs):
        raise ValueError("one probability per state required")

    def prob(pattern: PatternLike) -> float:
        pat = as_pattern(pattern)
        L = len(states[0])
        total = 0.0
        for cfg, p in zip(states, probs):
            if p:
                total += p * count_pattern(cfg, pat) / L
        return total

    return prob


# ---------------------------------------------------------------------------
# cylinder functions and the generator expectation
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CylinderFunction:
    """Function of finitely many coordinates: word weights on a site window."""

    start: int
    length: int
    weights: dict

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("support window must be nonempty")
        for w in self.weights:
            if len(w) != self.length:
                raise ValueError("weight keys must match the window length")

    @classmethod
    def indicator(cls, word: PatternLike, start: int = 0) -> "CylinderFunction":
        bits = as_pattern(word).word
        return cls(start, len(bits), {bits: 1.0})

    def value(self, word: bytes) -> float:
        return self.weights.get(word, 0.0)

    @property
    def support(self) -> range:
        return range(self.start, self.start + self.length)


def generator_expectation(measure: WordMeasure, f: CylinderFunction) -> float:
    """Exact integral of the generator applied to f, under a TI measure.

    Every bond whose jump can change f reads only the support window
    extended two sites left and one right; the integral is the finite signed
    sum over all words on that extension, weighted by exact cylinder
    probabilities.  For an invariant measure the result is 0.
    """
    n = f.length
    ext = n + 3  # sites f.start-2 .. f.start+n
    total = 0.0
    f_lo, f_hi = 2, 2 + n  # f's window inside the extension
    for word in itertools.product((0, 1), repeat=ext):
        pw = measure(bytes(word))
        if pw == 0.0:
            continue
        fw = f.value(bytes(word[f_lo:f_hi]))
        acc = 0.0
        for e in range(1, ext - 1):  # bond at extension offset e swaps e, e+1
            if word[e - 1] == 1 and word[e] == 1 and word[e + 1] == 0:
                swapped = list(word)
                swapped[e], swapped[e + 1] = swapped[e + 1], swapped[e]
                acc += f.value(bytes(swapped[f_lo:f_hi])) - fw
        total += pw * acc
    return total


def forbidden_pattern_probs(measure: WordMeasure, k_max: int) -> list[float]:
    """Probabilities of the words 11 (01)^k 00 for k = 0 .. k_max."""
    out = []
    for k in range(k_max + 1):
        word = "11" + "01" * k + "00"
        out.append(float(measure(word)))
    return out


def correlation_decay(
    rho: float, f: CylinderFunction, g: CylinderFunction, lag: int
) -> float:
    """Exact covariance of f and the lag-shifted g under the renewal measure.

    Marginalizes the chain across the gap with a transition-matrix power;
    requires the shifted supports to be disjoint (gap >= 1).
    """
    spec = MarkovMeasureSpec(rho)
    gap = (g.start + lag) - (f.start + f.length - 1)
    if gap < 1:
        raise ValueError("shifted supports overlap; increase the separation")
    trans = spec.transition
    pi = spec.stationary
    bridge = np.linalg.matrix_power(trans, gap)

    def window_prob(word: tuple[int, ...]) -> float:
        p = pi[word[0]]
        for a, b in zip(word, word[1:]):
            p *= trans[a, b]
        return p

    ef = eg = efg = 0.0
    f_words = [
        (w, f.value(bytes(w))) for w in itertools.product((0, 1), repeat=f.length)
    ]
    g_words = [
        (w, g.value(bytes(w))) for w in itertools.product((0, 1), repeat=g.length)
    ]
    for wf, fv in f_words:
        pf = window_prob(wf)
        ef += pf * fv
        if fv == 0.0 and pf == 0.0:
            continue
        for wg, gv in g_words:
            if gv == 0.0:
                continue
            pg_given = bridge[wf[-1], wg[0]]
            for a, b in zip(wg, wg[1:]):
                pg_given *= trans[a, b]
            efg += pf * pg_given * fv * gv
    for wg, gv in g_words:
        eg += window_prob(wg) * gv
    return efg - ef * eg


def correlation_brute(
    rho: float, f: CylinderFunction, g: CylinderFunction, lag: int
) -> float:
    """Brute-force oracle for :func:`correlation_decay`.

    Enumerates every word on the joined window from f's start to the end of
    the shifted g window; exponential in the span, keep it below ~20 sites.
    """
    spec = MarkovMeasureSpec(rho)
    span = (g.start + lag + g.length) - f.start
    if span > 24:
        raise ValueError(f"joined window of {span} sites is too wide to enumerate")
    if (g.start + lag) - (f.start + f.length - 1) < 1:
        raise ValueError("shifted supports overlap; increase the separation")
    trans = spec.transition
    pi = spec.stationary
    off_g = g.start + lag - f.start
    ef = eg = efg = 0.0
    for word in itertools.product((0, 1), repeat=span):
        p = pi[word[0]]
        for a, b in zip(word, word[1:]):
            p *= trans[a, b]
        fv = f.value(bytes(word[: f.length]))
        gv = g.value(bytes(word[off_g : off_g + g.length]))
        ef += p * fv
        eg += p * gv
        efg += p * fv * gv
    return efg - ef * eg


# ---------------------------------------------------------------------------
# exact ring sectors
# ---------------------------------------------------------------------------


@dataclass
class RingGeneratorMatrix:
    """Generator of the dynamics restricted to the (L, k) ring sector."""

    L: int
    k: int
    states: list[Configuration]
    index: dict
    Q: sp.csr_matrix

    @property
    def n_states(self) -> int:
        return len(self.states)


def ring_generator_build(L: int, k: int) -> RingGeneratorMatrix:
    """Enumerate the sector and assemble the conservative rate matrix."""
    if L < 3:
        raise ValueError("ring needs at least 3 sites")
    if not 0 <= k <= L:
        raise ValueError(f"particle count {k} outside [0, {L}]")
    n = comb(L, k)
    if n > SECTOR_STATE_CAP:
        raise ValueError(f"sector has {n} states; cap is {SECTOR_STATE_CAP}")
    states = []
    index = {}
    for sites in itertools.combinations(range(L), k):
        occ = bytearray(L)
        for s in sites:
            occ[s] = 1
        cfg = Configuration.ring(bytes(occ))
        index[cfg.occupancy] = len(states)
        states.append(cfg)
    rows, cols, vals = [], [], []
    for i, cfg in enumerate(states):
        occ = cfg.occupancy
        out_rate = 0
        for x in range(L):
            if occ[(x - 1) % L] == 1 and occ[x] == 1 and occ[(x + 1) % L] == 0:
                target = bytearray(occ)
                target[x] = 0
                target[(x + 1) % L] = 1
                j = index[bytes(target)]
                rows.append(i)
                cols.append(j)
                vals.append(1.0)
                out_rate += 1
        if out_rate:
            rows.append(i)
            cols.append(i)
            vals.append(-float(out_rate))
    Q = sp.csr_matrix((vals, (rows, cols)), shape=(len(states), len(states)))
    return RingGeneratorMatrix(L, k, states, index, Q)


@dataclass
class StationaryAnalysis:
    """Communicating classes, per-class stationary rows, absorption solver."""

    gen: RingGeneratorMatrix
    labels: np.ndarray
    classes: list[list[int]]
    recurrent: list[bool]
    stationary: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)

    @property
    def recurrent_classes(self) -> list[int]:
        return [c for c, r in enumerate(self.recurrent) if r]

    def stationary_over_states(self, class_id: int) -> np.ndarray:
        """Stationary distribution of one recurrent class on the full sector."""
        out = np.zeros(self.gen.n_states)
        out[self.classes[class_id]] = self.stationary[class_id]
        return out

    def absorption_probs(self, initial: np.ndarray) -> dict[int, float]:
        """Probability of ending in each recurrent class, by exact solve."""
        initial = np.asarray(initial, dtype=float)
        if initial.shape != (self.gen.n_states,):
            raise ValueError("initial distribution must cover the sector")
        if abs(initial.sum() - 1.0) > 1e-9:
            raise ValueError("initial distribution must sum to 1")
        rec = self.recurrent_classes
        transient = [
            i for i in range(self.gen.n_states) if not self.recurrent[self.labels[i]]
        ]
        out = {}
        Qd = self.gen.Q.toarray()
        if transient:
            qtt = Qd[np.ix_(transient, transient)]
            hit = {}
            rhs = np.empty((len(transient), len(rec)))
            for ci, c in enumerate(rec):
                members = self.classes[c]
                rhs[:, ci] = Qd[np.ix_(transient, members)].sum(axis=1)
            sol = np.linalg.solve(-qtt, rhs)
            resid = np.max(np.abs(-qtt @ sol - rhs)) if len(transient) else 0.0
            if resid > 1e-9:
                raise NumericalCheckError(f"absorption solve residual {resid:.2e}")
            for ci, c in enumerate(rec):
                hit[c] = sol[:, ci]
        for ci, c in enumerate(rec):
            mass = float(initial[self.classes[c]].sum())
            if transient:
                mass += float(initial[transient] @ hit[c])
            out[c] = mass
        return out


def stationary_and_classes(gen: RingGeneratorMatrix, tol: float = 1e-10) -> StationaryAnalysis:
    """Decompose the sector digraph and solve each recurrent class exactly.

    Dense LU per class with an explicit residual check: a residual above
    ``tol`` signals a bug, not an input condition, and raises.
    """
    n = gen.n_states
    adj = gen.Q.copy()
    adj.setdiag(0)
    adj.eliminate_zeros()
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    classes: list[list[int]] = [[] for _ in range(n_comp)]
    for i in range(n):
        classes[labels[i]].append(i)
    leaves = np.zeros(n_comp, dtype=bool)
    coo = adj.tocoo()
    for i, j in zip(coo.row, coo.col):
        if labels[i] != labels[j]:
            leaves[labels[i]] = True
    recurrent = [not leaves[c] for c in range(n_comp)]
    analysis = StationaryAnalysis(gen, labels, classes, recurrent)
    for c in range(n_comp):
        if not recurrent[c]:
            continue
        members = classes[c]
        if len(members) == 1:
            analysis.stationary[c] = np.array([1.0])
            analysis.residuals[c] = 0.0
            continue
        qcc = gen.Q[np.ix_(members, members)].toarray()
        a = qcc.T.copy()
        a[-1, :] = 1.0
        b = np.zeros(len(members))
        b[-1] = 1.0
        try:
            pi = np.linalg.solve(a, b)
        except np.linalg.LinAlgError as exc:
            raise NumericalCheckError(f"singular stationary solve for class {c}") from exc
        resid = float(np.max(np.abs(pi @ qcc)))
        if resid > tol:
            raise NumericalCheckError(
                f"stationary residual {resid:.2e} above {tol:.0e} for class {c}"
            )
        analysis.stationary[c] = pi
        analysis.residuals[c] = resid
    return analysis


# ---------------------------------------------------------------------------
# brute-force enumeration helpers (oracles for the sector analyses)
# ---------------------------------------------------------------------------


def sector_states(L: int, k: int) -> list[Configuration]:
    """All ring configurations with k particles, in enumeration order."""
    return ring_generator_build(L, k).states


def maximal_island_states(L: int, k: int) -> list[Configuration]:
    """Sector states without adjacent zeros, by direct filtering."""
    return [c for c in sector_states(L, k) if is_no_adjacent_zeros(c)]


def frozen_states(L: int, k: int) -> list[Configuration]:
    """Sector states with no active bond, by direct filtering."""
    return [c for c in sector_states(L, k) if is_frozen(c)]
