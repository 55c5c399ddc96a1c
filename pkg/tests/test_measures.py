import itertools
import math

import numpy as np
import pytest

from ftasep.lattice import Configuration, is_frozen, is_no_adjacent_zeros
from ftasep.measures import (
    CylinderFunction,
    MarkovMeasureSpec,
    NumericalCheckError,
    bernoulli_sample,
    correlation_brute,
    correlation_decay,
    forbidden_pattern_probs,
    frozen_states,
    generator_expectation,
    maximal_island_states,
    mu_cylinder_prob,
    mu_sample,
    mu_word_measure,
    phi,
    product_word_measure,
    ring_generator_build,
    ring_word_measure,
    stationary_and_classes,
)
from ftasep.rng import RngStream


class TestPhiAndSpec:
    def test_values(self):
        assert phi(0.75) == pytest.approx(2.0 / 3.0, abs=1e-15)
        assert phi(0.9) == pytest.approx(8.0 / 9.0, abs=1e-15)
        assert phi(0.5 + 1e-9) == pytest.approx(0.0, abs=1e-8)

    def test_domain(self):
        for bad in (0.5, 1.0, 0.2, -1.0):
            with pytest.raises(ValueError):
                phi(bad)

    @pytest.mark.parametrize("rho", [0.55, 0.6, 0.75, 0.9, 0.99])
    def test_spec_self_check(self, rho):
        MarkovMeasureSpec(rho).self_check()


class TestSamplers:
    def test_bernoulli_degenerate_densities(self):
        s = RngStream(1, 0)
        assert bernoulli_sample(0.0, 50, s).particle_count == 0
        assert bernoulli_sample(1.0, 50, s).particle_count == 50

    def test_bernoulli_density_ci(self):
        c = bernoulli_sample(0.5, 100_000, RngStream(2, 0))
        dens = c.particle_count / len(c)
        assert abs(dens - 0.5) <= 3 * math.sqrt(0.25 / 100_000)

    def test_mu_sample_support(self):
        for t in range(5):
            c = mu_sample(0.75, 2000, RngStream(3, t))
            assert is_no_adjacent_zeros(c)

    def test_mu_sample_density_ci(self):
        # chain CLT: asymptotic variance pi0 pi1 (1 + l2)/(1 - l2), l2 = -1/3
        c = mu_sample(0.75, 100_000, RngStream(5, 1))
        avar = (0.25 * 0.75) * (1 - 1 / 3) / (1 + 1 / 3)
        dens = c.particle_count / len(c)
        assert abs(dens - 0.75) <= 3 * math.sqrt(avar / 100_000)

    def test_mu_sample_gap_law(self):
        # particles between successive holes ~ Geometric on {1, 2, ...} with
        # success 1 - phi, mean 1/(1 - phi) = 3 at rho = 3/4
        c = mu_sample(0.75, 100_000, RngStream(5, 1))
        holes = np.nonzero(c.as_array() == 0)[0]
        parts = np.diff(holes) - 1
        assert parts.min() >= 1
        n = len(parts)
        assert abs(parts.mean() - 3.0) <= 3 * math.sqrt(6.0 / n)
        ph = 2.0 / 3.0
        for v in (1, 2, 3, 4):
            th = ph ** (v - 1) * (1 - ph)
            emp = float((parts == v).mean())
            assert abs(emp - th) <= 4 * math.sqrt(th * (1 - th) / n)


class TestCylinderProbs:
    def test_examples(self):
        assert mu_cylinder_prob(0.6, "1") == pytest.approx(0.6, abs=1e-15)
        assert mu_cylinder_prob(0.6, "00") == 0.0
        assert mu_cylinder_prob(0.75, "010") == pytest.approx(1.0 / 12.0, abs=1e-15)

    @pytest.mark.parametrize("rho", [0.6, 0.75, 0.9])
    def test_kolmogorov_consistency(self, rho):
        measure = mu_word_measure(rho)
        for n in range(1, 6):
            for bits in itertools.product((0, 1), repeat=n):
                w = bytes(bits)
                p = measure(w)
                assert p == pytest.approx(
                    measure(w + b"\x00") + measure(w + b"\x01"), abs=1e-14
                )
                assert p == pytest.approx(
                    measure(b"\x00" + w) + measure(b"\x01" + w), abs=1e-14
                )

    def test_normalization(self):
        measure = mu_word_measure(0.75)
        total = sum(measure(bytes(b)) for b in itertools.product((0, 1), repeat=6))
        assert total == pytest.approx(1.0, abs=1e-13)


class TestGeneratorExpectation:
    def test_constant_function_annihilated(self):
        const = CylinderFunction(0, 2, {bytes(b): 1.0 for b in itertools.product((0, 1), repeat=2)})
        assert generator_expectation(mu_word_measure(0.75), const) == pytest.approx(0.0, abs=1e-15)
        assert generator_expectation(product_word_measure(0.4), const) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("rho", [0.3, 0.5, 0.75])
    def test_double_zero_indicator_identity(self, rho):
        # applying the generator to 1{eta(x)=eta(x+1)=0} integrates to
        # -P(1100): the only bond changing the event is the one entering it
        measure = product_word_measure(rho)
        val = generator_expectation(measure, CylinderFunction.indicator("00"))
        assert val == pytest.approx(-measure("1100"), abs=1e-16)
        mval = generator_expectation(mu_word_measure(0.75), CylinderFunction.indicator("00"))
        assert mval == pytest.approx(-mu_cylinder_prob(0.75, "1100"), abs=1e-16)

    def test_renewal_measure_invariant_small(self):
        measure = mu_word_measure(0.75)
        for n in range(1, 5):
            for bits in itertools.product((0, 1), repeat=n):
                val = generator_expectation(measure, CylinderFunction.indicator(bytes(bits)))
                assert abs(val) <= 1e-12

    def test_product_measure_not_invariant(self):
        for rho in (0.25, 0.5, 0.7):
            val = generator_expectation(product_word_measure(rho), CylinderFunction.indicator("00"))
            assert val == pytest.approx(-(rho**2) * (1 - rho) ** 2, abs=1e-14)
            assert val < 0


class TestForbiddenPatterns:
    def test_under_renewal_measure_all_zero(self):
        assert forbidden_pattern_probs(mu_word_measure(0.8), 4) == [0.0] * 5

    def test_under_product_measure_nonzero(self):
        probs = forbidden_pattern_probs(product_word_measure(0.5), 2)
        assert probs[0] == pytest.approx(1.0 / 16.0, abs=1e-15)
        assert all(p > 0 for p in probs)

    def test_under_ring_stationary_supercritical(self):
        gen = ring_generator_build(10, 7)
        analysis = stationary_and_classes(gen)
        (c,) = analysis.recurrent_classes
        measure = ring_word_measure(gen.states, analysis.stationary_over_states(c))
        assert forbidden_pattern_probs(measure, 3) == [0.0] * 4


class TestCorrelationDecay:
    def test_constants_uncorrelated(self):
        const = CylinderFunction(0, 1, {b"\x00": 1.0, b"\x01": 1.0})
        assert correlation_decay(0.75, const, const, 5) == pytest.approx(0.0, abs=1e-14)

    def test_overlap_rejected(self):
        f = CylinderFunction.indicator("101")
        with pytest.raises(ValueError):
            correlation_decay(0.75, f, f, 2)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            nf = int(rng.integers(1, 4))
            ng = int(rng.integers(1, 4))
            f = CylinderFunction.indicator(bytes(rng.integers(0, 2, nf).tolist()))
            g = CylinderFunction.indicator(bytes(rng.integers(0, 2, ng).tolist()))
            lag = int(rng.integers(f.length + 1, f.length + 8))
            exact = correlation_decay(0.75, f, g, lag)
            brute = correlation_brute(0.75, f, g, lag)
            assert exact == pytest.approx(brute, abs=1e-14)

    def test_spectral_decay_bound(self):
        # second eigenvalue modulus (1 - rho)/rho = 1/3 at rho = 3/4
        f = CylinderFunction.indicator("10")
        g = CylinderFunction.indicator("01")
        vals = [abs(correlation_decay(0.75, f, g, lag)) for lag in (5, 10, 20, 30)]
        for lag, v in zip((5, 10, 20, 30), vals):
            assert v <= 2.0 * (1.0 / 3.0) ** lag + 1e-14
        assert vals[-1] <= 1e-9


class TestRingGenerator:
    def test_l4_k2_structure(self):
        gen = ring_generator_build(4, 2)
        assert gen.n_states == 6
        Q = gen.Q.toarray()
        assert np.allclose(Q.sum(axis=1), 0.0)
        movers = [i for i in range(6) if Q[i, i] < 0]
        assert len(movers) == 4  # exactly the four states containing 110
        for i in movers:
            assert Q[i, i] == -1.0

    def test_l4_k3_every_state_active(self):
        gen = ring_generator_build(4, 3)
        assert gen.n_states == 4
        Q = gen.Q.toarray()
        assert all(Q[i, i] <= -1 for i in range(4))

    def test_sector_cap(self):
        with pytest.raises(ValueError):
            ring_generator_build(16, 8)

    def test_transitions_conserve_k(self):
        gen = ring_generator_build(7, 4)
        coo = gen.Q.tocoo()
        for i, j in zip(coo.row, coo.col):
            assert gen.states[i].particle_count == gen.states[j].particle_count


class TestStationaryAnalysis:
    def test_l4_k3_uniform(self):
        analysis = stationary_and_classes(ring_generator_build(4, 3))
        (c,) = analysis.recurrent_classes
        assert len(analysis.classes[c]) == 4
        assert np.allclose(analysis.stationary[c], 0.25, atol=1e-12)

    def test_l6_k4_uniform_over_nine(self):
        gen = ring_generator_build(6, 4)
        analysis = stationary_and_classes(gen)
        (c,) = analysis.recurrent_classes
        members = {gen.states[i].occupancy for i in analysis.classes[c]}
        islands = {s.occupancy for s in maximal_island_states(6, 4)}
        assert len(islands) == 9
        assert members == islands
        assert np.allclose(analysis.stationary[c], 1.0 / 9.0, atol=1e-12)

    def test_l4_k2_absorption_split(self):
        gen = ring_generator_build(4, 2)
        analysis = stationary_and_classes(gen)
        rec = analysis.recurrent_classes
        names = sorted(gen.states[analysis.classes[c][0]].to_string() for c in rec)
        assert names == ["0101", "1010"]
        probs = analysis.absorption_probs(np.full(6, 1.0 / 6.0))
        assert sorted(probs.values()) == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_half_filling_split_exact_symmetry(self):
        # uniform sector start, L = 8: the two alternating states absorb
        # half the mass each, exactly
        gen = ring_generator_build(8, 4)
        analysis = stationary_and_classes(gen)
        probs = analysis.absorption_probs(np.full(gen.n_states, 1.0 / gen.n_states))
        assert len(probs) == 2
        assert list(sorted(probs.values())) == pytest.approx([0.5, 0.5], abs=1e-12)

    def test_residuals_tiny(self):
        analysis = stationary_and_classes(ring_generator_build(9, 6))
        assert max(analysis.residuals.values()) <= 1e-12

    def test_absorbing_census_small(self):
        for L in range(3, 9):
            for k in range(0, L // 2 + 1):
                gen = ring_generator_build(L, k)
                analysis = stationary_and_classes(gen)
                rec = analysis.recurrent_classes
                frozen = {s.occupancy for s in frozen_states(L, k)}
                assert len(rec) == len(frozen)
                for c in rec:
                    assert len(analysis.classes[c]) == 1
                    state = gen.states[analysis.classes[c][0]]
                    assert state.occupancy in frozen
                    assert is_frozen(state)
