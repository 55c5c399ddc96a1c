import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftasep.lattice import (
    Configuration,
    Pattern,
    Topology,
    alternating_config,
    as_pattern,
    count_pattern,
    first_double_zero,
    is_frozen,
    is_no_adjacent_zeros,
    pair_counts,
    shift,
)


def all_rings(L):
    for bits in itertools.product((0, 1), repeat=L):
        yield Configuration.ring(bytes(bits))


class TestTypes:
    def test_ring_needs_three_sites(self):
        with pytest.raises(ValueError):
            Topology.ring(2)

    def test_ring_has_no_origin(self):
        with pytest.raises(ValueError):
            Configuration(Topology.ring(4), b"\x01\x00\x01\x00", origin=1)

    def test_occupancy_values_validated(self):
        with pytest.raises(ValueError):
            Configuration.ring("1021")
        with pytest.raises(ValueError):
            Pattern(b"\x02")

    def test_equality_is_bytewise(self):
        # rotation classes are the caller's business: the two alternating
        # absorbing states must stay distinguishable
        assert Configuration.ring("1010") != Configuration.ring("0101")
        assert as_pattern("110") == Pattern.from_string("110")

    def test_segment_coords(self):
        c = Configuration.segment("1100", origin=-2)
        assert list(c.coords) == [-2, -1, 0, 1]
        assert c.value_at(-2) == 1
        assert c.value_at(1) == 0
        with pytest.raises(IndexError):
            c.value_at(2)

    def test_slice_coords(self):
        c = Configuration.segment("110010", origin=-3)
        s = c.slice_coords(-1, 1)
        assert s.to_string() == "001"
        assert s.origin == -1


class TestShift:
    def test_identity(self):
        c = Configuration.ring("1100")
        assert shift(c, 0) == c

    def test_cyclic(self):
        assert shift(Configuration.ring("1100"), 1).to_string() == "1001"

    def test_full_period(self):
        c = Configuration.ring("1100")
        assert shift(c, 4) == c

    def test_segment_slides_origin(self):
        c = Configuration.segment("1100", origin=0)
        s = shift(c, 3)
        assert s.occupancy == c.occupancy
        assert s.origin == -3
        # (tau_x eta)(y) = eta(x + y)
        assert s.value_at(-3) == c.value_at(0)

    @given(st.integers(3, 10), st.integers(-20, 20), st.integers(0, 2**10 - 1))
    def test_shift_invariance_of_counts(self, L, x, bits):
        occ = bytes((bits >> i) & 1 for i in range(L))
        c = Configuration.ring(occ)
        for pat in ("11", "110", "00"):
            assert count_pattern(shift(c, x), pat) == count_pattern(c, pat)


class TestCountPattern:
    def test_examples(self):
        assert count_pattern(Configuration.ring("1110"), "11") == 2
        assert count_pattern(Configuration.ring("1110"), "110") == 1
        assert count_pattern(Configuration.ring("0101"), "11") == 0

    def test_segment_scans_visible_positions(self):
        assert count_pattern(Configuration.segment("1110"), "11") == 2
        assert count_pattern(Configuration.segment("0110"), "00") == 0  # no wrap
        assert count_pattern(Configuration.ring("0110"), "00") == 1

    def test_pattern_too_long_on_segment(self):
        with pytest.raises(ValueError):
            count_pattern(Configuration.segment("10"), "101")

    def test_brute_force_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            L = int(rng.integers(3, 12))
            occ = rng.integers(0, 2, L)
            c = Configuration.ring(bytes(occ.tolist()))
            m = int(rng.integers(1, 5))
            pat = rng.integers(0, 2, m)
            expected = sum(
                all(occ[(j + i) % L] == pat[i] for i in range(m)) for j in range(L)
            )
            assert count_pattern(c, bytes(pat.tolist())) == expected


class TestPairCounts:
    def test_examples(self):
        assert pair_counts(Configuration.ring("1110")) == (2, 1, 1, 0)
        assert pair_counts(Configuration.ring("0101")) == (0, 2, 2, 0)
        assert pair_counts(Configuration.ring("111000")) == (2, 1, 1, 2)

    def test_ring_only(self):
        with pytest.raises(ValueError):
            pair_counts(Configuration.segment("1100"))

    @pytest.mark.parametrize("L", range(3, 13))
    def test_counting_identities_exhaustive(self, L):
        for c in all_rings(L):
            n11, n10, n01, n00 = pair_counts(c)
            k = c.particle_count
            assert n10 == n01
            assert n11 - n00 == 2 * k - L
            assert n11 + n10 + n01 + n00 == L


class TestAlternating:
    def test_examples(self):
        assert alternating_config(4, "even").to_string() == "1010"
        assert alternating_config(4, "odd").to_string() == "0101"
        assert alternating_config(6, "even").to_string() == "101010"

    def test_odd_length_rejected(self):
        with pytest.raises(ValueError):
            alternating_config(5, "even")

    def test_alternating_is_frozen(self):
        for L in (4, 6, 8):
            for parity in ("even", "odd"):
                assert is_frozen(alternating_config(L, parity))


class TestFrozenPredicates:
    def test_examples(self):
        assert is_frozen(Configuration.ring("0101"))
        assert not is_frozen(Configuration.ring("1110"))
        assert not is_frozen(Configuration.ring("1100"))

    def test_no_adjacent_zeros_examples(self):
        assert is_no_adjacent_zeros(Configuration.ring("1010"))
        assert not is_no_adjacent_zeros(Configuration.ring("1100"))
        # wraparound pair (3, 0)
        assert not is_no_adjacent_zeros(Configuration.ring("0110"))

    @pytest.mark.parametrize("L", range(3, 13))
    def test_frozen_equivalences_exhaustive(self, L):
        for c in all_rings(L):
            frozen = is_frozen(c)
            assert frozen == (count_pattern(c, "110") == 0)
            k = c.particle_count
            if 0 < k < L:
                # a run of >= 2 particles must end at a hole
                assert frozen == (count_pattern(c, "11") == 0)


class TestFirstDoubleZero:
    def test_examples(self):
        assert first_double_zero(Configuration.segment("1100")) == 3
        assert first_double_zero(Configuration.segment("0011")) == 1
        assert first_double_zero(Configuration.segment("1010")) is None

    def test_origin_offset(self):
        # pair sits at coords (-2, -1): not > 0, so skipped
        assert first_double_zero(Configuration.segment("0011", origin=-2)) is None
        assert first_double_zero(Configuration.segment("1100", origin=-2)) == 1

    def test_ring_rejected(self):
        with pytest.raises(ValueError):
            first_double_zero(Configuration.ring("1010"))
