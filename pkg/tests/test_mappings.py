import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ftasep.dynamics import SimState, active_bonds, apply_jump
from ftasep.lattice import Configuration
from ftasep.mappings import (
    HeightProfile,
    ZeroRangeState,
    config_from_height,
    config_from_zero_range,
    height_from_config,
    height_jump_sites,
    transport_tagged_hole,
    zero_range_from_config,
    zero_range_move_correspondence,
)


class TestHeightProfile:
    def test_all_zeros_climbs(self):
        prof = height_from_config(Configuration.segment("0000", origin=1), 0)
        assert prof.start == 0
        assert prof.heights == (0, 1, 2, 3, 4)

    def test_all_ones_descends(self):
        prof = height_from_config(Configuration.segment("1111", origin=1), 0)
        assert prof.heights == (0, -1, -2, -3, -4)

    def test_alternating_example(self):
        prof = height_from_config(Configuration.segment("1010", origin=1), 0)
        assert prof.heights == (0, -1, 0, -1, 0)

    def test_anchor_pins_h0(self):
        prof = height_from_config(Configuration.segment("1010", origin=1), 3)
        assert prof.height_at(0) == 6

    def test_unit_increment_enforced(self):
        with pytest.raises(ValueError):
            HeightProfile(0, (0, 2), 0)

    def test_anchor_consistency_enforced(self):
        with pytest.raises(ValueError):
            HeightProfile(0, (1, 2), 0)  # h(0) must equal 2 * anchor

    def test_config_from_height_examples(self):
        cfg, n = config_from_height(HeightProfile(0, (0, 1, 2), 0))
        assert cfg.to_string() == "00" and n == 0
        cfg, n = config_from_height(HeightProfile(0, (4, 3, 4), 2))
        assert cfg.to_string() == "10" and n == 2
        assert cfg.origin == 1

    @given(st.integers(0, 2**12 - 1), st.integers(1, 12), st.integers(-6, 6), st.integers(0, 5))
    def test_round_trip(self, bits, L, origin, anchor):
        occ = bytes((bits >> i) & 1 for i in range(L))
        cfg = Configuration.segment(occ, origin=origin)
        prof = height_from_config(cfg, anchor)
        back, n = config_from_height(prof)
        assert back == cfg
        assert n == anchor

    def test_round_trip_bulk(self):
        rng = np.random.default_rng(17)
        for _ in range(10_000):
            L = int(rng.integers(1, 30))
            occ = bytes(rng.integers(0, 2, L).tolist())
            cfg = Configuration.segment(occ, origin=int(rng.integers(-40, 40)))
            anchor = int(rng.integers(0, 9))
            back, n = config_from_height(height_from_config(cfg, anchor))
            assert back == cfg and n == anchor

    def test_ring_has_no_height(self):
        with pytest.raises(ValueError):
            height_from_config(Configuration.ring("1010"), 0)


class TestHeightJumpSites:
    def test_frozen_profile_has_none(self):
        prof = height_from_config(Configuration.segment("010101"), 0)
        assert height_jump_sites(prof) == frozenset()

    def test_single_growth_site_matches_active_bond(self):
        cfg = Configuration.segment("01100")
        prof = height_from_config(cfg, 0)
        assert height_jump_sites(prof) == active_bonds(cfg) == {2}

    def test_commutation_10k(self):
        # growth at x in the height picture == jump at bond x; the anchor
        # advances exactly when the jump crosses bond (0, 1)
        rng = np.random.default_rng(23)
        checked = 0
        while checked < 10_000:
            L = int(rng.integers(4, 26))
            occ = bytes(rng.integers(0, 2, L).tolist())
            cfg = Configuration.segment(occ, origin=-int(rng.integers(0, L)))
            prof = height_from_config(cfg, 0)
            sites = sorted(height_jump_sites(prof))
            assert frozenset(sites) == active_bonds(cfg)
            if not sites:
                continue
            x = sites[int(rng.integers(len(sites)))]
            state = SimState(cfg)
            apply_jump(state, x)
            after = height_from_config(state.config, state.crossings)
            assert after == prof.lift(x)
            checked += 1


class TestZeroRange:
    def test_examples(self):
        zr = zero_range_from_config(Configuration.ring("0101"), 0)
        assert zr.occupancies == (1, 1)
        assert zr.hole_positions == (0, 2)
        # gap left of the tagged hole wraps: xi(0) counts sites 1..2? no:
        # holes at 0 and 3; gap before hole 0 (from hole 3, wrapping) is empty
        zr = zero_range_from_config(Configuration.ring("0110"), 0)
        assert zr.occupancies == (0, 2)
        assert zr.hole_positions == (0, 3)

    def test_all_holes(self):
        zr = zero_range_from_config(Configuration.ring("0000"), 2)
        assert zr.occupancies == (0, 0, 0, 0)
        assert zr.tagged_hole == 2

    def test_tagged_site_must_be_hole(self):
        with pytest.raises(ValueError):
            zero_range_from_config(Configuration.ring("0101"), 1)

    def test_counts(self):
        zr = zero_range_from_config(Configuration.ring("1101101010"), 2)
        L, k = 10, 6
        assert zr.n_sites == L - k
        assert zr.total_particles == k

    def test_inverse_examples(self):
        zr = ZeroRangeState((1, 1), (0, 2), 4)
        assert config_from_zero_range(zr).to_string() == "0101"
        zr = ZeroRangeState((0, 2), (0, 3), 4)
        assert config_from_zero_range(zr).to_string() == "0110"

    def test_round_trip_10k(self):
        rng = np.random.default_rng(31)
        done = 0
        while done < 10_000:
            L = int(rng.integers(3, 30))
            occ = rng.integers(0, 2, L)
            holes = np.nonzero(occ == 0)[0]
            if holes.size == 0:
                continue
            cfg = Configuration.ring(bytes(occ.tolist()))
            tag = int(holes[int(rng.integers(holes.size))])
            zr = zero_range_from_config(cfg, tag)
            assert config_from_zero_range(zr) == cfg
            assert zr.tagged_hole == tag
            done += 1

    def test_inconsistent_state_rejected(self):
        with pytest.raises(ValueError):
            ZeroRangeState((1, 0), (0, 2), 4)  # gap sizes do not tile the ring


class TestMoveCorrespondence:
    def test_single_gap_case(self):
        # 110 on a 3-ring: one hole, one gap with two particles
        i, j = zero_range_move_correspondence(Configuration.ring("110"), 1)
        assert (i, j) == (0, 0)  # single label, cyclic successor is itself
        zr = zero_range_from_config(Configuration.ring("110"), 2)
        moved = zr.apply_move(0)
        assert config_from_zero_range(moved).to_string() == "101"

    def test_move_requires_two_particles(self):
        zr = zero_range_from_config(Configuration.ring("0101"), 0)
        with pytest.raises(ValueError):
            zr.apply_move(0)

    def test_single_particle_gap_untouchable_ring8_exhaustive(self):
        # no active bond can drain a gap holding exactly one particle
        import itertools

        for bits in itertools.product((0, 1), repeat=8):
            if 0 not in bits:
                continue
            cfg = Configuration.ring(bytes(bits))
            tag = bits.index(0)
            zr = zero_range_from_config(cfg, tag)
            for x in active_bonds(cfg):
                i, _ = zero_range_move_correspondence(cfg, x, tag)
                assert zr.occupancies[i] >= 2

    def test_commutation_10k(self):
        rng = np.random.default_rng(37)
        done = 0
        while done < 10_000:
            L = int(rng.integers(4, 26))
            occ = rng.integers(0, 2, L)
            holes = np.nonzero(occ == 0)[0]
            cfg = Configuration.ring(bytes(occ.tolist()))
            bonds = sorted(active_bonds(cfg))
            if holes.size == 0 or not bonds:
                continue
            tag = int(holes[int(rng.integers(holes.size))])
            x = bonds[int(rng.integers(len(bonds)))]
            i, j = zero_range_move_correspondence(cfg, x, tag)
            assert j == (i + 1) % (L - int(occ.sum()))
            zr_then_move = zero_range_from_config(cfg, tag).apply_move(i)
            state = SimState(cfg)
            apply_jump(state, x)
            new_tag = transport_tagged_hole(cfg, x, tag)
            move_then_zr = zero_range_from_config(state.config, new_tag)
            assert zr_then_move == move_then_zr
            done += 1


class TestTrajectoryFacts:
    def test_per_label_absorption_and_mean_one(self):
        # once a gap holds a particle it never empties; at half filling the
        # gap average is one pathwise
        from ftasep.dynamics import step
        from ftasep.rng import RngStream

        rng = np.random.default_rng(41)
        L, k = 30, 15
        occ = np.zeros(L, dtype=np.uint8)
        occ[rng.permutation(L)[:k]] = 1
        cfg = Configuration.ring(bytes(occ.tolist()))
        tag = int(np.nonzero(occ == 0)[0][0])
        state = SimState(cfg)
        stream = RngStream(4242, 0)
        prev = zero_range_from_config(state.config, tag)
        while state.n_active:
            bonds_before = state.config
            x = sorted(state.active_bonds())[stream.index(state.n_active)]
            apply_jump(state, x)
            tag = transport_tagged_hole(bonds_before, x, tag)
            cur = zero_range_from_config(state.config, tag)
            assert cur.n_sites == prev.n_sites
            for i in range(cur.n_sites):
                if prev.occupancies[i] >= 1:
                    assert cur.occupancies[i] >= 1
            assert sum(cur.occupancies) == k  # mean one over L - k = k labels
            prev = cur
        assert all(x == 1 for x in prev.occupancies)
