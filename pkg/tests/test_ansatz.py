"""Circuit construction: encoding, ring layout, parameter budgets."""

import numpy as np
import pytest

from simplexvqc.ansatz import (PARAMS_PER_BLOCK, CircuitSpec,
                               backward_light_cone, build_ring, encode_input,
                               forward, indexed_ring, n_wires_for_classes,
                               parameter_count, placements_per_layer,
                               ring_pairs)
from simplexvqc.statevec import StateVector, expectation_z


class TestEncoding:
    def test_all_zero_features_give_ground_state(self):
        state = encode_input(np.zeros(6), 3)
        np.testing.assert_allclose(np.abs(state.amps[0]), 1.0)
        for w in range(3):
            assert expectation_z(state, w) == pytest.approx(1.0)

    def test_pi_rx_flips_wire(self):
        state = encode_input(np.array([np.pi, 0.0]), 1)
        assert expectation_z(state, 0) == pytest.approx(-1.0)

    def test_half_pi_rx(self):
        state = encode_input(np.array([np.pi / 2, 0.0]), 1)
        assert expectation_z(state, 0) == pytest.approx(0.0, abs=1e-12)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError, match="features"):
            encode_input(np.zeros(5), 3)

    def test_out_of_range_rejected(self):
        bad = np.zeros(6)
        bad[2] = np.pi + 0.01
        with pytest.raises(ValueError, match=r"\[0, pi\]"):
            encode_input(bad, 3)
        bad[2] = -0.01
        with pytest.raises(ValueError, match=r"\[0, pi\]"):
            encode_input(bad, 3)

    def test_swapping_feature_halves_changes_state(self):
        rng = np.random.default_rng(2)
        feats = rng.uniform(0.3, np.pi - 0.3, 6)
        swapped = np.concatenate([feats[3:], feats[:3]])
        a = encode_input(feats, 3).amps
        b = encode_input(swapped, 3).amps
        assert not np.allclose(a, b, atol=1e-6)


class TestRingLayout:
    def test_even_width_rings(self):
        even, odd = ring_pairs(6)
        assert even == [(0, 1), (2, 3), (4, 5)]
        assert odd == [(1, 2), (3, 4), (5, 0)]

    def test_odd_width_skips_colliding_wrap(self):
        even, odd = ring_pairs(3)
        assert even == [(0, 1)]
        assert odd == [(1, 2)]   # wrap (2, 0) collides with wire 2

    def test_w10(self):
        even, odd = ring_pairs(10)
        assert len(even) == len(odd) == 5
        assert (9, 0) in odd

    def test_block_param_table(self):
        # nTheta per block: CNN7/CNN8 10, SO4 6, SU4 15, SEL variants 3.
        assert PARAMS_PER_BLOCK == {"CNN7": 10, "CNN8": 10, "SO4": 6,
                                    "SU4": 15, "SEL_X": 3, "SEL_Z": 3}

    def test_parameter_count_matches_placements(self):
        # W=3: rings are (0,1) and (1,2), so 2 placements per layer.
        assert placements_per_layer(3) == 2
        assert parameter_count("CNN7", 3, 4) == 10 * 2 * 4
        assert parameter_count("SU4", 6, 4) == 15 * 6 * 4
        assert parameter_count("SEL_X", 3, 4) == 3 * 3 * 4

    def test_sel_single_layer_structure(self):
        # SEL_X on 3 wires, 1 layer: 9 rotation parameters, then a ring of
        # 3 parameter-free CNOTs.
        spec = CircuitSpec(3, "SEL_X", np.zeros(9), n_layers=1)
        gates = build_ring(spec)
        rotations = [g for g in gates if g.kind == "U3"]
        imprimitives = [g for g in gates if g.kind == "CNOT"]
        assert len(rotations) == 3 and len(imprimitives) == 3
        assert sum(len(g.params) for g in rotations) == 9
        # all rotations precede the two-qubit ring within the layer
        first_cnot = gates.index(imprimitives[0])
        assert all(gates.index(r) < first_cnot for r in rotations)
        assert {g.wires for g in imprimitives} == {(0, 1), (1, 2), (2, 0)}

    @pytest.mark.parametrize("block", sorted(PARAMS_PER_BLOCK))
    @pytest.mark.parametrize("k", [3, 4])
    def test_two_qubit_gates_connect_ring_neighbors(self, block, k):
        w = n_wires_for_classes(k)
        spec = CircuitSpec(k, block, np.zeros(parameter_count(block, w, 4)))
        for gate in build_ring(spec):
            if len(gate.wires) == 2:
                i, j = gate.wires
                assert (abs(i - j) == 1) or ({i, j} == {0, w - 1})

    @pytest.mark.parametrize("block", sorted(PARAMS_PER_BLOCK))
    def test_ring_closure_touches_every_wire(self, block):
        for k in (3, 4):
            w = n_wires_for_classes(k)
            spec = CircuitSpec(k, block, np.zeros(parameter_count(block, w, 1)),
                               n_layers=1)
            touched = {wi for g in build_ring(spec) for wi in g.wires}
            assert touched == set(range(w))

    def test_theta_length_mismatch_rejected(self):
        with pytest.raises(ValueError, match="theta"):
            CircuitSpec(3, "CNN7", np.zeros(79))

    def test_unknown_block_rejected(self):
        with pytest.raises(ValueError, match="block"):
            CircuitSpec(3, "CNN9", np.zeros(10))

    def test_parameter_indices_cover_theta_once(self):
        for block in sorted(PARAMS_PER_BLOCK):
            spec = CircuitSpec(4, block, np.zeros(parameter_count(block, 6, 4)))
            seen = [i for _, idxs in indexed_ring(spec) for i in idxs]
            assert sorted(seen) == list(range(spec.n_params))


class TestForward:
    def test_identity_circuit(self):
        spec = CircuitSpec(3, "CNN7", np.zeros(80))
        np.testing.assert_allclose(forward(spec, np.zeros(6)), 1.0, atol=1e-12)

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        spec = CircuitSpec(3, "CNN7", rng.uniform(0, 2 * np.pi, 80))
        x = rng.uniform(0, np.pi, 6)
        np.testing.assert_array_equal(forward(spec, x), forward(spec, x))

    def test_outputs_bounded(self):
        rng = np.random.default_rng(1)
        for block in sorted(PARAMS_PER_BLOCK):
            spec = CircuitSpec(3, block,
                               rng.uniform(0, 2 * np.pi,
                                           parameter_count(block, 3, 4)))
            z = forward(spec, rng.uniform(0, np.pi, 6))
            assert np.all(np.abs(z) <= 1.0 + 1e-12)


class TestBackwardLightCone:
    def test_hand_traced_single_layer(self):
        # W=3, one CNN7 layer: blocks on (0,1) then (1,2).  Measuring wire
        # 0 only and walking gate-by-gate backwards: all of block (1,2)
        # (indices 10..19) is disjoint from {0}, and within block (0,1)
        # the trailing single-qubit gates on wire 1 (indices 7 and 9) sit
        # after its last entangler, so they are dead too.
        spec = CircuitSpec(3, "CNN7", np.zeros(20), n_layers=1)
        mask = backward_light_cone(spec, [0])
        assert list(np.flatnonzero(~mask)) == [7, 9] + list(range(10, 20))

    def test_full_measurement_has_no_dead_zone(self):
        spec = CircuitSpec(4, "CNN7", np.zeros(parameter_count("CNN7", 6, 4)))
        assert backward_light_cone(spec, range(6)).all()

    def test_k6_dead_patch_location(self):
        # K=6 (W=15, odd) CNN7 over 4 layers has 56 placements = 560
        # parameters; measuring wires 0..5 leaves the final odd-ring block
        # (13,14) dead, i.e. the last ten parameter indices 550..559.
        spec = CircuitSpec(6, "CNN7",
                           np.zeros(parameter_count("CNN7", 15, 4)))
        assert spec.n_params == 560
        mask = backward_light_cone(spec, range(6))
        dead = set(np.flatnonzero(~mask))
        assert set(range(550, 560)) <= dead
