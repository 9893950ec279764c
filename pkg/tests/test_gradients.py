"""Gradient engine: shift rules, adjoint equality, loss chain, light cone."""

import numpy as np
import pytest

from simplexvqc.ansatz import CircuitSpec, backward_light_cone, parameter_count
from simplexvqc.gradients import (_ansatz_templates, _encoding_records,
                                  adjoint_wire_gradient, expectation_jacobian,
                                  loss_gradient, param_shift_jacobian,
                                  wire_cotangent)
from simplexvqc.statevec import Gate, gate_matrix
from simplexvqc.tempering import make_tempering
from simplexvqc.simplex import training_simplex

BLOCKS = ("CNN7", "CNN8", "SO4", "SU4", "SEL_X", "SEL_Z")


def random_spec(block, k, rng):
    n_params = parameter_count(block, k * (k - 1) // 2, 4)
    return CircuitSpec(k, block, rng.uniform(0, 2 * np.pi, n_params))


def fd_expectations(spec, features, p, h=1e-4):
    from simplexvqc.ansatz import forward
    up = spec.theta.copy()
    up[p] += h
    down = spec.theta.copy()
    down[p] -= h
    z_up = forward(CircuitSpec(spec.k_classes, spec.block, up, spec.n_layers),
                   features)
    z_dn = forward(CircuitSpec(spec.k_classes, spec.block, down, spec.n_layers),
                   features)
    return (z_up - z_dn) / (2 * h)


class TestParameterShift:
    def test_single_rx_analytic(self):
        # d<Z>/dtheta of RX(theta)|0> is -sin(theta).
        for theta in (np.pi / 2, 0.0, 1.3):
            templates = [("RX", (0,), (0,))]
            jac = param_shift_jacobian(1, [], templates, np.array([theta]))
            assert jac[0, 0] == pytest.approx(-np.sin(theta), abs=1e-12)

    def test_random_cnn7_matches_finite_differences(self):
        rng = np.random.default_rng(17)
        spec = random_spec("CNN7", 3, rng)
        x = rng.uniform(0, np.pi, 6)
        jac = expectation_jacobian(spec, x)
        for p in range(spec.n_params):
            fd = fd_expectations(spec, x, p)
            assert np.max(np.abs(jac[:, p] - fd)) < 1e-5

    @pytest.mark.parametrize("block", BLOCKS)
    @pytest.mark.parametrize("k", [3, 4])
    def test_all_blocks_match_finite_differences(self, block, k):
        # One random instance per block at W in {3, 6}; 1e-4 relative with
        # a 1e-7 absolute floor.
        rng = np.random.default_rng(hash((block, k)) % 2 ** 31)
        spec = random_spec(block, k, rng)
        x = rng.uniform(0, np.pi, 2 * spec.n_wires)
        jac = expectation_jacobian(spec, x)
        check = rng.choice(spec.n_params, size=min(24, spec.n_params),
                           replace=False)
        for p in check:
            fd = fd_expectations(spec, x, int(p))
            tol = np.maximum(1e-4 * np.abs(fd), 1e-7)
            assert np.all(np.abs(jac[:, p] - fd) <= tol)


class TestAdjoint:
    @pytest.mark.parametrize("block", BLOCKS)
    def test_equals_parameter_shift(self, block):
        rng = np.random.default_rng(23)
        spec = random_spec(block, 3, rng)
        x = rng.uniform(0, np.pi, 6)
        cot = rng.normal(size=3)
        enc = _encoding_records(x, 3)
        templates = _ansatz_templates(spec)
        jac = param_shift_jacobian(3, enc, templates, spec.theta)
        reference = cot @ jac
        from simplexvqc.gradients import _ansatz_records
        records = enc + _ansatz_records(templates, spec.theta)
        fast = adjoint_wire_gradient(3, records, spec.n_params, cot)
        assert np.max(np.abs(fast - reference)) < 1e-10


class TestLossGradient:
    def test_zero_residual_gives_zero_gradient(self):
        # With targets equal to the current activations the MSE sits at its
        # minimum, so the chain returns an exactly negligible gradient.
        rng = np.random.default_rng(5)
        spec = random_spec("CNN7", 3, rng)
        x = rng.uniform(0, np.pi, 6)
        temp = make_tempering("erf", 0.01)
        from simplexvqc.ansatz import forward
        from simplexvqc.tempering import temper
        t = np.asarray(temper(temp, forward(spec, x)))[:3]
        _, grad = loss_gradient(spec, x, t, "vertex", temp)
        assert np.max(np.abs(grad)) < 1e-9

    @pytest.mark.parametrize("codec", ["edge", "vertex"])
    def test_matches_loss_finite_differences(self, codec):
        rng = np.random.default_rng(41)
        temp = make_tempering("erf", 0.01)
        spec = random_spec("CNN7", 3, rng)
        x = rng.uniform(0, np.pi, 6)
        y = np.zeros(3)
        y[rng.integers(3)] = 1.0
        _, grad = loss_gradient(spec, x, y, codec, temp)
        h = 1e-4
        for p in rng.choice(spec.n_params, size=16, replace=False):
            up, down = spec.theta.copy(), spec.theta.copy()
            up[p] += h
            down[p] -= h
            lu, _ = loss_gradient(CircuitSpec(3, "CNN7", up), x, y, codec, temp)
            ld, _ = loss_gradient(CircuitSpec(3, "CNN7", down), x, y, codec, temp)
            fd = (lu - ld) / (2 * h)
            assert abs(grad[p] - fd) <= max(1e-4 * abs(fd), 1e-7)

    def test_shift_method_agrees_with_adjoint(self):
        rng = np.random.default_rng(3)
        temp = make_tempering("erf", 0.01)
        spec = random_spec("SO4", 3, rng)
        x = rng.uniform(0, np.pi, (2, 6))
        y = np.eye(3)[:2]
        la, ga = loss_gradient(spec, x, y, "edge", temp)
        ls, gs = loss_gradient(spec, x, y, "edge", temp, method="shift")
        assert la == pytest.approx(ls, abs=1e-12)
        assert np.max(np.abs(ga - gs)) < 1e-10

    def test_vertex_dead_zone_is_exactly_zero(self):
        # K=5 measures wires 0..4 of 10; parameters outside the backward
        # light cone receive exact 0.0, and the zero set matches the
        # topology predicate.
        rng = np.random.default_rng(6)
        spec = random_spec("CNN7", 5, rng)
        temp = make_tempering("erf", 0.01)
        x = rng.uniform(0, np.pi, 20)
        y = np.zeros(5)
        y[2] = 1.0
        _, grad = loss_gradient(spec, x, y, "vertex", temp)
        mask = backward_light_cone(spec, range(5))
        assert not mask.all()
        assert np.all(grad[~mask] == 0.0)

    def test_batch_reordering_is_bit_exact(self):
        rng = np.random.default_rng(9)
        temp = make_tempering("erf", 0.01)
        spec = random_spec("CNN7", 3, rng)
        x = rng.uniform(0, np.pi, (6, 6))
        y = np.eye(3)[rng.integers(0, 3, 6)]
        loss_a, grad_a = loss_gradient(spec, x, y, "edge", temp)
        perm = rng.permutation(6)
        loss_b, grad_b = loss_gradient(spec, x[perm], y[perm], "edge", temp)
        assert loss_a == loss_b
        np.testing.assert_array_equal(grad_a, grad_b)

    def test_batch_size_mismatch_rejected(self):
        spec = random_spec("CNN7", 3, np.random.default_rng(0))
        temp = make_tempering("erf", 0.01)
        with pytest.raises(ValueError, match="batch"):
            loss_gradient(spec, np.zeros((2, 6)), np.eye(3), "edge", temp)


class TestWireCotangent:
    def test_vertex_unread_wires_get_exact_zero(self):
        temp = make_tempering("erf", 0.01)
        z = np.linspace(-0.5, 0.5, 10)
        y = np.zeros(4)
        y[1] = 1.0
        loss, cot = wire_cotangent(z, y, "vertex", temp)
        assert np.all(cot[4:] == 0.0)
        assert np.any(cot[:4] != 0.0)
        assert loss > 0

    def test_edge_loss_value_matches_direct_computation(self):
        from simplexvqc.simplex import edge_logits
        from simplexvqc.tempering import temper
        temp = make_tempering("erf", 0.01)
        geom = training_simplex(3)
        rng = np.random.default_rng(2)
        z = rng.uniform(-0.9, 0.9, 3)
        y = np.array([0.0, 1.0, 0.0])
        loss, _ = wire_cotangent(z, y, "edge", temp, geom)
        p = edge_logits(geom, np.asarray(temper(temp, z)))
        assert loss == pytest.approx(float(np.sum((p - y) ** 2)) / 3)
