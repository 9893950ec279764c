"""Tempering: scale solving, the map, and its derivative."""

import numpy as np
import pytest

from simplexvqc.tempering import (Tempering, make_tempering, solve_scale,
                                  temper, temper_grad)

NONLINEAR = ("logistic", "erf", "gudermannian")
MIN_GRADS = (0.01, 0.001)


class TestSolveScale:
    def test_erf_scale_satisfies_defining_equation(self):
        # Oracle: for the normal-CDF form, |t'(1)| = s * phi(s) with phi the
        # standard normal density; solve_scale must satisfy it directly.
        s = solve_scale("erf", 0.01)
        phi = np.exp(-0.5 * s * s) / np.sqrt(2 * np.pi)
        assert s * phi == pytest.approx(0.01, abs=1e-9)

    @pytest.mark.parametrize("function", NONLINEAR)
    @pytest.mark.parametrize("min_grad", MIN_GRADS)
    def test_edge_derivative_equals_min_grad(self, function, min_grad):
        config = make_tempering(function, min_grad)
        for z in (-1.0, 1.0):
            assert abs(temper_grad(config, z)) == pytest.approx(min_grad, abs=1e-9)

    def test_solving_is_reproducible(self):
        values = {solve_scale("gudermannian", 0.001) for _ in range(5)}
        assert len(values) == 1

    def test_unreachable_min_grad_rejected(self):
        with pytest.raises(ValueError, match="min_grad"):
            solve_scale("logistic", 0.5)

    def test_linear_has_no_scale(self):
        with pytest.raises(ValueError, match="linear"):
            solve_scale("linear", 0.01)
        config = make_tempering("linear")
        assert config.scale is None and config.min_grad is None


class TestTemper:
    @pytest.mark.parametrize("function", NONLINEAR + ("linear",))
    def test_midpoint_is_exactly_half(self, function):
        config = (make_tempering(function, 0.01) if function != "linear"
                  else make_tempering("linear"))
        assert temper(config, 0.0) == 0.5

    def test_linear_endpoints(self):
        config = make_tempering("linear")
        assert temper(config, -1.0) == 1.0
        assert temper(config, 1.0) == 0.0
        assert temper_grad(config, 0.3) == -0.5

    def test_erf_edge_values(self):
        config = make_tempering("erf", 0.01)
        low = temper(config, 1.0)
        high = temper(config, -1.0)
        assert high == pytest.approx(1.0 - low, abs=1e-12)
        assert high > 0.95

    @pytest.mark.parametrize("function", NONLINEAR + ("linear",))
    @pytest.mark.parametrize("min_grad", MIN_GRADS)
    def test_strictly_decreasing_on_grid(self, function, min_grad):
        config = (make_tempering(function, min_grad) if function != "linear"
                  else make_tempering("linear"))
        grid = np.linspace(-1.0, 1.0, 1000)
        values = temper(config, grid)
        assert np.all(np.diff(values) < 0)
        if function != "linear":   # linear hits 0 and 1 at the endpoints
            assert np.all((values > 0) & (values < 1))

    @pytest.mark.parametrize("function", NONLINEAR)
    def test_symmetry(self, function):
        config = make_tempering(function, 0.01)
        z = np.linspace(-1.0, 1.0, 257)
        np.testing.assert_allclose(temper(config, z) + temper(config, -z),
                                   1.0, atol=1e-12)

    def test_out_of_range_rejected(self):
        config = make_tempering("erf", 0.01)
        with pytest.raises(ValueError, match=r"\[-1, 1\]"):
            temper(config, 1.2)
        with pytest.raises(ValueError):
            temper_grad(config, -1.5)


class TestTemperGrad:
    @pytest.mark.parametrize("function", NONLINEAR)
    @pytest.mark.parametrize("min_grad", MIN_GRADS)
    def test_matches_finite_difference(self, function, min_grad):
        config = make_tempering(function, min_grad)
        h = 1e-6
        for z in np.linspace(-0.99, 0.99, 21):
            fd = (temper(config, z + h) - temper(config, z - h)) / (2 * h)
            analytic = temper_grad(config, z)
            assert analytic == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("function", NONLINEAR)
    def test_maximal_magnitude_at_zero(self, function):
        config = make_tempering(function, 0.01)
        grid = np.linspace(-1.0, 1.0, 2001)
        mags = np.abs(temper_grad(config, grid))
        assert np.argmax(mags) == 1000

    def test_logistic_vanishes_sooner_than_erf(self):
        # At matched edge gradients, the logistic curve's magnitude at
        # z = 0.5 sits below the error function's.
        logi = make_tempering("logistic", 0.01)
        erf = make_tempering("erf", 0.01)
        assert abs(temper_grad(logi, 0.5)) < abs(temper_grad(erf, 0.5))
