"""Monotonicity-reversing sigmoid normalization of Pauli-Z expectations.

A tempering function t maps [-1, 1] onto (0, 1), decreasing, with
t(0) = 0.5, so a tempered value reads as the probability that the wire
discretizes to bit 1.  The nonlinear variants are input-scaled so that the
derivative magnitude at z = +-1 equals a chosen minimum gradient;
the scale is solved once on the decreasing branch of s * g'(s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, expit

FUNCTIONS = ("logistic", "erf", "gudermannian", "linear")

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# |t'(0)| of the unscaled (s = 1) sigmoid; the solvable min_grad range.
_CENTRAL_SLOPE = {
    "logistic": 0.25,
    "erf": 1.0 / _SQRT_2PI,
    "gudermannian": 1.0 / math.pi,
}


@dataclass(frozen=True)
class Tempering:
    """A solved tempering configuration.  Use make_tempering to build one."""

    function: str
    min_grad: float | None
    scale: float | None


def _g(function, x):
    """The normalized, increasing sigmoid with range (0, 1) and g(0) = 1/2."""
    if function == "logistic":
        return expit(x)
    if function == "erf":
        return 0.5 * (1.0 + erf(x / math.sqrt(2.0)))
    if function == "gudermannian":
        return 2.0 * np.arctan(np.tanh(x / 2.0)) / math.pi + 0.5
    raise ValueError(f"unknown tempering function {function!r}")


def _g_prime(function, x):
    if function == "logistic":
        p = expit(x)
        return p * (1.0 - p)
    if function == "erf":
        return np.exp(-0.5 * x * x) / _SQRT_2PI
    if function == "gudermannian":
        # sech(x)/pi, written to avoid cosh overflow at large |x|
        e = np.exp(-np.abs(x))
        return (2.0 / math.pi) * e / (1.0 + e * e)
    raise ValueError(f"unknown tempering function {function!r}")


def _edge_slope(function, s):
    """|t'(+-1)| for scale s, i.e. s * g'(s)."""
    return s * _g_prime(function, s)


def solve_scale(function, min_grad, s_max=1e6, tol=1e-12):
    """Scale s such that the scaled sigmoid has |t'(+-1)| = min_grad.

    s * g'(s) rises to a single peak and then decays to zero; the root is
    taken on the decaying branch (large scales squash the edges), located
    by bisection to ``tol``.
    """
    if function == "linear":
        raise ValueError("the linear map has no scale to solve")
    if function not in _CENTRAL_SLOPE:
        raise ValueError(f"unknown tempering function {function!r}")
    if not 0.0 < min_grad < _CENTRAL_SLOPE[function]:
        raise ValueError(
            f"min_grad must lie in (0, {_CENTRAL_SLOPE[function]:.4f}) "
            f"for {function}, got {min_grad}")

    # Ternary search for the peak of the unimodal edge slope.
    lo, hi = 1e-9, s_max
    for _ in range(200):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if _edge_slope(function, m1) < _edge_slope(function, m2):
            lo = m1
        else:
            hi = m2
    s_peak = 0.5 * (lo + hi)
    if _edge_slope(function, s_peak) <= min_grad:
        raise ValueError(f"min_grad {min_grad} is not bracketable for {function}")

    hi = s_peak
    while _edge_slope(function, hi) >= min_grad:
        hi *= 2.0
        if hi > s_max:
            raise ValueError(f"no scale below {s_max} reaches min_grad {min_grad}")
    lo = s_peak
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _edge_slope(function, mid) >= min_grad:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def make_tempering(function, min_grad=0.01):
    """Build a Tempering, solving the input scale for nonlinear functions.

    The linear variant has a constant derivative of -1/2, so min_grad does
    not apply and no scale exists.
    """
    if function == "linear":
        return Tempering("linear", None, None)
    return Tempering(function, float(min_grad), solve_scale(function, min_grad))


def _check_range(z):
    z = np.asarray(z, dtype=np.float64)
    if np.any(np.abs(z) > 1.0 + 1e-9):
        raise ValueError("tempering input must lie in [-1, 1]")
    return z


def temper(config, z):
    """The decreasing map t(z); scalar in, scalar out (arrays broadcast)."""
    z = _check_range(z)
    if config.function == "linear":
        out = (1.0 - z) / 2.0
    else:
        out = _g(config.function, -config.scale * z)
    return out if out.ndim else float(out)


def temper_grad(config, z):
    """Analytic derivative dt/dz of the tempering map."""
    z = _check_range(z)
    if config.function == "linear":
        out = np.full_like(z, -0.5)
    else:
        out = -config.scale * _g_prime(config.function, -config.scale * z)
    return out if out.ndim else float(out)
