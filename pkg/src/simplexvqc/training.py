"""Training loop, sampling-statistics evaluation protocols, and rankings.

Evaluation vocabulary: a t-sample is one test-set element, an m-sample is
one measured bitstring drawn from the circuit run on that element.
Confusion matrices are K rows (true class) by K+1 columns (predicted
class, last column INVALID).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import chisquare, rankdata

from .ansatz import CircuitSpec, encoding_gates, build_ring
from .gradients import loss_gradient, pipeline_activations
from .simplex import (INVALID, decode_edge_batch, decode_vertex_batch,
                      training_simplex)
from .statevec import StateVector, indices_to_bits, run_gates

OPTIMIZERS = ("adam", "sgd")
SCHEDULERS = ("exponential", "cosine", "piecewise", "constant")


@dataclass
class OptimizerConfig:
    kind: str = "adam"
    lr0: float = 0.01
    scheduler: str = "exponential"
    batch_size: int = 32
    epochs: int = 6
    seed: int = 0
    decay: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.kind!r}")
        if self.scheduler not in SCHEDULERS:
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def learning_rate(opt, step, total_steps):
    """Scheduled learning rate at a (0-based) optimizer step.

    Exponential decay uses scheduler steps of one tenth of the total, so
    lr(total_steps) = lr0 * decay^10, continuous in the step.
    """
    if opt.scheduler == "exponential":
        return opt.lr0 * opt.decay ** (10.0 * step / total_steps)
    if opt.scheduler == "cosine":
        return opt.lr0 * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))
    if opt.scheduler == "piecewise":
        frac = step / total_steps
        factor = 1.0 if frac < 1.0 / 3.0 else (0.1 if frac < 2.0 / 3.0 else 0.01)
        return opt.lr0 * factor
    return opt.lr0


def init_params(spec, seed):
    """Seeded uniform [0, 2*pi) initialization of the flat parameter vector."""
    return np.random.default_rng(seed).uniform(0.0, 2.0 * math.pi, spec.n_params)


@dataclass
class TrainResult:
    spec: CircuitSpec
    grad_totals: np.ndarray
    losses: list[float] = field(default_factory=list)


def train(spec, features, targets, codec, tempering, opt, geom=None):
    """Run the full optimization and return the trained parameters.

    Initialization, shuffling, and therefore the final parameters are fully
    determined by ``opt.seed`` (the initial draw matches
    init_params(spec, opt.seed)).  Accumulates the per-parameter total
    |gradient| over all steps.
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    n_samples = features.shape[0]
    if n_samples == 0:
        raise ValueError("empty training set")
    if codec == "edge" and geom is None:
        geom = training_simplex(spec.k_classes)
    rng = np.random.default_rng(opt.seed)
    theta = rng.uniform(0.0, 2.0 * math.pi, spec.n_params)
    live = CircuitSpec(spec.k_classes, spec.block, theta, spec.n_layers)
    steps_per_epoch = math.ceil(n_samples / opt.batch_size)
    total_steps = opt.epochs * steps_per_epoch
    m = np.zeros(spec.n_params)
    v = np.zeros(spec.n_params)
    grad_totals = np.zeros(spec.n_params)
    losses = []
    step = 0
    for _ in range(opt.epochs):
        order = rng.permutation(n_samples)
        for start in range(0, n_samples, opt.batch_size):
            idx = order[start:start + opt.batch_size]
            loss, grad = loss_gradient(live, features[idx], targets[idx],
                                       codec, tempering, geom)
            if not math.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at step {step}")
            losses.append(loss)
            grad_totals += np.abs(grad)
            lr = learning_rate(opt, step, total_steps)
            if opt.kind == "adam":
                t = step + 1
                m = opt.beta1 * m + (1.0 - opt.beta1) * grad
                v = opt.beta2 * v + (1.0 - opt.beta2) * grad * grad
                m_hat = m / (1.0 - opt.beta1 ** t)
                v_hat = v / (1.0 - opt.beta2 ** t)
                theta = theta - lr * m_hat / (np.sqrt(v_hat) + opt.eps)
            else:
                theta = theta - lr * grad
            live.theta = theta
            step += 1
    return TrainResult(live, grad_totals, losses)


# --- evaluation protocols -------------------------------------------------


def prepared_state(spec, features):
    """The statevector after encoding + ansatz for one input."""
    n = spec.n_wires
    gates = encoding_gates(features, n) + build_ring(spec)
    return StateVector(n, run_gates(StateVector(n).amps, n, gates))


def _decoder(spec, codec, geom):
    k = spec.k_classes
    if codec == "edge":
        geom = geom or training_simplex(k)
        return lambda bits: decode_edge_batch(geom, bits)
    if codec == "vertex":
        return lambda bits: decode_vertex_batch(k, bits[:, :k])
    raise ValueError(f"unknown codec {codec!r}")


class _CircuitSampler:
    """Seeded per-t-sample stream of decoded m-samples from one state."""

    def __init__(self, spec, features, decode, seed_key):
        state = prepared_state(spec, features)
        probs = state.amps.real ** 2 + state.amps.imag ** 2
        self._cum = np.cumsum(probs / probs.sum())
        self._n = spec.n_wires
        self._decode = decode
        self._rng = np.random.default_rng(seed_key)

    def draw(self, n_draws):
        u = self._rng.random(n_draws)
        idx = np.searchsorted(self._cum, u, side="right")
        idx = np.minimum(idx, self._cum.size - 1)
        return self._decode(indices_to_bits(idx, self._n))


@dataclass
class ConstantReport:
    plurality: np.ndarray   # (K, K+1) one count per t-sample
    macro: np.ndarray       # (K, K+1) one count per m-sample
    c_m: float              # micro accuracy: plurality trace / t-samples
    a_m: float              # macro accuracy: macro trace / m-samples


def tally_constant(decoded_per_sample, labels, k_classes):
    """Build the constant-rate confusion matrices from decoded m-samples.

    Each t-sample contributes one count to the plurality matrix in the
    column of the most frequent decoded class; ties break toward INVALID,
    then the lowest class index.  Every m-sample lands in the macro matrix.
    """
    plurality = np.zeros((k_classes, k_classes + 1), dtype=np.int64)
    macro = np.zeros((k_classes, k_classes + 1), dtype=np.int64)
    total_m = 0
    for decoded, y in zip(decoded_per_sample, labels):
        decoded = np.asarray(decoded)
        cats = np.where(decoded == INVALID, k_classes, decoded)
        counts = np.bincount(cats, minlength=k_classes + 1)
        macro[y] += counts
        total_m += decoded.size
        top = counts.max()
        winners = np.flatnonzero(counts == top)
        winner = k_classes if k_classes in winners else int(winners.min())
        plurality[y, winner] += 1
    n_t = len(labels)
    c_m = float(np.trace(plurality[:, :k_classes])) / n_t
    a_m = float(np.trace(macro[:, :k_classes])) / total_m
    return ConstantReport(plurality, macro, c_m, a_m)


def eval_constant(spec, features, labels, codec, shots=100, seed=0, geom=None):
    """Constant sampling-rate evaluation: ``shots`` m-samples per t-sample."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    decode = _decoder(spec, codec, geom)
    decoded = []
    for t_idx in range(features.shape[0]):
        sampler = _CircuitSampler(spec, features[t_idx], decode,
                                  (seed, t_idx, 0))
        decoded.append(sampler.draw(shots))
    return tally_constant(decoded, labels, spec.k_classes)


@dataclass
class ValidReport:
    matrix: np.ndarray      # (K, K+1); last column counts discarded invalids
    v_m: float              # trace over valid m-samples
    s_count: int            # m-samples drawn per t-sample at stop
    converged: bool


def _valid_sampling_core(samplers, labels, k_classes, alpha, increment, cap):
    """Shared increment-and-test loop over per-t-sample decoded streams.

    After each increment of ``increment`` m-samples per t-sample, the
    pooled valid-class counts are tested against the uniform distribution
    over K classes (chi-squared goodness of fit); drawing stops when
    p < alpha or at the cap.
    """
    matrix = np.zeros((k_classes, k_classes + 1), dtype=np.int64)
    pooled = np.zeros(k_classes, dtype=np.int64)
    drawn = 0
    converged = False
    while drawn < cap:
        for sampler, y in zip(samplers, labels):
            decoded = sampler.draw(increment)
            valid = decoded[decoded != INVALID]
            counts = np.bincount(valid, minlength=k_classes)
            matrix[y, :k_classes] += counts
            matrix[y, k_classes] += decoded.size - valid.size
            pooled += counts
        drawn += increment
        if pooled.sum() > 0:
            _, p_value = chisquare(pooled)
            if p_value < alpha:
                converged = True
                break
    valid_total = int(matrix[:, :k_classes].sum())
    v_m = float(np.trace(matrix[:, :k_classes])) / valid_total if valid_total else 0.0
    return ValidReport(matrix, v_m, drawn, converged)


def eval_valid_sampling(spec, features, labels, codec, alpha=0.001, seed=0,
                        increment=10, cap=10_000, geom=None):
    """Valid-sampling evaluation: draw until pooled valid-class counts
    reject uniformity, discarding invalid decodes."""
    decode = _decoder(spec, codec, geom)
    samplers = [_CircuitSampler(spec, features[t], decode, (seed, t, 1))
                for t in range(features.shape[0])]
    return _valid_sampling_core(samplers, labels, spec.k_classes,
                                alpha, increment, cap)


@dataclass
class ThresholdReport:
    t_acc: float    # argmax of activations vs target
    l_r: float      # mean (top activation - second activation)
    ties: int       # exact top-two ties, broken toward the lowest index


def threshold_core(activations, labels):
    activations = np.asarray(activations, dtype=np.float64)
    labels = np.asarray(labels)
    winners = np.argmax(activations, axis=1)
    part = np.partition(activations, activations.shape[1] - 2, axis=1)
    top1, top2 = part[:, -1], part[:, -2]
    ties = int(np.sum(top1 == top2))
    t_acc = float(np.mean(winners == labels))
    l_r = float(np.mean(top1 - top2))
    return ThresholdReport(t_acc, l_r, ties)


def eval_threshold(spec, features, labels, codec, tempering, geom=None):
    """Floating-point evaluation on exact simulated activations."""
    acts = np.stack([
        pipeline_activations(spec, features[t], codec, tempering, geom)
        for t in range(features.shape[0])
    ])
    return threshold_core(acts, labels)


# --- rankings -------------------------------------------------------------


def friedman_rank(values, directions):
    """Mean per-column rank over rows; the best value in a row gets the
    highest rank number, ties get averaged ranks.

    ``directions[r]`` is "higher" or "lower" (is better) for row r.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError("need a rectangular metrics x strategies grid")
    if len(directions) != values.shape[0]:
        raise ValueError("one direction per row required")
    ranks = np.empty_like(values)
    for r, direction in enumerate(directions):
        if direction == "higher":
            ranks[r] = rankdata(values[r])
        elif direction == "lower":
            ranks[r] = rankdata(-values[r])
        else:
            raise ValueError(f"direction must be 'higher' or 'lower', got {direction!r}")
    return ranks.mean(axis=0)


def win_rate(scores_a, scores_b, direction="higher"):
    """Percentage of paired entries where each side scored better; exact
    ties are split half and half."""
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("need two equal-length score vectors")
    if direction == "lower":
        a, b = -a, -b
    elif direction != "higher":
        raise ValueError(f"direction must be 'higher' or 'lower', got {direction!r}")
    wins_a = np.sum(a > b) + 0.5 * np.sum(a == b)
    pct_a = 100.0 * wins_a / a.size
    return float(pct_a), float(100.0 - pct_a)
