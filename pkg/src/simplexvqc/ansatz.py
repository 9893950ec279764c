"""Circuit construction: dual angle encoding plus alternating-ring ansaetze.

A classifier for K classes runs on W = C(K,2) wires.  Each of the four
layers applies a chosen two-qubit block on an even ring of neighbor pairs
(0,1),(2,3),... and then an odd ring (1,2),(3,4),...,(W-1,0).  The
strongly-entangling variants (SEL_X / SEL_Z) instead place three-parameter
rotations on every wire followed by a full ring of parameter-free
imprimitives within each layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .statevec import Gate, StateVector, all_z_expectations, run_gates

BLOCK_KINDS = ("CNN7", "CNN8", "SO4", "SU4", "SEL_X", "SEL_Z")

# Parameters consumed per block placement; for SEL variants this is the
# per-qubit count within one layer.
PARAMS_PER_BLOCK = {"CNN7": 10, "CNN8": 10, "SO4": 6, "SU4": 15,
                    "SEL_X": 3, "SEL_Z": 3}


def n_wires_for_classes(k_classes):
    """Wire count C(K,2) for a K-class circuit."""
    if k_classes < 3:
        raise ValueError("need at least 3 classes")
    return k_classes * (k_classes - 1) // 2


def ring_pairs(n_wires):
    """The (even, odd) neighbor-pair rings for one layer.

    The odd ring carries the wrap pair (W-1, 0) unless one of its wires is
    already used within the odd ring, which happens exactly for odd W.
    """
    if n_wires < 2:
        raise ValueError("ring needs at least 2 wires")
    even = [(i, i + 1) for i in range(0, n_wires - 1, 2)]
    odd = [(i, i + 1) for i in range(1, n_wires - 1, 2)]
    used = {w for pair in odd for w in pair}
    wrap = (n_wires - 1, 0)
    if not used & set(wrap):
        odd.append(wrap)
    return even, odd


def placements_per_layer(n_wires):
    even, odd = ring_pairs(n_wires)
    return len(even) + len(odd)


def parameter_count(block, n_wires, n_layers):
    """Total length of the flat parameter vector for a ring circuit."""
    if block not in PARAMS_PER_BLOCK:
        raise ValueError(f"unknown block kind {block!r}")
    if block in ("SEL_X", "SEL_Z"):
        return PARAMS_PER_BLOCK[block] * n_wires * n_layers
    return PARAMS_PER_BLOCK[block] * placements_per_layer(n_wires) * n_layers


@dataclass
class CircuitSpec:
    """Ansatz description: class count, block kind, layers, flat parameters."""

    k_classes: int
    block: str
    theta: np.ndarray | None = None
    n_layers: int = 4

    def __post_init__(self):
        if self.block not in PARAMS_PER_BLOCK:
            raise ValueError(f"unknown block kind {self.block!r}")
        if self.k_classes < 3:
            raise ValueError("need at least 3 classes")
        if self.n_layers < 1:
            raise ValueError("need at least one layer")
        if self.theta is not None:
            self.theta = np.asarray(self.theta, dtype=np.float64)
            if self.theta.shape != (self.n_params,):
                raise ValueError(
                    f"theta has length {self.theta.shape}, "
                    f"{self.block} on {self.n_wires} wires x {self.n_layers} "
                    f"layers needs {self.n_params}")

    @property
    def n_wires(self):
        return n_wires_for_classes(self.k_classes)

    @property
    def n_params(self):
        return parameter_count(self.block, self.n_wires, self.n_layers)


def encoding_gates(features, n_wires):
    """Dual angle encoding: RX(features[w]) then RY(features[W+w]) per wire."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (2 * n_wires,):
        raise ValueError(f"expected {2 * n_wires} features, got {features.shape}")
    if np.any(features < -1e-12) or np.any(features > math.pi + 1e-12):
        raise ValueError("features must lie in [0, pi]")
    gates = []
    for w in range(n_wires):
        gates.append(Gate("RX", (w,), (features[w],)))
        gates.append(Gate("RY", (w,), (features[n_wires + w],)))
    return gates


def encode_input(features, n_wires):
    """Prepare the encoded state from |0...0>."""
    gates = encoding_gates(features, n_wires)
    state = StateVector(n_wires)
    return StateVector(n_wires, run_gates(state.amps, n_wires, gates))


def _block_gates(block, a, b, theta, base):
    """One block placement on wires (a, b); returns [(Gate, theta indices)]."""
    t = theta
    if block in ("CNN7", "CNN8"):
        cr = "CRZ" if block == "CNN7" else "CRX"
        return [
            (Gate("RX", (a,), (t[base + 0],)), (base + 0,)),
            (Gate("RX", (b,), (t[base + 1],)), (base + 1,)),
            (Gate("RZ", (a,), (t[base + 2],)), (base + 2,)),
            (Gate("RZ", (b,), (t[base + 3],)), (base + 3,)),
            (Gate(cr, (b, a), (t[base + 4],)), (base + 4,)),
            (Gate(cr, (a, b), (t[base + 5],)), (base + 5,)),
            (Gate("RX", (a,), (t[base + 6],)), (base + 6,)),
            (Gate("RX", (b,), (t[base + 7],)), (base + 7,)),
            (Gate("RZ", (a,), (t[base + 8],)), (base + 8,)),
            (Gate("RZ", (b,), (t[base + 9],)), (base + 9,)),
        ]
    if block == "SO4":
        return [
            (Gate("RY", (a,), (t[base + 0],)), (base + 0,)),
            (Gate("RY", (b,), (t[base + 1],)), (base + 1,)),
            (Gate("CNOT", (b, a)), ()),
            (Gate("RY", (a,), (t[base + 2],)), (base + 2,)),
            (Gate("RY", (b,), (t[base + 3],)), (base + 3,)),
            (Gate("CNOT", (b, a)), ()),
            (Gate("RY", (a,), (t[base + 4],)), (base + 4,)),
            (Gate("RY", (b,), (t[base + 5],)), (base + 5,)),
        ]
    if block == "SU4":
        return [
            (Gate("U3", (a,), tuple(t[base:base + 3])), tuple(range(base, base + 3))),
            (Gate("U3", (b,), tuple(t[base + 3:base + 6])), tuple(range(base + 3, base + 6))),
            (Gate("CNOT", (a, b)), ()),
            (Gate("RY", (a,), (t[base + 6],)), (base + 6,)),
            (Gate("RZ", (b,), (t[base + 7],)), (base + 7,)),
            (Gate("CNOT", (b, a)), ()),
            (Gate("RY", (a,), (t[base + 8],)), (base + 8,)),
            (Gate("CNOT", (a, b)), ()),
            (Gate("U3", (a,), tuple(t[base + 9:base + 12])), tuple(range(base + 9, base + 12))),
            (Gate("U3", (b,), tuple(t[base + 12:base + 15])), tuple(range(base + 12, base + 15))),
        ]
    raise ValueError(f"unknown block kind {block!r}")


def indexed_ring(spec):
    """Full ansatz gate list with the theta index tuple of every gate.

    Parameter slots are consumed layer by layer, even ring before odd ring,
    pairs in wire-ascending order, gates within a block in construction
    order.  Parameter-free gates carry an empty index tuple.
    """
    if spec.theta is None:
        raise ValueError("spec has no parameters bound")
    theta = spec.theta
    n = spec.n_wires
    even, odd = ring_pairs(n)
    out = []
    base = 0
    for _ in range(spec.n_layers):
        if spec.block in ("SEL_X", "SEL_Z"):
            for w in range(n):
                out.append((Gate("U3", (w,), tuple(theta[base:base + 3])),
                            tuple(range(base, base + 3))))
                base += 3
            imp = "CNOT" if spec.block == "SEL_X" else "CZ"
            for w in range(n):
                out.append((Gate(imp, (w, (w + 1) % n)), ()))
        else:
            step = PARAMS_PER_BLOCK[spec.block]
            for a, b in even + odd:
                out.extend(_block_gates(spec.block, a, b, theta, base))
                base += step
    assert base == len(theta)
    return out


def build_ring(spec):
    """The ansatz gate sequence (encoding excluded)."""
    return [gate for gate, _ in indexed_ring(spec)]


def forward(spec, features):
    """Exact per-wire <Z> after encoding + ansatz; length-W array in [-1, 1]."""
    n = spec.n_wires
    gates = encoding_gates(features, n) + build_ring(spec)
    amps = run_gates(StateVector(n).amps, n, gates)
    return all_z_expectations(amps, n)


def backward_light_cone(spec, measured_wires):
    """Which parameters can receive gradient from the measured wires.

    Pure topology: walk the ansatz gate list backwards keeping the set of
    wires that can influence a measured wire; a gate joins the cone iff it
    touches the current set.  Returns a boolean mask over theta (True =
    inside the cone).
    """
    mask = np.zeros(spec.n_params, dtype=bool)
    cone = set(int(w) for w in measured_wires)
    for gate, idxs in reversed(indexed_ring(spec)):
        if cone.intersection(gate.wires):
            for i in idxs:
                mask[i] = True
            cone.update(gate.wires)
    return mask
