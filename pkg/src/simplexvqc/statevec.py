"""Dense statevector simulation for small gate circuits.

Little-endian convention throughout: qubit 0 is the least significant bit
of the amplitude index, so basis state index k assigns bit ``(k >> w) & 1``
to wire w.  A Pauli-Z eigenvalue of +1 corresponds to bit 0 and -1 to bit 1.
"""

from __future__ import annotations

import numpy as np

GATE_KINDS = ("RX", "RY", "RZ", "U3", "CNOT", "CZ", "CRX", "CRZ")

_WIRE_COUNT = {"RX": 1, "RY": 1, "RZ": 1, "U3": 1,
               "CNOT": 2, "CZ": 2, "CRX": 2, "CRZ": 2}
_PARAM_COUNT = {"RX": 1, "RY": 1, "RZ": 1, "U3": 3,
                "CNOT": 0, "CZ": 0, "CRX": 1, "CRZ": 1}


class Gate:
    """A gate instance: kind, target wires, rotation angles in radians.

    For two-qubit gates ``wires[0]`` is the control, and the 4x4 matrix is
    written in the basis |wires[0] wires[1]>.
    """

    __slots__ = ("kind", "wires", "params")

    def __init__(self, kind, wires, params=()):
        if kind not in _WIRE_COUNT:
            raise ValueError(f"unknown gate kind {kind!r}")
        wires = tuple(int(w) for w in wires)
        params = tuple(float(p) for p in params)
        if len(wires) != _WIRE_COUNT[kind]:
            raise ValueError(f"{kind} acts on {_WIRE_COUNT[kind]} wire(s), got {wires}")
        if len(set(wires)) != len(wires):
            raise ValueError(f"duplicate wires on {kind}: {wires}")
        if len(params) != _PARAM_COUNT[kind]:
            raise ValueError(f"{kind} takes {_PARAM_COUNT[kind]} parameter(s), "
                             f"got {len(params)}")
        self.kind = kind
        self.wires = wires
        self.params = params

    def __eq__(self, other):
        return (isinstance(other, Gate) and self.kind == other.kind
                and self.wires == other.wires and self.params == other.params)

    def __repr__(self):
        return f"Gate({self.kind!r}, {self.wires}, {self.params})"


def _rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)


def _ry(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def _rz(theta):
    e = np.exp(-0.5j * theta)
    return np.array([[e, 0.0], [0.0, np.conj(e)]], dtype=np.complex128)


def _u3(theta, phi, lam):
    # RZ(phi) . RY(theta) . RZ(lam); global phase dropped.
    return _rz(phi) @ _ry(theta) @ _rz(lam)


_CNOT = np.array([[1, 0, 0, 0],
                  [0, 1, 0, 0],
                  [0, 0, 0, 1],
                  [0, 0, 1, 0]], dtype=np.complex128)
_CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)


def gate_matrix(gate):
    """Unitary matrix of a gate (2x2 or 4x4, complex128)."""
    kind, p = gate.kind, gate.params
    if kind == "RX":
        return _rx(p[0])
    if kind == "RY":
        return _ry(p[0])
    if kind == "RZ":
        return _rz(p[0])
    if kind == "U3":
        return _u3(*p)
    if kind == "CNOT":
        return _CNOT.copy()
    if kind == "CZ":
        return _CZ.copy()
    mat = np.eye(4, dtype=np.complex128)
    mat[2:, 2:] = _rx(p[0]) if kind == "CRX" else _rz(p[0])
    return mat


_PERM_CACHE = {}


def _axis_perms(n_qubits, wires):
    """Forward/inverse transpose orders that bring the wires' tensor axes
    to the front (cached; hot path)."""
    key = (n_qubits, wires)
    cached = _PERM_CACHE.get(key)
    if cached is None:
        axes = tuple(n_qubits - 1 - w for w in wires)
        perm = axes + tuple(a for a in range(n_qubits) if a not in axes)
        inv = [0] * n_qubits
        for i, p in enumerate(perm):
            inv[p] = i
        cached = (perm, tuple(inv))
        _PERM_CACHE[key] = cached
    return cached


def apply_matrix(amps, n_qubits, mat, wires):
    """Apply a k-wire matrix to an amplitude vector, returning a new vector.

    ``wires[0]`` corresponds to the most significant bit of the matrix's
    basis index, matching the |wires[0] wires[1]> convention of gate_matrix.
    """
    k = len(wires)
    perm, inv = _axis_perms(n_qubits, wires)
    moved = amps.reshape((2,) * n_qubits).transpose(perm)
    out = mat @ moved.reshape(2 ** k, -1)
    return out.reshape((2,) * n_qubits).transpose(inv).reshape(2 ** n_qubits)


class StateVector:
    """An n-qubit state as a complex128 amplitude vector of length 2^n."""

    __slots__ = ("n_qubits", "amps")

    def __init__(self, n_qubits, amps=None):
        n_qubits = int(n_qubits)
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        dim = 2 ** n_qubits
        if amps is None:
            amps = np.zeros(dim, dtype=np.complex128)
            amps[0] = 1.0
        else:
            amps = np.asarray(amps, dtype=np.complex128)
            if amps.shape != (dim,):
                raise ValueError(f"expected {dim} amplitudes, got {amps.shape}")
        self.n_qubits = n_qubits
        self.amps = amps

    def copy(self):
        return StateVector(self.n_qubits, self.amps.copy())

    def norm_squared(self):
        return float(np.sum(self.amps.real ** 2 + self.amps.imag ** 2))

    def __repr__(self):
        return f"StateVector(n_qubits={self.n_qubits})"


def _check_wires(wires, n_qubits):
    for w in wires:
        if not 0 <= w < n_qubits:
            raise ValueError(f"wire {w} out of range for {n_qubits} qubits")


def apply_gate(state, gate):
    """Return the state transformed by ``gate``; the input is not mutated."""
    _check_wires(gate.wires, state.n_qubits)
    amps = apply_matrix(state.amps, state.n_qubits, gate_matrix(gate), gate.wires)
    return StateVector(state.n_qubits, amps)


def run_gates(amps, n_qubits, gates):
    """Apply a gate sequence to an amplitude vector (returns the new vector)."""
    for gate in gates:
        _check_wires(gate.wires, n_qubits)
        amps = apply_matrix(amps, n_qubits, gate_matrix(gate), gate.wires)
    return amps


def _probabilities(amps):
    return amps.real ** 2 + amps.imag ** 2


def expectation_z(state, wire):
    """Exact <Z> on one wire: P(bit=0) - P(bit=1), no sampling."""
    _check_wires((wire,), state.n_qubits)
    probs = _probabilities(state.amps).reshape((2,) * state.n_qubits)
    p1 = float(probs.take(1, axis=state.n_qubits - 1 - wire).sum())
    return 1.0 - 2.0 * p1


def all_z_expectations(amps, n_qubits):
    """Exact <Z> for every wire, as a length-n array."""
    probs = _probabilities(amps).reshape((2,) * n_qubits)
    out = np.empty(n_qubits)
    for w in range(n_qubits):
        p1 = probs.take(1, axis=n_qubits - 1 - w).sum()
        out[w] = 1.0 - 2.0 * p1
    return out


def sample_bitstrings(state, shots, seed):
    """Draw seeded measurement outcomes as a (shots, n_qubits) uint8 array.

    Column w holds the bit measured on wire w.  Outcomes are i.i.d. from the
    squared amplitudes and fully determined by the seed.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    probs = _probabilities(state.amps)
    probs = probs / probs.sum()
    rng = np.random.default_rng(seed)
    idx = rng.choice(probs.size, size=shots, p=probs)
    return indices_to_bits(idx, state.n_qubits)


def indices_to_bits(indices, n_qubits):
    """Expand basis-state indices to per-wire bits, column w = wire w."""
    indices = np.asarray(indices)
    return ((indices[:, None] >> np.arange(n_qubits)) & 1).astype(np.uint8)


def bits_to_indices(bits):
    """Inverse of indices_to_bits."""
    bits = np.asarray(bits)
    weights = 1 << np.arange(bits.shape[-1])
    return (bits * weights).sum(axis=-1)
