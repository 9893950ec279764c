"""End-to-end gradients of the training loss w.r.t. circuit parameters.

Two routes compute the W x P Jacobian of wire expectations: the
parameter-shift rule (reference; two-term for plain rotations, four-term
for controlled rotations whose generators have the extra zero eigenvalue)
and an adjoint backward pass (fast path, proven equal to the reference in
tests).  The adjoint pass tracks which wires can still influence the
cotangent observable; a gate on disjoint wires commutes with the
back-propagated operator, so its parameters receive an exact 0.0 rather
than numerical dust.

The loss chain composes the codec's analytic Jacobian with the tempering
derivative into a per-wire cotangent, then contracts it with the circuit
Jacobian.
"""

from __future__ import annotations

import math

import numpy as np

from .ansatz import encoding_gates, indexed_ring
from .simplex import edge_logits, edge_logits_and_jacobian, training_simplex
from .statevec import (StateVector, _rx, _ry, _rz, _u3, all_z_expectations,
                       apply_matrix, gate_matrix)
from .tempering import temper, temper_grad

_SQRT2 = math.sqrt(2.0)
_TWO_TERM = ((0.5, math.pi / 2), (-0.5, -math.pi / 2))
# Controlled rotations have generator spectrum {0, +-1/2} (frequencies
# {1/2, 1}), which needs the four-term rule.
_C1 = (_SQRT2 + 1.0) / (4.0 * _SQRT2)
_C2 = (_SQRT2 - 1.0) / (4.0 * _SQRT2)
_FOUR_TERM = ((_C1, math.pi / 2), (-_C1, -math.pi / 2),
              (-_C2, 3 * math.pi / 2), (_C2, -3 * math.pi / 2))


def shift_rule(kind):
    """(coefficient, shift) pairs for one parameter of the given gate kind."""
    if kind in ("CRX", "CRZ"):
        return _FOUR_TERM
    if kind in ("RX", "RY", "RZ", "U3"):
        return _TWO_TERM
    raise ValueError(f"gate kind {kind!r} has no shift rule")


def _drx(theta):
    c, s = 0.5 * np.cos(theta / 2), 0.5 * np.sin(theta / 2)
    return np.array([[-s, -1j * c], [-1j * c, -s]], dtype=np.complex128)


def _dry(theta):
    c, s = 0.5 * np.cos(theta / 2), 0.5 * np.sin(theta / 2)
    return np.array([[-s, -c], [c, -s]], dtype=np.complex128)


def _drz(theta):
    e = np.exp(-0.5j * theta)
    return np.array([[-0.5j * e, 0.0], [0.0, 0.5j * np.conj(e)]],
                    dtype=np.complex128)


def _controlled_derivative(block):
    # The control-0 subspace is theta-independent, so it differentiates to 0.
    mat = np.zeros((4, 4), dtype=np.complex128)
    mat[2:, 2:] = block
    return mat


def _derivative_matrices(kind, params):
    """dU/dtheta for each parameter of the gate, in parameter order."""
    if kind == "RX":
        return [_drx(params[0])]
    if kind == "RY":
        return [_dry(params[0])]
    if kind == "RZ":
        return [_drz(params[0])]
    if kind == "U3":
        theta, phi, lam = params
        return [_rz(phi) @ _dry(theta) @ _rz(lam),
                _drz(phi) @ _ry(theta) @ _rz(lam),
                _rz(phi) @ _ry(theta) @ _drz(lam)]
    if kind == "CRX":
        return [_controlled_derivative(_drx(params[0]))]
    if kind == "CRZ":
        return [_controlled_derivative(_drz(params[0]))]
    return []


# --- compiled tapes -------------------------------------------------------

def _matrix_for(kind, values):
    if kind == "RX":
        return _rx(values[0])
    if kind == "RY":
        return _ry(values[0])
    if kind == "RZ":
        return _rz(values[0])
    if kind == "U3":
        return _u3(*values)
    if kind in ("CNOT", "CZ"):
        from .statevec import _CNOT, _CZ
        return _CNOT if kind == "CNOT" else _CZ
    mat = np.eye(4, dtype=np.complex128)
    mat[2:, 2:] = _rx(values[0]) if kind == "CRX" else _rz(values[0])
    return mat


def _encoding_records(features, n_wires):
    """(matrix, wires, ()) records for the fixed data-encoding prefix."""
    return [(gate_matrix(g), g.wires, ()) for g in encoding_gates(features, n_wires)]


def _ansatz_templates(spec):
    """(kind, wires, theta index tuple) for every ansatz gate, in order."""
    return [(gate.kind, gate.wires, idxs) for gate, idxs in indexed_ring(spec)]


def _ansatz_records(templates, theta):
    """Compile templates against a parameter vector, with per-parameter
    derivative matrices attached."""
    records = []
    for kind, wires, idxs in templates:
        values = [theta[i] for i in idxs]
        mat = _matrix_for(kind, values)
        dmats = _derivative_matrices(kind, values)
        records.append((mat, wires, tuple(zip(idxs, dmats))))
    return records


def _run_records(n_wires, records):
    amps = StateVector(n_wires).amps
    for mat, wires, _ in records:
        amps = apply_matrix(amps, n_wires, mat, wires)
    return amps


# --- parameter shift ------------------------------------------------------

def param_shift_expectations(n_wires, enc_records, templates, theta):
    """Wire expectations for an arbitrary parameter vector."""
    amps = StateVector(n_wires).amps
    for mat, wires, _ in enc_records:
        amps = apply_matrix(amps, n_wires, mat, wires)
    for kind, wires, idxs in templates:
        mat = _matrix_for(kind, [theta[i] for i in idxs])
        amps = apply_matrix(amps, n_wires, mat, wires)
    return all_z_expectations(amps, n_wires)


def param_shift_jacobian(n_wires, enc_records, templates, theta):
    """Exact d<Z_w>/d theta_p via shifted circuit evaluations; (W, P)."""
    theta = np.asarray(theta, dtype=np.float64)
    n_params = theta.size
    kind_of = np.empty(n_params, dtype=object)
    for kind, _, idxs in templates:
        for i in idxs:
            kind_of[i] = kind
    jac = np.zeros((n_wires, n_params))
    for p in range(n_params):
        for coeff, shift in shift_rule(kind_of[p]):
            shifted = theta.copy()
            shifted[p] += shift
            jac[:, p] += coeff * param_shift_expectations(
                n_wires, enc_records, templates, shifted)
    return jac


def expectation_jacobian(spec, features):
    """Parameter-shift Jacobian of forward(spec, features); shape (W, P)."""
    enc = _encoding_records(features, spec.n_wires)
    return param_shift_jacobian(spec.n_wires, enc, _ansatz_templates(spec),
                                spec.theta)


# --- adjoint --------------------------------------------------------------

def adjoint_wire_gradient(n_wires, records, n_params, cotangent,
                          final_amps=None):
    """Gradient of sum_w cotangent_w <Z_w> over all parameters.

    One forward pass (or a supplied final state) plus one backward sweep.
    Parameters of gates outside the backward cone of the wires with nonzero
    cotangent receive an exact 0.0: such gates commute with the
    back-propagated observable, so their contribution vanishes identically.
    """
    cot = np.asarray(cotangent, dtype=np.float64)
    if final_amps is None:
        final_amps = _run_records(n_wires, records)
    dim = final_amps.size
    coeff = np.zeros(dim)
    active = set()
    arange = np.arange(dim)
    for w in range(n_wires):
        if cot[w] != 0.0:
            coeff += cot[w] * (1.0 - 2.0 * ((arange >> w) & 1))
            active.add(w)
    lam = coeff * final_amps
    psi = final_amps
    grads = np.zeros(n_params)
    for mat, wires, items in reversed(records):
        mat_h = mat.conj().T
        psi = apply_matrix(psi, n_wires, mat_h, wires)
        touched = bool(active.intersection(wires))
        if items and touched:
            for idx, dmat in items:
                moved = apply_matrix(psi, n_wires, dmat, wires)
                grads[idx] += 2.0 * np.real(np.vdot(lam, moved))
        if touched:
            active.update(wires)
        lam = apply_matrix(lam, n_wires, mat_h, wires)
    return grads


# --- loss chain -----------------------------------------------------------

def pipeline_activations(spec, features, codec, tempering, geom=None):
    """Per-class activations: simplex logits for the edge codec, tempered
    expectations of the first K wires for the vertex codec."""
    from .ansatz import forward
    z = forward(spec, features)
    t = temper(tempering, z)
    if codec == "edge":
        if geom is None:
            geom = training_simplex(spec.k_classes)
        return edge_logits(geom, t)
    if codec == "vertex":
        return np.asarray(t)[:spec.k_classes]
    raise ValueError(f"unknown codec {codec!r}")


def wire_cotangent(z, target, codec, tempering, geom=None):
    """Per-sample loss and dL/dz for every wire.

    The loss is sum_i (a_i - y_i)^2 / K with a the codec activations; the
    cotangent chains the codec Jacobian through the tempering derivative.
    Wires the vertex codec never reads get an exact zero.
    """
    z = np.asarray(z, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    k = target.size
    t = np.asarray(temper(tempering, z))
    if codec == "edge":
        if geom is None:
            geom = training_simplex(k)
        p, jac = edge_logits_and_jacobian(geom, t)
        resid = p - target
        loss = float(resid @ resid) / k
        dl_dt = (2.0 / k) * (jac.T @ resid)
    elif codec == "vertex":
        resid = t[:k] - target
        loss = float(resid @ resid) / k
        dl_dt = np.zeros(z.size)
        dl_dt[:k] = (2.0 / k) * resid
    else:
        raise ValueError(f"unknown codec {codec!r}")
    return loss, dl_dt * temper_grad(tempering, z)


def _stable_mean(stack):
    """Mean over axis 0 with a canonical (sorted) summation order, so the
    result is bit-identical under any reordering of the rows."""
    stack = np.asarray(stack, dtype=np.float64)
    return np.sort(stack, axis=0).sum(axis=0) / stack.shape[0]


def loss_gradient(spec, features, targets, codec, tempering, geom=None,
                  method="adjoint"):
    """Batch-mean loss and its gradient d loss / d theta.

    ``method`` selects the adjoint fast path or the parameter-shift
    reference; both are exact and agree to float precision.
    """
    features = np.atleast_2d(np.asarray(features, dtype=np.float64))
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if features.shape[0] != targets.shape[0]:
        raise ValueError("features and targets disagree on batch size")
    if codec == "edge" and geom is None:
        geom = training_simplex(spec.k_classes)
    n = spec.n_wires
    templates = _ansatz_templates(spec)
    ansatz_records = _ansatz_records(templates, spec.theta)
    n_params = spec.n_params
    batch = features.shape[0]
    losses = np.empty(batch)
    grads = np.empty((batch, n_params))
    for b in range(batch):
        enc = _encoding_records(features[b], n)
        records = enc + ansatz_records
        final = _run_records(n, records)
        z = all_z_expectations(final, n)
        losses[b], cot = wire_cotangent(z, targets[b], codec, tempering, geom)
        if method == "adjoint":
            grads[b] = adjoint_wire_gradient(n, records, n_params, cot,
                                             final_amps=final)
        elif method == "shift":
            jac = param_shift_jacobian(n, enc, templates, spec.theta)
            grads[b] = cot @ jac
        else:
            raise ValueError(f"unknown gradient method {method!r}")
    loss = float(np.sort(losses).sum() / batch)
    return loss, _stable_mean(grads)
