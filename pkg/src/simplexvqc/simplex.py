"""Edge codec on a regular simplex, plus the one-hot vertex baseline.

Each of the W = C(K,2) wires carries a value in [0, 1] read as a position
along one edge of a regular 0-centered (K-1)-simplex with unit-norm
vertices.  Every vertex collects its K-1 incident edges; each edge point
spans a hyperplane (slice) with the K-2 non-incident vertices, and the
unique intersection of a vertex's slices yields its logit
p_i = 1 - ||v_i - n_i||^2.  Discrete bitstrings decode to the class whose
incident edge bits all point at it, or to INVALID.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .statevec import indices_to_bits

INVALID = -1


class SimplexGeometry:
    """Precomputed vertices and the lexicographic wire <-> edge map."""

    def __init__(self, vertices):
        vertices = np.asarray(vertices, dtype=np.float64)
        k = vertices.shape[0]
        if k < 3 or vertices.shape != (k, k - 1):
            raise ValueError("need K >= 3 vertices in R^(K-1)")
        if np.linalg.norm(vertices.sum(axis=0)) > 1e-8:
            raise ValueError("vertices must be 0-centered")
        norms = np.linalg.norm(vertices, axis=1)
        if np.any(np.abs(norms - norms[0]) > 1e-8) or norms[0] < 1e-12:
            raise ValueError("vertices must share one positive norm")
        self.k_classes = k
        self.vertices = vertices
        self.edges = tuple((i, j) for i in range(k) for j in range(i + 1, k))
        self._wire = {pair: w for w, pair in enumerate(self.edges)}

    @property
    def edge_length(self):
        return float(np.linalg.norm(self.vertices[0] - self.vertices[1]))

    @property
    def n_wires(self):
        return len(self.edges)

    def wire_index(self, i, j):
        """Wire carrying edge (i, j), i < j, lexicographic order."""
        if not 0 <= i < j < self.k_classes:
            raise ValueError(f"bad edge ({i}, {j}) for K={self.k_classes}")
        return self._wire[(i, j)]

    def incident_wires(self, i):
        """Wires of the K-1 edges incident to vertex i, ascending."""
        return [w for w, (a, b) in enumerate(self.edges) if i in (a, b)]


def build_simplex(k_classes, edge_length=None):
    """Deterministic regular 0-centered simplex.

    The K standard basis vectors, centroid-subtracted, are expressed in the
    Helmert orthonormal basis of the hyperplane orthogonal to (1,...,1).
    With the default ``edge_length=None`` the vertices are scaled to unit
    norm; passing an edge length scales the side instead.
    """
    k = int(k_classes)
    if k < 3:
        raise ValueError("need K >= 3")
    basis = np.zeros((k - 1, k))
    for j in range(1, k):
        basis[j - 1, :j] = 1.0
        basis[j - 1, j] = -float(j)
        basis[j - 1] /= np.sqrt(j * (j + 1.0))
    vertices = basis.T * np.sqrt(k / (k - 1.0))
    if edge_length is not None:
        # Unit-norm vertices sit at pairwise distance sqrt(2K/(K-1)).
        vertices = vertices * (edge_length / np.sqrt(2.0 * k / (k - 1.0)))
    return SimplexGeometry(vertices)


def training_simplex(k_classes):
    """The simplex scale used for training: unit edge length.

    With side 1, the one-hot regression target is exactly attainable: when
    every edge incident to class y sits at its y endpoint, each other
    vertex's slices all pass through v_y, so p_y = 1 and p_i = 1 - 1 = 0.
    Training therefore keeps pushing tempered values toward the rails,
    which is what makes the discrete samples concentrate.
    """
    return build_simplex(k_classes, edge_length=1.0)


def edge_point(geom, i, j, value):
    """Affine point (1 - e) v_i + e v_j along edge (i, j)."""
    if not 0 <= i < j < geom.k_classes:
        raise ValueError(f"edge indices must satisfy 0 <= i < j < K, got ({i}, {j})")
    if not -1e-9 <= value <= 1.0 + 1e-9:
        raise ValueError(f"edge value must lie in [0, 1], got {value}")
    return (1.0 - value) * geom.vertices[i] + value * geom.vertices[j]


def _gencross(rows):
    """Generalized cross product: the vector orthogonal to m rows in R^(m+1).

    Component c is the signed minor (-1)^c det(rows without column c), so
    the result is polynomial in the entries (no normalization).
    """
    m, d = rows.shape
    if d != m + 1:
        raise ValueError("need an (m, m+1) matrix")
    if m == 1:
        return np.array([rows[0, 1], -rows[0, 0]])
    minors = np.stack([np.delete(rows, c, axis=1) for c in range(d)])
    signs = np.where(np.arange(d) % 2 == 0, 1.0, -1.0)
    return signs * np.linalg.det(minors)


def slice_normal(geom, i, j, pt):
    """Unit normal of the slice spanned by the non-incident vertices and pt.

    Sign convention: positive inner product with (v_i - pt); if that is
    zero (pt at v_i), the first nonzero coordinate is made positive.
    """
    others = [k for k in range(geom.k_classes) if k not in (i, j)]
    rows = geom.vertices[others] - pt
    normal = _gencross(rows)
    norm = np.linalg.norm(normal)
    if norm < 1e-12:
        raise np.linalg.LinAlgError(
            f"degenerate slice span for edge ({i}, {j}) at {pt}")
    normal = normal / norm
    ref = float(normal @ (geom.vertices[i] - pt))
    if ref < -1e-12:
        normal = -normal
    elif abs(ref) <= 1e-12:
        lead = normal[np.argmax(np.abs(normal) > 1e-12)]
        if lead < 0:
            normal = -normal
    return normal


def intersect_slices(geom, i, edge_pts, normals):
    """Solve the K-1 slice equations (n - e_ij) . s_ij = 0 for n.

    Dense direct solve with partial pivoting; a singular or ill-conditioned
    system raises LinAlgError (well-posed inputs always intersect in
    exactly one point).
    """
    a = np.asarray(normals, dtype=np.float64)
    pts = np.asarray(edge_pts, dtype=np.float64)
    k = geom.k_classes
    if a.shape != (k - 1, k - 1) or pts.shape != (k - 1, k - 1):
        raise ValueError(f"need {k - 1} edge points and normals in R^{k - 1}")
    b = np.einsum("rd,rd->r", a, pts)
    try:
        n = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"singular slice system at vertex {i}: {exc}") from exc
    residual = np.linalg.norm(a @ n - b)
    if residual > 1e-9:
        raise np.linalg.LinAlgError(
            f"ill-conditioned slice system at vertex {i}: residual {residual:.3e}")
    return n


def _check_edge_values(geom, values):
    values = np.asarray(values, dtype=np.float64)
    if values.shape != (geom.n_wires,):
        raise ValueError(f"expected {geom.n_wires} edge values, got {values.shape}")
    if np.any(values < -1e-9) or np.any(values > 1.0 + 1e-9):
        raise ValueError("edge values must lie in [0, 1]")
    return values


def edge_logits(geom, values):
    """Per-class predictions p_i = 1 - ||v_i - n_i||^2 from edge values."""
    values = _check_edge_values(geom, values)
    k = geom.k_classes
    p = np.empty(k)
    for i in range(k):
        pts, normals = [], []
        for w in geom.incident_wires(i):
            a, b = geom.edges[w]
            pt = edge_point(geom, a, b, values[w])
            pts.append(pt)
            normals.append(slice_normal(geom, a, b, pt))
        n_i = intersect_slices(geom, i, np.array(pts), np.array(normals))
        diff = geom.vertices[i] - n_i
        p[i] = 1.0 - float(diff @ diff)
    return p


def edge_logits_and_jacobian(geom, values):
    """Logits plus the analytic K x W Jacobian dp/de.

    Slice rows are kept unnormalized (generalized cross products), which is
    equivalent for the solve and smooth in the edge values; each vertex's
    sensitivity comes from one transpose-solve of its slice system
    (adjoint of the factorization) plus the multilinear derivative of the
    cross product.
    """
    values = _check_edge_values(geom, values)
    k = geom.k_classes
    verts = geom.vertices
    p = np.empty(k)
    jac = np.zeros((k, geom.n_wires))
    for i in range(k):
        wires = geom.incident_wires(i)
        rows = np.empty((k - 1, k - 1))
        b = np.empty(k - 1)
        pts, dirs, spans = [], [], []
        for r, w in enumerate(wires):
            a, c = geom.edges[w]
            pt = (1.0 - values[w]) * verts[a] + values[w] * verts[c]
            others = [m for m in range(k) if m not in (a, c)]
            span = verts[others] - pt
            s = _gencross(span)
            rows[r] = s
            b[r] = s @ pt
            pts.append(pt)
            dirs.append(verts[c] - verts[a])
            spans.append(span)
        try:
            n_i = np.linalg.solve(rows, b)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(
                f"singular slice system at vertex {i}: {exc}") from exc
        diff = verts[i] - n_i
        p[i] = 1.0 - float(diff @ diff)
        # dp/dn = 2 (v_i - n); lam_r = (A^-T dp/dn)_r picks out row r's effect.
        lam = np.linalg.solve(rows.T, 2.0 * diff)
        for r, w in enumerate(wires):
            u = dirs[r]
            span = spans[r]
            ds = np.zeros(k - 1)
            for t in range(k - 2):
                mod = span.copy()
                mod[t] = -u
                ds += _gencross(mod)
            db = ds @ pts[r] + rows[r] @ u
            jac[i, w] = lam[r] * (db - ds @ n_i)
    return p, jac


def mse_loss(batch_logits, targets):
    """Mean squared error sum((p - y)^2) / (B * K) against one-hot targets."""
    p = np.asarray(batch_logits, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if p.ndim == 1:
        p = p[None, :]
    if y.ndim == 1:
        y = y[None, :]
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch: logits {p.shape} vs targets {y.shape}")
    if not (np.all((y == 0.0) | (y == 1.0)) and np.all(y.sum(axis=1) == 1.0)):
        raise ValueError("targets must be one-hot rows")
    return float(np.sum((p - y) ** 2) / p.size)


def edge_target_values(geom, class_id):
    """Edge values whose logits peak at class_id: incident edges sit at
    their class endpoint (0 when it is the lower index, 1 when higher);
    non-incident edges are neutral at 0.5."""
    values = np.full(geom.n_wires, 0.5)
    for w in geom.incident_wires(class_id):
        a, b = geom.edges[w]
        values[w] = 0.0 if class_id == a else 1.0
    return values


def _edge_requirements(geom):
    """Per class: (incident wire indices, required bit per wire)."""
    reqs = []
    for i in range(geom.k_classes):
        wires = np.array(geom.incident_wires(i))
        want = np.array([0 if i == geom.edges[w][0] else 1 for w in wires],
                        dtype=np.uint8)
        reqs.append((wires, want))
    return reqs


def decode_edge_batch(geom, bits):
    """Decode rows of measured bits to class ids, INVALID where no vertex's
    incident edges agree.  At most one class can match (asserted)."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim == 1:
        bits = bits[None, :]
    if bits.shape[1] != geom.n_wires:
        raise ValueError(f"expected {geom.n_wires} bits per row, got {bits.shape[1]}")
    out = np.full(bits.shape[0], INVALID, dtype=np.int64)
    claimed = np.zeros(bits.shape[0], dtype=bool)
    for i, (wires, want) in enumerate(_edge_requirements(geom)):
        hit = np.all(bits[:, wires] == want, axis=1)
        if np.any(hit & claimed):
            raise AssertionError("edge decoding matched two classes")
        out[hit] = i
        claimed |= hit
    return out


def decode_edge(geom, bits):
    """Single-bitstring edge decode; returns a class id or INVALID."""
    return int(decode_edge_batch(geom, np.asarray(bits)[None, :])[0])


def decode_vertex_batch(k_classes, bits):
    """One-hot decode of the first K wires' bits: class i iff exactly
    bit i is set."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim == 1:
        bits = bits[None, :]
    if bits.shape[1] != k_classes:
        raise ValueError(f"expected {k_classes} bits per row, got {bits.shape[1]}")
    out = np.full(bits.shape[0], INVALID, dtype=np.int64)
    onehot = bits.sum(axis=1) == 1
    out[onehot] = np.argmax(bits[onehot], axis=1)
    return out


def decode_vertex(k_classes, bits):
    """Single-bitstring one-hot decode; returns a class id or INVALID."""
    return int(decode_vertex_batch(k_classes, np.asarray(bits)[None, :])[0])


def valid_fraction_uniform(k_classes, method, seed=0, n_samples=200_000):
    """Fraction of bitstrings decoding to a valid class under the uniform
    distribution.

    Exhaustive enumeration up to K = 6 (2^15 strings); larger K fall back
    to a seeded Monte Carlo estimate, returned as a Fraction of the sample.
    """
    if not 3 <= k_classes <= 15:
        raise ValueError("K must lie in [3, 15]")
    if method == "edge":
        geom = build_simplex(k_classes)
        width = geom.n_wires
        decode = lambda bits: decode_edge_batch(geom, bits)
    elif method == "vertex":
        width = k_classes
        decode = lambda bits: decode_vertex_batch(k_classes, bits)
    else:
        raise ValueError(f"unknown method {method!r}")
    if k_classes <= 6:
        bits = indices_to_bits(np.arange(2 ** width), width)
        hits = int(np.sum(decode(bits) != INVALID))
        return Fraction(hits, 2 ** width)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=(n_samples, width), dtype=np.uint8)
    hits = int(np.sum(decode(bits) != INVALID))
    return Fraction(hits, n_samples)
