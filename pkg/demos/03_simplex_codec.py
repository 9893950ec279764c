"""Walking through the edge codec geometry at K = 4.

Six wires carry positions along the six edges of a regular tetrahedron.
For each vertex, the slices through its edge points intersect in a single
point n_i, and p_i = 1 - ||v_i - n_i||^2 is the class logit.  On the
unit-edge simplex used for training, parking every edge incident to class
y at its y endpoint makes the logits exactly one-hot, no matter where the
other edges sit.
"""

import numpy as np

from simplexvqc import (build_simplex, edge_logits, edge_target_values,
                        training_simplex)

K = 4
geom = training_simplex(K)
print("edge order:", geom.edges)
print("vertex coordinates (unit side):")
print(np.round(geom.vertices, 4))

rng = np.random.default_rng(7)
for y in range(K):
    values = edge_target_values(geom, y)
    # scatter the three non-incident edges anywhere: the logits ignore them
    free = [w for w in range(geom.n_wires) if w not in geom.incident_wires(y)]
    values[free] = rng.uniform(0, 1, len(free))
    print(f"\nclass {y} pattern with random free edges {np.round(values, 2)}")
    print("  logits:", np.round(edge_logits(geom, values), 6))

# Softened patterns: pull the incident edges 20% toward the middle and the
# margin shrinks smoothly.
values = edge_target_values(geom, 2) * 0.6 + 0.2
print("\nsoftened class-2 pattern:", np.round(values, 2))
print("  logits:", np.round(edge_logits(geom, values), 4))

# The unit-norm scale keeps p = 0 at the centroid instead.
centered = np.full(6, 0.5)
print("\nall edges at 0.5:")
print("  unit-side logits:", np.round(edge_logits(geom, centered), 4))
print("  unit-norm logits:", np.round(edge_logits(build_simplex(K), centered), 4))
