"""How many bitstrings decode to a class at all?

The one-hot (vertex) readout accepts exactly K of the 2^K strings on its
measured wires.  The edge readout only constrains the K-1 edges incident
to a class, leaving the rest free, so twice the fraction of strings is
valid before any training happens.  This script enumerates both counts
exactly for K = 3..6.
"""

import numpy as np

from simplexvqc import build_simplex, decode_edge_batch, valid_fraction_uniform
from simplexvqc.statevec import indices_to_bits

print(f"{'K':>2} {'wires':>5} {'edge valid':>12} {'vertex valid':>13} {'ratio':>6}")
for k in range(3, 7):
    edge = valid_fraction_uniform(k, "edge")
    vertex = valid_fraction_uniform(k, "vertex")
    w = k * (k - 1) // 2
    print(f"{k:>2} {w:>5} {str(edge):>12} {str(vertex):>13} "
          f"{float(edge / vertex):>6.1f}")

# The K=3 case is small enough to eyeball: every string and its decode.
print("\nK=3 decode table (wires carry edges (0,1), (0,2), (1,2)):")
geom = build_simplex(3)
bits = indices_to_bits(np.arange(8), 3)
decoded = decode_edge_batch(geom, bits)
for row, cls in zip(bits, decoded):
    label = f"class {cls}" if cls >= 0 else "invalid"
    print(f"  {''.join(map(str, row))} -> {label}")
