"""The light-cone dead zone, made visible.

At K = 5 the one-hot readout measures only wires 0..4 of the 10-wire
circuit, so every parameter whose gate cannot influence those wires gets
exactly zero gradient.  The edge readout measures all wires and leaves no
parameter behind.  A single short training run shows both effects.
"""

import numpy as np

from simplexvqc import (CircuitSpec, OptimizerConfig, backward_light_cone,
                        make_tempering, train)
from simplexvqc.data import (RawDataset, fit_pixel_transform, one_hot,
                             select_classes, synthetic_digit_corpus)

K = 5
images, labels = synthetic_digit_corpus(24, seed=11, split=0)
subset = select_classes(RawDataset(images, labels), K, seed=0)
features = fit_pixel_transform(subset.images, 20).apply(subset.images)
targets = one_hot(subset.labels, K)

spec = CircuitSpec(K, "CNN7", None)
temp = make_tempering("erf", 0.01)
opt = OptimizerConfig(epochs=1, seed=3)

for codec in ("vertex", "edge"):
    result = train(spec, features, targets, codec, temp, opt)
    totals = result.grad_totals
    dead = np.flatnonzero(totals == 0.0)
    print(f"{codec}: {len(dead)} of {totals.size} parameters got zero "
          f"gradient over the epoch")
    if dead.size:
        print(f"  dead indices: {dead.min()}..{dead.max()}")
        predicted = np.flatnonzero(~backward_light_cone(result.spec, range(K)))
        print(f"  backward-light-cone prediction matches: "
              f"{np.array_equal(dead, predicted)}")
    # a coarse picture of gradient mass per block of 10 parameters
    blocks = totals.reshape(-1, 10).sum(axis=1)
    peak = blocks.max()
    bars = "".join(" .:-=+*#"[min(7, int(8 * b / peak))] for b in blocks)
    print(f"  per-block gradient mass |{bars}|")
