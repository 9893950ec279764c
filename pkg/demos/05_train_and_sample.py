"""End-to-end desk run: train both codecs on 3 digit classes and sample.

Uses the bundled synthetic corpus (about a minute of CPU).  The threshold
accuracy T, computed from exact simulated activations, comes out similar
for both methods; the majority-vote accuracy over 100 measured bitstrings
per test element (C_m) is where the edge codec pulls ahead, because far
fewer of its samples decode as invalid.
"""

import numpy as np

from simplexvqc import (CircuitSpec, OptimizerConfig, eval_constant,
                        eval_threshold, eval_valid_sampling, make_tempering,
                        train, training_simplex)
from simplexvqc.data import (RawDataset, reduce_and_scale, select_classes,
                             synthetic_digit_corpus)

SEED = 1
imgs, labels = synthetic_digit_corpus(150, 42, split=0)
raw_train = RawDataset(imgs, labels)
imgs, labels = synthetic_digit_corpus(60, 42, split=1)
raw_test = RawDataset(imgs, labels)

train_sub = select_classes(raw_train, 3, SEED)
test_sub = select_classes(raw_test, 3, SEED)
reduced = reduce_and_scale(train_sub, test_sub, 3)
print(f"digit classes {reduced.class_map}, "
      f"{reduced.train_x.shape[0]} train / {reduced.test_x.shape[0]} test")

geom = training_simplex(3)
temp = make_tempering("erf", 0.01)
spec = CircuitSpec(3, "CNN7", None)
opt = OptimizerConfig(seed=SEED, epochs=4)

for codec in ("edge", "vertex"):
    result = train(spec, reduced.train_x, reduced.train_y, codec, temp, opt,
                   geom)
    constant = eval_constant(result.spec, reduced.test_x, reduced.test_labels,
                             codec, shots=100, seed=SEED, geom=geom)
    threshold = eval_threshold(result.spec, reduced.test_x,
                               reduced.test_labels, codec, temp, geom)
    valid = eval_valid_sampling(result.spec, reduced.test_x,
                                reduced.test_labels, codec, seed=SEED,
                                geom=geom)
    invalid_share = constant.macro[:, 3].sum() / constant.macro.sum()
    print(f"\n{codec} codec:")
    print(f"  final loss        {result.losses[-1]:.4f}")
    print(f"  threshold acc T   {threshold.t_acc:.3f}")
    print(f"  majority C_m      {constant.c_m:.3f}")
    print(f"  invalid m-samples {invalid_share:.1%}")
    print(f"  valid-sampling    V_m = {valid.v_m:.3f} after S = {valid.s_count} "
          f"draws/t-sample (converged: {valid.converged})")
    print("  plurality confusion matrix (rows true, last col invalid):")
    print(np.array2string(constant.plurality, prefix="  "))
