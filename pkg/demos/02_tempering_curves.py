"""Tempering derivative curves.

Each sigmoid is input-scaled so its derivative magnitude at z = +-1 equals
the chosen minimum gradient.  After that calibration the logistic and
Gudermannian curves vanish sooner than the error function as |z| grows,
which is why the error function won the normalization ablation.  Writes
tempering_curves.png next to this script if matplotlib is available.
"""

import numpy as np

from simplexvqc import make_tempering, temper, temper_grad

MIN_GRAD = 0.01
FUNCTIONS = ("erf", "logistic", "gudermannian")

configs = {name: make_tempering(name, MIN_GRAD) for name in FUNCTIONS}
for name, config in configs.items():
    print(f"{name:>13}: solved scale s = {config.scale:.6f}, "
          f"|t'(1)| = {abs(temper_grad(config, 1.0)):.6f}, "
          f"t(-1) = {temper(config, -1.0):.6f}")

grid = np.linspace(-1.0, 1.0, 9)
print("\n|dt/dz| along the expectation axis:")
print("  z:    " + "  ".join(f"{z:+.2f}" for z in grid))
for name, config in configs.items():
    mags = np.abs(temper_grad(config, grid))
    print(f"  {name:>12} " + " ".join(f"{m:.3f}" for m in mags))

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    xs = np.linspace(-1, 1, 401)
    fig, ax = plt.subplots(figsize=(7, 4))
    for name, config in configs.items():
        ax.plot(xs, np.abs(temper_grad(config, xs)), label=name)
    ax.axhline(MIN_GRAD, color="gray", ls=":", lw=1)
    ax.set_xlabel("expectation value z")
    ax.set_ylabel("|dt/dz|")
    ax.set_title(f"tempering derivatives, min grad {MIN_GRAD}")
    ax.legend()
    fig.tight_layout()
    fig.savefig("tempering_curves.png", dpi=120)
    print("\nwrote tempering_curves.png")
except ImportError:
    print("\nmatplotlib not installed; skipped the plot")
