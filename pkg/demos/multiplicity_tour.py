"""Multiplicity structure of the bundled systems at their multiple zeros."""
from pathlib import Path

import numpy as np

from multizero import load_system, multiplicity_structure
from multizero.cli import fmt_functional

HERE = Path(__file__).resolve().parent / "systems"

ZEROS = {
    "quadratic_pair.sys": [0, 0],
    "trig_twelve.sys": [0, 0],
    "sine_squares.sys": [0, 0],
    "cubic_chain.sys": [0, 0, 0],
    "trig_cluster.sys": [1, 2, 3],
    "exp_cubic.sys": [1 / 3, -1 / 3, 0],
}

for name, zero in ZEROS.items():
    sys_ = load_system(HERE / name)
    # the trig cluster is perturbed at the 1e-15 level, so loosen the threshold
    theta = 1e-12 if name == "trig_cluster.sys" else 1e-8
    res = multiplicity_structure(sys_, np.array(zero, dtype=complex), theta=theta)
    print(f"{name:20s} {res.summary()}")

res = multiplicity_structure(load_system(HERE / "quadratic_pair.sys"), [0, 0])
print("\ndual basis at the triple zero of quadratic_pair.sys:")
for c in res.display_basis():
    print("  ", fmt_functional(c))
