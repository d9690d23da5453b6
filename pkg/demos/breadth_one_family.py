"""Breadth-one zeros: multiplicity grows with k while the Jacobian nullity stays 1."""
import time

import numpy as np

from multizero import breadth_one_multiplicity, parse_system
from multizero.cli import fmt_functional
from multizero.dual_space import display_basis

ZERO = np.array([0, 3.141592653589793, 1.772453850905516])
for k in range(1, 11):
    text = f"vars x y z; x^2*sin(y); y - z^2; z - {float(ZERO[2])!r}*cos(x^{k})"
    t0 = time.perf_counter()
    res = breadth_one_multiplicity(parse_system(text), ZERO)
    print(f"k={k:2d}  depth {res.depth:2d}  multiplicity {res.multiplicity:2d}"
          f"  ({time.perf_counter() - t0:.2f}s)")

res = breadth_one_multiplicity(parse_system(
    f"vars x y z; x^2*sin(y); y - z^2; z - {float(ZERO[2])!r}*cos(x^2)"), ZERO)
print("\ndual basis for k=2:")
for c in display_basis(res.expansions):
    print("  ", fmt_functional(c))
