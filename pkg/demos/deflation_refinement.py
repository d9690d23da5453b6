"""Refining multiple zeros to full accuracy by depth deflation."""
from pathlib import Path

import numpy as np

from multizero import depth_deflate, gauss_newton, load_system

HERE = Path(__file__).resolve().parent / "systems"

for name, start, exact in [
    ("trig_cluster.sys", [1.0003, 1.9997, 3.0003], [1, 2, 3]),
    ("exp_cubic.sys", [0.31, -0.31, 0.01], [1 / 3, -1 / 3, 0]),
]:
    sys_ = load_system(HERE / name)
    plain = gauss_newton(sys_, start, theta_j=1e-6)
    res = depth_deflate(sys_, start)
    print(name)
    print(f"  Gauss-Newton until rank-deficient: error {np.abs(plain.x - exact).max():.1e}"
          f" after {plain.iterations} iterations")
    print(f"  depth deflation: {res.stages} stage(s), nullities {res.nullities},"
          f" error {np.abs(res.zero - exact).max():.1e},"
          f" estimate {res.condition.error_estimate:.1e}")
