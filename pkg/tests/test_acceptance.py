"""Acceptance criteria, one PASS/FAIL line per criterion.

``pytest tests/test_acceptance.py -v`` prints the lines in the terminal
summary; ``python3 tests/test_acceptance.py`` prints them directly.  Each
line lists the measured values next to the targets.
"""
import sys
import time
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import sympy as sp

sys.path.insert(0, str(Path(__file__).resolve().parent))

from _exact import exact_nullities, hilbert_from_nullities  # noqa: E402
from _systems import (CUBIC_CHAIN, EXP_CUBIC, EXP_CUBIC_START, PI_CURVE_ZERO,  # noqa: E402
                      QUADRATIC_PAIR, SINE_SQUARES, SQUARES, REFERENCE_ZEROS_EPS8, REFERENCE_ZEROS_EPS12,
                      TRIG_CLUSTER, TRIG_CLUSTER_START, TRIG_CLUSTER_ZERO, TRIG_TWELVE,
                      perturbed_trig, pi_curve, system)
from multizero.breadth_one import breadth_one_multiplicity, psi_power  # noqa: E402
from multizero.deflation import (cluster_search, condition_number, depth_deflate,  # noqa: E402
                                 gauss_newton)
from multizero.dual_space import (closedness_residual, display_basis,  # noqa: E402
                                  multiplicity_structure)
from multizero.jets import directional_derivatives, jet_truncate  # noqa: E402
from multizero.macaulay import build_macaulay, index_ordering  # noqa: E402
from multizero.numrank import numerical_kernel  # noqa: E402

LINES: dict = {}


class Checks:
    """Collects named sub-checks for one criterion."""

    def __init__(self, label):
        self.label = label
        self.items = []
        self.start = time.perf_counter()

    def __call__(self, name, ok, detail=""):
        self.items.append((name, bool(ok), detail))

    def finish(self):
        ok = all(flag for _, flag, _ in self.items)
        parts = [f"{name}{'' if flag else ' [FAIL]'}: {detail}" if detail else
                 f"{name}{'' if flag else ' [FAIL]'}" for name, flag, detail in self.items]
        secs = time.perf_counter() - self.start
        line = f"{'PASS' if ok else 'FAIL'}  {self.label} ({secs:.1f}s)  " + "; ".join(parts)
        LINES[self.label] = line
        assert ok, line


def structure_line(res):
    return f"m={res.multiplicity} h={res.hilbert} breadth={res.breadth} depth={res.depth}"


def test_criterion_1_quadratic_pair():
    c = Checks("C1 quadratic pair structure and dual basis")
    res = multiplicity_structure(system(QUADRATIC_PAIR), [0, 0], theta=1e-8)
    c("structure", (res.multiplicity, res.hilbert, res.breadth, res.depth)
      == (3, [1, 1, 1, 0], 1, 2), structure_line(res))
    ordering = index_ordering(2, 3)
    pos = {j: n for n, j in enumerate(ordering)}
    want = np.zeros((len(ordering), 3))
    want[pos[(0, 0)], 0] = 1
    want[pos[(1, 0)], 1] = want[pos[(0, 1)], 1] = 1
    for j, v in {(1, 0): -1, (2, 0): 1, (1, 1): 1, (0, 2): 1}.items():
        want[pos[j], 2] = v
    got = np.array([f.vector(ordering) for f in res.basis]).T
    angle = float(np.max(sla.subspace_angles(got, want)))
    c("span", angle < 1e-8, f"max principal angle {angle:.1e} (< 1e-8)")
    c.finish()


def test_criterion_2_trig_twelve():
    c = Checks("C2 trig system with multiplicity 12")
    res = multiplicity_structure(system(TRIG_TWELVE), [0, 0])
    c("structure", (res.multiplicity, res.hilbert, res.breadth, res.depth)
      == (12, [1, 2, 3, 2, 2, 1, 1, 0], 2, 6), structure_line(res))
    c.finish()


def test_criterion_3_sine_squares_and_cubic_chain():
    c = Checks("C3 sine squares and cubic chain")
    a = multiplicity_structure(system(SINE_SQUARES), [0, 0])
    c("sine squares", (a.multiplicity, a.hilbert) == (12, [1, 2, 3, 3, 2, 1, 0]),
      structure_line(a))
    b = multiplicity_structure(system(CUBIC_CHAIN), [0, 0, 0])
    c("cubic chain", (b.multiplicity, b.hilbert, b.depth, b.breadth)
      == (12, [1] * 12 + [0], 11, 1), structure_line(b))
    c.finish()


def test_criterion_4_trig_cluster():
    c = Checks("C4 perturbed trig system, one deflation stage")
    sys_ = system(TRIG_CLUSTER)
    plain = gauss_newton(sys_, TRIG_CLUSTER_START)
    plain_err = float(np.max(np.abs(plain.x - TRIG_CLUSTER_ZERO)))
    at_start = condition_number(sys_, TRIG_CLUSTER_START).error_estimate
    c("plain Gauss-Newton stalls near 2.7e-4", 2.7e-4 / 3 <= plain_err <= 2.7e-4 * 3,
      f"error {plain_err:.1e} after {plain.iterations} iterations ({plain.reason}), "
      f"residual {plain.residuals[-1]:.1e}; estimate at the reference stall point "
      f"{at_start:.1e}")
    res = depth_deflate(sys_, TRIG_CLUSTER_START)
    err = float(np.max(np.abs(res.zero - TRIG_CLUSTER_ZERO)))
    est = res.condition.error_estimate
    c("one stage", res.stages == 1, f"stages {res.stages}, error {err:.1e}")
    c("estimate <= 5e-14", est <= 5e-14, f"{est:.2e}")
    c("estimate matches 1.9e-14 within factor 3", 1.9e-14 / 3 <= est <= 1.9e-14 * 3,
      f"{est:.2e}")
    st = multiplicity_structure(sys_, res.zero, theta=1e-12)
    c("structure at theta 1e-12", (st.multiplicity, st.breadth, st.depth, st.hilbert)
      == (11, 3, 4, [1, 3, 3, 3, 1, 0]), structure_line(st))
    c.finish()


def test_criterion_5_exp_cubic():
    c = Checks("C5 exponential cubic, three deflation stages")
    res = depth_deflate(system(EXP_CUBIC), EXP_CUBIC_START)
    err = float(np.max(np.abs(res.zero - np.array([1 / 3, -1 / 3, 0]))))
    c("stages", res.stages == 3, f"{res.stages}")
    c("zero", err <= 1e-12, f"max coordinate error {err:.1e} (<= 1e-12)")
    st = multiplicity_structure(system(EXP_CUBIC), res.zero)
    c("structure", (st.multiplicity, st.depth, st.breadth, st.hilbert)
      == (9, 5, 2, [1, 2, 2, 2, 1, 1, 0]), structure_line(st))
    c.finish()


def test_criterion_6_breadth_one_table():
    c = Checks("C6 breadth-one family, k = 2..10")
    for k in (2, 4, 6, 8, 10):
        res = breadth_one_multiplicity(system(pi_curve(k)), PI_CURVE_ZERO)
        c(f"k={k}", (res.depth, res.multiplicity) == (2 * k + 1, 2 * k + 2),
          f"depth {res.depth} m {res.multiplicity}")
        led = [f.terms for f in display_basis(res.expansions)
               if (0, 1, 0) in f.terms and (2 * k, 0, 0) in f.terms]
        if len(led) != 1:
            c(f"k={k} d_y functional", False, "not found")
            continue
        t = led[0]
        rz = t[(0, 0, 1)] / t[(0, 1, 0)]
        rx = t[(2 * k, 0, 0)] / t[(0, 1, 0)]
        dev = max(abs(rz - 0.2820947917738781), abs(rx + 0.3183098861837908))
        c(f"k={k} coefficients", dev <= 1e-9, f"{rx.real:.16f}, {rz.real:.16f} (dev {dev:.0e})")
    c.finish()


def match_table(zeros, table, tol):
    if len(zeros) != len(table):
        return False, float("inf")
    worst = 0.0
    used = set()
    for row in table:
        d = [np.max(np.abs(z.x - np.array(row))) for z in zeros]
        n = int(np.argmin(d))
        used.add(n)
        worst = max(worst, d[n])
    return worst <= tol and len(used) == len(table), worst


def table_checks(c, sign, tag):
    for eps, table, tol in ((1e-8, REFERENCE_ZEROS_EPS8, 1e-9), (1e-12, REFERENCE_ZEROS_EPS12, 1e-11)):
        zeros = cluster_search(system(perturbed_trig(eps, sign)), [0, 0], 0.02, n_starts=500,
                               seed=0)
        ok, worst = match_table(zeros, table, tol)
        c(f"{tag} eps={eps:g} count", len(zeros) == 6, f"{len(zeros)} zeros")
        c(f"{tag} eps={eps:g} rows", ok, f"max distance {worst:.1e} (<= {tol:g})")


def test_criterion_7_cluster_table():
    c = Checks("C7 perturbed cluster (reference system)")
    table_checks(c, "-", "reference")
    c.finish()


def test_criterion_7_supplementary_plus_sign():
    # not a criterion: the same table against the system with +y^2, see the notes
    c = Checks("C7 supplementary (second equation with +y^2)")
    table_checks(c, "+", "variant")
    c.finish()


def jet_invariance(c):
    cases = [("quadratic pair", QUADRATIC_PAIR, 2), ("trig twelve", TRIG_TWELVE, 2),
             ("sine squares", SINE_SQUARES, 2), ("cubic chain", CUBIC_CHAIN, 3)]
    for name, text, s in cases:
        sys_ = system(text)
        full = multiplicity_structure(sys_, np.zeros(s))
        jet = multiplicity_structure(jet_truncate(sys_, np.zeros(s), full.depth + 1), np.zeros(s))
        c(f"jet invariance, {name}", jet.hilbert == full.hilbert, f"m={jet.multiplicity}")


def closedness(c):
    theta = 1e-8
    worst = 0.0
    for text, s in [(QUADRATIC_PAIR, 2), (TRIG_TWELVE, 2), (SINE_SQUARES, 2), (CUBIC_CHAIN, 3),
                    (SQUARES, 2)]:
        sys_ = system(text)
        res = multiplicity_structure(sys_, np.zeros(s), theta=theta)
        bound = 100 * theta * build_macaulay(sys_, np.zeros(s), res.depth).norm_inf()
        for f in res.basis:
            worst = max(worst, closedness_residual(f, sys_, np.zeros(s)).max_residual / bound)
    c("closedness", worst < 1, f"max residual / bound {worst:.1e}")


def exact_oracle(c):
    x1, x2, x3, x, y = sp.symbols("x1 x2 x3 x y")
    cases = [(QUADRATIC_PAIR, [x1 - x2 + x1**2, x1 - x2 + x2**2], [x1, x2], 3),
             (CUBIC_CHAIN, [x2**3, x2 - x3**2, x3 - x1**2], [x1, x2, x3], 12),
             (SQUARES, [x**2, y**2], [x, y], 3)]
    ok = True
    for text, polys, syms, top in cases:
        want = hilbert_from_nullities(exact_nullities(polys, syms, [0] * len(syms), top))
        got = multiplicity_structure(system(text), np.zeros(len(syms))).hilbert
        ok &= got == want
    sq = multiplicity_structure(system(SQUARES), [0, 0])
    c("exact rank oracle", ok and sq.multiplicity == 4 and sq.hilbert == [1, 2, 1, 0],
      "3 polynomial systems")


def planted_kernels(c):
    worst = 0.0
    ok = True
    for case in range(20):
        rng = np.random.default_rng(500 + case)
        m = int(rng.integers(4, 14))
        n = int(rng.integers(3, m + 1))
        nullity = int(rng.integers(0, n))
        u = np.linalg.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))[0]
        v = np.linalg.qr(rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))[0]
        sig = np.exp(rng.uniform(np.log(1e-3), np.log(10), n))
        sig[n - nullity:] = [0.0, 1e-13, 1e-11][case % 3]
        a = (u[:, :n] * sig) @ v.conj().T
        res = numerical_kernel(a, theta=1e-8, rng=case)
        ok &= res.nullity == nullity
        if nullity and res.nullity == nullity:
            worst = max(worst, float(np.max(sla.subspace_angles(res.Z, v[:, n - nullity:]))))
    c("planted kernels", ok and worst < 1e-8, f"20 matrices, max angle {worst:.0e}")


def psi_expansion(c):
    got = psi_power(3)
    c("Psi^3 expansion", got == {(2, 2, 2): 1, (2, 3): 3, (4,): 1}, str(got))


def deflation_invariants(c):
    ok = True
    runs = [(EXP_CUBIC, EXP_CUBIC_START), (TRIG_CLUSTER, TRIG_CLUSTER_START),
            (QUADRATIC_PAIR, [0.01, 0.02]), (TRIG_TWELVE, [0.01, 0.01]), (SQUARES, [0.02, -0.01])]
    for text, x0 in runs:
        sys_ = system(text)
        res = depth_deflate(sys_, x0)
        depth = multiplicity_structure(sys_, np.round(res.zero.real, 10)).depth
        ok &= res.stages <= depth
        ok &= all(np.linalg.norm(res.anchors[2 ** (k - 1)]) > 0 for k in range(1, res.stages + 1))
        for b in range(2 ** res.stages):
            total = sum(w * directional_derivatives(sys_, res.anchors[0], d)
                        for w, d in res.induced_functional(b))
            ok &= bool(np.abs(total).max() < 1e-12)
    c("deflation stages <= depth, nonzero anchors", ok, f"{len(runs)} runs")


def gauss_newton_simple(c):
    rep = gauss_newton(system("vars x y; x^2 - 1; (x - 1)*y"), [1.3, 0.2])
    c("Gauss-Newton", rep.residuals[-1] < 1e-14 and rep.iterations <= 8,
      f"residual {rep.residuals[-1]:.0e} in {rep.iterations} iterations")


def test_criterion_8_properties():
    c = Checks("C8 property suite")
    for part in (jet_invariance, closedness, exact_oracle, planted_kernels, psi_expansion,
                 deflation_invariants, gauss_newton_simple):
        part(c)
    c.finish()


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    failed = 0
    for t in tests:
        try:
            t()
        except AssertionError:
            failed += 1
    for line in LINES.values():
        print(line)
    sys.exit(1 if failed else 0)
