"""Dual bases at breadth-one zeros from the word algebra of ``Psi``.

A word is a sorted tuple of letters ``l >= 2``; the letter ``l`` stands for
the directional derivative along the anchor ``x_l``, and a word applied to
``f`` is the product of those derivatives evaluated at ``x_1``.  ``Psi``
acts on words as a derivation: it appends a ``2`` and, for each letter
``l``, bumps one occurrence to ``l + 1``.

Equivalently, ``Psi^a f`` is the ``a``-th derivative in ``tau`` of
``f(x_1 + sum_n x_{n+1} tau^n / n!)`` at ``tau = 0``, which turns the whole
recursion into univariate jet arithmetic.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg as sla

from .dual_space import DualFunctional, display_basis
from .expr import System
from .jets import (Jet, JetSpace, directional_derivatives, eval_jet, multi_factorial,
                   value_and_jacobian)
from .macaulay import index_ordering
from .numrank import DEFAULT_THETA, numerical_kernel

Word = tuple
Combo = dict

DEFAULT_TOL = 1e-8
DEFAULT_STAGE_CAP = 64


class BreadthError(ValueError):
    """The zero does not have breadth one."""


def psi_apply(combo: Mapping[Word, complex]) -> Combo:
    """One application of ``Psi`` to a combination of words."""
    out: Counter = Counter()
    for word, a in combo.items():
        out[tuple(sorted(word + (2,)))] += a
        for letter, mu in Counter(word).items():
            w = list(word)
            w.remove(letter)
            out[tuple(sorted(w + [letter + 1]))] += a * mu
    return {w: c for w, c in out.items() if c != 0}


def psi_power(k: int) -> Combo:
    combo: Combo = {(): 1}
    for _ in range(k):
        combo = psi_apply(combo)
    return combo


def evaluate_combo(sys: System, combo: Mapping[Word, complex], anchors: Mapping[int, np.ndarray]) -> np.ndarray:
    """Apply a word combination to every equation, anchors keyed by letter (1 = the zero)."""
    total = np.zeros(sys.t, dtype=complex)
    for word, a in combo.items():
        total += a * directional_derivatives(sys, anchors[1], [anchors[l] for l in word])
    return total


def curve_derivative(sys: System, anchors: Sequence[np.ndarray], k: int) -> np.ndarray:
    """``d^k/dtau^k f(x_1 + sum_n x_{n+1} tau^n/n!)`` at 0, anchors ``[x_1, x_2, ...]``."""
    space = JetSpace.total(1, k)
    s = len(anchors[0])
    vals = []
    for i in range(s):
        c = np.zeros(k + 1, dtype=complex)
        c[0] = anchors[0][i]
        for n in range(1, min(k, len(anchors) - 1) + 1):
            c[n] = anchors[n][i] / math.factorial(n)
        vals.append(Jet(space, c))
    out = np.empty(sys.t, dtype=complex)
    for i, eq in enumerate(sys.equations):
        out[i] = eval_jet(eq, vals).c[k] * math.factorial(k)
    return out


def word_to_partial(combo: Mapping[Word, complex], anchors: Mapping[int, np.ndarray],
                    point=None) -> DualFunctional:
    """Expand words into normalized ``d_j`` terms.

    A word multiplies the linear forms ``v_l . y``; the coefficient of
    ``y^j`` in that product times ``j!`` is its ``d_j`` coefficient.
    """
    missing = {l for w in combo for l in w} - set(anchors)
    if missing:
        raise KeyError(f"no anchor for letters {sorted(missing)}")
    x = np.asarray(anchors[1] if point is None else point, dtype=complex).ravel()
    s = len(x)
    order = max((len(w) for w in combo), default=0)
    space = JetSpace.total(s, order)
    powers: dict = {}

    def power(letter, mu):
        key = (letter, mu)
        if key not in powers:
            base = space.linear(0.0, np.asarray(anchors[letter], dtype=complex))
            powers[key] = base if mu == 1 else power(letter, mu - 1) * base
        return powers[key]

    acc = np.zeros(space.size, dtype=complex)
    for word, a in combo.items():
        term = space.constant(a)
        for letter, mu in sorted(Counter(word).items()):
            term = term * power(letter, mu)
        acc += term.c
    facts = np.array([multi_factorial(j) for j in space.indices])
    coef = acc * facts
    ordering = index_ordering(s, order)
    pos = space.position
    terms = {j: complex(coef[pos[j]]) for j in ordering if abs(coef[pos[j]]) >= 1e-14}
    return DualFunctional(terms, tuple(complex(v) for v in x))


@dataclass
class BreadthOneResult:
    gamma: int
    anchors: list[np.ndarray]
    combos: list[Combo]
    b: np.ndarray
    seed: int
    tol: float
    residuals: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    _expansions: list[DualFunctional] | None = None

    @property
    def multiplicity(self) -> int:
        return self.gamma + 1

    @property
    def depth(self) -> int:
        return self.gamma

    @property
    def hilbert(self) -> list[int]:
        return [1] * (self.gamma + 1) + [0]

    @property
    def expansions(self) -> list[DualFunctional]:
        """``rho_0 .. rho_gamma`` as ``d_j`` combinations."""
        if self._expansions is None:
            self._expansions = [expand_rho(a, self.anchors) for a in range(self.gamma + 1)]
        return self._expansions

    def summary(self) -> str:
        h = ",".join(str(v) for v in self.hilbert)
        return (f"multiplicity {self.multiplicity}, hilbert {h}, "
                f"breadth 1, depth {self.depth}")

    def to_json(self) -> dict:
        return {
            "multiplicity": self.multiplicity,
            "hilbert": self.hilbert,
            "breadth": 1,
            "depth": self.depth,
            "terminated": True,
            "threshold": self.tol,
            "seed": self.seed,
            "dual_basis": [c.to_json() for c in display_basis(self.expansions)],
            "warnings": list(self.warnings),
            "gamma": self.gamma,
            "b": _complex_list(self.b),
            "anchors": {f"x{n + 1}": _complex_list(a) for n, a in enumerate(self.anchors)},
        }


def _complex_list(v) -> list[dict]:
    return [{"re": float(z.real), "im": float(z.imag)} for z in np.ravel(v)]


def expand_rho(alpha: int, anchors: Sequence[np.ndarray]) -> DualFunctional:
    """``rho_alpha`` in ``d_j`` form via the curve ``x_1 + sum x_{n+1} tau^n/n!``.

    The coefficient of ``d_j`` is ``alpha! [tau^alpha] prod_i c_i(tau)^{j_i}``
    with ``c(tau) = sum_{n>=1} x_{n+1} tau^n / n!``.
    """
    x = np.asarray(anchors[0], dtype=complex)
    s = len(x)
    curve = np.zeros((s, alpha + 1), dtype=complex)
    for n in range(1, min(alpha, len(anchors) - 1) + 1):
        curve[:, n] = anchors[n] / math.factorial(n)
    ordering = index_ordering(s, alpha)
    polys: dict = {}
    terms = {}
    one = np.zeros(alpha + 1, dtype=complex)
    one[0] = 1.0
    for j in ordering:
        if sum(j) == 0:
            p = one
        else:
            i = next(q for q in range(s) if j[q] > 0)
            prev = list(j)
            prev[i] -= 1
            p = np.convolve(polys[tuple(prev)], curve[i])[:alpha + 1]
        polys[j] = p
        c = p[alpha] * math.factorial(alpha)
        if abs(c) >= 1e-14:
            terms[j] = complex(c)
    return DualFunctional(terms, tuple(complex(v) for v in x))


def _gauge(anchors, k) -> float:
    """Size of ``Psi^k`` terms: ``Psi^k`` is homogeneous of weight ``k`` when
    ``x_{n+1}`` carries weight ``n``, so anchors set a scale ``omega``."""
    omega = max(np.linalg.norm(a) ** (1.0 / n) for n, a in enumerate(anchors[1:], 1) if np.any(a))
    return max(1.0, omega) ** k


def breadth_one_multiplicity(sys: System, point, seed: int = 0, tol: float = DEFAULT_TOL,
                             theta: float = DEFAULT_THETA,
                             stage_cap: int = DEFAULT_STAGE_CAP,
                             method: str = "words", b="kernel") -> BreadthOneResult:
    """Multiplicity and dual basis at a breadth-one zero.

    ``x_2`` spans the Jacobian kernel, normalized by ``b^H x_2 = 1``.  By
    default ``b`` is the unit null vector itself; ``b="random"`` draws a
    seeded random vector, and any explicit vector is accepted.  Each later
    anchor solves ``[J; b^H] x_{k+1} = [d_k; 0]`` where ``d_k`` is minus
    ``Psi^k f`` with ``x_{k+1} = 0``.  The first ``k`` for which this
    bordered system has no solution (relative residual above
    ``max(tol, 1e-8)``, measured against ``max(|rhs|, |[J; b^H]|_2)``)
    gives ``gamma = k - 1``.

    ``method="words"`` evaluates ``d_k`` word by word with directional
    derivatives; ``"curve"`` uses one univariate jet.  Both give the same
    vector up to roundoff.
    """
    if method not in ("curve", "words"):
        raise ValueError("method must be 'curve' or 'words'")
    x1 = np.asarray(point, dtype=complex).ravel()
    f0, jac = value_and_jacobian(sys, x1)
    kern = numerical_kernel(jac, theta, rng=seed)
    if kern.nullity != 1:
        raise BreadthError(f"Jacobian nullity is {kern.nullity}, breadth-one needs 1")
    if isinstance(b, str) and b == "kernel":
        b = kern.Z[:, 0]
    elif isinstance(b, str) and b == "random":
        rng = np.random.default_rng(seed)
        b = rng.standard_normal(sys.s) + 1j * rng.standard_normal(sys.s)
    b = np.asarray(b, dtype=complex).ravel()
    if b.shape != (sys.s,) or not np.any(b):
        raise ValueError("b must be 'kernel', 'random' or a nonzero vector of length s")
    b = b / np.linalg.norm(b)
    bordered = np.vstack([jac, b.conj()[None, :]])
    q, r = sla.qr(bordered, mode="economic", check_finite=False)
    cutoff = max(tol, 1e-8)
    # a right-hand side at roundoff level must not count as inconsistent
    floor = np.linalg.norm(bordered, 2)

    def solve(rhs, gauge=1.0):
        y = sla.solve_triangular(r, q.conj().T @ rhs, check_finite=False)
        res = np.linalg.norm(bordered @ y - rhs)
        return y, res / max(np.linalg.norm(rhs), floor * gauge)

    rhs = np.zeros(sys.t + 1, dtype=complex)
    rhs[-1] = 1.0
    x2, res2 = solve(rhs)
    anchors = [x1, x2]
    residuals = [res2]
    notes = []
    gamma = None
    combo = psi_power(1)
    combos = [{(): 1}, combo]
    for k in range(2, stage_cap + 1):
        combo = psi_apply(combo)
        if method == "words":
            rest = {w: c for w, c in combo.items() if w != (k + 1,)}
            amap = {n + 1: a for n, a in enumerate(anchors)}
            d = -evaluate_combo(sys, rest, amap)
        else:
            d = -curve_derivative(sys, anchors, k)
        rhs = np.concatenate([d, [0.0]])
        if not np.any(rhs):
            xk, rel = np.zeros(sys.s, dtype=complex), 0.0
        else:
            xk, rel = solve(rhs, _gauge(anchors, k))
        if not (np.isfinite(rel) and np.all(np.isfinite(xk))):
            raise BreadthError(f"anchors overflowed at step {k}")
        residuals.append(rel)
        if rel > cutoff:
            gamma = k - 1
            break
        anchors.append(xk)
        combos.append(combo)
    if gamma is None:
        raise BreadthError(f"stage cap {stage_cap} reached without termination")
    if np.abs(f0).max() > theta * max(1.0, np.abs(jac).sum(axis=1).max()):
        notes.append(f"residual |f(x)|_inf = {np.abs(f0).max():.3e} is large; refine the zero first")
    return BreadthOneResult(gamma, anchors[:gamma + 1], combos[:gamma + 1], b, seed, tol,
                            residuals, notes)
