"""Multiplicity structure of an isolated zero from nested Macaulay kernels."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import System, eval_system
from .jets import system_tables
from .macaulay import (MacaulayMatrix, build_macaulay, expand_macaulay,
                       index_ordering)
from .numrank import DEFAULT_THETA, MAX_ITER, initial_state, kernel_expand

PRUNE = 1e-14
PIVOT_TOL = 1e-10
DEFAULT_MAX_ORDER = 50


@dataclass(frozen=True, eq=False)
class DualFunctional:
    """A finite combination ``sum_j c_j d_j`` anchored at ``point``."""

    terms: dict
    point: tuple

    @property
    def order(self) -> int:
        return max((sum(j) for j in self.terms), default=0)

    def vector(self, ordering: Sequence[tuple]) -> np.ndarray:
        pos = {j: n for n, j in enumerate(ordering)}
        v = np.zeros(len(ordering), dtype=complex)
        for j, c in self.terms.items():
            v[pos[j]] = c
        return v

    def __call__(self, tables) -> complex:
        """Apply to a function given by its Taylor table."""
        return sum(c * tables[j] for j, c in self.terms.items())

    def to_json(self) -> dict:
        return {"order": self.order,
                "terms": [{"index": list(j), "re": float(c.real), "im": float(c.imag)}
                          for j, c in self.terms.items()]}


def kernel_to_dual(z: np.ndarray, ordering: Sequence[tuple], point) -> DualFunctional:
    """Read a kernel vector as a functional through the column labels."""
    z = np.asarray(z, dtype=complex).ravel()
    if len(z) > len(ordering):
        raise ValueError("vector longer than the index ordering")
    terms = {tuple(ordering[n]): complex(c) for n, c in enumerate(z) if abs(c) >= PRUNE}
    return DualFunctional(terms, tuple(complex(v) for v in np.ravel(point)))


@dataclass
class MultiplicityStructure:
    multiplicity: int
    hilbert: list[int]
    breadth: int
    depth: int
    basis: list[DualFunctional]
    threshold: float
    terminated: bool
    seed: int | None = None
    warnings: list[str] = field(default_factory=list)
    kernel: np.ndarray | None = None
    matrices: list[MacaulayMatrix] = field(default_factory=list)

    def display_basis(self) -> list[DualFunctional]:
        return display_basis(self.basis)

    def summary(self) -> str:
        h = ",".join(str(v) for v in self.hilbert)
        return (f"multiplicity {self.multiplicity}, hilbert {h}, "
                f"breadth {self.breadth}, depth {self.depth}")

    def to_json(self) -> dict:
        return {
            "multiplicity": self.multiplicity,
            "hilbert": list(self.hilbert),
            "breadth": self.breadth,
            "depth": self.depth,
            "terminated": self.terminated,
            "threshold": self.threshold,
            "seed": self.seed,
            "dual_basis": [c.to_json() for c in self.display_basis()],
            "warnings": list(self.warnings),
        }


def multiplicity_structure(sys: System, point, theta: float = DEFAULT_THETA,
                           max_order: int = DEFAULT_MAX_ORDER, seed: int = 0,
                           keep_matrices: bool = False,
                           max_iter: int = MAX_ITER) -> MultiplicityStructure:
    """Multiplicity, Hilbert function, breadth, depth and dual basis at ``point``.

    Macaulay matrices grow one order at a time; the kernel of each is
    obtained by expanding the previous one.  The loop stops at the first
    order that adds no null vector, or at ``max_order`` with
    ``terminated=False`` (a hint that the zero is not isolated).
    """
    if max_order < 1:
        raise ValueError("max_order must be at least 1")
    if theta <= 0:
        raise ValueError("theta must be positive")
    x = np.asarray(point, dtype=complex).ravel()
    if len(x) != sys.s:
        raise ValueError(f"point has {len(x)} coordinates, system has {sys.s} variables")
    notes: list[str] = []

    s_prev = build_macaulay(sys, x, 0)
    state = initial_state(s_prev, theta, np.random.default_rng(seed), max_iter)
    hilbert = [1]
    mats = [s_prev]
    terminated = False
    order = 0
    for order in range(1, max_order + 1):
        tables = system_tables(sys, x, order)
        s_cur = expand_macaulay(s_prev, sys, x, tables)
        if order == 1:
            fx = np.abs(eval_system(sys, x)).max()
            if fx > theta * max(s_cur.norm_inf(), 1.0):
                notes.append(f"residual |f(x)|_inf = {fx:.3e} exceeds the threshold "
                             "scale; refine the zero (e.g. by deflation) first")
        state, nu = kernel_expand(state, s_cur)
        if keep_matrices:
            mats.append(s_cur)
        s_prev = s_cur
        if nu == 0:
            terminated = True
            break
        hilbert.append(nu)
    depth = len(hilbert) - 1
    if terminated:
        hilbert.append(0)
    else:
        notes.append(f"max_order {max_order} reached without termination; "
                     "the zero may not be isolated")

    amb = _ambiguous(state, theta)
    if amb:
        notes.append("threshold ambiguity: residuals " + ", ".join(f"{v:.2e}" for v in amb)
                     + f" lie within a factor 10 of theta = {theta:g}")

    ordering = index_ordering(sys.s, s_prev.order)
    basis = [kernel_to_dual(state.Z[:, n], ordering, x) for n in range(state.nullity)]
    return MultiplicityStructure(
        multiplicity=sum(hilbert), hilbert=hilbert,
        breadth=hilbert[1] if len(hilbert) > 1 else 0, depth=depth,
        basis=basis, threshold=theta, terminated=terminated, seed=seed,
        warnings=notes, kernel=state.Z, matrices=mats)


def _ambiguous(state, theta: float) -> list[float]:
    """Relative residuals in ``[0.1 theta, 10 theta]``."""
    out = []
    scales = list(state.scales[1:])
    for sig, sc in zip(state.sigmas[1:], scales):
        rel = sig / sc
        if 0.1 * theta <= rel <= 10 * theta:
            out.append(rel)
    for _, sig, sc in state.rejected:
        rel = sig / sc
        if 0.1 * theta <= rel <= 10 * theta:
            out.append(rel)
    return out


def display_basis(basis: Sequence[DualFunctional]) -> list[DualFunctional]:
    """A sparse equivalent basis via reduced row echelon form.

    Columns are scanned from the highest-order index down so each functional
    is led by a distinct top-order term with coefficient 1.
    """
    if not basis:
        return []
    point = basis[0].point
    s = len(point)
    order = max(c.order for c in basis)
    ordering = index_ordering(s, order)
    m = np.array([c.vector(ordering) for c in basis])[:, ::-1]
    rows = _rref(m, PIVOT_TOL)[:, ::-1]
    out = [kernel_to_dual(r, ordering, point) for r in rows]
    out.sort(key=lambda c: (c.order, _leading(c, ordering)))
    return out


def _leading(c: DualFunctional, ordering) -> tuple:
    pos = {j: n for n, j in enumerate(ordering)}
    return (max(pos[j] for j in c.terms),)


def _rref(m: np.ndarray, tol: float) -> np.ndarray:
    a = m.astype(complex).copy()
    rows, cols = a.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(a[r:, c])))
        if abs(a[p, c]) <= tol:
            continue
        a[[r, p]] = a[[p, r]]
        a[r] /= a[r, c]
        others = np.arange(rows) != r
        a[others] -= np.outer(a[others, c], a[r])
        a[others, c] = 0
        r += 1
    a[np.abs(a) < PRUNE] = 0
    return a[:r]


@dataclass
class ClosednessReport:
    residuals: dict
    max_residual: float


def closedness_residual(c: DualFunctional, sys: System, point) -> ClosednessReport:
    """``|c((x - xhat)^j f_i)|`` for every equation and every ``|j| <= order(c)``.

    Uses ``c((x - xhat)^j f) = sum_k c_k coef_{k-j}(f)``.
    """
    x = np.asarray(point, dtype=complex).ravel()
    order = c.order
    tables = system_tables(sys, x, order)
    res = {}
    for i, tab in enumerate(tables):
        for j in index_ordering(sys.s, order):
            val = sum(coef * tab[tuple(a - b for a, b in zip(k, j))]
                      for k, coef in c.terms.items())
            res[(i, j)] = abs(val)
    return ClosednessReport(res, max(res.values(), default=0.0))
