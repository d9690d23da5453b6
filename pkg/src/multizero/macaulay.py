"""Macaulay matrices built from Taylor tables.

Columns are labeled by multi-indices ``j`` (the functionals ``d_j``) in the
graded order of :func:`index_ordering`; rows by pairs ``(k, i)`` meaning the
shifted equation ``(x - xhat)^k f_i``.  The entry in row ``(k, i)``, column
``j`` is the normalized Taylor coefficient of ``f_i`` at ``j - k`` (zero when
``j - k`` has a negative component).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from pathlib import Path
from typing import Sequence

import numpy as np

from .expr import System
from .jets import TaylorTable, graded_indices, system_tables


@lru_cache(maxsize=None)
def index_ordering(s: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Multi-indices with ``|j| <= order``, by degree then lex-decreasing."""
    return tuple(graded_indices(s, order))


@lru_cache(maxsize=None)
def _index_array(s: int, order: int) -> np.ndarray:
    return np.array(index_ordering(s, order), dtype=np.int64).reshape(-1, s)


@lru_cache(maxsize=None)
def _positions(s: int, order: int) -> dict:
    return {j: n for n, j in enumerate(index_ordering(s, order))}


@dataclass(frozen=True, eq=False)
class MacaulayMatrix:
    """The order-``alpha`` Macaulay matrix with its row and column labels."""

    order: int
    entries: np.ndarray
    row_labels: tuple[tuple[tuple[int, ...], int], ...]
    col_labels: tuple[tuple[int, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def norm_inf(self) -> float:
        if self.entries.size == 0:
            return 0.0
        return float(np.abs(self.entries).sum(axis=1).max())

    def to_csv(self, target) -> None:
        """Write the matrix with ``d<j>`` column and ``(x-x̂)^k f_i`` row labels.

        ``target`` is a path or an open text stream.
        """
        if hasattr(target, "write"):
            self._write_csv(target)
            return
        with open(target, "w", newline="", encoding="utf-8") as fh:
            self._write_csv(fh)

    def _write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row"] + [column_label(j) for j in self.col_labels])
        for (k, i), row in zip(self.row_labels, self.entries):
            w.writerow([_row_label(k, i)] + [_complex_str(v) for v in row])


def column_label(j: Sequence[int]) -> str:
    sep = "" if max(j) < 10 else "_"
    return "d" + sep.join(str(v) for v in j)


def _row_label(k: Sequence[int], i: int) -> str:
    return f"(x-x̂)^({','.join(str(v) for v in k)}) f{i + 1}"


def _complex_str(z: complex) -> str:
    z = complex(z)
    return f"{z.real!r}{z.imag:+.17g}i"


def _row_labels(s: int, t: int, order: int):
    if order == 0:
        return tuple(((0,) * s, i) for i in range(t))
    return tuple((k, i) for k in index_ordering(s, order - 1) for i in range(t))


def row_count(s: int, t: int, order: int) -> int:
    return t if order == 0 else t * comb(order - 1 + s, s)


def build_macaulay(sys: System, point, order: int,
                   tables: Sequence[TaylorTable] | None = None) -> MacaulayMatrix:
    """Build ``S_order`` directly.

    ``order == 0`` gives the ``t x 1`` column of values ``f(xhat)``, which
    nests as the first column of ``S_1 = [f(xhat) | J(xhat)]``.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    if tables is None:
        tables = system_tables(sys, point, order)
    _check_tables(tables, sys, order)
    s, t = sys.s, sys.t
    cols = index_ordering(s, order)
    rows = _row_labels(s, t, order)
    jarr = _index_array(s, order)
    pos = _positions(s, order)
    coef = np.array([tab.coefficients[:len(cols)] for tab in tables])
    entries = np.zeros((len(rows), len(cols)), dtype=complex)
    shifts = index_ordering(s, max(order - 1, 0))
    for r, k in enumerate(shifts):
        diff = jarr - np.array(k)
        ok = np.nonzero(np.all(diff >= 0, axis=1))[0]
        src = [pos[tuple(int(v) for v in d)] for d in diff[ok]]
        entries[r * t:(r + 1) * t, ok] = coef[:, src]
    return MacaulayMatrix(order, entries, rows, cols)


def expand_macaulay(prev: MacaulayMatrix, sys: System, point,
                    tables: Sequence[TaylorTable] | None = None) -> MacaulayMatrix:
    """``S_{alpha}`` from ``S_{alpha-1}``, copying the old block verbatim."""
    order = prev.order + 1
    full = build_macaulay(sys, point, order, tables)
    m0, n0 = prev.shape
    if full.row_labels[:m0] != prev.row_labels or full.col_labels[:n0] != prev.col_labels:
        raise ValueError("previous matrix does not nest in the expansion")
    entries = full.entries
    entries[:m0, :n0] = prev.entries
    return MacaulayMatrix(order, entries, full.row_labels, full.col_labels)


def _check_tables(tables, sys: System, order: int) -> None:
    if len(tables) != sys.t:
        raise ValueError(f"expected {sys.t} Taylor tables, got {len(tables)}")
    for tab in tables:
        if tab.order < order:
            raise ValueError(f"Taylor table of order {tab.order} < {order}")


def dump_macaulay(matrices: Sequence[MacaulayMatrix], directory) -> list[Path]:
    """Write ``S_<order>.csv`` files into ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    out = []
    for mat in matrices:
        p = d / f"S_{mat.order}.csv"
        mat.to_csv(p)
        out.append(p)
    return out
