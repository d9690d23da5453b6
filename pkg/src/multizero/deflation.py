"""Depth deflation, Gauss-Newton refinement and condition estimates.

A stage-``k`` deflated system lives on ``2^k`` blocks of ``s`` variables.
Its equations come in two kinds:

* word equations, one block of ``t`` rows per bitmask ``b`` of stages:
  the coefficient of ``eps^b`` in ``f(sum_m eps^m x_{m+1})`` where ``eps^m``
  is the square-free monomial of the stages set in ``m``;
* linear equations ``R x_blocks - rhs`` from the random bordering matrices.

Stage ``k+1`` keeps every stage-``k`` equation and adds its derivative along
the new half of the variables (word ``b`` -> ``b | bit k``; a linear
equation moves to the shifted blocks with zero right-hand side), followed
by the new bordering rows ``R_{k+1} x_new - e1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .expr import System
from .jets import Jet, JetSpace, eval_jet, value_and_jacobian
from .numrank import lstsq, null_vector_iterate, numerical_kernel, random_unit

DEFAULT_THETA_J = 1e-6
DEFAULT_TOL = 1e-14
DEFAULT_STAGE_CAP = 8
MAX_HALVINGS = 10


class DeflationError(RuntimeError):
    """Deflation could not proceed (nothing to deflate, stage cap, bad bordering)."""


@dataclass(frozen=True)
class _Linear:
    stage: int    # which R (1-based)
    offset: int   # first block the coefficients act on
    rhs: bool     # subtract e1 (only for the rows a stage introduces)


class DeflatedSystem:
    """The depth-deflated system after ``stage`` steps."""

    def __init__(self, base: System, rmats: Sequence[np.ndarray] = ()):
        self.base = base
        self.rmats = [np.asarray(r, dtype=complex) for r in rmats]
        self.stage = len(self.rmats)
        groups: list = [0]
        for k, r in enumerate(self.rmats, start=1):
            half = 2 ** (k - 1)
            if r.shape[1] != half * base.s:
                raise ValueError(f"R_{k} must have {half * base.s} columns")
            shifted = [g | (1 << (k - 1)) if isinstance(g, int)
                       else _Linear(g.stage, g.offset + half, False) for g in groups]
            groups = groups + shifted + [_Linear(k, half, True)]
        self.groups = groups
        self.s = base.s * 2 ** self.stage
        self.t = sum(base.t if isinstance(g, int) else self.rmats[g.stage - 1].shape[0]
                     for g in groups)
        self._space = JetSpace.flags_with_linear(self.stage, base.s)
        self._flag_pos = []
        self._lin_pos = []
        zero_lin = (0,) * base.s
        for b in range(2 ** self.stage):
            bits = tuple((b >> q) & 1 for q in range(self.stage))
            self._flag_pos.append(self._space.position[bits + zero_lin])
            row = []
            for c in range(base.s):
                e = [0] * base.s
                e[c] = 1
                row.append(self._space.position[bits + tuple(e)])
            self._lin_pos.append(row)

    def expand(self, r: np.ndarray) -> "DeflatedSystem":
        return DeflatedSystem(self.base, self.rmats + [np.asarray(r, dtype=complex)])

    @property
    def words(self) -> list[int]:
        return [g for g in self.groups if isinstance(g, int)]

    def value_and_jacobian(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=complex).ravel()
        if len(x) != self.s:
            raise ValueError(f"expected {self.s} coordinates, got {len(x)}")
        s, nb = self.base.s, 2 ** self.stage
        blocks = x.reshape(nb, s)
        space = self._space
        vals = []
        for i in range(s):
            c = np.zeros(space.size, dtype=complex)
            for m in range(nb):
                c[self._flag_pos[m]] += blocks[m, i]
            c[self._lin_pos[0][i]] = 1.0
            vals.append(Jet(space, c))
        series = [eval_jet(eq, vals).c for eq in self.base.equations]
        fvals, rows = [], []
        for g in self.groups:
            if isinstance(g, int):
                for ser in series:
                    fvals.append(ser[self._flag_pos[g]])
                    row = np.zeros(self.s, dtype=complex)
                    for m in range(nb):
                        if m & ~g == 0:
                            row[m * s:(m + 1) * s] = ser[self._lin_pos[g & ~m]]
                    rows.append(row)
            else:
                r = self.rmats[g.stage - 1]
                lo = g.offset * s
                v = r @ x[lo:lo + r.shape[1]]
                if g.rhs:
                    v = v.copy()
                    v[0] -= 1.0
                fvals.extend(v)
                block = np.zeros((r.shape[0], self.s), dtype=complex)
                block[:, lo:lo + r.shape[1]] = r
                rows.extend(block)
        return np.array(fvals), np.array(rows)

    def __call__(self, x) -> np.ndarray:
        return self.value_and_jacobian(x)[0]


def _fj(sys, x):
    if isinstance(sys, DeflatedSystem):
        return sys.value_and_jacobian(x)
    return value_and_jacobian(sys, x)


@dataclass
class GaussNewtonReport:
    x: np.ndarray
    iterations: int
    residuals: list[float]
    steps: list[float]
    converged: bool
    reason: str
    rank_deficient: bool = False


def gauss_newton(sys, x0, tol: float = DEFAULT_TOL, max_iter: int = 100,
                 theta_j: float | None = None, patience: int = 3) -> GaussNewtonReport:
    """Damped Gauss-Newton: ``x <- x - lam * J^+ f`` with ``lam`` halved on ascent.

    Stops when ``||step|| <= tol (1 + ||x||)`` (converged), when no trial
    step lowers the residual (stagnation), or after ``max_iter``.  When
    ``theta_j`` is given, the iteration also stops once the Jacobian has
    been numerically rank-deficient at ``theta_j`` for ``patience``
    consecutive iterates; the report is then flagged ``rank_deficient``.
    """
    x = np.asarray(x0, dtype=complex).ravel().copy()
    f, jac = _fj(sys, x)
    res = [float(np.linalg.norm(f))]
    steps: list[float] = []
    singular_run = 0
    reason = "max_iter"
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if theta_j is not None:
            singular_run = singular_run + 1 if _nullity(jac, theta_j) else 0
            if singular_run >= patience:
                reason = "rank_deficient"
                it -= 1
                break
        step = lstsq(jac, f)
        nstep = float(np.linalg.norm(step))
        if nstep <= tol * (1.0 + np.linalg.norm(x)):
            x = x - step
            f, jac = _fj(sys, x)
            res.append(float(np.linalg.norm(f)))
            steps.append(nstep)
            converged, reason = True, "step"
            break
        lam = 1.0
        for _ in range(MAX_HALVINGS + 1):
            xn = x - lam * step
            fn, jn = _fj(sys, xn)
            rn = float(np.linalg.norm(fn))
            if rn < res[-1]:
                break
            lam *= 0.5
        else:
            reason = "stagnation"
            it -= 1
            break
        x, f, jac = xn, fn, jn
        res.append(rn)
        steps.append(lam * nstep)
        if rn == 0.0:
            converged, reason = True, "exact"
            break
    rank_def = bool(_nullity(jac, theta_j or DEFAULT_THETA_J))
    return GaussNewtonReport(x, it, res, steps, converged, reason, rank_def)


def _nullity(jac: np.ndarray, theta: float) -> int:
    return numerical_kernel(jac, theta, rng=0).nullity


@dataclass
class ConditionEstimate:
    kappa: float
    error_estimate: float
    residual: float


def condition_number(sys, x, theta_j: float = DEFAULT_THETA_J) -> ConditionEstimate:
    """``kappa = ||J^+||_2`` and the error estimate ``kappa * ||f(x)||_2``.

    ``kappa`` is infinite when the Jacobian has a numerical kernel at
    ``theta_j``; otherwise it is ``1 / sigma_min`` from a dense SVD (the
    deflated Jacobians are small, and the null-vector iteration only
    resolves ``sigma_min`` to a few digits).
    """
    f, jac = _fj(sys, x)
    r = float(np.linalg.norm(f))
    if _nullity(jac, theta_j):
        return ConditionEstimate(float("inf"), float("inf"), r)
    kappa = 1.0 / float(sla.svdvals(jac)[-1])
    return ConditionEstimate(kappa, kappa * r, r)


def deflate_step(ds: DeflatedSystem, x, theta_j: float = DEFAULT_THETA_J,
                 rng: np.random.Generator | int | None = 0,
                 retries: int = 3) -> tuple[DeflatedSystem, np.ndarray, int]:
    """One doubling step.  Returns the expanded system, its start point and the nullity."""
    rng = np.random.default_rng(rng)
    x = np.asarray(x, dtype=complex).ravel()
    _, jac = ds.value_and_jacobian(x)
    n = numerical_kernel(jac, theta_j, rng).nullity
    if n == 0:
        raise DeflationError("nullity zero: the Jacobian is numerically nonsingular")
    rhs = np.zeros(jac.shape[0] + n, dtype=complex)
    rhs[jac.shape[0]] = 1.0
    for _ in range(retries):
        r = (rng.standard_normal((n, jac.shape[1]))
             + 1j * rng.standard_normal((n, jac.shape[1]))) / np.sqrt(2)
        bordered = np.vstack([jac, r])
        if numerical_kernel(bordered, theta_j, rng).nullity:
            continue
        tail = lstsq(bordered, rhs)
        return ds.expand(r), np.concatenate([x, tail]), n
    raise DeflationError(f"bordered Jacobian stayed singular after {retries} draws")


@dataclass
class DeflationResult:
    zero: np.ndarray
    stages: int
    system: DeflatedSystem
    point: np.ndarray
    condition: ConditionEstimate
    nullities: list[int]
    reports: list[GaussNewtonReport]
    seed: int
    theta_j: float
    tol: float
    warnings: list[str] = field(default_factory=list)
    rank_cuts: list[float] = field(default_factory=list)

    @property
    def anchors(self) -> np.ndarray:
        return self.point.reshape(-1, self.system.base.s)

    @property
    def functional_words(self) -> list[list[int]]:
        """Each word as its stages, largest first: ``Phi_{mu1} o ... o Phi_{muk}``."""
        return [[q + 1 for q in range(self.stages - 1, -1, -1) if (b >> q) & 1]
                for b in range(2 ** self.stages)]

    def induced_functional(self, b: int) -> list[tuple[complex, list[np.ndarray]]]:
        """Word ``b`` as a sum of directional-derivative products at ``x1``.

        The ``eps^b`` coefficient of ``f(sum eps^m x_{m+1})`` is the sum over
        set partitions ``{m_1..m_r}`` of ``b`` of
        ``grad_{x_{m_1+1}} ... grad_{x_{m_r+1}} f(x_1)``.
        """
        a = self.anchors
        return [(1.0, [a[m] for m in part]) for part in _set_partitions(b)]

    def to_json(self) -> dict:
        cond = self.condition
        return {
            "stages": self.stages,
            "seed": self.seed,
            "zero": [{"re": float(v.real), "im": float(v.imag)} for v in self.zero],
            "residual": cond.residual,
            "condition": "inf" if np.isinf(cond.kappa) else cond.kappa,
            "error_estimate": "inf" if np.isinf(cond.error_estimate) else cond.error_estimate,
            "functional_words": self.functional_words,
            "anchors": {f"x{m + 1}": [{"re": float(v.real), "im": float(v.imag)} for v in blk]
                        for m, blk in enumerate(self.anchors) if m > 0},
            "theta_j": self.theta_j,
            "tolerance": self.tol,
            "nullities": list(self.nullities),
            "rank_cuts": list(self.rank_cuts),
            "warnings": list(self.warnings),
        }


def _set_partitions(b: int) -> list[list[int]]:
    """Set partitions of the bitmask ``b`` into nonempty sub-masks."""
    if b == 0:
        return [[]]
    low = b & -b
    rest = b ^ low
    out = []
    subs = [0]
    bits = [1 << q for q in range(rest.bit_length()) if (rest >> q) & 1]
    subs = [sum(c) for r in range(len(bits) + 1) for c in combinations(bits, r)]
    for sub in subs:
        for part in _set_partitions(rest ^ sub):
            out.append([low | sub] + part)
    return out


def depth_deflate(sys: System, x0, theta_j: float = DEFAULT_THETA_J,
                  tol: float = DEFAULT_TOL, seed: int = 0,
                  stage_cap: int = DEFAULT_STAGE_CAP, max_iter: int = 200,
                  depth: int | None = None) -> DeflationResult:
    """Refine a multiple zero by deflating until the Jacobian is regular.

    Each stage runs Gauss-Newton until it stops making progress, then
    decides the Jacobian's nullity.  The rank cut is ``theta_j`` or, when
    the iterate is visibly inaccurate, the first-order error estimate
    ``||f|| / sigma_min`` (capped at 1e-2): singular values that vanish at
    the zero are perturbed by roughly that much at the iterate.
    """
    rng = np.random.default_rng(seed)
    ds = DeflatedSystem(sys)
    x = np.asarray(x0, dtype=complex).ravel()
    nullities: list[int] = []
    cuts: list[float] = []
    reports = []
    while True:
        rep = gauss_newton(ds, x, tol, max_iter)
        reports.append(rep)
        x = rep.x
        f, jac = ds.value_and_jacobian(x)
        cut = _rank_cut(f, jac, theta_j, rng)
        cuts.append(cut)
        if numerical_kernel(jac, cut, rng).nullity == 0:
            break
        if ds.stage >= stage_cap:
            raise DeflationError(f"stage cap {stage_cap} reached with a singular Jacobian")
        ds, x, n = deflate_step(ds, x, cut, rng)
        nullities.append(n)
    notes = []
    if not reports[-1].converged:
        notes.append(f"final Gauss-Newton stopped by {reports[-1].reason}")
    if depth is not None and ds.stage > depth:
        raise DeflationError(f"{ds.stage} stages exceed the depth {depth}")
    cond = condition_number(ds, x, theta_j)
    return DeflationResult(x[:sys.s].copy(), ds.stage, ds, x, cond, nullities, reports,
                           seed, theta_j, tol, notes, cuts)


MAX_CUT = 1e-2


def _rank_cut(f: np.ndarray, jac: np.ndarray, theta_j: float,
              rng: np.random.Generator) -> float:
    sig = null_vector_iterate(jac, random_unit(jac.shape[1], rng), theta=theta_j).sigma
    est = float(np.linalg.norm(f)) / sig if sig > 0 else np.inf
    return max(theta_j, min(est, MAX_CUT))


@dataclass
class ClusterZero:
    x: np.ndarray
    residual: float
    hits: int


def cluster_search(sys: System, center, radius: float, n_starts: int = 500,
                   seed: int = 0, tol: float = 1e-10, max_iter: int = 100) -> list[ClusterZero]:
    """Distinct zeros inside the polydisc of ``radius`` around ``center``.

    Start ``k`` draws from its own generator seeded by ``(seed, k)``, so the
    result does not depend on evaluation order.  Zeros closer than
    ``10 * tol`` are merged.
    """
    if radius <= 0 or n_starts < 1:
        raise ValueError("need radius > 0 and n_starts >= 1")
    c = np.asarray(center, dtype=complex).ravel()
    found: list[ClusterZero] = []
    for k in range(n_starts):
        rng = np.random.default_rng([seed, k])
        rad = radius * np.sqrt(rng.random(len(c)))
        ang = 2 * np.pi * rng.random(len(c))
        rep = gauss_newton(sys, c + rad * np.exp(1j * ang), tol, max_iter)
        if not rep.converged or np.max(np.abs(rep.x - c)) > radius:
            continue
        for z in found:
            if np.max(np.abs(z.x - rep.x)) <= 10 * tol:
                z.hits += 1
                break
        else:
            found.append(ClusterZero(rep.x, rep.residuals[-1], 1))
    found.sort(key=lambda z: tuple(np.round(np.concatenate([z.x.real, z.x.imag]), 12)))
    return found
