"""Numerical rank revealing by null-vector iteration.

The kernel of ``A`` is found one vector at a time.  Each accepted vector
``u`` is stacked on top of the matrix as a row ``tau * u^H`` so the next
iteration converges to a vector orthogonal to everything found so far.
:func:`kernel_expand` keeps a full QR factorization of that stacked matrix
and updates it as Macaulay matrices grow, so only new columns and rows are
factored at each order.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .macaulay import MacaulayMatrix

DEFAULT_THETA = 1e-8
MAX_ITER = 50


def norm_inf(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    return float(np.abs(a).sum(axis=1).max())


def lstsq(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimum-norm least squares by complete orthogonal (pivoted QR) factorization."""
    if a.shape[0] == 0:
        return np.zeros((a.shape[1],) + b.shape[1:], dtype=complex)
    x, *_ = sla.lstsq(a, b, lapack_driver="gelsy", check_finite=False)
    return x


def random_unit(n: int, rng: np.random.Generator) -> np.ndarray:
    u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return u / np.linalg.norm(u)


@dataclass
class NullVector:
    u: np.ndarray
    sigma: float
    converged: bool
    iterations: int


def null_vector_iterate(a: np.ndarray, u0: np.ndarray, theta: float = DEFAULT_THETA,
                        max_iter: int = MAX_ITER) -> NullVector:
    """Gauss-Newton iteration for a unit vector minimizing ``||A u||``.

    Each step solves ``[2 tau u^H; A] du = [tau (u^H u - 1); A u]`` in the
    least-squares sense with ``tau = ||A||_inf``.  Stops when the update is
    below ``1e-3 * theta`` or the residual ``||A u|| / ||u||`` stops
    improving by more than 10% over two steps.
    """
    a = np.asarray(a, dtype=complex)
    u = np.asarray(u0, dtype=complex).ravel().copy()
    if not np.any(u):
        raise ValueError("start vector must be nonzero")
    tau = norm_inf(a) or 1.0
    history: list[float] = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        top = 2.0 * tau * u.conj()[None, :]
        m = np.vstack([top, a])
        rhs = np.concatenate([[tau * (np.vdot(u, u) - 1.0)], a @ u])
        du = lstsq(m, rhs)
        u = u - du
        nu = np.linalg.norm(u)
        history.append(np.linalg.norm(a @ u) / nu)
        if np.linalg.norm(du) <= 1e-3 * theta:
            converged = True
            break
        if len(history) >= 3 and history[-3] - history[-1] <= 0.1 * history[-3]:
            converged = True
            break
    u = u / np.linalg.norm(u)
    sigma = float(np.linalg.norm(a @ u))
    return NullVector(u, sigma, converged, it)


@dataclass
class KernelBasis:
    """Orthonormal numerical null vectors (columns of ``Z``)."""

    Z: np.ndarray
    sigmas: np.ndarray
    theta: float
    rejected: float | None = None  # residual of the first vector not accepted

    @property
    def nullity(self) -> int:
        return self.Z.shape[1]


def _orthogonalize(u: np.ndarray, basis: np.ndarray) -> np.ndarray:
    for _ in range(2):
        if basis.shape[1]:
            u = u - basis @ (basis.conj().T @ u)
    return u / np.linalg.norm(u)


def _collect_kernel(r: np.ndarray, scale: float, theta: float, rng: np.random.Generator,
                    sigma_of, found: np.ndarray, tau: float, limit: int,
                    max_iter: int):
    """Shared search loop: stack found vectors on ``r`` and iterate for more."""
    new, sigmas, rejected = [], [], None
    n = r.shape[1]
    while found.shape[1] + len(new) < limit:
        basis = np.column_stack([found] + new) if new else found
        stacked = np.vstack([tau * basis.conj().T, r]) if basis.shape[1] else r
        u0 = _orthogonalize(random_unit(n, rng), basis)
        res = null_vector_iterate(stacked, u0, theta=theta, max_iter=max_iter)
        u = _orthogonalize(res.u, basis)
        sig = sigma_of(u)
        if sig > theta * scale:
            rejected = sig
            break
        new.append(u[:, None])
        sigmas.append(sig)
    return new, sigmas, rejected


def numerical_kernel(a: np.ndarray, theta: float = DEFAULT_THETA,
                     rng: np.random.Generator | int | None = 0,
                     max_iter: int = MAX_ITER) -> KernelBasis:
    """All null vectors of ``A`` with residual at most ``theta * max(1, ||A||_inf)``."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    a = np.asarray(a, dtype=complex)
    rng = np.random.default_rng(rng)
    n = a.shape[1]
    norm = norm_inf(a)
    scale = max(1.0, norm)
    # iterate on the triangular factor; ||A u|| = ||R u||
    r = sla.qr(a, mode="r", check_finite=False)[0] if a.shape[0] > n else a
    empty = np.zeros((n, 0), dtype=complex)
    new, sigmas, rejected = _collect_kernel(
        r, scale, theta, rng, lambda u: float(np.linalg.norm(a @ u)), empty, scale, n, max_iter)
    z = np.column_stack(new) if new else empty
    sig = np.array(sigmas)
    order = np.argsort(sig, kind="stable")
    return KernelBasis(z[:, order], sig[order], theta, rejected)


@dataclass
class KernelState:
    """Kernel of ``S_alpha`` plus a full QR of ``[diag(T) Z^H; S_alpha]``.

    ``scales`` holds the diagonal of ``T``: the weight each kernel row was
    stacked with.  Kernel rows sit on top, most recent first.
    """

    order: int
    Z: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    scales: np.ndarray
    theta: float
    sigmas: list[float] = field(default_factory=list)
    orders: list[int] = field(default_factory=list)
    rejected: list[tuple[int, float, float]] = field(default_factory=list)
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    max_iter: int = MAX_ITER

    @property
    def nullity(self) -> int:
        return self.Z.shape[1]

    def stacked(self, s_alpha: MacaulayMatrix) -> np.ndarray:
        # kernel rows were inserted at the top one at a time, newest first
        top = (self.scales[:, None] * self.Z.conj().T)[::-1]
        return np.vstack([top, s_alpha.entries])

    def check(self, s_alpha: MacaulayMatrix) -> float:
        """Relative residual of ``Q R`` against the stacked matrix."""
        m = self.stacked(s_alpha)
        return float(np.linalg.norm(self.Q @ self.R - m) / max(np.linalg.norm(m), 1.0))


def initial_state(s0: MacaulayMatrix, theta: float = DEFAULT_THETA,
                  rng: np.random.Generator | int | None = 0,
                  max_iter: int = MAX_ITER) -> KernelState:
    """State for ``S_0`` with kernel ``span{[1]}``, stacked with weight 1."""
    if s0.order != 0 or s0.shape[1] != 1:
        raise ValueError("initial state needs the order-0 matrix")
    z = np.ones((1, 1), dtype=complex)
    m = np.vstack([z.conj().T, s0.entries])
    q, r = sla.qr(m, check_finite=False)
    return KernelState(0, z, q, r, np.ones(1), theta, [0.0], [0],
                       rng=np.random.default_rng(rng), max_iter=max_iter)


def kernel_expand(state: KernelState, s_alpha: MacaulayMatrix) -> tuple[KernelState, int]:
    """Grow the factorization to ``S_alpha`` and find the new null vectors.

    New columns are absorbed with ``Q^H`` applied to them, new rows are
    folded in by Givens rotations (both via ``scipy.linalg.qr_insert``).
    Null vectors of the updated triangular factor that are orthogonal to
    the embedded old kernel are exactly the new kernel directions.
    """
    if s_alpha.order != state.order + 1:
        raise ValueError("kernel_expand needs the next order")
    m_old = state.Q.shape[0] - state.nullity
    n_old = state.R.shape[1]
    m_new, n_new = s_alpha.shape
    if m_new < m_old or n_new < n_old:
        raise ValueError("matrix does not nest the previous one")
    k = state.nullity
    q, r = state.Q, state.R
    # new columns: zero on the kernel rows, F on the old rows
    f = np.zeros((k + m_old, n_new - n_old), dtype=complex)
    f[k:] = s_alpha.entries[:m_old, n_old:]
    if f.shape[1]:
        q, r = sla.qr_insert(q, r, f, n_old, which="col", check_finite=False)
    # new rows [O' G] appended at the bottom
    if m_new > m_old:
        q, r = sla.qr_insert(q, r, s_alpha.entries[m_old:], k + m_old, which="row",
                             check_finite=False)
    z = np.vstack([state.Z, np.zeros((n_new - n_old, k), dtype=complex)])
    norm = s_alpha.norm_inf()
    scale = max(1.0, norm)
    tau = scale
    new_state = KernelState(s_alpha.order, z, q, r, state.scales.copy(), state.theta,
                            list(state.sigmas), list(state.orders), list(state.rejected),
                            state.rng, state.max_iter)
    nu = 0
    while new_state.nullity < n_new:
        rr = new_state.R[:min(new_state.R.shape[0], n_new)]
        u0 = _orthogonalize(random_unit(n_new, new_state.rng), new_state.Z)
        res = null_vector_iterate(rr, u0, theta=state.theta, max_iter=state.max_iter)
        u = _orthogonalize(res.u, new_state.Z)
        sig = float(np.linalg.norm(s_alpha.entries @ u))
        if sig > state.theta * scale:
            new_state.rejected.append((s_alpha.order, sig, scale))
            break
        new_state.Q, new_state.R = sla.qr_insert(new_state.Q, new_state.R,
                                                 tau * u.conj(), 0, which="row",
                                                 check_finite=False)
        new_state.Z = np.column_stack([new_state.Z, u])
        new_state.scales = np.append(new_state.scales, tau)
        new_state.sigmas.append(sig)
        new_state.orders.append(s_alpha.order)
        nu += 1
    return new_state, nu
