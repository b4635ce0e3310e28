"""Dense symmetric linear algebra for column subset selection.

Everything here works from the kernel ``K = A^T A``: projection errors,
Nystrom trace-norm errors and the best rank-k error ``OPT_k`` are all
functions of ``K`` alone, so an instance given by its columns and one given
by its Gram matrix go through the same code path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import DomainError, ShapeError

#: eigenvalues below ``RANK_RTOL * lambda_1`` count as zero
RANK_RTOL = 1e-10
#: relative asymmetry tolerated for a kernel matrix
SYMMETRY_RTOL = 1e-10
#: Jacobi stops once the off-diagonal mass drops below this fraction of ||M||_F
JACOBI_RTOL = 1e-12
JACOBI_MAX_N = 200


def as_dense(M) -> np.ndarray:
    """Validate and convert to a 2-D float array with finite entries."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ShapeError("matrix has non-finite entries")
    return M


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    if M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise ShapeError("matrix is not symmetric")
    return 0.5 * (M + M.T)


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Tournament ordering: n-1 rounds of disjoint (p, q) pairs covering all pairs."""
    m = n + n % 2
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        p, q = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p.append(min(a, b))
                q.append(max(a, b))
        rounds.append((np.array(p, dtype=int), np.array(q, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _rotate_rows(X, p, q, c, s):
    rp, rq = X[p], X[q]
    X[p], X[q] = c * rp - s * rq, s * rp + c * rq


def jacobi_eigh(M, rtol: float = JACOBI_RTOL, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a symmetric matrix.

    Sweeps visit every off-diagonal pair once, in round-robin order so that
    the rotations of one round touch disjoint rows and can be applied
    together. A pair is rotated only while its entry is large relative to
    ``sqrt(|a_pp a_qq|)`` or to ``||M||_F / n``; exact zeros are never
    touched, so block-diagonal inputs stay block-diagonal. Iteration stops
    when the off-diagonal mass is below ``rtol * ||M||_F`` and no pair is
    left to rotate.

    Returns
    -------
    values : ndarray
        Eigenvalues in descending order.
    vectors : ndarray
        Orthonormal eigenvectors as columns, matching ``values``.
    """
    A = np.array(M, dtype=float)
    n = A.shape[0]
    Vt = np.eye(n)  # eigenvectors as rows, so every update is a row update
    norm = np.linalg.norm(A)
    if n > 1 and norm > 0:
        rounds = _round_robin(n)
        floor = np.finfo(float).eps ** 2 * norm
        for _ in range(max_sweeps):
            d = np.abs(np.diag(A))
            off = A - np.diag(np.diag(A))
            # relative criterion keeps small, well-separated blocks accurate
            loose = np.abs(off) > np.maximum(rtol * np.sqrt(np.outer(d, d)), floor)
            if np.linalg.norm(off) <= rtol * norm and not loose.any():
                break
            for p, q in rounds:
                apq = A[p, q]
                live = (np.abs(apq) > floor) & (
                    (np.abs(apq) > rtol * np.sqrt(np.abs(A[p, p] * A[q, q]))) | (np.abs(apq) > rtol * norm / n)
                )
                if not live.any():
                    continue
                p, q, apq = p[live], q[live], apq[live]
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                with np.errstate(over="ignore"):
                    t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
                c = (1.0 / np.sqrt(t * t + 1.0))[:, None]
                s = t[:, None] * c
                # J^T A J == J^T (J^T A)^T for symmetric A; rows only
                _rotate_rows(A, p, q, c, s)
                A = np.ascontiguousarray(A.T)
                _rotate_rows(A, p, q, c, s)
                A[p, q] = 0.0
                A[q, p] = 0.0
                _rotate_rows(Vt, p, q, c, s)
    values = np.diag(A).copy()
    order = np.argsort(-values, kind="stable")
    return values[order], Vt[order].T


def eigensym(M, method: str = "auto"):
    """Eigendecomposition ``M = V diag(values) V^T`` of a symmetric matrix.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"``; auto uses Jacobi
    up to ``JACOBI_MAX_N`` rows and LAPACK beyond, where the vectorised
    sweeps get slow. Eigenvalues come back in descending order.

    Raises ShapeError for non-square or asymmetric input.
    """
    M = _check_symmetric(as_dense(M))
    if method == "auto":
        method = "jacobi" if M.shape[0] <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        return jacobi_eigh(M)
    if method == "lapack":
        w, V = np.linalg.eigh(M)
        return w[::-1].copy(), V[:, ::-1].copy()
    raise ValueError(f"unknown eigensolver {method!r}")


@dataclass(frozen=True)
class Spectrum:
    """Non-increasing, nonnegative eigenvalues of a Gram matrix."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ShapeError("spectrum must be one-dimensional")
        if np.any(v < 0) or np.any(np.diff(v) > 0) or not np.all(np.isfinite(v)):
            raise DomainError("spectrum must be finite, nonnegative and non-increasing")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_eigenvalues(cls, values, rtol: float = RANK_RTOL) -> Spectrum:
        """Sort descending and clamp round-off negatives to zero.

        Negatives larger than ``rtol * max|value|`` in magnitude mean the
        matrix is not PSD and raise DomainError.
        """
        v = np.sort(np.asarray(values, dtype=float))[::-1]
        if v.size:
            tol = rtol * max(np.max(np.abs(v)), 0.0)
            if v[-1] < -tol:
                raise DomainError(f"matrix is not positive semidefinite (eigenvalue {v[-1]:.3g})")
            v = np.where(v < 0, 0.0, v)
        return cls(v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def rank(self) -> int:
        if self.n == 0 or self.values[0] == 0:
            return 0
        return int(np.sum(self.values > RANK_RTOL * self.values[0]))

    @property
    def trace(self) -> float:
        return float(np.sum(self.values))

    def tail_sums(self) -> np.ndarray:
        """``out[k] = sum_{i>k} lambda_i`` for k = 0..n (1-based eigenvalue indices)."""
        return np.concatenate([np.cumsum(self.values[::-1])[::-1], [0.0]])

    def __len__(self):
        return self.n


def opt_k(spectrum: Spectrum, k: int) -> float:
    """Best rank-k approximation error, the sum of the eigenvalues past the k-th."""
    if not 0 <= k <= spectrum.n:
        raise DomainError(f"k={k} outside [0, {spectrum.n}]")
    return float(np.sum(spectrum.values[k:]))


@dataclass(frozen=True, eq=False)
class GramInstance:
    """A CSSP/Nystrom problem given either by columns ``A`` or by a PSD kernel ``K``.

    Use :meth:`from_columns` or :meth:`from_kernel`; the spectrum and the
    eigenbasis are computed lazily and cached.
    """

    kernel: np.ndarray
    columns: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def from_columns(cls, A) -> GramInstance:
        A = as_dense(A)
        A.setflags(write=False)
        K = A.T @ A
        K = 0.5 * (K + K.T)
        K.setflags(write=False)
        return cls(kernel=K, columns=A)

    @classmethod
    def from_kernel(cls, K) -> GramInstance:
        K = _check_symmetric(as_dense(K))
        K.setflags(write=False)
        inst = cls(kernel=K)
        inst.spectrum  # PSD check happens here
        return inst

    @property
    def n(self) -> int:
        return self.kernel.shape[0]

    @property
    def kind(self) -> str:
        return "kernel" if self.columns is None else "columns"

    @cached_property
    def eig(self):
        values, vectors = eigensym(self.kernel)
        return Spectrum.from_eigenvalues(values), vectors

    @property
    def spectrum(self) -> Spectrum:
        return self.eig[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.eig[1]

    @property
    def trace(self) -> float:
        return float(np.trace(self.kernel))


def check_subset(S, n: int) -> np.ndarray:
    """Validate an index subset and return it as an int array (order kept)."""
    idx = np.asarray(list(S), dtype=int).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"subset index out of range [0, {n})")
    if np.unique(idx).size != idx.size:
        raise ValueError("subset indices must be distinct")
    return idx


def _whitened_columns(K: np.ndarray, S: np.ndarray) -> np.ndarray:
    """``G`` with ``G^T G = K[:, S] pinv(K[S, S]) K[S, :]``.

    Kernel-space Gram-Schmidt (an unpivoted Cholesky of ``K[S, S]``): each
    column of S is kept only if its residual exceeds ``RANK_RTOL`` times its
    own squared norm, so graded instances spanning many orders of magnitude
    keep their small blocks.
    """
    rows = []
    for j in S:
        g = K[j].copy()
        if rows:
            G = np.asarray(rows)
            g -= G[:, j] @ G
        d = g[j]
        if d > RANK_RTOL * K[j, j] and d > 0:
            rows.append(g / np.sqrt(d))
    return np.asarray(rows).reshape(len(rows), K.shape[0])


def _column_basis(A: np.ndarray, S: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(A[:, S]) by twice-applied modified Gram-Schmidt.

    A column is kept when its residual exceeds ``RANK_RTOL`` times its own
    squared norm, matching the kernel route.
    """
    Q = np.zeros((A.shape[0], 0))
    for j in S:
        a = A[:, j]
        v = a.copy()
        for _ in range(2):
            v -= Q @ (Q.T @ v)
        nv = v @ v
        if nv > RANK_RTOL * (a @ a) and nv > 0:
            Q = np.column_stack([Q, v / np.sqrt(nv)])
    return Q


def projection_error(instance: GramInstance, S) -> float:
    """Squared Frobenius error ``||A - P_S A||_F^2`` of projecting onto columns ``S``.

    Equal to ``tr(K) - tr(K_{:,S} pinv(K_{S,S}) K_{S,:})``. When the columns
    are known the residual vectors are formed explicitly, which keeps the
    absolute error near ``eps^2 ||A||^2`` even for graded instances; for a
    kernel-only instance the trace is reduced column by column.
    """
    K = instance.kernel
    idx = check_subset(S, instance.n)
    if idx.size == 0:
        return float(np.trace(K))
    if instance.columns is not None:
        A = instance.columns
        Q = _column_basis(A, idx)
        R = A - Q @ (Q.T @ A)
        R -= Q @ (Q.T @ R)
        return float(np.sum(R * R))
    G = _whitened_columns(K, idx)
    residual = np.diag(K) - np.sum(G * G, axis=0)
    return float(np.sum(np.maximum(residual, 0.0)))


def nystrom_approximation(instance: GramInstance, S) -> np.ndarray:
    """``C pinv(B) C^T`` with ``B = K[S, S]`` and ``C = K[:, S]``."""
    K = instance.kernel
    idx = check_subset(S, instance.n)
    if idx.size == 0:
        return np.zeros_like(K)
    G = _whitened_columns(K, idx)
    return G.T @ G


def nystrom_error(instance: GramInstance, S) -> float:
    """Trace norm of ``K - K_hat(S)``, evaluated through singular values."""
    R = instance.kernel - nystrom_approximation(instance, S)
    return float(np.linalg.norm(0.5 * (R + R.T), ord="nuc"))
