"""Independent reference computations used only by the tests.

Nothing here touches the package's linear algebra: subsets are enumerated
directly, determinants come from numpy, and projection errors from a
least-squares solve against an explicit column factor.
"""

from itertools import combinations

import numpy as np


def random_psd(rng, lam):
    """``V diag(lam) V^T`` for a random orthogonal V."""
    n = len(lam)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    K = (Q * np.asarray(lam, dtype=float)) @ Q.T
    return 0.5 * (K + K.T)


def column_factor(K):
    """A with ``A^T A = K`` from numpy's eigh."""
    w, V = np.linalg.eigh(K)
    return (V * np.sqrt(np.clip(w, 0, None))).T


def lstsq_error(A, S):
    """``||A - P_S A||_F^2`` via least squares."""
    S = list(S)
    if not S:
        return float(np.sum(A * A))
    B = A[:, S]
    X = np.linalg.lstsq(B, A, rcond=None)[0]
    R = A - B @ X
    return float(np.sum(R * R))


def subsets(n, k=None):
    sizes = range(n + 1) if k is None else [k]
    for size in sizes:
        yield from combinations(range(n), size)


def det_weight(K, S, alpha=1.0):
    S = list(S)
    if not S:
        return 1.0
    return float(np.linalg.det(K[np.ix_(S, S)] / alpha))


def dpp_table(K, alpha=1.0, k=None):
    """``{S: Pr(S)}`` by enumeration (k fixes the size)."""
    n = K.shape[0]
    w = {S: max(det_weight(K, S, alpha), 0.0) for S in subsets(n, k)}
    Z = sum(w.values())
    return {S: v / Z for S, v in w.items()}


def enumerated_mean_error(K, alpha=1.0, k=None):
    A = column_factor(K)
    table = dpp_table(K, alpha, k)
    return sum(p * lstsq_error(A, S) for S, p in table.items()), table


def total_variation(p, q):
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(s, 0.0) - q.get(s, 0.0)) for s in keys)


def empirical(samples):
    counts = {}
    for s in samples:
        counts[s] = counts.get(s, 0) + 1
    total = len(samples)
    return {s: c / total for s, c in counts.items()}


def spectrum_corpus(seed=20240, count=50, nmax=8):
    """Random spectra, some with exact zeros and ties."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(2, nmax + 1))
        lam = rng.exponential(size=n) ** 2
        if i % 5 == 0 and n > 2:
            lam[: int(rng.integers(1, n - 1))] = 0.0
        if i % 7 == 0:
            lam[:] = lam[0] or 1.0
        out.append(np.sort(lam)[::-1])
    return out
