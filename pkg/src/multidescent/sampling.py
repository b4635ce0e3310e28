"""Exact DPP and k-DPP samplers driven by an eigendecomposition.

Both samplers are two-phase: pick a set of eigenvectors, then draw column
indices from the projection DPP they span. Randomness comes from a Philox
counter-based generator keyed by the master seed, with the trial index in
the counter, so trial ``i`` of a batch is the same draw whether the batch
runs serially or not.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .esp import dpp_inclusion_probabilities, esp_prefix_ratios
from .exceptions import DegenerateError, DomainError
from .spectral import RANK_RTOL, GramInstance

_KEY_MASK = (1 << 128) - 1


def make_rng(master_seed: int, trial_index: int = 0) -> np.random.Generator:
    """Independent stream for ``(master_seed, trial_index)``."""
    return np.random.Generator(
        np.random.Philox(key=int(master_seed) & _KEY_MASK, counter=[0, 0, 0, int(trial_index)])
    )


@dataclass(frozen=True)
class SubsetSample:
    indices: tuple[int, ...]
    sampler_id: str
    seed: int | None = None
    trial: int = 0
    error: float | None = None


@dataclass(frozen=True, eq=False)
class DppConfig:
    """Eigendecomposition of K plus the rescaling ``alpha`` (DPP(K/alpha)) or size ``k``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    alpha: float = 1.0
    k: int | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        top = lam.max() if lam.size else 0.0
        lam = np.where(lam > RANK_RTOL * top, lam, 0.0)
        object.__setattr__(self, "eigenvalues", lam)
        if self.k is not None and not 0 <= self.k <= self.rank:
            raise DegenerateError(f"k={self.k} exceeds rank {self.rank}")

    @classmethod
    def from_instance(cls, instance: GramInstance, alpha: float = 1.0, k: int | None = None):
        return cls(instance.spectrum.values, instance.eigenvectors, alpha=alpha, k=k)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues))

    @property
    def n(self) -> int:
        return self.eigenvectors.shape[0]

    @cached_property
    def inclusion_probabilities(self) -> np.ndarray:
        """Eigenvector keep-probabilities ``lambda_i / (lambda_i + alpha)`` for DPP phase one."""
        return dpp_inclusion_probabilities(self.eigenvalues, self.alpha)

    @cached_property
    def selection_table(self) -> np.ndarray:
        """Eigenvector keep-probabilities for k-DPP phase one."""
        return esp_prefix_ratios(self.eigenvalues, self.k)


def _rng(seed, trial):
    if isinstance(seed, np.random.Generator):
        return seed, None
    return make_rng(seed, trial), int(seed)


def sample_projection_dpp(V: np.ndarray, rng: np.random.Generator) -> list[int]:
    """Draw ``rank(V)`` indices from the projection DPP with kernel ``V V^T``.

    ``V`` has orthonormal columns. Each step picks row ``i`` with probability
    proportional to its squared norm in the orthogonal complement of the rows
    already chosen, then downdates all row norms by Gram-Schmidt.
    """
    n, k = V.shape
    norms = np.einsum("ij,ij->i", V, V)
    basis = np.empty((k, k))
    chosen = []
    for t in range(k):
        w = np.maximum(norms, 0.0)
        cum = w.cumsum()
        i = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
        if i >= n or w[i] == 0:
            i = int(np.flatnonzero(w)[-1])
        chosen.append(i)
        if t + 1 == k:
            break
        v = V[i] - basis[:t].T @ (basis[:t] @ V[i])
        v /= np.sqrt(v @ v)
        basis[t] = v
        norms -= (V @ v) ** 2
        norms[chosen] = 0.0
    return chosen


def sample_dpp(config: DppConfig, seed, trial: int = 0) -> SubsetSample:
    """One exact draw from ``DPP(K / alpha)``: ``Pr(S) = det(K_S / alpha) / det(I + K / alpha)``."""
    rng, master = _rng(seed, trial)
    p = config.inclusion_probabilities
    keep = rng.random(p.size) < p
    idx = sample_projection_dpp(config.eigenvectors[:, keep], rng) if keep.any() else []
    return SubsetSample(tuple(sorted(idx)), "dpp", master, trial)


def sample_kdpp(config: DppConfig, seed, trial: int = 0) -> SubsetSample:
    """One exact draw from the k-DPP, ``Pr(S) proportional to det(K_S)`` over ``|S| = k``."""
    if config.k is None:
        raise ValueError("config has no fixed size k")
    rng, master = _rng(seed, trial)
    k = config.k
    probs = config.selection_table
    u = rng.random(config.eigenvalues.size)
    keep = []
    remaining = k
    for i in range(config.eigenvalues.size - 1, -1, -1):
        if remaining == 0:
            break
        if u[i] < probs[i, remaining]:
            keep.append(i)
            remaining -= 1
    idx = sample_projection_dpp(config.eigenvectors[:, keep], rng) if keep else []
    return SubsetSample(tuple(sorted(idx)), "kdpp", master, trial)


def sample_batch(config: DppConfig, trials: int, master_seed: int) -> list[SubsetSample]:
    """``trials`` draws, trial ``i`` seeded by ``(master_seed, i)``; k-DPP if ``config.k`` is set."""
    draw = sample_dpp if config.k is None else sample_kdpp
    return [draw(config, master_seed, t) for t in range(trials)]
