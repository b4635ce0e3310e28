"""Column selection strategies: exact greedy, brute-force optimum and k-DPP sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .esp import kdpp_expected_error
from .exceptions import BudgetExceeded, DegenerateError
from .sampling import DppConfig, sample_kdpp
from .spectral import RANK_RTOL, GramInstance, opt_k, projection_error

#: default cap on the number of subsets brute force may enumerate
ENUMERATION_BUDGET = 10**6
#: relative slack under which two errors count as tied
TIE_RTOL = 1e-12

METHODS = ("kdpp", "greedy", "brute_force")


@dataclass(frozen=True)
class SelectionResult:
    indices: tuple[int, ...]
    error: float
    method_id: str
    per_step_errors: tuple[float, ...] | None = None
    seed: int | None = None


def greedy_select(instance: GramInstance, k: int) -> SelectionResult:
    """Add, k times, the column whose inclusion lowers the projection error most.

    Works on the residual kernel ``R = K - K_{:,S} pinv(K_SS) K_{S,:}``:
    adding column i lowers the error by ``||R e_i||^2 / R_ii``, and ``R`` is
    then downdated by one rank-one step. Columns with no residual left
    score zero. Near-ties (within ``TIE_RTOL``) go to the lowest index.
    """
    n = instance.n
    if not 0 <= k <= n:
        raise ValueError(f"k={k} must lie in [0, {n}]")
    R = np.array(instance.kernel, dtype=float)
    base = np.diag(R).copy()
    chosen: list[int] = []
    steps = []
    for _ in range(k):
        d = np.diag(R).copy()
        live = d > RANK_RTOL * base
        live[chosen] = False
        gain = np.zeros(n)
        gain[live] = np.einsum("ij,ij->j", R[:, live], R[:, live]) / d[live]
        gain[chosen] = -np.inf
        top = gain.max()
        i = int(np.flatnonzero(gain >= top - TIE_RTOL * abs(top))[0])
        chosen.append(i)
        if live[i]:
            r = R[:, i].copy()
            R -= np.outer(r, r) / d[i]
        steps.append(projection_error(instance, chosen))
    err = steps[-1] if steps else projection_error(instance, [])
    return SelectionResult(tuple(chosen), err, "greedy", tuple(steps))


def brute_force_optimum(instance: GramInstance, k: int, budget: int = ENUMERATION_BUDGET) -> SelectionResult:
    """Exact minimiser of the projection error over all size-k subsets.

    Subsets are visited in lexicographic order and a later subset replaces
    the incumbent only if it is better by more than ``TIE_RTOL * tr(K)``,
    so ties go to the lexicographically first subset.

    Raises
    ------
    BudgetExceeded
        If ``C(n, k)`` exceeds ``budget``.
    """
    n = instance.n
    if not 0 <= k <= n:
        raise ValueError(f"k={k} must lie in [0, {n}]")
    count = math.comb(n, k)
    if count > budget:
        raise BudgetExceeded(f"C({n},{k}) = {count} subsets exceeds budget {budget}")
    slack = TIE_RTOL * instance.trace
    best, best_err = (), math.inf
    for S in combinations(range(n), k):
        err = projection_error(instance, S)
        if err < best_err - slack:
            best, best_err = S, err
    return SelectionResult(tuple(best), float(best_err), "brute_force")


def kdpp_select(instance: GramInstance, k: int, seed, trial: int = 0, config: DppConfig | None = None) -> SelectionResult:
    """One k-DPP draw with its projection error attached."""
    config = DppConfig.from_instance(instance, k=k) if config is None else config
    sample = sample_kdpp(config, seed, trial)
    return SelectionResult(sample.indices, projection_error(instance, sample.indices), "kdpp", seed=sample.seed)


@dataclass(frozen=True)
class FactorEstimate:
    """Mean of ``Er(S) / OPT_k`` with its standard error; ``exact`` is set for k-DPP."""

    k: int
    method: str
    mean: float
    se: float
    trials: int
    opt_k: float
    exact: float | None = None


def estimate_factor(instance: GramInstance, k: int, method: str, trials: int = 1, master_seed: int = 0) -> FactorEstimate:
    """Approximation factor ``Er(S) / OPT_k`` for one selection method.

    k-DPP runs ``trials`` draws, trial ``i`` seeded by ``(master_seed, i)``,
    and reports the sample mean with SE = sample std / sqrt(trials) plus
    the exact value ``f(k) / OPT_k``. Greedy and brute force are
    deterministic: one evaluation, SE 0.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    opt = opt_k(instance.spectrum, k)
    if not opt > RANK_RTOL * instance.spectrum.trace:
        raise DegenerateError(f"OPT_{k} is zero; the factor is undefined")
    if method == "kdpp":
        config = DppConfig.from_instance(instance, k=k)
        errs = np.array([kdpp_select(instance, k, master_seed, t, config).error for t in range(trials)])
        ratios = errs / opt
        se = float(ratios.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        exact = kdpp_expected_error(instance.spectrum, k) / opt
        return FactorEstimate(k, method, float(ratios.mean()), se, trials, opt, exact)
    if method == "greedy":
        res = greedy_select(instance, k)
    elif method == "brute_force":
        res = brute_force_optimum(instance, k)
    else:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    return FactorEstimate(k, method, res.error / opt, 0.0, 1, opt)
