"""Upper-bound families for the CSSP approximation factor.

The central object is the stable rank of order s,
``sr_s = sum_{i>s} lambda_i / lambda_{s+1}``, and the window ``s < k < t_s``
with ``t_s = s + sr_s`` on which

    Phi_s(k) = (1 + s/(k-s)) * sqrt(1 + 2(k-s)/(t_s-k))

bounds the factor. Minimising over s gives the envelope whose peaks track
sharp drops in the spectrum.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DegenerateError, DomainError, WindowError
from .spectral import Spectrum, opt_k

#: default absolute constant for the decay-rate bounds
DECAY_CONSTANT = 61.0


def _spec(spectrum) -> Spectrum:
    return spectrum if isinstance(spectrum, Spectrum) else Spectrum.from_eigenvalues(spectrum)


@dataclass(frozen=True)
class StableRankProfile:
    sr: np.ndarray  # sr[s] for s = 0..rank-1
    t: np.ndarray  # t[s] = s + sr[s]


def stable_rank_profile(spectrum) -> StableRankProfile:
    spec = _spec(spectrum)
    r = spec.rank
    if r < 1:
        raise DegenerateError("spectrum has rank 0")
    tails = spec.tail_sums()[:r]
    sr = tails / spec.values[:r]
    return StableRankProfile(sr, np.arange(r) + sr)


def _t(spectrum, s: int) -> float:
    spec = _spec(spectrum)
    if not 0 <= s < spec.rank:
        raise WindowError(f"order s={s} must satisfy 0 <= s < rank={spec.rank}")
    return s + spec.tail_sums()[s] / spec.values[s]


def _gamma(s, k, t_s):
    return math.sqrt(1 + 2 * (k - s) / (t_s - k))


def phi(spectrum, s: int, k: int) -> float:
    t_s = _t(spectrum, s)
    if not s < k < t_s:
        raise WindowError(f"k={k} outside the window ({s}, {t_s:.6g})")
    return (1 + s / (k - s)) * _gamma(s, k, t_s)


def concentration_threshold(epsilon: float) -> float:
    """Minimum gap ``k - s`` needed for the DPP size to stay below k w.p. 1 - epsilon."""
    if not 0 < epsilon <= 0.5:
        raise DomainError(f"epsilon must lie in (0, 1/2], got {epsilon}")
    return 7.0 / epsilon**4 * math.log(1.0 / epsilon) ** 2


def lemma2_applicable(s: int, k: int, t_s: float, epsilon: float) -> bool:
    """Whether ``s + 7/eps^4 ln^2(1/eps) <= k <= t_s - 1``."""
    return s + concentration_threshold(epsilon) <= k <= t_s - 1


@dataclass(frozen=True)
class EnvelopeValue:
    value: float
    s: int | None  # None when the worst-case fallback was used
    fallback: bool


def master_envelope(spectrum, k: int, epsilon: float = 0.0, enforce_threshold: bool = False) -> EnvelopeValue:
    """``(1 + 2 eps)^2 min_s Phi_s(k)`` over admissible orders s.

    With ``enforce_threshold`` an order is admissible only when the
    concentration window also holds. If no order is admissible the
    worst-case factor ``k + 1`` is returned and flagged.
    """
    if enforce_threshold:
        thresh = concentration_threshold(epsilon)
    elif not 0 <= epsilon <= 0.5:
        raise DomainError(f"epsilon must lie in [0, 1/2], got {epsilon}")
    spec = _spec(spectrum)
    if spec.rank >= 1 and k >= 1:
        prof = stable_rank_profile(spec)
        s = np.arange(min(k, spec.rank))
        t = prof.t[: s.size]
        ok = k < t
        if enforce_threshold:
            ok &= (s + thresh <= k) & (k <= t - 1)
        if ok.any():
            s, t = s[ok], t[ok]
            vals = (k / (k - s)) * np.sqrt(1 + 2 * (k - s) / (t - k))
            j = int(np.argmin(vals))
            return EnvelopeValue((1 + 2 * epsilon) ** 2 * float(vals[j]), int(s[j]), False)
    return EnvelopeValue(float(k + 1), None, True)


def psi(spectrum, s: int, k: int) -> float:
    """Condition-number bound ``(lambda_{s+1} / lambda_n)(1 + s/(k-s))`` for k near n."""
    spec = _spec(spectrum)
    n = spec.n
    if not 0 <= s < k < n:
        raise WindowError(f"need 0 <= s < k < n, got s={s}, k={k}, n={n}")
    if spec.values[-1] <= 0:
        raise DomainError("smallest eigenvalue is zero")
    return spec.values[s] / spec.values[-1] * (1 + s / (k - s))


def lemma1_alpha(spectrum, s: int, k: int, epsilon: float = 0.0) -> float:
    """DPP rescaling ``gamma_s(k) OPT_k / ((1 - eps)(k - s))``.

    With this alpha, ``DPP(K / alpha)`` has expected error at most
    ``Phi_s(k) / (1 - eps)`` times OPT_k and expected size at most
    ``k - eps (k - s) / gamma_s(k)``.
    """
    if not 0 <= epsilon < 1:
        raise DomainError(f"epsilon must lie in [0, 1), got {epsilon}")
    t_s = _t(spectrum, s)
    if not s < k < t_s:
        raise WindowError(f"k={k} outside the window ({s}, {t_s:.6g})")
    return _gamma(s, k, t_s) * opt_k(_spec(spectrum), k) / ((1 - epsilon) * (k - s))


@dataclass(frozen=True)
class PolyDecay:
    """``c1 i^-p <= lambda_i <= c2 i^-p``, gamma = c2 / c1."""

    p: float
    gamma: float = 1.0

    def __post_init__(self):
        if not self.p > 1 or not self.gamma >= 1:
            raise DomainError("polynomial decay needs p > 1 and gamma >= 1")

    def label(self) -> str:
        return f"p={self.p:g};gamma={self.gamma:g}"


@dataclass(frozen=True)
class ExpDecay:
    """``c1 (1-delta)^i <= lambda_i <= c2 (1-delta)^i``, gamma = c2 / c1."""

    delta: float
    gamma: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1 or not self.gamma >= 1:
            raise DomainError("exponential decay needs 0 < delta < 1 and gamma >= 1")

    def label(self) -> str:
        return f"delta={self.delta:g};gamma={self.gamma:g}"


def decay_bound(kind, k: int, c: float | None = None) -> float:
    """``c gamma p`` (polynomial) or ``c gamma (1 + delta k)`` (exponential)."""
    c = DECAY_CONSTANT if c is None else c
    if not c > 0:
        raise DomainError("constant c must be positive")
    if isinstance(kind, PolyDecay):
        return c * kind.gamma * kind.p
    if isinstance(kind, ExpDecay):
        return c * kind.gamma * (1 + kind.delta * k)
    raise TypeError(f"unknown decay kind {kind!r}")


def decay_stable_rank_floor(kind, s: int, n: int | None = None) -> float:
    """Explicit lower bound on ``sr_s`` for a spectrum with the given decay.

    Exponential: ``1 / (2 gamma delta)``, valid for ``s <= n - ln2/delta``.
    Polynomial: ``(s+1) / (2 gamma (p-1)) - 1/gamma``, valid when
    ``((s+1)/n)^(p-1) <= 1/2``. Passing ``n`` enforces the window.
    """
    if s < 0:
        raise DomainError("s must be nonnegative")
    if isinstance(kind, ExpDecay):
        if n is not None and s > n - math.log(2) / kind.delta:
            raise WindowError(f"s={s} beyond n - ln2/delta")
        return 1.0 / (2 * kind.gamma * kind.delta)
    if isinstance(kind, PolyDecay):
        if n is not None and ((s + 1) / n) ** (kind.p - 1) > 0.5:
            raise WindowError(f"s={s} violates ((s+1)/n)^(p-1) <= 1/2")
        return (s + 1) / (2 * kind.gamma * (kind.p - 1)) - 1 / kind.gamma
    raise TypeError(f"unknown decay kind {kind!r}")


@dataclass
class BoundCurve:
    """A bound as a function of k, defined on ``window``."""

    family: str
    params: str
    values: dict[int, float] = field(default_factory=dict)
    flags: dict[int, str] = field(default_factory=dict)
    window: tuple[float, float] = (0, math.inf)

    def rows(self):
        for k in sorted(self.values):
            yield {
                "k": k,
                "value": self.values[k],
                "family": self.family,
                "s_or_params": self.params,
                "window_flag": self.flags.get(k, "in_window"),
            }


BOUND_CSV_COLUMNS = ["k", "value", "family", "s_or_params", "window_flag"]


def write_bound_curves(curves, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=BOUND_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for curve in curves:
        for row in curve.rows():
            row["value"] = f"{row['value']:.12g}"
            writer.writerow(row)


def phi_curve(spectrum, s: int) -> BoundCurve:
    t_s = _t(spectrum, s)
    ks = range(s + 1, math.ceil(t_s))
    return BoundCurve("phi", f"s={s}", {k: phi(spectrum, s, k) for k in ks if k < t_s}, window=(s, t_s))


def psi_curve(spectrum, s: int) -> BoundCurve:
    n = _spec(spectrum).n
    return BoundCurve("psi", f"s={s}", {k: psi(spectrum, s, k) for k in range(s + 1, n)}, window=(s, n))


def envelope_curve(spectrum, ks, epsilon: float = 0.0, enforce_threshold: bool = False) -> BoundCurve:
    curve = BoundCurve("envelope", f"epsilon={epsilon:g}")
    for k in ks:
        env = master_envelope(spectrum, k, epsilon, enforce_threshold)
        curve.values[k] = env.value
        curve.flags[k] = "fallback" if env.fallback else f"s={env.s}"
    return curve


def worst_case_curve(ks) -> BoundCurve:
    return BoundCurve("worst_case", "k+1", {k: float(k + 1) for k in ks})


def decay_curve(kind, ks, c: float | None = None) -> BoundCurve:
    family = "decay_poly" if isinstance(kind, PolyDecay) else "decay_exp"
    return BoundCurve(family, kind.label(), {k: decay_bound(kind, k, c) for k in ks})
