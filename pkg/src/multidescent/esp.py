"""Elementary symmetric polynomials of a spectrum and exact DPP expectations.

``e_k = sum_{|T|=k} prod_{i in T} lambda_i`` is the normaliser of a k-DPP,
and the expected projection error of a k-DPP is
``f(k) = (k + 1) e_{k+1} / e_k``. For the random-size ``DPP(K / alpha)``
the expected size and error have closed forms in the eigenvalues alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateError, DomainError
from .spectral import Spectrum

LN2 = math.log(2.0)


def _eigenvalues(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        return spectrum.values
    return Spectrum.from_eigenvalues(spectrum).values


def _as_spectrum(spectrum) -> Spectrum:
    return spectrum if isinstance(spectrum, Spectrum) else Spectrum.from_eigenvalues(spectrum)


def _add_scaled(m1, e1, m2, e2):
    """(m1 * 2**e1) + (m2 * 2**e2), elementwise, renormalised by frexp."""
    e = np.where(m1 == 0, e2, np.where(m2 == 0, e1, np.maximum(e1, e2)))
    total = np.ldexp(m1, e1 - e) + np.ldexp(m2, e2 - e)
    m, shift = np.frexp(total)
    return m, np.where(m == 0, 0, e + shift)


def _esp_step(mant, expo, lam):
    """Multiply the polynomial stored in (mant, expo) by (1 + lam x), in place."""
    if lam == 0:
        return
    lm, le = math.frexp(lam)
    m, e = _add_scaled(mant[1:], expo[1:], mant[:-1] * lm, expo[:-1] + le)
    mant[1:] = m
    expo[1:] = e


@dataclass(frozen=True)
class EspTable:
    """``e_k = mantissa[k] * 2**exponent[k]`` for k = 0..n.

    Each degree carries its own binary exponent, so tables for long spectra
    neither overflow nor underflow.
    """

    mantissa: np.ndarray
    exponent: np.ndarray

    @property
    def n(self) -> int:
        return self.mantissa.size - 1

    @property
    def scale_log(self) -> np.ndarray:
        """Natural-log scale factor of each entry."""
        return self.exponent * LN2

    @property
    def values(self) -> np.ndarray:
        """Unscaled ``e_k``; may overflow to inf or underflow to 0 for long spectra."""
        with np.errstate(over="ignore", under="ignore"):
            return np.ldexp(self.mantissa, self.exponent)

    def log(self) -> np.ndarray:
        """``log e_k``, ``-inf`` where ``e_k == 0``."""
        with np.errstate(divide="ignore"):
            return np.log(self.mantissa) + self.scale_log

    def ratio(self, k: int) -> float:
        """``e_{k+1} / e_k``."""
        if self.mantissa[k] == 0:
            raise DegenerateError(f"e_{k} is zero")
        return math.ldexp(self.mantissa[k + 1] / self.mantissa[k], int(self.exponent[k + 1] - self.exponent[k]))

    def __getitem__(self, k):
        return math.ldexp(self.mantissa[k], int(self.exponent[k]))


def esp(spectrum) -> EspTable:
    """Coefficients of ``prod_i (1 + lambda_i x)``, built one factor at a time."""
    lam = _eigenvalues(spectrum)
    n = lam.size
    mant = np.zeros(n + 1)
    expo = np.zeros(n + 1, dtype=np.int64)
    mant[0] = 0.5
    expo[0] = 1
    for x in lam:
        _esp_step(mant, expo, float(x))
    return EspTable(mant, expo)


def esp_prefix_ratios(values, kmax: int) -> np.ndarray:
    """Inclusion probabilities for sequential k-DPP eigenvector selection.

    ``out[i, l] = lambda_i e_{l-1}(lambda_{<i}) / e_l(lambda_{<=i})``, the
    probability of keeping eigenvalue ``i`` (0-based) when ``l`` items are
    still to be chosen from the first ``i + 1`` eigenvalues.
    """
    lam = np.asarray(values, dtype=float)
    n = lam.size
    mant = np.zeros((n + 1, kmax + 1))
    expo = np.zeros((n + 1, kmax + 1), dtype=np.int64)
    mant[:, 0] = 0.5
    expo[:, 0] = 1
    for i in range(n):
        mant[i + 1] = mant[i]
        expo[i + 1] = expo[i]
        _esp_step(mant[i + 1], expo[i + 1], float(lam[i]))
    out = np.zeros((n, kmax + 1))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
        for l in range(1, kmax + 1):
            num = mant[:-1, l - 1] * lam
            den = mant[1:, l]
            r = np.ldexp(num / np.where(den == 0, 1.0, den), expo[:-1, l - 1] - expo[1:, l])
            out[:, l] = np.where(den == 0, 0.0, np.minimum(r, 1.0))
    return out


def kdpp_expected_error(spectrum, k: int) -> float:
    """Exact expected projection error of a k-DPP: ``(k + 1) e_{k+1} / e_k``."""
    spec = _as_spectrum(spectrum)
    if not 0 <= k < spec.rank:
        raise DegenerateError(f"k={k} must satisfy 0 <= k < rank={spec.rank}")
    return (k + 1) * esp(spec).ratio(k)


def _check_alpha(alpha):
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")


def dpp_inclusion_probabilities(spectrum, alpha: float) -> np.ndarray:
    """Per-eigenvector success probabilities ``lambda_i / (lambda_i + alpha)``."""
    _check_alpha(alpha)
    lam = _eigenvalues(spectrum)
    return lam / (lam + alpha)


def dpp_expected_size(spectrum, alpha: float) -> float:
    """``E|S|`` for ``S ~ DPP(K / alpha)``."""
    return float(np.sum(dpp_inclusion_probabilities(spectrum, alpha)))


def dpp_expected_error(spectrum, alpha: float) -> float:
    """``E[Er(S)] = alpha * E|S|`` for ``S ~ DPP(K / alpha)``."""
    lam = _eigenvalues(spectrum)
    _check_alpha(alpha)
    return float(np.sum(alpha * lam / (lam + alpha)))


def dpp_size_pmf(spectrum, alpha: float) -> np.ndarray:
    """Poisson-binomial distribution of ``|S|`` over 0..n."""
    p = dpp_inclusion_probabilities(spectrum, alpha)
    pmf = np.zeros(p.size + 1)
    pmf[0] = 1.0
    for j, pj in enumerate(p):
        pmf[1 : j + 2] = pmf[1 : j + 2] * (1 - pj) + pmf[: j + 1] * pj
        pmf[0] *= 1 - pj
    return pmf


def kdpp_error_curve(spectrum) -> np.ndarray:
    """``f(k)`` for k = 0..rank-1."""
    spec = _as_spectrum(spectrum)
    table = esp(spec)
    return np.array([(k + 1) * table.ratio(k) for k in range(spec.rank)])


def newton_ratio_check(spectrum) -> np.ndarray:
    """Ratios ``f(k) / f(k-1)`` for k = 1..rank-1.

    Newton's inequalities bound every ratio by ``(n-k)/(n+1-k) <= 1``, which is
    what makes k-DPP error decrease with k.
    """
    spec = _as_spectrum(spectrum)
    if spec.rank < 2:
        raise DegenerateError("need rank >= 2")
    f = kdpp_error_curve(spec)
    return f[1:] / f[:-1]


@dataclass(frozen=True)
class ConvexityReport:
    f: np.ndarray
    second_differences: np.ndarray  # entry j is f(j+2) + f(j) - 2 f(j+1)
    min_second_difference: float
    argmin_k: int
    violations: tuple[int, ...]

    @property
    def convex(self) -> bool:
        return not self.violations


def convexity_probe(spectrum, tol: float = 1e-12) -> ConvexityReport:
    """Discrete convexity of ``f(k)`` over k = 0..rank-1.

    Reports the smallest second difference and every k where it falls below
    ``-tol * max f``. Nothing is asserted: convexity of f is an open question.
    """
    spec = _as_spectrum(spectrum)
    if spec.rank < 3:
        raise DegenerateError("need rank >= 3 for a second difference")
    f = kdpp_error_curve(spec)
    d2 = f[2:] + f[:-2] - 2 * f[1:-1]
    j = int(np.argmin(d2))
    bad = tuple(int(i) + 1 for i in np.flatnonzero(d2 < -tol * f.max()))
    return ConvexityReport(f, d2, float(d2[j]), j + 1, bad)
