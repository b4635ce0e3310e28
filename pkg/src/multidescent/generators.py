"""Matrix families: prescribed spectra, RBF/linear kernels and worst-case simplex instances."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .exceptions import BudgetExceeded, CertificationError, DomainError, ParseError, ShapeError
from .sampling import make_rng
from .spectral import GramInstance, as_dense, opt_k, projection_error

SPECTRUM_KINDS = ("flat_with_drops", "poly", "exp", "explicit")


@dataclass(frozen=True)
class SpectrumSpec:
    """A target spectrum for :func:`gen_shaped_matrix`.

    ``flat_with_drops``: ``levels[j]`` holds from index ``breaks[j-1]``
    (1-based, the first eigenvalue at the new level) up to the next break.
    ``poly`` / ``exp``: ``lambda_i`` within ``[c1, c2]`` times ``i^-p`` or
    ``(1-delta)^i``; when ``c1 < c2`` the multiplier is drawn per index
    from ``seed`` and the result re-sorted, which keeps both envelopes.
    """

    kind: str
    n: int
    levels: tuple[float, ...] = ()
    breaks: tuple[int, ...] = ()
    p: float = 2.0
    delta: float = 0.05
    c1: float = 1.0
    c2: float = 1.0
    values: tuple[float, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SPECTRUM_KINDS:
            raise DomainError(f"unknown spectrum kind {self.kind!r}")
        if self.n < 1:
            raise DomainError("n must be positive")

    def eigenvalues(self) -> np.ndarray:
        n = self.n
        i = np.arange(1, n + 1, dtype=float)
        if self.kind == "explicit":
            if len(self.values) != n:
                raise ShapeError(f"{len(self.values)} explicit values for n={n}")
            lam = np.asarray(self.values, dtype=float)
        elif self.kind == "flat_with_drops":
            if len(self.levels) != len(self.breaks) + 1:
                raise DomainError("need exactly one more level than breaks")
            edges = [1, *self.breaks, n + 1]
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise DomainError("breaks must be strictly increasing inside 2..n")
            lam = np.empty(n)
            for level, lo, hi in zip(self.levels, edges, edges[1:]):
                lam[lo - 1 : hi - 1] = level
        else:
            if not 0 < self.c1 <= self.c2:
                raise DomainError("need 0 < c1 <= c2")
            if self.kind == "poly":
                if not self.p > 0:
                    raise DomainError("p must be positive")
                base = i ** (-self.p)
            else:
                if not 0 < self.delta < 1:
                    raise DomainError("delta must lie in (0, 1)")
                base = (1 - self.delta) ** i
            if self.c1 == self.c2:
                lam = self.c1 * base
            else:
                u = make_rng(self.seed).random(n)
                lam = base * (self.c1 + (self.c2 - self.c1) * u)
        lam = np.sort(lam)[::-1]
        if np.any(lam < 0) or not np.all(np.isfinite(lam)):
            raise DomainError("spectrum values must be finite and nonnegative")
        return lam


def flat_with_drops(levels, breaks, n) -> SpectrumSpec:
    return SpectrumSpec("flat_with_drops", n, levels=tuple(levels), breaks=tuple(breaks))


def _orthonormal(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    """Orthonormalised Gaussian columns, signs fixed so the result is a function of the draw."""
    Q, R = np.linalg.qr(rng.standard_normal((rows, cols)))
    return Q * np.where(np.diag(R) < 0, -1.0, 1.0)


def gen_shaped_matrix(spec: SpectrumSpec, m: int, n: int, seed: int = 0) -> np.ndarray:
    """``A = U diag(sqrt(lambda)) V^T`` with Haar-like U (m x n) and V (n x n)."""
    if spec.n != n:
        raise ShapeError(f"spectrum has n={spec.n}, matrix needs n={n}")
    if m < n:
        raise ShapeError("need m >= n")
    lam = spec.eigenvalues()
    rng = make_rng(seed)
    U = _orthonormal(rng, m, n)
    V = _orthonormal(rng, n, n)
    return (U * np.sqrt(lam)) @ V.T


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"  # "rbf" or "linear"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise DomainError(f"unknown kernel {self.kind!r}")
        if self.kind == "rbf" and not self.sigma > 0:
            raise DomainError("rbf bandwidth sigma must be positive")


def kernel_matrix(points, spec: KernelSpec) -> np.ndarray:
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] == 0:
        raise ShapeError("no data points")
    if not np.all(np.isfinite(X)):
        raise ShapeError("data has non-finite coordinates")
    G = X @ X.T
    if spec.kind == "linear":
        return 0.5 * (G + G.T)
    sq = np.diag(G)
    D = np.maximum(sq[:, None] + sq[None, :] - 2 * G, 0.0)
    np.fill_diagonal(D, 0.0)
    D = 0.5 * (D + D.T)
    return np.exp(-D / spec.sigma**2)


def build_kernel(points, spec: KernelSpec) -> GramInstance:
    """Kernel instance with one data point per row of ``points``."""
    return GramInstance.from_kernel(kernel_matrix(points, spec))


# --- worst-case simplex instances ---------------------------------------------------------


@dataclass(frozen=True)
class LowerBoundSpec:
    """Blocks of ``l[i]`` lifted simplex corners with slack ``delta``.

    Scalars follow ``alpha_1 = 1``, ``beta_i = rho alpha_i``,
    ``alpha_{i+1} = rho beta_i`` before certification shrinks them.
    """

    l: tuple[int, ...]
    delta: float
    rho: float = 1e-2

    def __post_init__(self):
        object.__setattr__(self, "l", tuple(int(x) for x in self.l))
        if not self.l or any(x < 2 for x in self.l):
            raise DomainError("every block size l_i must be at least 2")
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")
        if not 0 < self.rho < 1:
            raise DomainError("rho must lie in (0, 1)")

    @property
    def t(self) -> int:
        return len(self.l)

    @property
    def n(self) -> int:
        return sum(self.l)

    @property
    def min_dim(self) -> int:
        return self.n + self.t

    @property
    def k(self) -> tuple[int, ...]:
        """Declared subset sizes ``k_i = l_1 + ... + l_i - 1``."""
        return tuple(int(x) - 1 for x in np.cumsum(self.l))

    @property
    def targets(self) -> tuple[float, ...]:
        return tuple((1 - self.delta) * x for x in self.l)

    def to_config(self) -> dict[str, str]:
        return {
            "t": str(self.t),
            "l": ",".join(map(str, self.l)),
            "delta": repr(self.delta),
            "rho": repr(self.rho),
        }


@dataclass(frozen=True)
class LowerBoundInstance:
    spec: LowerBoundSpec
    matrix: np.ndarray
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    k: tuple[int, ...]
    targets: tuple[float, ...]
    min_ratios: tuple[float, ...]
    method: str  # "brute_force" or "canonical"
    seed: int | None = None
    shrinks: tuple[int, ...] = field(default=())


def simplex_corners(l: int) -> np.ndarray:
    """``l`` unit vectors in R^l (columns) with zero sum and pairwise inner product -1/(l-1)."""
    P = np.eye(l) - 1.0 / l
    return P / np.sqrt((l - 1) / l)


def _assemble(spec: LowerBoundSpec, m: int, alphas, betas) -> np.ndarray:
    A = np.zeros((m, spec.n))
    row = col = 0
    for l, a, b in zip(spec.l, alphas, betas):
        A[row : row + l, col : col + l] = a * simplex_corners(l)
        A[row + l, col : col + l] = b
        row += l + 1
        col += l
    return A


def _schedule(spec: LowerBoundSpec, shrinks) -> tuple[list[float], list[float]]:
    alphas, betas = [], []
    a = 1.0
    for i in range(spec.t):
        b = spec.rho * a * 0.5 ** shrinks[i]
        alphas.append(a)
        betas.append(b)
        a = spec.rho * b
    return alphas, betas


def _canonical_ratios(inst: GramInstance, spec: LowerBoundSpec, opts) -> list[float]:
    """Ratio at ``k_c`` for the subsets that keep blocks < c and drop one column of block c."""
    out = []
    starts = np.concatenate([[0], np.cumsum(spec.l)])
    for c in range(spec.t):
        lo, hi = starts[c], starts[c + 1]
        worst = min(projection_error(inst, [j for j in range(hi) if j != drop]) for drop in range(lo, hi))
        out.append(worst / opts[c])
    return out


def _brute_ratios(inst: GramInstance, ks, opts) -> list[float]:
    n = inst.n
    return [min(projection_error(inst, S) for S in combinations(range(n), k)) / o for k, o in zip(ks, opts)]


def certify_ratios(A, ks, budget: int = 20_000) -> list[float]:
    """Brute-force ``min_{|S|=k} Er(S) / OPT_k`` for each k; raises BudgetExceeded."""
    inst = GramInstance.from_columns(A)
    if sum(math.comb(inst.n, k) for k in ks) > budget:
        raise BudgetExceeded(f"enumeration exceeds budget {budget}")
    return _brute_ratios(inst, ks, [opt_k(inst.spectrum, k) for k in ks])


def gen_lower_bound(
    spec: LowerBoundSpec, m: int | None = None, seed: int | None = None, budget: int = 20_000, max_shrinks: int = 20
) -> LowerBoundInstance:
    """Worst-case instance whose best size-``k_i`` subset is ``(1-delta) l_i`` times OPT.

    Each ``beta_c`` is halved (carrying the later scalars along) until the
    bound holds at ``k_c``. Small instances are certified by enumerating all
    subsets; larger ones by the subsets the construction is designed around.
    ``seed`` applies a random rotation of R^m; ``None`` keeps the axis-aligned
    embedding, whose Gram matrix is exactly block diagonal.
    """
    m = spec.min_dim if m is None else m
    if m < spec.min_dim:
        raise ShapeError(f"need m >= {spec.min_dim}, got {m}")
    ks, targets = spec.k, spec.targets
    exhaustive = sum(math.comb(spec.n, k) for k in ks) <= budget
    shrinks = [0] * spec.t
    while True:
        alphas, betas = _schedule(spec, shrinks)
        A = _assemble(spec, m, alphas, betas)
        inst = GramInstance.from_columns(A)
        # block structure gives OPT directly, without eigen round-off at tiny scales
        tail = [(a * a + b * b) * l for a, b, l in zip(alphas, betas, spec.l)]
        opts = [spec.l[c] * betas[c] ** 2 + sum(tail[c + 1 :]) for c in range(spec.t)]
        ratios = _brute_ratios(inst, ks, opts) if exhaustive else _canonical_ratios(inst, spec, opts)
        failing = [c for c in range(spec.t) if ratios[c] < targets[c]]
        if not failing:
            break
        c = failing[0]
        if shrinks[c] >= max_shrinks:
            raise CertificationError(
                f"block {c + 1}: ratio {ratios[c]:.6g} < target {targets[c]:.6g} after {max_shrinks} halvings; "
                f"later blocks stay rho={spec.rho:g} below beta_{c + 1}, so try a smaller rho"
            )
        shrinks[c] += 1
    if seed is not None:
        A = _orthonormal(make_rng(seed), m, m) @ A
    return LowerBoundInstance(
        spec, A, tuple(alphas), tuple(betas), ks, targets, tuple(ratios),
        "brute_force" if exhaustive else "canonical", seed, tuple(shrinks),
    )


# --- libsvm ---------------------------------------------------------------------------------


def parse_libsvm(lines):
    """Parse libsvm text lines into a dense point matrix and label vector."""
    labels, rows = [], []
    dim = 0
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise ParseError(f"bad label {tokens[0]!r}", lineno) from None
        feats = {}
        last = 0
        for tok in tokens[1:]:
            idx, sep, val = tok.partition(":")
            try:
                i, v = int(idx), float(val)
            except ValueError:
                raise ParseError(f"bad feature {tok!r}", lineno) from None
            if not sep or i < 1:
                raise ParseError(f"bad feature {tok!r}", lineno)
            if i <= last:
                raise ParseError(f"feature indices must increase ({i} after {last})", lineno)
            if not math.isfinite(v):
                raise ParseError(f"non-finite value in {tok!r}", lineno)
            feats[i] = v
            last = i
        dim = max(dim, last)
        rows.append(feats)
    X = np.zeros((len(rows), dim))
    for r, feats in enumerate(rows):
        for i, v in feats.items():
            X[r, i - 1] = v
    return X, np.asarray(labels)


def read_libsvm(path):
    """Read a libsvm file; feature dimension is the largest index present."""
    with open(path) as fh:
        return parse_libsvm(fh)
