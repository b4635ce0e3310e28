"""Experiment configuration and the table builders behind the CLI.

A configuration is an INI file with three flat sections::

    [instance]
    source = spectrum            ; spectrum | matrix | kernel | libsvm
    kind = flat_with_drops       ; spectrum kind, see SpectrumSpec
    n = 60
    levels = 1, 0.05, 0.0025
    breaks = 21, 41

    [run]
    k_min = 1
    k_max = 50
    methods = exact, kdpp
    trials = 1000
    seed = 0

    [bounds]
    epsilon = 0
    s = 0, 10, 20
    psi_s = 0
    decay = poly:2:1

Command-line flags override file values key by key.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

from . import bounds as bd
from .esp import kdpp_error_curve
from .exceptions import BudgetExceeded, ConfigError, DegenerateError, DomainError, MultidescentError, WindowError
from .generators import KernelSpec, SpectrumSpec, build_kernel, gen_shaped_matrix, read_libsvm
from .io import parse_list, read_manifest, read_matrix
from .selectors import ENUMERATION_BUDGET, METHODS, estimate_factor
from .spectral import GramInstance, Spectrum, opt_k, projection_error

REAL = "{:.12g}"
DEFAULT_TRIALS = 1000
DEFAULT_K_MAX = 60
SOURCES = ("spectrum", "matrix", "kernel", "libsvm")
RUN_METHODS = ("exact", *METHODS)


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return REAL.format(float(x))
    return str(x)


def write_rows(rows, columns, fh) -> None:
    writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: fmt(row.get(c)) for c in columns})


# --- configuration ---------------------------------------------------------------------------


def _get(section: dict, key: str, cast, default=None, where="instance"):
    if key not in section or section[key] in ("", None):
        return default
    try:
        return cast(section[key])
    except (TypeError, ValueError):
        raise ConfigError(f"[{where}] {key}: cannot parse {section[key]!r}") from None


@dataclass
class ExperimentConfig:
    instance: dict[str, str] = field(default_factory=dict)
    k_min: int | None = None
    k_max: int | None = None
    methods: tuple[str, ...] = ("exact",)
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    epsilon: float = 0.0
    s_list: tuple[int, ...] | None = None
    psi_s: tuple[int, ...] = ()
    decay: str | None = None
    decay_c: float | None = None

    @classmethod
    def from_sections(cls, sections: dict[str, dict[str, str]]) -> ExperimentConfig:
        unknown = set(sections) - {"instance", "run", "bounds", "DEFAULT"}
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        run = sections.get("run", {})
        bnd = sections.get("bounds", {})
        methods = _get(run, "methods", lambda v: parse_list(v, str), ("exact",), "run")
        bad = [m for m in methods if m not in RUN_METHODS]
        if bad:
            raise ConfigError(f"[run] methods: unknown {bad}; choose from {RUN_METHODS}")
        cfg = cls(
            instance=dict(sections.get("instance", {})),
            k_min=_get(run, "k_min", int, None, "run"),
            k_max=_get(run, "k_max", int, None, "run"),
            methods=tuple(methods),
            trials=_get(run, "trials", int, DEFAULT_TRIALS, "run"),
            seed=_get(run, "seed", int, 0, "run"),
            epsilon=_get(bnd, "epsilon", float, 0.0, "bounds"),
            s_list=_get(bnd, "s", lambda v: parse_list(v, int), None, "bounds"),
            psi_s=_get(bnd, "psi_s", lambda v: parse_list(v, int), (), "bounds"),
            decay=_get(bnd, "decay", str, None, "bounds"),
            decay_c=_get(bnd, "c", float, None, "bounds"),
        )
        if cfg.trials < 1:
            raise ConfigError("[run] trials: must be at least 1")
        if not 0 <= cfg.epsilon <= 0.5:
            raise ConfigError("[bounds] epsilon: must lie in [0, 1/2]")
        return cfg


def load_config(path=None, overrides: dict[str, dict[str, str]] | None = None) -> ExperimentConfig:
    """Read ``path`` (optional) and apply ``overrides``; overrides win."""
    sections: dict[str, dict[str, str]] = {}
    if path is not None:
        try:
            sections = read_manifest(path)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except Exception as exc:  # configparser errors carry their own line info
            raise ConfigError(f"config file {path}: {exc}") from None
    for name, items in (overrides or {}).items():
        sections.setdefault(name, {}).update({k: v for k, v in items.items() if v is not None})
    return ExperimentConfig.from_sections(sections)


# --- instance sources ------------------------------------------------------------------------


def spectrum_spec(section: dict[str, str]) -> SpectrumSpec:
    kind = _get(section, "kind", str)
    if kind is None:
        raise ConfigError("[instance] kind: required for a spectrum source")
    values = _get(section, "values", parse_list, ())
    n = _get(section, "n", int, len(values) or None)
    if n is None:
        raise ConfigError("[instance] n: required")
    try:
        return SpectrumSpec(
            kind,
            n,
            levels=_get(section, "levels", parse_list, ()),
            breaks=_get(section, "breaks", lambda v: parse_list(v, int), ()),
            p=_get(section, "p", float, 2.0),
            delta=_get(section, "delta", float, 0.05),
            c1=_get(section, "c1", float, 1.0),
            c2=_get(section, "c2", float, 1.0),
            values=values,
            seed=_get(section, "seed", int, 0),
        )
    except MultidescentError as exc:
        raise ConfigError(f"[instance] {exc}") from None


class Source:
    """Resolved instance: the spectrum is always available, the matrix on demand."""

    def __init__(self, section: dict[str, str]):
        self.section = dict(section)
        self.kind = _get(self.section, "source", str, "spectrum")
        if self.kind not in SOURCES:
            raise ConfigError(f"[instance] source: {self.kind!r} not in {SOURCES}")
        if self.kind != "spectrum" and not self.section.get("path"):
            raise ConfigError(f"[instance] path: required for source={self.kind}")

    @cached_property
    def instance(self) -> GramInstance:
        s = self.section
        try:
            if self.kind == "spectrum":
                spec = spectrum_spec(s)
                m = _get(s, "m", int, spec.n)
                A = gen_shaped_matrix(spec, m, spec.n, seed=_get(s, "matrix_seed", int, 0))
                return GramInstance.from_columns(A)
            if self.kind == "matrix":
                return GramInstance.from_columns(read_matrix(s["path"]))
            if self.kind == "kernel":
                return GramInstance.from_kernel(read_matrix(s["path"]))
            X, _ = read_libsvm(s["path"])
            kernel = _get(s, "kernel", str, "rbf")
            if kernel == "rbf" and _get(s, "sigma", float) is None:
                raise ConfigError("[instance] sigma: required for an rbf kernel")
            kspec = KernelSpec(kernel, _get(s, "sigma", float, 1.0))
            return build_kernel(X, kspec)
        except (OSError, MultidescentError) as exc:
            raise ConfigError(f"[instance] {exc}") from None

    @cached_property
    def spectrum(self) -> Spectrum:
        if self.kind == "spectrum":
            return Spectrum.from_eigenvalues(spectrum_spec(self.section).eigenvalues())
        return self.instance.spectrum


def k_range(cfg: ExperimentConfig, spectrum: Spectrum) -> range:
    """``[k_min, k_max]`` clipped to the default cap and checked against ``[1, rank - 1]``."""
    r = spectrum.rank
    lo = 1 if cfg.k_min is None else cfg.k_min
    hi = min(r - 1, DEFAULT_K_MAX) if cfg.k_max is None else cfg.k_max
    if not 1 <= lo <= hi <= r - 1:
        raise ConfigError(f"[run] k_min/k_max: need 1 <= {lo} <= {hi} <= rank-1 = {r - 1}")
    return range(lo, hi + 1)


def parse_decay(text: str):
    """``poly:p[:gamma]`` or ``exp:delta[:gamma]``."""
    parts = str(text).split(":")
    try:
        kind, a = parts[0], float(parts[1])
        g = float(parts[2]) if len(parts) > 2 else 1.0
        if kind == "poly":
            return bd.PolyDecay(a, g)
        if kind == "exp":
            return bd.ExpDecay(a, g)
    except (IndexError, ValueError, DomainError) as exc:
        raise ConfigError(f"[bounds] decay: {text!r} ({exc})") from None
    raise ConfigError(f"[bounds] decay: kind must be poly or exp, got {parts[0]!r}")


# --- bounds table ----------------------------------------------------------------------------


def default_orders(spectrum: Spectrum, count: int = 10) -> tuple[int, ...]:
    r = spectrum.rank
    return tuple(range(0, r, max(1, r // count)))


def bound_curves(spectrum: Spectrum, ks, cfg: ExperimentConfig) -> list[bd.BoundCurve]:
    """Every requested bound family over ``ks`` plus OPT_k and the stable-rank profile.

    ``opt_k`` rows carry OPT in ``value``; ``stable_rank`` and ``t_s`` rows
    carry ``sr_s`` and ``t_s`` with s in the ``k`` column.
    """
    ks = list(ks)
    curves = [bd.BoundCurve("opt_k", "", {k: opt_k(spectrum, k) for k in ks})]
    orders = default_orders(spectrum) if cfg.s_list is None else cfg.s_list
    kset = set(ks)
    for s in orders:
        try:
            c = bd.phi_curve(spectrum, s)
        except WindowError as exc:
            raise ConfigError(f"[bounds] s: {exc}") from None
        c.values = {k: v for k, v in c.values.items() if k in kset}
        curves.append(c)
    curves.append(bd.envelope_curve(spectrum, ks, cfg.epsilon, enforce_threshold=cfg.epsilon > 0))
    for s in cfg.psi_s:
        try:
            c = bd.psi_curve(spectrum, s)
        except MultidescentError as exc:
            raise ConfigError(f"[bounds] psi_s: {exc}") from None
        c.values = {k: v for k, v in c.values.items() if k in kset}
        curves.append(c)
    curves.append(bd.worst_case_curve(ks))
    if cfg.decay:
        curves.append(bd.decay_curve(parse_decay(cfg.decay), ks, cfg.decay_c))
    prof = bd.stable_rank_profile(spectrum)
    curves.append(bd.BoundCurve("stable_rank", "sr_s", dict(enumerate(prof.sr.tolist()))))
    curves.append(bd.BoundCurve("t_s", "s+sr_s", dict(enumerate(prof.t.tolist()))))
    return curves


# --- experiment table ------------------------------------------------------------------------

EXPERIMENT_COLUMNS = [
    "k", "method", "mean_factor", "se", "trials", "exact_factor", "opt_k", "envelope", "worst_case", "flag",
]


def experiment_rows(source: Source, ks, cfg: ExperimentConfig) -> list[dict]:
    """One row per (k, method), in that order.

    ``exact`` evaluates ``f(k) / OPT_k`` from the spectrum alone; ``kdpp``
    adds the Monte Carlo mean over ``cfg.trials`` seeded draws next to the
    exact value; ``greedy`` and ``brute_force`` run once. k values with
    ``OPT_k = 0`` are kept and flagged ``degenerate_opt``.
    """
    spec = source.spectrum
    f = kdpp_error_curve(spec)
    rows = []
    for k in ks:
        opt = opt_k(spec, k)
        env = bd.master_envelope(spec, k, cfg.epsilon, enforce_threshold=cfg.epsilon > 0)
        base = {"k": k, "opt_k": opt, "envelope": env.value, "worst_case": float(k + 1)}
        for method in cfg.methods:
            row = dict(base, method=method, flag="fallback" if env.fallback else "")
            if k >= f.size or not opt > 0:
                row["flag"] = "degenerate_opt"
                rows.append(row)
                continue
            exact = f[k] / opt
            if method == "exact":
                row.update(mean_factor=exact, se=0.0, trials=0, exact_factor=exact)
            else:
                try:
                    est = estimate_factor(source.instance, k, method, cfg.trials if method == "kdpp" else 1, cfg.seed)
                except DegenerateError:
                    row["flag"] = "degenerate_opt"
                    rows.append(row)
                    continue
                row.update(mean_factor=est.mean, se=est.se, trials=est.trials, exact_factor=est.exact)
            rows.append(row)
    return rows


# --- lower-bound verification ----------------------------------------------------------------

VERIFY_COLUMNS = ["k", "min_ratio", "target", "status"]


def declared_targets(manifest: dict[str, dict[str, str]]) -> dict[int, float]:
    lb = manifest.get("lower_bound", {})
    ks = parse_list(lb.get("k", ""), int)
    targets = parse_list(lb.get("targets", ""), float)
    if len(ks) != len(targets):
        raise ConfigError("[lower_bound] k and targets differ in length")
    return dict(zip(ks, targets))


def verify_lower(A, declared: dict[int, float], extra_ks=(), budget: int = ENUMERATION_BUDGET) -> list[dict]:
    """Brute-force ``min_{|S|=k} Er(S) / OPT_k`` for declared and extra k.

    Declared sizes pass when the minimum reaches the target; extra sizes
    are reported as ``undeclared``.
    """
    inst = GramInstance.from_columns(A)
    ks = sorted(set(declared) | set(extra_ks))
    bad = [k for k in ks if not 0 <= k <= inst.n]
    if bad:
        raise ConfigError(f"k out of range [0, {inst.n}]: {bad}")
    total = sum(math.comb(inst.n, k) for k in ks)
    if total > budget:
        raise BudgetExceeded(f"{total} subsets exceed budget {budget}")
    rows = []
    for k in ks:
        opt = opt_k(inst.spectrum, k)
        best = min(projection_error(inst, S) for S in combinations(range(inst.n), k))
        ratio = best / opt if opt > 0 else math.inf
        target = declared.get(k)
        if target is None:
            status = "undeclared"
        else:
            status = "pass" if ratio >= target else "fail"
        rows.append({"k": k, "min_ratio": ratio, "target": target, "status": status})
    return rows


# --- peak / drop structure -------------------------------------------------------------------


def local_maxima(values) -> list[int]:
    """Positions of interior local maxima; a plateau counts once, at its left end."""
    v = np.asarray(values, dtype=float)
    out = []
    i = 1
    while i < v.size - 1:
        j = i
        while j + 1 < v.size and v[j + 1] == v[i]:
            j += 1
        if v[i] > v[i - 1] and j + 1 < v.size and v[j + 1] < v[i]:
            out.append(i)
        i = j + 1
    return out


def spectrum_drops(spectrum, min_ratio: float = 10.0, top: int | None = None) -> list[int]:
    """Sizes k with ``lambda_k / lambda_{k+1} >= min_ratio`` (1-based), sharpest first if ``top``."""
    lam = np.asarray(spectrum.values if isinstance(spectrum, Spectrum) else spectrum, dtype=float)
    pos = lam[lam > 0]
    ratios = pos[:-1] / pos[1:]
    ks = np.flatnonzero(ratios >= min_ratio) + 1
    if top is not None:
        ks = ks[np.argsort(-ratios[ks - 1], kind="stable")][:top]
    return sorted(int(k) for k in ks)


@dataclass(frozen=True)
class DescentReport:
    drops: tuple[int, ...]
    peaks: tuple[int, ...]
    matched: tuple[tuple[int, int | None, float, float], ...]  # (drop, peak k, peak value, valley min)
    tolerance: int
    min_peak_ratio: float

    @property
    def ok(self) -> bool:
        return len(self.peaks) >= len(self.drops) and all(
            p is not None and v >= self.min_peak_ratio * lo for _, p, v, lo in self.matched
        )


def descent_report(ks, factors, drops, tolerance: int = 2, min_peak_ratio: float = 3.0) -> DescentReport:
    """Match each drop to the highest factor peak within ``tolerance`` of it.

    The valley of a peak is the stretch of k since the previous drop (or the
    first k), and its height is compared to the valley minimum.
    """
    ks = list(ks)
    v = np.asarray(factors, dtype=float)
    peaks = [ks[i] for i in local_maxima(v)]
    pos = {k: i for i, k in enumerate(ks)}
    matched = []
    prev = ks[0] - 1
    for d in sorted(drops):
        near = [p for p in peaks if abs(p - d) <= tolerance]
        if not near:
            matched.append((d, None, math.nan, math.nan))
            prev = d
            continue
        p = max(near, key=lambda q: v[pos[q]])
        valley = [v[pos[k]] for k in ks if prev < k < p]
        lo = min(valley) if valley else math.nan
        matched.append((d, p, float(v[pos[p]]), float(lo)))
        prev = d
    return DescentReport(tuple(sorted(drops)), tuple(peaks), tuple(matched), tolerance, min_peak_ratio)
