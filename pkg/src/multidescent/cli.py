"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 verification failure,
4 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import contextlib
import sys
from pathlib import Path

from . import harness as hx
from .bounds import write_bound_curves
from .exceptions import BudgetExceeded, CertificationError, ConfigError, MultidescentError
from .generators import LowerBoundSpec, gen_lower_bound, gen_shaped_matrix
from .io import parse_list, read_manifest, read_matrix, write_manifest, write_matrix
from .sampling import DppConfig, sample_batch
from .selectors import ENUMERATION_BUDGET, brute_force_optimum, greedy_select, kdpp_select
from .spectral import opt_k, projection_error

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_BUDGET = 0, 2, 3, 4

# instance flags map one-to-one onto [instance] keys
_INSTANCE_FLAGS = ("source", "path", "kind", "n", "m", "levels", "breaks", "p", "delta", "c1", "c2", "values",
                   "kernel", "sigma", "matrix_seed")


def _add_instance_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance")
    g.add_argument("--source", choices=hx.SOURCES)
    g.add_argument("--path", help="matrix, kernel or libsvm file")
    g.add_argument("--kind", help="spectrum kind: flat_with_drops, poly, exp or explicit")
    g.add_argument("--n", type=int)
    g.add_argument("--m", type=int, help="rows of the generated matrix (default n)")
    g.add_argument("--levels", help="comma-separated levels of a flat_with_drops spectrum")
    g.add_argument("--breaks", help="1-based indices where each new level starts")
    g.add_argument("--p", type=float)
    g.add_argument("--delta", type=float)
    g.add_argument("--c1", type=float)
    g.add_argument("--c2", type=float)
    g.add_argument("--values", help="explicit eigenvalues")
    g.add_argument("--kernel", choices=("rbf", "linear"))
    g.add_argument("--sigma", type=float, help="rbf bandwidth")
    g.add_argument("--matrix-seed", dest="matrix_seed", type=int)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with [instance], [run], [bounds]")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--trials", type=int)
    p.add_argument("--k-min", dest="k_min", type=int)
    p.add_argument("--k-max", dest="k_max", type=int)
    p.add_argument("--method", help="comma-separated: exact, kdpp, greedy, brute_force")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--s", help="orders s for the phi curves")
    p.add_argument("--psi-s", dest="psi_s", help="orders s for the psi curves")
    p.add_argument("--decay", help="poly:p[:gamma] or exp:delta[:gamma]")
    p.add_argument("--c", type=float, help="constant of the decay bounds")
    _add_instance_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multidescent", description="Column subset selection and DPP bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(sub.add_parser("bounds", help="bound families per k"))
    _add_run_flags(sub.add_parser("experiment", help="approximation factor per (k, method)"))

    gen = sub.add_parser("gen", help="write a generated matrix and its manifest")
    gsub = gen.add_subparsers(dest="family", required=True)
    lb = gsub.add_parser("lower-bound", help="worst-case simplex instance")
    lb.add_argument("--l", required=True, help="block sizes, e.g. 3,3")
    lb.add_argument("--delta", type=float, required=True)
    lb.add_argument("--rho", type=float, default=1e-2)
    lb.add_argument("--m", type=int)
    lb.add_argument("--seed", type=int, help="random rotation of the ambient space")
    lb.add_argument("--budget", type=int, default=20_000)
    lb.add_argument("--out", required=True)
    sh = gsub.add_parser("shaped", help="matrix with a prescribed spectrum")
    _add_instance_flags(sh)
    sh.add_argument("--seed", type=int, default=0)
    sh.add_argument("--out", required=True)

    vl = sub.add_parser("verify-lower", help="brute-force check of a lower-bound instance")
    vl.add_argument("--matrix", required=True)
    vl.add_argument("--manifest", help="default: <matrix>.manifest.ini")
    vl.add_argument("--k", help="extra sizes to check")
    vl.add_argument("--budget", type=int, default=ENUMERATION_BUDGET)
    vl.add_argument("--out")

    se = sub.add_parser("select", help="run one selection method")
    _add_run_flags(se)
    se.add_argument("--k", type=int, required=True)
    se.add_argument("--budget", type=int, default=ENUMERATION_BUDGET)

    sa = sub.add_parser("sample", help="draw DPP or k-DPP subsets")
    _add_run_flags(sa)
    sa.add_argument("--k", type=int, help="fixed size; omit for a random-size DPP")
    sa.add_argument("--alpha", type=float, default=1.0)
    return parser


def manifest_path(matrix_path) -> Path:
    return Path(str(matrix_path) + ".manifest.ini")


def _overrides(args) -> dict[str, dict[str, str]]:
    def s(x):
        return None if x is None else str(x)

    inst = {k: s(getattr(args, k, None)) for k in _INSTANCE_FLAGS}
    run = {
        "seed": s(getattr(args, "seed", None)),
        "trials": s(getattr(args, "trials", None)),
        "k_min": s(getattr(args, "k_min", None)),
        "k_max": s(getattr(args, "k_max", None)),
        "methods": s(getattr(args, "method", None)),
    }
    bnd = {
        "epsilon": s(getattr(args, "epsilon", None)),
        "s": s(getattr(args, "s", None)),
        "psi_s": s(getattr(args, "psi_s", None)),
        "decay": s(getattr(args, "decay", None)),
        "c": s(getattr(args, "c", None)),
    }
    return {"instance": inst, "run": run, "bounds": bnd}


@contextlib.contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def cmd_bounds(args) -> int:
    cfg = hx.load_config(args.config, _overrides(args))
    src = hx.Source(cfg.instance)
    ks = hx.k_range(cfg, src.spectrum)
    curves = hx.bound_curves(src.spectrum, ks, cfg)
    with _output(args.out) as fh:
        write_bound_curves(curves, fh)
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = hx.load_config(args.config, _overrides(args))
    src = hx.Source(cfg.instance)
    ks = hx.k_range(cfg, src.spectrum)
    rows = hx.experiment_rows(src, ks, cfg)
    with _output(args.out) as fh:
        hx.write_rows(rows, hx.EXPERIMENT_COLUMNS, fh)
    return EXIT_OK


def cmd_gen(args) -> int:
    if args.family == "lower-bound":
        try:
            spec = LowerBoundSpec(parse_list(args.l, int), args.delta, args.rho)
        except ValueError as exc:
            raise ConfigError(f"--l/--delta/--rho: {exc}") from None
        res = gen_lower_bound(spec, args.m, args.seed, budget=args.budget)
        write_matrix(args.out, res.matrix)
        write_manifest(manifest_path(args.out), {
            "generator": {"family": "lower-bound", "seed": "" if args.seed is None else args.seed,
                          "m": res.matrix.shape[0], **spec.to_config()},
            "lower_bound": {
                "k": ",".join(map(str, res.k)),
                "targets": ",".join(f"{x:.12g}" for x in res.targets),
                "certified_min_ratios": ",".join(f"{x:.12g}" for x in res.min_ratios),
                "certified_by": res.method,
                "alphas": ",".join(f"{x:.17g}" for x in res.alphas),
                "betas": ",".join(f"{x:.17g}" for x in res.betas),
            },
        })
        return EXIT_OK
    sect = {k: None if getattr(args, k) is None else str(getattr(args, k)) for k in _INSTANCE_FLAGS}
    sect = {k: v for k, v in sect.items() if v is not None}
    spec = hx.spectrum_spec(sect)
    m = args.m or spec.n
    try:
        A = gen_shaped_matrix(spec, m, spec.n, seed=args.seed)
    except MultidescentError as exc:
        raise ConfigError(str(exc)) from None
    write_matrix(args.out, A)
    write_manifest(manifest_path(args.out), {
        "generator": {"family": "shaped", "seed": args.seed, "m": m, **sect},
        "spectrum": {"values": ",".join(f"{x:.17g}" for x in spec.eigenvalues())},
    })
    return EXIT_OK


def cmd_verify_lower(args) -> int:
    try:
        A = read_matrix(args.matrix)
        manifest = read_manifest(args.manifest or manifest_path(args.matrix))
    except (OSError, MultidescentError) as exc:
        raise ConfigError(str(exc)) from None
    declared = hx.declared_targets(manifest)
    extra = parse_list(args.k, int) if args.k else ()
    rows = hx.verify_lower(A, declared, extra, args.budget)
    with _output(args.out) as fh:
        hx.write_rows(rows, hx.VERIFY_COLUMNS, fh)
    return EXIT_VERIFY if any(r["status"] == "fail" for r in rows) else EXIT_OK


SELECT_COLUMNS = ["method", "k", "indices", "error", "opt_k", "factor", "seed"]


def cmd_select(args) -> int:
    cfg = hx.load_config(args.config, _overrides(args))
    inst = hx.Source(cfg.instance).instance
    if not 0 <= args.k <= inst.n:
        raise ConfigError(f"--k: {args.k} outside [0, {inst.n}]")
    rows = []
    for method in cfg.methods if args.method else ("greedy",):
        if method == "greedy":
            res = greedy_select(inst, args.k)
        elif method == "brute_force":
            res = brute_force_optimum(inst, args.k, args.budget)
        elif method == "kdpp":
            res = kdpp_select(inst, args.k, cfg.seed)
        else:
            raise ConfigError(f"--method: {method} does not select a subset")
        opt = opt_k(inst.spectrum, args.k)
        rows.append({
            "method": method, "k": args.k, "indices": " ".join(map(str, res.indices)), "error": res.error,
            "opt_k": opt, "factor": res.error / opt if opt > 0 else None, "seed": res.seed,
        })
    with _output(args.out) as fh:
        hx.write_rows(rows, SELECT_COLUMNS, fh)
    return EXIT_OK


SAMPLE_COLUMNS = ["trial", "sampler", "size", "indices", "error"]


def cmd_sample(args) -> int:
    cfg = hx.load_config(args.config, _overrides(args))
    inst = hx.Source(cfg.instance).instance
    trials = args.trials or 1
    try:
        config = DppConfig.from_instance(inst, alpha=args.alpha, k=args.k)
    except MultidescentError as exc:
        raise ConfigError(str(exc)) from None
    rows = [
        {"trial": smp.trial, "sampler": smp.sampler_id, "size": len(smp.indices),
         "indices": " ".join(map(str, smp.indices)), "error": projection_error(inst, smp.indices)}
        for smp in sample_batch(config, trials, cfg.seed)
    ]
    with _output(args.out) as fh:
        hx.write_rows(rows, SAMPLE_COLUMNS, fh)
    return EXIT_OK


COMMANDS = {
    "bounds": cmd_bounds,
    "experiment": cmd_experiment,
    "gen": cmd_gen,
    "verify-lower": cmd_verify_lower,
    "select": cmd_select,
    "sample": cmd_sample,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except CertificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except MultidescentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BrokenPipeError:
        # reader closed early, e.g. piped into head
        sys.stdout = None
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
