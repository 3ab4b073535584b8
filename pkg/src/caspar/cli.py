"""Command-line front end: simulate, encode, fit, cv, diagnose, experiment.

Every subcommand takes ``--out PREFIX`` and writes its outputs plus a
``<prefix>.config.json`` with the fully resolved configuration, so any run
can be replayed exactly. Outputs are plain text (CSV tables, one JSON
document per fit) and deterministic given the resolved config.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from .exceptions import (
    AllPointsFailed,
    AllPositionsConstant,
    BadFoldCount,
    ConstantColumn,
    DuplicateId,
    EmptyPanel,
    FoldFailure,
    InfeasiblePlacement,
    InvalidGraph,
    LengthMismatch,
    NoConvergence,
    ParseError,
    SingularSupport,
    UsageError,
    ZeroTruth,
)
from .ingest import (
    encode_panel,
    load_panel,
    read_design,
    read_design_sidecar,
    write_design,
    write_design_sidecar,
)
from .linalg import standardize as standardize_dataset
from .simulation import (
    ExperimentConfig,
    SimConfig,
    run_experiment,
    simulate_instance,
    theory_diagnostics,
    write_results,
)
from .solvers import CasparParams, StepwiseParams, caspar_fit, lasso_fit, stepwise_fit
from .structure import (
    KERNEL_FAMILIES,
    KernelSpec,
    PredictorStructure,
    load_graph_structure,
    load_positions,
)
from .tuning import caspar_grid, grid_search, lasso_grid, make_folds, stepwise_grid

_DATA_ERRORS = (
    ParseError,
    DuplicateId,
    LengthMismatch,
    EmptyPanel,
    AllPositionsConstant,
    InvalidGraph,
    BadFoldCount,
    ZeroTruth,
    InfeasiblePlacement,
    ConstantColumn,
    OSError,
    ValueError,
)
_NUMERICAL_ERRORS = (SingularSupport, NoConvergence, AllPointsFailed, FoldFailure)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(kind: str, exc: Exception) -> None:
    record = {"error": type(exc).__name__, "kind": kind, "message": str(exc)}
    print(json.dumps(record, sort_keys=True), file=sys.stderr)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _write_config(args, prefix: str) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    for key, value in list(resolved.items()):
        if isinstance(value, tuple):
            resolved[key] = list(value)
    with open(f"{prefix}.config.json", "w") as handle:
        json.dump(resolved, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _require_file(path: str) -> str:
    if not os.path.exists(path):
        raise OSError(f"input file not found: {path}")
    return path


def _load_structure(args, n_columns: int) -> PredictorStructure:
    given = [
        name
        for name, flag in (
            ("--positions", args.positions),
            ("--meta", args.meta),
            ("--graph-edges", args.graph_edges),
        )
        if flag
    ]
    if len(given) != 1:
        raise UsageError(
            "the clustered method needs exactly one structure source: "
            "--positions, --meta, or --graph-edges with --graph-map"
        )
    if args.positions:
        positions = load_positions(_require_file(args.positions))
    elif args.meta:
        doc = read_design_sidecar(_require_file(args.meta))
        positions = np.asarray(doc["positions"], dtype=int)
    else:
        if not args.graph_map:
            raise UsageError("--graph-edges requires --graph-map")
        return load_graph_structure(_require_file(args.graph_edges), _require_file(args.graph_map))
    if positions.shape[0] != n_columns:
        raise LengthMismatch(
            f"structure covers {positions.shape[0]} predictors, design has {n_columns}"
        )
    return PredictorStructure.from_positions(positions)


def _sparse_coeffs(values: np.ndarray) -> dict:
    support = np.flatnonzero(values)
    return {
        "support": [int(j) for j in support],
        "values": [repr(float(values[j])) for j in support],
    }


def cmd_simulate(args) -> int:
    config = SimConfig(
        n=args.n,
        p=args.p,
        n_groups=args.groups,
        group_size=args.group_size,
        peak=args.peak,
        flank=args.flank,
        noise_sd=args.noise_sd,
        seed=args.seed,
    )
    instance = simulate_instance(config)
    write_design(f"{args.out}.design.csv", instance.dataset)
    meta = {
        "positions": list(range(args.p)),
        "beta_true": [repr(float(v)) for v in instance.beta_true.values],
        "group_starts": list(instance.group_starts),
        "seed": instance.seed,
    }
    with open(f"{args.out}.meta.json", "w") as handle:
        json.dump(meta, handle, indent=2, sort_keys=True)
        handle.write("\n")
    _write_config(args, args.out)
    return 0


def cmd_encode(args) -> int:
    panel, phenotype = load_panel(
        _require_file(args.sequences), _require_file(args.phenotypes), drug=args.drug
    )
    dataset, columns, _structure = encode_panel(panel, phenotype, transform=args.transform)
    names = [f"p{c.position}{c.residue}" for c in columns]
    write_design(f"{args.out}.design.csv", dataset, column_names=names)
    write_design_sidecar(
        f"{args.out}.meta.json",
        columns,
        extra={"transform": args.transform, "n_rows": dataset.n, "drug": args.drug},
    )
    _write_config(args, args.out)
    return 0


def cmd_fit(args) -> int:
    dataset, _names = read_design(_require_file(args.design))
    standardize = not args.no_standardize
    document = {"method": args.method, "standardize": standardize}
    if args.method == "lasso":
        if args.lam is None:
            raise UsageError("--lam is required for the lasso method")
        beta = lasso_fit(
            dataset, args.lam, args.tol, args.max_iters, standardize=standardize
        )
        document["params"] = {"lam": args.lam, "tol": args.tol, "max_iters": args.max_iters}
        document["final"] = _sparse_coeffs(beta.values)
    else:
        if args.epsilon is None:
            raise UsageError("--epsilon is required for stepwise and caspar methods")
        if args.method == "caspar":
            structure = _load_structure(args, dataset.p)
            kernel = KernelSpec(args.kernel, args.bandwidth, args.alpha)
            params = CasparParams(args.epsilon, kernel, structure, args.max_steps)
            path = caspar_fit(dataset, params, standardize=standardize)
            document["params"] = {
                "epsilon": args.epsilon,
                "kernel": args.kernel,
                "bandwidth": args.bandwidth,
                "alpha": args.alpha,
                "max_steps": args.max_steps,
            }
        else:
            params = StepwiseParams(args.epsilon, args.max_steps)
            path = stepwise_fit(dataset, params, standardize=standardize)
            document["params"] = {"epsilon": args.epsilon, "max_steps": args.max_steps}
        document.update(
            selected=[int(j) for j in path.selected],
            stop_reason=path.stop_reason,
            n_steps=path.n_steps,
            per_step=[
                {
                    "index": int(path.selected[k]),
                    "correlation": repr(path.chosen_correlations[k]),
                    "weight": repr(path.chosen_weights[k]),
                    **_sparse_coeffs(path.coefficients_per_step[k].values),
                }
                for k in range(path.n_steps)
            ],
            skipped=[[int(s), int(j), repr(c)] for s, j, c in path.skipped],
            final=_sparse_coeffs(path.final.values),
            column_means=[repr(float(v)) for v in path.column_means],
            column_scales=[repr(float(v)) for v in path.column_scales],
        )
    with open(f"{args.out}.fit.json", "w") as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write("\n")
    _write_config(args, args.out)
    return 0


def cmd_cv(args) -> int:
    dataset, _names = read_design(_require_file(args.design))
    standardize = not args.no_standardize
    plan = make_folds(dataset.n, args.folds, args.seed)
    if args.method == "stepwise":
        grid = stepwise_grid(
            dataset,
            n_epsilons=args.eps_count,
            eps_ratio=args.eps_ratio,
            max_steps=args.max_steps,
            standardize=standardize,
        )
        header = ["eps"]
        cells = [[repr(pt.epsilon)] for pt in grid]
    elif args.method == "caspar":
        structure = _load_structure(args, dataset.p)
        grid = caspar_grid(
            dataset,
            structure,
            kernel_family=args.kernel,
            alphas=args.alphas,
            bandwidths=args.bandwidths,
            n_epsilons=args.eps_count,
            eps_ratio=args.eps_ratio,
            max_steps=args.max_steps,
            standardize=standardize,
        )
        header = ["eps", "h", "alpha"]
        cells = [
            [repr(pt.epsilon), repr(pt.kernel.bandwidth), repr(pt.kernel.alpha)] for pt in grid
        ]
    else:
        grid = lasso_grid(
            dataset,
            n_lambdas=args.lambda_count,
            lambda_ratio=args.lambda_ratio,
            standardize=standardize,
        )
        header = ["lambda"]
        cells = [[repr(pt.lam)] for pt in grid]
    result = grid_search(
        dataset, args.method, grid, plan, standardize=standardize, n_threads=args.threads
    )
    fold_names = [f"fold_{k}" for k in range(plan.n_folds)]
    with open(f"{args.out}.cv.csv", "w") as handle:
        handle.write(",".join(["method", *header, *fold_names, "mean", "chosen"]) + "\n")
        for i, point_cells in enumerate(cells):
            fold_cells = [repr(float(v)) for v in result.fold_errors[i]]
            mean = repr(float(result.mean_errors[i]))
            chosen = "1" if i == result.best_index else "0"
            handle.write(
                ",".join([args.method, *point_cells, *fold_cells, mean, chosen]) + "\n"
            )
    _write_config(args, args.out)
    return 0


def cmd_diagnose(args) -> int:
    dataset, _names = read_design(_require_file(args.design))
    if args.support:
        support = list(_int_list(args.support))
    elif args.meta:
        doc = read_design_sidecar(_require_file(args.meta))
        beta_true = np.array([float(v) for v in doc["beta_true"]])
        support = [int(j) for j in np.flatnonzero(beta_true)]
    else:
        raise UsageError("diagnose needs --support or --meta")
    ds = standardize_dataset(dataset) if not args.no_standardize else dataset
    mu, rho = theory_diagnostics(ds, support)
    document = {"support": support, "mu": mu, "rho": rho}
    with open(f"{args.out}.diagnostics.json", "w") as handle:
        json.dump(document, handle, indent=2, sort_keys=True)
        handle.write("\n")
    print(f"mu={mu!r} rho={rho!r}")
    _write_config(args, args.out)
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig(
        ns=args.ns,
        replicates=args.replicates,
        methods=args.methods,
        p=args.p,
        n_groups=args.groups,
        group_size=args.group_size,
        peak=args.peak,
        flank=args.flank,
        noise_sd=args.noise_sd,
        seed=args.seed,
        n_folds=args.folds,
        kernel_family=args.kernel,
        alphas=args.alphas,
        bandwidths=args.bandwidths,
        n_epsilons=args.eps_count,
        eps_ratio=args.eps_ratio,
        n_lambdas=args.lambda_count,
        lambda_ratio=args.lambda_ratio,
        standardize=not args.no_standardize,
    )
    rows = run_experiment(config, n_threads=args.threads)
    write_results(rows, f"{args.out}.results.csv")
    _write_config(args, args.out)
    return 0


def _add_structure_flags(sub) -> None:
    sub.add_argument("--positions", help="text file with one integer position per predictor")
    sub.add_argument("--meta", help="design sidecar JSON carrying predictor positions")
    sub.add_argument("--graph-edges", help="edge list file: 'u v weight' per line")
    sub.add_argument("--graph-map", help="predictor-to-node map file: one node per line")


def _add_grid_flags(sub) -> None:
    sub.add_argument("--alphas", type=_float_list, default=tuple(round(0.1 * i, 1) for i in range(11)))
    sub.add_argument("--bandwidths", type=_float_list, default=(1.0, 2.0, 3.0, 4.0))
    sub.add_argument("--eps-count", type=int, default=20)
    sub.add_argument("--eps-ratio", type=float, default=0.05)
    sub.add_argument("--lambda-count", type=int, default=20)
    sub.add_argument("--lambda-ratio", type=float, default=0.01)
    sub.add_argument("--kernel", choices=sorted(KERNEL_FAMILIES), default="boxcar")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="caspar", description=__doc__)
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)

    sim = commands.add_parser("simulate", help="generate a synthetic design + response")
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--p", type=int, default=250)
    sim.add_argument("--groups", type=int, default=7)
    sim.add_argument("--group-size", type=int, default=5)
    sim.add_argument("--peak", type=float, default=6.0)
    sim.add_argument("--flank", type=float, default=3.0)
    sim.add_argument("--noise-sd", type=float, default=1.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    enc = commands.add_parser("encode", help="encode sequences + phenotypes into a design")
    enc.add_argument("--sequences", required=True)
    enc.add_argument("--phenotypes", required=True)
    enc.add_argument("--drug", default=None)
    enc.add_argument("--transform", choices=("log10", "none"), default="log10")
    enc.add_argument("--out", required=True)
    enc.set_defaults(func=cmd_encode)

    fit = commands.add_parser("fit", help="fit one model at fixed parameters")
    fit.add_argument("--design", required=True)
    fit.add_argument("--method", choices=("stepwise", "caspar", "lasso"), required=True)
    fit.add_argument("--epsilon", type=float, default=None)
    fit.add_argument("--kernel", choices=sorted(KERNEL_FAMILIES), default="boxcar")
    fit.add_argument("--bandwidth", type=float, default=2.0)
    fit.add_argument("--alpha", type=float, default=0.5)
    fit.add_argument("--lam", type=float, default=None)
    fit.add_argument("--tol", type=float, default=1e-10)
    fit.add_argument("--max-iters", type=int, default=2000)
    fit.add_argument("--max-steps", type=int, default=None)
    fit.add_argument("--no-standardize", action="store_true")
    _add_structure_flags(fit)
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=cmd_fit)

    cv = commands.add_parser("cv", help="cross-validated grid search for one method")
    cv.add_argument("--design", required=True)
    cv.add_argument("--method", choices=("stepwise", "caspar", "lasso"), required=True)
    cv.add_argument("--folds", type=int, default=10)
    cv.add_argument("--seed", type=int, default=0)
    cv.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    cv.add_argument("--max-steps", type=int, default=None)
    cv.add_argument("--no-standardize", action="store_true")
    _add_grid_flags(cv)
    _add_structure_flags(cv)
    cv.add_argument("--out", required=True)
    cv.set_defaults(func=cmd_cv)

    diag = commands.add_parser("diagnose", help="incoherence / restricted-eigenvalue diagnostics")
    diag.add_argument("--design", required=True)
    diag.add_argument("--support", default=None, help="comma-separated column indices")
    diag.add_argument("--meta", default=None, help="simulate sidecar carrying beta_true")
    diag.add_argument("--no-standardize", action="store_true")
    diag.add_argument("--out", required=True)
    diag.set_defaults(func=cmd_diagnose)

    exp = commands.add_parser("experiment", help="tuned method comparison over an n grid")
    exp.add_argument("--ns", type=_int_list, default=(50, 75, 100, 125, 150))
    exp.add_argument("--replicates", type=int, default=20)
    exp.add_argument("--methods", type=_str_list, default=("stepwise", "caspar", "lasso"))
    exp.add_argument("--p", type=int, default=250)
    exp.add_argument("--groups", type=int, default=7)
    exp.add_argument("--group-size", type=int, default=5)
    exp.add_argument("--peak", type=float, default=6.0)
    exp.add_argument("--flank", type=float, default=3.0)
    exp.add_argument("--noise-sd", type=float, default=1.0)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--folds", type=int, default=10)
    exp.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    exp.add_argument("--no-standardize", action="store_true")
    _add_grid_flags(exp)
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError("a subcommand is required (see --help)")
        return args.func(args)
    except UsageError as exc:
        _emit_error("usage", exc)
        return 1
    except _NUMERICAL_ERRORS as exc:
        _emit_error("numerical", exc)
        return 3
    except _DATA_ERRORS as exc:
        _emit_error("data", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
