"""Command-line entry point: simulate-data, run, grid, identify.

Flags override values from an optional JSON config file whose keys mirror
RunConfig fields. Exit codes: 0 success, 2 configuration error, 3 sampler
degeneracy; failures also leave a machine-readable error.json when an
output directory is known.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import ConfigError, WeightDegeneracyError
from .harness import RunConfig, ScenarioGrid, identify, run, run_grid, simulate_to_dir

_CONFIG_FIELDS = (
    "model",
    "method",
    "n",
    "p",
    "sigma",
    "draws",
    "chains",
    "burnin",
    "seed",
    "out_dir",
    "true_params",
)

_DEFAULTS = {
    "model": "sat",
    "method": "istp",
    "n": 3000,
    "p": 3,
    "sigma": 0.5,
    "draws": 45000,
    "chains": 3,
    "burnin": 2000,
    "seed": 0,
    "out_dir": None,
    "true_params": None,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    parser.add_argument("--model", choices=["sat", "count"])
    parser.add_argument("--method", choices=["gibbs", "istp", "pseudo-mcmc", "pseudo-is"])
    parser.add_argument("--n", type=int)
    parser.add_argument("--p", type=int)
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--draws", type=int)
    parser.add_argument("--chains", type=int)
    parser.add_argument("--burnin", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir", dest="out_dir")
    parser.add_argument("--true-params", dest="true_params")


def _build_config(args: argparse.Namespace, **forced) -> RunConfig:
    values = dict(_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_values = json.load(fh)
        unknown = set(file_values) - set(_CONFIG_FIELDS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)
    for name in _CONFIG_FIELDS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    values.update(forced)
    return RunConfig(**values)


def _cmd_simulate(args) -> int:
    config = _build_config(args)
    path = simulate_to_dir(config)
    print(f"wrote {path}")
    return 0


def _cmd_run(args) -> int:
    config = _build_config(args)
    report = run(config).report
    ess = report.importance_ess if report.importance_ess is not None else report.ess_target
    print(
        f"{config.model}/{config.method}: ess_target={report.ess_target:.1f} "
        f"ess={ess:.1f} time={report.wall_time_sec:.2f}s"
        + (f" -> {config.out_dir}" if config.out_dir else "")
    )
    if report.weight_degenerate:
        print("warning: importance weights are degenerate (ESS < 10)", file=sys.stderr)
    return 0


def _cmd_grid(args) -> int:
    base = _build_config(args)
    levels = _parse_levels(args.levels, args.axis)
    frame = run_grid(ScenarioGrid(axis=args.axis, levels=levels, base=base))
    print(frame.to_string(index=False))
    return 0


def _cmd_identify(args) -> int:
    config = _build_config(args, model="count", method="pseudo-is")
    report = identify(
        config,
        analytic=args.analytic,
        mu_max=args.mu_max,
        grid_points=args.grid_points,
    )
    roots = report["roots"]
    print(f"c_hat={report['c_hat']} roots={roots} n_grid_invalid={report['n_grid_invalid']}")
    return 0


def _parse_levels(raw: str, axis: str) -> tuple:
    cast = float if axis == "sigma" else int
    try:
        return tuple(cast(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse levels {raw!r}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="partialmc",
        description="Monte Carlo inference for partially identified Bayesian models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate-data", help="simulate a dataset and write it as CSV")
    _add_common(sim)
    sim.set_defaults(func=_cmd_simulate)

    runner = sub.add_parser("run", help="run one method on one dataset")
    _add_common(runner)
    runner.set_defaults(func=_cmd_run)

    grid = sub.add_parser("grid", help="run a scenario grid along one axis")
    _add_common(grid)
    grid.add_argument("--axis", required=True, choices=["n", "p", "sigma"])
    grid.add_argument("--levels", required=True, help="comma-separated level values")
    grid.set_defaults(func=_cmd_grid)

    ident = sub.add_parser("identify", help="count-model identification root check")
    _add_common(ident)
    ident.add_argument("--analytic", action="store_true", help="use population cell masses")
    ident.add_argument("--mu-max", dest="mu_max", type=float)
    ident.add_argument("--grid-points", dest="grid_points", type=int, default=4096)
    ident.set_defaults(func=_cmd_identify)
    return parser


def _write_error(args, exc: Exception) -> None:
    out_dir = getattr(args, "out_dir", None)
    if not out_dir:
        return
    try:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "error.json"), "w") as fh:
            json.dump({"error": type(exc).__name__, "message": str(exc)}, fh, indent=2)
            fh.write("\n")
    except OSError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        _write_error(args, exc)
        return 2
    except WeightDegeneracyError as exc:
        print(f"sampler degeneracy: {exc}", file=sys.stderr)
        _write_error(args, exc)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
