"""Command-line entry points: run optimizations, evaluate configurations,
verify gradients against finite differences, and dump presets.

Exit codes: 0 ok, 1 config/usage error, 2 numerical failure,
3 gradient-tolerance failure (verify-grads).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .density import build_grid
from .errors import ConfigError, DegenerateGeometry, NonFiniteGradient
from .gradients import fd_check
from .optimizer import (
    _random_init,
    run_algorithm1,
    run_algorithm2,
    run_algorithm3,
    run_algorithm4,
)
from .partition import max_rss_partition
from .report import build_bundle, write_bundle
from .scenario import load_scenario, preset_case_study, dumps_scenario

ALGORITHMS = {1: run_algorithm1, 2: run_algorithm2, 3: run_algorithm3, 4: run_algorithm4}


def _add_scenario_args(p: argparse.ArgumentParser):
    p.add_argument("--scenario", help="scenario YAML file")
    p.add_argument("--preset", choices=["case-study"], help="built-in scenario")
    p.add_argument("--r", type=float, default=0.5, help="ground/UAV mixture weight (preset)")
    p.add_argument("--gue", choices=["uniform", "gmm"], default="gmm",
                   help="ground-user distribution (preset)")
    p.add_argument("--app", choices=["tune", "deploy"], default="tune",
                   help="application mode (preset)")
    p.add_argument("--seed", type=int, default=None, help="override optimizer seed")
    p.add_argument("--res-ground", type=float, default=None, help="ground grid step, m")
    p.add_argument("--res-corridor", type=float, default=None, help="corridor grid step, m")


def _load(args, kpi_mode=None):
    if args.scenario and args.preset:
        raise ConfigError("give either --scenario or --preset, not both")
    if args.scenario:
        sc = load_scenario(args.scenario)
        if kpi_mode is not None and sc.kpi_mode != kpi_mode:
            raise ConfigError(
                f"kpi_mode: scenario declares {sc.kpi_mode!r} but the requested "
                f"algorithm needs {kpi_mode!r}"
            )
    elif args.preset:
        sc = preset_case_study(
            r_mix=args.r, gue_kind=args.gue, application=args.app,
            kpi_mode=kpi_mode or "coverage_capacity",
        )
    else:
        raise ConfigError("one of --scenario or --preset is required")
    if args.seed is not None:
        sc.optimizer.seed = args.seed
    if args.res_ground is not None:
        sc.res_ground_m = args.res_ground
    if args.res_corridor is not None:
        sc.res_corridor_m = args.res_corridor
    sc.validate()
    return sc


def cmd_run(args) -> int:
    kpi_mode = "coverage_capacity" if args.algorithm in (1, 2) else "capacity_per_region"
    sc = _load(args, kpi_mode)
    if args.algorithm in (2, 4) and sc.application != "deploy":
        raise ConfigError(
            f"algorithm {args.algorithm} optimizes site placement and needs "
            "application: deploy"
        )
    grid = sc.build_grid()
    trace = ALGORITHMS[args.algorithm](sc, grid)
    bundle = build_bundle(sc, grid, trace.final_network, trace.final_partition, trace)
    files = write_bundle(bundle, args.out)
    print(f"objective: {trace.final_objective:.6f}  iterations: {trace.n_iters}  "
          f"converged: {trace.converged}")
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def cmd_eval(args) -> int:
    sc = _load(args)
    grid = sc.build_grid()
    network = sc.build_network()
    part = max_rss_partition(grid, network)
    bundle = build_bundle(sc, grid, network, part)
    files = write_bundle(bundle, args.out)
    print(f"objective: {bundle.summary['objective']:.6f}  "
          f"coverage: {bundle.summary['coverage_fraction']:.4f}")
    print(f"wrote {len(files)} files to {args.out}")
    return 0


def cmd_verify_grads(args) -> int:
    sc = _load(args)
    grid = sc.build_grid()
    network = sc.build_network()
    rng = np.random.default_rng(sc.optimizer.seed)
    _random_init(network, rng, sc.application == "deploy", sc.density.gue_region)
    part = max_rss_partition(grid, network)
    functional = "gamma1" if sc.kpi_mode == "coverage_capacity" else "gamma2"

    results = {}
    print(f"functional: {functional}  samples: {grid.n_samples}  sectors: {network.n}")
    print(f"{'h':>10} " + "".join(f"{fam:>14}" for fam in
                                  ("tilt", "power", "site_pos", "site_bearing")))
    for h in args.h:
        errs = fd_check(
            grid, part, network, sc.kpi, functional,
            h_tilt=h, h_power=h, h_pos=h, h_bearing=h,
        )
        for fam, e in errs.items():
            results.setdefault(fam, []).append(e)
        print(f"{h:>10g} " + "".join(
            f"{errs.get(fam, float('nan')):>14.3e}" for fam in
            ("tilt", "power", "site_pos", "site_bearing")
        ))

    worst = {fam: min(v) for fam, v in results.items()}
    failed = {fam: e for fam, e in worst.items() if e > args.tolerance}
    if failed:
        print(f"FAIL: families over tolerance {args.tolerance:g}: {failed}")
        return 3
    print(f"PASS: all families within {args.tolerance:g}")
    return 0


def cmd_preset_dump(args) -> int:
    sc = preset_case_study(r_mix=args.r, gue_kind=args.gue, application=args.app)
    if args.seed is not None:
        sc.optimizer.seed = args.seed
    text = dumps_scenario(sc)
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="celldeploy",
        description="Cell deployment optimization for ground and UAV-corridor users",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="optimize a scenario and write a report bundle")
    _add_scenario_args(p_run)
    p_run.add_argument("--algorithm", type=int, choices=[1, 2, 3, 4], required=True)
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(fn=cmd_run)

    p_eval = sub.add_parser("eval", help="evaluate a configuration as-is")
    _add_scenario_args(p_eval)
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(fn=cmd_eval)

    p_ver = sub.add_parser("verify-grads", help="check analytic gradients against FD")
    _add_scenario_args(p_ver)
    p_ver.add_argument("--h", type=float, nargs="+", default=[1e-3],
                       help="central-difference step(s); several give a sweep table")
    p_ver.add_argument("--tolerance", type=float, default=1e-4)
    p_ver.set_defaults(fn=cmd_verify_grads)

    p_dump = sub.add_parser("preset-dump", help="write the case-study preset as YAML")
    p_dump.add_argument("--r", type=float, default=0.5)
    p_dump.add_argument("--gue", choices=["uniform", "gmm"], default="gmm")
    p_dump.add_argument("--app", choices=["tune", "deploy"], default="tune")
    p_dump.add_argument("--seed", type=int, default=None)
    p_dump.add_argument("--out", default=None)
    p_dump.set_defaults(fn=cmd_preset_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except (DegenerateGeometry, NonFiniteGradient, FloatingPointError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
