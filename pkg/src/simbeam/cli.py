"""Command-line experiment runner.

Subcommands: ``simulate`` (single scenario), ``sweep`` (one axis),
``group-demo`` (grouping and antenna selection only), ``verify``
(re-aggregate an output directory), ``selftest`` (invariant battery).
Exit code 0 on success, 1 on a failed check, 2 on bad input.
"""

import argparse
import sys

import numpy as np

from . import __version__
from .baselines import random_assignment, random_grouping
from .channel import sample_scenario
from .config import ConfigError, load_config
from .harness import emit_outputs, run_experiment, verify_outputs
from .propagation import build_propagation
from .scheduler import coc_matrix, greedy_grouping, grouping_objective, select_antennas
from .selftest import run_selftest


def _add_common(sub, config_required=True):
    sub.add_argument("--config", required=config_required, help="scenario config file")
    sub.add_argument("--seed", type=int, default=None, help="override the master seed")
    sub.add_argument("--out", default=None, help="output directory")
    sub.add_argument("--threads", type=int, default=1, help="concurrent trials")


def _load(args, force_single=False):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if force_single:
        cfg.sweep_axis = "none"
        cfg.sweep_values = ()
    return cfg


def _run_and_emit(cfg, args):
    if args.out is None:
        raise ConfigError("out", "--out directory is required")
    result = run_experiment(cfg, threads=max(1, args.threads))
    paths = emit_outputs(result, args.out)
    with open(paths["summary"], "r", encoding="utf-8") as fh:
        print(fh.read())
    print(f"wrote {paths['raw']}, {paths['aggregate']}, {paths['summary']}")
    return 0


def _cmd_simulate(args):
    return _run_and_emit(_load(args, force_single=True), args)


def _cmd_sweep(args):
    cfg = _load(args)
    if cfg.sweep_axis == "none":
        raise ConfigError("sweep_axis", "sweep requires a sweep_axis in the config")
    return _run_and_emit(cfg, args)


def _cmd_group_demo(args):
    cfg = _load(args, force_single=True)
    geometry = cfg.geometry()
    prop = build_propagation(geometry)
    _, stats = sample_scenario(
        cfg.master_seed, cfg.total_users, geometry, **cfg.scenario_kwargs()
    )
    corr = coc_matrix(np.sqrt(stats.beta)[:, None] * stats.h_los)
    greedy = greedy_grouping(stats, cfg.users_per_group)
    randomized = random_grouping(cfg.total_users, cfg.users_per_group, cfg.master_seed)
    print(f"users: {cfg.total_users}, group capacity: {cfg.users_per_group}")
    print(f"greedy worst intra-group correlation: {grouping_objective(greedy.groups, corr):.6f}")
    print(f"random worst intra-group correlation: {grouping_objective(randomized.groups, corr):.6f}")
    for g, group in enumerate(greedy.groups):
        chosen = select_antennas(stats, prop, group, cfg.selection_draws, cfg.master_seed + g)
        control = random_assignment(group, cfg.num_antennas, cfg.master_seed + g)
        print(
            f"group {g}: users {group.tolist()} -> antennas {chosen.antennas.tolist()} "
            f"(leakage {chosen.total_leakage:.3e}, best of {chosen.num_draws} draws; "
            f"random control {control.antennas.tolist()})"
        )
    return 0


def _cmd_verify(args):
    if args.out is None:
        raise ConfigError("out", "--out directory is required")
    ok, message = verify_outputs(args.out)
    print(message)
    return 0 if ok else 1


def _cmd_selftest(args):
    report = run_selftest()
    failures = 0
    for name, ok, detail in report:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        failures += 0 if ok else 1
    print(f"{len(report) - failures}/{len(report)} checks passed")
    return 0 if failures == 0 else 1


def build_parser():
    parser = argparse.ArgumentParser(
        prog="simbeam",
        description="wave-domain beamforming simulator for metasurface satellites",
    )
    parser.add_argument("--version", action="version", version=f"simbeam {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="run the configured single scenario")
    _add_common(sim)
    sim.set_defaults(fn=_cmd_simulate)

    sweep = commands.add_parser("sweep", help="run the configured one-axis sweep")
    _add_common(sweep)
    sweep.set_defaults(fn=_cmd_sweep)

    demo = commands.add_parser(
        "group-demo", help="show grouping and antenna selection only"
    )
    _add_common(demo)
    demo.set_defaults(fn=_cmd_group_demo)

    verify = commands.add_parser("verify", help="re-aggregate and check an output dir")
    _add_common(verify, config_required=False)
    verify.set_defaults(fn=_cmd_verify)

    selftest = commands.add_parser("selftest", help="run the built-in invariant checks")
    _add_common(selftest, config_required=False)
    selftest.set_defaults(fn=_cmd_selftest)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
