#!/usr/bin/env python3

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

import numpy as np

import softgrad_cli
from softgrad import env, json
from softgrad.agent import evaluate, load_checkpoint, run_training
from softgrad.environments import ENVIRONMENTS, make_env
from softgrad.exceptions import (
    ConfigurationError,
    PreconditionError,
    ProtocolError,
    SoftgradException,
    StructuralError,
)
from softgrad.logging import get_logger, set_level
from softgrad_cli.config import build_config
from softgrad_cli.plot import plot_runs
from softgrad_cli.run import (
    create_run_dir,
    default_run_name,
    finish_manifest,
    new_manifest,
    output_root,
    write_config,
    write_manifest,
)
from softgrad_cli.verify import run_suite, suite_names

logger = get_logger(__name__)
logger.propagate = False

SERVICE_NAME = "Softgrad"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

# errors caused by what the user has given
_INPUT_ERRORS = (ConfigurationError, PreconditionError, StructuralError, ProtocolError, env.SoftgradEnvException)


def cmd_train(args: argparse.Namespace) -> int:
    config = build_config(args.config, args.overrides, args.seed, args.env)

    run_dir = create_run_dir(output_root(), args.run_name or default_run_name(config))
    manifest = new_manifest(config, run_dir)
    write_config(config, run_dir)
    write_manifest(manifest)

    logger.info(f"Training on {config.env} for {config.total_env_steps} steps, writing to {run_dir}.")
    run_training(make_env(config.env, config.seed), config, run_dir)
    finish_manifest(manifest)

    print(run_dir)
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    agent = load_checkpoint(args.checkpoint)
    rng = np.random.default_rng(args.seed) if args.stochastic else None

    mean, std, returns = evaluate(agent.policy, make_env(args.env, args.seed), args.episodes, rng)

    print(
        json.dumps(
            {
                "env": args.env,
                "episodes": args.episodes,
                "stochastic": args.stochastic,
                "mean_return": mean,
                "std_return": std,
                "returns": returns,
            }
        )
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_suite(args.suite, args.seed)

    for res in results:
        print(res.line())

    failed = [res.name for res in results if not res.passed]

    if failed:
        logger.error(f"{len(failed)} of {len(results)} check(s) failed.")
        return EXIT_FAILURE

    logger.info(f"All {len(results)} check(s) passed.")
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    output = args.output or os.path.join(output_root(), "learning_curve")
    for path in plot_runs(args.run_dirs, output):
        print(path)
    return EXIT_OK


def parser() -> argparse.ArgumentParser:
    res = argparse.ArgumentParser(prog="softgrad", description=SERVICE_NAME)
    res.add_argument("--version", action="version", version=softgrad_cli.version())

    res.add_argument(
        "-d",
        "--debug",
        help="Set logging level to debug.",
        action="store_const",
        const=logging.DEBUG,
        default=logging.DEBUG if env.get_bool("SOFTGRAD_DEBUG") else logging.INFO,
    )

    sub = res.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="Train an agent, outputs go to a new run directory.")
    train.add_argument("--config", "-c", help="Config file with 'key = value' lines.")
    train.add_argument("--seed", type=int)
    train.add_argument("--env", choices=sorted(ENVIRONMENTS))
    train.add_argument("--run-name", help="Name of the run directory (defaults to <env>_seed<seed>).")
    train.add_argument("overrides", nargs="*", metavar="key=value", help="Overrides of config values.")
    train.set_defaults(func=cmd_train)

    evaluation = sub.add_parser("eval", help="Evaluate a checkpoint.")
    evaluation.add_argument("--checkpoint", required=True)
    evaluation.add_argument("--env", required=True, choices=sorted(ENVIRONMENTS))
    evaluation.add_argument("--episodes", type=int, default=10)
    evaluation.add_argument("--seed", type=int, default=0)
    evaluation.add_argument(
        "--stochastic", action="store_true", default=False, help="Sample actions instead of using the policy mean."
    )
    evaluation.set_defaults(func=cmd_eval)

    verify = sub.add_parser("verify", help="Run an invariant suite.")
    verify.add_argument("suite", choices=suite_names())
    verify.add_argument("--seed", type=int, default=0)
    verify.set_defaults(func=cmd_verify)

    plot = sub.add_parser("plot", help="Average evaluation curves of runs.")
    plot.add_argument("run_dirs", nargs="+", metavar="DIR")
    plot.add_argument("--output", "-o", help="Output path without extension.")
    plot.set_defaults(func=cmd_plot)

    return res


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parser().parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    set_level(args.debug)
    logger.setLevel(args.debug)

    try:
        return args.func(args)
    except _INPUT_ERRORS as e:
        logger.error(str(e))
        return EXIT_USAGE
    except SoftgradException as e:
        logger.error(str(e))
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
