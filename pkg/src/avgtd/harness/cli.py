"""Command-line entry point: ``avgtd {solve,condition,run,sweep,validate}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from ..chain import analyze, chain_from_dict, validate_chain
from ..errors import ParameterError
from ..geometry import FeatureMap, spectral_report
from ..sampling import seed_split, stream_rng
from ..solvers import build_problem
from .config import load_config
from .environments import generate_environment
from .experiment import PROBLEM_STREAM, build_experiment_problem, run_experiment

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _read_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _load_problem(path: str):
    """An MDP interchange file (optionally carrying ``phi``) or an experiment config."""
    doc = _read_json(path)
    if "environment" in doc:
        prob = build_experiment_problem(load_config(path))
        return prob.problem, prob.report
    chain = chain_from_dict(doc)
    report = validate_chain(chain)
    if not report.passed:
        raise ParameterError(f"chain is not ergodic:\n{report}")
    features = FeatureMap(doc["phi"]) if "phi" in doc else FeatureMap.tabular(chain.n)
    analysis = analyze(chain)
    return build_problem(chain, features, analysis), spectral_report(features, chain, analysis)


def _load_chain(path: str):
    doc = _read_json(path)
    if "environment" in doc:
        cfg = load_config(path)
        env_seed, _ = seed_split(cfg.problem_seed, PROBLEM_STREAM)
        return generate_environment(cfg.environment, cfg.epsilon, stream_rng(env_seed))
    return chain_from_dict(doc)


def _vec(x) -> str:
    return np.array2string(np.asarray(x), precision=10, separator=", ", max_line_width=120)


def cmd_solve(args) -> int:
    problem, _ = _load_problem(args.config)
    print(f"g = {problem.analysis.g!r}")
    print(f"theta_star = {_vec(problem.theta_star)}")
    print(f"w_star = {_vec(problem.analysis.w_star)}")
    return EXIT_OK


def cmd_condition(args) -> int:
    _, report = _load_problem(args.config)
    for name in ("eta1", "eta2", "eta3", "eta_prime", "omega"):
        value = getattr(report, name)
        print(f"{name} = {'n/a (d < 2)' if value is None else repr(value)}")
    return EXIT_OK


def cmd_validate(args) -> int:
    report = validate_chain(_load_chain(args.config))
    print(report)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _run(args, sweep: bool) -> int:
    seeds = None
    if args.seeds:
        try:
            seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        except ValueError as exc:
            raise ParameterError(f"bad --seeds value {args.seeds!r}") from exc
    cfg = load_config(args.config, sweep=sweep, seeds=seeds)
    out = args.out or cfg.out or str(Path("runs") / Path(args.config).stem)
    result = run_experiment(cfg, out)
    if not args.quiet:
        print(f"wrote {len(result.runs)} runs to {out}")
        for run in result.runs:
            if run.failure:
                print(f"FAILED {run.algorithm} seed {run.seed}: {run.failure}")
            else:
                e = run.rows[-1]
                print(f"{run.algorithm:>32s} seed {run.seed:<6d} t={int(run.log_t[-1]):<8d} "
                      f"err_param={e[0]:.4g} err_value={e[1]:.4g} err_mod_const={e[2]:.4g}")
    return EXIT_RUNTIME if result.failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="avgtd", description="Average-reward TD policy evaluation experiments.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    helps = {
        "solve": "print theta*, W* and g for a problem file",
        "condition": "print eta1, eta2, eta3, eta', omega for a problem file",
        "run": "run an experiment config",
        "sweep": "run the algorithm x schedule product of a sweep config",
        "validate": "check a chain for stochasticity, irreducibility, aperiodicity",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="MDP file or experiment config (JSON)")
        p.add_argument("--out", help="output directory (run/sweep)")
        p.add_argument("--seeds", help="comma-separated seeds overriding the config")
        p.add_argument("--quiet", action="store_true")
    return parser


COMMANDS = {"solve": cmd_solve, "condition": cmd_condition, "validate": cmd_validate,
            "run": lambda a: _run(a, sweep=False), "sweep": lambda a: _run(a, sweep=True)}


def cli_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_VALIDATION
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ParameterError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime failure
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    main()
