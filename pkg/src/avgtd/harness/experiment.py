"""Seeded multi-run experiments: problem assembly, learner runs, error metrics, CSV output."""
from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..chain import analyze, validate_chain
from ..errors import AvgTDError, ParameterError, StructuralError
from ..geometry import FeatureMap, SpectralReport, spectral_report
from ..sampling import TrajectorySampler, seed_split, stream_rng
from ..solvers import EvalProblem, build_problem, projected_bellman_residual
from ..td import RunTrace, run_baseline, run_double_chain, run_mean_field, run_single_chain
from .config import AlgorithmSpec, ExperimentConfig
from .environments import DESCRIPTIONS, generate_environment, generate_features

log = logging.getLogger(__name__)

CSV_HEADER = ("t", "seed", "algorithm", "err_param", "err_value", "err_mod_const", "reward_err")
METRICS = CSV_HEADER[3:]
AGG_HEADER = ("t", "algorithm", "n_seeds") + tuple(f"{m}_{s}" for m in METRICS for s in ("mean", "std"))

# run_index values fed to seed_split; trajectories and problem draws never share a stream
TRAJECTORY_STREAM = 0
PROBLEM_STREAM = 1


def log_grid(T: int, points: int = 200) -> np.ndarray:
    """``0`` plus roughly ``points`` geometrically spaced update counts in ``[1, T]``.

    Powers of ten up to ``T`` are always included so checkpoints line up across runs.
    """
    geo = np.round(np.geomspace(1, T, points)).astype(np.int64)
    decades = 10 ** np.arange(int(np.log10(T)) + 1, dtype=np.int64)
    return np.unique(np.concatenate([[0], geo, decades, [T]]))


@dataclass
class Problem:
    problem: EvalProblem
    report: SpectralReport
    description: str

    @property
    def chain(self):
        return self.problem.chain


@dataclass
class RunResult:
    algorithm: str
    seed: int
    rows: np.ndarray            # (K, 4): err_param, err_value, err_mod_const, reward_err (nan if n/a)
    log_t: np.ndarray
    trace: RunTrace
    failure: str | None = None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    problem: Problem
    runs: list[RunResult] = field(default_factory=list)
    out_dir: Path | None = None

    @property
    def failures(self) -> list[RunResult]:
        return [r for r in self.runs if r.failure is not None]

    def run(self, algorithm: str, seed: int) -> RunResult:
        for r in self.runs:
            if r.algorithm == algorithm and r.seed == seed:
                return r
        raise KeyError((algorithm, seed))


def build_experiment_problem(cfg: ExperimentConfig) -> Problem:
    env_seed, feat_seed = seed_split(cfg.problem_seed, PROBLEM_STREAM)
    chain = generate_environment(cfg.environment, cfg.epsilon, stream_rng(env_seed))
    report = validate_chain(chain)
    if not report.passed:
        raise ParameterError(f"environment is not ergodic:\n{report}")
    analysis = analyze(chain)
    fs = cfg.features
    if fs.kind == "tabular":
        features = FeatureMap.tabular(chain.n)
    else:
        if fs.d > chain.n:
            raise ParameterError(f"feature dimension d={fs.d} exceeds state count n={chain.n}")
        features = generate_features(chain, analysis, fs.d, fs.bernoulli_p, stream_rng(feat_seed),
                                     fs.include_e_and_wstar)
    problem = build_problem(chain, features, analysis)
    spectral = spectral_report(features, chain, analysis)
    if spectral.eta1 < 0.5 * spectral.eta3 - 1e-12:
        raise StructuralError(f"eta1={spectral.eta1} < eta3/2={spectral.eta3 / 2}")
    if not spectral.omega < 1.0:
        raise StructuralError(f"contraction factor {spectral.omega} is not < 1")
    desc = DESCRIPTIONS[cfg.environment.kind]
    if cfg.epsilon is not None:
        desc += f"; ergodicity patch epsilon={cfg.epsilon:g}"
    return Problem(problem, spectral, desc)


def error_metrics(problem: EvalProblem, thetas: np.ndarray) -> np.ndarray:
    """Columns: ``||theta - theta*||``, ``||Phi theta - W*||``, distance to ``{W* + c e}``."""
    # a diverging run can log finite iterates whose norms overflow; report those as inf
    with np.errstate(over="ignore", invalid="ignore"):
        diff = thetas @ problem.phi.T - problem.analysis.w_star
        centered = diff - diff.mean(axis=1, keepdims=True)
        return np.column_stack([
            np.linalg.norm(thetas - problem.theta_star, axis=1),
            np.linalg.norm(diff, axis=1),
            np.linalg.norm(centered, axis=1),
        ])


def _initial_theta(cfg: ExperimentConfig, problem: EvalProblem) -> np.ndarray:
    if cfg.theta0 == "zero":
        return np.zeros(problem.features.d)
    if cfg.theta0 == "theta_star":
        return problem.theta_star.copy()
    theta0 = np.asarray(cfg.theta0, dtype=float)
    if theta0.shape != (problem.features.d,):
        raise ParameterError(f"theta0 has length {theta0.size}, expected {problem.features.d}")
    return theta0


def run_single(cfg: ExperimentConfig, prob: Problem, algo: AlgorithmSpec, seed: int) -> RunResult:
    """One (algorithm, seed) job."""
    problem = prob.problem
    log_t = log_grid(cfg.T, cfg.log_points)
    theta0 = _initial_theta(cfg, problem)
    if cfg.sampling == "mean_field":
        trace = run_mean_field(problem, algo.schedule, cfg.T, log_t, theta0)
    else:
        if cfg.sampling == "iid":
            mode = "iid"
        else:
            mode = "markov_double" if algo.name == "double_chain" else "markov_single"
        sampler = TrajectorySampler(problem.chain, mode, seed, TRAJECTORY_STREAM,
                                    mu=problem.analysis.mu, start_state=cfg.start_state)
        transitions = sampler.sample(cfg.T)
        if algo.name == "double_chain":
            trace = run_double_chain(problem, transitions, algo.schedule, log_t, theta0)
        elif algo.name == "single_chain":
            trace = run_single_chain(problem, transitions, algo.schedule, log_t,
                                     prob.report.R_theta, prob.report.R_w, theta0)
        else:
            trace = run_baseline(problem, transitions, algo.schedule, log_t, theta0)
    errs = error_metrics(problem, trace.theta)
    if trace.reward_est is None:
        reward = np.full(len(trace.log_t), np.nan)
    else:
        reward = np.abs(trace.reward_est[: len(trace.log_t)] - problem.analysis.g)
    rows = np.column_stack([errs, reward])
    failure = None
    if trace.failed_at is not None:
        failure = f"non-finite iterate after {trace.failed_at} updates"
    return RunResult(algo.label, seed, rows, trace.log_t, trace, failure)


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def _safe(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.@+=-]+", "_", label)


def run_csv_name(algorithm: str, seed: int) -> str:
    return f"{_safe(algorithm)}__seed{seed}.csv"


def write_run_csv(path: Path, run: RunResult) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, row in zip(run.log_t, run.rows):
            w.writerow([int(t), run.seed, run.algorithm] + [_fmt(x) for x in row])


def aggregate(runs: list[RunResult]) -> list[tuple]:
    """Per (algorithm, t): seed count, then mean and population std of each metric."""
    out = []
    for label in dict.fromkeys(r.algorithm for r in runs):
        by_t: dict[int, list] = {}
        for r in runs:
            if r.algorithm == label:
                for t, row in zip(r.log_t, r.rows):
                    by_t.setdefault(int(t), []).append(row)
        for t in sorted(by_t):
            vals = np.array(by_t[t])
            stats = []
            for j in range(vals.shape[1]):
                col = vals[:, j][~np.isnan(vals[:, j])]
                with np.errstate(over="ignore", invalid="ignore"):  # inf rows from diverged runs
                    stats += [col.mean(), col.std()] if col.size else [np.nan, np.nan]
            out.append((t, label, len(vals), *stats))
    return out


def write_aggregate_csv(path: Path, rows: list[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGG_HEADER)
        for t, label, k, *stats in rows:
            w.writerow([t, label, k] + [_fmt(x) for x in stats])


def metadata(result: ExperimentResult) -> dict:
    prob = result.problem
    p = prob.problem
    return {
        "version": 1,
        "config": result.config.to_dict(),
        "environment": {"name": p.chain.name, "description": prob.description,
                        "n": p.chain.n, "d": p.features.d},
        "problem": {
            "g": p.analysis.g,
            "theta_star": p.theta_star.tolist(),
            "w_star": p.analysis.w_star.tolist(),
            "mu": p.analysis.mu.tolist(),
            "mix_C": p.analysis.mix_C,
            "mix_beta": p.analysis.mix_beta,
            "r_max": p.chain.r_max,
            "bellman_residual": projected_bellman_residual(p),
        },
        "spectral": prob.report.to_dict(),
        "runs": [{"algorithm": r.algorithm, "seed": r.seed, "file": f"runs/{run_csv_name(r.algorithm, r.seed)}",
                  "rows": int(len(r.log_t)), "failure": r.failure} for r in result.runs],
    }


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path | None = None) -> ExperimentResult:
    """Run every (algorithm, seed) job and, when ``out_dir`` is given, write CSVs and metadata.

    A job that raises or produces non-finite iterates is recorded as a failure;
    the remaining jobs still run.
    """
    prob = build_experiment_problem(cfg)
    result = ExperimentResult(cfg, prob)
    for algo in cfg.algorithms:
        for seed in cfg.seeds:
            try:
                run = run_single(cfg, prob, algo, seed)
            except (AvgTDError, FloatingPointError, np.linalg.LinAlgError) as exc:
                log.warning("run %s seed %s failed: %s", algo.label, seed, exc)
                empty = np.zeros((0, 4))
                run = RunResult(algo.label, seed, empty, np.zeros(0, dtype=np.int64),
                                RunTrace(np.zeros(0, dtype=np.int64), np.zeros((0, prob.problem.features.d))),
                                failure=f"{type(exc).__name__}: {exc}")
            if run.failure:
                log.warning("run %s seed %s: %s", algo.label, seed, run.failure)
            result.runs.append(run)
    if out_dir is not None:
        write_outputs(result, Path(out_dir))
    return result


def write_outputs(result: ExperimentResult, out_dir: Path) -> None:
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    for run in result.runs:
        write_run_csv(runs_dir / run_csv_name(run.algorithm, run.seed), run)
    write_aggregate_csv(out_dir / "aggregate.csv", aggregate(result.runs))
    with open(out_dir / "metadata.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(metadata(result), fh, indent=2)
        fh.write("\n")
    if result.failures:
        with open(out_dir / "failures.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("algorithm", "seed", "t", "reason"))
            for r in result.failures:
                t = r.trace.failed_at if r.trace.failed_at is not None else ""
                w.writerow((r.algorithm, r.seed, t, r.failure))
    result.out_dir = out_dir
