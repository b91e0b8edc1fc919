"""Experiment configuration: a versioned JSON document mapped onto dataclasses."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path

from ..errors import ParameterError
from ..td import StepSchedule

CONFIG_VERSION = 1
ALGORITHMS = ("double_chain", "single_chain", "baseline")
SAMPLING = ("markov", "iid", "mean_field")
ENV_KINDS = ("random_walk", "gridworld", "random_mdp", "file")


@dataclass(frozen=True)
class EnvironmentSpec:
    kind: str
    n: int | None = None
    w: int | None = None
    h: int | None = None
    sparsity: float = 0.0
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ENV_KINDS:
            raise ParameterError(f"unknown environment kind {self.kind!r}")
        if self.kind in ("random_walk", "random_mdp") and (self.n is None or self.n < 2):
            raise ParameterError(f"{self.kind} needs n >= 2")
        if self.kind == "gridworld" and (self.w is None or self.h is None or self.w < 1 or self.h < 1
                                         or self.w * self.h < 2):
            raise ParameterError("gridworld needs w, h >= 1 with at least two cells")
        if self.kind == "random_mdp" and not 0.0 <= self.sparsity < 1.0:
            raise ParameterError("sparsity must lie in [0, 1)")
        if self.kind == "file" and not self.path:
            raise ParameterError("file environment needs a path")

    @property
    def n_states(self) -> int | None:
        if self.kind == "gridworld":
            return self.w * self.h
        return self.n


@dataclass(frozen=True)
class FeatureSpec:
    kind: str = "tabular"
    d: int | None = None
    bernoulli_p: float = 0.5
    include_e_and_wstar: bool = True

    def __post_init__(self):
        if self.kind not in ("tabular", "bernoulli"):
            raise ParameterError(f"unknown feature kind {self.kind!r}")
        if self.kind == "bernoulli":
            if self.d is None or self.d < 1:
                raise ParameterError("bernoulli features need d >= 1")
            if self.include_e_and_wstar and self.d < 3:
                raise ParameterError("include_e_and_wstar needs d >= 3")
            if not 0.0 < self.bernoulli_p < 1.0:
                raise ParameterError("bernoulli_p must lie in (0, 1)")


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    schedule: StepSchedule
    label: str = ""

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ParameterError(f"unknown algorithm {self.name!r}; expected one of {ALGORITHMS}")
        if not self.label:
            object.__setattr__(self, "label", self.name)


@dataclass(frozen=True)
class ExperimentConfig:
    environment: EnvironmentSpec
    features: FeatureSpec
    algorithms: tuple[AlgorithmSpec, ...]
    T: int
    seeds: tuple[int, ...]
    epsilon: float | None = None
    sampling: str = "markov"
    problem_seed: int = 0
    log_points: int = 200
    start_state: int = 0
    theta0: str | tuple[float, ...] = "zero"
    out: str | None = None
    version: int = CONFIG_VERSION

    def __post_init__(self):
        if self.version != CONFIG_VERSION:
            raise ParameterError(f"unsupported config version {self.version}")
        if self.T < 1:
            raise ParameterError("T must be >= 1")
        if not self.seeds:
            raise ParameterError("seeds must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ParameterError("seeds must be distinct")
        if not self.algorithms:
            raise ParameterError("at least one algorithm is required")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ParameterError(f"algorithm labels must be unique, got {labels}")
        if self.sampling not in SAMPLING:
            raise ParameterError(f"unknown sampling mode {self.sampling!r}")
        if self.sampling == "mean_field" and any(a.name != "double_chain" for a in self.algorithms):
            raise ParameterError("mean_field sampling is only defined for double_chain")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ParameterError("epsilon must lie in (0, 1)")
        if self.log_points < 2:
            raise ParameterError("log_points must be >= 2")
        if isinstance(self.theta0, str) and self.theta0 not in ("zero", "theta_star"):
            raise ParameterError("theta0 must be 'zero', 'theta_star' or a vector")
        n = self.environment.n_states
        if n is not None:
            d = n if self.features.kind == "tabular" else self.features.d
            if d > n:
                raise ParameterError(f"feature dimension d={d} exceeds state count n={n}")
            if not 0 <= self.start_state < n:
                raise ParameterError("start_state out of range")

    def to_dict(self) -> dict:
        env = {k: v for k, v in vars(self.environment).items() if v is not None}
        feats = dict(vars(self.features))
        return {
            "version": self.version,
            "environment": env,
            "epsilon": self.epsilon,
            "features": feats,
            "algorithms": [{"name": a.name, "label": a.label, "schedule": a.schedule.to_dict()}
                           for a in self.algorithms],
            "T": self.T,
            "seeds": list(self.seeds),
            "sampling": self.sampling,
            "problem_seed": self.problem_seed,
            "log_points": self.log_points,
            "start_state": self.start_state,
            "theta0": self.theta0 if isinstance(self.theta0, str) else list(self.theta0),
            "out": self.out,
        }


def _algorithms(doc: dict) -> tuple[AlgorithmSpec, ...]:
    if "sweep" in doc:
        sweep = doc["sweep"]
        names = sweep.get("algorithms", [])
        schedules = [StepSchedule.from_dict(s) for s in sweep.get("schedules", [])]
        if not names or not schedules:
            raise ParameterError("sweep needs nonempty 'algorithms' and 'schedules' lists")
        return tuple(AlgorithmSpec(name, sch, f"{name}@{sch.label}")
                     for name, sch in itertools.product(names, schedules))
    out = []
    for a in doc.get("algorithms", []):
        if isinstance(a, str):
            raise ParameterError("algorithm entries need a schedule: {'name': ..., 'schedule': {...}}")
        out.append(AlgorithmSpec(a["name"], StepSchedule.from_dict(a["schedule"]), a.get("label", "")))
    return tuple(out)


def config_from_dict(doc: dict, sweep: bool = False) -> ExperimentConfig:
    """Build a config; with ``sweep=True`` the ``sweep`` block is expanded into algorithms."""
    if not isinstance(doc, dict):
        raise ParameterError("config must be a JSON object")
    if sweep and "sweep" not in doc:
        raise ParameterError("sweep config needs a 'sweep' block")
    if not sweep and "sweep" in doc:
        doc = {k: v for k, v in doc.items() if k != "sweep"}
    try:
        theta0 = doc.get("theta0", "zero")
        return ExperimentConfig(
            environment=EnvironmentSpec(**doc["environment"]),
            features=FeatureSpec(**doc.get("features", {})),
            algorithms=_algorithms(doc),
            T=int(doc["T"]),
            seeds=tuple(int(s) for s in doc.get("seeds", [])),
            epsilon=doc.get("epsilon"),
            sampling=doc.get("sampling", "markov"),
            problem_seed=int(doc.get("problem_seed", 0)),
            log_points=int(doc.get("log_points", 200)),
            start_state=int(doc.get("start_state", 0)),
            theta0=theta0 if isinstance(theta0, str) else tuple(float(x) for x in theta0),
            out=doc.get("out"),
            version=int(doc.get("version", -1)),
        )
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed config: {exc!r}") from exc


def load_config(path: str | Path, sweep: bool = False, seeds=None) -> ExperimentConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if seeds is not None:
        doc["seeds"] = list(seeds)
    env = doc.get("environment", {})
    # relative MDP paths resolve against the config file's directory
    if isinstance(env, dict) and env.get("kind") == "file" and env.get("path"):
        p = Path(env["path"])
        if not p.is_absolute():
            doc = {**doc, "environment": {**env, "path": str(path.parent / p)}}
    return config_from_dict(doc, sweep=sweep)
