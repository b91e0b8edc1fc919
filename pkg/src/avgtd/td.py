"""Stochastic average-reward TD learners and their step-size schedules.

Single-step functions here are the reference implementation; ``run_*`` drive the
compiled loops in ``_kernels`` over pre-sampled transitions.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .errors import ParameterError
from .sampling import Transitions
from .solvers import EvalProblem, bellman_system

SHRINK = _kernels.SHRINK


@dataclass(frozen=True)
class StepSchedule:
    """``alpha_t = alpha`` (constant) or ``a / (t + c0)**xi`` (decaying); ``beta_t = rho0 * alpha_t``."""

    kind: str = "decaying"
    alpha: float | None = None
    a: float | None = None
    c0: float | None = None
    xi: float = 1.0
    rho0: float = 1.0

    def __post_init__(self):
        if self.kind == "constant":
            if self.alpha is None or not self.alpha > 0:
                raise ParameterError("constant schedule needs alpha > 0")
        elif self.kind == "decaying":
            if self.a is None or not self.a > 0:
                raise ParameterError("decaying schedule needs a > 0")
            if self.c0 is None or not self.c0 > 0:
                raise ParameterError("decaying schedule needs c0 > 0")
            if not 0.0 < self.xi <= 1.0:
                raise ParameterError("xi must lie in (0, 1]")
        else:
            raise ParameterError(f"unknown schedule kind {self.kind!r}")
        if not 0.0 < self.rho0 <= 1.0:
            raise ParameterError("rho0 must lie in (0, 1]")

    @classmethod
    def from_dict(cls, doc: dict) -> "StepSchedule":
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ParameterError(f"bad schedule {doc}: {exc}") from exc

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"kind": "constant", "alpha": self.alpha, "rho0": self.rho0}
        return {"kind": "decaying", "a": self.a, "c0": self.c0, "xi": self.xi, "rho0": self.rho0}

    @property
    def label(self) -> str:
        if self.kind == "constant":
            return f"const{self.alpha:g}"
        xi = "" if self.xi == 1.0 else f"^{self.xi:g}"
        return f"{self.a:g}/(t+{self.c0:g}){xi}"

    def alphas(self, T: int) -> np.ndarray:
        """``alpha_t`` for ``t = 0..T-1``."""
        if self.kind == "constant":
            return np.full(T, float(self.alpha))
        t = np.arange(T, dtype=float)
        if self.xi == 1.0:
            return self.a / (t + self.c0)
        return self.a / (t + self.c0) ** self.xi


def step_size(schedule: StepSchedule, t: int) -> tuple[float, float]:
    if t < 0:
        raise ParameterError("t must be nonnegative")
    if schedule.kind == "constant":
        alpha = float(schedule.alpha)
    else:
        alpha = schedule.a / (t + schedule.c0) ** schedule.xi
    return alpha, schedule.rho0 * alpha


@dataclass(frozen=True)
class DoubleChainState:
    theta: np.ndarray
    t: int = 0


@dataclass(frozen=True)
class SingleChainState:
    theta: np.ndarray
    w: np.ndarray
    r_theta: float
    r_w: float
    t: int = 0

    def __post_init__(self):
        if not (self.r_theta > 0 and self.r_w > 0):
            raise ParameterError("projection radii must be positive")


@dataclass(frozen=True)
class RewardEstimator:
    sum: float = 0.0
    count: int = 0

    @property
    def estimate(self) -> float:
        return self.sum / self.count if self.count else 0.0


def reward_estimate_update(est: RewardEstimator, r: float) -> RewardEstimator:
    return RewardEstimator(est.sum + r, est.count + 1)


def running_reward_estimates(R: np.ndarray, s: np.ndarray, log_t: np.ndarray) -> np.ndarray:
    """Running-average reward after ``t`` observed states, for each ``t`` in ``log_t`` (nan at 0)."""
    csum = np.concatenate([[0.0], np.cumsum(R[s])])
    log_t = np.asarray(log_t)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(log_t > 0, csum[log_t] / np.maximum(log_t, 1), np.nan)


def project_ball(x: np.ndarray, radius: float) -> np.ndarray:
    """Radial projection onto the Euclidean ball of the given radius."""
    if not radius > 0:
        raise ParameterError("radius must be positive")
    nrm = np.sqrt(x @ x)
    if nrm > radius:
        return x * (radius * SHRINK / nrm)
    return x


def _check_index(n: int, *idx) -> None:
    for i in idx:
        if np.any(np.asarray(i) < 0) or np.any(np.asarray(i) >= n):
            raise ParameterError(f"state index {i} out of range [0, {n})")


def double_chain_direction(theta, s, s_next, s_hat, rewards, phi) -> np.ndarray:
    """``f + g`` for one sample, or row-wise for arrays of samples.

    ``f = -(r_s + phi(s).theta) phi(s_hat)``, ``g = (r_s + phi(s').theta - phi(s).theta) phi(s)``.
    """
    ps = phi[s]
    r = rewards[s]
    v_s = ps @ theta
    v_n = phi[s_next] @ theta
    cf = np.asarray(-(r + v_s))[..., None]
    cg = np.asarray(r + v_n - v_s)[..., None]
    return cf * phi[s_hat] + cg * ps


def double_chain_step(state: DoubleChainState, sample, rewards, features, alpha_t: float) -> DoubleChainState:
    s, s_next, s_hat = sample
    phi = getattr(features, "phi", features)
    _check_index(phi.shape[0], s, s_next, s_hat)
    theta = state.theta + alpha_t * double_chain_direction(state.theta, s, s_next, s_hat, rewards, phi)
    return DoubleChainState(theta, state.t + 1)


def single_chain_step(state: SingleChainState, sample, rewards, features, alpha_t: float,
                      beta_t: float) -> SingleChainState:
    s, s_next = sample[:2]
    phi = getattr(features, "phi", features)
    _check_index(phi.shape[0], s, s_next)
    ps = phi[s]
    r = rewards[s]
    v_s = ps @ state.theta
    v_n = phi[s_next] @ state.theta
    theta = state.theta + alpha_t * ((r + v_n - v_s) * ps - (r + v_s) * state.w)
    w = state.w + beta_t * (ps - state.w)
    return replace(state, theta=project_ball(theta, state.r_theta), w=project_ball(w, state.r_w), t=state.t + 1)


def baseline_coupled_sa_step(state: tuple, sample, rewards, features, alpha_t: float) -> tuple:
    """Classic coupled average-reward TD: one shared step for the gain and the value weights."""
    theta, g_est = state
    s, s_next = sample[:2]
    phi = getattr(features, "phi", features)
    _check_index(phi.shape[0], s, s_next)
    r = rewards[s]
    delta = r - g_est + phi[s_next] @ theta - phi[s] @ theta
    return theta + alpha_t * delta * phi[s], g_est + alpha_t * (r - g_est)


# --- full runs ------------------------------------------------------------------

@dataclass
class RunTrace:
    """Learner iterates recorded after ``t`` updates, for each ``t`` in ``log_t``.

    ``failed_at`` is the update count at which a non-finite iterate appeared; rows
    from that point on are missing.
    """

    log_t: np.ndarray
    theta: np.ndarray
    w: np.ndarray | None = None
    g_est: np.ndarray | None = None
    reward_est: np.ndarray | None = None
    failed_at: int | None = None
    extra: dict = field(default_factory=dict)


def _finish(log_t, k, fail, **arrays) -> RunTrace:
    arrays = {key: (None if v is None else v[:k]) for key, v in arrays.items()}
    return RunTrace(log_t=np.asarray(log_t)[:k], failed_at=None if fail < 0 else int(fail), **arrays)


def _prep(problem: EvalProblem, transitions: Transitions, schedule: StepSchedule, theta0):
    T = len(transitions)
    d = problem.features.d
    theta0 = np.zeros(d) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    return T, theta0, schedule.alphas(T)


def run_double_chain(problem: EvalProblem, transitions: Transitions, schedule: StepSchedule,
                     log_t, theta0=None) -> RunTrace:
    if transitions.s_hat is None:
        raise ParameterError("double-chain runs need s_hat samples (markov_double or iid mode)")
    T, theta0, alpha = _prep(problem, transitions, schedule, theta0)
    log_t = np.asarray(log_t, dtype=np.int64)
    out, k, fail = _kernels.run_double_chain(
        problem.phi, problem.chain.R, transitions.s, transitions.s_next, transitions.s_hat,
        alpha, theta0, log_t)
    reward = running_reward_estimates(problem.chain.R, transitions.s, log_t)
    return _finish(log_t, k, fail, theta=out, reward_est=reward)


def run_single_chain(problem: EvalProblem, transitions: Transitions, schedule: StepSchedule,
                     log_t, r_theta: float, r_w: float, theta0=None, w0=None) -> RunTrace:
    if not (r_theta > 0 and r_w > 0):
        raise ParameterError("projection radii must be positive")
    T, theta0, alpha = _prep(problem, transitions, schedule, theta0)
    w0 = np.zeros(problem.features.d) if w0 is None else np.asarray(w0, dtype=float).copy()
    log_t = np.asarray(log_t, dtype=np.int64)
    out, out_w, k, fail = _kernels.run_single_chain(
        problem.phi, problem.chain.R, transitions.s, transitions.s_next,
        alpha, schedule.rho0 * alpha, theta0, w0, float(r_theta), float(r_w), log_t)
    reward = running_reward_estimates(problem.chain.R, transitions.s, log_t)
    return _finish(log_t, k, fail, theta=out, w=out_w, reward_est=reward)


def run_baseline(problem: EvalProblem, transitions: Transitions, schedule: StepSchedule,
                 log_t, theta0=None, g0: float = 0.0) -> RunTrace:
    T, theta0, alpha = _prep(problem, transitions, schedule, theta0)
    log_t = np.asarray(log_t, dtype=np.int64)
    out, out_g, k, fail = _kernels.run_baseline(
        problem.phi, problem.chain.R, transitions.s, transitions.s_next, alpha, theta0, float(g0), log_t)
    return _finish(log_t, k, fail, theta=out, g_est=out_g, reward_est=out_g)


def run_mean_field(problem: EvalProblem, schedule: StepSchedule, T: int, log_t, theta0=None) -> RunTrace:
    """Noiseless double-chain dynamics ``theta <- theta + alpha_t * hbar(theta)``."""
    d = problem.features.d
    theta0 = np.zeros(d) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    A, b = bellman_system(problem.chain, problem.analysis.mu, problem.phi)
    log_t = np.asarray(log_t, dtype=np.int64)
    out, k, fail = _kernels.run_mean_field(A, b, schedule.alphas(T), theta0, log_t)
    return _finish(log_t, k, fail, theta=out)
