"""Exact fixed points of the projected average-reward Bellman equation."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .chain import PolicyMarkovChain, StationaryAnalysis, analyze
from .errors import StructuralError
from .geometry import FeatureMap, eta1, numerical_rank

COND_WARN = 1e12


@dataclass(frozen=True)
class EvalProblem:
    chain: PolicyMarkovChain
    analysis: StationaryAnalysis
    features: FeatureMap
    theta_star: np.ndarray

    @property
    def w_lin(self) -> np.ndarray:
        return self.features.phi @ self.theta_star

    @property
    def phi(self) -> np.ndarray:
        return self.features.phi


def bellman_system(chain: PolicyMarkovChain, mu: np.ndarray, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(A, b)`` with ``A = Phi^T D (I - Pi P) Phi`` and ``b = Phi^T D Pi R``, ``Pi = I - e mu^T``."""
    n = chain.n
    Pi = np.eye(n) - np.outer(np.ones(n), mu)
    PhiD = phi.T * mu
    A = PhiD @ (phi - Pi @ (chain.P @ phi))
    b = PhiD @ (Pi @ chain.R)
    return A, b


def solve_theta_star(chain: PolicyMarkovChain, analysis: StationaryAnalysis, features: FeatureMap) -> np.ndarray:
    phi = features.phi
    if numerical_rank(phi) < phi.shape[1] or eta1(phi, chain, analysis.mu) <= 1e-12:
        raise StructuralError("projected Bellman system is singular: feature columns are rank deficient")
    A, b = bellman_system(chain, analysis.mu, phi)
    cond = np.linalg.cond(A)
    if cond > COND_WARN:
        warnings.warn(f"projected Bellman system is ill-conditioned (cond ~ {cond:.2e})", RuntimeWarning)
    # LAPACK gesv: LU with partial pivoting
    return np.linalg.solve(A, b)


def build_problem(chain: PolicyMarkovChain, features: FeatureMap, analysis: StationaryAnalysis | None = None) -> EvalProblem:
    if analysis is None:
        analysis = analyze(chain)
    theta = solve_theta_star(chain, analysis, features)
    return EvalProblem(chain, analysis, features, theta)


def projected_bellman_residual(problem: EvalProblem, theta: np.ndarray | None = None) -> float:
    """Relative residual ``||A theta - b|| / (1 + ||b||)``; defaults to ``theta*``."""
    theta = problem.theta_star if theta is None else np.asarray(theta, dtype=float)
    A, b = bellman_system(problem.chain, problem.analysis.mu, problem.phi)
    return float(np.linalg.norm(A @ theta - b) / (1.0 + np.linalg.norm(b)))


def expected_update_field(problem: EvalProblem, theta) -> np.ndarray:
    """Mean double-chain update direction under stationary sampling.

    ``Phi^T D (R + P Phi theta - Phi theta) - Phi^T mu mu^T (R + Phi theta)``.
    """
    theta = np.asarray(theta, dtype=float)
    phi, mu = problem.phi, problem.analysis.mu
    R, P = problem.chain.R, problem.chain.P
    v = phi @ theta
    return (phi.T * mu) @ (R + P @ v - v) - (phi.T @ mu) * (mu @ (R + v))
