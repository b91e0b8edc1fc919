"""Synthetic policy-induced chains and random feature matrices."""
from __future__ import annotations

import numpy as np

from ..chain import PolicyMarkovChain, StationaryAnalysis, load_chain, make_ergodic
from ..errors import ParameterError, StructuralError
from ..geometry import FeatureMap, numerical_rank
from .config import EnvironmentSpec

FEATURE_RETRIES = 100

DESCRIPTIONS = {
    "random_walk": "line of n states, left/right with prob 1/2 each, reflecting ends "
                   "(blocked moves stay put), reward 1 at the right endpoint",
    "gridworld": "w x h grid, uniform random 4-neighbour policy, reflecting walls, "
                 "reward 1 at the far corner (w-1, h-1)",
    "random_mdp": "rows ~ symmetric Dirichlet(1) on a random support of size "
                  "max(1, round((1 - sparsity) n)), rewards ~ U[0, 1]",
    "file": "transition matrix and rewards loaded from an MDP interchange file",
}


def random_walk(n: int) -> PolicyMarkovChain:
    if n < 2:
        raise ParameterError("random walk needs n >= 2")
    P = np.zeros((n, n))
    for s in range(n):
        P[s, max(s - 1, 0)] += 0.5
        P[s, min(s + 1, n - 1)] += 0.5
    R = np.zeros(n)
    R[-1] = 1.0
    return PolicyMarkovChain(P, R, name=f"random_walk({n})")


def gridworld(w: int, h: int) -> PolicyMarkovChain:
    if w < 1 or h < 1 or w * h < 2:
        raise ParameterError("gridworld needs at least two cells")
    n = w * h
    P = np.zeros((n, n))
    for y in range(h):
        for x in range(w):
            s = y * w + x
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                nx, ny = x + dx, y + dy
                if not (0 <= nx < w and 0 <= ny < h):
                    nx, ny = x, y
                P[s, ny * w + nx] += 0.25
    R = np.zeros(n)
    R[-1] = 1.0
    return PolicyMarkovChain(P, R, name=f"gridworld({w}x{h})")


def random_mdp(n: int, sparsity: float, rng: np.random.Generator) -> PolicyMarkovChain:
    if n < 2:
        raise ParameterError("random MDP needs n >= 2")
    if not 0.0 <= sparsity < 1.0:
        raise ParameterError("sparsity must lie in [0, 1)")
    k = max(1, round((1.0 - sparsity) * n))
    P = np.zeros((n, n))
    for s in range(n):
        support = np.sort(rng.choice(n, size=k, replace=False))
        P[s, support] = rng.dirichlet(np.ones(k))
    R = rng.random(n)
    return PolicyMarkovChain(P, R, name=f"random_mdp({n}, sparsity={sparsity:g})")


def generate_environment(spec: EnvironmentSpec, epsilon: float | None = None,
                         rng: np.random.Generator | None = None) -> PolicyMarkovChain:
    """Build the chain described by ``spec`` and apply the ergodicity patch when ``epsilon`` is set."""
    if spec.kind == "random_walk":
        chain = random_walk(spec.n)
    elif spec.kind == "gridworld":
        chain = gridworld(spec.w, spec.h)
    elif spec.kind == "random_mdp":
        if rng is None:
            raise ParameterError("random_mdp needs an rng")
        chain = random_mdp(spec.n, spec.sparsity, rng)
    elif spec.kind == "file":
        chain = load_chain(spec.path)
    else:
        raise ParameterError(f"unknown environment kind {spec.kind!r}")
    if epsilon is not None:
        chain = make_ergodic(chain, epsilon)
    return chain


def generate_features(chain: PolicyMarkovChain, analysis: StationaryAnalysis, d: int,
                      bernoulli_p: float, rng: np.random.Generator,
                      include_e_and_wstar: bool = True) -> FeatureMap:
    """Random 0/1 features, optionally with the columns ``e`` and ``W*`` appended.

    Redraws until the matrix has full column rank, then divides every row by the
    largest row norm (a common factor, so ``e`` and ``W*`` stay in the span).
    """
    n = chain.n
    if include_e_and_wstar and d < 3:
        raise ParameterError("need d >= 3 to reserve the e and W* columns")
    if not 1 <= d <= n:
        raise ParameterError(f"need 1 <= d <= n, got d={d}, n={n}")
    n_random = d - 2 if include_e_and_wstar else d
    for _ in range(FEATURE_RETRIES):
        phi = (rng.random((n, n_random)) < bernoulli_p).astype(float)
        if include_e_and_wstar:
            phi = np.column_stack([phi, np.ones(n), analysis.w_star])
        if numerical_rank(phi) == d:
            return FeatureMap.normalized(phi)
    raise StructuralError(f"no full-rank feature matrix after {FEATURE_RETRIES} draws")
