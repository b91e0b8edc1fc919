"""Finite Markov chains induced by a fixed policy, and their exact stationary quantities."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path

import numpy as np
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import ParameterError, StructuralError

ROW_SUM_TOL = 1e-12
# mixing_distances stops once d(tau) falls below this; smaller values are mostly rounding noise
MIX_FLOOR = 1e-10


@dataclass(frozen=True)
class PolicyMarkovChain:
    """Transition matrix ``P`` and expected one-step rewards ``R`` under a fixed policy."""

    P: np.ndarray
    R: np.ndarray
    name: str = ""

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        R = np.array(self.R, dtype=float).reshape(-1)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] < 1:
            raise ParameterError(f"P must be a square matrix, got shape {P.shape}")
        if R.shape[0] != P.shape[0]:
            raise ParameterError(f"R has length {R.shape[0]}, expected {P.shape[0]}")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(R))):
            raise ParameterError("P and R must be finite")
        P.setflags(write=False)
        R.setflags(write=False)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "R", R)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def r_max(self) -> float:
        return float(np.max(np.abs(self.R)))


@dataclass(frozen=True)
class MixingFit:
    """Geometric envelope ``d(tau) <= C * beta**tau`` of the worst-case L1 distance to stationarity."""

    C: float
    beta: float
    distances: np.ndarray

    def tau_mix(self, eps: float) -> int:
        """First ``tau`` whose worst-start L1 distance to ``mu`` is at most ``eps``.

        Past the computed horizon the envelope is used to extrapolate.
        """
        if eps <= 0:
            raise ParameterError("eps must be positive")
        hit = np.flatnonzero(self.distances <= eps)
        if hit.size:
            return int(hit[0])
        if self.beta == 0.0:
            return len(self.distances)
        tau = math.ceil(math.log(eps / self.C) / math.log(self.beta))
        return max(tau, len(self.distances))


@dataclass(frozen=True)
class StationaryAnalysis:
    mu: np.ndarray
    g: float
    w_star: np.ndarray
    mix_C: float
    mix_beta: float
    mixing: MixingFit | None = field(default=None, repr=False, compare=False)

    @property
    def mu_min(self) -> float:
        return float(self.mu.min())

    @property
    def mu_max(self) -> float:
        return float(self.mu.max())

    def tau_mix(self, eps: float) -> int:
        if self.mixing is None:
            raise StructuralError("analysis was built without a mixing fit")
        return self.mixing.tau_mix(eps)


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    max_row_sum_deviation: float
    negative_entries: int
    entries_above_one: int
    irreducible: bool
    period: int | None
    messages: tuple[str, ...]

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [
            f"status: {status}",
            f"max row-sum deviation: {self.max_row_sum_deviation:.3e}",
            f"negative entries: {self.negative_entries}",
            f"entries above one: {self.entries_above_one}",
            f"irreducible: {self.irreducible}",
            f"period: {self.period if self.period is not None else 'undefined'}",
        ]
        lines += [f"- {m}" for m in self.messages]
        return "\n".join(lines)


def _period(adj: np.ndarray) -> int:
    # for a strongly connected graph, period = gcd over edges (u, v) of level(u) + 1 - level(v)
    order, pred = breadth_first_order(adj, 0, directed=True, return_predecessors=True)
    level = np.zeros(adj.shape[0], dtype=np.int64)
    for v in order[1:]:
        level[v] = level[pred[v]] + 1
    u, v = np.nonzero(adj)
    diffs = np.abs(level[u] + 1 - level[v])
    return int(reduce(math.gcd, diffs.tolist(), 0))


def validate_chain(chain: PolicyMarkovChain) -> ValidationReport:
    """Check row-stochasticity, irreducibility and aperiodicity of ``chain.P``."""
    P = chain.P
    dev = float(np.max(np.abs(P.sum(axis=1) - 1.0)))
    neg = int(np.sum(P < 0))
    above = int(np.sum(P > 1))
    messages = []
    if dev > ROW_SUM_TOL:
        messages.append(f"row sums deviate from 1 by up to {dev:.3e}")
    if neg:
        messages.append(f"{neg} negative entries")
    if above:
        messages.append(f"{above} entries exceed 1")

    adj = (P > 0).astype(np.int8)
    n_comp, _ = connected_components(adj, directed=True, connection="strong")
    irreducible = n_comp == 1
    period = None
    if irreducible:
        period = _period(adj)
        if period != 1:
            messages.append(f"periodic (period {period})")
    else:
        messages.append(f"reducible ({n_comp} strongly connected classes)")

    passed = dev <= ROW_SUM_TOL and neg == 0 and above == 0 and irreducible and period == 1
    return ValidationReport(passed, dev, neg, above, irreducible, period, tuple(messages))


def make_ergodic(chain: PolicyMarkovChain, epsilon: float) -> PolicyMarkovChain:
    """Move mass ``epsilon`` onto the zero entries of every row that has any.

    Each zero entry gets ``epsilon / k`` (``k`` zeros in the row) and the nonzero
    entries are scaled by ``1 - epsilon``; rows without zeros are left alone.
    """
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    P = np.array(chain.P)
    zero = P == 0
    k = zero.sum(axis=1)
    for s in np.flatnonzero(k):
        if k[s] == P.shape[1]:
            raise ParameterError(f"row {s} is identically zero")
        P[s] = np.where(zero[s], epsilon / k[s], P[s] * (1.0 - epsilon))
    return PolicyMarkovChain(P, chain.R, name=chain.name)


def stationary_distribution(chain: PolicyMarkovChain) -> np.ndarray:
    """Solve ``mu^T P = mu^T``, ``sum(mu) = 1`` by a direct linear solve.

    The last balance equation is redundant for an irreducible chain and is
    replaced by the normalization row.
    """
    n = chain.n
    A = np.eye(n) - chain.P.T
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    if np.linalg.cond(A) > 1e12:
        raise StructuralError("stationary system is singular; the chain is not irreducible")
    mu = np.linalg.solve(A, b)
    if np.any(mu <= 0):
        raise StructuralError("stationary distribution has nonpositive entries; chain is not ergodic")
    return mu / mu.sum()


def relative_value_function(chain: PolicyMarkovChain, mu: np.ndarray) -> tuple[float, np.ndarray]:
    """Average reward ``g`` and the centered relative value function ``W*``.

    ``W*`` is the unique solution of ``W + g e = P W + R`` with ``mu^T W = 0``,
    obtained from ``(I - P + e mu^T) W = R - g e``.
    """
    n = chain.n
    mu = np.asarray(mu, dtype=float)
    g = float(mu @ chain.R)
    A = np.eye(n) - chain.P + np.outer(np.ones(n), mu)
    if np.linalg.cond(A) > 1e12:
        raise StructuralError("fundamental matrix is singular; the chain is not ergodic")
    w = np.linalg.solve(A, chain.R - g)
    return g, w


def mixing_distances(chain: PolicyMarkovChain, mu: np.ndarray, horizon: int) -> np.ndarray:
    """``d(tau) = max_s ||p_tau(.|s) - mu||_1`` for ``tau = 0..horizon``.

    Stops early once ``d`` drops below the rounding floor.
    """
    n = chain.n
    Pt = np.eye(n)
    out = [float(np.abs(Pt - mu).sum(axis=1).max())]
    for _ in range(horizon):
        Pt = Pt @ chain.P
        out.append(float(np.abs(Pt - mu).sum(axis=1).max()))
        if out[-1] < MIX_FLOOR:
            break
    return np.array(out)


def mixing_fit(chain: PolicyMarkovChain, mu: np.ndarray, horizon: int = 1000) -> MixingFit:
    """Fit the envelope ``d(tau) <= C beta^tau`` over the sampled distances.

    ``C`` is anchored at ``max(d(0), 1)`` and ``beta`` is the smallest rate keeping
    every sample under the envelope, so the bound is tight at some sampled tau.
    """
    if horizon < 1:
        raise ParameterError("horizon must be >= 1")
    d = mixing_distances(chain, mu, horizon)
    taus = np.arange(len(d))
    live = (taus >= 1) & (d > 0)
    C = max(d[0], 1.0)
    while True:
        beta = float(np.max((d[live] / C) ** (1.0 / taus[live]))) if live.any() else 0.0
        if beta < 1.0 - 1e-9:
            break
        C *= 2.0
    return MixingFit(C=float(C), beta=beta, distances=d)


def analyze(chain: PolicyMarkovChain, horizon: int = 1000) -> StationaryAnalysis:
    """Stationary distribution, gain, relative values and mixing envelope in one go."""
    mu = stationary_distribution(chain)
    g, w = relative_value_function(chain, mu)
    fit = mixing_fit(chain, mu, horizon)
    return StationaryAnalysis(mu=mu, g=g, w_star=w, mix_C=fit.C, mix_beta=fit.beta, mixing=fit)


# --- MDP interchange file -----------------------------------------------------

def chain_to_dict(chain: PolicyMarkovChain, epsilon: float | None = None, **extra) -> dict:
    doc = {
        "version": 1,
        "name": chain.name,
        "n": chain.n,
        "P": chain.P.tolist(),
        "R": chain.R.tolist(),
    }
    if epsilon is not None:
        doc["epsilon"] = epsilon
    doc.update(extra)
    return doc


def chain_from_dict(doc: dict) -> PolicyMarkovChain:
    try:
        n = int(doc["n"])
        P = np.asarray(doc["P"], dtype=float)
        R = np.asarray(doc["R"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParameterError(f"malformed MDP document: {exc}") from exc
    if P.size != n * n:
        raise ParameterError(f"P has {P.size} entries, expected n*n = {n * n}")
    return PolicyMarkovChain(P.reshape(n, n), R, name=str(doc.get("name", "")))


def load_chain(path: str | Path) -> PolicyMarkovChain:
    with open(path, encoding="utf-8") as fh:
        return chain_from_dict(json.load(fh))


def save_chain(chain: PolicyMarkovChain, path: str | Path, epsilon: float | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(chain_to_dict(chain, epsilon), fh, indent=2)
        fh.write("\n")
