"""Seeded trajectory generation.

Random streams are numpy's PCG64 (128-bit LCG, XSL-RR output) with its state and
increment set explicitly from SplitMix64 outputs, and uniforms are
``(next_u64 >> 11) * 2**-53``. Categorical draws use the inverse CDF with
right-closed intervals: state ``j`` is drawn iff ``cdf[j-1] < u <= cdf[j]``.
Together this makes every trajectory a fixed function of ``(seed, run_index)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .chain import ROW_SUM_TOL, PolicyMarkovChain, stationary_distribution
from .errors import ParameterError, StructuralError

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

MODES = ("markov_single", "markov_double", "iid")


def mix64(x):
    """SplitMix64 output finalizer; a bijection on 64-bit words. Accepts ints or uint64 arrays."""
    if isinstance(x, (int, np.integer)):
        z = int(x) & MASK64
        z = ((z ^ (z >> 30)) * int(_M1)) & MASK64
        z = ((z ^ (z >> 27)) * int(_M2)) & MASK64
        return z ^ (z >> 31)
    z = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, count: int) -> list[int]:
    out, x = [], seed & MASK64
    for _ in range(count):
        x = (x + GOLDEN) & MASK64
        out.append(mix64(x))
    return out


def seed_split(seed: int, run_index: int) -> tuple[int, int]:
    """Two stream seeds (primary chain, second chain) for one run.

    For a fixed ``seed`` the outputs are distinct for every ``(run_index, chain)``
    pair, since ``key + GOLDEN * k`` is injective in ``k`` and ``mix64`` is a bijection.
    """
    key = mix64(seed + GOLDEN)
    k0 = 2 * run_index + 1
    return mix64(key + GOLDEN * k0), mix64(key + GOLDEN * (k0 + 1))


def seed_split_many(seeds, run_indices, chain_id: int) -> np.ndarray:
    """Vectorized ``seed_split(seed, run_index)[chain_id]`` over uint64 arrays."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    idx = np.asarray(run_indices, dtype=np.uint64)
    g = np.uint64(GOLDEN)
    with np.errstate(over="ignore"):
        key = mix64(seeds + g)
        k = np.uint64(2) * idx + np.uint64(1 + chain_id)
        return mix64(key + g * k)


def stream_rng(stream_seed: int) -> np.random.Generator:
    s = splitmix64(stream_seed, 4)
    bg = np.random.PCG64()
    bg.state = {
        "bit_generator": "PCG64",
        "state": {"state": (s[0] << 64) | s[1], "inc": ((s[2] << 64) | s[3]) | 1},
        "has_uint32": 0,
        "uinteger": 0,
    }
    return np.random.Generator(bg)


def row_cdf(P: np.ndarray) -> np.ndarray:
    """Cumulative rows with the tail pinned to exactly 1 from the last positive entry on."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    dev = np.abs(P.sum(axis=1) - 1.0)
    if np.any(dev > ROW_SUM_TOL) or np.any(P < 0):
        raise StructuralError(f"transition rows are not normalized (max deviation {dev.max():.3e})")
    cdf = np.cumsum(P, axis=1)
    for i, row in enumerate(P):
        cdf[i, np.flatnonzero(row > 0)[-1]:] = 1.0
    return cdf


@dataclass(frozen=True)
class Transitions:
    s: np.ndarray
    s_next: np.ndarray
    s_hat: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.s)


class TrajectorySampler:
    """Draws ``(s, s')`` or ``(s, s', s_hat)`` samples from a chain.

    ``markov_single`` follows one chain; ``markov_double`` also advances an
    independent second chain whose current state is ``s_hat``; ``iid`` draws
    ``s ~ mu`` afresh each step, then ``s' ~ P(.|s)`` and an independent ``s_hat ~ mu``.
    The per-call and bulk interfaces consume the streams identically.
    """

    def __init__(self, chain: PolicyMarkovChain, mode: str, seed: int, run_index: int = 0,
                 mu: np.ndarray | None = None, start_state: int = 0):
        if mode not in MODES:
            raise ParameterError(f"unknown sampling mode {mode!r}; expected one of {MODES}")
        if not 0 <= start_state < chain.n:
            raise ParameterError(f"start state {start_state} out of range")
        self.mode = mode
        self.cdf = row_cdf(chain.P)
        if mode == "iid":
            mu = stationary_distribution(chain) if mu is None else np.asarray(mu, dtype=float)
            self.mu_cdf = row_cdf(mu)[0]
        seed_a, seed_b = seed_split(seed, run_index)
        self.rng = stream_rng(seed_a)
        self.rng_hat = stream_rng(seed_b)
        self.state = start_state
        self.state_hat = start_state

    @staticmethod
    def _draw(cdf_row: np.ndarray, u: float) -> int:
        return int(np.searchsorted(cdf_row, u))

    def next_transition(self) -> tuple[int, ...]:
        if self.mode == "iid":
            s = self._draw(self.mu_cdf, self.rng.random())
            s_next = self._draw(self.cdf[s], self.rng.random())
            s_hat = self._draw(self.mu_cdf, self.rng_hat.random())
            return s, s_next, s_hat
        s = self.state
        self.state = self._draw(self.cdf[s], self.rng.random())
        if self.mode == "markov_single":
            return s, self.state
        s_hat = self.state_hat
        self.state_hat = self._draw(self.cdf[s_hat], self.rng_hat.random())
        return s, self.state, s_hat

    def sample(self, T: int) -> Transitions:
        """Next ``T`` transitions as arrays."""
        if self.mode == "iid":
            u = self.rng.random(2 * T).reshape(T, 2)
            s = np.searchsorted(self.mu_cdf, u[:, 0]).astype(np.int64)
            s_next = _kernels.draw_rows(self.cdf, s, u[:, 1])
            s_hat = np.searchsorted(self.mu_cdf, self.rng_hat.random(T)).astype(np.int64)
            return Transitions(s, s_next, s_hat)
        path = _kernels.markov_path(self.cdf, self.state, self.rng.random(T))
        self.state = int(path[-1])
        s_hat = None
        if self.mode == "markov_double":
            hat = _kernels.markov_path(self.cdf, self.state_hat, self.rng_hat.random(T))
            self.state_hat = int(hat[-1])
            s_hat = hat[:-1]
        return Transitions(path[:-1], path[1:], s_hat)
