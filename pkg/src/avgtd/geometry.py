"""Weighted norms, projections, contraction factor and condition numbers.

All quadratic-form extrema are evaluated through symmetric parts, so that the
smallest (largest) eigenvalue is exactly the constrained minimum (maximum).
Constrained problems are reduced to dense symmetric eigenproblems on an explicit
orthonormal basis of the constraint subspace.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import null_space

from .chain import PolicyMarkovChain
from .errors import ParameterError, StructuralError

RANK_RTOL = 1e-10
ROW_NORM_TOL = 1e-12


def numerical_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> int:
    s = np.linalg.svd(np.atleast_2d(A), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass(frozen=True)
class FeatureMap:
    """Feature matrix with rows ``phi(s)`` of Euclidean norm at most one and independent columns."""

    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 2:
            raise ParameterError(f"phi must be 2-D, got shape {phi.shape}")
        n, d = phi.shape
        if d < 1 or d > n:
            raise ParameterError(f"need 1 <= d <= n, got n={n}, d={d}")
        row_max = np.linalg.norm(phi, axis=1).max()
        if row_max > 1.0 + ROW_NORM_TOL:
            raise ParameterError(f"feature rows must have norm <= 1, max is {row_max}")
        if numerical_rank(phi) < d:
            raise StructuralError("feature columns are linearly dependent")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @property
    def d(self) -> int:
        return self.phi.shape[1]

    @classmethod
    def tabular(cls, n: int) -> "FeatureMap":
        return cls(np.eye(n))

    @classmethod
    def normalized(cls, phi) -> "FeatureMap":
        """Rescale all rows by one common factor so the largest row has norm one."""
        phi = np.asarray(phi, dtype=float)
        return cls(phi / np.linalg.norm(phi, axis=1).max())


@dataclass(frozen=True)
class SpectralReport:
    eta1: float
    eta2: float | None
    eta3: float
    eta_prime: float
    omega: float
    R_w: float | None = None
    R_theta: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _phi(features) -> np.ndarray:
    return features.phi if isinstance(features, FeatureMap) else np.atleast_2d(np.asarray(features, float))


def _check_mu(mu, n: int) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (n,):
        raise ParameterError(f"mu has shape {mu.shape}, expected ({n},)")
    return mu


def _sym(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.T)


def d_norm(f, mu) -> float:
    f = np.asarray(f, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if f.shape != mu.shape:
        raise ParameterError(f"length mismatch: f {f.shape} vs mu {mu.shape}")
    return float(np.sqrt(np.sum(mu * f * f)))


def dirichlet_matrix(chain: PolicyMarkovChain, mu) -> np.ndarray:
    """``D (I - P)``; its quadratic form is the squared Dirichlet seminorm."""
    mu = _check_mu(mu, chain.n)
    return mu[:, None] * (np.eye(chain.n) - chain.P)


def dirichlet_seminorm(f, chain: PolicyMarkovChain, mu, method: str = "pairwise") -> float:
    """Dirichlet seminorm of ``f``.

    ``pairwise`` sums ``mu(s) P(s'|s) (f(s) - f(s'))^2 / 2`` directly;
    ``quadratic`` evaluates ``f^T D (I - P) f`` (equal when ``mu`` is stationary).
    """
    f = np.asarray(f, dtype=float)
    mu = _check_mu(mu, chain.n)
    if f.shape != (chain.n,):
        raise ParameterError(f"f has shape {f.shape}, expected ({chain.n},)")
    if method == "pairwise":
        diff = f[:, None] - f[None, :]
        sq = 0.5 * np.sum(mu[:, None] * chain.P * diff * diff)
    elif method == "quadratic":
        sq = f @ dirichlet_matrix(chain, mu) @ f
    else:
        raise ParameterError(f"unknown method {method!r}")
    return float(np.sqrt(max(sq, 0.0)))


def pi_projection(n: int, mu) -> np.ndarray:
    """Centering projection ``I - e mu^T``."""
    mu = _check_mu(mu, n)
    return np.eye(n) - np.outer(np.ones(n), mu)


def d_projection(features, mu) -> np.ndarray:
    """``Phi (Phi^T D Phi)^{-1} Phi^T D``, the D-orthogonal projection onto span(Phi)."""
    phi = _phi(features)
    mu = _check_mu(mu, phi.shape[0])
    PhiD = phi.T * mu
    return phi @ np.linalg.solve(PhiD @ phi, PhiD)


def _require_full_rank(phi: np.ndarray) -> None:
    if numerical_rank(phi) < phi.shape[1]:
        raise StructuralError("feature matrix is rank deficient")


def eta1(features, chain: PolicyMarkovChain, mu) -> float:
    """``min_{|x|=1} ||Phi x||_Dir^2 + (mu^T Phi x)^2``."""
    phi = _phi(features)
    _require_full_rank(phi)
    v = phi.T @ _check_mu(mu, chain.n)
    M = _sym(phi.T @ dirichlet_matrix(chain, mu) @ phi) + np.outer(v, v)
    return float(np.linalg.eigvalsh(M)[0])


def eta2(features, chain: PolicyMarkovChain, mu) -> float:
    """``min ||Phi x||_Dir^2`` over unit ``x`` in R^d with entries summing to zero."""
    phi = _phi(features)
    d = phi.shape[1]
    if d < 2:
        raise ParameterError("eta2 needs d >= 2")
    B = null_space(np.ones((1, d)))
    M = B.T @ _sym(phi.T @ dirichlet_matrix(chain, mu) @ phi) @ B
    return float(np.linalg.eigvalsh(M)[0])


def centered_d_basis(mu) -> np.ndarray:
    """Columns form a D-orthonormal basis of ``{y : mu^T y = 0}``."""
    mu = np.asarray(mu, dtype=float)
    root = np.sqrt(mu)
    return null_space(root[None, :]) / root[:, None]


def spectral_gap(chain: PolicyMarkovChain, mu) -> float:
    """``min y^T D(I-P) y`` over ``mu^T y = 0``, ``||y||_D = 1``."""
    Y = centered_d_basis(mu)
    if Y.shape[1] == 0:
        return 0.0
    M = Y.T @ _sym(dirichlet_matrix(chain, mu)) @ Y
    return float(np.linalg.eigvalsh(M)[0])


def eta_prime(features, mu) -> float:
    """Smallest eigenvalue of ``Phi^T D Phi``."""
    phi = _phi(features)
    mu = _check_mu(mu, phi.shape[0])
    return float(np.linalg.eigvalsh((phi.T * mu) @ phi)[0])


def eta3(features, chain: PolicyMarkovChain, mu) -> float:
    phi = _phi(features)
    _require_full_rank(phi)
    return eta_prime(phi, mu) * spectral_gap(chain, mu)


def contraction_factor(chain: PolicyMarkovChain, mu) -> float:
    """D-norm contraction modulus of ``Pi T`` on the centered subspace."""
    mu = _check_mu(mu, chain.n)
    Y = centered_d_basis(mu)
    if Y.shape[1] == 0:
        return 0.0
    PY = chain.P @ Y
    M = (PY.T * mu) @ PY
    top = float(np.linalg.eigvalsh(_sym(M))[-1])
    return float(np.sqrt(max(top, 0.0)))


def projection_radii(chain: PolicyMarkovChain, mu, features, mix_C: float, mix_beta: float,
                     omega: float) -> tuple[float, float]:
    """Ball radii ``(R_w, R_theta)`` guaranteed to contain ``w* = Phi^T mu`` and ``theta*``."""
    if not 0.0 <= omega < 1.0:
        raise StructuralError(f"contraction factor must be < 1, got {omega}")
    if not 0.0 <= mix_beta < 1.0:
        raise ParameterError(f"mixing rate must lie in [0, 1), got {mix_beta}")
    lam = eta_prime(features, mu)
    if lam <= 0.0:
        raise StructuralError("Phi^T D Phi is singular")
    R_theta = 2.0 * chain.r_max * mix_C / ((1.0 - mix_beta) * np.sqrt((1.0 - omega**2) * lam))
    return 1.0, float(R_theta)


def spectral_report(features, chain: PolicyMarkovChain, analysis) -> SpectralReport:
    mu = analysis.mu
    phi = _phi(features)
    omega = contraction_factor(chain, mu)
    R_w, R_theta = projection_radii(chain, mu, phi, analysis.mix_C, analysis.mix_beta, omega)
    return SpectralReport(
        eta1=eta1(phi, chain, mu),
        eta2=eta2(phi, chain, mu) if phi.shape[1] >= 2 else None,
        eta3=eta3(phi, chain, mu),
        eta_prime=eta_prime(phi, mu),
        omega=omega,
        R_w=R_w,
        R_theta=R_theta,
    )
