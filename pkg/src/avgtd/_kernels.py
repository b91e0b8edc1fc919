"""Compiled inner loops for trajectory sampling and learner runs.

These mirror the per-step functions in ``sampling`` and ``td`` exactly; the
Python versions are the reference and the tests check agreement.
"""
import numpy as np
from numba import njit

# radial projections land a hair inside the ball so ||x|| <= R survives any norm rounding
SHRINK = 1.0 - 1e-14


@njit(cache=True)
def markov_path(cdf, start, u):
    out = np.empty(u.shape[0] + 1, dtype=np.int64)
    s = start
    out[0] = s
    for t in range(u.shape[0]):
        s = np.searchsorted(cdf[s], u[t])
        out[t + 1] = s
    return out


@njit(cache=True)
def draw_rows(cdf, states, u):
    out = np.empty(states.shape[0], dtype=np.int64)
    for t in range(states.shape[0]):
        out[t] = np.searchsorted(cdf[states[t]], u[t])
    return out


@njit(cache=True)
def _dot(a, b):
    acc = 0.0
    for i in range(a.shape[0]):
        acc += a[i] * b[i]
    return acc


@njit(cache=True)
def _finite(x):
    for i in range(x.shape[0]):
        if not np.isfinite(x[i]):
            return False
    return True


@njit(cache=True)
def _project(x, radius):
    nrm = np.sqrt(_dot(x, x))
    if nrm > radius:
        scale = radius * SHRINK / nrm
        for i in range(x.shape[0]):
            x[i] *= scale


@njit(cache=True)
def run_double_chain(phi, R, s, s_next, s_hat, alpha, theta0, log_t):
    d = phi.shape[1]
    K = log_t.shape[0]
    out = np.zeros((K, d))
    theta = theta0.copy()
    k = 0
    while k < K and log_t[k] == 0:
        out[k] = theta
        k += 1
    for t in range(s.shape[0]):
        ps = phi[s[t]]
        r = R[s[t]]
        v_s = _dot(ps, theta)
        v_n = _dot(phi[s_next[t]], theta)
        ph = phi[s_hat[t]]
        a = alpha[t]
        cf = -(r + v_s)
        cg = r + v_n - v_s
        for i in range(d):
            theta[i] += a * (cf * ph[i] + cg * ps[i])
        if not _finite(theta):
            return out, k, t + 1
        while k < K and log_t[k] == t + 1:
            out[k] = theta
            k += 1
    return out, k, -1


@njit(cache=True)
def run_single_chain(phi, R, s, s_next, alpha, beta, theta0, w0, r_theta, r_w, log_t):
    d = phi.shape[1]
    K = log_t.shape[0]
    out = np.zeros((K, d))
    out_w = np.zeros((K, d))
    theta = theta0.copy()
    w = w0.copy()
    k = 0
    while k < K and log_t[k] == 0:
        out[k] = theta
        out_w[k] = w
        k += 1
    for t in range(s.shape[0]):
        ps = phi[s[t]]
        r = R[s[t]]
        v_s = _dot(ps, theta)
        v_n = _dot(phi[s_next[t]], theta)
        a = alpha[t]
        b = beta[t]
        cg = r + v_n - v_s
        cf = r + v_s
        for i in range(d):
            theta[i] += a * (cg * ps[i] - cf * w[i])
        for i in range(d):
            w[i] += b * (ps[i] - w[i])
        _project(w, r_w)
        _project(theta, r_theta)
        if not (_finite(theta) and _finite(w)):
            return out, out_w, k, t + 1
        while k < K and log_t[k] == t + 1:
            out[k] = theta
            out_w[k] = w
            k += 1
    return out, out_w, k, -1


@njit(cache=True)
def run_baseline(phi, R, s, s_next, alpha, theta0, g0, log_t):
    d = phi.shape[1]
    K = log_t.shape[0]
    out = np.zeros((K, d))
    out_g = np.zeros(K)
    theta = theta0.copy()
    g = g0
    k = 0
    while k < K and log_t[k] == 0:
        out[k] = theta
        out_g[k] = g
        k += 1
    for t in range(s.shape[0]):
        ps = phi[s[t]]
        r = R[s[t]]
        a = alpha[t]
        delta = r - g + _dot(phi[s_next[t]], theta) - _dot(ps, theta)
        g += a * (r - g)
        for i in range(d):
            theta[i] += a * delta * ps[i]
        if not (_finite(theta) and np.isfinite(g)):
            return out, out_g, k, t + 1
        while k < K and log_t[k] == t + 1:
            out[k] = theta
            out_g[k] = g
            k += 1
    return out, out_g, k, -1


@njit(cache=True)
def run_mean_field(A, b, alpha, theta0, log_t):
    """Noiseless recursion ``theta <- theta + alpha_t (b - A theta)``."""
    d = A.shape[0]
    K = log_t.shape[0]
    out = np.zeros((K, d))
    theta = theta0.copy()
    h = np.empty(d)
    k = 0
    while k < K and log_t[k] == 0:
        out[k] = theta
        k += 1
    for t in range(alpha.shape[0]):
        for i in range(d):
            h[i] = b[i] - _dot(A[i], theta)
        for i in range(d):
            theta[i] += alpha[t] * h[i]
        if not _finite(theta):
            return out, k, t + 1
        while k < K and log_t[k] == t + 1:
            out[k] = theta
            k += 1
    return out, k, -1
