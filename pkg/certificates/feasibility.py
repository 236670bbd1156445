"""Vertex eigenvalue feasibility of the dissipation inequality

    2 x^T P f <= -eps V(x) - |A x + E w|^2 + gamma^2 |e|^2 + theta^2 |w|^2

for every vertex (A, B, E), plus bisection on gamma and a small P search.
"""

from functools import partial
from typing import Optional, Sequence, Tuple

import numpy as np
import jax
import jax.numpy as jnp
from absl import logging

import common  # noqa: F401  (enables float64 in jax)
from common import L_FLOOR, Array, DomainError, InfeasibleCertificateError
from certificates.embeddings import PolytopicEmbedding
from mati import mati

GAMMA_LO = 1e-6
GAMMA_HI = 1e6
GAMMA_TOL = 1e-6


def _dissipation_matrix(a, b, e, p, epsilon, gamma, theta):
    n_e, n_w = b.shape[1], e.shape[1]
    xx = a.T @ p + p @ a + epsilon * p + a.T @ a
    xe = p @ b
    xw = p @ e + a.T @ e
    ee = -(gamma**2) * jnp.eye(n_e)
    ew = jnp.zeros((n_e, n_w))
    ww = e.T @ e - theta**2 * jnp.eye(n_w)
    m = jnp.block([[xx, xe, xw], [xe.T, ee, ew], [xw.T, ew.T, ww]])
    return 0.5 * (m + m.T)


@jax.jit
def _max_eigenvalue(a, b, e, p, epsilon, gamma, theta):
    def vertex(a_v, b_v, e_v):
        m = _dissipation_matrix(a_v, b_v, e_v, p, epsilon, gamma, theta)
        return jnp.linalg.eigvalsh(m)[-1]

    return jnp.max(jax.vmap(vertex)(a, b, e))


def _n_bisection_steps(lo: float, hi: float, tol: float) -> int:
    return int(np.ceil(np.log2(np.log(hi / lo) / np.log1p(tol)))) + 1


@partial(jax.jit, static_argnames=("n_iter",))
def _bisect_gamma(a, b, e, p, epsilon, theta, log_lo, log_hi, n_iter):
    def feasible(log_gamma):
        return _max_eigenvalue(a, b, e, p, epsilon, jnp.exp(log_gamma), theta) <= 0.0

    def body(_, bounds):
        lo, hi = bounds
        mid = 0.5 * (lo + hi)
        ok = feasible(mid)
        return jnp.where(ok, lo, mid), jnp.where(ok, mid, hi)

    _, hi = jax.lax.fori_loop(0, n_iter, body, (log_lo, log_hi))
    gamma = jnp.where(feasible(log_lo), jnp.exp(log_lo), jnp.exp(hi))
    return jnp.where(feasible(log_hi), gamma, jnp.nan)


def _check_dims(embedding: PolytopicEmbedding, p_matrix: Array) -> np.ndarray:
    p_matrix = np.asarray(p_matrix, dtype=np.float64)
    if p_matrix.shape != (embedding.n_x, embedding.n_x):
        raise DomainError(
            f"P has shape {p_matrix.shape}, embedding needs "
            f"({embedding.n_x}, {embedding.n_x})"
        )
    return p_matrix


def compute_l_gain(embedding: PolytopicEmbedding) -> float:
    """L = max_vertex ||B||_2, so |f| <= L |e| + |A x + E w|."""
    norms = [np.linalg.norm(b, ord=2) for b in embedding.b_matrices]
    return float(max(max(norms), L_FLOOR))


def max_eigenvalue(
    embedding: PolytopicEmbedding,
    p_matrix: Array,
    epsilon: float,
    gamma: float,
    theta: float,
) -> float:
    p_matrix = _check_dims(embedding, p_matrix)
    return float(
        _max_eigenvalue(
            embedding.a_matrices,
            embedding.b_matrices,
            embedding.e_matrices,
            p_matrix,
            float(epsilon),
            float(gamma),
            float(theta),
        )
    )


def feasibility_check(
    embedding: PolytopicEmbedding,
    p_matrix: Array,
    epsilon: float,
    gamma: float,
    theta: float,
) -> bool:
    return max_eigenvalue(embedding, p_matrix, epsilon, gamma, theta) <= 0.0


def _polish(embedding, p_matrix, epsilon, gamma, theta, tol, hi=GAMMA_HI):
    # the jitted loop and the standalone check compile separately; step up
    # until the standalone check agrees
    while not feasibility_check(embedding, p_matrix, epsilon, gamma, theta):
        gamma *= 1.0 + tol
        if gamma > hi:
            return None
    return gamma


def min_gamma_grid(
    embedding: PolytopicEmbedding,
    p_matrix: Array,
    epsilons: Sequence[float],
    theta: float,
    tol: float = GAMMA_TOL,
    gamma_lo: float = GAMMA_LO,
    gamma_hi: float = GAMMA_HI,
) -> np.ndarray:
    """Smallest feasible gamma for every epsilon; NaN where infeasible."""
    if tol <= 0.0:
        raise DomainError(f"tol must be positive, got {tol}")
    p_matrix = _check_dims(embedding, p_matrix)
    epsilons = np.asarray(epsilons, dtype=np.float64)
    if epsilons.size == 0:
        return np.empty(0)
    n_iter = _n_bisection_steps(gamma_lo, gamma_hi, tol)
    bisect = jax.vmap(
        partial(_bisect_gamma, n_iter=n_iter),
        in_axes=(None, None, None, None, 0, None, None, None),
    )
    gammas = np.asarray(
        bisect(
            embedding.a_matrices,
            embedding.b_matrices,
            embedding.e_matrices,
            p_matrix,
            epsilons,
            float(theta),
            np.log(gamma_lo),
            np.log(gamma_hi),
        )
    )
    out = np.full(epsilons.shape, np.nan)
    for i, (epsilon, gamma) in enumerate(zip(epsilons, gammas)):
        if np.isfinite(gamma):
            polished = _polish(embedding, p_matrix, epsilon, float(gamma), theta, tol, gamma_hi)
            out[i] = np.nan if polished is None else polished
    return out


def min_gamma(
    embedding: PolytopicEmbedding,
    p_matrix: Array,
    epsilon: float,
    theta: float,
    tol: float = GAMMA_TOL,
) -> Optional[float]:
    """Bisection on [1e-6, 1e6]; None when even the upper bracket fails."""
    gamma = min_gamma_grid(embedding, p_matrix, [epsilon], theta, tol)[0]
    return None if np.isnan(gamma) else float(gamma)


## P search


def p_candidates(
    scales: Sequence[float],
    couplings: Sequence[float],
    ratios: Sequence[float],
) -> np.ndarray:
    """P = k [[1, c], [c, d]], keeping only the positive definite ones (c^2 < d)."""
    candidates = []
    for scale in scales:
        for ratio in ratios:
            for coupling in couplings:
                if coupling**2 >= ratio or scale <= 0.0:
                    continue
                candidates.append(
                    np.array([[scale, scale * coupling], [scale * coupling, scale * ratio]])
                )
    if not candidates:
        raise DomainError("the P grid holds no positive definite candidate")
    return np.stack(candidates)


def tune_p_matrix(
    embedding: PolytopicEmbedding,
    epsilon: float,
    theta: float,
    delta: float = 0.999,
    scales: Sequence[float] = (0.5, 1.0, 2.0, 4.0, 8.0),
    couplings: Sequence[float] = (-0.6, -0.4, -0.2, 0.0, 0.2, 0.3, 0.4, 0.6, 0.8),
    ratios: Sequence[float] = (0.5, 1.0, 1.5, 2.0, 3.0),
    tol: float = GAMMA_TOL,
) -> Tuple[np.ndarray, float, float]:
    """Grid search for the 2x2 P with the longest fall-back interval at epsilon.

    Returns (P, fall-back interval, gamma).
    """
    if embedding.n_x != 2:
        raise DomainError("tune_p_matrix searches 2x2 matrices only")
    if epsilon <= 0.0:
        raise DomainError("the fall-back epsilon must be positive")
    candidates = p_candidates(scales, couplings, ratios)
    n_iter = _n_bisection_steps(GAMMA_LO, GAMMA_HI, tol)
    bisect = jax.vmap(
        partial(_bisect_gamma, n_iter=n_iter),
        in_axes=(None, None, None, 0, None, None, None, None),
    )
    gammas = np.asarray(
        bisect(
            embedding.a_matrices,
            embedding.b_matrices,
            embedding.e_matrices,
            candidates,
            float(epsilon),
            float(theta),
            np.log(GAMMA_LO),
            np.log(GAMMA_HI),
        )
    )
    l_gain = compute_l_gain(embedding)
    lambda_cap = l_gain + epsilon / 2.0
    best = None
    for p_matrix, gamma in zip(candidates, gammas):
        if not np.isfinite(gamma):
            continue
        gamma = _polish(embedding, p_matrix, epsilon, float(gamma), theta, tol)
        if gamma is None:
            continue
        interval = delta * mati(gamma, lambda_cap)
        if best is None or interval > best[1]:
            best = (p_matrix, interval, gamma)
    if best is None:
        raise InfeasibleCertificateError(
            f"no P candidate certifies epsilon={epsilon} with theta={theta}"
        )
    logging.info(
        "tuned P=%s fall-back=%.6g s gamma=%.6g over %d candidates",
        best[0].tolist(),
        best[1],
        best[2],
        len(candidates),
    )
    return best
