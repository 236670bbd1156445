"""Monte-Carlo check of the certificate inequalities on the true vector field:

    |f(x, e, w)| <= L |e| + |A x + E w|
    2 x^T P f <= -eps V(x) - |A x + E w|^2 + gamma^2 |e|^2 + theta^2 |w|^2
"""

import dataclasses
from typing import Optional

import numpy as np
import jax
import jax.numpy as jnp
from absl import logging

from common import PRNGKey, BankMismatchError
from certificates.bank import CertificateBank
from certificates.embeddings import EmbeddingBuilder, PolytopicEmbedding
from dynamics.systems import NonlinearSystem

BOX_RADIUS = 2.0


@dataclasses.dataclass(frozen=True)
class VerificationReport:
    n_samples: int
    worst_w_est: float
    worst_v_desc: float
    n_violations: int
    passed: bool

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(
            n_samples=self.n_samples + other.n_samples,
            worst_w_est=min(self.worst_w_est, other.worst_w_est),
            worst_v_desc=min(self.worst_v_desc, other.worst_v_desc),
            n_violations=self.n_violations + other.n_violations,
            passed=self.passed and other.passed,
        )


def empty_report() -> VerificationReport:
    return VerificationReport(0, np.inf, np.inf, 0, True)


def _sample_ball(key, n: int, dim: int, radius: float) -> np.ndarray:
    dir_key, rad_key = jax.random.split(key)
    direction = jax.random.normal(dir_key, (n, dim))
    direction = direction / jnp.linalg.norm(direction, axis=-1, keepdims=True)
    u = jax.random.uniform(rad_key, (n, 1))
    return np.asarray(radius * u ** (1.0 / dim) * direction)


def _find_level(bank: CertificateBank, embedding: PolytopicEmbedding):
    if embedding.level_c is None:
        if not bank.is_global:
            raise BankMismatchError("a global embedding needs a global bank")
        return bank.levels[0]
    for level in bank.levels:
        if np.isclose(level.c, embedding.level_c, rtol=1e-12, atol=0.0):
            return level
    raise BankMismatchError(f"bank has no level c={embedding.level_c}")


def verify_pointwise(
    bank: CertificateBank,
    embedding: PolytopicEmbedding,
    system: NonlinearSystem,
    n_samples: int,
    seed: int = 0,
    w_range: float = 1.0,
    box_radius: float = BOX_RADIUS,
    tol: float = 1e-8,
) -> VerificationReport:
    """Samples x and x_hat in the embedding's region (a ball of box_radius
    for global embeddings) and w uniformly in [-w_range, w_range]."""
    if n_samples <= 0:
        return empty_report()
    bank.check_system(system.n_x)
    level = _find_level(bank, embedding)
    radius = embedding.state_radius if np.isfinite(embedding.state_radius) else box_radius

    x_key, xh_key, w_key = jax.random.split(PRNGKey(seed), 3)
    x = _sample_ball(x_key, n_samples, system.n_x, radius)
    x_hat = _sample_ball(xh_key, n_samples, system.n_x, radius)
    w = np.asarray(
        jax.random.uniform(
            w_key, (n_samples, system.n_w), minval=-w_range, maxval=w_range
        )
    )
    e = x_hat - x

    f = system(x, e, w)
    h = embedding.h_value(x, w)
    e_norm = np.linalg.norm(e, axis=-1)
    w_sq = np.sum(w**2, axis=-1)
    v = np.einsum("ni,ij,nj->n", x, bank.p_matrix, x)
    power = 2.0 * np.einsum("ni,ij,nj->n", x, bank.p_matrix, f)

    worst_w_est, worst_v_desc = np.inf, np.inf
    n_violations = 0
    for params in level.sets:
        w_est = params.l_gain * e_norm + h - np.linalg.norm(f, axis=-1)
        v_desc = (
            -params.epsilon * v
            - h**2
            + params.gamma**2 * e_norm**2
            + bank.theta**2 * w_sq
            - power
        )
        scale = 1.0 + np.abs(params.epsilon * v) + h**2 + params.gamma**2 * e_norm**2
        n_violations += int(np.sum(w_est < -tol * (1.0 + h + params.l_gain * e_norm)))
        n_violations += int(np.sum(v_desc < -tol * scale))
        worst_w_est = min(worst_w_est, float(np.min(w_est)))
        worst_v_desc = min(worst_v_desc, float(np.min(v_desc)))

    if n_violations:
        logging.warning(
            "%s: %d violated samples (worst margins %.3g, %.3g)",
            embedding.name,
            n_violations,
            worst_w_est,
            worst_v_desc,
        )
    return VerificationReport(
        n_samples=n_samples,
        worst_w_est=worst_w_est,
        worst_v_desc=worst_v_desc,
        n_violations=n_violations,
        passed=n_violations == 0,
    )


def verify_bank(
    bank: CertificateBank,
    embedding_builder: EmbeddingBuilder,
    system: NonlinearSystem,
    n_samples: int,
    seed: int = 0,
    w_range: float = 1.0,
) -> VerificationReport:
    report = empty_report()
    for index, level in enumerate(bank.levels):
        c: Optional[float] = None if np.isinf(level.c) else level.c
        report = report.merge(
            verify_pointwise(
                bank,
                embedding_builder(c),
                system,
                n_samples,
                seed=seed + index,
                w_range=w_range,
            )
        )
    return report
