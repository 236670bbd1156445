from typing import Any, Dict, Union

import numpy as np
import jax
import jax.numpy as jnp
from absl import logging

jax.config.update("jax_enable_x64", True)

Array = Union[np.ndarray, jnp.ndarray]

V_FLOOR = 1e-12
SEAM_TOL = 1e-9
ATANH_CLAMP = 1.0 - 1e-12
L_FLOOR = 1e-9


## Errors


class STCError(Exception):
    pass


class DomainError(STCError, ValueError):
    pass


class InfeasibleCertificateError(STCError):
    pass


class OutOfRegionError(STCError):
    pass


class NonFiniteStateError(STCError, FloatingPointError):
    pass


class BankMismatchError(STCError):
    pass


## Helpers


def PRNGKey(seed: int):
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return jax.device_put(
        np.array((seed >> 32, seed & 0xFFFFFFFF), dtype=np.uint32)
    )


def lyapunov_value(p_matrix: Array, x: Array) -> float:
    """V(x) = x^T P x for a single state vector."""
    x = np.asarray(x, dtype=np.float64)
    return float(x @ np.asarray(p_matrix) @ x)


def alpha_w(theta: float, w: Union[float, Array]) -> float:
    w = np.atleast_1d(np.asarray(w, dtype=np.float64))
    return float(theta**2 * np.dot(w, w))


def as_matrix(rows: Any, name: str = "matrix") -> np.ndarray:
    out = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if out.ndim != 2:
        raise DomainError(f"{name} must be two-dimensional, got shape {out.shape}")
    return out


def is_positive_definite(matrix: Array) -> bool:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] != matrix.shape[1]:
        return False
    if not np.allclose(matrix, matrix.T, rtol=0.0, atol=1e-12):
        return False
    return bool(np.all(np.linalg.eigvalsh(matrix) > 0.0))


def log_info(writer, step: int, info: Dict[str, float], prefix: str):
    if writer is None:
        msg = " ".join(f"{prefix}/{k}={float(v):.6g}" for k, v in info.items())
        logging.debug("step %d %s", step, msg)
    else:
        for k, v in info.items():
            if np.ndim(v) == 0:
                writer.add_scalar(f"{prefix}/{k}", float(v), step)
            else:
                writer.add_histogram(f"{prefix}/{k}", np.asarray(v), step)
