"""Closed loops f(x, e, w) with held state x_hat = x + e.

All dynamics are batched over leading axes: x (..., n_x), e (..., n_e),
w (..., n_w).
"""

import abc

import numpy as np

from common import Array, DomainError, as_matrix


class NonlinearSystem(abc.ABC):
    n_x: int
    n_e: int
    n_w: int
    name: str = ""

    @abc.abstractmethod
    def dynamics(self, x: Array, e: Array, w: Array) -> np.ndarray:
        """x_dot = f(x, e, w); the sampling error obeys e_dot = -f."""

    def __call__(self, x: Array, e: Array, w: Array) -> np.ndarray:
        return self.dynamics(
            np.asarray(x, dtype=np.float64),
            np.asarray(e, dtype=np.float64),
            np.asarray(w, dtype=np.float64),
        )


class Example1System(NonlinearSystem):
    """Single-link arm x1_ddot = -a sin x1 + b u + w with the linearizing
    controller u = (a sin x1_hat - x1_hat - x2_hat) / b."""

    n_x = 2
    n_e = 2
    n_w = 1
    name = "example1"

    def __init__(self, a: float = 9.81 / 2.0, b: float = 2.0):
        if b == 0.0:
            raise DomainError("b must be nonzero")
        self.a = float(a)
        self.b = float(b)

    def control(self, x_hat: np.ndarray) -> np.ndarray:
        return (self.a * np.sin(x_hat[..., 0]) - x_hat[..., 0] - x_hat[..., 1]) / self.b

    def dynamics(self, x, e, w):
        x_hat = x + e
        x1_dot = x[..., 1]
        x2_dot = -self.a * np.sin(x[..., 0]) + self.b * self.control(x_hat) + w[..., 0]
        return np.stack([x1_dot, x2_dot], axis=-1)


class Example2System(NonlinearSystem):
    """x1_dot = -x1, x2_dot = |x|^2 x2 + u + w with u = -(1 + |x_hat|^2) x2_hat."""

    n_x = 2
    n_e = 2
    n_w = 1
    name = "example2"

    def control(self, x_hat: np.ndarray) -> np.ndarray:
        return -(1.0 + np.sum(x_hat**2, axis=-1)) * x_hat[..., 1]

    def dynamics(self, x, e, w):
        x_hat = x + e
        x1_dot = -x[..., 0]
        x2_dot = np.sum(x**2, axis=-1) * x[..., 1] + self.control(x_hat) + w[..., 0]
        return np.stack([x1_dot, x2_dot], axis=-1)


class LinearSystem(NonlinearSystem):
    name = "linear"

    def __init__(self, a_matrix: Array, b_matrix: Array, e_matrix: Array):
        self.a_matrix = as_matrix(a_matrix, "A")
        self.b_matrix = as_matrix(b_matrix, "B")
        self.e_matrix = as_matrix(e_matrix, "E")
        self.n_x = self.a_matrix.shape[0]
        self.n_e = self.b_matrix.shape[1]
        self.n_w = self.e_matrix.shape[1]
        if (
            self.a_matrix.shape != (self.n_x, self.n_x)
            or self.b_matrix.shape[0] != self.n_x
            or self.e_matrix.shape[0] != self.n_x
        ):
            raise DomainError("inconsistent linear system matrices")

    def dynamics(self, x, e, w):
        return x @ self.a_matrix.T + e @ self.b_matrix.T + w @ self.e_matrix.T


def get_system(config) -> NonlinearSystem:
    if config.system == "example1":
        return Example1System(config.a, config.b)
    elif config.system == "example2":
        return Example2System()
    elif config.system == "linear":
        return LinearSystem(config.a_matrix, config.b_matrix, config.e_matrix)
    raise DomainError(f"unknown system {config.system!r}")
