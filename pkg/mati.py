"""Closed-form hybrid Lyapunov quantities: r, T_max, its lambda-dependent
variant, the phi Riccati solution and the hybrid Lyapunov function U."""

from typing import Optional, Sequence

import flax
import numpy as np
from scipy import integrate

from common import ATANH_CLAMP, SEAM_TOL, DomainError


@flax.struct.dataclass
class MatiParams:
    gamma: float
    lambda_cap: float
    lambda_small: float

    @classmethod
    def create(cls, gamma: float, lambda_cap: float, lambda_small: float):
        _check_positive(gamma=gamma, lambda_cap=lambda_cap)
        if not 0.0 < lambda_small < 1.0:
            raise DomainError(f"lambda_small must lie in (0, 1), got {lambda_small}")
        return cls(
            gamma=float(gamma),
            lambda_cap=float(lambda_cap),
            lambda_small=float(lambda_small),
        )


@flax.struct.dataclass
class FlowRateParams:
    epsilon: float
    l_gain: float

    @classmethod
    def create(cls, epsilon: float, l_gain: float):
        _check_positive(l_gain=l_gain)
        return cls(epsilon=float(epsilon), l_gain=float(l_gain))

    @property
    def lambda_cap(self) -> float:
        return self.l_gain + self.epsilon / 2.0

    def bound_rate(self, lambda_cap: float) -> float:
        """Exponent of the V bound along a flow, max(-eps, 2 (L - Lambda))."""
        return max(-self.epsilon, 2.0 * (self.l_gain - lambda_cap))


def _check_positive(**values):
    for name, value in values.items():
        if not np.isfinite(value) or value <= 0.0:
            raise DomainError(f"{name} must be positive and finite, got {value}")


def _on_seam(gamma: float, lambda_cap: float) -> bool:
    return abs(gamma / lambda_cap - 1.0) < SEAM_TOL


def coupling_ratio(gamma: float, lambda_cap: float) -> float:
    _check_positive(gamma=gamma, lambda_cap=lambda_cap)
    return float(np.sqrt(abs((gamma / lambda_cap) ** 2 - 1.0)))


def mati(gamma: float, lambda_cap: float) -> float:
    """Maximum allowable transmission interval T_max(gamma, Lambda)."""
    _check_positive(gamma=gamma, lambda_cap=lambda_cap)
    if _on_seam(gamma, lambda_cap):
        return 1.0 / lambda_cap
    r = coupling_ratio(gamma, lambda_cap)
    if gamma > lambda_cap:
        return float(np.arctan(r) / (lambda_cap * r))
    return float(np.arctanh(min(r, ATANH_CLAMP)) / (lambda_cap * r))


def mati_tilde(lambda_small: float, gamma: float, lambda_cap: float) -> float:
    """Time phi needs to travel from 1/lambda down to lambda."""
    params = MatiParams.create(gamma, lambda_cap, lambda_small)
    lam = params.lambda_small
    if _on_seam(gamma, lambda_cap):
        return (1.0 / lambda_cap) * (1.0 - lam) / (1.0 + lam)
    r = coupling_ratio(gamma, lambda_cap)
    denom = 2.0 * (lam / (1.0 + lam)) * (gamma / lambda_cap - 1.0) + 1.0 + lam
    arg = r * (1.0 - lam) / denom
    if gamma > lambda_cap:
        return float(np.arctan(arg) / (lambda_cap * r))
    arg = min(max(arg, 0.0), ATANH_CLAMP)
    return float(np.arctanh(arg) / (lambda_cap * r))


def phi_eval(tau: float, params: MatiParams) -> float:
    """Solution of phi' = -2 Lambda phi - gamma (phi^2 + 1), phi(0) = 1/lambda."""
    gamma, lambda_cap, lam = params.gamma, params.lambda_cap, params.lambda_small
    window = mati_tilde(lam, gamma, lambda_cap)
    if tau < 0.0 or tau > window * (1.0 + 1e-12):
        raise DomainError(f"tau={tau} outside the validity window [0, {window}]")
    phi0 = 1.0 / lam
    if _on_seam(gamma, lambda_cap):
        return float(1.0 / (1.0 / (phi0 + 1.0) + lambda_cap * tau) - 1.0)

    r = coupling_ratio(gamma, lambda_cap)
    rho = lambda_cap / gamma
    k = r * rho
    psi0 = phi0 + rho
    if gamma > lambda_cap:
        angle = np.arctan(psi0 / k) - r * lambda_cap * tau
        return float(k * np.tan(angle) - rho)
    # psi stays above k on this branch, so arccoth(psi / k) is finite
    u = np.arctanh(k / psi0) + r * lambda_cap * tau
    return float(k / np.tanh(u) - rho)


def hybrid_u(v_of_x: float, w_of_e: float, tau: float, params: MatiParams) -> float:
    phi = phi_eval(tau, params)
    if w_of_e == 0.0:
        return float(v_of_x)
    return float(v_of_x + params.gamma * phi * w_of_e**2)


## Numeric references


def _phi_rhs(phi: float, gamma: float, lambda_cap: float) -> float:
    return -2.0 * lambda_cap * phi - gamma * (phi**2 + 1.0)


def phi_rk4(tau: float, params: MatiParams, n_steps: int = 4000) -> float:
    """Fixed-step RK4 integration of the phi ODE, used as a reference."""
    gamma, lambda_cap = params.gamma, params.lambda_cap
    phi = 1.0 / params.lambda_small
    if tau == 0.0:
        return phi
    h = tau / n_steps
    for _ in range(n_steps):
        k1 = _phi_rhs(phi, gamma, lambda_cap)
        k2 = _phi_rhs(phi + 0.5 * h * k1, gamma, lambda_cap)
        k3 = _phi_rhs(phi + 0.5 * h * k2, gamma, lambda_cap)
        k4 = _phi_rhs(phi + h * k3, gamma, lambda_cap)
        phi += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return float(phi)


def transit_time(
    gamma: float,
    lambda_cap: float,
    phi_start: float = np.inf,
    phi_end: float = 0.0,
) -> float:
    """Quadrature of d(tau) = -d(phi) / (2 Lambda phi + gamma (phi^2 + 1)).

    With the defaults this is the blow-down time of phi from +inf to 0, i.e.
    T_max; with (1/lambda, lambda) it is the lambda-dependent window.
    """
    _check_positive(gamma=gamma, lambda_cap=lambda_cap)

    def integrand(phi):
        return 1.0 / (2.0 * lambda_cap * phi + gamma * (phi**2 + 1.0))

    split = max(phi_end, min(1.0, phi_start))
    head, _ = integrate.quad(integrand, phi_end, split, epsabs=1e-13, epsrel=1e-10)
    tail = 0.0
    if phi_start > split:
        tail, _ = integrate.quad(
            integrand, split, phi_start, epsabs=1e-13, epsrel=1e-10, limit=200
        )
    return float(head + tail)


def mati_surface(
    gammas: Sequence[float],
    lambdas: Sequence[float],
    delta: Optional[float] = None,
) -> np.ndarray:
    """T_max over a (gamma, Lambda) grid; rows follow gammas."""
    scale = 1.0 if delta is None else float(delta)
    table = np.empty((len(gammas), len(lambdas)), dtype=np.float64)
    for i, gamma in enumerate(gammas):
        for j, lambda_cap in enumerate(lambdas):
            table[i, j] = scale * mati(gamma, lambda_cap)
    return table
