"""Dynamic variables eta of the FIR, IIR and reference-function mechanisms."""

import numpy as np
import flax

from common import DomainError, alpha_w
from certificates.bank import ISS, RAS, CertificateBank

FIR = "fir"
IIR = "iir"
REF = "ref"
C_W_SLACK = 1e-9


@flax.struct.dataclass
class TriggerConfig:
    eps_ref: float
    delta: float = 0.999
    w_bar: float = 0.0
    c_w: float = 0.0
    c_max: float = np.inf
    variant: str = flax.struct.field(pytree_node=False, default=ISS)

    @classmethod
    def create(
        cls,
        eps_ref: float,
        delta: float = 0.999,
        variant: str = ISS,
        w_bar: float = 0.0,
        c_w: float = 0.0,
        c_max: float = np.inf,
    ) -> "TriggerConfig":
        if not eps_ref > 0.0:
            raise DomainError(f"eps_ref must be positive, got {eps_ref}")
        if not 0.0 < delta < 1.0:
            raise DomainError(f"delta must lie in (0, 1), got {delta}")
        if variant == RAS:
            if w_bar < 0.0:
                raise DomainError(f"w_bar must be nonnegative, got {w_bar}")
            if not 0.0 < c_w <= c_max < np.inf:
                raise DomainError(f"need 0 < c_w <= c_max < inf, got {c_w}, {c_max}")
        elif variant != ISS:
            raise DomainError(f"unknown variant {variant!r}")
        return cls(
            eps_ref=float(eps_ref),
            delta=float(delta),
            w_bar=float(w_bar),
            c_w=float(c_w),
            c_max=float(c_max),
            variant=variant,
        )

    def disturbance_level(self, theta: float) -> float:
        """alpha_w(w_bar)."""
        return alpha_w(theta, self.w_bar) if self.variant == RAS else 0.0

    def check_bank(self, bank: CertificateBank):
        if self.variant != RAS:
            return
        alpha = self.disturbance_level(bank.theta)
        lower = max(alpha / level.fallback.epsilon for level in bank.levels)
        if self.c_w < lower * (1.0 - C_W_SLACK):
            raise DomainError(
                f"c_w={self.c_w} is below max alpha_w(w_bar)/eps_1 = {lower}"
            )
        if self.c_max > bank.c_values[-1] * (1.0 + C_W_SLACK):
            raise DomainError(
                f"c_max={self.c_max} exceeds the largest certified level "
                f"{bank.c_values[-1]}"
            )


@flax.struct.dataclass
class MechanismState:
    buffer: np.ndarray  # FIR: eta_1 .. eta_{m-1}
    eta: float = 0.0  # IIR / REF
    r1: float = 0.0
    r2: float = 0.0
    kind: str = flax.struct.field(pytree_node=False, default=REF)
    m: int = flax.struct.field(pytree_node=False, default=1)

    @classmethod
    def fir(cls, buffer) -> "MechanismState":
        buffer = np.asarray(buffer, dtype=np.float64).reshape(-1)
        if np.any(buffer < 0.0):
            raise DomainError("FIR buffer entries must be nonnegative")
        return cls(buffer=buffer, kind=FIR, m=buffer.size + 1)

    @classmethod
    def iir(cls, eta: float, r1: float, r2: float) -> "MechanismState":
        if not (r1 > 0.0 and r2 > 0.0 and r1 + r2 <= 1.0):
            raise DomainError(f"need r1, r2 > 0 and r1 + r2 <= 1, got {r1}, {r2}")
        _check_eta(eta)
        return cls(buffer=np.zeros(0), eta=float(eta), r1=float(r1), r2=float(r2), kind=IIR)

    @classmethod
    def ref(cls, eta: float) -> "MechanismState":
        _check_eta(eta)
        return cls(buffer=np.zeros(0), eta=float(eta), kind=REF)

    def snapshot(self) -> np.ndarray:
        return self.buffer.copy() if self.kind == FIR else np.array([self.eta])


def _check_eta(eta: float):
    if not eta >= 0.0:
        raise DomainError(f"eta must be nonnegative, got {eta}")


def init_mechanism(
    kind: str,
    v0: float,
    config: TriggerConfig,
    m: int = 21,
    r1: float = 0.9,
    r2: float = 0.1,
) -> MechanismState:
    """eta(0, 0): FIR buffer filled with V(x0), IIR eta = V(x0), REF eta =
    V(x0) (ISS) or V(x0) - c_w clipped to [0, c_max - c_w] (RAS)."""
    if kind == FIR:
        if m < 1:
            raise DomainError(f"FIR window m must be at least 1, got {m}")
        return MechanismState.fir(np.full(m - 1, v0))
    elif kind == IIR:
        return MechanismState.iir(v0, r1, r2)
    elif kind == REF:
        if config.variant == RAS:
            return MechanismState.ref(
                float(np.clip(v0 - config.c_w, 0.0, config.c_max - config.c_w))
            )
        return MechanismState.ref(v0)
    raise DomainError(f"unknown mechanism {kind!r}")


def c_value(state: MechanismState, v_of_x: float, config: TriggerConfig) -> float:
    """Target C(x, eta) for the Lyapunov decrease at the next sample."""
    if state.kind == FIR:
        c = (v_of_x + float(np.sum(state.buffer))) / state.m
    elif state.kind == IIR:
        c = state.eta
    elif state.kind == REF:
        return config.c_w + state.eta if config.variant == RAS else state.eta
    else:
        raise DomainError(f"unknown mechanism {state.kind!r}")
    if config.variant == RAS:
        c = min(max(c, config.c_w), config.c_max)
    return float(c)


def s_update(
    state: MechanismState, v_of_x: float, gamma_out: float, config: TriggerConfig
) -> MechanismState:
    """eta+ = S(eta, x), discounted by exp(-eps_ref Gamma)."""
    discount = np.exp(-config.eps_ref * gamma_out)
    if state.kind == FIR:
        shifted = np.concatenate([state.buffer, [v_of_x]])[1:]
        return state.replace(buffer=discount * shifted)
    elif state.kind == IIR:
        return state.replace(eta=float(discount * (state.r1 * state.eta + state.r2 * v_of_x)))
    elif state.kind == REF:
        return state.replace(eta=float(discount * state.eta))
    raise DomainError(f"unknown mechanism {state.kind!r}")
