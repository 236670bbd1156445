"""Next sampling interval Gamma(x, eta) from a certificate bank."""

import numpy as np
import flax

from common import V_FLOOR, BankMismatchError
from certificates.bank import RAS, CertificateBank, LevelCertificate
from mati import mati
from triggering.mechanisms import TriggerConfig


@flax.struct.dataclass
class TriggerDecision:
    interval: float
    set_index: int  # 0 is the fall-back set
    level: int
    epsilon: float
    gamma: float
    l_gain: float
    lambda_cap: float
    c: float
    v: float

    @property
    def fallback(self) -> bool:
        return self.set_index == 0


def fallback_period(bank: CertificateBank, level: int = 0, delta: float = 0.999) -> float:
    first = bank.levels[level].fallback
    return delta * mati(first.gamma, first.flow.lambda_cap)


def min_dwell_time(bank: CertificateBank, config: TriggerConfig) -> float:
    """Smallest fall-back interval over all levels."""
    return min(
        fallback_period(bank, level, config.delta) for level in range(len(bank.levels))
    )


def _decide_level(
    v: float,
    c: float,
    certificate: LevelCertificate,
    level: int,
    config: TriggerConfig,
    alpha: float,
) -> TriggerDecision:
    first = certificate.fallback
    lambda_cap = first.flow.lambda_cap
    best = TriggerDecision(
        interval=config.delta * mati(first.gamma, lambda_cap),
        set_index=0,
        level=level,
        epsilon=first.epsilon,
        gamma=first.gamma,
        l_gain=first.l_gain,
        lambda_cap=lambda_cap,
        c=c,
        v=v,
    )
    for index, params in enumerate(certificate.sets[1:], start=1):
        if config.variant == RAS and params.epsilon >= 0.0:
            raise BankMismatchError(
                f"RAS banks need eps < 0 behind the fall-back, level {level} "
                f"set {index} has eps={params.epsilon}"
            )
        lambda_i = max(params.flow.lambda_cap, 1.0 - config.delta)
        cap = config.delta * mati(params.gamma, lambda_i)
        shift = alpha / params.epsilon if alpha != 0.0 else 0.0
        rate = -params.epsilon + config.eps_ref
        if c < v:
            h = 0.0
        elif v - shift < V_FLOOR:
            h = cap
        elif rate > 0.0:
            h = min(cap, np.log((c - shift) / (v - shift)) / rate)
        else:
            h = cap
        # strict comparison keeps the smallest index on ties
        if h > best.interval:
            best = best.replace(
                interval=float(h),
                set_index=index,
                epsilon=params.epsilon,
                gamma=params.gamma,
                l_gain=params.l_gain,
                lambda_cap=lambda_i,
            )
    return best


def gamma_iss(v: float, c: float, bank: CertificateBank, config: TriggerConfig) -> float:
    if len(bank.levels) != 1:
        raise BankMismatchError("the ISS variant needs a single-level bank")
    return _decide_level(v, c, bank.levels[0], 0, config, 0.0).interval


def gamma_ras(v: float, c: float, bank: CertificateBank, config: TriggerConfig):
    """Returns (interval, level) for the smallest level with c_l >= max(v, c)."""
    decision = _decide_ras(v, c, bank, config)
    return decision.interval, decision.level


def _decide_ras(v, c, bank, config) -> TriggerDecision:
    level = bank.level_index(max(v, c))
    alpha = config.disturbance_level(bank.theta)
    return _decide_level(v, c, bank.levels[level], level, config, alpha)


def compute_gamma(
    v: float, c: float, bank: CertificateBank, config: TriggerConfig
) -> TriggerDecision:
    if config.variant == RAS:
        return _decide_ras(v, c, bank, config)
    if len(bank.levels) != 1:
        raise BankMismatchError("the ISS variant needs a single-level bank")
    return _decide_level(v, c, bank.levels[0], 0, config, 0.0)
