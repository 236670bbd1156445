"""Hybrid closed loop under self-triggered sampling.

Hybrid time starts with a jump at t = 0. Between jumps the plant flows with
the held state x_hat = x + e for tau_max seconds (fixed-step RK4, the last
step shortened to land on tau_max). A flow that would cross the horizon is
truncated and not followed by a jump.
"""

import dataclasses
from typing import Callable, Iterator, Optional, Tuple

import flax
import numpy as np
import tqdm

from common import (
    Array,
    DomainError,
    NonFiniteStateError,
    OutOfRegionError,
    log_info,
    lyapunov_value,
)
from certificates.bank import RAS, CertificateBank
from dynamics.disturbances import DisturbanceSignal
from dynamics.systems import NonlinearSystem
from triggering.gamma import TriggerDecision, compute_gamma, fallback_period, min_dwell_time
from triggering.mechanisms import MechanismState, TriggerConfig, c_value, init_mechanism, s_update

MAX_DT = 1e-3
STEPS_PER_DWELL = 50
W_BAR_SLACK = 1e-12

Policy = Callable[[float, float, "HybridState"], TriggerDecision]


@flax.struct.dataclass
class HybridState:
    x: np.ndarray
    e: np.ndarray
    eta: MechanismState
    tau: float
    tau_max: float
    t: float
    j: int

    @classmethod
    def create(cls, x0: Array, eta: MechanismState) -> "HybridState":
        x0 = np.asarray(x0, dtype=np.float64)
        if not np.all(np.isfinite(x0)):
            raise NonFiniteStateError("x0 must be finite")
        return cls(x=x0, e=np.zeros_like(x0), eta=eta, tau=0.0, tau_max=0.0, t=0.0, j=0)

    @property
    def x_hat(self) -> np.ndarray:
        return self.x + self.e


@dataclasses.dataclass(frozen=True)
class EventRecord:
    t: float
    j: int  # jump count after this event
    interval: float
    set_index: int  # 0 fall-back, -1 uncertified fixed period
    level: int
    epsilon: float
    gamma: float
    l_gain: float
    lambda_cap: float
    c: float
    v: float
    eta: np.ndarray  # snapshot before the update

    @property
    def fallback(self) -> bool:
        return self.set_index == 0


@dataclasses.dataclass(frozen=True)
class HybridTrajectory:
    t: np.ndarray
    j: np.ndarray
    x: np.ndarray
    e: np.ndarray
    w: np.ndarray
    tau: np.ndarray
    event_index: np.ndarray  # event whose flow produced the sample, -1 before the first
    events: Tuple[EventRecord, ...]
    p_matrix: np.ndarray
    theta: float
    variant: str
    w_bar: float
    horizon: float
    dt: float
    label: str = ""

    @property
    def v(self) -> np.ndarray:
        return np.einsum("ni,ij,nj->n", self.x, self.p_matrix, self.x)

    @property
    def event_times(self) -> np.ndarray:
        return np.array([event.t for event in self.events])

    @property
    def intervals(self) -> np.ndarray:
        return np.array([event.interval for event in self.events])

    @property
    def num_events(self) -> int:
        return len(self.events)

    def event_values(self) -> np.ndarray:
        """V(x(t_j)) at every sampling instant."""
        return np.array([event.v for event in self.events])


class _Recorder:
    def __init__(self, n_w: int):
        self.t, self.j, self.x, self.e, self.w = [], [], [], [], []
        self.tau, self.event_index = [], []
        self.events = []
        self.n_w = n_w

    def sample(self, state: HybridState, w: np.ndarray):
        self.t.append(state.t)
        self.j.append(state.j)
        self.x.append(state.x)
        self.e.append(state.e)
        self.w.append(w)
        self.tau.append(state.tau)
        self.event_index.append(len(self.events) - 1)

    def build(self, **kwargs) -> HybridTrajectory:
        return HybridTrajectory(
            t=np.asarray(self.t),
            j=np.asarray(self.j, dtype=np.int64),
            x=np.asarray(self.x),
            e=np.asarray(self.e),
            w=np.asarray(self.w).reshape(len(self.t), self.n_w),
            tau=np.asarray(self.tau),
            event_index=np.asarray(self.event_index, dtype=np.int64),
            events=tuple(self.events),
            **kwargs,
        )


## Integration


def rk4_step(
    system: NonlinearSystem,
    x: np.ndarray,
    x_hat: np.ndarray,
    t: float,
    h: float,
    disturbance: DisturbanceSignal,
) -> np.ndarray:
    def f(t_, x_):
        return system(x_, x_hat - x_, disturbance(t_))

    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _flow_grid(length: float, dt: float) -> np.ndarray:
    n = max(1, int(np.ceil(length / dt - 1e-9)))
    taus = np.arange(n + 1, dtype=np.float64) * dt
    taus[-1] = length
    return taus


def flow(
    state: HybridState,
    system: NonlinearSystem,
    disturbance: DisturbanceSignal,
    dt: float,
    length: Optional[float] = None,
) -> Iterator[HybridState]:
    """Yields the state after every integration step until tau = length
    (tau_max by default); x_hat is held and e = x_hat - x recomputed."""
    if state.tau != 0.0:
        raise DomainError("a flow starts right after a jump (tau = 0)")
    length = state.tau_max if length is None else length
    if length == 0.0:
        return
    x_hat = state.x_hat
    t0 = state.t
    taus = _flow_grid(length, dt)
    x = state.x
    for tau_prev, tau in zip(taus[:-1], taus[1:]):
        x = rk4_step(system, x, x_hat, t0 + tau_prev, tau - tau_prev, disturbance)
        if not np.all(np.isfinite(x)):
            raise NonFiniteStateError(f"state diverged at t={t0 + tau:.6g}")
        yield state.replace(x=x, e=x_hat - x, tau=float(tau), t=float(t0 + tau))


def jump(
    state: HybridState,
    bank: CertificateBank,
    config: TriggerConfig,
    policy: Optional[Policy] = None,
) -> Tuple[HybridState, TriggerDecision]:
    """G(xi) = (x, 0, S(eta, x), 0, Gamma(x, eta)); Gamma uses the pre-update eta."""
    v = lyapunov_value(bank.p_matrix, state.x)
    c = c_value(state.eta, v, config)
    if policy is None:
        decision = compute_gamma(v, c, bank, config)
    else:
        decision = policy(v, c, state)
    eta = s_update(state.eta, v, decision.interval, config)
    new_state = state.replace(
        e=np.zeros_like(state.e),
        eta=eta,
        tau=0.0,
        tau_max=float(decision.interval),
        j=state.j + 1,
    )
    return new_state, decision


def select_dt(bank: CertificateBank, config: TriggerConfig, dt: Optional[float] = None) -> float:
    if dt is not None:
        if not np.isfinite(dt) or dt <= 0.0:
            raise DomainError(f"dt must be positive and finite, got {dt}")
        return float(dt)
    return min(MAX_DT, min_dwell_time(bank, config) / STEPS_PER_DWELL)


## Runs


def _check_inputs(system, bank, config, x0, disturbance):
    bank.check_system(system.n_x, config.variant)
    config.check_bank(bank)
    if np.asarray(x0).shape != (system.n_x,):
        raise DomainError(f"x0 must have shape ({system.n_x},)")
    if config.variant == RAS:
        if disturbance.w_bar is None or disturbance.w_bar > config.w_bar + W_BAR_SLACK:
            raise DomainError(
                f"disturbance bound {disturbance.w_bar} exceeds w_bar={config.w_bar}"
            )
        v0 = lyapunov_value(bank.p_matrix, x0)
        if v0 > config.c_max:
            raise OutOfRegionError(f"V(x0)={v0:.6g} exceeds c_max={config.c_max}")


def _run(
    system: NonlinearSystem,
    bank: CertificateBank,
    config: TriggerConfig,
    eta0: MechanismState,
    x0: Array,
    disturbance: DisturbanceSignal,
    horizon: float,
    dt: Optional[float],
    policy: Optional[Policy],
    label: str,
    writer=None,
    progress: bool = False,
) -> HybridTrajectory:
    if horizon < 0.0:
        raise DomainError(f"horizon must be nonnegative, got {horizon}")
    _check_inputs(system, bank, config, x0, disturbance)
    dt = select_dt(bank, config, dt)

    state = HybridState.create(x0, eta0)
    recorder = _Recorder(system.n_w)
    recorder.sample(state, disturbance(0.0))

    with tqdm.tqdm(total=horizon, desc=label, disable=not progress) as pbar:
        while True:
            eta_before = state.eta.snapshot()
            state, decision = jump(state, bank, config, policy)
            recorder.events.append(
                EventRecord(
                    t=state.t,
                    j=state.j,
                    interval=decision.interval,
                    set_index=decision.set_index,
                    level=decision.level,
                    epsilon=decision.epsilon,
                    gamma=decision.gamma,
                    l_gain=decision.l_gain,
                    lambda_cap=decision.lambda_cap,
                    c=decision.c,
                    v=decision.v,
                    eta=eta_before,
                )
            )
            recorder.sample(state, disturbance(state.t))
            log_info(
                writer,
                state.j,
                {
                    "interval": decision.interval,
                    "V": decision.v,
                    "C": decision.c,
                    "level": decision.level,
                    "fallback": float(decision.fallback),
                },
                label or "event",
            )
            if state.t >= horizon:
                break

            length = min(state.tau_max, horizon - state.t)
            t_start = state.t
            for state in flow(state, system, disturbance, dt, length):
                recorder.sample(state, disturbance(state.t))
            pbar.update(state.t - t_start)
            if length < state.tau_max:
                break

    return recorder.build(
        p_matrix=bank.p_matrix,
        theta=bank.theta,
        variant=config.variant,
        w_bar=config.w_bar if config.variant == RAS else 0.0,
        horizon=float(horizon),
        dt=dt,
        label=label,
    )


def simulate(
    system: NonlinearSystem,
    bank: CertificateBank,
    config: TriggerConfig,
    mechanism: MechanismState,
    x0: Array,
    disturbance: DisturbanceSignal,
    horizon: float,
    dt: Optional[float] = None,
    writer=None,
    progress: bool = False,
) -> HybridTrajectory:
    return _run(
        system,
        bank,
        config,
        mechanism,
        x0,
        disturbance,
        horizon,
        dt,
        None,
        mechanism.kind,
        writer,
        progress,
    )


def _periodic_decision(bank, config, level, interval, set_index, v, c) -> TriggerDecision:
    first = bank.levels[level].fallback
    return TriggerDecision(
        interval=float(interval),
        set_index=set_index,
        level=level,
        epsilon=first.epsilon,
        gamma=first.gamma,
        l_gain=first.l_gain,
        lambda_cap=first.flow.lambda_cap,
        c=c,
        v=v,
    )


def simulate_periodic(
    system: NonlinearSystem,
    period: Optional[float],
    x0: Array,
    disturbance: DisturbanceSignal,
    horizon: float,
    bank: CertificateBank,
    config: TriggerConfig,
    dt: Optional[float] = None,
    writer=None,
    progress: bool = False,
) -> HybridTrajectory:
    """Fixed period, or with period=None the fall-back of the level holding V(x)."""
    if period is not None and not period > 0.0:
        raise DomainError(f"period must be positive, got {period}")

    if period is None:
        label = "level_adaptive"

        def policy(v, c, state):
            level = bank.level_index(v) if config.variant == RAS else 0
            interval = fallback_period(bank, level, config.delta)
            return _periodic_decision(bank, config, level, interval, 0, v, v)

    else:
        label = "periodic"
        # periods beyond the fall-back carry no certified parameter set
        certified = period <= fallback_period(bank, 0, config.delta)

        def policy(v, c, state):
            return _periodic_decision(bank, config, 0, period, 0 if certified else -1, v, v)

    eta0 = init_mechanism("ref", lyapunov_value(bank.p_matrix, x0), config)
    if dt is None and period is not None:
        dt = min(select_dt(bank, config), period / STEPS_PER_DWELL)
    return _run(
        system, bank, config, eta0, x0, disturbance, horizon, dt, policy, label, writer, progress
    )
