"""Config -> bank, system, disturbance and runs."""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from absl import logging

from common import DomainError, lyapunov_value
from certificates.bank import RAS, CertificateBank, synthesize_bank
from certificates.embeddings import get_embedding_builder
from certificates.feasibility import tune_p_matrix
from dynamics.disturbances import DisturbanceSignal, get_disturbance
from dynamics.systems import NonlinearSystem, get_system
from evaluation import (
    CheckReport,
    check_iss_decay,
    check_min_dwell,
    check_prop1_bound,
    check_ras_invariance,
    check_time_domain,
    dwell_bound,
)
from simulation import HybridTrajectory, simulate, simulate_periodic
from triggering.mechanisms import TriggerConfig, init_mechanism

FIXED = "fixed"
LEVEL_ADAPTIVE = "level_adaptive"


def epsilon_grid(config) -> np.ndarray:
    return np.linspace(config.epsilon_min, config.epsilon_max, int(config.n_par))


def c_levels(config) -> Optional[np.ndarray]:
    if config.n_levels <= 0:
        return None
    return np.geomspace(config.c_w, config.c_max, int(config.n_levels))


def tune_p(config) -> np.ndarray:
    """Sets config.p_matrix to the grid P with the longest fall-back interval."""
    builder = get_embedding_builder(config)
    levels = c_levels(config)
    embedding = builder(None if levels is None else float(levels[-1]))
    p_matrix, _, _ = tune_p_matrix(
        embedding, config.epsilon_max, config.theta, config.delta, tol=config.gamma_tol
    )
    config.p_matrix = tuple(tuple(float(v) for v in row) for row in p_matrix)
    return p_matrix


def build_bank(config, progress: bool = False) -> CertificateBank:
    return synthesize_bank(
        get_embedding_builder(config),
        epsilon_grid(config),
        config.theta,
        c_levels(config),
        np.asarray(config.p_matrix),
        tol=config.gamma_tol,
        progress=progress,
    )


def trigger_config(config) -> TriggerConfig:
    return TriggerConfig.create(
        eps_ref=config.eps_ref,
        delta=config.delta,
        variant=config.variant,
        w_bar=config.w_bar,
        c_w=config.c_w,
        c_max=config.c_max,
    )


def run_mechanism(
    config,
    bank: CertificateBank,
    kind: str,
    system: Optional[NonlinearSystem] = None,
    disturbance: Optional[DisturbanceSignal] = None,
    horizon: Optional[float] = None,
    dt: Optional[float] = None,
    writer=None,
    progress: bool = False,
) -> HybridTrajectory:
    system = system or get_system(config)
    disturbance = disturbance or get_disturbance(config)
    trigger = trigger_config(config)
    x0 = np.asarray(config.x0, dtype=np.float64)
    eta0 = init_mechanism(
        kind,
        lyapunov_value(bank.p_matrix, x0),
        trigger,
        m=config.fir_m,
        r1=config.iir_r1,
        r2=config.iir_r2,
    )
    return simulate(
        system,
        bank,
        trigger,
        eta0,
        x0,
        disturbance,
        config.horizon if horizon is None else horizon,
        dt=dt,
        writer=writer,
        progress=progress,
    )


def run_baseline(
    config,
    bank: CertificateBank,
    system: Optional[NonlinearSystem] = None,
    disturbance: Optional[DisturbanceSignal] = None,
    horizon: Optional[float] = None,
    dt: Optional[float] = None,
    writer=None,
    progress: bool = False,
) -> HybridTrajectory:
    if config.baseline == FIXED:
        period = config.baseline_period
    elif config.baseline == LEVEL_ADAPTIVE:
        period = None
    else:
        raise DomainError(f"unknown baseline {config.baseline!r}")
    return simulate_periodic(
        system or get_system(config),
        period,
        np.asarray(config.x0, dtype=np.float64),
        disturbance or get_disturbance(config),
        config.horizon if horizon is None else horizon,
        bank,
        trigger_config(config),
        dt=dt,
        writer=writer,
        progress=progress,
    )


def run_checks(
    trajectory: HybridTrajectory, bank: CertificateBank, config
) -> List[CheckReport]:
    reports = [
        check_prop1_bound(trajectory),
        check_time_domain(trajectory),
        check_min_dwell(trajectory, dwell_bound(trajectory, bank, config.delta)),
    ]
    if config.variant == RAS:
        reports.append(check_ras_invariance(trajectory, config.c_w, config.c_max))
    elif config.disturbance.kind == "zero" and trajectory.label in ("fir", "iir", "ref"):
        reports.append(
            check_iss_decay(
                trajectory, bank.levels[0].fallback.epsilon, config.eps_ref
            )
        )
    return reports


def run_suite(
    config,
    bank: CertificateBank,
    mechanisms: Optional[Sequence[str]] = None,
    baseline: bool = True,
    dt: Optional[float] = None,
    writer=None,
    progress: bool = False,
) -> Dict[str, Tuple[HybridTrajectory, List[CheckReport]]]:
    """All mechanisms (and the baseline) on identical inputs."""
    mechanisms = config.bench_mechanisms if mechanisms is None else mechanisms
    system = get_system(config)
    disturbance = get_disturbance(config)
    results = {}
    for kind in mechanisms:
        trajectory = run_mechanism(
            config, bank, kind, system, disturbance, dt=dt, writer=writer, progress=progress
        )
        results[kind] = (trajectory, run_checks(trajectory, bank, config))
        logging.info("%s: %d events", kind, trajectory.num_events)
    if baseline and config.baseline != "none":
        trajectory = run_baseline(
            config, bank, system, disturbance, dt=dt, writer=writer, progress=progress
        )
        results[trajectory.label] = (trajectory, run_checks(trajectory, bank, config))
        logging.info("%s: %d events", trajectory.label, trajectory.num_events)
    return results
