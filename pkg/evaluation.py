"""Post-run checks on hybrid trajectories."""

import dataclasses
from typing import Dict, Iterable, Optional

import numpy as np
from absl import logging
from scipy import integrate

from common import alpha_w
from mati import FlowRateParams
from certificates.bank import RAS, CertificateBank
from simulation import HybridTrajectory
from triggering.gamma import fallback_period

RTOL = 1e-6
ATOL = 1e-12


@dataclasses.dataclass(frozen=True)
class CheckReport:
    name: str
    passed: bool
    n_checked: int
    n_violations: int
    worst_margin: float
    n_skipped: int = 0

    def to_dict(self) -> Dict:
        return {
            "passed": self.passed,
            "n_checked": self.n_checked,
            "n_violations": self.n_violations,
            "worst_margin": float(self.worst_margin),
            "n_skipped": self.n_skipped,
        }


def _report(name, n_checked, margins, violations, n_skipped=0) -> CheckReport:
    n_violations = int(np.sum(violations)) if np.size(violations) else 0
    worst = float(np.min(margins)) if np.size(margins) else np.inf
    if n_violations:
        logging.warning("%s: %d violations, worst margin %.3g", name, n_violations, worst)
    return CheckReport(name, n_violations == 0, n_checked, n_violations, worst, n_skipped)


def _flow_slices(trajectory: HybridTrajectory):
    """(event index, sample slice) for every flow, post-jump sample included."""
    index = trajectory.event_index
    starts = np.flatnonzero(np.diff(index, prepend=-2) != 0)
    stops = np.append(starts[1:], index.size)
    for start, stop in zip(starts, stops):
        if index[start] >= 0:
            yield int(index[start]), slice(start, stop)


def check_prop1_bound(
    trajectory: HybridTrajectory, rtol: float = RTOL, atol: float = ATOL
) -> CheckReport:
    """V(x(t)) <= exp(rate (t - t_j)) V(x(s_j)) + disturbance term along every
    flow, with rate = max(-eps, 2 (L - Lambda)) of the set chosen at t_j.

    ISS runs integrate alpha_w(|w|) from the logged samples (trapezoid);
    RAS runs use the constant alpha_w(w_bar).
    """
    v_all = trajectory.v
    margins, violations = [], []
    n_skipped = 0
    for k, samples in _flow_slices(trajectory):
        event = trajectory.events[k]
        if event.set_index < 0:
            n_skipped += 1
            continue
        tau = trajectory.tau[samples]
        v = v_all[samples]
        v_start = event.v
        rate = FlowRateParams.create(event.epsilon, event.l_gain).bound_rate(event.lambda_cap)
        growth = np.exp(rate * tau)
        if trajectory.variant == RAS:
            alpha = alpha_w(trajectory.theta, trajectory.w_bar)
            if rate != 0.0:
                forced = alpha * np.expm1(rate * tau) / rate
            else:
                forced = alpha * tau
        else:
            alphas = trajectory.theta**2 * np.sum(trajectory.w[samples] ** 2, axis=-1)
            if tau.size > 1:
                forced = growth * integrate.cumulative_trapezoid(
                    np.exp(-rate * tau) * alphas, tau, initial=0.0
                )
            else:
                forced = np.zeros_like(tau)
        rhs = growth * v_start + forced
        scale = np.maximum(rhs, v_start)
        margins.append((rhs - v) / np.maximum(scale, atol))
        violations.append(v - rhs > rtol * scale + atol)

    margins = np.concatenate(margins) if margins else np.empty(0)
    violations = np.concatenate(violations) if violations else np.empty(0, dtype=bool)
    return _report("prop1_bound", margins.size, margins, violations, n_skipped)


def check_time_domain(trajectory: HybridTrajectory, tol: float = 1e-12) -> CheckReport:
    """(t, j) is a hybrid time domain, gaps match the logged intervals and
    every jump resets e and tau."""
    t, j = trajectory.t, trajectory.j
    dt, dj = np.diff(t), np.diff(j)
    bad = [
        dt < 0.0,
        (dj != 0) & (dj != 1),
        (dj == 1) & (dt != 0.0),
        (dj == 0) & (dt <= 0.0),
    ]
    jumps = np.flatnonzero(np.diff(j, prepend=j[0]) == 1)
    bad.append(np.any(trajectory.e[jumps] != 0.0, axis=-1) | (trajectory.tau[jumps] != 0.0))

    times = trajectory.event_times
    if times.size:
        bad.append(np.atleast_1d(times[0] != 0.0))
        gaps = np.diff(times)
        intervals = trajectory.intervals[:-1]
        bad.append(np.abs(gaps - intervals) > tol * np.maximum(1.0, times[1:]))
        bad.append(trajectory.tau > trajectory.intervals[np.maximum(trajectory.event_index, 0)] + tol)
    flags = np.concatenate([np.atleast_1d(b) for b in bad])
    n_checked = flags.size
    return _report("time_domain", n_checked, np.where(flags, -1.0, 0.0), flags)


def dwell_bound(
    trajectory: HybridTrajectory, bank: CertificateBank, delta: float
) -> float:
    """Smallest fall-back interval among the levels the run used."""
    levels = sorted({event.level for event in trajectory.events}) or [0]
    return min(fallback_period(bank, level, delta) for level in levels)


def check_min_dwell(trajectory: HybridTrajectory, t_min: float) -> CheckReport:
    gaps = np.diff(trajectory.event_times)
    margins = gaps - t_min
    return _report("min_dwell", gaps.size, margins, margins < -1e-12 * max(t_min, 1.0))


def check_iss_decay(
    trajectory: HybridTrajectory,
    eps_1: float,
    eps_ref: float,
    eta0_norm: Optional[float] = None,
    atol: float = 1e-9,
) -> CheckReport:
    """V(x(t_j)) <= exp(-min(eps_1, eps_ref) t_j) max(V(x0), |eta0|) for w = 0."""
    if not trajectory.events:
        return _report("iss_decay", 0, np.empty(0), np.empty(0, dtype=bool))
    first = trajectory.events[0]
    if eta0_norm is None:
        eta0_norm = float(np.linalg.norm(first.eta))
    rate = min(eps_1, eps_ref)
    envelope = np.exp(-rate * trajectory.event_times) * max(first.v, eta0_norm)
    margins = envelope + atol - trajectory.event_values()
    return _report("iss_decay", margins.size, margins, margins < 0.0)


def check_ras_invariance(
    trajectory: HybridTrajectory, c_w: float, c_max: float, tol: float = 1e-6
) -> CheckReport:
    """V stays below c_max, and below c_w at every sample once an event lands in R."""
    v = trajectory.v
    region = c_max + tol - v
    events_v = trajectory.event_values()
    inside = np.flatnonzero(events_v <= c_w)
    if inside.size:
        settled = c_w + tol - events_v[inside[0]:]
    else:
        settled = np.empty(0)
    margins = np.concatenate([region, settled])
    return _report("ras_invariance", margins.size, margins, margins < 0.0)


def all_passed(reports: Iterable[CheckReport]) -> bool:
    return all(report.passed for report in reports)


def summarize(
    trajectory: HybridTrajectory, reports: Iterable[CheckReport] = ()
) -> Dict:
    intervals = trajectory.intervals
    return {
        "label": trajectory.label,
        "num_events": trajectory.num_events,
        "min_interval": float(np.min(intervals)) if intervals.size else 0.0,
        "max_interval": float(np.max(intervals)) if intervals.size else 0.0,
        "mean_interval": float(np.mean(intervals)) if intervals.size else 0.0,
        "num_fallback": int(sum(event.fallback for event in trajectory.events)),
        "final_V": float(trajectory.v[-1]),
        "checks": {report.name: report.to_dict() for report in reports},
    }
