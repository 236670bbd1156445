from typing import Callable, Optional

import numpy as np

from common import DomainError

BOUND_SLACK = 1e-12


class DisturbanceSignal:
    """Piecewise signal t -> w(t) with an optional bound |w(t)| <= w_bar."""

    def __init__(
        self,
        fn: Callable[[float], np.ndarray],
        n_w: int = 1,
        w_bar: Optional[float] = None,
        name: str = "",
    ):
        if w_bar is not None and w_bar < 0.0:
            raise DomainError(f"w_bar must be nonnegative, got {w_bar}")
        self.fn = fn
        self.n_w = n_w
        self.w_bar = w_bar
        self.name = name

    def __call__(self, t: float) -> np.ndarray:
        w = np.atleast_1d(np.asarray(self.fn(t), dtype=np.float64))
        if self.w_bar is not None and np.linalg.norm(w) > self.w_bar + BOUND_SLACK:
            raise DomainError(
                f"|w({t})|={np.linalg.norm(w):.6g} exceeds w_bar={self.w_bar}"
            )
        return w


def _check_window(start: float, stop: float):
    if stop < start:
        raise DomainError(f"empty disturbance window [{start}, {stop}]")


def zero_disturbance(n_w: int = 1) -> DisturbanceSignal:
    return DisturbanceSignal(lambda t: np.zeros(n_w), n_w, w_bar=0.0, name="zero")


def window_sine(start: float, stop: float, amplitude: float = 1.0) -> DisturbanceSignal:
    """w(t) = amplitude sin(t) on [start, stop], zero elsewhere."""
    _check_window(start, stop)

    def fn(t):
        return np.array([amplitude * np.sin(t) if start <= t <= stop else 0.0])

    return DisturbanceSignal(fn, 1, w_bar=abs(amplitude), name="window_sine")


def window_constant(start: float, stop: float, amplitude: float) -> DisturbanceSignal:
    _check_window(start, stop)

    def fn(t):
        return np.array([amplitude if start <= t <= stop else 0.0])

    return DisturbanceSignal(fn, 1, w_bar=abs(amplitude), name="window_constant")


def get_disturbance(config) -> DisturbanceSignal:
    settings = config.disturbance
    if settings.kind == "zero":
        return zero_disturbance()
    elif settings.kind == "sine":
        return window_sine(settings.start, settings.stop, settings.amplitude)
    elif settings.kind == "constant":
        return window_constant(settings.start, settings.stop, settings.amplitude)
    raise DomainError(f"unknown disturbance kind {settings.kind!r}")
