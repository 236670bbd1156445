import json
import os
from typing import Optional, Sequence, Tuple

import flax
import numpy as np
import tqdm
from absl import logging

from common import (
    Array,
    BankMismatchError,
    DomainError,
    InfeasibleCertificateError,
    OutOfRegionError,
    is_positive_definite,
)
from certificates.embeddings import EmbeddingBuilder
from certificates.feasibility import GAMMA_TOL, compute_l_gain, min_gamma_grid
from mati import FlowRateParams

ISS = "iss"
RAS = "ras"
REGION_SLACK = 1e-9


@flax.struct.dataclass
class ParameterSet:
    epsilon: float
    gamma: float
    l_gain: float

    @classmethod
    def create(cls, epsilon: float, gamma: float, l_gain: float) -> "ParameterSet":
        if not gamma > 0.0 or not l_gain > 0.0:
            raise DomainError(f"gamma and L must be positive, got {gamma}, {l_gain}")
        return cls(epsilon=float(epsilon), gamma=float(gamma), l_gain=float(l_gain))

    @property
    def flow(self) -> FlowRateParams:
        return FlowRateParams.create(self.epsilon, self.l_gain)


@flax.struct.dataclass
class LevelCertificate:
    c: float  # +inf for a global certificate
    sets: Tuple[ParameterSet, ...]

    @property
    def fallback(self) -> ParameterSet:
        return self.sets[0]


@flax.struct.dataclass
class CertificateBank:
    p_matrix: np.ndarray
    theta: float
    levels: Tuple[LevelCertificate, ...]
    variant: str = flax.struct.field(pytree_node=False, default=ISS)

    @classmethod
    def create(
        cls,
        p_matrix: Array,
        theta: float,
        levels: Sequence[LevelCertificate],
        variant: str = ISS,
    ) -> "CertificateBank":
        p_matrix = np.asarray(p_matrix, dtype=np.float64)
        if not is_positive_definite(p_matrix):
            raise DomainError("P must be symmetric positive definite")
        if not theta > 0.0:
            raise DomainError(f"theta must be positive, got {theta}")
        if len(levels) == 0:
            raise DomainError("a bank needs at least one level")
        cs = np.array([level.c for level in levels])
        if np.any(np.diff(cs) <= 0.0):
            raise DomainError("level bounds must be strictly increasing")
        for level in levels:
            if len(level.sets) == 0 or not level.sets[0].epsilon > 0.0:
                raise DomainError(f"level c={level.c} has no positive fall-back epsilon")
        if variant not in (ISS, RAS):
            raise DomainError(f"unknown variant {variant!r}")
        return cls(
            p_matrix=p_matrix, theta=float(theta), levels=tuple(levels), variant=variant
        )

    @property
    def n_x(self) -> int:
        return self.p_matrix.shape[0]

    @property
    def c_values(self) -> np.ndarray:
        return np.array([level.c for level in self.levels])

    @property
    def is_global(self) -> bool:
        return len(self.levels) == 1 and np.isinf(self.levels[0].c)

    def level_index(self, value: float) -> int:
        """Smallest l with c_l >= value."""
        cs = self.c_values
        index = int(np.searchsorted(cs, value, side="left"))
        if index == len(cs):
            if value <= cs[-1] * (1.0 + REGION_SLACK):
                return len(cs) - 1
            raise OutOfRegionError(
                f"max(V, C)={value:.6g} exceeds the largest level c={cs[-1]:.6g}"
            )
        return index

    def check_system(self, n_x: int, variant: Optional[str] = None):
        if self.n_x != n_x:
            raise BankMismatchError(f"bank is for n_x={self.n_x}, system has n_x={n_x}")
        if variant is not None and variant != self.variant:
            raise BankMismatchError(
                f"bank was synthesized for {self.variant}, run asks for {variant}"
            )


def synthesize_bank(
    embedding_builder: EmbeddingBuilder,
    epsilon_grid: Sequence[float],
    theta: float,
    c_levels: Optional[Sequence[float]],
    p_matrix: Array,
    tol: float = GAMMA_TOL,
    progress: bool = False,
) -> CertificateBank:
    """One level per c (or a single global level), fall-back set first.

    Leveled banks keep only negative epsilon values behind the fall-back.
    """
    epsilon_grid = np.asarray(epsilon_grid, dtype=np.float64)
    if epsilon_grid.size == 0:
        raise DomainError("the epsilon grid is empty")
    if not np.any(epsilon_grid > 0.0):
        raise DomainError("the epsilon grid needs a positive fall-back value")
    leveled = c_levels is not None and len(c_levels) > 0
    cs = list(c_levels) if leveled else [None]

    levels = []
    for c in tqdm.tqdm(cs, desc="certify", disable=not progress):
        embedding = embedding_builder(c)
        l_gain = compute_l_gain(embedding)
        gammas = min_gamma_grid(embedding, p_matrix, epsilon_grid, theta, tol)
        feasible = np.isfinite(gammas)

        positive = np.flatnonzero(feasible & (epsilon_grid > 0.0))
        if positive.size == 0:
            raise InfeasibleCertificateError(
                f"no positive epsilon is feasible at level c={c}"
            )
        first = positive[np.argmax(epsilon_grid[positive])]
        sets = [ParameterSet.create(epsilon_grid[first], gammas[first], l_gain)]
        for i in np.flatnonzero(feasible):
            if i == first or (leveled and epsilon_grid[i] >= 0.0):
                continue
            sets.append(ParameterSet.create(epsilon_grid[i], gammas[i], l_gain))

        dropped = int(np.sum(~feasible))
        if dropped:
            logging.info("level c=%s: dropped %d infeasible epsilon values", c, dropped)
        levels.append(
            LevelCertificate(c=np.inf if c is None else float(c), sets=tuple(sets))
        )

    return CertificateBank.create(
        p_matrix, theta, levels, variant=RAS if leveled else ISS
    )


def scale_bank(
    bank: CertificateBank, gamma_factor: float = 1.0, epsilon_shift: float = 0.0
) -> CertificateBank:
    """Corrupted copy, used as a negative control for the verifiers."""
    levels = []
    for level in bank.levels:
        sets = tuple(
            s.replace(gamma=s.gamma * gamma_factor, epsilon=s.epsilon + epsilon_shift)
            for s in level.sets
        )
        levels.append(level.replace(sets=sets))
    return bank.replace(levels=tuple(levels))


## Persistence


def bank_to_dict(bank: CertificateBank) -> dict:
    return {
        "variant": bank.variant,
        "n_x": bank.n_x,
        "p_matrix": bank.p_matrix.tolist(),
        "theta": bank.theta,
        "levels": [
            {
                "c": None if np.isinf(level.c) else float(level.c),
                "sets": [
                    {"epsilon": s.epsilon, "gamma": s.gamma, "l_gain": s.l_gain}
                    for s in level.sets
                ],
            }
            for level in bank.levels
        ],
    }


def bank_from_dict(data: dict) -> CertificateBank:
    try:
        levels = [
            LevelCertificate(
                c=np.inf if level["c"] is None else float(level["c"]),
                sets=tuple(
                    ParameterSet.create(s["epsilon"], s["gamma"], s["l_gain"])
                    for s in level["sets"]
                ),
            )
            for level in data["levels"]
        ]
        bank = CertificateBank.create(
            data["p_matrix"], data["theta"], levels, variant=data.get("variant", ISS)
        )
    except (KeyError, TypeError) as err:
        raise BankMismatchError(f"malformed certificate bank: {err}") from err
    if "n_x" in data and data["n_x"] != bank.n_x:
        raise BankMismatchError("n_x does not match the stored P matrix")
    return bank


def save_bank(bank: CertificateBank, path: str):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as f:
        json.dump(bank_to_dict(bank), f, indent=2)
        f.write("\n")


def load_bank(path: str) -> CertificateBank:
    with open(path, "r") as f:
        return bank_from_dict(json.load(f))
