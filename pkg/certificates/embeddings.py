"""Polytopic embeddings f(x, e, w) = A x + B(a) e + E w of the closed loops."""

import itertools
from typing import Callable, Optional, Sequence, Tuple

import flax
import numpy as np

from common import Array, DomainError, as_matrix

EmbeddingBuilder = Callable[[Optional[float]], "PolytopicEmbedding"]


@flax.struct.dataclass
class PolytopicEmbedding:
    a_matrices: np.ndarray  # (n_vertices, n_x, n_x)
    b_matrices: np.ndarray  # (n_vertices, n_x, n_e)
    e_matrices: np.ndarray  # (n_vertices, n_x, n_w)
    level_c: Optional[float] = flax.struct.field(pytree_node=False, default=None)
    state_radius: float = flax.struct.field(pytree_node=False, default=np.inf)
    name: str = flax.struct.field(pytree_node=False, default="")

    @classmethod
    def create(
        cls,
        vertices: Sequence[Tuple[Array, Array, Array]],
        level_c: Optional[float] = None,
        state_radius: float = np.inf,
        name: str = "",
    ) -> "PolytopicEmbedding":
        if len(vertices) == 0:
            raise DomainError("an embedding needs at least one vertex")
        a_list, b_list, e_list = [], [], []
        for a, b, e in vertices:
            a, b, e = as_matrix(a, "A"), as_matrix(b, "B"), as_matrix(e, "E")
            n_x = a.shape[0]
            if a.shape != (n_x, n_x) or b.shape[0] != n_x or e.shape[0] != n_x:
                raise DomainError(
                    f"inconsistent vertex shapes A{a.shape} B{b.shape} E{e.shape}"
                )
            a_list.append(a)
            b_list.append(b)
            e_list.append(e)
        try:
            a_stack = np.stack(a_list)
            b_stack = np.stack(b_list)
            e_stack = np.stack(e_list)
        except ValueError as err:
            raise DomainError(f"vertices disagree on dimensions: {err}") from err
        # H(x, w) = |A x + E w| has to be one function over the polytope
        if not (np.all(a_stack == a_stack[0]) and np.all(e_stack == e_stack[0])):
            raise DomainError("A and E must be shared by all vertices")
        if level_c is not None and not level_c > 0.0:
            raise DomainError(f"level_c must be positive, got {level_c}")
        return cls(
            a_matrices=a_stack,
            b_matrices=b_stack,
            e_matrices=e_stack,
            level_c=None if level_c is None else float(level_c),
            state_radius=float(state_radius),
            name=name,
        )

    @property
    def n_x(self) -> int:
        return self.a_matrices.shape[1]

    @property
    def n_e(self) -> int:
        return self.b_matrices.shape[2]

    @property
    def n_w(self) -> int:
        return self.e_matrices.shape[2]

    @property
    def n_vertices(self) -> int:
        return self.a_matrices.shape[0]

    def h_value(self, x: Array, w: Array) -> np.ndarray:
        """|A x + E w| for (batches of) states and disturbances."""
        x = np.asarray(x, dtype=np.float64)
        w = np.asarray(w, dtype=np.float64)
        return np.linalg.norm(x @ self.a_matrices[0].T + w @ self.e_matrices[0].T, axis=-1)


def _vertex_values(lo: float, hi: float) -> Tuple[float, ...]:
    return (lo,) if lo == hi else (lo, hi)


def embed_example1(a: float, b: float) -> PolytopicEmbedding:
    """Single-link robot arm with a linearizing controller, a_tilde in [-a, a]."""
    if a < 0.0 or b <= 0.0:
        raise DomainError(f"need a >= 0 and b > 0, got a={a}, b={b}")
    a_matrix = np.array([[0.0, 1.0], [-1.0, -1.0]])
    e_matrix = np.array([[0.0], [1.0]])
    vertices = [
        (a_matrix, np.array([[0.0, 0.0], [a_tilde - 1.0, 1.0]]), e_matrix)
        for a_tilde in _vertex_values(-a, a)
    ]
    return PolytopicEmbedding.create(vertices, name="example1")


def _example2_vertices(a1_range, a2_range):
    a_matrix = -np.eye(2)
    e_matrix = np.array([[0.0], [1.0]])
    vertices = []
    for a1, a2 in itertools.product(
        _vertex_values(*a1_range), _vertex_values(*a2_range)
    ):
        vertices.append((a_matrix, np.array([[0.0, 0.0], [a1, a2 - 1.0]]), e_matrix))
    return vertices


def embed_example2(c_level: float) -> PolytopicEmbedding:
    """Ranges a1 in [-c/7, c/7], a2 in [-3c/14, 3c/14] as printed."""
    if not c_level > 0.0:
        raise DomainError(f"c_level must be positive, got {c_level}")
    a1 = c_level / 7.0
    a2 = 3.0 * c_level / 14.0
    return PolytopicEmbedding.create(
        _example2_vertices((-a1, a1), (-a2, a2)),
        level_c=c_level,
        state_radius=np.sqrt(c_level / 28.0),
        name="example2",
    )


def embed_example2_sublevel(c_level: float, v_scale: float = 1.5) -> PolytopicEmbedding:
    """Ranges covering the true closed loop on {v_scale |x|^2 <= c}.

    a1 = -x2 (x1 + xh1) and a2 = -x2 (x2 + xh2) - |xh|^2 with |x|, |xh| <= rho
    give a1 in [-2 rho^2, 2 rho^2] and a2 in [-3 rho^2, 0].
    """
    if not c_level > 0.0:
        raise DomainError(f"c_level must be positive, got {c_level}")
    rho_sq = c_level / v_scale
    return PolytopicEmbedding.create(
        _example2_vertices((-2.0 * rho_sq, 2.0 * rho_sq), (-3.0 * rho_sq, 0.0)),
        level_c=c_level,
        state_radius=np.sqrt(rho_sq),
        name="example2_sublevel",
    )


def embed_linear(a_matrix: Array, b_matrix: Array, e_matrix: Array) -> PolytopicEmbedding:
    return PolytopicEmbedding.create([(a_matrix, b_matrix, e_matrix)], name="linear")


def get_embedding_builder(config) -> EmbeddingBuilder:
    """Maps a level c (None for a global certificate) to an embedding."""
    if config.system == "example1":
        return lambda c: embed_example1(config.a, config.b)
    elif config.system == "example2":
        if config.embedding == "printed":
            return embed_example2
        elif config.embedding == "sublevel":
            return embed_example2_sublevel
        raise DomainError(f"unknown example2 embedding {config.embedding!r}")
    elif config.system == "linear":
        return lambda c: embed_linear(config.a_matrix, config.b_matrix, config.e_matrix)
    raise DomainError(f"unknown system {config.system!r}")
