"""Adjacency types and structural operations shared by every other module.

Conventions (fixed package-wide):
  * entry (i, j) of an adjacency matrix means "variable x_j causes x_i";
  * variable indices respect the time order, so only strictly
    lower-triangular entries may be nonzero ("admissible" entries);
  * public variable indices (views, JSON edges, conflicts) are 1-based,
    matrix indexing in code is 0-based.

All types are immutable after construction and safe to share across
parallel workers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ArityOutOfRange,
    DimensionMismatch,
    IndexOutOfRange,
    NonBinaryEntryError,
    NonSquareError,
    TimeOrderViolation,
)

STRUCTURE_PATH = "structure-path"
REPRESENTATION_PATH = "representation-path"


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def admissible_mask(n: int) -> np.ndarray:
    """Boolean mask of the strictly lower-triangular (admissible) entries."""
    return np.tril(np.ones((n, n), dtype=bool), k=-1)


def admissible_indices(n: int):
    """(effect_rows, cause_cols) index arrays in row-major order.

    Row-major order over the lower triangle is the canonical pair order
    everywhere: (2,1),(3,1),(3,2),(4,1),... in 1-based terms.
    """
    return np.tril_indices(n, k=-1)


@dataclass(frozen=True, eq=False)
class CausalStructure:
    """Binary ground-truth DAG adjacency respecting the time order."""

    n_vars: int
    adj: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "adj", _freeze(np.asarray(self.adj, dtype=np.int64)))

    def __eq__(self, other):
        return (
            isinstance(other, CausalStructure)
            and self.n_vars == other.n_vars
            and np.array_equal(self.adj, other.adj)
        )

    def __hash__(self):
        return hash((self.n_vars, self.adj.tobytes()))

    def edges(self) -> list[tuple[int, int]]:
        """Edges as (effect, cause) pairs, 1-based, row-major order."""
        rows, cols = np.nonzero(self.adj)
        return [(int(r) + 1, int(c) + 1) for r, c in zip(rows, cols)]

    def to_json_dict(self) -> dict:
        return {"n_vars": self.n_vars, "edges": [[i, j] for i, j in self.edges()]}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CausalStructure":
        n = int(doc["n_vars"])
        adj = np.zeros((n, n), dtype=np.int64)
        for i, j in doc["edges"]:
            adj[int(i) - 1, int(j) - 1] = 1
        return validate_structure(adj)


@dataclass(frozen=True, eq=False)
class AdjacencyEstimate:
    """Weighted adjacency in [0,1]^{N x N}, admissible entries only.

    ``source`` tags which path produced it: structure-path or
    representation-path.
    """

    n_vars: int
    weights: np.ndarray
    source: str = STRUCTURE_PATH

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.shape != (self.n_vars, self.n_vars):
            raise DimensionMismatch(
                f"weights shape {w.shape} does not match n_vars={self.n_vars}"
            )
        if np.any(w < 0.0) or np.any(w > 1.0):
            raise ValueError("adjacency weights must lie in [0,1]")
        bad = ~admissible_mask(self.n_vars) & (w != 0.0)
        if np.any(bad):
            i, j = np.argwhere(bad)[0]
            raise TimeOrderViolation(int(i) + 1, int(j) + 1)
        object.__setattr__(self, "weights", _freeze(w))

    def admissible_values(self) -> np.ndarray:
        """Admissible entries as a flat vector in the canonical pair order."""
        rows, cols = admissible_indices(self.n_vars)
        return self.weights[rows, cols]


@dataclass(frozen=True)
class InterventionView:
    """One do_g target set: distinct variable indices, 1-based, sorted."""

    targets: tuple[int, ...]

    def __post_init__(self):
        t = tuple(sorted(int(x) for x in self.targets))
        if len(set(t)) != len(t) or not t:
            raise ArityOutOfRange(f"targets must be distinct and non-empty: {self.targets}")
        if t[0] < 1:
            raise IndexOutOfRange(f"targets must be >= 1: {self.targets}")
        object.__setattr__(self, "targets", t)

    @property
    def arity(self) -> int:
        return len(self.targets)

    def key(self) -> str:
        return ",".join(str(t) for t in self.targets)

    @classmethod
    def from_key(cls, key: str) -> "InterventionView":
        return cls(tuple(int(t) for t in key.split(",")))


def validate_structure(adj) -> CausalStructure:
    """Check a candidate binary adjacency and wrap it as a CausalStructure.

    Raises NonSquareError / NonBinaryEntryError / TimeOrderViolation with
    the first offending entry (1-based).
    """
    a = np.asarray(adj)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NonSquareError(f"expected a square matrix, got shape {a.shape}")
    if not np.isin(a, (0, 1)).all():
        raise NonBinaryEntryError("entries must be 0 or 1")
    a = a.astype(np.int64)
    n = a.shape[0]
    bad = ~admissible_mask(n) & (a != 0)
    if np.any(bad):
        i, j = np.argwhere(bad)[0]
        raise TimeOrderViolation(int(i) + 1, int(j) + 1)
    return CausalStructure(n_vars=n, adj=a)


def binarize(est: AdjacencyEstimate, threshold: float = 0.5) -> CausalStructure:
    """Threshold an estimate into a structure; strictly greater wins."""
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0,1), got {threshold}")
    return CausalStructure(est.n_vars, (est.weights > threshold).astype(np.int64))


def hamming_distance(a: CausalStructure, b: CausalStructure) -> int:
    """Count of admissible entries where the two structures differ."""
    if a.n_vars != b.n_vars:
        raise DimensionMismatch(f"n_vars {a.n_vars} != {b.n_vars}")
    mask = admissible_mask(a.n_vars)
    return int(np.count_nonzero((a.adj != b.adj) & mask))


def enumerate_interventions(n_vars: int, arity: int) -> list[InterventionView]:
    """All C(n_vars, arity) views in lexicographic order."""
    if not 1 <= arity <= n_vars:
        raise ArityOutOfRange(f"arity {arity} not in [1, {n_vars}]")
    return [
        InterventionView(c) for c in itertools.combinations(range(1, n_vars + 1), arity)
    ]


def sample_intervention_subset(
    views: list[InterventionView], fraction: float, seed: int
) -> list[InterventionView]:
    """Uniform subset of size floor(fraction*|views| + 0.5), reproducible.

    Half-up rounding, not banker's, so the size grid is monotone in the
    fraction. The selected views keep their original order.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0,1], got {fraction}")
    size = int(np.floor(fraction * len(views) + 0.5))
    rng = np.random.default_rng(seed)
    chosen = sorted(rng.choice(len(views), size=size, replace=False).tolist())
    return [views[i] for i in chosen]
