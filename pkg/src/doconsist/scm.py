"""Linear-SCM algebra over admissible weighted adjacencies.

decode maps noise to representations through X = (I - A)^{-1} E, solved by
forward substitution (the system has unit diagonal, so it is never
singular); encode is the exact inverse E = (I - A) X. Interventions zero
the rows of their target variables. All functions are pure and accept
either an AdjacencyEstimate or a raw weighted matrix.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DimensionMismatch, IndexOutOfRange
from .graph import AdjacencyEstimate, InterventionView, admissible_mask


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, AdjacencyEstimate):
        return np.asarray(A.weights, dtype=np.float64)
    a = np.asarray(A, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"adjacency must be square, got shape {a.shape}")
    if np.any(a[~admissible_mask(a.shape[0])] != 0.0):
        raise DimensionMismatch("adjacency must be strictly lower triangular")
    return a


def _check_noise(A: np.ndarray, E) -> np.ndarray:
    e = np.asarray(E, dtype=np.float64)
    if e.ndim != 2 or e.shape[0] != A.shape[0]:
        raise DimensionMismatch(
            f"noise shape {e.shape} incompatible with {A.shape[0]} variables"
        )
    return e


def decode(A, E) -> np.ndarray:
    """Representations X = (I - A)^{-1} E, exact up to floating point."""
    a = _as_matrix(A)
    e = _check_noise(a, E)
    x = kernels.decode_forward(
        np.ascontiguousarray(a[None]), np.ascontiguousarray(e[None])
    )
    return x[0]


def encode(A, X) -> np.ndarray:
    """Noise E = (I - A) X; inverse of decode."""
    a = _as_matrix(A)
    x = _check_noise(a, X)
    return x - a @ x


def intervene_structure(A, view: InterventionView) -> np.ndarray:
    """Copy of A with every target row zeroed (parent sets emptied)."""
    a = _as_matrix(A).copy()
    n = a.shape[0]
    for t in view.targets:
        if not 1 <= t <= n:
            raise IndexOutOfRange(f"target {t} outside [1, {n}]")
        a[t - 1, :] = 0.0
    return a


def intervene_representation(A, E, view: InterventionView) -> np.ndarray:
    """decode(intervene_structure(A, view), E)."""
    return decode(intervene_structure(A, view), E)
