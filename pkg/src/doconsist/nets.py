"""Two-layer pairwise scorer MLPs and their parameter containers.

Every head maps a concatenated representation pair [x_cause, x_effect]
(length 2d) through a tanh hidden layer of size h to a single sigmoid
score in (0,1). Forward and backward passes run through the selected
kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ShapeMismatch


@dataclass(eq=False)
class MlpParams:
    W1: np.ndarray  # (h, 2d)
    b1: np.ndarray  # (h,)
    w2: np.ndarray  # (h,)
    b2: np.ndarray  # (1,)

    @classmethod
    def init(cls, in_dim: int, hidden: int, rng: np.random.Generator) -> "MlpParams":
        return cls(
            W1=rng.normal(0.0, 1.0 / np.sqrt(in_dim), size=(hidden, in_dim)),
            b1=np.zeros(hidden),
            w2=rng.normal(0.0, 1.0 / np.sqrt(hidden), size=hidden),
            b2=np.zeros(1),
        )

    @classmethod
    def zeros(cls, in_dim: int, hidden: int) -> "MlpParams":
        return cls(
            W1=np.zeros((hidden, in_dim)),
            b1=np.zeros(hidden),
            w2=np.zeros(hidden),
            b2=np.zeros(1),
        )

    def zeros_like(self) -> "MlpParams":
        return MlpParams(
            W1=np.zeros_like(self.W1),
            b1=np.zeros_like(self.b1),
            w2=np.zeros_like(self.w2),
            b2=np.zeros_like(self.b2),
        )

    def copy(self) -> "MlpParams":
        return MlpParams(self.W1.copy(), self.b1.copy(), self.w2.copy(), self.b2.copy())

    def arrays(self):
        return [("W1", self.W1), ("b1", self.b1), ("w2", self.w2), ("b2", self.b2)]

    def add_(self, other: "MlpParams") -> None:
        self.W1 += other.W1
        self.b1 += other.b1
        self.w2 += other.w2
        self.b2 += other.b2

    def to_json_dict(self) -> dict:
        return {
            "W1": self.W1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "MlpParams":
        return cls(
            W1=np.asarray(doc["W1"], dtype=np.float64),
            b1=np.asarray(doc["b1"], dtype=np.float64),
            w2=np.asarray(doc["w2"], dtype=np.float64),
            b2=np.asarray(doc["b2"], dtype=np.float64),
        )


def mlp_scores(head: MlpParams, Z: np.ndarray):
    """Scores and hidden activations for a (P, 2d) feature block."""
    if Z.shape[1] != head.W1.shape[1]:
        raise ShapeMismatch(
            f"feature width {Z.shape[1]} does not match head input {head.W1.shape[1]}"
        )
    return kernels.pair_mlp_forward(
        np.ascontiguousarray(Z), head.W1, head.b1, head.w2, head.b2
    )


def mlp_backward(head: MlpParams, Z, U, S, dS) -> tuple[MlpParams, np.ndarray]:
    """Gradient of sum(dS * scores) w.r.t. head params and features."""
    dW1, db1, dw2, db2, dZ = kernels.pair_mlp_backward(
        np.ascontiguousarray(Z), U, S, np.ascontiguousarray(dS), head.W1, head.w2
    )
    return MlpParams(dW1, db1, dw2, db2), dZ
