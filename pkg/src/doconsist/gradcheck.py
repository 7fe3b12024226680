"""Central finite-difference verification of the analytic gradients.

Every parameter of every head is perturbed by +/-step and the resulting
loss difference compared against the reverse-mode gradient. The relative
error denominator is floored at 1e-6 so structurally-zero gradients do
not divide by cancellation noise.
"""

from __future__ import annotations

import numpy as np

from .data import DatasetSpec, sample_dataset
from .graph import enumerate_interventions
from .learner import LearnerParams, TrainConfig, gradients, init_params, total_loss

DEFAULT_TOL = 1e-4


def finite_difference_grads(params: LearnerParams, sample, cfg: TrainConfig, step=1e-5):
    fd = params.zeros_like()
    fd_heads = dict(fd.unique_heads())
    for name, head in params.unique_heads():
        fd_head = fd_heads[name]
        for (aname, arr), (_, fd_arr) in zip(head.arrays(), fd_head.arrays()):
            flat = arr.reshape(-1)
            fd_flat = fd_arr.reshape(-1)
            for i in range(flat.size):
                old = flat[i]
                flat[i] = old + step
                lp, _ = total_loss(params, sample, cfg)
                flat[i] = old - step
                lm, _ = total_loss(params, sample, cfg)
                flat[i] = old
                fd_flat[i] = (lp - lm) / (2.0 * step)
    return fd


def max_rel_error(g_a: LearnerParams, g_b: LearnerParams) -> float:
    worst = 0.0
    heads_b = dict(g_b.unique_heads())
    for name, head in g_a.unique_heads():
        other = heads_b[name]
        for (aname, arr), (_, brr) in zip(head.arrays(), other.arrays()):
            denom = np.maximum(np.abs(arr) + np.abs(brr), 1e-6)
            worst = max(worst, float(np.max(np.abs(arr - brr) / denom)))
    return worst


def grad_check_cells(
    n_vars: int = 3,
    dim: int = 2,
    hidden: int = 4,
    step: float = 1e-5,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> list[dict]:
    """The 8 config cells: {mse, cosine} x {arity 1, 2} x {per-view, shared}."""
    spec = DatasetSpec(
        n_structures=2, n_vars=n_vars, dim=dim, n_samples=4, edge_density=0.6, seed=seed
    )
    sample = sample_dataset(spec).samples[0]
    cells = []
    for metric in ("mse", "cosine"):
        for arity in (1, 2):
            for shared in (False, True):
                cfg = TrainConfig(
                    epochs=0,
                    distance=metric,
                    intervention_arity=arity,
                    hidden_size=hidden,
                    shared_augmentation=shared,
                    seed=seed,
                )
                views = enumerate_interventions(n_vars, arity)
                rng = np.random.default_rng(seed + 1)
                params = init_params(dim, hidden, views, shared, rng)
                g_an = gradients(params, sample, cfg)
                g_fd = finite_difference_grads(params, sample, cfg, step=step)
                err = max_rel_error(g_an, g_fd)
                cells.append(
                    {
                        "distance": metric,
                        "arity": arity,
                        "shared_augmentation": shared,
                        "max_rel_error": err,
                        "passed": bool(err < tol),
                    }
                )
    return cells
