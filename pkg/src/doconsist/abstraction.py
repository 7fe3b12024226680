"""Brute-force verification of the causal-consistency condition on linear SCMs.

A linear triangular SCM x = W x + u (u independent, diagonal covariance)
has total-effect matrix T = (I - W)^{-1}. The "strength set" at a given
arity collects, for every intervention view of that arity, the total
effect of each admissible ordered pair in the row-zeroed system. Two
models are abstraction-equivalent at an arity when their strength sets
agree entrywise; the distribution check resimulates both intervened
systems and compares per-variable marginals with a two-sample KS
statistic. Relationship-existence fingerprints (binarized reachability
under intervention) drive the minimal-distinguishing-arity search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .graph import InterventionView, admissible_indices, admissible_mask, enumerate_interventions
from .scm import intervene_structure

_EXIST_EPS = 1e-9


@dataclass(frozen=True, eq=False)
class LinearScmSpec:
    """Strictly lower-triangular weights (any reals) plus per-variable stds."""

    weights: np.ndarray
    noise_std: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        s = np.asarray(self.noise_std, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise DimensionMismatch(f"weights must be square, got {w.shape}")
        if np.any(w[~admissible_mask(w.shape[0])] != 0.0):
            raise DimensionMismatch("weights must be strictly lower triangular")
        if s.shape != (w.shape[0],) or np.any(s <= 0.0):
            raise ValueError("noise_std must be positive, one entry per variable")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "noise_std", s)

    @property
    def n_vars(self) -> int:
        return self.weights.shape[0]


def total_effects(weights: np.ndarray) -> np.ndarray:
    """T = (I - W)^{-1}; entry (i,j) is the total effect of x_j on x_i."""
    n = weights.shape[0]
    return np.linalg.inv(np.eye(n) - weights)


def strength_set(scm: LinearScmSpec, arity: int) -> dict:
    """Map (view targets, (effect, cause)) -> total-effect coefficient.

    Pairs are 1-based and restricted to admissible positions.
    """
    n = scm.n_vars
    eff, cau = admissible_indices(n)
    out = {}
    for view in enumerate_interventions(n, arity):
        t = total_effects(intervene_structure(scm.weights, view))
        for i, j in zip(eff, cau):
            out[(view.targets, (int(i) + 1, int(j) + 1))] = float(t[i, j])
    return out


def abstraction_equivalent(
    a: LinearScmSpec, b: LinearScmSpec, arity: int, tol: float = 0.0
) -> bool:
    """True iff strength sets agree entrywise within tol across all views."""
    if a.n_vars != b.n_vars:
        raise DimensionMismatch(f"n_vars {a.n_vars} != {b.n_vars}")
    sa = strength_set(a, arity)
    sb = strength_set(b, arity)
    return all(abs(sa[k] - sb[k]) <= tol for k in sa)


def simulate(scm: LinearScmSpec, view: InterventionView | None, n_draws: int, rng) -> np.ndarray:
    """Draws (n_draws, N) from the (optionally intervened) linear SCM."""
    w = scm.weights if view is None else intervene_structure(scm.weights, view)
    u = rng.normal(0.0, 1.0, size=(n_draws, scm.n_vars)) * scm.noise_std
    return u @ total_effects(w).T


def ks_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (max ECDF gap)."""
    xs = np.sort(x)
    ys = np.sort(y)
    grid = np.concatenate([xs, ys])
    fx = np.searchsorted(xs, grid, side="right") / len(xs)
    fy = np.searchsorted(ys, grid, side="right") / len(ys)
    return float(np.max(np.abs(fx - fy)))


def ks_critical(n_draws: int, alpha: float = 0.05) -> float:
    """Two-sample critical value c(alpha)*sqrt(2/n) for equal sizes."""
    c = np.sqrt(-np.log(alpha / 2.0) / 2.0)
    return float(c * np.sqrt(2.0 / n_draws))


def distribution_check(
    a: LinearScmSpec,
    b: LinearScmSpec,
    view: InterventionView,
    n_draws: int = 10000,
    seed: int = 0,
) -> float:
    """Largest per-variable KS statistic between the intervened models."""
    if a.n_vars != b.n_vars:
        raise DimensionMismatch(f"n_vars {a.n_vars} != {b.n_vars}")
    if not np.allclose(a.noise_std, b.noise_std):
        raise ValueError("distribution_check assumes matching noise scales")
    rng = np.random.default_rng(seed)
    xa = simulate(a, view, n_draws, rng)
    xb = simulate(b, view, n_draws, rng)
    return max(ks_statistic(xa[:, i], xb[:, i]) for i in range(a.n_vars))


def existence_fingerprint(scm: LinearScmSpec, view: InterventionView) -> frozenset:
    """Admissible (effect, cause) pairs with nonzero total effect under do_g."""
    t = total_effects(intervene_structure(scm.weights, view))
    eff, cau = admissible_indices(scm.n_vars)
    return frozenset(
        (int(i) + 1, int(j) + 1)
        for i, j in zip(eff, cau)
        if abs(t[i, j]) > _EXIST_EPS
    )


def min_distinguishing_arity(a: LinearScmSpec, b: LinearScmSpec, max_arity: int):
    """Smallest arity whose existence fingerprints differ; None otherwise."""
    if a.n_vars != b.n_vars:
        raise DimensionMismatch(f"n_vars {a.n_vars} != {b.n_vars}")
    for arity in range(1, max_arity + 1):
        for view in enumerate_interventions(a.n_vars, arity):
            if existence_fingerprint(a, view) != existence_fingerprint(b, view):
                return arity
    return None


def mediated_pair(weight: float = 0.5, extra_edge_weight: float = 0.5):
    """The 4-node pair whose difference is invisible to single interventions.

    Model A routes all influence of x1 on x4 through x2 and x3
    (edges 1->2, 1->3, 2->3, 2->4, 3->4); model B adds the direct edge
    1->4. Every single-variable do_g leaves identical relationship-
    existence sets, while do_g(x2, x3) severs the x1->x4 influence in A
    but not in B.
    """
    w = weight
    wa = np.zeros((4, 4))
    wa[1, 0] = w
    wa[2, 0] = w
    wa[2, 1] = w
    wa[3, 1] = w
    wa[3, 2] = w
    wb = wa.copy()
    wb[3, 0] = extra_edge_weight
    std = np.ones(4)
    return LinearScmSpec(wa, std), LinearScmSpec(wb, std)


# ---------------------------------------------------------------------------
# verdict-agreement experiment (the CCC simulation)


def random_scm(n_vars: int, rng: np.random.Generator) -> LinearScmSpec:
    """Dense-ish random triangular SCM with weights bounded away from zero."""
    mask = admissible_mask(n_vars) & (rng.random((n_vars, n_vars)) < 0.7)
    mag = rng.uniform(0.3, 1.0, size=(n_vars, n_vars))
    sign = np.where(rng.random((n_vars, n_vars)) < 0.5, -1.0, 1.0)
    return LinearScmSpec(mag * sign * mask, np.ones(n_vars))


def perturbed_copy(scm: LinearScmSpec, rng: np.random.Generator, delta: float = 0.3):
    """Copy with one admissible entry pushed away from zero by delta."""
    w = scm.weights.copy()
    eff, cau = admissible_indices(scm.n_vars)
    k = int(rng.integers(len(eff)))
    i, j = eff[k], cau[k]
    w[i, j] += delta if w[i, j] >= 0 else -delta
    return LinearScmSpec(w, scm.noise_std.copy())


def sidak_alpha(alpha: float, comparisons: int) -> float:
    """Per-comparison level giving a family-wise level of alpha."""
    return 1.0 - (1.0 - alpha) ** (1.0 / comparisons)


def mc_equivalence_verdict(
    a: LinearScmSpec,
    b: LinearScmSpec,
    arity: int,
    n_draws: int,
    seed: int,
    alpha: float = 0.05,
) -> bool:
    """Monte-Carlo verdict: all views pass the family-wise KS test.

    The family is every (view, variable) comparison, so the per-comparison
    critical value is Sidak-corrected to keep the whole verdict at level
    alpha.
    """
    views = enumerate_interventions(a.n_vars, arity)
    crit = ks_critical(n_draws, sidak_alpha(alpha, len(views) * a.n_vars))
    rng = np.random.default_rng(seed)
    for view in views:
        stat = distribution_check(a, b, view, n_draws, int(rng.integers(2**63)))
        if stat >= crit:
            return False
    return True


def ccc_agreement(
    n_vars: int = 4,
    trials: int = 100,
    n_draws: int = 10000,
    seed: int = 0,
    arity: int = 1,
    equivalent_fraction: float = 0.1,
    tol: float = 1e-9,
) -> dict:
    """Compare analytic and Monte-Carlo equivalence verdicts on random pairs.

    A fixed fraction of the pairs are exact copies (equivalent); the rest
    get one perturbed edge. Returns the agreement count and per-trial
    verdicts.
    """
    rng = np.random.default_rng(seed)
    n_equiv = int(round(equivalent_fraction * trials))
    agree = 0
    rows = []
    for trial in range(trials):
        a = random_scm(n_vars, rng)
        if trial < n_equiv:
            b = LinearScmSpec(a.weights.copy(), a.noise_std.copy())
        else:
            b = perturbed_copy(a, rng)
        analytic = abstraction_equivalent(a, b, arity, tol=tol)
        mc = mc_equivalence_verdict(a, b, arity, n_draws, int(rng.integers(2**63)))
        agree += int(analytic == mc)
        rows.append({"trial": trial, "analytic": analytic, "monte_carlo": mc})
    return {
        "n_vars": n_vars,
        "trials": trials,
        "n_draws": n_draws,
        "arity": arity,
        "agreement": agree,
        "rows": rows,
    }
