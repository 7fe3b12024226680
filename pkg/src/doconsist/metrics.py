"""Evaluation metrics and report aggregation.

AUROC uses the Mann-Whitney formulation with ties counted one half; the
numerator is assembled from integer-valued rank sums so the result is
bit-identical to brute-force pair counting. All graph metrics restrict to
admissible (strictly lower-triangular) entries except c_dis, which counts
over the full matrix as its definition states (the two coincide because
inadmissible entries are identically zero).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _sstats

from .errors import DimensionMismatch, SingleClass
from .graph import CausalStructure, admissible_indices

METRIC_GROUPS = (
    ("structure", ("auroc", "hd_mean")),
    ("representation", ("auroc", "f1")),
    ("consistency", ("auroc", "one_minus_mse")),
)


def auroc(scores, labels) -> float:
    """Probability a random positive outranks a random negative, ties 1/2."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise DimensionMismatch("scores and labels must be equal-length vectors")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("both classes must be present")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s), dtype=np.float64)
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        # average rank over the tie block; 2x to keep it integral
        ranks[order[i : j + 1]] = (i + j + 2) / 2.0
        i = j + 1
    # 2*R_pos - n_pos*(n_pos+1) = 2*wins + ties, an exact integer
    numerator2 = 2.0 * float(np.sum(ranks[y == 1])) - n_pos * (n_pos + 1)
    return numerator2 / (2.0 * n_pos * n_neg)


def auroc_or_neutral(scores, labels) -> float:
    """auroc, or 0.5 when only one class is present (training wrapper)."""
    try:
        return auroc(scores, labels)
    except SingleClass:
        return 0.5


def f1_flat(pred_bits, true_bits) -> float:
    """F1 over flat binary vectors; 0 when precision+recall degenerate."""
    p = np.asarray(pred_bits).astype(int)
    t = np.asarray(true_bits).astype(int)
    tp = int(np.sum((p == 1) & (t == 1)))
    fp = int(np.sum((p == 1) & (t == 0)))
    fn = int(np.sum((p == 0) & (t == 1)))
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    prec = tp / (tp + fp)
    rec = tp / (tp + fn)
    if prec + rec == 0.0:
        return 0.0
    return 2.0 * prec * rec / (prec + rec)


def f1(pred: CausalStructure, truth: CausalStructure) -> float:
    """Edge-positive F1 over admissible entries."""
    if pred.n_vars != truth.n_vars:
        raise DimensionMismatch(f"n_vars {pred.n_vars} != {truth.n_vars}")
    eff, cau = admissible_indices(pred.n_vars)
    return f1_flat(pred.adj[eff, cau], truth.adj[eff, cau])


def inconsistency(a_s, a_r) -> float:
    """Mean squared difference over admissible entries (the inco metric)."""
    if a_s.n_vars != a_r.n_vars:
        raise DimensionMismatch(f"n_vars {a_s.n_vars} != {a_r.n_vars}")
    u = a_s.admissible_values()
    v = a_r.admissible_values()
    return float(np.mean((u - v) ** 2))


def c_dis(pred: CausalStructure, truth: CausalStructure) -> int:
    """Count of differing entries over the full matrix."""
    if pred.n_vars != truth.n_vars:
        raise DimensionMismatch(f"n_vars {pred.n_vars} != {truth.n_vars}")
    return int(np.count_nonzero(pred.adj != truth.adj))


@dataclass(frozen=True)
class EvalReport:
    """Means (and, with >= 2 seeds, 95% t-CI half-widths) per metric.

    ``values`` maps "group.metric" to the mean, ``ci95`` to the half-width
    (absent for single-seed reports), ``per_seed`` to the raw values.
    """

    values: dict
    ci95: dict = field(default_factory=dict)
    per_seed: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"values": self.values, "ci95": self.ci95, "per_seed": self.per_seed}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "EvalReport":
        return cls(
            values=dict(doc["values"]),
            ci95=dict(doc.get("ci95", {})),
            per_seed=dict(doc.get("per_seed", {})),
        )

    def csv_lines(self) -> list[str]:
        """Table-style export: group, metric, mean, ci95."""
        lines = ["group,metric,mean,ci95"]
        for group, names in METRIC_GROUPS:
            for name in names:
                key = f"{group}.{name}"
                ci = self.ci95.get(key)
                lines.append(
                    f"{group},{name},{self.values[key]!r},{'' if ci is None else repr(ci)}"
                )
        return lines


def eval_report_from_metrics(m: dict) -> EvalReport:
    """Map a learner metric dict onto the report's group.metric keys."""
    values = {
        "structure.auroc": m["stru_auroc"],
        "structure.hd_mean": m["stru_hd"],
        "representation.auroc": m["rep_auroc"],
        "representation.f1": m["rep_f1"],
        "consistency.auroc": m["cons_auroc"],
        "consistency.one_minus_mse": 1.0 - m["inco_mse"],
    }
    return EvalReport(values=values, per_seed={k: [v] for k, v in values.items()})


def aggregate(reports: list[EvalReport]) -> EvalReport:
    """Means plus 95% t-interval half-widths across per-seed reports."""
    if not reports:
        raise ValueError("at least one report required")
    per_seed: dict[str, list[float]] = {}
    for rep in reports:
        for key, vals in rep.per_seed.items():
            per_seed.setdefault(key, []).extend(float(v) for v in vals)
    values = {k: float(np.mean(v)) for k, v in per_seed.items()}
    ci95: dict[str, float] = {}
    for key, vals in per_seed.items():
        n = len(vals)
        if n >= 2:
            half = float(
                _sstats.t.ppf(0.975, n - 1) * np.std(vals, ddof=1) / np.sqrt(n)
            )
            ci95[key] = half
    return EvalReport(values=values, ci95=ci95, per_seed=per_seed)
