"""Sweep orchestration: grids over an axis x seeds, restartable outputs.

Every grid point trains on its own config and seed, evaluates on the test
split, and lands in its own JSON file (written atomically via temp-file
rename). Completed points are skipped on re-runs, so an interrupted sweep
resumes where it stopped and a finished sweep directory is never
modified. Grid points run in parallel up to the worker count; each point
is internally sequential.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from . import metrics
from .data import IndefiniteDataset, DatasetSpec, load_dataset, sample_dataset, save_dataset
from .learner import TrainConfig, evaluate_params, train

SWEEP_AXES = ("intervention_fraction", "intervention_arity", "trainset_fraction")

METRIC_KEYS = (
    "structure.auroc",
    "structure.hd_mean",
    "representation.auroc",
    "representation.f1",
    "consistency.auroc",
    "consistency.one_minus_mse",
)


@dataclass(frozen=True)
class ExperimentConfig:
    axis: str
    values: tuple
    seeds: tuple
    out_dir: str
    train: TrainConfig = TrainConfig()
    dataset_spec: DatasetSpec | None = None
    data_path: str | None = None
    workers: int = 1

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r} (one of {SWEEP_AXES})")
        if not self.values or not self.seeds:
            raise ValueError("values and seeds must be non-empty")
        if self.dataset_spec is None and self.data_path is None:
            raise ValueError("either dataset_spec or data_path is required")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ExperimentConfig":
        spec = doc.get("dataset_spec")
        return cls(
            axis=doc["axis"],
            values=tuple(doc["values"]),
            seeds=tuple(doc["seeds"]),
            out_dir=doc["out_dir"],
            train=TrainConfig.from_json_dict(doc.get("train", {})),
            dataset_spec=DatasetSpec.from_json_dict(spec) if spec else None,
            data_path=doc.get("data_path"),
            workers=int(doc.get("workers", 1)),
        )


def atomic_write_text(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def subsample_trainset(dataset: IndefiniteDataset, fraction: float) -> IndefiniteDataset:
    """Keep the first fraction of the train split; valid/test untouched."""
    train_samples = dataset.split_samples("train")
    keep = set(
        id(s) for s in train_samples[: int(round(fraction * len(train_samples)))]
    )
    samples = [s for s in dataset.samples if s.split != "train" or id(s) in keep]
    return IndefiniteDataset(spec=dataset.spec, structures=dataset.structures, samples=samples)


def apply_axis(cfg: TrainConfig, axis: str, value) -> TrainConfig:
    if axis == "intervention_fraction":
        return replace(cfg, intervention_fraction=float(value))
    if axis == "intervention_arity":
        return replace(cfg, intervention_arity=int(value))
    return cfg  # trainset_fraction acts on the dataset, not the config


def run_point(data_path: str, train_doc: dict, axis: str, value, seed: int) -> dict:
    """Train/evaluate one grid point; returns the point document."""
    dataset = load_dataset(data_path)
    cfg = replace(TrainConfig.from_json_dict(train_doc), seed=int(seed))
    cfg = apply_axis(cfg, axis, value)
    if axis == "trainset_fraction":
        dataset = subsample_trainset(dataset, float(value))
    report = train(dataset, cfg)
    test_metrics = evaluate_params(report.params, dataset.split_samples("test"))
    eval_report = metrics.eval_report_from_metrics(test_metrics)
    return {
        "axis": axis,
        "value": value,
        "seed": int(seed),
        "eval": eval_report.to_json_dict(),
        "best_epoch": report.best_epoch,
    }


def _point_path(out_dir: str, axis: str, value, seed: int) -> str:
    return os.path.join(out_dir, f"point_{axis}={value}_seed={seed}.json")


def _worker(args):
    data_path, train_doc, axis, value, seed, path = args
    try:
        doc = run_point(data_path, train_doc, axis, value, seed)
    except Exception as exc:  # per-point failures recorded, sweep continues
        doc = {"axis": axis, "value": value, "seed": int(seed), "error": str(exc)}
    atomic_write_text(path, json.dumps(doc))
    return path


def emit_plot_data(axis: str, points: list[dict]) -> dict:
    """Mean +/- CI series per metric, keyed for plotting."""
    values = []
    for p in points:
        if p["value"] not in values:
            values.append(p["value"])
    series: dict[str, list] = {key: [] for key in METRIC_KEYS}
    for value in values:
        reports = [
            metrics.EvalReport.from_json_dict(p["eval"])
            for p in points
            if p["value"] == value and "eval" in p
        ]
        if not reports:
            continue
        agg = metrics.aggregate(reports)
        for key in METRIC_KEYS:
            series[key].append(
                {
                    "value": value,
                    "mean": agg.values[key],
                    "ci95": agg.ci95.get(key, 0.0),
                }
            )
    return {"axis": axis, "series": series}


def _long_csv(axis: str, points: list[dict]) -> str:
    lines = ["axis,axis_value,seed,metric,value"]
    for p in points:
        if "eval" not in p:
            continue
        rep = metrics.EvalReport.from_json_dict(p["eval"])
        for key in METRIC_KEYS:
            lines.append(f"{axis},{p['value']},{p['seed']},{key},{rep.values[key]!r}")
    return "\n".join(lines) + "\n"


def _agg_csv(axis: str, plot: dict) -> str:
    lines = ["axis,axis_value,metric,mean,ci95"]
    for key in METRIC_KEYS:
        for entry in plot["series"][key]:
            lines.append(
                f"{axis},{entry['value']},{key},{entry['mean']!r},{entry['ci95']!r}"
            )
    return "\n".join(lines) + "\n"


def run_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Run (or resume) the grid; emits point files, CSVs, and plot data."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    if cfg.data_path is not None:
        data_path = cfg.data_path
    else:
        data_path = os.path.join(cfg.out_dir, "data.json")
        if not os.path.exists(data_path):
            tmp_ds = sample_dataset(cfg.dataset_spec)
            save_dataset(tmp_ds, data_path + ".tmp")
            os.replace(data_path + ".tmp", data_path)

    train_doc = cfg.train.to_json_dict()
    pending = []
    paths = []
    for value in cfg.values:
        for seed in cfg.seeds:
            path = _point_path(cfg.out_dir, cfg.axis, value, seed)
            paths.append(path)
            if not os.path.exists(path):
                pending.append((data_path, train_doc, cfg.axis, value, seed, path))

    if pending:
        if cfg.workers > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                list(pool.map(_worker, pending))
        else:
            for args in pending:
                _worker(args)

    points = []
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            points.append(json.load(fh))

    summary_paths = [
        os.path.join(cfg.out_dir, name)
        for name in ("sweep_long.csv", "sweep_agg.csv", "plot_data.json")
    ]
    if pending or not all(os.path.exists(p) for p in summary_paths):
        plot = emit_plot_data(cfg.axis, points)
        atomic_write_text(summary_paths[0], _long_csv(cfg.axis, points))
        atomic_write_text(summary_paths[1], _agg_csv(cfg.axis, plot))
        atomic_write_text(summary_paths[2], json.dumps(plot))
    return points
