"""Synthetic indefinite-dataset generator.

A dataset carries M (>1) distinct ground-truth DAGs over a fixed number of
variables; every sample picks one structure uniformly, draws edge weights
and Gaussian noise, and stores the decoded representations together with
the generating noise so the reconstruction x = decode(w, e) stays exactly
checkable. Generation is single-threaded per seed stream so a spec with
the same seed always reproduces the same dataset byte for byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityExceeded, SchemaError
from .graph import CausalStructure, admissible_mask, hamming_distance, validate_structure
from .scm import decode

SPLIT_FRACTIONS = (0.7, 0.1, 0.2)

# consecutive duplicate draws tolerated before giving up on distinctness
_MAX_STALL_FACTOR = 200


@dataclass(frozen=True)
class DatasetSpec:
    n_structures: int
    n_vars: int
    dim: int
    n_samples: int
    edge_density: float = 0.5
    weight_range: tuple[float, float] = (0.5, 1.0)
    noise_std: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_structures <= 1:
            raise ValueError("n_structures must be > 1 (indefinite data is multi-structure)")
        if self.n_vars < 2 or self.dim < 1 or self.n_samples < 1:
            raise ValueError("n_vars >= 2, dim >= 1, n_samples >= 1 required")
        if not 0.0 < self.edge_density <= 1.0:
            raise ValueError("edge_density must lie in (0,1]")
        lo, hi = self.weight_range
        if not (0.0 < lo <= hi <= 1.0):
            raise ValueError("weight_range must satisfy 0 < lo <= hi <= 1")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be >= 0")
        object.__setattr__(self, "weight_range", (float(lo), float(hi)))

    def to_json_dict(self) -> dict:
        return {
            "n_structures": self.n_structures,
            "n_vars": self.n_vars,
            "dim": self.dim,
            "n_samples": self.n_samples,
            "edge_density": self.edge_density,
            "weight_range": list(self.weight_range),
            "noise_std": self.noise_std,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DatasetSpec":
        return cls(
            n_structures=int(doc["n_structures"]),
            n_vars=int(doc["n_vars"]),
            dim=int(doc["dim"]),
            n_samples=int(doc["n_samples"]),
            edge_density=float(doc["edge_density"]),
            weight_range=tuple(doc["weight_range"]),
            noise_std=float(doc["noise_std"]),
            seed=int(doc["seed"]),
        )


@dataclass(frozen=True, eq=False)
class IndefiniteSample:
    x: np.ndarray  # (N, d) representations
    e: np.ndarray  # (N, d) generating noise
    structure_id: int  # 1-based index into the dataset's structures
    truth: CausalStructure
    truth_weights: np.ndarray
    split: str  # train | valid | test


@dataclass(frozen=True, eq=False)
class IndefiniteDataset:
    spec: DatasetSpec
    structures: list[CausalStructure]
    samples: list[IndefiniteSample]

    def split_samples(self, split: str) -> list[IndefiniteSample]:
        return [s for s in self.samples if s.split == split]


def generate_structures(M: int, N: int, density: float, rng: np.random.Generator):
    """M pairwise-distinct random admissible DAGs, duplicates rejected."""
    capacity = 2 ** math.comb(N, 2)
    if M > capacity:
        raise CapacityExceeded(
            f"{M} distinct structures requested but only {capacity} exist for N={N}"
        )
    mask = admissible_mask(N)
    seen: set[bytes] = set()
    out: list[CausalStructure] = []
    stall = 0
    while len(out) < M:
        adj = (rng.random((N, N)) < density) & mask
        key = adj.tobytes()
        if key in seen:
            stall += 1
            if stall > _MAX_STALL_FACTOR * M:
                raise CapacityExceeded(
                    f"could not draw {M} distinct structures at density {density}"
                )
            continue
        stall = 0
        seen.add(key)
        out.append(validate_structure(adj.astype(np.int64)))
    return out


def _split_tag(index: int, total: int) -> str:
    n_train = int(total * SPLIT_FRACTIONS[0])
    n_valid = int(total * SPLIT_FRACTIONS[1])
    if index < n_train:
        return "train"
    if index < n_train + n_valid:
        return "valid"
    return "test"


def sample_dataset(spec: DatasetSpec) -> IndefiniteDataset:
    """Draw a full dataset; deterministic under spec.seed.

    Per sample the rng stream is consumed in a fixed order: structure id,
    edge weights, then noise.
    """
    rng = np.random.default_rng(spec.seed)
    structures = generate_structures(spec.n_structures, spec.n_vars, spec.edge_density, rng)
    lo, hi = spec.weight_range
    samples = []
    for idx in range(spec.n_samples):
        m = int(rng.integers(1, spec.n_structures + 1))
        truth = structures[m - 1]
        adj = truth.adj.astype(np.float64)
        w = rng.uniform(lo, hi, size=adj.shape) * adj
        e = rng.normal(0.0, spec.noise_std, size=(spec.n_vars, spec.dim))
        x = decode(w, e)
        samples.append(
            IndefiniteSample(
                x=x,
                e=e,
                structure_id=m,
                truth=truth,
                truth_weights=w,
                split=_split_tag(idx, spec.n_samples),
            )
        )
    return IndefiniteDataset(spec=spec, structures=structures, samples=samples)


def dataset_to_json_dict(ds: IndefiniteDataset) -> dict:
    return {
        "spec": ds.spec.to_json_dict(),
        "structures": [s.to_json_dict() for s in ds.structures],
        "samples": [
            {
                "m": s.structure_id,
                "x": s.x.tolist(),
                "e": s.e.tolist(),
                "w": s.truth_weights.tolist(),
                "split": s.split,
            }
            for s in ds.samples
        ],
    }


def _require(doc: dict, key: str, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise SchemaError(f"{path}.{key}", "missing field")
    return doc[key]


def dataset_from_json_dict(doc: dict) -> IndefiniteDataset:
    spec_doc = _require(doc, "spec", "$")
    try:
        spec = DatasetSpec.from_json_dict(spec_doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError("$.spec", str(exc)) from exc
    structures = []
    for i, sdoc in enumerate(_require(doc, "structures", "$")):
        try:
            structures.append(CausalStructure.from_json_dict(sdoc))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"$.structures[{i}]", str(exc)) from exc
    samples = []
    for i, rec in enumerate(_require(doc, "samples", "$")):
        path = f"$.samples[{i}]"
        m = int(_require(rec, "m", path))
        if not 1 <= m <= len(structures):
            raise SchemaError(f"{path}.m", f"structure id {m} out of range")
        x = np.asarray(_require(rec, "x", path), dtype=np.float64)
        e = np.asarray(_require(rec, "e", path), dtype=np.float64)
        w = np.asarray(_require(rec, "w", path), dtype=np.float64)
        shape = (spec.n_vars, spec.dim)
        if x.shape != shape or e.shape != shape or w.shape != (spec.n_vars, spec.n_vars):
            raise SchemaError(path, "sample array shape mismatch")
        split = _require(rec, "split", path)
        if split not in ("train", "valid", "test"):
            raise SchemaError(f"{path}.split", f"unknown split {split!r}")
        samples.append(
            IndefiniteSample(
                x=x, e=e, structure_id=m, truth=structures[m - 1],
                truth_weights=w, split=split,
            )
        )
    return IndefiniteDataset(spec=spec, structures=structures, samples=samples)


def save_dataset(ds: IndefiniteDataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(dataset_to_json_dict(ds), fh)


def load_dataset(path) -> IndefiniteDataset:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"not valid JSON: {exc}") from exc
    return dataset_from_json_dict(doc)


def distinctness_ok(structures) -> bool:
    """True when all structures are pairwise HD >= 1."""
    for i in range(len(structures)):
        for j in range(i + 1, len(structures)):
            if hamming_distance(structures[i], structures[j]) == 0:
                return False
    return True
