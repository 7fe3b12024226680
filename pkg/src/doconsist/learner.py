"""SSL training core.

Two shared heads (a pairwise structure scorer and a base causal
classifier) plus one augmentation head per intervention view are trained
jointly under

    lambda_s * dist(A_s, A) + lambda_r * dist(A_r, A)
        + lambda_c * sum_k dist(A_r_do(k), A_s_do(k))

where A_s_do(k) row-zeroes the estimated structure, the intervened
representations are decoded from E = (I - A_s) X, and each view's head
reads the intervened representations. Gradients are hand-rolled
reverse-mode and exact: the row-zeroing mask passes zero gradient to
zeroed rows, and the triangular decode is differentiated through its
adjoint solve. Per-sample losses inside a batch reduce in index order, so
results are seed-stable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels, metrics
from .data import IndefiniteDataset, IndefiniteSample
from .errors import MissingHead, NonFiniteLoss
from .graph import (
    REPRESENTATION_PATH,
    STRUCTURE_PATH,
    AdjacencyEstimate,
    InterventionView,
    admissible_indices,
    enumerate_interventions,
    sample_intervention_subset,
)
from .nets import MlpParams, mlp_backward, mlp_scores

_COS_EPS = 1e-12

EPOCH_CSV_COLUMNS = (
    "epoch",
    "stru_auroc",
    "stru_hd",
    "rep_auroc",
    "rep_f1",
    "inco_mse",
    "cons_auroc",
    "val_loss",
    "loss_total",
    "loss_stru",
    "loss_rep",
    "loss_cons",
)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.02
    epochs: int = 50
    batch_size: int = 32
    lambda_s: float = 1.0
    lambda_r: float = 1.0
    lambda_c: float = 1.0
    distance: str = "mse"  # or "cosine"
    intervention_arity: int = 2
    intervention_fraction: float = 1.0
    hidden_size: int = 32
    seed: int = 0
    shared_augmentation: bool = False
    detach_structure: bool = False

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.hidden_size < 1:
            raise ValueError("learning_rate, batch_size and hidden_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.distance not in ("mse", "cosine"):
            raise ValueError(f"unknown distance {self.distance!r}")
        if not 0.0 <= self.intervention_fraction <= 1.0:
            raise ValueError("intervention_fraction must lie in [0,1]")
        if self.intervention_arity < 1:
            raise ValueError("intervention_arity must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "lambda_s": self.lambda_s,
            "lambda_r": self.lambda_r,
            "lambda_c": self.lambda_c,
            "distance": self.distance,
            "intervention_arity": self.intervention_arity,
            "intervention_fraction": self.intervention_fraction,
            "hidden_size": self.hidden_size,
            "seed": self.seed,
            "shared_augmentation": self.shared_augmentation,
            "detach_structure": self.detach_structure,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TrainConfig":
        return cls(**{k: doc[k] for k in cls().to_json_dict() if k in doc})


@dataclass(eq=False)
class LearnerParams:
    """Shared heads plus per-view augmentation heads.

    In shared-augmentation mode every view key aliases one MlpParams
    object, so updates and gradients accumulate across views.
    """

    theta_struct: MlpParams
    theta_base: MlpParams
    deltas: dict[InterventionView, MlpParams] = field(default_factory=dict)
    shared_augmentation: bool = False

    def views(self) -> list[InterventionView]:
        return list(self.deltas.keys())

    def unique_heads(self) -> list[tuple[str, MlpParams]]:
        """All distinct parameter heads in a stable order."""
        out = [("struct", self.theta_struct), ("base", self.theta_base)]
        seen = {id(self.theta_struct), id(self.theta_base)}
        for view, head in self.deltas.items():
            if id(head) not in seen:
                seen.add(id(head))
                out.append((f"delta:{view.key()}", head))
        return out

    def copy(self) -> "LearnerParams":
        mapping: dict[int, MlpParams] = {}

        def dup(head: MlpParams) -> MlpParams:
            if id(head) not in mapping:
                mapping[id(head)] = head.copy()
            return mapping[id(head)]

        return LearnerParams(
            theta_struct=dup(self.theta_struct),
            theta_base=dup(self.theta_base),
            deltas={v: dup(h) for v, h in self.deltas.items()},
            shared_augmentation=self.shared_augmentation,
        )

    def zeros_like(self) -> "LearnerParams":
        mapping: dict[int, MlpParams] = {}

        def zl(head: MlpParams) -> MlpParams:
            if id(head) not in mapping:
                mapping[id(head)] = head.zeros_like()
            return mapping[id(head)]

        return LearnerParams(
            theta_struct=zl(self.theta_struct),
            theta_base=zl(self.theta_base),
            deltas={v: zl(h) for v, h in self.deltas.items()},
            shared_augmentation=self.shared_augmentation,
        )

    def to_json_dict(self) -> dict:
        return {
            "theta_struct": self.theta_struct.to_json_dict(),
            "theta_base": self.theta_base.to_json_dict(),
            "deltas": {v.key(): h.to_json_dict() for v, h in self.deltas.items()},
            "shared_augmentation": self.shared_augmentation,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "LearnerParams":
        shared = bool(doc.get("shared_augmentation", False))
        keys = list(doc["deltas"].keys())
        deltas: dict[InterventionView, MlpParams] = {}
        shared_head = None
        for key in keys:
            head = MlpParams.from_json_dict(doc["deltas"][key])
            if shared:
                if shared_head is None:
                    shared_head = head
                head = shared_head
            deltas[InterventionView.from_key(key)] = head
        return cls(
            theta_struct=MlpParams.from_json_dict(doc["theta_struct"]),
            theta_base=MlpParams.from_json_dict(doc["theta_base"]),
            deltas=deltas,
            shared_augmentation=shared,
        )


def init_params(
    dim: int,
    hidden: int,
    views: list[InterventionView],
    shared_augmentation: bool,
    rng: np.random.Generator,
) -> LearnerParams:
    """Draws are consumed in a fixed order: struct, base, then view heads."""
    in_dim = 2 * dim
    theta_struct = MlpParams.init(in_dim, hidden, rng)
    theta_base = MlpParams.init(in_dim, hidden, rng)
    deltas: dict[InterventionView, MlpParams] = {}
    if shared_augmentation:
        head = MlpParams.init(in_dim, hidden, rng)
        deltas = {v: head for v in views}
    else:
        deltas = {v: MlpParams.init(in_dim, hidden, rng) for v in views}
    return LearnerParams(theta_struct, theta_base, deltas, shared_augmentation)


# ---------------------------------------------------------------------------
# distances over admissible-entry vectors, per sample, batched as (B, P)


def _dist(u, v, metric, want_u=False, want_v=False):
    """Mean-over-batch distance plus optional cotangents of u and v."""
    B, P = u.shape
    if metric == "mse":
        diff = u - v
        loss = float(np.mean(diff * diff))
        du = (2.0 / (B * P)) * diff if want_u else None
        dv = (-2.0 / (B * P)) * diff if want_v else None
        return loss, du, dv
    # cosine: 1 - u.v / sqrt((|u|^2+eps)(|v|^2+eps)), smooth at v = 0
    s = np.sum(u * v, axis=1)
    qu = np.sum(u * u, axis=1) + _COS_EPS
    qv = np.sum(v * v, axis=1) + _COS_EPS
    nunv = np.sqrt(qu * qv)
    c = s / nunv
    loss = float(np.mean(1.0 - c))
    du = dv = None
    if want_u:
        du = (-v / nunv[:, None] + (c / qu)[:, None] * u) / B
    if want_v:
        dv = (-u / nunv[:, None] + (c / qv)[:, None] * v) / B
    return loss, du, dv


def _pair_features(Xb, eff, cau):
    B = Xb.shape[0]
    Z = np.concatenate((Xb[:, cau, :], Xb[:, eff, :]), axis=2)
    return np.ascontiguousarray(Z.reshape(B * len(eff), -1))


def _scatter_pair_grads(dZ, B, N, d, eff, cau):
    dX = np.zeros((B, N, d))
    dZr = dZ.reshape(B, len(eff), 2 * d)
    for p in range(len(eff)):
        dX[:, cau[p], :] += dZr[:, p, :d]
        dX[:, eff[p], :] += dZr[:, p, d:]
    return dX


def _row_keep_mask(N: int, view: InterventionView) -> np.ndarray:
    keep = np.ones(N)
    for t in view.targets:
        keep[t - 1] = 0.0
    return keep


def _forward_backward(params, Xb, Ab, views, cfg, want_grads=True):
    """Loss (with per-term breakdown) and gradients for one batch.

    Xb (B,N,d) representations, Ab (B,N,N) binary truth. Gradients flow to
    the structure scorer through three consistency paths unless
    cfg.detach_structure: the intervened targets, the decode solve, and
    the encode producing E.
    """
    B, N, d = Xb.shape
    eff, cau = admissible_indices(N)
    P = len(eff)
    Z = _pair_features(Xb, eff, cau)
    v_true = Ab[:, eff, cau]

    S_s, U_s = mlp_scores(params.theta_struct, Z)
    u_s = S_s.reshape(B, P)
    loss_s, du_s, _ = _dist(u_s, v_true, cfg.distance, want_u=want_grads)

    S_r, U_r = mlp_scores(params.theta_base, Z)
    u_r = S_r.reshape(B, P)
    loss_r, du_r, _ = _dist(u_r, v_true, cfg.distance, want_u=want_grads)

    grads = params.zeros_like() if want_grads else None
    du_struct_total = cfg.lambda_s * du_s if want_grads else None

    loss_c = 0.0
    use_cons = cfg.lambda_c != 0.0 and len(views) > 0
    if use_cons:
        As = np.zeros((B, N, N))
        As[:, eff, cau] = u_s
        E = np.ascontiguousarray(Xb - As @ Xb)
        through_struct = want_grads and not cfg.detach_structure
        dAs_mat = np.zeros((B, N, N)) if through_struct else None
        dE_acc = np.zeros((B, N, d)) if through_struct else None
        for view in views:
            head = params.deltas.get(view)
            if head is None:
                raise MissingHead(view)
            keep = _row_keep_mask(N, view)
            Ak = np.ascontiguousarray(As * keep[None, :, None])
            Xk = kernels.decode_forward(Ak, E)
            Zk = _pair_features(Xk, eff, cau)
            S_k, U_k = mlp_scores(head, Zk)
            u_k = S_k.reshape(B, P)
            v_k = Ak[:, eff, cau]
            l_k, du_k, dv_k = _dist(
                u_k, v_k, cfg.distance, want_u=want_grads, want_v=through_struct
            )
            loss_c += l_k
            if not want_grads:
                continue
            g_head, dZk = mlp_backward(
                head, Zk, U_k, S_k, cfg.lambda_c * du_k.reshape(-1)
            )
            grads.deltas[view].add_(g_head)
            if through_struct:
                dXk = _scatter_pair_grads(dZk, B, N, d, eff, cau)
                dAk, dEk = kernels.decode_backward(
                    Ak, Xk, np.ascontiguousarray(dXk)
                )
                dAk[:, eff, cau] += cfg.lambda_c * dv_k
                # zeroed rows are constants of the view: gate their gradient
                dAs_mat += dAk * keep[None, :, None]
                dE_acc += dEk
        if want_grads and through_struct:
            # encode path: E = X - As @ X  =>  dAs -= dE @ X^T
            dAs_mat -= np.einsum("bnd,bmd->bnm", dE_acc, Xb)
            du_struct_total = du_struct_total + dAs_mat[:, eff, cau]

    total = cfg.lambda_s * loss_s + cfg.lambda_r * loss_r + cfg.lambda_c * loss_c

    if want_grads:
        g_struct, _ = mlp_backward(
            params.theta_struct, Z, U_s, S_s, du_struct_total.reshape(-1)
        )
        grads.theta_struct.add_(g_struct)
        g_base, _ = mlp_backward(
            params.theta_base, Z, U_r, S_r, (cfg.lambda_r * du_r).reshape(-1)
        )
        grads.theta_base.add_(g_base)

    parts = {
        "loss_total": total,
        "loss_stru": loss_s,
        "loss_rep": loss_r,
        "loss_cons": loss_c,
    }
    return total, parts, grads


# ---------------------------------------------------------------------------
# public single-sample operations


def _scores_to_estimate(scores, N, eff, cau, source) -> AdjacencyEstimate:
    w = np.zeros((N, N))
    w[eff, cau] = scores
    return AdjacencyEstimate(n_vars=N, weights=w, source=source)


def estimate_structure(theta_struct: MlpParams, X: np.ndarray) -> AdjacencyEstimate:
    """Structure-path estimate: admissible entry (i,j) scores [x_j + x_i]."""
    X = np.asarray(X, dtype=np.float64)
    N = X.shape[0]
    eff, cau = admissible_indices(N)
    Z = _pair_features(X[None], eff, cau)
    S, _ = mlp_scores(theta_struct, Z)
    return _scores_to_estimate(S, N, eff, cau, STRUCTURE_PATH)


def classify_pairs(head: MlpParams, X: np.ndarray) -> AdjacencyEstimate:
    """Representation-path estimate from a pairwise classifier head."""
    X = np.asarray(X, dtype=np.float64)
    N = X.shape[0]
    eff, cau = admissible_indices(N)
    Z = _pair_features(X[None], eff, cau)
    S, _ = mlp_scores(head, Z)
    return _scores_to_estimate(S, N, eff, cau, REPRESENTATION_PATH)


def consistency_loss(
    params: LearnerParams,
    A_s: AdjacencyEstimate,
    E: np.ndarray,
    views: list[InterventionView],
    metric: str = "mse",
) -> float:
    """Sum over views of dist(A_r_do(k), A_s_do(k)) for one sample."""
    N = A_s.n_vars
    eff, cau = admissible_indices(N)
    E = np.asarray(E, dtype=np.float64)
    As = np.asarray(A_s.weights)[None]
    total = 0.0
    for view in views:
        head = params.deltas.get(view)
        if head is None:
            raise MissingHead(view)
        keep = _row_keep_mask(N, view)
        Ak = np.ascontiguousarray(As * keep[None, :, None])
        Xk = kernels.decode_forward(Ak, np.ascontiguousarray(E[None]))
        Zk = _pair_features(Xk, eff, cau)
        S_k, _ = mlp_scores(head, Zk)
        l_k, _, _ = _dist(S_k.reshape(1, -1), Ak[:, eff, cau], metric)
        total += l_k
    return total


def total_loss(params: LearnerParams, sample: IndefiniteSample, cfg: TrainConfig):
    """Per-sample training objective; returns (value, per-term breakdown)."""
    Xb = np.ascontiguousarray(sample.x[None])
    Ab = sample.truth.adj.astype(np.float64)[None]
    total, parts, _ = _forward_backward(
        params, Xb, Ab, params.views(), cfg, want_grads=False
    )
    return total, parts


def gradients(params: LearnerParams, sample: IndefiniteSample, cfg: TrainConfig):
    """Exact reverse-mode gradients of total_loss, mirroring LearnerParams."""
    Xb = np.ascontiguousarray(sample.x[None])
    Ab = sample.truth.adj.astype(np.float64)[None]
    _, _, grads = _forward_backward(params, Xb, Ab, params.views(), cfg, want_grads=True)
    return grads


# ---------------------------------------------------------------------------
# optimizer and training loop


class Adam:
    """Adam with bias correction over the unique parameter heads."""

    def __init__(self, params: LearnerParams, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.moments = {}
        for name, head in params.unique_heads():
            for aname, arr in head.arrays():
                self.moments[(name, aname)] = (np.zeros_like(arr), np.zeros_like(arr))

    def step(self, params: LearnerParams, grads: LearnerParams) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        grad_heads = dict(grads.unique_heads())
        for name, head in params.unique_heads():
            ghead = grad_heads[name]
            for (aname, arr), (_, garr) in zip(head.arrays(), ghead.arrays()):
                m, v = self.moments[(name, aname)]
                m *= self.beta1
                m += (1.0 - self.beta1) * garr
                v *= self.beta2
                v += (1.0 - self.beta2) * garr * garr
                arr -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


@dataclass(eq=False)
class TrainReport:
    config: TrainConfig
    n_vars: int
    dim: int
    view_keys: list[str]
    epochs: list[dict]
    best_epoch: int | None
    params: LearnerParams
    wall_time_s: float

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "n_vars": self.n_vars,
            "dim": self.dim,
            "views": self.view_keys,
            "epochs": self.epochs,
            "best_epoch": self.best_epoch,
            "params": self.params.to_json_dict(),
            "wall_time_s": self.wall_time_s,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "TrainReport":
        return cls(
            config=TrainConfig.from_json_dict(doc["config"]),
            n_vars=int(doc["n_vars"]),
            dim=int(doc["dim"]),
            view_keys=list(doc["views"]),
            epochs=list(doc["epochs"]),
            best_epoch=doc["best_epoch"],
            params=LearnerParams.from_json_dict(doc["params"]),
            wall_time_s=float(doc["wall_time_s"]),
        )

    def epoch_csv_lines(self) -> list[str]:
        lines = [",".join(EPOCH_CSV_COLUMNS)]
        for row in self.epochs:
            cells = []
            for col in EPOCH_CSV_COLUMNS:
                val = row[col]
                cells.append(str(val) if isinstance(val, int) else repr(float(val)))
            lines.append(",".join(cells))
        return lines


def _stack_split(samples):
    X = np.ascontiguousarray(np.stack([s.x for s in samples]))
    A = np.ascontiguousarray(
        np.stack([s.truth.adj for s in samples]).astype(np.float64)
    )
    return X, A


def evaluate_params(params: LearnerParams, samples) -> dict:
    """Pooled validation metrics for the two shared heads.

    AUROC pools admissible entries across samples; degenerate single-class
    poolings score a neutral 0.5. The consistency AUROC ranks A_r entries
    against binarized (0.5) A_s entries.
    """
    X, A = _stack_split(samples)
    B, N, _ = X.shape
    eff, cau = admissible_indices(N)
    Z = _pair_features(X, eff, cau)
    u_s = mlp_scores(params.theta_struct, Z)[0].reshape(B, -1)
    u_r = mlp_scores(params.theta_base, Z)[0].reshape(B, -1)
    v = A[:, eff, cau]
    labels = v.reshape(-1).astype(int)
    s_bits = (u_s > 0.5).astype(int)
    r_bits = (u_r > 0.5).astype(int)
    hd_mean = float(np.mean(np.sum(s_bits != v.astype(int), axis=1)))
    inco = float(np.mean((u_s - u_r) ** 2))
    return {
        "stru_auroc": metrics.auroc_or_neutral(u_s.reshape(-1), labels),
        "stru_hd": hd_mean,
        "rep_auroc": metrics.auroc_or_neutral(u_r.reshape(-1), labels),
        "rep_f1": metrics.f1_flat(r_bits.reshape(-1), labels),
        "inco_mse": inco,
        "cons_auroc": metrics.auroc_or_neutral(u_r.reshape(-1), s_bits.reshape(-1)),
    }


def select_views(n_vars: int, cfg: TrainConfig) -> list[InterventionView]:
    """The run's intervention set: all views of the configured arity,
    subsampled to the configured fraction under the run seed."""
    views = enumerate_interventions(n_vars, cfg.intervention_arity)
    return sample_intervention_subset(views, cfg.intervention_fraction, cfg.seed)


def train(dataset: IndefiniteDataset, cfg: TrainConfig) -> TrainReport:
    """Mini-batch Adam training; deterministic under (seed, config, data).

    Returns the best-validation-epoch parameters, selected on validation
    total loss (earliest epoch wins ties).
    """
    t0 = time.perf_counter()
    N, d = dataset.spec.n_vars, dataset.spec.dim
    if cfg.intervention_arity > N:
        raise ValueError(f"intervention_arity {cfg.intervention_arity} exceeds N={N}")
    views = select_views(N, cfg)
    rng = np.random.default_rng(cfg.seed)
    params = init_params(d, cfg.hidden_size, views, cfg.shared_augmentation, rng)

    train_samples = dataset.split_samples("train")
    valid_samples = dataset.split_samples("valid")
    Xtr, Atr = _stack_split(train_samples)
    Xva, Ava = _stack_split(valid_samples)
    n_train = len(train_samples)

    adam = Adam(params, cfg.learning_rate)
    series: list[dict] = []
    best_metric = np.inf
    best_epoch: int | None = None
    best_params = params.copy()

    for epoch in range(cfg.epochs):
        order = rng.permutation(n_train)
        sums = {"loss_total": 0.0, "loss_stru": 0.0, "loss_rep": 0.0, "loss_cons": 0.0}
        for start in range(0, n_train, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            total, parts, grads = _forward_backward(
                params,
                np.ascontiguousarray(Xtr[idx]),
                np.ascontiguousarray(Atr[idx]),
                views,
                cfg,
                want_grads=True,
            )
            if not np.isfinite(total):
                raise NonFiniteLoss(epoch)
            adam.step(params, grads)
            for key in sums:
                sums[key] += parts[key] * len(idx)
        val = evaluate_params(params, valid_samples)
        val_loss, _, _ = _forward_backward(params, Xva, Ava, views, cfg, want_grads=False)
        row = {"epoch": epoch, **val, "val_loss": val_loss}
        for key, acc in sums.items():
            row[key] = acc / n_train
        series.append(row)
        if val_loss < best_metric:
            best_metric = val_loss
            best_epoch = epoch
            best_params = params.copy()

    return TrainReport(
        config=cfg,
        n_vars=N,
        dim=d,
        view_keys=[v.key() for v in views],
        epochs=series,
        best_epoch=best_epoch,
        params=best_params,
        wall_time_s=time.perf_counter() - t0,
    )
