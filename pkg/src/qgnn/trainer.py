"""ADAM training loop, validation metrics and evaluation reports."""

import csv
import io
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import CheckpointError, ConfigurationError, DomainError, NumericError
from .graph import load_subgraphs
from .metrics import class_weights, roc_auc, weighted_bce
from .model import (Evaluator, ModelParams, init_params, load_checkpoint, qgnn_forward,
                    qgnn_gradient, save_checkpoint)

log = logging.getLogger(__name__)

METRICS_COLUMNS = ("step", "subgraph_id", "train_loss", "val_loss", "val_auc")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    n_iterations: int = 1
    epochs: int = 1
    n_train: int = 400
    n_val: int = 80
    seed: int = 0
    val_every: int = 25
    clamp_eps: float = 1e-7
    backend: str = "tree"
    shots: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.n_train < 1 or self.n_val < 1:
            raise ConfigurationError("train and validation split counts must be >= 1")
        if self.n_iterations < 1:
            raise ConfigurationError("n_iterations must be >= 1")
        if self.epochs < 0 or self.val_every < 1 or self.shots < 0:
            raise ConfigurationError("epochs and shots must be >= 0, val_every >= 1")

    def evaluator(self):
        return Evaluator(self.backend, self.threads, self.shots,
                         np.random.default_rng(self.seed) if self.shots else None)


@dataclass
class AdamState:
    t: int
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros(cls, size):
        return cls(0, np.zeros(size), np.zeros(size))


def adam_step(params: ModelParams, grads: ModelParams, state: AdamState, config=TrainConfig()):
    """One bias-corrected ADAM update over all parameter blocks.

    Angles are left unwrapped. A non-finite gradient raises before anything
    is modified.
    """
    g = grads.to_vector()
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gradient; ADAM step aborted")
    t = state.t + 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    m = b1 * state.m + (1.0 - b1) * g
    v = b2 * state.v + (1.0 - b2) * g * g
    m_hat = m / (1.0 - b1 ** t)
    v_hat = v / (1.0 - b2 ** t)
    theta = params.to_vector() - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
    return params.with_vector(theta), AdamState(t, m, v)


@dataclass
class TrainRecord:
    step: int
    subgraph_id: str = ""
    train_loss: float | None = None
    val_loss: float | None = None
    val_auc: float | None = None

    def row(self):
        def fmt(v):
            return "" if v is None else repr(float(v))
        return [str(self.step), self.subgraph_id, fmt(self.train_loss),
                fmt(self.val_loss), fmt(self.val_auc)]


@dataclass
class EvalSummary:
    mean_loss: float
    auc: float
    n_subgraphs: int
    n_excluded: int
    n_edges: int
    hist_counts: np.ndarray = field(repr=False)
    hist_edges: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)


def split_dataset(subgraphs, config):
    """Deterministic shuffle, then split.

    Edgeless subgraphs count toward the split sizes but are skipped by
    training and evaluation.
    """
    if not any(g.n_edges for g in subgraphs):
        raise DomainError("dataset has no subgraph with edges")
    if config.n_train + config.n_val > len(subgraphs):
        raise ConfigurationError(
            f"split {config.n_train}+{config.n_val} exceeds the {len(subgraphs)} subgraphs")
    order = np.random.default_rng(config.seed).permutation(len(subgraphs))
    picked = [subgraphs[i] for i in order]
    return picked[:config.n_train], picked[config.n_train:config.n_train + config.n_val]


def evaluate_params(params, subgraphs, clamp_eps=1e-7, evaluator=None, bins=20):
    """Mean per-subgraph loss and pooled AUC.

    Subgraphs lacking either class are left out of the AUC pool and counted.
    """
    evaluator = evaluator or Evaluator()
    losses, pooled_p, pooled_y, all_p = [], [], [], []
    excluded = 0
    for g in subgraphs:
        if g.n_edges == 0:
            continue
        p = qgnn_forward(g, params, evaluator)
        losses.append(weighted_bce(p, g.labels, class_weights(g.labels), clamp_eps))
        all_p.append(p)
        if 0 < g.labels.sum() < g.n_edges:
            pooled_p.append(p)
            pooled_y.append(g.labels)
        else:
            excluded += 1
    if not losses:
        raise DomainError("no subgraph with edges to evaluate")
    probs = np.concatenate(pooled_p) if pooled_p else np.zeros(0)
    labels = np.concatenate(pooled_y) if pooled_y else np.zeros(0, dtype=np.int64)
    auc = roc_auc(probs, labels) if pooled_p else float("nan")
    counts, edges = np.histogram(np.concatenate(all_p), bins=bins, range=(0.0, 1.0))
    return EvalSummary(float(np.mean(losses)), auc, len(losses), excluded,
                       int(sum(len(p) for p in all_p)), counts, edges, probs, labels)


def _resolve(dataset):
    if isinstance(dataset, (str, Path)):
        return load_subgraphs(dataset)
    return list(dataset)


def metrics_csv_text(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for rec in records:
        w.writerow(rec.row())
    return buf.getvalue()


def read_metrics_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != METRICS_COLUMNS:
            raise DomainError(f"{path}: unexpected metrics header {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(TrainRecord(
                int(row["step"]), row["subgraph_id"],
                *(float(row[c]) if row[c] else None for c in METRICS_COLUMNS[2:])))
    return out


@dataclass
class TrainResult:
    params: ModelParams
    adam: AdamState
    records: list
    checkpoint_path: Path | None = None
    metrics_path: Path | None = None

    @property
    def val_records(self):
        return [r for r in self.records if r.val_auc is not None or r.val_loss is not None]


def train(dataset, config=TrainConfig(), out_dir=None, params=None):
    """Train on a directory of ``.sg`` files or a list of SubGraphs.

    One ADAM step per training subgraph. Validation runs before the first
    step, every ``val_every`` steps and after the last step. When ``out_dir``
    is given, ``metrics.csv`` and ``model.ckpt`` are written there.
    """
    subgraphs = _resolve(dataset)
    train_set, val_set = split_dataset(subgraphs, config)
    train_set = [g for g in train_set if g.n_edges > 0]
    if not train_set:
        raise DomainError("training split has no subgraph with edges")
    evaluator = config.evaluator()
    if params is None:
        params = init_params(config.n_iterations, seed=config.seed)
    adam = AdamState.zeros(params.to_vector().size)
    out_dir = Path(out_dir) if out_dir is not None else None
    ckpt_path = out_dir / "model.ckpt" if out_dir else None
    metrics_path = out_dir / "metrics.csv" if out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)

    def validate(record):
        summary = evaluate_params(params, val_set, config.clamp_eps, evaluator)
        record.val_loss, record.val_auc = summary.mean_loss, summary.auc
        log.info("step %d  val_loss %.4f  val_auc %.4f", record.step,
                 summary.mean_loss, summary.auc)

    records = [TrainRecord(0)]
    validate(records[0])
    order_rng = np.random.default_rng(config.seed + 1)
    step = 0
    try:
        for epoch in range(config.epochs):
            order = order_rng.permutation(len(train_set)) if epoch else np.arange(len(train_set))
            for idx in order:
                g = train_set[idx]
                step += 1
                loss, grad, _ = qgnn_gradient(g, params, clamp_eps=config.clamp_eps,
                                              evaluator=evaluator)
                if not np.isfinite(loss):
                    raise NumericError(f"non-finite loss at step {step} ({g.name})")
                params, adam = adam_step(params, grad, adam, config)
                rec = TrainRecord(step, g.name, loss)
                last = epoch == config.epochs - 1 and idx == order[-1]
                if step % config.val_every == 0 or last:
                    validate(rec)
                records.append(rec)
    except NumericError:
        if ckpt_path:
            save_checkpoint(ckpt_path, params, adam)
            metrics_path.write_text(metrics_csv_text(records), encoding="utf-8")
        raise
    if out_dir:
        save_checkpoint(ckpt_path, params, adam)
        metrics_path.write_text(metrics_csv_text(records), encoding="utf-8")
    return TrainResult(params, adam, records, ckpt_path, metrics_path)


def evaluate(checkpoint, dataset, config=None, split="val"):
    """Evaluate a checkpoint on the val/train split of ``dataset`` or all of it."""
    params, _ = load_checkpoint(checkpoint) if not isinstance(checkpoint, ModelParams) \
        else (checkpoint, None)
    subgraphs = _resolve(dataset)
    if config is None:
        config = TrainConfig(n_iterations=params.n_iterations)
    if config.n_iterations != params.n_iterations:
        config = replace(config, n_iterations=params.n_iterations)
    width = params.width
    for g in subgraphs:
        if g.node_features.shape[1] != width - params.d_hid:
            raise CheckpointError("checkpoint does not match the dataset feature width")
    if split == "all":
        chosen = subgraphs
    elif split in ("train", "val"):
        train_set, val_set = split_dataset(subgraphs, config)
        chosen = val_set if split == "val" else train_set
    else:
        raise ConfigurationError(f"unknown split {split!r}")
    return evaluate_params(params, chosen, config.clamp_eps, config.evaluator())
