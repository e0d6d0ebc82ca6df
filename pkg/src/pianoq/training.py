"""Training loop, evaluation metrics, and history export.

The optimizer is minibatch SGD with momentum; class weights are
recomputed from the actual training-split counts before every run so the
loss always reflects the data it sees.  The returned model carries the
parameters from the epoch with the best validation accuracy (earliest
epoch on ties).
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .cnn import FocalLossConfig, MicroCnn, _focal_terms, compute_alphas, softmax
from .dataset import DatasetIndex
from .errors import EmptySplit
from .labels import N_CLASSES


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    gamma: float = 0.0
    seed: int = 0
    #: Epochs at whose start the learning rate is multiplied by
    #: decay_factor (classic step schedule); empty = constant rate.
    decay_epochs: tuple[int, ...] = ()
    decay_factor: float = 0.2


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


@dataclass
class Metrics:
    """Evaluation summary: accuracy, support-weighted F1, and confusion counts."""

    accuracy: float
    weighted_f1: float
    confusion: np.ndarray  # (k, k), rows = true class
    support: np.ndarray  # (k,), row sums of confusion


def _batch_gradients(model: MicroCnn, images: np.ndarray, targets: np.ndarray, config: FocalLossConfig):
    """Mean focal loss, predictions, and parameter gradients for one batch."""
    logits, cache = model.forward_batch(images)
    p = softmax(logits)
    losses, dloss_dpt, p_t = _focal_terms(p, targets, config)
    n = len(targets)
    onehot = np.zeros_like(p)
    onehot[np.arange(n), targets] = 1.0
    dlogits = (dloss_dpt * p_t)[:, None] * (onehot - p) / n
    grads = model.backward_batch(dlogits, cache)
    return float(losses.mean()), p.argmax(axis=1), grads


def _split_loss_accuracy(model: MicroCnn, images: np.ndarray, targets: np.ndarray, config: FocalLossConfig, chunk=256):
    """Loss and accuracy over a whole split, evaluated in chunks."""
    loss_sum = 0.0
    correct = 0
    for start in range(0, len(targets), chunk):
        sl = slice(start, start + chunk)
        logits, _ = model.forward_batch(images[sl])
        p = softmax(logits)
        losses, _, _ = _focal_terms(p, targets[sl], config)
        loss_sum += losses.sum()
        correct += int((p.argmax(axis=1) == targets[sl]).sum())
    return loss_sum / len(targets), correct / len(targets)


def train(index: DatasetIndex, config: TrainConfig) -> tuple[MicroCnn, list[EpochStats]]:
    """Train a fresh MicroCnn on the index's train split.

    Deterministic given config.seed: the same seed drives initialization
    and every epoch's shuffle.
    """
    train_images, train_targets = index.stacked("train")
    val_images, val_targets = index.stacked("val")

    counts = np.bincount(train_targets, minlength=N_CLASSES)
    loss_config = FocalLossConfig(weights=compute_alphas(counts), gamma=config.gamma)

    rng = np.random.default_rng(config.seed)
    model = MicroCnn.initialize(rng)
    velocity = {name: np.zeros_like(p) for name, p in model.parameters().items()}

    n = len(train_targets)
    history: list[EpochStats] = []
    best_accuracy = -1.0
    best_params = {k: v.copy() for k, v in model.parameters().items()}

    for epoch in range(config.epochs):
        rate = config.learning_rate * config.decay_factor ** sum(
            1 for d in config.decay_epochs if epoch >= d
        )
        perm = rng.permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            loss, preds, grads = _batch_gradients(model, train_images[idx], train_targets[idx], loss_config)
            loss_sum += loss * len(idx)
            correct += int((preds == train_targets[idx]).sum())
            for name, g in grads.items():
                v = velocity[name]
                v *= config.momentum
                v -= rate * g
                getattr(model, name).__iadd__(v)
        val_loss, val_accuracy = _split_loss_accuracy(model, val_images, val_targets, loss_config)
        history.append(
            EpochStats(
                epoch=epoch,
                train_loss=loss_sum / n,
                train_accuracy=correct / n,
                val_loss=val_loss,
                val_accuracy=val_accuracy,
            )
        )
        if val_accuracy > best_accuracy:
            best_accuracy = val_accuracy
            best_params = {k: v.copy() for k, v in model.parameters().items()}

    return MicroCnn(best_params), history


def metrics_from_confusion(confusion: np.ndarray) -> Metrics:
    """Accuracy and support-weighted F1 from a k x k count matrix.

    Per-class F1 uses precision = diag/column and recall = diag/row; a
    class with no predictions and no support contributes F1 = 0 with
    weight 0.
    """
    c = np.asarray(confusion, dtype=np.float64)
    support = c.sum(axis=1)
    total = c.sum()
    diag = np.diag(c)
    col = c.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(col > 0, diag / col, 0.0)
        recall = np.where(support > 0, diag / support, 0.0)
        denom = precision + recall
        f1 = np.where(denom > 0, 2 * precision * recall / denom, 0.0)
    return Metrics(
        accuracy=float(diag.sum() / total),
        weighted_f1=float((f1 * support).sum() / support.sum()),
        confusion=np.asarray(confusion),
        support=np.asarray(confusion).sum(axis=1),
    )


def evaluate(model: MicroCnn, index: DatasetIndex, split: str = "test") -> Metrics:
    """Confusion-matrix metrics of a model on one split."""
    images, targets = index.stacked(split)
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    for start in range(0, len(targets), 256):
        sl = slice(start, start + 256)
        logits, _ = model.forward_batch(images[sl])
        preds = logits.argmax(axis=1)
        np.add.at(confusion, (targets[sl], preds), 1)
    return metrics_from_confusion(confusion)


def history_to_csv(history: list[EpochStats]) -> str:
    """Per-epoch training history as CSV text."""
    buf = io.StringIO()
    buf.write("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n")
    for h in history:
        buf.write(
            f"{h.epoch},{h.train_loss:.6f},{h.train_accuracy:.6f},{h.val_loss:.6f},{h.val_accuracy:.6f}\n"
        )
    return buf.getvalue()
