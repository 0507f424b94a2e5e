import logging
import math
from collections.abc import Callable

import numpy as np
from rich.progress import BarColumn, MofNCompleteColumn, Progress, TextColumn, TimeElapsedColumn

from multiclass_auc.data.data_models import (
    Dataset,
    EpochRecord,
    ScoreGradient,
    ScoreMatrix,
    SurrogateSpec,
    TrainConfig,
    TrainTrace,
)
from multiclass_auc.data.datasets import build_index, index_from_labels
from multiclass_auc.errors import ShapeMismatchError, TrainingDivergedError
from multiclass_auc.kernels.dispatch import dispatch_fast
from multiclass_auc.metrics import mauc
from multiclass_auc.model import LinearSoftmaxModel, backprop, score

logger = logging.getLogger(__name__)

# An objective maps scores, labels and the class count to (value, gradient with respect to the scores).
Objective = Callable[[ScoreMatrix, np.ndarray, int], tuple[float, ScoreGradient]]

BATCH_ATTEMPTS = 10
INIT_SCALE = 0.01


def stratified_batch(labels: np.ndarray, n_classes: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a mini-batch with per-class counts proportional to the class sizes.

    Every class present receives at least one row when the batch is large enough to hold them all;
    smaller batches are drawn uniformly. Rows are returned in ascending order.
    """
    n = labels.size
    if size >= n:
        return np.arange(n)
    counts = np.bincount(labels, minlength=n_classes)
    present = np.flatnonzero(counts)
    if size < present.size:
        return np.sort(rng.choice(n, size=size, replace=False))
    quota = size * counts / n
    alloc = np.floor(quota).astype(np.int64)
    alloc[present] = np.maximum(alloc[present], 1)
    while alloc.sum() > size:
        alloc[np.argmax(alloc)] -= 1
    while alloc.sum() < size:
        room = np.where(alloc < counts, quota - alloc, -np.inf)
        alloc[np.argmax(room)] += 1
    rows = [rng.choice(np.flatnonzero(labels == c), size=alloc[c], replace=False) for c in present if alloc[c] > 0]
    return np.sort(np.concatenate(rows))


def _draw_batch(labels: np.ndarray, n_classes: int, size: int, rng: np.random.Generator) -> np.ndarray:
    for attempt in range(1, BATCH_ATTEMPTS + 1):
        rows = stratified_batch(labels, n_classes, size, rng)
        if np.unique(labels[rows]).size >= 2:
            return rows
        logger.warning(f"Mini-batch attempt {attempt} drew fewer than 2 classes; resampling.")
    raise TrainingDivergedError(
        f"No mini-batch of size {size} with at least 2 classes after {BATCH_ATTEMPTS} attempts."
    )


def pairwise_objective(spec: SurrogateSpec) -> Objective:
    """The empirical pairwise surrogate risk, evaluated by the accelerated kernels."""

    def objective(F: ScoreMatrix, labels: np.ndarray, n_classes: int) -> tuple[float, ScoreGradient]:
        output = dispatch_fast(F, index_from_labels(labels, n_classes, allow_empty=True), spec, want_grad=True)
        return output.loss.value, output.grad

    return objective


def cross_entropy_objective(F: ScoreMatrix, labels: np.ndarray, n_classes: int) -> tuple[float, ScoreGradient]:
    """Mean negative log-likelihood of the labels; the multiclass logistic regression baseline."""
    rows = np.arange(labels.size)
    likelihood = np.maximum(F[rows, labels], np.finfo(np.float64).tiny)
    grad = np.zeros_like(F)
    grad[rows, labels] = -1.0 / (labels.size * likelihood)
    return float(-np.log(likelihood).mean()), grad


def _validation_mauc(model: LinearSoftmaxModel, ds_valid: Dataset | None) -> float | None:
    if ds_valid is None:
        return None
    return mauc(score(model, ds_valid.features), build_index(ds_valid, allow_empty=True))


def fit(
    ds_train: Dataset,
    ds_valid: Dataset | None,
    objective: Objective,
    cfg: TrainConfig,
    show_progress: bool = False,
) -> tuple[LinearSoftmaxModel, TrainTrace]:
    """Minimize an objective of the scores plus lambda ||W||_F^2 with Nesterov momentum.

    Each step sets v = mu v - lr g and moves the parameters by mu v - lr g, where g is the gradient at
    the current parameters. The bias is not regularized. The learning rate decays once per epoch.

    Args:
        ds_train (Dataset): The training data.
        ds_valid (Dataset | None): Data for the validation MAUC recorded every `cfg.eval_every` epochs.
        objective (Objective): The data term and its gradient with respect to the scores.
        cfg (TrainConfig): The hyper-parameters.
        show_progress (bool): Display a progress bar over the epochs.

    Returns:
        tuple[LinearSoftmaxModel, TrainTrace]: The final model and the per-epoch trace.
    """
    if ds_valid is not None and ds_valid.n_features != ds_train.n_features:
        raise ShapeMismatchError(
            f"Validation data has {ds_valid.n_features} features, training data {ds_train.n_features}."
        )
    rng = np.random.default_rng(cfg.seed)
    n_classes, n_features = ds_train.n_classes, ds_train.n_features
    W = INIT_SCALE * rng.standard_normal((n_classes, n_features))
    b = np.zeros(n_classes)
    velocity_W, velocity_b = np.zeros_like(W), np.zeros_like(b)
    steps = 1 if cfg.batch == "full" else math.ceil(ds_train.n_samples / cfg.batch)
    lr = cfg.lr
    trace = TrainTrace()
    with Progress(
        TextColumn(text_format="{task.description}"),
        BarColumn(bar_width=None),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
        transient=True,
        disable=not show_progress,
    ) as progress:
        task = progress.add_task("Training", total=cfg.epochs)
        for epoch in range(1, cfg.epochs + 1):
            risks: list[float] = []
            for _ in range(steps):
                if cfg.batch == "full":
                    X, labels = ds_train.features, ds_train.labels
                else:
                    rows = _draw_batch(ds_train.labels, n_classes, cfg.batch, rng)
                    X, labels = ds_train.features[rows], ds_train.labels[rows]
                model = LinearSoftmaxModel(W=W, bias=b)
                value, G = objective(score(model, X), labels, n_classes)
                risk = value + cfg.weight_decay * float(np.sum(W**2))
                if not math.isfinite(risk):
                    raise TrainingDivergedError(f"Non-finite risk at epoch {epoch}.")
                dW, db = backprop(model, X, G)
                dW = dW + 2.0 * cfg.weight_decay * W
                velocity_W = cfg.momentum * velocity_W - lr * dW
                velocity_b = cfg.momentum * velocity_b - lr * db
                W = W + cfg.momentum * velocity_W - lr * dW
                b = b + cfg.momentum * velocity_b - lr * db
                if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                    raise TrainingDivergedError(f"Non-finite parameters at epoch {epoch}.")
                risks.append(risk)
            val_mauc = None
            if epoch % cfg.eval_every == 0 or epoch == cfg.epochs:
                val_mauc = _validation_mauc(LinearSoftmaxModel(W=W, bias=b), ds_valid)
            trace.records.append(EpochRecord(epoch=epoch, risk=float(np.mean(risks)), val_mauc=val_mauc, lr=lr))
            logger.debug(f"Epoch {epoch}: risk {trace.records[-1].risk:.6g}, validation MAUC {val_mauc}, lr {lr:g}")
            lr *= cfg.lr_decay
            progress.update(task, advance=1)
    model = LinearSoftmaxModel(W=W, bias=b)
    logger.info(f"Finished {cfg.epochs} epochs, final risk {trace.records[-1].risk:.6g}")
    return model, trace


def train(
    ds_train: Dataset,
    ds_valid: Dataset | None,
    spec: SurrogateSpec,
    cfg: TrainConfig,
    show_progress: bool = False,
) -> tuple[LinearSoftmaxModel, TrainTrace]:
    """Empirical pairwise risk minimization of a linear-softmax model; see `fit`."""
    return fit(ds_train, ds_valid, pairwise_objective(spec), cfg, show_progress=show_progress)


def train_ce_baseline(
    ds_train: Dataset,
    ds_valid: Dataset | None,
    cfg: TrainConfig,
    show_progress: bool = False,
) -> tuple[LinearSoftmaxModel, TrainTrace]:
    """The same loop with per-sample cross-entropy in place of the pairwise risk."""
    return fit(ds_train, ds_valid, cross_entropy_objective, cfg, show_progress=show_progress)
