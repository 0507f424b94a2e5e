import logging
import os
from typing import Self

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import softmax

from multiclass_auc.data.data_models import FloatArray, ScoreGradient, ScoreMatrix
from multiclass_auc.errors import DatasetFormatError, ShapeMismatchError, TrainingDivergedError

logger = logging.getLogger(__name__)


class LinearSoftmaxModel(BaseModel):
    """A linear scorer followed by a softmax over the N_C class logits."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    W: FloatArray = Field(..., description="N_C×d weight matrix; row i scores class i.")
    bias: FloatArray = Field(..., description="Length-N_C logit offsets.")

    @model_validator(mode="after")
    def _check_shapes(self) -> Self:
        if self.W.ndim != 2 or self.W.shape[0] < 2 or self.W.shape[1] < 1:
            raise ValueError(f"Weights must form an N_C×d matrix with N_C >= 2 and d >= 1, got {self.W.shape}.")
        if self.bias.shape != (self.W.shape[0],):
            raise ValueError(f"Expected {self.W.shape[0]} biases, got shape {self.bias.shape}.")
        return self

    @classmethod
    def zeros(cls, n_classes: int, n_features: int) -> "LinearSoftmaxModel":
        """The model scoring every sample uniformly."""
        return cls(W=np.zeros((n_classes, n_features)), bias=np.zeros(n_classes))

    @property
    def n_classes(self) -> int:
        return int(self.W.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.W.shape[1])

    def save(self, path: str | os.PathLike) -> None:
        """Write the flat text format: a "N_C d" header, the rows of W, then b, 17 significant digits."""
        lines = [f"{self.n_classes} {self.n_features}"]
        lines.extend(" ".join(f"{w:.17g}" for w in row) for row in self.W)
        lines.append(" ".join(f"{b:.17g}" for b in self.bias))
        with open(path, "w") as f:
            f.write("\n".join(lines) + "\n")
        logger.info(f"Saved a {self.n_classes}-class model over {self.n_features} features to {path}")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "LinearSoftmaxModel":
        """Read a model written by `save`."""
        with open(path) as f:
            lines = [line.split() for line in f if line.strip()]
        if not lines or len(lines[0]) != 2:
            raise DatasetFormatError(f"Model file {path} must start with an 'N_C d' header.", row=1)
        try:
            n_classes, n_features = (int(token) for token in lines[0])
            rows = [[float(token) for token in line] for line in lines[1:]]
        except ValueError as e:
            raise DatasetFormatError(f"Model file {path} is not numeric: {e}") from None
        if len(rows) != n_classes + 1 or any(len(row) != n_features for row in rows[:-1]):
            raise DatasetFormatError(f"Model file {path} does not hold {n_classes} weight rows of length {n_features}.")
        if len(rows[-1]) != n_classes:
            raise DatasetFormatError(f"Model file {path} must end with {n_classes} biases.", row=n_classes + 2)
        logger.debug(f"Loaded a {n_classes}-class model over {n_features} features from {path}")
        return cls(W=np.asarray(rows[:-1]), bias=np.asarray(rows[-1]))


def _check_features(model: LinearSoftmaxModel, X: npt.ArrayLike) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeMismatchError(f"The model expects {model.n_features} features, got data of shape {X.shape}.")
    return X


def score(model: LinearSoftmaxModel, X: npt.ArrayLike) -> ScoreMatrix:
    """Row-wise softmax(W x + b); rows sum to 1.

    Args:
        model (LinearSoftmaxModel): The scorer.
        X (npt.ArrayLike): N×d features.

    Returns:
        ScoreMatrix: The N×N_C scores.
    """
    X = _check_features(model, X)
    scores = softmax(X @ model.W.T + model.bias[None, :], axis=1)
    if not np.all(np.isfinite(scores)):
        raise TrainingDivergedError("The model produced non-finite scores.")
    return scores


def backprop(model: LinearSoftmaxModel, X: npt.ArrayLike, G: ScoreGradient) -> tuple[np.ndarray, np.ndarray]:
    """Chain a score gradient through the softmax and the linear layer.

    Per sample, the logit gradient is f * (g - <g, f>), the softmax Jacobian applied to g.

    Args:
        model (LinearSoftmaxModel): The scorer the gradient was computed for.
        X (npt.ArrayLike): N×d features.
        G (ScoreGradient): N×N_C derivative of the objective with respect to the scores.

    Returns:
        tuple[np.ndarray, np.ndarray]: dW (N_C×d) and db (length N_C).
    """
    X = _check_features(model, X)
    G = np.asarray(G, dtype=np.float64)
    if G.shape != (X.shape[0], model.n_classes):
        raise ShapeMismatchError(f"Score gradient shape {G.shape} does not match ({X.shape[0]}, {model.n_classes}).")
    scores = score(model, X)
    dlogits = scores * (G - (G * scores).sum(axis=1, keepdims=True))
    return dlogits.T @ X, dlogits.sum(axis=0)
