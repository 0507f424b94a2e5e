import logging
import math

import numpy as np
import numpy.typing as npt
from scipy.special import expit

from multiclass_auc.data.data_models import (
    ClassIndex,
    KernelCounters,
    RiskValue,
    ScoreGradient,
    ScoreMatrix,
    SurrogateKind,
    SurrogateSpec,
)
from multiclass_auc.errors import InvalidArgumentError
from multiclass_auc.metrics import check_scores
from multiclass_auc.surrogates import loss_deriv, loss_eval

logger = logging.getLogger(__name__)


def _ordered_pairs(idx: ClassIndex):
    active = idx.active_classes()
    for i in active:
        for j in active:
            if i != j:
                yield i, j


def risk_naive(
    F: ScoreMatrix,
    idx: ClassIndex,
    spec: SurrogateSpec,
    normalized: bool = True,
    counters: KernelCounters | None = None,
) -> RiskValue:
    """The empirical pairwise surrogate risk by brute force over all cross-class pairs.

    Each (i, j) block is summed pairwise by numpy and the block sums are combined with `math.fsum`, so
    the result does not depend on the order in which blocks are visited.

    Args:
        F (ScoreMatrix): N×N_C scores.
        idx (ClassIndex): The class bookkeeping of the labels.
        spec (SurrogateSpec): The loss; `zeroone` gives MAUC-down, i.e. 1 - MAUC.
        normalized (bool): Apply the 1/(N_C(N_C - 1)) factor over nonempty classes.
        counters (KernelCounters | None): Incremented by the number of loss evaluations.

    Returns:
        RiskValue: The risk.
    """
    F = check_scores(F, idx)
    block_sums: list[float] = []
    evaluations = 0
    for i, j in _ordered_pairs(idx):
        pos, neg = idx.members[i], idx.members[j]
        diff = F[pos, i][:, None] - F[neg, i][None, :]
        block_sums.append(float(np.sum(loss_eval(spec, diff))) / (pos.size * neg.size))
        evaluations += diff.size
    if counters is not None:
        counters.loss_evals += evaluations
    total = math.fsum(block_sums)
    if normalized:
        total *= idx.normalizer
    return RiskValue(value=max(total, 0.0), normalized=normalized)


def grad_naive(
    F: ScoreMatrix,
    idx: ClassIndex,
    spec: SurrogateSpec,
    normalized: bool = True,
) -> ScoreGradient:
    """Gradient of `risk_naive` with respect to every score, by brute force.

    Entry (m, i) collects loss' over pairs where m is a positive of class i, minus loss' over pairs where
    it is a negative against class i. The right-derivative is used at kinks.
    """
    F = check_scores(F, idx)
    grad = np.zeros_like(F)
    if spec.kind == SurrogateKind.ZEROONE:
        return grad
    for i, j in _ordered_pairs(idx):
        pos, neg = idx.members[i], idx.members[j]
        weight = 1.0 / (pos.size * neg.size)
        slopes = loss_deriv(spec, F[pos, i][:, None] - F[neg, i][None, :])
        grad[pos, i] += weight * slopes.sum(axis=1)
        grad[neg, i] -= weight * slopes.sum(axis=0)
    if normalized:
        grad *= idx.normalizer
    return grad


def bayes_scores(eta: npt.ArrayLike, p: npt.ArrayLike) -> ScoreMatrix:
    """The Bayes-optimal scorer for the pairwise MAUC risk.

    With s_i = eta_i / p_i, column i is sigmoid(s_i / sum_{j != i} s_j), or 1 where eta_i = 1.

    Args:
        eta (npt.ArrayLike): N×N_C posterior class probabilities, rows summing to 1.
        p (npt.ArrayLike): Class priors, positive and summing to 1.

    Returns:
        ScoreMatrix: The N×N_C optimal scores.
    """
    eta = np.asarray(eta, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if eta.ndim != 2 or p.shape != (eta.shape[1],):
        raise InvalidArgumentError(f"Posterior shape {eta.shape} does not match {p.size} priors.")
    if np.any(eta < 0) or np.any(np.abs(eta.sum(axis=1) - 1.0) > 1e-9):
        raise InvalidArgumentError("Posterior rows must be nonnegative and sum to 1.")
    if np.any(p <= 0) or abs(float(p.sum()) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"Priors must be positive and sum to 1, got {p.tolist()}.")
    s = eta / p[None, :]
    rest = s.sum(axis=1, keepdims=True) - s
    certain = eta >= 1.0
    if np.any((rest <= 0) & ~certain):
        raise InvalidArgumentError("Inconsistent posterior: a class below probability 1 has no competing mass.")
    ratio = np.divide(s, rest, out=np.zeros_like(s), where=~certain)
    return np.where(certain, 1.0, expit(ratio))


def _conditional_weights(eta: np.ndarray, weights: np.ndarray) -> np.ndarray:
    joint = weights[:, None] * eta
    priors = joint.sum(axis=0)
    if np.any(priors <= 0):
        raise InvalidArgumentError("Every class needs positive probability under the distribution.")
    return joint / priors[None, :]


def _population_pair_risks(F: np.ndarray, eta: np.ndarray, weights: np.ndarray, spec: SurrogateSpec) -> np.ndarray:
    conditional = _conditional_weights(eta, weights)
    n_classes = eta.shape[1]
    risks = np.full((n_classes, n_classes), np.nan)
    for i in range(n_classes):
        losses = loss_eval(spec, F[:, i][:, None] - F[:, i][None, :])
        for j in range(n_classes):
            if i != j:
                risks[i, j] = float(conditional[:, i] @ losses @ conditional[:, j])
    return risks


def _check_distribution(F: npt.ArrayLike, eta: npt.ArrayLike, weights: npt.ArrayLike):
    F = np.asarray(F, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if F.shape != eta.shape or weights.shape != (F.shape[0],):
        raise InvalidArgumentError(f"Inconsistent support shapes: scores {F.shape}, posterior {eta.shape}.")
    if np.any(weights < 0) or abs(float(weights.sum()) - 1.0) > 1e-9:
        raise InvalidArgumentError("Support weights must be nonnegative and sum to 1.")
    return F, eta, weights


def population_risk(F: npt.ArrayLike, eta: npt.ArrayLike, weights: npt.ArrayLike, spec: SurrogateSpec) -> float:
    """Exact expected pairwise risk on a finite discrete distribution.

    Args:
        F (npt.ArrayLike): S×N_C scores at the support points.
        eta (npt.ArrayLike): S×N_C class posteriors at the support points.
        weights (npt.ArrayLike): Marginal probability of each support point.
        spec (SurrogateSpec): The loss.

    Returns:
        float: (1/(N_C(N_C - 1))) sum_i sum_{j != i} E[loss(f_i(X) - f_i(X')) | Y = i, Y' = j].
    """
    F, eta, weights = _check_distribution(F, eta, weights)
    risks = _population_pair_risks(F, eta, weights, spec)
    n_classes = eta.shape[1]
    return float(np.nansum(risks) / (n_classes * (n_classes - 1)))


def population_pair_auc(F: npt.ArrayLike, eta: npt.ArrayLike, weights: npt.ArrayLike) -> np.ndarray:
    """Exact pairwise AUCs of a scorer on a finite discrete distribution; the diagonal is NaN."""
    F, eta, weights = _check_distribution(F, eta, weights)
    return 1.0 - _population_pair_risks(F, eta, weights, SurrogateSpec(kind=SurrogateKind.ZEROONE))
