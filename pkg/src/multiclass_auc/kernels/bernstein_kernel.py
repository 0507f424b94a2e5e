import logging

import numpy as np
from scipy.special import binom

from multiclass_auc.data.data_models import (
    ClassIndex,
    FastRiskOutput,
    KernelCounters,
    ScoreMatrix,
    SurrogateKind,
    SurrogateSpec,
)
from multiclass_auc.errors import InvalidArgumentError
from multiclass_auc.kernels.risk_kernel import KernelRoute, RiskKernel
from multiclass_auc.surrogates import bernstein_fit

logger = logging.getLogger(__name__)


def moment_coupling(coefficients: np.ndarray) -> np.ndarray:
    """The (K+1)×(K+1) matrix A with A[k, r] = c_{k+r} binom(k+r, k) 2^-(k+r), zero where k + r > K.

    Writing u = (1 + s - t)/2 = ((1/2 + s) + (1/2 - t))/2, the polynomial sum_j c_j u^j equals
    sum_{k, r} A[k, r] (1/2 + s)^k (1/2 - t)^r, which separates positives from negatives.
    """
    degree = coefficients.size - 1
    k = np.arange(degree + 1)
    total = k[:, None] + k[None, :]
    inside = total <= degree
    safe = np.where(inside, total, 0)
    return np.where(inside, coefficients[safe] * binom(total, k[:, None]) * np.exp2(-total.astype(np.float64)), 0.0)


class BernsteinKernel(RiskKernel):
    """Any loss through its degree-K Bernstein polynomial on score differences in [-1, 1].

    Positives contribute the power sums P_k of (1/2 + F); the rest contribute D-weighted power sums M_r of
    (1/2 - F). The class risk is P' A M, evaluated in O(K N) plus O(K^2).
    """

    route = KernelRoute.BERNSTEIN
    accepts = frozenset({SurrogateKind.BERNSTEIN})

    def _check_inputs(self, F: np.ndarray, spec: SurrogateSpec) -> None:
        if np.any(F < 0.0) or np.any(F > 1.0):
            raise InvalidArgumentError("The Bernstein kernel needs every score in [0, 1].")

    def _class_risk(
        self,
        F: np.ndarray,
        idx: ClassIndex,
        i: int,
        spec: SurrogateSpec,
        grad: np.ndarray | None,
        counters: KernelCounters | None,
    ) -> float:
        coeffs = bernstein_fit(spec.base_spec(), spec.bernstein_degree)
        coupling = moment_coupling(coeffs.coefficients)
        powers = np.arange(coeffs.degree + 1)
        pos, neg, weights = self._split(idx, i)
        up = 0.5 + F[pos, i]
        down = 0.5 - F[neg, i]
        up_powers = up[:, None] ** powers[None, :]
        down_powers = down[:, None] ** powers[None, :]
        P = up_powers.sum(axis=0)
        M = weights @ down_powers
        Q = coupling @ M
        if counters is not None:
            counters.loss_evals += pos.size + neg.size
        if grad is not None:
            G = coupling.T @ P
            grad[pos, i] = up_powers[:, :-1] @ (powers[1:] * Q[1:])
            grad[neg, i] = -weights * (down_powers[:, :-1] @ (powers[1:] * G[1:]))
        return float(P @ Q)


def general_fast(
    F: ScoreMatrix,
    idx: ClassIndex,
    spec: SurrogateSpec,
    want_grad: bool = False,
    counters: KernelCounters | None = None,
) -> FastRiskOutput:
    """Risk of the Bernstein-approximated loss and its gradient in O(K N N_C)."""
    return BernsteinKernel().evaluate(F, idx, spec, want_grad=want_grad, counters=counters)
