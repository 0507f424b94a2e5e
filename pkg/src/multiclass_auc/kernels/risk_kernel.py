import logging
import math
from abc import ABC, abstractmethod
from enum import StrEnum
from typing import ClassVar

import numpy as np

from multiclass_auc.data.data_models import (
    ClassIndex,
    FastRiskOutput,
    KernelCounters,
    RiskValue,
    ScoreMatrix,
    SurrogateKind,
    SurrogateSpec,
)
from multiclass_auc.errors import InvalidArgumentError
from multiclass_auc.metrics import check_scores

logger = logging.getLogger(__name__)


class KernelRoute(StrEnum):
    """Enumeration of the risk evaluation paths."""

    EXP = "exp"
    HINGE = "hinge"
    SQUARED = "squared"
    BERNSTEIN = "bernstein"
    ZEROONE = "zeroone"
    NAIVE = "naive"


class RiskKernel(ABC):
    """Abstract base class for evaluators of the empirical pairwise surrogate risk.

    Concrete kernels compute one class's unnormalized contribution, and optionally its gradient column,
    in time linear in N. Classes are visited in ascending order and reduced with `math.fsum`.
    """

    route: ClassVar[KernelRoute]
    accepts: ClassVar[frozenset[SurrogateKind]]

    def evaluate(
        self,
        F: ScoreMatrix,
        idx: ClassIndex,
        spec: SurrogateSpec,
        want_grad: bool = False,
        counters: KernelCounters | None = None,
    ) -> FastRiskOutput:
        """Evaluate the normalized risk and, if requested, its gradient with respect to the scores.

        Args:
            F (ScoreMatrix): N×N_C scores.
            idx (ClassIndex): The class bookkeeping; empty classes are skipped.
            spec (SurrogateSpec): The loss, which must be one this kernel accepts.
            want_grad (bool): Also compute the N×N_C gradient.
            counters (KernelCounters | None): Work instrumentation, updated in place.

        Returns:
            FastRiskOutput: The loss, the optional gradient and the per-class contributions.
        """
        if spec.kind not in self.accepts:
            raise InvalidArgumentError(f"The {self.route} kernel cannot evaluate the {spec.kind} loss.")
        F = check_scores(F, idx)
        self._check_inputs(F, spec)
        per_class = np.zeros(idx.n_classes, dtype=np.float64)
        grad = np.zeros_like(F) if want_grad else None
        for i in idx.active_classes():
            per_class[i] = self._class_risk(F, idx, i, spec, grad, counters)
        normalizer = idx.normalizer
        if grad is not None:
            grad *= normalizer
        per_class *= normalizer
        return FastRiskOutput(
            loss=RiskValue(value=max(math.fsum(per_class), 0.0)),
            grad=grad,
            per_class=per_class,
        )

    def _check_inputs(self, F: np.ndarray, spec: SurrogateSpec) -> None:
        """Kernel-specific preconditions on the scores; none by default."""

    @abstractmethod
    def _class_risk(
        self,
        F: np.ndarray,
        idx: ClassIndex,
        i: int,
        spec: SurrogateSpec,
        grad: np.ndarray | None,
        counters: KernelCounters | None,
    ) -> float:
        """Unnormalized risk contribution of class i: its positives ranked against all other samples.

        Args:
            F (np.ndarray): The validated N×N_C scores.
            idx (ClassIndex): The class bookkeeping.
            i (int): A nonempty class.
            spec (SurrogateSpec): The loss.
            grad (np.ndarray | None): When given, column i receives the unnormalized gradient.
            counters (KernelCounters | None): Work instrumentation.

        Returns:
            float: sum_{m in class i} sum_{n not in class i} D_n loss(F[m, i] - F[n, i]).
        """
        pass

    @staticmethod
    def _split(idx: ClassIndex, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Positives of class i, the remaining samples, and the pair weights of the remaining samples."""
        pos = idx.members[i]
        neg = np.flatnonzero(idx.labels != i)
        return pos, neg, idx.pair_weights[i, neg]
