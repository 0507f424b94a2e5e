import logging
from enum import StrEnum
from typing import Annotated, ClassVar, Literal, Self

import numpy as np
import numpy.typing as npt
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PlainSerializer,
    PositiveInt,
    model_validator,
)

from multiclass_auc import EnvVar

logger = logging.getLogger(__name__)

# N×N_C matrix of scores f^(j)(x_m); post-softmax rows sum to 1.
ScoreMatrix = npt.NDArray[np.float64]
# N×N_C matrix of partial derivatives of the empirical risk with respect to the scores.
ScoreGradient = npt.NDArray[np.float64]
# N_C×N_C matrix of pairwise AUCs; the diagonal is undefined (NaN).
PairAucMatrix = npt.NDArray[np.float64]


class CustomValidators:
    """Custom validators for the array-valued fields of the data models."""

    @staticmethod
    def as_readonly_float_array(value) -> np.ndarray:
        array = np.array(value, dtype=np.float64)
        if not np.all(np.isfinite(array)):
            raise ValueError("Array contains non-finite values.")
        array.flags.writeable = False
        return array

    @staticmethod
    def as_readonly_int_array(value) -> np.ndarray:
        array = np.asarray(value)
        if array.size and not np.issubdtype(array.dtype, np.integer):
            if not np.all(np.equal(np.mod(array, 1), 0)):
                raise ValueError("Array must contain integers only.")
        array = np.array(array, dtype=np.int64)
        array.flags.writeable = False
        return array


def _serialize_array(array: np.ndarray) -> list:
    return array.tolist()


FloatArray = Annotated[
    np.ndarray,
    BeforeValidator(CustomValidators.as_readonly_float_array),
    PlainSerializer(_serialize_array, return_type=list),
]
IntArray = Annotated[
    np.ndarray,
    BeforeValidator(CustomValidators.as_readonly_int_array),
    PlainSerializer(_serialize_array, return_type=list),
]


class AppSettings(BaseModel):
    """Effective process-level settings of the multiclass AUC toolkit."""

    log_level: str = Field(
        default=EnvVar.MAUC_LOG_LEVEL,
        description="Logging level applied to the root logger.",
    )
    naive_max_n: int = Field(
        default=EnvVar.MAUC_NAIVE_MAX_N,
        description="Largest sample count for which the brute-force risk is evaluated by bench and verify.",
    )
    bernstein_max_degree: int = Field(
        default=EnvVar.MAUC_BERNSTEIN_MAX_DEGREE,
        description="Largest accepted Bernstein degree K.",
    )
    default_bernstein_degree: int = Field(
        default=EnvVar.MAUC_DEFAULT_BERNSTEIN_DEGREE,
        description="Bernstein degree used when a loss without an exact accelerated kernel is approximated.",
    )


class Dataset(BaseModel):
    """A multiclass dataset: a dense feature matrix and dense integer labels."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    features: FloatArray = Field(..., description="N×d feature matrix, row-major.")
    labels: IntArray = Field(..., description="Length-N class ids in [0, n_classes).")
    n_classes: PositiveInt = Field(..., description="Number of classes N_C.")

    @model_validator(mode="after")
    def _check_invariants(self) -> Self:
        if self.features.ndim != 2:
            raise ValueError(f"Features must be a matrix, got {self.features.ndim} dimension(s).")
        n, d = self.features.shape
        if d < 1:
            raise ValueError("Datasets need at least one feature.")
        if n < 2:
            raise ValueError(f"Datasets need at least 2 samples, got {n}.")
        if self.labels.shape != (n,):
            raise ValueError(f"Expected {n} labels, got shape {self.labels.shape}.")
        if self.labels.min() < 0 or self.labels.max() >= self.n_classes:
            raise ValueError(f"Labels must lie in [0, {self.n_classes}).")
        if np.unique(self.labels).size < 2:
            raise ValueError("At least 2 distinct classes must appear in a dataset.")
        return self

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def subset(self, rows: npt.ArrayLike) -> "Dataset":
        """Return the dataset restricted to the given rows, in the given order."""
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(features=self.features[rows], labels=self.labels[rows], n_classes=self.n_classes)


class ClassIndex(BaseModel):
    """Per-class bookkeeping: members, counts, proportions and the pair weights D^(i)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    labels: IntArray = Field(..., description="Length-N class ids the index was built from.")
    members: tuple[IntArray, ...] = Field(..., description="For each class, the sample indices in input order.")
    counts: IntArray = Field(..., description="n_i for each class.")
    proportions: FloatArray = Field(..., description="rho_i = n_i / N for each class.")
    pair_weights: FloatArray = Field(
        ...,
        description="N_C×N matrix; row i is D^(i) with entry m equal to 1/(n_i n_{y_m}), zero for empty classes.",
    )

    @model_validator(mode="after")
    def _check_invariants(self) -> Self:
        n_classes = len(self.members)
        if self.counts.shape != (n_classes,) or self.proportions.shape != (n_classes,):
            raise ValueError("Counts and proportions must have one entry per class.")
        if int(self.counts.sum()) != self.labels.size:
            raise ValueError("Class counts must add up to the number of samples.")
        if abs(float(self.proportions.sum()) - 1.0) > 1e-12:
            raise ValueError("Class proportions must add up to 1.")
        if self.pair_weights.shape != (n_classes, self.labels.size):
            raise ValueError(f"Pair weights must have shape ({n_classes}, {self.labels.size}).")
        return self

    @property
    def n_classes(self) -> int:
        return len(self.members)

    @property
    def n_samples(self) -> int:
        return int(self.labels.size)

    @property
    def present(self) -> np.ndarray:
        """Boolean mask of classes with at least one member."""
        return self.counts > 0

    @property
    def n_active(self) -> int:
        """Number of classes with at least one member."""
        return int(np.count_nonzero(self.counts))

    @property
    def normalizer(self) -> float:
        """The 1/(C(C-1)) factor averaging over ordered pairs of the C nonempty classes."""
        active = self.n_active
        return 1.0 / (active * (active - 1))

    def active_classes(self) -> list[int]:
        return [i for i in range(self.n_classes) if self.counts[i] > 0]


class OneHot(BaseModel):
    """One-hot label indicators; column i is Y^(i)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    columns: FloatArray = Field(..., description="N×N_C 0/1 matrix with exactly one 1 per row.")

    @model_validator(mode="after")
    def _check_invariants(self) -> Self:
        if self.columns.ndim != 2 or not np.all(self.columns.sum(axis=1) == 1.0):
            raise ValueError("Every row of a one-hot matrix must sum to exactly 1.")
        return self

    def column(self, i: int) -> np.ndarray:
        return self.columns[:, i]


class SurrogateKind(StrEnum):
    """Enumeration of the supported pairwise surrogate losses."""

    EXP = "exp"
    SQUARED = "squared"
    HINGE = "hinge"
    LOGIT = "logit"
    QHINGE = "qhinge"
    GENHINGE = "genhinge"
    DISTWEIGHT = "distweight"
    BERNSTEIN = "bernstein"
    ZEROONE = "zeroone"


class SurrogateSpec(BaseModel):
    """A surrogate loss selector together with its parameters.

    The string form is ``kind:param=value,...``, e.g. ``exp:alpha=2`` or
    ``bernstein:base=logit,K=12``.
    """

    model_config = ConfigDict(frozen=True)

    kind: SurrogateKind = Field(..., description="The loss family.")
    alpha: float = Field(
        default=1.0,
        gt=0.0,
        description="Scale for exp and logit; margin for squared, hinge and qhinge.",
    )
    q: float = Field(default=2.0, gt=1.0, description="Exponent of the q-norm hinge loss.")
    epsilon: float = Field(
        default=0.25,
        gt=0.0,
        lt=1.0,
        description="Smoothing width of genhinge, in (0, 1/2); breakpoint of distweight, in (0, 1).",
    )
    bernstein_degree: PositiveInt = Field(
        default=EnvVar.MAUC_DEFAULT_BERNSTEIN_DEGREE,
        description="Degree K of the Bernstein approximation.",
    )
    base: SurrogateKind | None = Field(
        default=None,
        description="The approximated loss when kind is bernstein.",
    )

    PARAMETER_ALIASES: ClassVar[dict[str, str]] = {
        "alpha": "alpha",
        "q": "q",
        "eps": "epsilon",
        "epsilon": "epsilon",
        "k": "bernstein_degree",
        "degree": "bernstein_degree",
        "base": "base",
    }

    @model_validator(mode="after")
    def _check_parameters(self) -> Self:
        kind = self.kind
        if kind == SurrogateKind.GENHINGE and not self.epsilon < 0.5:
            raise ValueError(f"The generalized hinge loss needs epsilon in (0, 1/2), got {self.epsilon}.")
        if kind == SurrogateKind.BERNSTEIN:
            if self.base is None:
                raise ValueError("A Bernstein approximation needs a base loss.")
            if self.base in (SurrogateKind.BERNSTEIN, SurrogateKind.ZEROONE):
                raise ValueError(f"The {self.base} loss cannot be approximated by Bernstein polynomials.")
            if self.base == SurrogateKind.GENHINGE and not self.epsilon < 0.5:
                raise ValueError(f"The generalized hinge loss needs epsilon in (0, 1/2), got {self.epsilon}.")
        elif self.base is not None:
            raise ValueError(f"Only Bernstein approximations take a base loss, not {kind}.")
        if self.bernstein_degree > EnvVar.MAUC_BERNSTEIN_MAX_DEGREE:
            raise ValueError(
                f"Bernstein degree {self.bernstein_degree} exceeds the maximum of {EnvVar.MAUC_BERNSTEIN_MAX_DEGREE}."
            )
        return self

    @classmethod
    def parse(cls, text: str) -> "SurrogateSpec":
        """Parse the ``kind:param=value,...`` string form.

        Args:
            text (str): The loss description, e.g. ``squared:alpha=1`` or ``bernstein:base=logit,K=12``.

        Returns:
            SurrogateSpec: The validated specification.
        """
        kind, _, parameters = text.strip().partition(":")
        values: dict[str, object] = {"kind": kind.strip().lower()}
        for item in filter(None, (p.strip() for p in parameters.split(","))):
            key, separator, value = item.partition("=")
            if not separator:
                raise ValueError(f"Malformed loss parameter '{item}' in '{text}', expected key=value.")
            field_name = cls.PARAMETER_ALIASES.get(key.strip().lower())
            if field_name is None:
                raise ValueError(f"Unknown loss parameter '{key}' in '{text}'.")
            values[field_name] = value.strip().lower() if field_name == "base" else value.strip()
        return cls.model_validate(values)

    def __str__(self) -> str:
        parameters: list[str] = []
        if self.kind == SurrogateKind.BERNSTEIN:
            parameters.append(f"base={self.base}")
        effective = self.base if self.kind == SurrogateKind.BERNSTEIN else self.kind
        if effective in (SurrogateKind.EXP, SurrogateKind.LOGIT, SurrogateKind.SQUARED, SurrogateKind.HINGE):
            parameters.append(f"alpha={self.alpha:g}")
        elif effective == SurrogateKind.QHINGE:
            parameters.extend([f"alpha={self.alpha:g}", f"q={self.q:g}"])
        elif effective in (SurrogateKind.GENHINGE, SurrogateKind.DISTWEIGHT):
            parameters.append(f"eps={self.epsilon:g}")
        if self.kind == SurrogateKind.BERNSTEIN:
            parameters.append(f"K={self.bernstein_degree}")
        return f"{self.kind}:{','.join(parameters)}" if parameters else str(self.kind)

    def base_spec(self) -> "SurrogateSpec":
        """The exact loss a Bernstein specification approximates (self for every other kind)."""
        if self.kind != SurrogateKind.BERNSTEIN:
            return self
        return self.model_copy(update={"kind": self.base, "base": None})

    def bernstein_of(self, degree: int | None = None) -> "SurrogateSpec":
        """The Bernstein approximation of this loss with the given degree (default: its own degree)."""
        if self.kind == SurrogateKind.BERNSTEIN:
            return self if degree is None else self.model_copy(update={"bernstein_degree": degree})
        return SurrogateSpec(
            kind=SurrogateKind.BERNSTEIN,
            base=self.kind,
            alpha=self.alpha,
            q=self.q,
            epsilon=self.epsilon,
            bernstein_degree=degree or self.bernstein_degree,
        )

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Known points where the loss switches branch (possible kinks)."""
        match self.kind:
            case SurrogateKind.HINGE | SurrogateKind.QHINGE:
                return (self.alpha,)
            case SurrogateKind.GENHINGE:
                return (1.0 - self.epsilon, 1.0 + self.epsilon)
            case SurrogateKind.DISTWEIGHT:
                return (self.epsilon,)
            case SurrogateKind.ZEROONE:
                return (0.0,)
            case _:
                return ()


class BernsteinCoeffs(BaseModel):
    """Power-basis coefficients of the degree-K Bernstein polynomial of phi(u) = loss(2u - 1)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    degree: PositiveInt = Field(..., description="The degree K.")
    coefficients: FloatArray = Field(..., description="c_j = binom(K, j) * forward difference j of phi at 0.")
    node_values: FloatArray = Field(..., description="phi(k / K) for k = 0..K, the probabilist's-basis weights.")

    @model_validator(mode="after")
    def _check_lengths(self) -> Self:
        if self.coefficients.shape != (self.degree + 1,) or self.node_values.shape != (self.degree + 1,):
            raise ValueError(f"A degree {self.degree} polynomial needs {self.degree + 1} coefficients.")
        return self


class ConsistencyReport(BaseModel):
    """Numeric spot checks of the sufficient conditions for MAUC consistency."""

    differentiable_on_grid: bool
    convex_on_grid: bool
    nonincreasing_on_unit: bool
    neg_deriv_at_zero: bool

    @property
    def consistent(self) -> bool:
        return all(
            (self.differentiable_on_grid, self.convex_on_grid, self.nonincreasing_on_unit, self.neg_deriv_at_zero)
        )


class RiskValue(BaseModel):
    """An empirical surrogate risk value."""

    model_config = ConfigDict(frozen=True)

    value: float = Field(..., description="The risk; nonnegative for every loss of the family.")
    normalized: bool = Field(default=True, description="Whether the 1/(N_C(N_C-1)) factor was applied.")


class FastRiskOutput(BaseModel):
    """Loss, and optionally gradient and per-class contributions, computed by a risk kernel."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    loss: RiskValue
    grad: np.ndarray | None = Field(default=None, description="The ScoreGradient, N×N_C.")
    per_class: np.ndarray | None = Field(default=None, description="Normalized loss contribution of each class.")


class HingeIndex(BaseModel):
    """Nested activation sets of the hinge loss for one class.

    Positives and negatives are both sorted by score in descending order; ``cut[k]`` is the length of
    the prefix of ``neg_order`` whose margin against the k-th positive is violated.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    class_id: int = Field(..., ge=0, description="The class i whose column is ranked.")
    pos_order: IntArray
    neg_order: IntArray
    cut: IntArray

    @model_validator(mode="after")
    def _check_nesting(self) -> Self:
        if self.cut.shape != self.pos_order.shape:
            raise ValueError("There must be one cut per positive.")
        if self.cut.size and (np.any(np.diff(self.cut) < 0) or self.cut[0] < 0 or self.cut[-1] > self.neg_order.size):
            raise ValueError("Activation prefixes must be nested.")
        return self


class KernelCounters(BaseModel):
    """Instrumentation of the work a kernel performs."""

    loss_evals: int = Field(default=0, description="Elementwise loss or exponential evaluations.")
    sweep_steps: list[int] = Field(default_factory=list, description="Inner-sweep iterations, one entry per class.")


class TrainConfig(BaseModel):
    """Hyper-parameters of empirical risk minimization."""

    model_config = ConfigDict(frozen=True)

    lr: NonNegativeFloat = Field(default=0.5, description="Initial learning rate.")
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0, description="Nesterov momentum coefficient.")
    weight_decay: NonNegativeFloat = Field(default=0.0, description="Weight lambda of the squared Frobenius norm of W.")
    epochs: PositiveInt = Field(default=200, description="Number of passes over the training data.")
    batch: Literal["full"] | PositiveInt = Field(default="full", description="'full' or the mini-batch size.")
    lr_decay: float = Field(default=1.0, gt=0.0, le=1.0, description="Multiplicative learning-rate decay per epoch.")
    seed: int = Field(default=0, description="Seed of every stochastic choice made by training.")
    eval_every: PositiveInt = Field(default=1, description="Epochs between validation MAUC evaluations.")


class EpochRecord(BaseModel):
    """One line of a training trace."""

    epoch: PositiveInt
    risk: float
    val_mauc: float | None = None
    lr: NonNegativeFloat


class TrainTrace(BaseModel):
    """Per-epoch training records."""

    CSV_HEADER: ClassVar[str] = "epoch,risk,val_mauc,lr"

    records: list[EpochRecord] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_increasing(self) -> Self:
        epochs = [r.epoch for r in self.records]
        if any(b <= a for a, b in zip(epochs, epochs[1:], strict=False)):
            raise ValueError("Trace epochs must be strictly increasing.")
        return self

    def to_csv(self) -> str:
        lines = [self.CSV_HEADER]
        for r in self.records:
            val = "" if r.val_mauc is None else f"{r.val_mauc:.17g}"
            lines.append(f"{r.epoch},{r.risk:.17g},{val},{r.lr:.17g}")
        return "\n".join(lines) + "\n"

    def best_epoch(self) -> EpochRecord | None:
        """The record with the highest validation MAUC, earliest first on ties."""
        evaluated = [r for r in self.records if r.val_mauc is not None]
        return max(evaluated, key=lambda r: (r.val_mauc, -r.epoch)) if evaluated else None


class PairReportRow(BaseModel):
    """One class pair of the pair-frequency report."""

    i: int
    j: int
    freq: float = Field(..., description="The product of the class proportions rho_i * rho_j.")
    auc: float = Field(..., ge=0.0, le=1.0, description="AUC_{i|j}.")


class EvalReport(BaseModel):
    """Metrics printed by the eval command."""

    n_samples: PositiveInt
    n_classes: PositiveInt
    mauc: float = Field(..., ge=0.0, le=1.0, description="One-vs-one multiclass AUC (M metric).")
    mauc_ova: float = Field(..., ge=0.0, le=1.0, description="Prior-weighted aggregation, empirical priors.")
    xi: NonNegativeFloat = Field(..., description="Imbalance factor sqrt(sum 1/rho_i).")
    chi: NonNegativeFloat = Field(..., description="Imbalance factor sqrt(sum_i sum_{j!=i} 1/(rho_i rho_j)).")
    pairs: list[PairReportRow] = Field(default_factory=list, description="Least frequent class pairs.")


class MachineInfo(BaseModel):
    """Description of the machine a benchmark ran on."""

    platform: str
    python: str
    cpu_count: int | None = None
    cpu_freq_mhz: float | None = None
    memory_total_mb: float | None = None


class BenchRow(BaseModel):
    """Timing of one loss at one sample size."""

    CSV_HEADER: ClassVar[str] = "loss,N,nc,d,trials,naive_ms,fast_ms,ratio"

    loss: str
    N: PositiveInt
    nc: PositiveInt
    d: PositiveInt
    trials: PositiveInt
    naive_ms: NonNegativeFloat
    fast_ms: NonNegativeFloat
    ratio: float = Field(..., gt=0.0, description="naive_ms / fast_ms.")
    pair_work_ratio: float = Field(..., gt=0.0, description="Pair count over N * N_C: the analytic speed-up.")

    def to_csv_line(self) -> str:
        # Loss descriptions such as bernstein:base=logit,K=12 contain commas.
        loss = f'"{self.loss}"' if "," in self.loss else self.loss
        return (
            f"{loss},{self.N},{self.nc},{self.d},{self.trials},"
            f"{self.naive_ms:.6f},{self.fast_ms:.6f},{self.ratio:.6f}"
        )


class BenchMetadata(BaseModel):
    """How a benchmark was measured."""

    timer: str = "time.perf_counter"
    statistic: str = "median"
    warmup_runs: int = 1
    gradient: bool = False
    seed: int = 0
    machine: MachineInfo | None = None


class BenchReport(BaseModel):
    """Acceleration ratios of the fast kernels over the brute-force evaluation."""

    metadata: BenchMetadata = Field(default_factory=BenchMetadata)
    rows: list[BenchRow] = Field(default_factory=list)

    def to_csv(self) -> str:
        return "\n".join([BenchRow.CSV_HEADER] + [r.to_csv_line() for r in self.rows]) + "\n"


class VerifyReport(BaseModel):
    """Outcome of the kernel-versus-reference equivalence suite."""

    loss: str
    trials: PositiveInt
    passed: bool
    worst_loss_dev: NonNegativeFloat
    worst_grad_dev: NonNegativeFloat
    failing_seed: int | None = None
