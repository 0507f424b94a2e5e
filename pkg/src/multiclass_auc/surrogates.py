import logging
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import numpy.typing as npt
from numpy.polynomial import polynomial
from scipy.special import expit
from scipy.stats import binom

from multiclass_auc import EnvVar
from multiclass_auc.data.data_models import BernsteinCoeffs, ConsistencyReport, SurrogateKind, SurrogateSpec
from multiclass_auc.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


def _unwrap(values: np.ndarray, like: npt.ArrayLike):
    return float(values) if np.ndim(like) == 0 else values


def _to_unit(t: np.ndarray) -> np.ndarray:
    if np.any(t < -1.0) or np.any(t > 1.0):
        raise InvalidArgumentError("Bernstein-approximated losses are defined for score differences in [-1, 1] only.")
    return (1.0 + t) / 2.0


def loss_eval(spec: SurrogateSpec, t: npt.ArrayLike):
    """Evaluate the surrogate loss elementwise.

    Args:
        spec (SurrogateSpec): The loss and its parameters.
        t (npt.ArrayLike): Score differences f(x+) - f(x-).

    Returns:
        float | np.ndarray: The loss values, shaped like `t`.
    """
    x = np.asarray(t, dtype=np.float64)
    a = spec.alpha
    match spec.kind:
        case SurrogateKind.EXP:
            values = np.exp(-a * x)
        case SurrogateKind.SQUARED:
            values = (a - x) ** 2
        case SurrogateKind.HINGE:
            values = np.maximum(a - x, 0.0)
        case SurrogateKind.LOGIT:
            values = np.logaddexp(0.0, -a * x)
        case SurrogateKind.QHINGE:
            values = np.maximum(a - x, 0.0) ** spec.q
        case SurrogateKind.GENHINGE:
            # Quadratic on [1 - eps, 1 + eps) keeps the loss continuous, so loss(1) = eps / 4
            eps = spec.epsilon
            values = np.where(
                x <= 1.0 - eps,
                1.0 - x,
                np.where(x < 1.0 + eps, (x - 1.0 - eps) ** 2 / (4.0 * eps), 0.0),
            )
        case SurrogateKind.DISTWEIGHT:
            eps = spec.epsilon
            values = np.where(x > eps, 1.0 / np.maximum(x, eps), (2.0 - x / eps) / eps)
        case SurrogateKind.BERNSTEIN:
            coeffs = bernstein_fit(spec.base_spec(), spec.bernstein_degree)
            values = polynomial.polyval(_to_unit(x), coeffs.coefficients)
        case SurrogateKind.ZEROONE:
            values = (x < 0).astype(np.float64) + 0.5 * (x == 0)
        case _:  # pragma: no cover
            raise ValueError(f"Unsupported surrogate loss: {spec.kind}")
    return _unwrap(values, t)


def loss_deriv(spec: SurrogateSpec, t: npt.ArrayLike):
    """Evaluate the derivative of the surrogate loss elementwise.

    At kinks the right-derivative is returned, so the hinge derivative is 0 exactly at the margin.
    """
    x = np.asarray(t, dtype=np.float64)
    a = spec.alpha
    match spec.kind:
        case SurrogateKind.EXP:
            values = -a * np.exp(-a * x)
        case SurrogateKind.SQUARED:
            values = -2.0 * (a - x)
        case SurrogateKind.HINGE:
            values = np.where(x < a, -1.0, 0.0)
        case SurrogateKind.LOGIT:
            values = -a * expit(-a * x)
        case SurrogateKind.QHINGE:
            values = -spec.q * np.maximum(a - x, 0.0) ** (spec.q - 1.0)
        case SurrogateKind.GENHINGE:
            eps = spec.epsilon
            values = np.where(
                x < 1.0 - eps,
                -1.0,
                np.where(x < 1.0 + eps, (x - 1.0 - eps) / (2.0 * eps), 0.0),
            )
        case SurrogateKind.DISTWEIGHT:
            eps = spec.epsilon
            values = np.where(x > eps, -1.0 / np.maximum(x, eps) ** 2, -1.0 / eps**2)
        case SurrogateKind.BERNSTEIN:
            coeffs = bernstein_fit(spec.base_spec(), spec.bernstein_degree)
            values = 0.5 * polynomial.polyval(_to_unit(x), polynomial.polyder(coeffs.coefficients))
        case SurrogateKind.ZEROONE:
            values = np.zeros_like(x)
        case _:  # pragma: no cover
            raise ValueError(f"Unsupported surrogate loss: {spec.kind}")
    return _unwrap(values, t)


def _check_grid(spec: SurrogateSpec, points: int = 1001, half_width: float = 3.0) -> np.ndarray:
    if spec.kind == SurrogateKind.BERNSTEIN:
        half_width = 1.0
    grid = np.linspace(-half_width, half_width, points)
    breaks = np.array([b for b in spec.breakpoints if -half_width < b < half_width])
    if breaks.size:
        grid = grid[np.min(np.abs(grid[:, None] - breaks[None, :]), axis=1) > 1e-9]
        grid = np.sort(np.concatenate([grid, breaks]))
    return grid


def consistency_check(spec: SurrogateSpec) -> ConsistencyReport:
    """Spot-check the sufficient conditions for MAUC consistency on a grid over [-3, 3].

    The conditions are: differentiable, convex, nonincreasing on [-1, 1], and a negative derivative
    at 0. The loss's own breakpoints are added to the grid. This reports, it does not prove.
    """
    grid = _check_grid(spec)
    values = loss_eval(spec, grid)

    h = 1e-8
    inner = grid[1:-1]
    right = (loss_eval(spec, inner + h) - loss_eval(spec, inner)) / h
    left = (loss_eval(spec, inner) - loss_eval(spec, inner - h)) / h
    scale = np.maximum(1.0, np.abs(loss_deriv(spec, inner)))
    differentiable = bool(np.all(np.abs(right - left) <= 1e-3 * scale))

    slopes = np.diff(values) / np.diff(grid)
    convex = bool(np.all(np.diff(slopes) >= -1e-8))

    unit = grid[(grid >= -1.0) & (grid <= 1.0)]
    nonincreasing = bool(np.all(np.diff(loss_eval(spec, unit)) <= 1e-12))

    neg_deriv = bool(loss_deriv(spec, 0.0) < -1e-12)
    report = ConsistencyReport(
        differentiable_on_grid=differentiable,
        convex_on_grid=convex,
        nonincreasing_on_unit=nonincreasing,
        neg_deriv_at_zero=neg_deriv,
    )
    logger.debug(f"Consistency spot checks for {spec}: {report}")
    return report


@lru_cache(maxsize=128)
def bernstein_fit(spec: SurrogateSpec, degree: int) -> BernsteinCoeffs:
    """Power-basis coefficients of the Bernstein polynomial of phi(u) = loss(2u - 1).

    The forward differences are accumulated exactly over the (binary-exact) node values, so the only
    rounding is the final conversion of each coefficient to a float.

    Args:
        spec (SurrogateSpec): The loss to approximate; must not itself be an approximation.
        degree (int): The degree K.

    Returns:
        BernsteinCoeffs: c_j = binom(K, j) * forward difference j of phi at 0, plus the node values phi(k/K).
    """
    if spec.kind in (SurrogateKind.BERNSTEIN, SurrogateKind.ZEROONE):
        raise InvalidArgumentError(f"The {spec.kind} loss cannot be approximated by Bernstein polynomials.")
    if not 1 <= degree <= EnvVar.MAUC_BERNSTEIN_MAX_DEGREE:
        raise InvalidArgumentError(
            f"Bernstein degree must be in [1, {EnvVar.MAUC_BERNSTEIN_MAX_DEGREE}], got {degree}."
        )
    nodes = np.asarray(loss_eval(spec, 2.0 * np.arange(degree + 1) / degree - 1.0), dtype=np.float64)
    exact = [Fraction(float(v)) for v in nodes]
    coefficients = []
    for j in range(degree + 1):
        difference = sum((-1) ** (j - r) * math.comb(j, r) * exact[r] for r in range(j + 1))
        coefficients.append(float(math.comb(degree, j) * difference))
    logger.debug(f"Fitted degree {degree} Bernstein polynomial of {spec}")
    return BernsteinCoeffs(degree=degree, coefficients=coefficients, node_values=nodes)


def _check_unit(u: npt.ArrayLike) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0.0) or np.any(u > 1.0):
        raise InvalidArgumentError("Bernstein polynomials are evaluated on [0, 1] only.")
    return u


def bernstein_eval(coeffs: BernsteinCoeffs, u: npt.ArrayLike):
    """Horner evaluation of the power-basis Bernstein polynomial on [0, 1]."""
    x = _check_unit(u)
    return _unwrap(polynomial.polyval(x, coeffs.coefficients), u)


def bernstein_eval_basis(coeffs: BernsteinCoeffs, u: npt.ArrayLike):
    """Evaluate in the probabilist's basis, sum_k phi(k/K) binom(K, k) u^k (1 - u)^(K - k)."""
    x = _check_unit(u)
    k = np.arange(coeffs.degree + 1)
    weights = binom.pmf(k[None, :], coeffs.degree, np.atleast_1d(x)[:, None])
    values = weights @ coeffs.node_values
    return _unwrap(values.reshape(x.shape), u)
