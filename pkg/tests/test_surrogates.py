import numpy as np
import pytest

from multiclass_auc import EnvVar
from multiclass_auc.data.data_models import SurrogateKind, SurrogateSpec
from multiclass_auc.errors import InvalidArgumentError
from multiclass_auc.surrogates import (
    bernstein_eval,
    bernstein_eval_basis,
    bernstein_fit,
    consistency_check,
    loss_deriv,
    loss_eval,
)

SMOOTH_SPECS = [
    SurrogateSpec(kind=SurrogateKind.EXP, alpha=1.5),
    SurrogateSpec(kind=SurrogateKind.SQUARED),
    SurrogateSpec(kind=SurrogateKind.LOGIT, alpha=2.0),
    SurrogateSpec(kind=SurrogateKind.QHINGE, q=3.0),
]
ALL_SPECS = [
    *SMOOTH_SPECS,
    SurrogateSpec(kind=SurrogateKind.HINGE),
    SurrogateSpec(kind=SurrogateKind.GENHINGE, epsilon=0.25),
    SurrogateSpec(kind=SurrogateKind.DISTWEIGHT, epsilon=0.25),
    SurrogateSpec(kind=SurrogateKind.BERNSTEIN, base=SurrogateKind.LOGIT, bernstein_degree=12),
]


class TestLosses:
    """Class to group tests related to loss values and derivatives."""

    def test_loss_eval_examples(self):
        """Test closed-form values of the losses."""
        assert loss_eval(SurrogateSpec(kind=SurrogateKind.EXP), 0.0) == 1.0
        assert loss_eval(SurrogateSpec(kind=SurrogateKind.HINGE), 0.3) == pytest.approx(0.7)
        assert loss_eval(SurrogateSpec(kind=SurrogateKind.SQUARED), 0.5) == 0.25
        assert loss_eval(SurrogateSpec(kind=SurrogateKind.LOGIT), 0.0) == pytest.approx(np.log(2.0))
        assert loss_eval(SurrogateSpec(kind=SurrogateKind.QHINGE, q=3.0), 0.0) == 1.0
        assert loss_eval(SurrogateSpec(kind=SurrogateKind.DISTWEIGHT, epsilon=0.25), 0.5) == 2.0
        assert loss_eval(SurrogateSpec(kind=SurrogateKind.DISTWEIGHT, epsilon=0.25), 0.0) == 8.0

    def test_generalized_hinge_branches(self):
        """Test the linear, quadratic and zero branches of the generalized hinge loss."""
        spec = SurrogateSpec(kind=SurrogateKind.GENHINGE, epsilon=0.25)
        assert loss_eval(spec, 0.5) == pytest.approx(0.5)
        assert loss_eval(spec, 0.8) == pytest.approx(0.2025)
        assert loss_eval(spec, 1.0) == pytest.approx(0.0625)
        assert loss_eval(spec, 1.25) == 0.0
        assert loss_eval(spec, 2.0) == 0.0
        # Continuous where the linear branch meets the quadratic one
        assert loss_eval(spec, 0.75) == pytest.approx(loss_eval(spec, np.nextafter(0.75, 1.0)), abs=1e-12)

    @pytest.mark.parametrize("eps", [0.05, 0.25, 0.45])
    def test_generalized_hinge_continuity(self, eps):
        """Test that the quadratic branch spans [1 - eps, 1 + eps), so the loss at 1 is eps / 4 and not 0."""
        spec = SurrogateSpec(kind=SurrogateKind.GENHINGE, epsilon=eps)
        assert loss_eval(spec, 1.0) == pytest.approx(eps / 4.0)
        assert loss_eval(spec, np.nextafter(1.0, 0.0)) == pytest.approx(eps / 4.0)
        assert loss_eval(spec, np.nextafter(1.0, 2.0)) == pytest.approx(eps / 4.0)
        for knot in (1.0 - eps, 1.0 + eps):
            below, above = loss_eval(spec, [knot - 1e-9, knot + 1e-9])
            assert below == pytest.approx(above, abs=1e-8)
        assert loss_eval(spec, 1.0 + eps) == 0.0
        assert loss_deriv(spec, 1.0 - eps) == pytest.approx(-1.0)
        assert loss_deriv(spec, np.nextafter(1.0 + eps, 0.0)) == pytest.approx(0.0, abs=1e-9)
        # Convex and nonincreasing on a grid straddling both knots
        values = loss_eval(spec, np.linspace(0.0, 2.0, 2001))
        assert np.all(np.diff(values) <= 1e-15)
        assert np.all(np.diff(values, 2) >= -1e-12)

    def test_zero_one(self):
        """Test the indicator with its tie rule and zero derivative."""
        spec = SurrogateSpec(kind=SurrogateKind.ZEROONE)
        assert loss_eval(spec, [-1.0, 0.0, 1.0]).tolist() == [1.0, 0.5, 0.0]
        assert np.all(loss_deriv(spec, [-1.0, 0.0, 1.0]) == 0.0)

    def test_loss_shapes(self):
        """Test that scalars give floats and arrays keep their shape."""
        spec = SurrogateSpec(kind=SurrogateKind.EXP)
        assert isinstance(loss_eval(spec, 0.5), float)
        assert isinstance(loss_deriv(spec, 0.5), float)
        assert loss_eval(spec, np.zeros((3, 4))).shape == (3, 4)

    def test_loss_deriv_examples(self):
        """Test closed-form derivatives, including the right-derivative at the hinge margin."""
        assert loss_deriv(SurrogateSpec(kind=SurrogateKind.EXP, alpha=2.0), 0.0) == -2.0
        assert loss_deriv(SurrogateSpec(kind=SurrogateKind.SQUARED), 0.0) == -2.0
        assert loss_deriv(SurrogateSpec(kind=SurrogateKind.HINGE), 1.0) == 0.0
        assert loss_deriv(SurrogateSpec(kind=SurrogateKind.HINGE), 0.999) == -1.0
        assert loss_deriv(SurrogateSpec(kind=SurrogateKind.LOGIT, alpha=2.0), 0.0) == pytest.approx(-1.0)

    def test_loss_deriv_finite_differences(self):
        """Test every derivative against central finite differences at t = 0.37."""
        h = 1e-6
        for spec in ALL_SPECS:
            numeric = (loss_eval(spec, 0.37 + h) - loss_eval(spec, 0.37 - h)) / (2 * h)
            assert loss_deriv(spec, 0.37) == pytest.approx(numeric, rel=1e-5), str(spec)

    def test_loss_deriv_finite_differences_grid(self):
        """Test the derivatives on a grid, away from the known breakpoints."""
        h = 1e-6
        for spec in ALL_SPECS:
            grid = np.linspace(-0.95, 0.95, 77)
            for b in spec.base_spec().breakpoints:
                grid = grid[np.abs(grid - b) > 1e-4]
            numeric = (loss_eval(spec, grid + h) - loss_eval(spec, grid - h)) / (2 * h)
            np.testing.assert_allclose(loss_deriv(spec, grid), numeric, rtol=1e-5, atol=1e-7, err_msg=str(spec))

    def test_nonnegative(self):
        """Test that every loss is nonnegative on its grid."""
        for spec in ALL_SPECS:
            half_width = 1.0 if spec.kind == SurrogateKind.BERNSTEIN else 3.0
            assert np.all(loss_eval(spec, np.linspace(-half_width, half_width, 1001)) >= 0.0), str(spec)

    def test_bernstein_domain(self):
        """Test that Bernstein-approximated losses refuse differences outside [-1, 1]."""
        spec = SurrogateSpec(kind=SurrogateKind.BERNSTEIN, base=SurrogateKind.EXP)
        with pytest.raises(InvalidArgumentError):
            loss_eval(spec, 1.5)
        with pytest.raises(InvalidArgumentError):
            loss_deriv(spec, -1.01)


class TestConsistencyCheck:
    """Class to group tests related to the consistency spot checks."""

    def test_consistent_losses(self):
        """Test that the smooth convex losses pass every check."""
        for spec in [
            SurrogateSpec(kind=SurrogateKind.EXP),
            SurrogateSpec(kind=SurrogateKind.LOGIT),
            SurrogateSpec(kind=SurrogateKind.SQUARED),
            SurrogateSpec(kind=SurrogateKind.QHINGE, q=2.0),
            SurrogateSpec(kind=SurrogateKind.GENHINGE, epsilon=0.25),
        ]:
            report = consistency_check(spec)
            assert report.consistent, f"{spec}: {report}"

    def test_hinge_is_not_differentiable(self):
        """Test that the hinge kink is found while the other conditions hold."""
        report = consistency_check(SurrogateSpec(kind=SurrogateKind.HINGE))
        assert not report.differentiable_on_grid
        assert report.convex_on_grid
        assert report.nonincreasing_on_unit
        assert report.neg_deriv_at_zero
        assert not report.consistent

    def test_zero_one_fails(self):
        """Test that the indicator fails the differentiability and slope checks."""
        report = consistency_check(SurrogateSpec(kind=SurrogateKind.ZEROONE))
        assert not report.differentiable_on_grid
        assert not report.neg_deriv_at_zero

    def test_bernstein_approximation(self):
        """Test that the Bernstein approximation of the logistic loss keeps its shape on [-1, 1]."""
        spec = SurrogateSpec(kind=SurrogateKind.BERNSTEIN, base=SurrogateKind.LOGIT, bernstein_degree=12)
        assert consistency_check(spec).consistent


class TestBernstein:
    """Class to group tests related to Bernstein polynomial approximations."""

    def test_linear_precision(self):
        """Test that a loss linear on [-1, 1] is reproduced exactly."""
        # hinge with margin 3 is 3 - t on [-1, 1], so phi(u) = 4 - 2u
        spec = SurrogateSpec(kind=SurrogateKind.HINGE, alpha=3.0)
        u = np.linspace(0.0, 1.0, 101)
        for degree in (1, 2, 5, 20):
            coeffs = bernstein_fit(spec, degree)
            np.testing.assert_allclose(bernstein_eval(coeffs, u), 4.0 - 2.0 * u, rtol=0, atol=1e-12)

    def test_endpoints(self):
        """Test endpoint interpolation of the polynomial."""
        for spec in SMOOTH_SPECS:
            coeffs = bernstein_fit(spec, 10)
            assert bernstein_eval(coeffs, 0.0) == loss_eval(spec, -1.0)
            assert bernstein_eval(coeffs, 1.0) == pytest.approx(loss_eval(spec, 1.0), abs=1e-12)

    def test_squared_loss_defect(self):
        """Test the known defect of the Bernstein polynomial of a quadratic."""
        spec = SurrogateSpec(kind=SurrogateKind.SQUARED)
        coeffs = bernstein_fit(spec, 10)
        # phi(u) = 4 (1 - u)^2 and its degree-K polynomial is 4 (1 - u)^2 + 4 u (1 - u) / K
        assert bernstein_eval(coeffs, 0.5) == pytest.approx(1.1, abs=1e-12)
        assert bernstein_eval(coeffs, 0.5) == pytest.approx(bernstein_eval_basis(coeffs, 0.5), abs=1e-10)
        u = np.linspace(0.0, 1.0, 1001)
        for degree in (2, 5, 10, 30):
            coeffs = bernstein_fit(spec, degree)
            error = np.abs(bernstein_eval(coeffs, u) - 4.0 * (1.0 - u) ** 2)
            assert np.max(error) <= 8.0 / (2 * degree) + 1e-12

    def test_basis_agreement(self):
        """Test that power-basis and probabilist's-basis evaluations agree for degrees up to 20."""
        u = np.linspace(0.0, 1.0, 101)
        for spec in SMOOTH_SPECS:
            for degree in (1, 3, 10, 20):
                coeffs = bernstein_fit(spec, degree)
                np.testing.assert_allclose(
                    bernstein_eval(coeffs, u), bernstein_eval_basis(coeffs, u), rtol=0, atol=1e-10
                )

    def test_shape_preservation(self):
        """Test that monotone convex losses give monotone convex polynomials."""
        u = np.linspace(0.0, 1.0, 1001)
        for spec, degrees in [
            (SurrogateSpec(kind=SurrogateKind.LOGIT), (5, 10, 20)),
            (SurrogateSpec(kind=SurrogateKind.EXP), (5, 10, 20)),
            (SurrogateSpec(kind=SurrogateKind.SQUARED), (5, 10, 20)),
            # Kinked second derivative: large power-basis coefficients beyond moderate degrees
            (SurrogateSpec(kind=SurrogateKind.GENHINGE, epsilon=0.25), (5, 10)),
        ]:
            phi = loss_eval(spec, 2.0 * u - 1.0)
            assert np.all(np.diff(phi) <= 0.0)
            for degree in degrees:
                values = bernstein_eval(bernstein_fit(spec, degree), u)
                assert np.all(np.diff(values) <= 1e-12), f"{spec} K={degree}"
                assert np.all(np.diff(values, 2) >= -1e-9), f"{spec} K={degree}"

    def test_convergence(self):
        """Test that the approximation error shrinks with the degree."""
        spec = SurrogateSpec(kind=SurrogateKind.LOGIT)
        u = np.linspace(0.0, 1.0, 201)
        errors = [
            np.max(np.abs(bernstein_eval(bernstein_fit(spec, degree), u) - loss_eval(spec, 2.0 * u - 1.0)))
            for degree in (2, 4, 8, 16)
        ]
        assert errors == sorted(errors, reverse=True)

    def test_approximated_loss(self):
        """Test that a Bernstein spec evaluates the fitted polynomial of its base loss."""
        spec = SurrogateSpec(kind=SurrogateKind.BERNSTEIN, base=SurrogateKind.LOGIT, bernstein_degree=12)
        coeffs = bernstein_fit(spec.base_spec(), 12)
        t = np.linspace(-1.0, 1.0, 21)
        np.testing.assert_allclose(loss_eval(spec, t), bernstein_eval(coeffs, (1.0 + t) / 2.0), rtol=1e-15)

    def test_fit_is_cached(self):
        """Test that repeated fits of the same loss return the same object."""
        spec = SurrogateSpec(kind=SurrogateKind.LOGIT)
        assert bernstein_fit(spec, 7) is bernstein_fit(SurrogateSpec(kind=SurrogateKind.LOGIT), 7)

    def test_fit_errors(self):
        """Test that approximations of approximations, the indicator and bad degrees are rejected."""
        with pytest.raises(InvalidArgumentError):
            bernstein_fit(SurrogateSpec(kind=SurrogateKind.BERNSTEIN, base=SurrogateKind.EXP), 5)
        with pytest.raises(InvalidArgumentError):
            bernstein_fit(SurrogateSpec(kind=SurrogateKind.ZEROONE), 5)
        with pytest.raises(InvalidArgumentError):
            bernstein_fit(SurrogateSpec(kind=SurrogateKind.EXP), 0)
        with pytest.raises(InvalidArgumentError):
            bernstein_fit(SurrogateSpec(kind=SurrogateKind.EXP), EnvVar.MAUC_BERNSTEIN_MAX_DEGREE + 1)

    def test_eval_domain(self):
        """Test that evaluation outside [0, 1] is rejected."""
        coeffs = bernstein_fit(SurrogateSpec(kind=SurrogateKind.EXP), 4)
        with pytest.raises(InvalidArgumentError):
            bernstein_eval(coeffs, 1.5)
        with pytest.raises(InvalidArgumentError):
            bernstein_eval_basis(coeffs, [-0.1, 0.5])
