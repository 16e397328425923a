import numpy as np
import pytest

from rhem import InvalidInputError, bspline_basis
from rhem.errors import DegenerateInputError


class TestBasis:
    @pytest.mark.parametrize("num_basis,degree", [(5, 3), (10, 3), (8, 2), (12, 1)])
    def test_partition_of_unity(self, num_basis, degree):
        rng = np.random.default_rng(0)
        x = rng.uniform(-3.0, 5.0, size=200)
        x[0], x[1] = x.min(), x.max()  # make sure edges are hit exactly
        b = bspline_basis(x, num_basis, degree)
        assert np.abs(b.basis.sum(axis=1) - 1.0).max() < 1e-12
        assert b.basis.shape == (200, num_basis)

    def test_penalty_null_space_dimension_two(self):
        x = np.linspace(0, 1, 50)
        b = bspline_basis(x, 10, 3)
        eigvals = np.linalg.eigvalsh(b.penalty)
        assert (eigvals < 1e-10).sum() == 2
        # constants and linear coefficient ramps are annihilated
        k = b.num_basis
        assert np.allclose(b.penalty @ np.ones(k), 0.0)
        assert np.allclose(b.penalty @ np.arange(k, dtype=float), 0.0)

    def test_constant_x_degenerate(self):
        with pytest.raises(DegenerateInputError):
            bspline_basis(np.full(10, 2.5), 8, 3)

    def test_too_few_basis_functions(self):
        with pytest.raises(InvalidInputError):
            bspline_basis(np.linspace(0, 1, 10), 4, 3)

    def test_evaluate_flags_extrapolation(self):
        x = np.linspace(0, 1, 30)
        b = bspline_basis(x, 8, 3)
        values, outside = b.evaluate([-0.5, 0.2, 1.5])
        assert outside.tolist() == [True, False, True]
        assert values.shape == (3, 8)

    def test_infinite_smoothing_reproduces_least_squares_line(self):
        # penalized LS with huge lambda leaves only the penalty null
        # space: exactly the straight-line fit of y on x. Solve in the
        # penalty eigenbasis so the null block is not polluted by the
        # float addition of the enormous penalty.
        rng = np.random.default_rng(1)
        x = np.sort(rng.uniform(0, 10, size=120))
        y = 1.5 + 0.3 * x + rng.normal(0, 0.4, size=120)
        b = bspline_basis(x, 12, 3)
        eigvals, eigvecs = np.linalg.eigh(b.penalty)
        eigvals[eigvals < 1e-10] = 0.0
        basis = b.basis @ eigvecs
        lam = 1e14
        beta = np.linalg.solve(basis.T @ basis + lam * np.diag(eigvals), basis.T @ y)
        fitted = basis @ beta
        slope, intercept = np.polyfit(x, y, 1)
        assert np.abs(fitted - (intercept + slope * x)).max() < 1e-6
