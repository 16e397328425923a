"""Penalized B-spline bases with second-difference penalties.

Bases sit on equally spaced knots spanning the data range, padded with
``degree`` extra knots on each side so the functions form a partition
of unity on [min x, max x]. The roughness penalty is D2' D2 with D2 the
order-2 difference operator on coefficients; its null space is spanned
by constant and linear coefficient sequences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline

from .errors import DegenerateInputError, InvalidInputError


@dataclass(frozen=True)
class BSplineBasis:
    """Basis matrix, penalty and enough metadata to re-evaluate it."""

    basis: np.ndarray
    penalty: np.ndarray
    knots: np.ndarray
    degree: int
    x_min: float
    x_max: float

    @property
    def num_basis(self) -> int:
        return self.basis.shape[1]

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Basis values at new points plus an is-extrapolated mask."""
        x = np.asarray(x, dtype=float)
        outside = (x < self.x_min) | (x > self.x_max)
        design = BSpline.design_matrix(x, self.knots, self.degree, extrapolate=True).toarray()
        return design, outside


def bspline_basis(x, num_basis: int, degree: int = 3) -> BSplineBasis:
    """Equally spaced B-spline basis over the range of x.

    Rows sum to one; the returned penalty is the squared second
    difference of the coefficient sequence. Requires
    ``num_basis >= degree + 2`` and non-constant x.
    """
    if degree < 1:
        raise InvalidInputError(f"degree must be >= 1, got {degree}")
    if num_basis < degree + 2:
        raise InvalidInputError(f"num_basis must be >= degree + 2, got {num_basis}")
    x = np.asarray(x, dtype=float)
    if x.size == 0 or not np.isfinite(x).all():
        raise InvalidInputError("x must be nonempty and finite")
    x_min, x_max = float(x.min()), float(x.max())
    if x_max <= x_min:
        raise DegenerateInputError(f"x is constant at {x_min}; no spline range")

    n_segments = num_basis - degree
    step = (x_max - x_min) / n_segments
    inner = np.linspace(x_min, x_max, n_segments + 1)  # exact endpoints
    left = x_min - step * np.arange(degree, 0, -1)
    right = x_max + step * np.arange(1, degree + 1)
    knots = np.concatenate([left, inner, right])
    basis = BSpline.design_matrix(x, knots, degree, extrapolate=False).toarray()
    diff = np.diff(np.eye(num_basis), n=2, axis=0)
    penalty = diff.T @ diff
    return BSplineBasis(basis, penalty, knots, degree, x_min, x_max)
