"""Model specifications and design-matrix assembly.

A ModelSpec lists linear terms, penalized spline smooths and
ridge-penalized random intercepts. build_design turns a censored panel
(or any data frame) into the dense model matrix, offset vector and
penalty blocks the fitters consume. Smooth bases are centered by
absorbing the sum-to-zero constraint, dropping one column per smooth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
import pandas as pd
from scipy.linalg import null_space

from .censoring import CensoredPanel
from .errors import InvalidInputError
from .splines import BSplineBasis, bspline_basis

FAMILIES = ("binomial_cloglog", "censored_poisson")
CRITERIA = ("aic", "gcv")


@dataclass(frozen=True)
class LinearTerm:
    covariate: str
    kind: str = field(default="linear", init=False)


@dataclass(frozen=True)
class SmoothTerm:
    covariate: str
    num_basis: int = 10
    degree: int = 3
    kind: str = field(default="smooth", init=False)

    def __post_init__(self):
        if self.num_basis < self.degree + 2:
            raise InvalidInputError(
                f"smooth({self.covariate!r}): num_basis must be >= degree + 2"
            )


@dataclass(frozen=True)
class RandomInterceptTerm:
    grouping: str
    kind: str = field(default="random_intercept", init=False)

    @property
    def covariate(self) -> str:
        return self.grouping


Term = Union[LinearTerm, SmoothTerm, RandomInterceptTerm]


@dataclass(frozen=True)
class ModelSpec:
    """What to fit: terms, family and selection settings."""

    terms: tuple[Term, ...]
    family: str = "binomial_cloglog"
    include_intercept: bool = True
    double_penalty: bool = False
    criterion: str = "aic"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.criterion not in CRITERIA:
            raise InvalidInputError(f"unknown criterion {self.criterion!r}")
        seen = set()
        for term in self.terms:
            if term.covariate in seen:
                raise InvalidInputError(f"covariate {term.covariate!r} appears in multiple terms")
            seen.add(term.covariate)

    def to_dict(self) -> dict:
        terms = []
        for t in self.terms:
            d: dict = {"type": t.kind}
            if t.kind == "random_intercept":
                d["grouping"] = t.grouping
            else:
                d["covariate"] = t.covariate
            if t.kind == "smooth":
                d["num_basis"] = t.num_basis
                d["degree"] = t.degree
            terms.append(d)
        return {
            "family": self.family,
            "terms": terms,
            "include_intercept": self.include_intercept,
            "double_penalty": self.double_penalty,
            "criterion": self.criterion,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "ModelSpec":
        terms: list[Term] = []
        for d in payload.get("terms", []):
            kind = d.get("type")
            if kind == "linear":
                terms.append(LinearTerm(d["covariate"]))
            elif kind == "smooth":
                terms.append(
                    SmoothTerm(d["covariate"], int(d.get("num_basis", 10)), int(d.get("degree", 3)))
                )
            elif kind == "random_intercept":
                terms.append(RandomInterceptTerm(d["grouping"]))
            else:
                raise InvalidInputError(f"unknown term type {kind!r}")
        return cls(
            terms=tuple(terms),
            family=payload.get("family", "binomial_cloglog"),
            include_intercept=bool(payload.get("include_intercept", True)),
            double_penalty=bool(payload.get("double_penalty", False)),
            criterion=payload.get("criterion", "aic"),
        )


@dataclass
class PenaltyBlock:
    """A symmetric PSD penalty on one contiguous coefficient range."""

    term: str
    start: int
    stop: int
    matrix: np.ndarray
    kind: str  # "smooth" | "nullspace" | "random"

    @property
    def size(self) -> int:
        return self.stop - self.start


@dataclass
class SmoothInfo:
    """Everything needed to evaluate a fitted smooth on new points."""

    basis: BSplineBasis
    center: np.ndarray  # maps centered coefficients back to the raw basis
    start: int
    stop: int


@dataclass
class TermColumns:
    name: str
    kind: str
    start: int
    stop: int
    levels: tuple | None = None  # random-intercept group levels


@dataclass
class DesignSystem:
    """Model matrix plus penalties, ready for penalized IRLS."""

    X: np.ndarray
    offset: np.ndarray
    column_names: list[str]
    terms: list[TermColumns]
    penalty_blocks: list[PenaltyBlock]
    nullspace_blocks: list[PenaltyBlock]
    smooth_info: dict[str, SmoothInfo]

    @property
    def all_blocks(self) -> list[PenaltyBlock]:
        """Penalty blocks in lambda order: range/random blocks then null blocks."""
        return self.penalty_blocks + self.nullspace_blocks

    @property
    def n_params(self) -> int:
        return self.X.shape[1]

    def penalty_total(self, lambdas) -> np.ndarray:
        """Sum of lambda-weighted penalties embedded at full size."""
        lambdas = np.asarray(lambdas, dtype=float)
        blocks = self.all_blocks
        if len(lambdas) != len(blocks):
            raise InvalidInputError(f"need {len(blocks)} lambdas, got {len(lambdas)}")
        total = np.zeros((self.n_params, self.n_params))
        for lam, block in zip(lambdas, blocks):
            total[block.start : block.stop, block.start : block.stop] += lam * block.matrix
        return total

    def matrix_for(self, frame: pd.DataFrame) -> np.ndarray:
        """Model matrix for new rows (same columns as X)."""
        cols = []
        for term in self.terms:
            if term.kind == "intercept":
                cols.append(np.ones((len(frame), 1)))
            elif term.kind == "linear":
                cols.append(_numeric_column(frame, term.name)[:, None])
            elif term.kind == "smooth":
                info = self.smooth_info[term.name]
                raw, _ = info.basis.evaluate(_numeric_column(frame, term.name))
                cols.append(raw @ info.center)
            else:
                codes = pd.Categorical(frame[term.name], categories=term.levels).codes
                if (codes < 0).any():
                    raise InvalidInputError(f"unseen level in grouping {term.name!r}")
                block = np.zeros((len(frame), len(term.levels)))
                block[np.arange(len(frame)), codes] = 1.0
                cols.append(block)
        return np.hstack(cols)


def _numeric_column(frame: pd.DataFrame, name: str) -> np.ndarray:
    if name not in frame.columns:
        raise InvalidInputError(f"covariate {name!r} not in panel")
    values = frame[name].to_numpy(dtype=float)
    if not np.isfinite(values).all():
        raise InvalidInputError(f"covariate {name!r} has non-finite values")
    return values


def build_design(panel: CensoredPanel | pd.DataFrame, spec: ModelSpec) -> DesignSystem:
    """Assemble X, offset and penalty blocks for a model spec.

    Column layout: intercept, then terms in spec order. Each smooth
    contributes ``num_basis - 1`` centered columns with a
    second-difference range penalty (plus a null-space ridge when
    ``double_penalty``); each random intercept contributes one dummy
    column per observed level with an identity penalty.
    """
    frame = panel.data if isinstance(panel, CensoredPanel) else panel
    if len(frame) == 0:
        raise InvalidInputError("empty panel")
    offset = (
        frame["offset"].to_numpy(dtype=float)
        if "offset" in frame.columns
        else np.zeros(len(frame))
    )

    cols: list[np.ndarray] = []
    names: list[str] = []
    terms: list[TermColumns] = []
    penalties: list[PenaltyBlock] = []
    nullspaces: list[PenaltyBlock] = []
    smooths: dict[str, SmoothInfo] = {}
    pos = 0

    if spec.include_intercept:
        cols.append(np.ones((len(frame), 1)))
        names.append("intercept")
        terms.append(TermColumns("intercept", "intercept", pos, pos + 1))
        pos += 1

    for term in spec.terms:
        if term.kind == "linear":
            cols.append(_numeric_column(frame, term.covariate)[:, None])
            names.append(term.covariate)
            terms.append(TermColumns(term.covariate, "linear", pos, pos + 1))
            pos += 1
        elif term.kind == "smooth":
            x = _numeric_column(frame, term.covariate)
            basis = bspline_basis(x, term.num_basis, term.degree)
            # Absorb the sum-to-zero constraint: columns of Z span the
            # subspace where the smooth sums to zero over training rows.
            col_sums = basis.basis.sum(axis=0)
            center = null_space(col_sums[None, :])
            centered = basis.basis @ center
            pen = center.T @ basis.penalty @ center
            pen = (pen + pen.T) / 2.0
            width = centered.shape[1]
            cols.append(centered)
            names.extend(f"s({term.covariate}).{j}" for j in range(width))
            terms.append(TermColumns(term.covariate, "smooth", pos, pos + width))
            penalties.append(PenaltyBlock(term.covariate, pos, pos + width, pen, "smooth"))
            if spec.double_penalty:
                nullspaces.append(
                    PenaltyBlock(
                        term.covariate, pos, pos + width, _nullspace_penalty(pen), "nullspace"
                    )
                )
            smooths[term.covariate] = SmoothInfo(basis, center, pos, pos + width)
            pos += width
        elif term.kind == "random_intercept":
            if term.grouping not in frame.columns:
                raise InvalidInputError(f"grouping {term.grouping!r} not in panel")
            codes, levels = pd.factorize(frame[term.grouping], sort=True)
            block = np.zeros((len(frame), len(levels)))
            block[np.arange(len(frame)), codes] = 1.0
            cols.append(block)
            names.extend(f"{term.grouping}[{lev}]" for lev in levels)
            terms.append(
                TermColumns(term.grouping, "random_intercept", pos, pos + len(levels), tuple(levels))
            )
            penalties.append(
                PenaltyBlock(term.grouping, pos, pos + len(levels), np.eye(len(levels)), "random")
            )
            pos += len(levels)
        else:  # pragma: no cover - ModelSpec already validates kinds
            raise InvalidInputError(f"unknown term kind {term.kind!r}")

    X = np.hstack(cols)
    return DesignSystem(X, offset, names, terms, penalties, nullspaces, smooths)


def _nullspace_penalty(penalty: np.ndarray) -> np.ndarray:
    """Ridge on the penalty's null space so a smooth can shrink to zero."""
    eigvals, eigvecs = np.linalg.eigh(penalty)
    tol = max(penalty.shape[0], 1) * np.finfo(float).eps * max(eigvals.max(), 1.0)
    null = eigvecs[:, eigvals < tol]
    return null @ null.T
