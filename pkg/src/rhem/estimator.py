"""Scikit-learn style front ends over the functional core.

CensoredHazardGAM follows the estimator protocol (get_params /
set_params / fit / predict) so censored-event models compose with
sklearn tooling; EventPanelBuilder is the matching transformer from an
event history to the regression panel.
"""

from __future__ import annotations

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin

from .censoring import CensoredPanel, WaveGrid, build_panel, DEFAULT_STRATEGY
from .design import LinearTerm, ModelSpec, RandomInterceptTerm, SmoothTerm
from .errors import InvalidInputError
from .events import EventHistory, enumerate_risk_set
from .fitting import fit_model, smooth_effect


class EventPanelBuilder(BaseEstimator, TransformerMixin):
    """Transformer: EventHistory -> censored panel DataFrame."""

    def __init__(
        self,
        boundaries=(0.0, 1.0),
        specs=(),
        strategy=DEFAULT_STRATEGY,
        max_sender_size=3,
        include_counts=False,
    ):
        self.boundaries = boundaries
        self.specs = specs
        self.strategy = strategy
        self.max_sender_size = max_sender_size
        self.include_counts = include_counts

    def fit(self, X=None, y=None):
        return self

    def transform(self, history: EventHistory) -> pd.DataFrame:
        if not isinstance(history, EventHistory):
            raise InvalidInputError("EventPanelBuilder transforms EventHistory objects")
        grid = WaveGrid(tuple(self.boundaries))
        risk_set = enumerate_risk_set(history.universe, self.max_sender_size)
        panel = build_panel(
            history,
            grid,
            risk_set,
            specs=tuple(self.specs),
            strategy=self.strategy,
            include_counts=self.include_counts,
        )
        return panel.data


class CensoredHazardGAM(BaseEstimator):
    """Censored-event GAM with linear, smooth and random-intercept terms.

    Parameters mirror ModelSpec; ``fit`` accepts a covariate DataFrame
    plus binary outcomes and an optional log-exposure offset.
    """

    def __init__(
        self,
        linear=(),
        smooth=(),
        random_intercept=(),
        family="binomial_cloglog",
        num_basis=10,
        degree=3,
        include_intercept=True,
        double_penalty=False,
        criterion="aic",
    ):
        self.linear = linear
        self.smooth = smooth
        self.random_intercept = random_intercept
        self.family = family
        self.num_basis = num_basis
        self.degree = degree
        self.include_intercept = include_intercept
        self.double_penalty = double_penalty
        self.criterion = criterion

    def _spec(self) -> ModelSpec:
        terms = [LinearTerm(c) for c in self.linear]
        terms += [SmoothTerm(c, self.num_basis, self.degree) for c in self.smooth]
        terms += [RandomInterceptTerm(g) for g in self.random_intercept]
        return ModelSpec(
            terms=tuple(terms),
            family=self.family,
            include_intercept=self.include_intercept,
            double_penalty=self.double_penalty,
            criterion=self.criterion,
        )

    def fit(self, X: pd.DataFrame, y, offset=None):
        X = self._validate_frame(X)
        y = np.asarray(y)
        if len(y) != len(X):
            raise InvalidInputError(f"X has {len(X)} rows but y has {len(y)}")
        frame = X.copy()
        frame["y"] = y
        frame["offset"] = np.zeros(len(X)) if offset is None else np.asarray(offset, float)
        frame["wave"] = frame.get("wave", 1)
        frame["senders"] = frame.get("senders", "")
        frame["receiver"] = frame.get("receiver", "")
        panel = CensoredPanel(frame, covariates=[c for c in X.columns])
        self.result_ = fit_model(panel, self._spec())
        self.coef_ = self.result_.coefficients
        self.column_names_ = self.result_.column_names
        self.edf_ = self.result_.edf_by_term
        return self

    def predict_rate(self, X, offset=None) -> np.ndarray:
        self._check_fitted()
        return self.result_.predict_rate(self._validate_frame(X), offset)

    def predict_proba(self, X, offset=None) -> np.ndarray:
        self._check_fitted()
        return self.result_.predict_proba(self._validate_frame(X), offset)

    def predict(self, X, offset=None) -> np.ndarray:
        return (self.predict_proba(X, offset) >= 0.5).astype(int)

    def smooth_curve(self, term: str, grid):
        self._check_fitted()
        return smooth_effect(self.result_, term, grid)

    def _check_fitted(self):
        if not hasattr(self, "result_"):
            raise InvalidInputError("estimator is not fitted yet")

    @staticmethod
    def _validate_frame(X) -> pd.DataFrame:
        if not isinstance(X, pd.DataFrame):
            raise InvalidInputError("X must be a pandas DataFrame of covariates")
        return X
