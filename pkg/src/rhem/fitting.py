"""Penalized IRLS fitting of the censored-event likelihood.

Two equivalent routes maximize the same function

    sum_i (1 - y_i) * (-mu_i) + y_i * log(1 - exp(-mu_i)),
    log mu_i = offset_i + x_i' beta,

minus quadratic roughness penalties: ``pirls`` runs classic Fisher
scoring for the Binomial family with complementary log-log link, while
``fit_censored_poisson`` runs damped Newton with the observed Hessian
of the right-censored Poisson likelihood. They must agree at the
optimum; the test suite checks that they do.

Smoothing parameters are chosen per penalty block by coordinate-wise
grid search on AIC or GCV. Effective degrees of freedom come from the
trace of the influence matrix, covariance from the inverse penalized
Fisher information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from .censoring import CensoredPanel
from .design import DesignSystem, ModelSpec, build_design
from .errors import FitDiagnosticError, InvalidInputError

MAX_LOG_MU = 300.0  # keeps mu**2 finite inside iterations
# Above this rate the cell probability 1 - e^-mu rounds to exactly 1:
# the censored likelihood is flat and the fit sits on the boundary.
DIVERGED_MU = -math.log(2.0**-53)
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200

LAMBDA_GRID = np.logspace(-4.0, 6.0, 21)

# Criterion inflation per effective degree of freedom. The plain
# criterion (gamma = 1) mildly undersmooths; 1.4 is the standard guard
# and keeps pure-noise smooths reliably shrunk to zero under the
# double penalty.
DEFAULT_GAMMA = 1.4


def _mu_pi(eta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = np.exp(np.minimum(eta, MAX_LOG_MU))
    pi = -np.expm1(-mu)
    return mu, pi


def censored_loglik(y: np.ndarray, mu: np.ndarray) -> float:
    """Log-likelihood of censored counts: P(0) = e^-mu, P(>=1) = 1 - e^-mu."""
    pi = -np.expm1(-mu)
    with np.errstate(divide="ignore"):
        log_pi = np.where(y > 0, np.log(np.maximum(pi, 1e-320)), 0.0)
    return float(np.sum(np.where(y > 0, log_pi, -mu)))


def _check_binary(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise InvalidInputError("outcomes must be binary 0/1")
    return y


@dataclass
class PIRLSFit:
    """Converged (or last-iterate) state of one penalized fit."""

    coefficients: np.ndarray
    covariance: np.ndarray
    log_likelihood: float
    penalized_deviance: float
    edf_total: float
    edf_by_column: np.ndarray
    lambdas: np.ndarray
    n_iter: int
    converged: bool
    fisher_weights: np.ndarray = field(repr=False, default=None)

    @property
    def deviance(self) -> float:
        return -2.0 * self.log_likelihood


def _fisher_summaries(design: DesignSystem, beta, y, lambdas, penalty, log_lik):
    """Covariance and edf from the expected information at beta."""
    eta = design.offset + design.X @ beta
    mu, pi = _mu_pi(eta)
    weights = _cloglog_weights(mu, pi)
    xtwx = design.X.T @ (weights[:, None] * design.X)
    vb = _inv_psd(xtwx + penalty)
    influence_diag = np.einsum("ij,ji->i", vb, xtwx)
    pen_dev = -2.0 * log_lik + float(beta @ penalty @ beta)
    return PIRLSFit(
        coefficients=beta,
        covariance=vb,
        log_likelihood=log_lik,
        penalized_deviance=pen_dev,
        edf_total=float(influence_diag.sum()),
        edf_by_column=influence_diag,
        lambdas=np.asarray(lambdas, dtype=float),
        n_iter=0,
        converged=True,
        fisher_weights=weights,
    )


def _cloglog_weights(mu: np.ndarray, pi: np.ndarray) -> np.ndarray:
    # w = (d pi / d eta)^2 / (pi (1 - pi)) = mu^2 e^-mu / pi
    with np.errstate(under="ignore"):
        w = mu * mu * np.exp(-mu) / np.maximum(pi, 1e-320)
    return np.maximum(w, 1e-300)


def _inv_psd(a: np.ndarray) -> np.ndarray:
    try:
        chol = linalg.cho_factor(a, lower=True)
        return linalg.cho_solve(chol, np.eye(a.shape[0]))
    except linalg.LinAlgError:
        return np.linalg.pinv(a)


def _solve_psd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    try:
        return linalg.cho_solve(linalg.cho_factor(a, lower=True), b)
    except linalg.LinAlgError:
        return np.linalg.lstsq(a, b, rcond=None)[0]


def _guard_boundary(y, mu) -> None:
    if mu.max() > DIVERGED_MU:
        raise FitDiagnosticError(
            "fitted rate diverged (mu -> infinity, cell probability at 1); "
            "data may be separable"
        )


def pirls(
    design: DesignSystem,
    y,
    lambdas: Sequence[float] = (),
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    start: np.ndarray | None = None,
) -> PIRLSFit:
    """Penalized Fisher scoring for the Binomial cloglog family.

    Converges when the relative change in penalized deviance and the
    coefficient step both drop below ``tol``. Raises FitDiagnosticError
    for all-zero outcomes (MLE at -infinity), diverging fitted rates,
    or failure to converge; the exception carries the last iterate.
    """
    y = _check_binary(y)
    if y.sum() == 0:
        raise FitDiagnosticError("all outcomes are zero; intercept MLE is at -infinity")
    penalty = design.penalty_total(lambdas)
    X, offset = design.X, design.offset
    beta = np.zeros(design.n_params) if start is None else np.asarray(start, dtype=float).copy()

    eta = offset + X @ beta
    mu, pi = _mu_pi(eta)
    pen_dev = -2.0 * censored_loglik(y, mu) + beta @ penalty @ beta
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        weights = _cloglog_weights(mu, pi)
        # Work with X'Wz directly; w*z = w*(eta - offset) + (mu/pi)*(y - pi)
        # stays finite even where the weights underflow.
        rhs = X.T @ (weights * (eta - offset) + (mu / np.maximum(pi, 1e-320)) * (y - pi))
        lhs = X.T @ (weights[:, None] * X) + penalty
        beta_new = _solve_psd(lhs, rhs)

        step = beta_new - beta
        new_pen_dev, accepted = np.inf, None
        for _ in range(40):
            candidate = beta + step
            eta_c = offset + X @ candidate
            mu_c, pi_c = _mu_pi(eta_c)
            new_pen_dev = -2.0 * censored_loglik(y, mu_c) + candidate @ penalty @ candidate
            if np.isfinite(new_pen_dev) and new_pen_dev <= pen_dev + 1e-12 * (1 + abs(pen_dev)):
                accepted = (candidate, eta_c, mu_c, pi_c)
                break
            step = step / 2.0
        if accepted is None:
            raise FitDiagnosticError(
                f"penalized IRLS step failed to improve after halving (iter {iterations})",
                last_coefficients=beta,
                n_iter=iterations,
            )
        beta_prev = beta
        beta, eta, mu, pi = accepted
        rel_dev = abs(pen_dev - new_pen_dev) / (1.0 + abs(new_pen_dev))
        rel_step = np.max(np.abs(beta - beta_prev)) / (1.0 + np.max(np.abs(beta)))
        pen_dev = new_pen_dev
        if rel_dev < tol and rel_step < tol:
            converged = True
            break
    if not converged:
        raise FitDiagnosticError(
            f"penalized IRLS did not converge in {max_iter} iterations",
            last_coefficients=beta,
            n_iter=iterations,
        )
    _guard_boundary(y, mu)
    fit = _fisher_summaries(design, beta, y, lambdas, penalty, censored_loglik(y, mu))
    fit.n_iter = iterations
    return fit


def censored_poisson_gradient_hessian(y, mu):
    """Per-row d/d eta and d^2/d eta^2 of the censored Poisson log-likelihood."""
    pi = -np.expm1(-mu)
    with np.errstate(under="ignore"):
        q = mu * np.exp(-mu) / np.maximum(pi, 1e-320)
    grad = np.where(y > 0, q, -mu)
    hess = np.where(y > 0, q * (1.0 - mu - q), -mu)
    return grad, hess


def observed_information(design: DesignSystem, beta, y, lambdas=()) -> np.ndarray:
    """Negative Hessian of the penalized censored-Poisson log-likelihood."""
    y = _check_binary(y)
    eta = design.offset + design.X @ np.asarray(beta, dtype=float)
    mu, _ = _mu_pi(eta)
    _, hess = censored_poisson_gradient_hessian(y, mu)
    return design.X.T @ ((-hess)[:, None] * design.X) + design.penalty_total(lambdas)


def fit_censored_poisson(
    design: DesignSystem,
    y,
    lambdas: Sequence[float] = (),
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    start: np.ndarray | None = None,
) -> PIRLSFit:
    """Damped Newton fit of the right-censored Poisson regression.

    Same contract (and optimum) as ``pirls``; uses the observed
    information rather than Fisher scoring.
    """
    y = _check_binary(y)
    if y.sum() == 0:
        raise FitDiagnosticError("all outcomes are zero; intercept MLE is at -infinity")
    penalty = design.penalty_total(lambdas)
    X, offset = design.X, design.offset
    beta = np.zeros(design.n_params) if start is None else np.asarray(start, dtype=float).copy()

    eta = offset + X @ beta
    mu, _ = _mu_pi(eta)
    pen_dev = -2.0 * censored_loglik(y, mu) + beta @ penalty @ beta
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        grad_eta, hess_eta = censored_poisson_gradient_hessian(y, mu)
        gradient = X.T @ grad_eta - penalty @ beta
        neg_hess = X.T @ ((-hess_eta)[:, None] * X) + penalty
        step = _solve_psd(neg_hess, gradient)

        new_pen_dev, accepted = np.inf, None
        for _ in range(40):
            candidate = beta + step
            eta_c = offset + X @ candidate
            mu_c, _ = _mu_pi(eta_c)
            new_pen_dev = -2.0 * censored_loglik(y, mu_c) + candidate @ penalty @ candidate
            if np.isfinite(new_pen_dev) and new_pen_dev <= pen_dev + 1e-12 * (1 + abs(pen_dev)):
                accepted = (candidate, eta_c, mu_c)
                break
            step = step / 2.0
        if accepted is None:
            raise FitDiagnosticError(
                f"Newton step failed to improve after halving (iter {iterations})",
                last_coefficients=beta,
                n_iter=iterations,
            )
        beta_prev = beta
        beta, eta, mu = accepted
        rel_dev = abs(pen_dev - new_pen_dev) / (1.0 + abs(new_pen_dev))
        rel_step = np.max(np.abs(beta - beta_prev)) / (1.0 + np.max(np.abs(beta)))
        pen_dev = new_pen_dev
        if rel_dev < tol and rel_step < tol:
            converged = True
            break
    if not converged:
        raise FitDiagnosticError(
            f"censored Poisson fit did not converge in {max_iter} iterations",
            last_coefficients=beta,
            n_iter=iterations,
        )
    _guard_boundary(y, mu)
    fit = _fisher_summaries(design, beta, y, lambdas, penalty, censored_loglik(y, mu))
    fit.n_iter = iterations
    return fit


def fit_poisson_counts(
    design: DesignSystem,
    counts,
    lambdas: Sequence[float] = (),
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    start: np.ndarray | None = None,
) -> PIRLSFit:
    """Plain Poisson IRLS on uncensored counts (complete-data benchmark)."""
    y = np.asarray(counts, dtype=float)
    if (y < 0).any():
        raise InvalidInputError("counts must be nonnegative")
    if y.sum() == 0:
        raise FitDiagnosticError("all counts are zero; intercept MLE is at -infinity")
    penalty = design.penalty_total(lambdas)
    X, offset = design.X, design.offset
    beta = np.zeros(design.n_params) if start is None else np.asarray(start, dtype=float).copy()

    def loglik(mu):
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(y > 0, y * np.log(mu), 0.0)
        return float(np.sum(term - mu))

    eta = offset + X @ beta
    mu = np.exp(np.minimum(eta, MAX_LOG_MU))
    pen_dev = -2.0 * loglik(mu) + beta @ penalty @ beta
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        weights = np.maximum(mu, 1e-300)
        rhs = X.T @ (weights * (eta - offset) + (y - mu))
        lhs = X.T @ (weights[:, None] * X) + penalty
        beta_new = _solve_psd(lhs, rhs)
        step = beta_new - beta
        new_pen_dev, accepted = np.inf, None
        for _ in range(40):
            candidate = beta + step
            eta_c = offset + X @ candidate
            mu_c = np.exp(np.minimum(eta_c, MAX_LOG_MU))
            new_pen_dev = -2.0 * loglik(mu_c) + candidate @ penalty @ candidate
            if np.isfinite(new_pen_dev) and new_pen_dev <= pen_dev + 1e-12 * (1 + abs(pen_dev)):
                accepted = (candidate, eta_c, mu_c)
                break
            step = step / 2.0
        if accepted is None:
            raise FitDiagnosticError(
                "Poisson IRLS step failed to improve", last_coefficients=beta, n_iter=iterations
            )
        beta_prev = beta
        beta, eta, mu = accepted
        rel_dev = abs(pen_dev - new_pen_dev) / (1.0 + abs(new_pen_dev))
        rel_step = np.max(np.abs(beta - beta_prev)) / (1.0 + np.max(np.abs(beta)))
        pen_dev = new_pen_dev
        if rel_dev < tol and rel_step < tol:
            converged = True
            break
    if not converged:
        raise FitDiagnosticError(
            f"Poisson IRLS did not converge in {max_iter} iterations",
            last_coefficients=beta,
            n_iter=iterations,
        )
    weights = np.maximum(mu, 1e-300)
    xtwx = X.T @ (weights[:, None] * X)
    vb = _inv_psd(xtwx + penalty)
    influence = np.einsum("ij,ji->i", vb, xtwx)
    return PIRLSFit(
        coefficients=beta,
        covariance=vb,
        log_likelihood=loglik(mu),
        penalized_deviance=pen_dev,
        edf_total=float(influence.sum()),
        edf_by_column=influence,
        lambdas=np.asarray(lambdas, dtype=float),
        n_iter=iterations,
        converged=True,
        fisher_weights=weights,
    )


_FITTERS = {
    "binomial_cloglog": pirls,
    "censored_poisson": fit_censored_poisson,
    "poisson": fit_poisson_counts,
}


def _criterion_value(fit: PIRLSFit, criterion: str, n: int, gamma: float) -> float:
    dev = fit.deviance
    if criterion == "aic":
        return dev + 2.0 * gamma * fit.edf_total
    if criterion == "gcv":
        denom = max(n - gamma * fit.edf_total, 1e-8)
        return n * dev / denom**2
    raise InvalidInputError(f"unknown criterion {criterion!r}")


def select_smoothing(
    design: DesignSystem,
    y,
    criterion: str = "aic",
    family: str = "binomial_cloglog",
    grid: np.ndarray | None = None,
    gamma: float = DEFAULT_GAMMA,
    max_cycles: int = 10,
) -> np.ndarray:
    """Per-block smoothing parameters by coordinate-wise grid search.

    Cycles through penalty blocks, trying each grid value with the
    others held fixed, until no block changes. Among grid values whose
    criterion is within one unit-of-deviance step (2*gamma) of the
    block minimum, the largest lambda wins; with several penalty blocks
    this keeps uninformative terms from soaking up spurious degrees of
    freedom.
    """
    blocks = design.all_blocks
    if not blocks:
        return np.zeros(0)
    grid = LAMBDA_GRID if grid is None else np.asarray(grid, dtype=float)
    fitter = _FITTERS[family]
    n = design.X.shape[0]
    lambdas = np.ones(len(blocks))
    cache: dict[tuple, float] = {}
    warm = None

    def evaluate(lams) -> float:
        nonlocal warm
        key = tuple(float(v) for v in lams)
        if key in cache:
            return cache[key]
        try:
            fit = fitter(design, y, lams, start=warm)
            value = _criterion_value(fit, criterion, n, gamma)
            warm = fit.coefficients
        except FitDiagnosticError:
            value = np.inf
        cache[key] = value
        return value

    margin = 2.0 * gamma
    for _ in range(max_cycles):
        changed = False
        for j in range(len(blocks)):
            trial = lambdas.copy()
            values = []
            for lam in grid:
                trial[j] = lam
                values.append(evaluate(trial))
            values = np.asarray(values)
            if not np.isfinite(values).any():
                raise FitDiagnosticError(
                    f"selection criterion non-finite for every lambda in block "
                    f"{blocks[j].term!r}"
                )
            best = values.min()
            if criterion == "aic":
                ok = values <= best + margin
            else:
                ok = values <= best * (1.0 + margin / max(n, 1))
            choice = grid[np.where(ok)[0].max()]
            if choice != lambdas[j]:
                lambdas[j] = choice
                changed = True
        if not changed:
            break
    return lambdas


@dataclass
class SmoothCurve:
    """A fitted smooth on a grid with a pointwise 95% band."""

    grid: np.ndarray
    fit: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    extrapolated: np.ndarray


@dataclass
class FitResult:
    """Full estimation output for one model on one panel."""

    spec: ModelSpec
    design: DesignSystem
    coefficients: np.ndarray
    covariance: np.ndarray
    column_names: list[str]
    lambdas: dict[str, float]
    edf_by_term: dict[str, float]
    edf_total: float
    log_likelihood: float
    p_values: dict[str, float]
    random_effect_sd: dict[str, float]
    n_iter: int
    converged: bool

    def coefficient(self, name: str) -> float:
        try:
            return float(self.coefficients[self.column_names.index(name)])
        except ValueError:
            raise InvalidInputError(f"no coefficient named {name!r}") from None

    def predict_rate(self, frame, offset=None) -> np.ndarray:
        """Expected event count mu per row of a new covariate frame."""
        X = self.design.matrix_for(frame)
        off = np.zeros(len(X)) if offset is None else np.asarray(offset, dtype=float)
        return np.exp(np.minimum(off + X @ self.coefficients, MAX_LOG_MU))

    def predict_proba(self, frame, offset=None) -> np.ndarray:
        """Probability of at least one event per row."""
        return -np.expm1(-self.predict_rate(frame, offset))

    def to_dict(self) -> dict:
        return {
            "family": self.spec.family,
            "coefficients": dict(zip(self.column_names, map(float, self.coefficients))),
            "lambdas": {k: float(v) for k, v in self.lambdas.items()},
            "edf_by_term": {k: float(v) for k, v in self.edf_by_term.items()},
            "edf_total": float(self.edf_total),
            "log_likelihood": float(self.log_likelihood),
            "p_values": {k: float(v) for k, v in self.p_values.items()},
            "random_effect_sd": {k: float(v) for k, v in self.random_effect_sd.items()},
            "n_iter": self.n_iter,
            "converged": self.converged,
        }


def fit_model(panel: CensoredPanel, spec: ModelSpec, gamma: float = DEFAULT_GAMMA) -> FitResult:
    """build_design -> select_smoothing -> family fit, packaged up."""
    frame = panel.data if isinstance(panel, CensoredPanel) else panel
    if len(frame) == 0:
        raise InvalidInputError("empty panel")
    design = build_design(panel, spec)
    y = frame["y"].to_numpy(dtype=float)
    lambdas = select_smoothing(design, y, criterion=spec.criterion, family=spec.family, gamma=gamma)
    fitter = _FITTERS[spec.family]
    fit = fitter(design, y, lambdas)
    return _package(spec, design, fit)


def _package(spec: ModelSpec, design: DesignSystem, fit: PIRLSFit) -> FitResult:
    edf_by_term = {}
    p_values = {}
    for term in design.terms:
        edf = float(fit.edf_by_column[term.start : term.stop].sum())
        edf_by_term[term.name] = edf
        if term.kind in ("smooth", "random_intercept"):
            beta_t = fit.coefficients[term.start : term.stop]
            v_t = fit.covariance[term.start : term.stop, term.start : term.stop]
            wald = float(beta_t @ np.linalg.pinv(v_t, hermitian=True) @ beta_t)
            df = max(1.0, round(edf))
            p_values[term.name] = float(stats.chi2.sf(wald, df))
        elif term.kind == "linear":
            se = math.sqrt(max(fit.covariance[term.start, term.start], 0.0))
            z = fit.coefficients[term.start] / se if se > 0 else np.inf
            p_values[term.name] = float(2.0 * stats.norm.sf(abs(z)))

    lambda_map = {}
    random_sd = {}
    for lam, block in zip(fit.lambdas, design.all_blocks):
        key = block.term if block.kind != "nullspace" else f"{block.term}.null"
        lambda_map[key] = float(lam)
        if block.kind == "random":
            # phi = 1 for these families, so sd = sqrt(phi / lambda).
            random_sd[block.term] = float(1.0 / math.sqrt(lam)) if lam > 0 else math.inf

    return FitResult(
        spec=spec,
        design=design,
        coefficients=fit.coefficients,
        covariance=fit.covariance,
        column_names=design.column_names,
        lambdas=lambda_map,
        edf_by_term=edf_by_term,
        edf_total=fit.edf_total,
        log_likelihood=fit.log_likelihood,
        p_values=p_values,
        random_effect_sd=random_sd,
        n_iter=fit.n_iter,
        converged=fit.converged,
    )


def smooth_effect(result: FitResult, term: str, grid) -> SmoothCurve:
    """Centered fitted smooth on a grid with a 1.96-SE band.

    Points outside the training range of the covariate are evaluated by
    polynomial extension of the boundary basis and flagged.
    """
    if term not in result.design.smooth_info:
        raise InvalidInputError(f"{term!r} is not a smooth term in this fit")
    info = result.design.smooth_info[term]
    grid = np.asarray(grid, dtype=float)
    raw, outside = info.basis.evaluate(grid)
    centered = raw @ info.center
    beta = result.coefficients[info.start : info.stop]
    cov = result.covariance[info.start : info.stop, info.start : info.stop]
    values = centered @ beta
    se = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", centered, cov, centered), 0.0))
    return SmoothCurve(grid, values, values - 1.96 * se, values + 1.96 * se, outside)
