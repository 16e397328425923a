"""Stochastic generation of event histories from an intensity model.

Gillespie sampling is exact when rates are constant between events:
exponential waiting times for the total rate, then a proportional draw
over candidates. Deterministically time-varying models ("time" terms)
go through tau-leaping instead: intensities are frozen at the left
endpoint of each leap, candidate counts drawn Poisson, and event times
placed uniformly inside the leap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, UnsupportedModelError
from .events import Actor, EventHistory, Hyperevent, RiskSet, enumerate_risk_set
from .statistics import ENDOGENOUS_NAMES, HistoryAccumulator

TIME_COVARIATE = "time"


@dataclass(frozen=True)
class IntensityModel:
    """Baseline rate times exp of linear, smooth and random-offset terms."""

    baseline: float
    linear_terms: tuple[tuple[str, float], ...] = ()
    smooth_terms: tuple[tuple[str, Callable[[float], float]], ...] = ()
    random_offsets: Mapping[str, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "linear_terms", tuple(self.linear_terms))
        object.__setattr__(self, "smooth_terms", tuple(self.smooth_terms))
        if not self.baseline > 0:
            raise InvalidInputError(f"baseline must be positive, got {self.baseline}")

    @property
    def covariate_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.linear_terms) + tuple(n for n, _ in self.smooth_terms)

    @property
    def time_varying(self) -> bool:
        return TIME_COVARIATE in self.covariate_names

    @property
    def endogenous(self) -> bool:
        return any(n in ENDOGENOUS_NAMES for n in self.covariate_names)


@dataclass(frozen=True)
class SimConfig:
    """Horizon, risk-universe size cap, seeding and leap step."""

    horizon: float
    max_sender_size: int
    seed: int
    tau: float | None = None
    replicate: int = 0

    def __post_init__(self):
        if not self.horizon > 0:
            raise InvalidInputError(f"horizon must be positive, got {self.horizon}")
        if self.max_sender_size < 1:
            raise InvalidInputError("max_sender_size must be >= 1")
        if self.tau is not None:
            if not self.tau > 0:
                raise InvalidInputError(f"tau must be positive, got {self.tau}")
            if self.tau > self.horizon:
                raise InvalidInputError("tau cannot exceed the horizon")

    def rng(self) -> np.random.Generator:
        # Keyed by (seed, replicate) so replicate r is identical whether
        # run alone or inside a sweep.
        return np.random.default_rng(np.random.SeedSequence([self.seed, self.replicate]))


def _sigmoid_decay(center: float = 16.0, rate: float = 2.0):
    return lambda x: 1.0 / (1.0 + math.exp(rate * (x - center)))


def _scaled_log1p(coef: float = 1.0):
    return lambda x: coef * math.log1p(x)


def _scaled_identity(coef: float = 1.0):
    return lambda x: coef * x


# Named shapes so smooth terms survive a JSON round trip.
SHAPE_REGISTRY = {
    "sigmoid_decay": _sigmoid_decay,
    "scaled_log1p": _scaled_log1p,
    "scaled_identity": _scaled_identity,
}


def intensity_model_from_dict(payload: Mapping) -> IntensityModel:
    """Build an IntensityModel from its JSON form.

    Smooth terms are ``{"covariate": ..., "shape": <registry name>,
    "params": {...}}``; linear terms are ``[name, coefficient]`` pairs.
    """
    smooth = []
    for term in payload.get("smooth_terms", ()):
        name = term.get("shape")
        if name not in SHAPE_REGISTRY:
            raise InvalidInputError(
                f"unknown shape {name!r}; known shapes: {sorted(SHAPE_REGISTRY)}"
            )
        smooth.append((term["covariate"], SHAPE_REGISTRY[name](**term.get("params", {}))))
    return IntensityModel(
        baseline=float(payload["baseline"]),
        linear_terms=tuple((str(n), float(c)) for n, c in payload.get("linear_terms", ())),
        smooth_terms=tuple(smooth),
        random_offsets=payload.get("random_offsets"),
    )


def intensity(
    model: IntensityModel,
    covariates: Mapping[str, float],
    group: str | None = None,
) -> float:
    """Evaluate the hazard for one candidate given its covariate values."""
    exponent = 0.0
    for name, coef in model.linear_terms:
        exponent += coef * _lookup(covariates, name)
    for name, shape in model.smooth_terms:
        exponent += float(shape(_lookup(covariates, name)))
    if model.random_offsets is not None and group is not None:
        exponent += model.random_offsets.get(group, 0.0)
    if exponent > 700.0:
        raise InvalidInputError(f"intensity overflow (exponent {exponent})")
    return model.baseline * math.exp(exponent)


def _lookup(covariates: Mapping[str, float], name: str) -> float:
    try:
        return float(covariates[name])
    except KeyError:
        raise InvalidInputError(f"model covariate {name!r} missing from covariate vector") from None


def candidate_rates(
    model: IntensityModel,
    risk_set: RiskSet,
    accumulator: HistoryAccumulator,
    t: float | None = None,
    groups: Sequence[str] | None = None,
) -> np.ndarray:
    """Rate per risk-set candidate at the accumulator's current frontier."""
    names = model.covariate_names
    rates = np.empty(len(risk_set.candidates))
    for i, (senders, receiver) in enumerate(risk_set.candidates):
        cov = {}
        for name in names:
            if name == TIME_COVARIATE:
                if t is None:
                    raise UnsupportedModelError("time covariate needs an evaluation time")
                cov[name] = t
            else:
                cov[name] = accumulator.value(name, senders, receiver)
        group = groups[i] if groups is not None else None
        rates[i] = intensity(model, cov, group)
    return rates


def _candidate_groups(model: IntensityModel, universe, risk_set: RiskSet):
    """Random-offset group per candidate: the receiver's class, if any."""
    if model.random_offsets is None:
        return None
    classes = {a.id: a.class_id for a in universe}
    return [classes.get(receiver) for _, receiver in risk_set.candidates]


def simulate_gillespie(
    universe: Sequence[Actor],
    model: IntensityModel,
    config: SimConfig,
    risk_set: RiskSet | None = None,
) -> EventHistory:
    """Exact continuous-time sampling on [0, horizon].

    Rates are constant between events (endogenous covariates are
    recomputed after every accepted event), so exponential waiting
    times plus a proportional candidate draw are exact. Models with an
    explicit time covariate are rejected; use simulate_tau_leap.
    """
    if model.time_varying:
        raise UnsupportedModelError(
            "Gillespie sampling requires rates constant between events; "
            "got a time covariate, use simulate_tau_leap"
        )
    if risk_set is None:
        risk_set = enumerate_risk_set(universe, config.max_sender_size)
    rng = config.rng()
    acc = HistoryAccumulator(universe)
    groups = _candidate_groups(model, universe, risk_set)
    rates = candidate_rates(model, risk_set, acc, groups=groups)
    events: list[Hyperevent] = []
    t = 0.0
    while True:
        total = float(rates.sum())
        if total <= 0:
            break
        t += rng.exponential(1.0 / total)
        if t > config.horizon:
            break
        pick = int(np.searchsorted(np.cumsum(rates), rng.uniform() * total, side="left"))
        pick = min(pick, len(rates) - 1)
        senders, receiver = risk_set.candidates[pick]
        event = Hyperevent(frozenset(senders), receiver, t)
        events.append(event)
        if model.endogenous:
            acc.push(event)
            rates = candidate_rates(model, risk_set, acc, groups=groups)
    return EventHistory(tuple(events), tuple(universe))


def simulate_tau_leap(
    universe: Sequence[Actor],
    model: IntensityModel,
    config: SimConfig,
    risk_set: RiskSet | None = None,
) -> EventHistory:
    """Approximate sampling with intensities frozen per leap.

    Each leap [t, t + tau) draws candidate counts from
    Poisson(rate(t) * leap length) and scatters the events uniformly
    inside the leap. The final leap is shortened to end exactly at the
    horizon; with one leap covering [0, T] the counts are exactly
    Poisson(rate * T).
    """
    if config.tau is None:
        raise InvalidInputError("tau-leaping needs config.tau")
    if risk_set is None:
        risk_set = enumerate_risk_set(universe, config.max_sender_size)
    rng = config.rng()
    acc = HistoryAccumulator(universe)
    groups = _candidate_groups(model, universe, risk_set)
    events: list[Hyperevent] = []
    t = 0.0
    while t < config.horizon - 1e-12:
        leap = min(config.tau, config.horizon - t)
        rates = candidate_rates(model, risk_set, acc, t=t, groups=groups)
        counts = rng.poisson(rates * leap)
        leap_events: list[Hyperevent] = []
        for i in np.nonzero(counts)[0]:
            senders, receiver = risk_set.candidates[int(i)]
            for u in rng.uniform(t, t + leap, size=int(counts[i])):
                leap_events.append(Hyperevent(frozenset(senders), receiver, float(u)))
        leap_events.sort(key=lambda e: e.time)
        for event in leap_events:
            events.append(event)
            acc.push(event)
        t += leap
    return EventHistory(tuple(events), tuple(universe))
