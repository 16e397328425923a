"""Right-censored wave panels from continuous-time histories.

Event counts per (candidate, wave) are censored at 1: a survey only
reveals whether a candidate hyperevent occurred at least once inside
the wave. The panel carries log wave-length offsets so the censored
counts can be fit as a binomial cloglog or censored Poisson regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import InvalidInputError
from .events import EventHistory, RiskSet
from .statistics import StatisticSpec, compute_panel_statistics

STRATEGIES = ("past", "current", "average")
DEFAULT_STRATEGY = "average"

SENDER_SEP = ";"


@dataclass(frozen=True)
class WaveGrid:
    """Increasing wave boundaries t_0 < t_1 < ... < t_K."""

    boundaries: tuple[float, ...]

    def __post_init__(self):
        bounds = tuple(float(b) for b in self.boundaries)
        object.__setattr__(self, "boundaries", bounds)
        if len(bounds) < 2:
            raise InvalidInputError("need at least one wave (two boundaries)")
        if any(b <= a for a, b in zip(bounds, bounds[1:])):
            raise InvalidInputError(f"boundaries must be strictly increasing: {bounds}")

    @property
    def num_waves(self) -> int:
        return len(self.boundaries) - 1

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    @property
    def midpoints(self) -> np.ndarray:
        b = np.asarray(self.boundaries)
        return (b[:-1] + b[1:]) / 2.0

    @classmethod
    def unit(cls, num_waves: int) -> "WaveGrid":
        return cls(tuple(float(k) for k in range(num_waves + 1)))


@dataclass
class CensoredPanel:
    """One row per (candidate, wave) with outcome, offset and covariates."""

    data: pd.DataFrame
    covariates: list[str] = field(default_factory=list)

    BASE_COLUMNS = ("wave", "senders", "receiver", "y", "offset")

    def __post_init__(self):
        missing = [c for c in self.BASE_COLUMNS if c not in self.data.columns]
        if missing:
            raise InvalidInputError(f"panel missing columns {missing}")
        if not np.isfinite(self.data["offset"].to_numpy(float)).all():
            raise InvalidInputError("panel offsets must be finite")

    def __len__(self) -> int:
        return len(self.data)


def format_senders(senders: Sequence[str]) -> str:
    return SENDER_SEP.join(sorted(senders))


def parse_senders(text: str) -> tuple[str, ...]:
    return tuple(sorted(part for part in str(text).split(SENDER_SEP) if part))


def wave_counts(
    history: EventHistory,
    grid: WaveGrid,
    risk_sets: Sequence[RiskSet] | RiskSet,
) -> np.ndarray:
    """Exact event counts per (candidate, wave), candidates from wave k's risk set.

    An event matches a candidate when its sender set and receiver are
    identical. Events must fall inside some wave (t_0 < time <= t_K).
    Returns an object-free float array of shape (max candidates, waves)
    when all waves share one risk set, else a list-like per wave; use
    wave_count_map for keyed access.
    """
    per_wave = _normalize_risk_sets(risk_sets, grid.num_waves)
    counts = wave_count_map(history, grid)
    out = []
    for k, rs in enumerate(per_wave):
        col = np.array([counts.get((s, r, k), 0) for s, r in rs.candidates], dtype=float)
        out.append(col)
    if all(rs.candidates == per_wave[0].candidates for rs in per_wave):
        return np.column_stack(out)
    return out  # ragged: one array per wave


def wave_count_map(history: EventHistory, grid: WaveGrid) -> dict:
    """Counts keyed by (sender tuple, receiver, wave index)."""
    bounds = np.asarray(grid.boundaries)
    counts: dict = {}
    for e in history.events:
        if e.time <= bounds[0] or e.time > bounds[-1]:
            raise InvalidInputError(f"event at time {e.time} outside all waves {tuple(bounds)}")
        k = int(np.searchsorted(bounds, e.time, side="left")) - 1
        key = (e.sender_tuple, e.receiver, k)
        counts[key] = counts.get(key, 0) + 1
    return counts


def right_censor(counts) -> np.ndarray:
    """Censor counts at 1: y = 1 if any event occurred."""
    arr = np.asarray(counts)
    if (arr < 0).any():
        raise InvalidInputError("counts must be nonnegative")
    return (arr > 0).astype(int)


def covariate_at_strategy(value_at_start: float, value_at_end: float, strategy: str) -> float:
    """Combine wave-boundary covariate values per the evaluation strategy."""
    if strategy == "past":
        return value_at_start
    if strategy == "current":
        return value_at_end
    if strategy == "average":
        return (value_at_start + value_at_end) / 2.0
    raise InvalidInputError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")


def build_panel(
    history: EventHistory,
    grid: WaveGrid,
    risk_sets: Sequence[RiskSet] | RiskSet,
    specs: Sequence[StatisticSpec | str] = (),
    strategy: str = DEFAULT_STRATEGY,
    include_counts: bool = False,
    subset_cap: int | None = None,
    exclude_senders: bool = False,
    time_as: str = "midpoint",
) -> CensoredPanel:
    """Assemble the censored regression panel.

    Covariates are evaluated at both wave boundaries and combined per
    ``strategy``. Boundary evaluation at t_k includes the events of
    wave k itself (survey knowledge up to and including the wave), which
    the strict-past statistic primitive realises by evaluating at the
    next representable instant after t_k. The ``time`` column carries
    the wave midpoint for baseline smooths (``time_as="wave_index"``
    switches it to 1, 2, ...); the offset is log(t_k - t_{k-1}).
    """
    if strategy not in STRATEGIES:
        raise InvalidInputError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if time_as not in ("midpoint", "wave_index"):
        raise InvalidInputError(f"unknown time_as {time_as!r}")
    specs = [s if isinstance(s, StatisticSpec) else StatisticSpec.parse(str(s)) for s in specs]
    per_wave = _normalize_risk_sets(risk_sets, grid.num_waves)

    bounds = np.asarray(grid.boundaries)
    # "just after t_k": smallest float above the boundary, so events at
    # exactly t_k are inside the strict past of the evaluation instant.
    eval_times = np.nextafter(bounds, np.inf)

    all_candidates = sorted({c for rs in per_wave for c in rs.candidates})
    cand_index = {c: i for i, c in enumerate(all_candidates)}
    union_rs = RiskSet(tuple(all_candidates))
    if specs:
        kwargs = {} if subset_cap is None else {"subset_cap": subset_cap}
        values = compute_panel_statistics(
            history, union_rs, eval_times, specs, exclude_senders=exclude_senders, **kwargs
        )
    else:
        values = np.zeros((len(all_candidates), len(eval_times), 0))

    counts = wave_count_map(history, grid)
    rows = []
    for k, rs in enumerate(per_wave):
        offset = math.log(grid.boundaries[k + 1] - grid.boundaries[k])
        time_value = grid.midpoints[k] if time_as == "midpoint" else float(k + 1)
        for senders, receiver in rs.candidates:
            i = cand_index[(senders, receiver)]
            count = counts.get((senders, receiver, k), 0)
            row = {
                "wave": k + 1,
                "senders": format_senders(senders),
                "receiver": receiver,
                "y": int(count > 0),
                "offset": offset,
                "time": time_value,
            }
            if include_counts:
                row["count"] = count
            for j, spec in enumerate(specs):
                row[spec.column] = covariate_at_strategy(
                    values[i, k, j], values[i, k + 1, j], strategy
                )
            rows.append(row)
    columns = ["wave", "senders", "receiver", "y", "offset", "time"]
    if include_counts:
        columns.append("count")
    columns += [s.column for s in specs]
    frame = pd.DataFrame(rows, columns=columns)
    return CensoredPanel(frame, covariates=["time"] + [s.column for s in specs])


def _normalize_risk_sets(risk_sets, num_waves: int) -> list[RiskSet]:
    if isinstance(risk_sets, RiskSet):
        return [risk_sets] * num_waves
    per_wave = list(risk_sets)
    if len(per_wave) != num_waves:
        raise InvalidInputError(
            f"need one risk set per wave: got {len(per_wave)} for {num_waves} waves"
        )
    return per_wave
