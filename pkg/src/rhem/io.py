"""File formats: history/actor/nomination/panel CSVs and model JSON.

All ids are strings, files are UTF-8 with a header row. Sender sets are
serialized as ``;``-joined sorted ids. Writers emit deterministic row
order and float repr so re-running a seeded pipeline reproduces files
byte for byte.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import pandas as pd

from .censoring import CensoredPanel, format_senders, parse_senders
from .design import ModelSpec
from .errors import InvalidInputError
from .events import Actor, EventHistory, Hyperevent
from .fitting import FitResult, SmoothCurve, smooth_effect

HISTORY_COLUMNS = ("time", "senders", "receiver")
ACTOR_COLUMNS = ("id", "gender", "age", "class_id")
NOMINATION_COLUMNS = ("wave", "ego", "alter", "score")


def write_history_csv(history: EventHistory, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for e in history.events:
            writer.writerow([repr(e.time), format_senders(e.sender_tuple), e.receiver])


def read_history_csv(path, universe: Iterable[Actor] | None = None) -> EventHistory:
    """Load a history; the universe defaults to the ids seen in the file."""
    events = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(HISTORY_COLUMNS) - set(reader.fieldnames):
            raise InvalidInputError(f"{path}: header must contain {HISTORY_COLUMNS}")
        for lineno, row in enumerate(reader, start=2):
            try:
                senders = parse_senders(row["senders"])
                event = Hyperevent(frozenset(senders), row["receiver"], float(row["time"]))
            except (TypeError, ValueError) as exc:
                raise InvalidInputError(f"{path}: bad history row {lineno}: {exc}") from exc
            events.append(event)
            seen.update(senders)
            seen.add(row["receiver"])
    if universe is None:
        actors = tuple(Actor(i) for i in sorted(seen))
    else:
        actors = tuple(universe)
    return EventHistory(tuple(events), actors)


def write_actors_csv(actors: Iterable[Actor], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ACTOR_COLUMNS)
        for a in actors:
            writer.writerow([a.id, a.gender or "", "" if a.age is None else repr(a.age), a.class_id or ""])


def read_actors_csv(path) -> tuple[Actor, ...]:
    actors = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "id" not in reader.fieldnames:
            raise InvalidInputError(f"{path}: actors file needs an 'id' column")
        for lineno, row in enumerate(reader, start=2):
            try:
                actors.append(
                    Actor(
                        id=row["id"],
                        gender=row.get("gender") or None,
                        age=float(row["age"]) if row.get("age") else None,
                        class_id=row.get("class_id") or None,
                    )
                )
            except (TypeError, ValueError) as exc:
                raise InvalidInputError(f"{path}: bad actor row {lineno}: {exc}") from exc
    return tuple(actors)


def read_nominations_csv(path) -> pd.DataFrame:
    """Nomination rows: wave, ego, alter, score (score integer)."""
    frame = pd.read_csv(path, dtype={"ego": str, "alter": str})
    missing = set(NOMINATION_COLUMNS) - set(frame.columns)
    if missing:
        raise InvalidInputError(f"{path}: nomination file missing columns {sorted(missing)}")
    frame["wave"] = frame["wave"].astype(int)
    frame["score"] = frame["score"].astype(int)
    return frame


def friendship_scores(nominations: pd.DataFrame, wave: int) -> dict[tuple[str, str], int]:
    sub = nominations[nominations["wave"] == wave]
    return {(ego, alter): int(score) for ego, alter, score in zip(sub["ego"], sub["alter"], sub["score"])}


def bad_talk_pairs(nominations: pd.DataFrame, wave: int) -> list[tuple[str, str]]:
    sub = nominations[(nominations["wave"] == wave) & (nominations["score"] != 0)]
    return list(zip(sub["ego"], sub["alter"]))


def write_panel_csv(panel: CensoredPanel, path, include_counts: bool = False) -> None:
    frame = panel.data
    columns = ["wave", "senders", "receiver", "y", "offset"]
    if include_counts and "count" in frame.columns:
        columns.append("count")
    columns += [c for c in panel.covariates if c in frame.columns]
    frame.to_csv(path, index=False, columns=columns)


def read_panel_csv(path) -> CensoredPanel:
    frame = pd.read_csv(path, dtype={"senders": str, "receiver": str})
    missing = set(CensoredPanel.BASE_COLUMNS) - set(frame.columns)
    if missing:
        raise InvalidInputError(f"{path}: panel missing columns {sorted(missing)}")
    covariates = [c for c in frame.columns if c not in CensoredPanel.BASE_COLUMNS + ("count",)]
    return CensoredPanel(frame, covariates=covariates)


def write_statistics_csv(panel: CensoredPanel, path, specs: list[str]) -> None:
    """Covariates-only export: wave, senders, receiver, one column per spec."""
    columns = ["wave", "senders", "receiver"] + specs
    panel.data.to_csv(path, index=False, columns=columns)


def read_model_spec(path) -> ModelSpec:
    with open(path, encoding="utf-8") as fh:
        return ModelSpec.from_dict(json.load(fh))


def write_model_spec(spec: ModelSpec, path) -> None:
    _write_json(spec.to_dict(), path)


def write_fit_result(result: FitResult, out_dir, stem: str = "fit") -> list[Path]:
    """FitResult JSON plus coefficient CSV plus one curve CSV per smooth."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    json_path = out_dir / f"{stem}.json"
    _write_json(result.to_dict(), json_path)
    written.append(json_path)

    coef_path = out_dir / f"{stem}_coefficients.csv"
    with open(coef_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "estimate", "std_error"])
        se = np.sqrt(np.maximum(np.diag(result.covariance), 0.0))
        for name, est, s in zip(result.column_names, result.coefficients, se):
            writer.writerow([name, repr(float(est)), repr(float(s))])
    written.append(coef_path)

    for term, info in result.design.smooth_info.items():
        grid = np.linspace(info.basis.x_min, info.basis.x_max, 100)
        curve = smooth_effect(result, term, grid)
        written.append(write_smooth_curve(curve, out_dir / f"{stem}_smooth_{term}.csv"))
    return written


def write_smooth_curve(curve: SmoothCurve, path) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "fit", "lower", "upper", "extrapolated"])
        for x, f, lo, hi, ex in zip(curve.grid, curve.fit, curve.lower, curve.upper, curve.extrapolated):
            writer.writerow([repr(float(x)), repr(float(f)), repr(float(lo)), repr(float(hi)), int(ex)])
    return Path(path)


def write_run_metadata(path, **payload) -> None:
    _write_json(payload, path)


def _write_json(payload: Mapping, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
