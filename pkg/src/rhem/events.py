"""Core event types: actors, hyperevents, histories and risk sets.

A hyperevent is a timed interaction from a nonempty set of senders to a
single receiver. All types are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import InvalidInputError

GENDERS = ("female", "male")

Candidate = tuple[tuple[str, ...], str]


@dataclass(frozen=True)
class Actor:
    """One individual, with optional attributes used by exogenous covariates."""

    id: str
    gender: str | None = None
    age: float | None = None
    class_id: str | None = None

    def __post_init__(self):
        if self.gender is not None and self.gender not in GENDERS:
            raise InvalidInputError(f"unknown gender {self.gender!r} for actor {self.id!r}")
        if self.age is not None and not self.age > 0:
            raise InvalidInputError(f"age must be positive, got {self.age!r} for actor {self.id!r}")


@dataclass(frozen=True)
class Hyperevent:
    """A sender group talking about one receiver at a point in time.

    Construction only coerces types; invariant checks live in
    validate_history so malformed input files can be reported row by
    row instead of blowing up on the first bad record.
    """

    senders: frozenset[str]
    receiver: str
    time: float

    def __post_init__(self):
        object.__setattr__(self, "senders", frozenset(self.senders))
        object.__setattr__(self, "time", float(self.time))

    @property
    def sender_tuple(self) -> tuple[str, ...]:
        return tuple(sorted(self.senders))


@dataclass(frozen=True)
class Violation:
    """One structural problem found by validate_history."""

    kind: str
    index: int
    message: str


@dataclass(frozen=True)
class EventHistory:
    """Time-ordered hyperevents over a fixed actor universe."""

    events: tuple[Hyperevent, ...]
    universe: tuple[Actor, ...]
    actors_by_id: Mapping[str, Actor] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "universe", tuple(self.universe))
        object.__setattr__(self, "actors_by_id", {a.id: a for a in self.universe})

    def __len__(self) -> int:
        return len(self.events)

    def actor(self, actor_id: str) -> Actor:
        try:
            return self.actors_by_id[actor_id]
        except KeyError:
            raise InvalidInputError(f"actor {actor_id!r} not in universe") from None

    def truncated(self, t: float) -> "EventHistory":
        """History containing only events with time <= t."""
        return EventHistory(tuple(e for e in self.events if e.time <= t), self.universe)


@dataclass(frozen=True)
class RiskSet:
    """Candidate (sender set, receiver) pairs eligible during one wave.

    Candidates are ordered lexicographically by (sorted sender ids,
    receiver id) so row order is reproducible across runs.
    """

    candidates: tuple[Candidate, ...]
    wave_index: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "candidates", tuple((tuple(sorted(s)), r) for s, r in self.candidates)
        )
        seen = set()
        for senders, receiver in self.candidates:
            if receiver in senders or not senders:
                raise InvalidInputError(f"malformed candidate ({senders}, {receiver})")
            if (senders, receiver) in seen:
                raise InvalidInputError(f"duplicate candidate ({senders}, {receiver})")
            seen.add((senders, receiver))

    def __len__(self) -> int:
        return len(self.candidates)


def enumerate_risk_set(
    universe: Iterable[Actor | str],
    max_sender_size: int,
    scope: Mapping[str, str] | None = None,
    wave_index: int = 0,
) -> RiskSet:
    """All (S, r) with 1 <= |S| <= max_sender_size and r not in S.

    If ``scope`` maps actor ids to partition labels (e.g. class ids),
    every candidate is required to lie entirely within one label.
    """
    if max_sender_size < 1:
        raise InvalidInputError(f"max_sender_size must be >= 1, got {max_sender_size}")
    ids = sorted(a.id if isinstance(a, Actor) else str(a) for a in universe)
    if not ids:
        raise InvalidInputError("universe is empty")
    if len(set(ids)) != len(ids):
        raise InvalidInputError("duplicate actor ids in universe")

    if scope is None:
        groups = [ids]
    else:
        by_label: dict[str, list[str]] = {}
        for i in ids:
            if i not in scope:
                raise InvalidInputError(f"actor {i!r} missing from scope partition")
            by_label.setdefault(scope[i], []).append(i)
        groups = list(by_label.values())

    candidates: list[Candidate] = []
    for members in groups:
        for p in range(1, max_sender_size + 1):
            for senders in itertools.combinations(members, p):
                sset = set(senders)
                for receiver in members:
                    if receiver not in sset:
                        candidates.append((senders, receiver))
    candidates.sort()
    return RiskSet(tuple(candidates), wave_index=wave_index)


def validate_history(history: EventHistory) -> list[Violation]:
    """Check all type invariants; returns one Violation per breach."""
    violations: list[Violation] = []
    known = set(history.actors_by_id)
    ids = [a.id for a in history.universe]
    if len(set(ids)) != len(ids):
        violations.append(Violation("duplicate-actor", -1, "duplicate actor ids in universe"))
    prev_time = None
    for i, event in enumerate(history.events):
        if not event.senders:
            violations.append(Violation("empty-senders", i, "event has no senders"))
        if event.receiver in event.senders:
            violations.append(
                Violation("receiver-in-senders", i, f"receiver {event.receiver!r} is also a sender")
            )
        if event.time < 0:
            violations.append(Violation("negative-time", i, f"event time {event.time} is negative"))
        missing = (event.senders | {event.receiver}) - known
        if missing:
            violations.append(
                Violation("unknown-actor", i, f"actors {sorted(missing)} not in universe")
            )
        if prev_time is not None and event.time < prev_time:
            violations.append(
                Violation("time-order", i, f"time {event.time} decreases from {prev_time}")
            )
        prev_time = event.time
    return violations
