"""Endogenous and exogenous covariates of candidate hyperevents.

All endogenous statistics follow the strict-past convention: the value
at time t counts only events with time strictly below t. The building
block is the hyperdegree of a sender subset S' with respect to a
receiver r,

    hyper_degree(S', r, t) = #{i : t_i < t, S' subset of S_i, r = r_i}.

Per-statistic functions scan the event list directly and are the
reference implementations; HistoryAccumulator maintains incremental
counters so batch panel construction avoids rescanning the history for
every (candidate, time) pair.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError
from .events import Actor, EventHistory, Hyperevent, RiskSet

ENDOGENOUS_NAMES = ("sd", "rd", "rep", "sub_rep", "rec", "tc", "cc", "sb", "rb")
EXOGENOUS_NAMES = ("girl_alter", "girl_ego", "avg_age")
STATISTIC_NAMES = ENDOGENOUS_NAMES + EXOGENOUS_NAMES

TRANSFORMS = ("identity", "log1p")

# Full subset enumeration is exponential in |S|; survey cliques top out
# at size 6, so that is the default cap before falling back to scans.
DEFAULT_SUBSET_CAP = 6


@dataclass(frozen=True)
class StatisticSpec:
    """One requested covariate column, optionally log1p-transformed."""

    name: str
    transform: str = "identity"

    def __post_init__(self):
        if self.name not in STATISTIC_NAMES:
            raise InvalidInputError(f"unknown statistic {self.name!r}")
        if self.transform not in TRANSFORMS:
            raise InvalidInputError(f"unknown transform {self.transform!r}")

    @property
    def column(self) -> str:
        return self.name if self.transform == "identity" else f"{self.name}_{self.transform}"

    def apply(self, value: float) -> float:
        if self.transform == "log1p":
            if value < 0:
                raise InvalidInputError(f"log1p transform needs nonnegative values, got {value}")
            return math.log1p(value)
        return value

    @classmethod
    def parse(cls, text: str) -> "StatisticSpec":
        """Parse "rd" or "rd_log1p" style column names."""
        if text.endswith("_log1p"):
            return cls(text[: -len("_log1p")], "log1p")
        return cls(text)


def _past_events(history: EventHistory, t: float) -> Iterable[Hyperevent]:
    for e in history.events:
        if e.time < t:
            yield e


def hyper_degree(history: EventHistory, sub_senders: Iterable[str], receiver: str, t: float) -> int:
    """Past events whose sender set contains sub_senders and targeted receiver."""
    if t < 0:
        raise InvalidInputError(f"time must be >= 0, got {t}")
    sub = frozenset(sub_senders)
    return sum(1 for e in _past_events(history, t) if e.receiver == receiver and sub <= e.senders)


def sender_degree(history: EventHistory, senders: Iterable[str], t: float) -> float:
    """Past events whose sender set contains S, divided by |S|."""
    s = frozenset(senders)
    _require_nonempty(s)
    return sum(1 for e in _past_events(history, t) if s <= e.senders) / len(s)


def receiver_degree(history: EventHistory, receiver: str, t: float) -> int:
    """Past events targeting the receiver."""
    return sum(1 for e in _past_events(history, t) if e.receiver == receiver)


def repetition(history: EventHistory, senders: Iterable[str], receiver: str, t: float) -> float:
    """Exact past occurrences of (S, r), divided by |S|."""
    s = frozenset(senders)
    _require_nonempty(s)
    n = sum(1 for e in _past_events(history, t) if e.receiver == receiver and e.senders == s)
    return n / len(s)


def subset_repetition(
    history: EventHistory,
    senders: Iterable[str],
    receiver: str,
    t: float,
    exact_match: bool = False,
) -> float:
    """Size-averaged hyperdegrees of all sender subsets with respect to r.

    For each subset size p the hyperdegree is averaged over the
    C(|S|, p) subsets of that size, then the averages are summed over
    p = 1..|S|. With ``exact_match=True`` the hyperdegree counts only
    events whose sender set equals the subset exactly, a strictly
    narrower variant kept for comparison purposes.
    """
    s = tuple(sorted(frozenset(senders)))
    _require_nonempty(s)
    past = [e for e in _past_events(history, t) if e.receiver == receiver]
    total = 0.0
    for p in range(1, len(s) + 1):
        count = 0
        for sub in itertools.combinations(s, p):
            fsub = frozenset(sub)
            if exact_match:
                count += sum(1 for e in past if e.senders == fsub)
            else:
                count += sum(1 for e in past if fsub <= e.senders)
        total += count / math.comb(len(s), p)
    return total


def reciprocity(history: EventHistory, senders: Iterable[str], receiver: str, t: float) -> float:
    """Past events where r was a sender and some current sender the target."""
    s = frozenset(senders)
    _require_nonempty(s)
    n = sum(1 for e in _past_events(history, t) if receiver in e.senders and e.receiver in s)
    return n / len(s)


def _triadic(
    history: EventHistory,
    senders: Iterable[str],
    receiver: str,
    t: float,
    universe: Iterable[str] | None,
    leg1,
    leg2,
    exclude_senders: bool = False,
) -> float:
    s = tuple(sorted(frozenset(senders)))
    _require_nonempty(s)
    if universe is None:
        others = [a.id for a in history.universe]
    else:
        others = [a.id if isinstance(a, Actor) else str(a) for a in universe]
    total = 0
    for sender in s:
        for a in others:
            if a == sender or a == receiver:
                continue
            if exclude_senders and a in s:
                continue
            total += min(leg1(sender, a), leg2(sender, a))
    return total / len(s)


def transitive_closure(
    history: EventHistory,
    senders: Iterable[str],
    receiver: str,
    t: float,
    universe: Iterable[str] | None = None,
    exclude_senders: bool = False,
) -> float:
    """S reached intermediaries that in turn gossiped about r."""
    s = frozenset(senders)
    return _triadic(
        history, senders, receiver, t, universe,
        lambda sender, a: hyper_degree(history, s, a, t),
        lambda sender, a: hyper_degree(history, {a}, receiver, t),
        exclude_senders,
    )


def cyclic_closure(
    history: EventHistory,
    senders: Iterable[str],
    receiver: str,
    t: float,
    universe: Iterable[str] | None = None,
    exclude_senders: bool = False,
) -> float:
    """r gossiped about intermediaries that gossiped about senders."""
    return _triadic(
        history, senders, receiver, t, universe,
        lambda sender, a: hyper_degree(history, {receiver}, a, t),
        lambda sender, a: hyper_degree(history, {a}, sender, t),
        exclude_senders,
    )


def sender_balance(
    history: EventHistory,
    senders: Iterable[str],
    receiver: str,
    t: float,
    universe: Iterable[str] | None = None,
    exclude_senders: bool = False,
) -> float:
    """Third parties gossiping about both a sender and the receiver."""
    return _triadic(
        history, senders, receiver, t, universe,
        lambda sender, a: hyper_degree(history, {a}, sender, t),
        lambda sender, a: hyper_degree(history, {a}, receiver, t),
        exclude_senders,
    )


def receiver_balance(
    history: EventHistory,
    senders: Iterable[str],
    receiver: str,
    t: float,
    universe: Iterable[str] | None = None,
    exclude_senders: bool = False,
) -> float:
    """S and r directing gossip at the same third parties."""
    s = frozenset(senders)
    return _triadic(
        history, senders, receiver, t, universe,
        lambda sender, a: hyper_degree(history, s, a, t),
        lambda sender, a: hyper_degree(history, {receiver}, a, t),
        exclude_senders,
    )


def girl_alter(receiver: Actor) -> float:
    """1 if the receiver is female."""
    if receiver.gender is None:
        raise InvalidInputError(f"actor {receiver.id!r} has no gender attribute")
    return 1.0 if receiver.gender == "female" else 0.0


def girl_ego(senders: Sequence[Actor]) -> float:
    """Proportion of female senders."""
    if not senders:
        raise InvalidInputError("sender set is empty")
    vals = []
    for a in senders:
        if a.gender is None:
            raise InvalidInputError(f"actor {a.id!r} has no gender attribute")
        vals.append(1.0 if a.gender == "female" else 0.0)
    return sum(vals) / len(vals)


def avg_age(senders: Sequence[Actor], receiver: Actor) -> float:
    """Mean age over all senders plus the receiver."""
    actors = list(senders) + [receiver]
    if not senders:
        raise InvalidInputError("sender set is empty")
    ages = []
    for a in actors:
        if a.age is None:
            raise InvalidInputError(f"actor {a.id!r} has no age attribute")
        ages.append(a.age)
    return sum(ages) / len(ages)


def _require_nonempty(s) -> None:
    if not s:
        raise InvalidInputError("sender set is empty")


class HistoryAccumulator:
    """Incremental counters over events pushed in time order.

    Single-writer: push events in nondecreasing time, then query any
    statistic at the current frontier. Subset caches cover events whose
    sender set has at most ``subset_cap`` members; larger events fall
    back to a linear scan, so results are exact either way.
    """

    def __init__(
        self,
        universe: Sequence[Actor],
        subset_cap: int = DEFAULT_SUBSET_CAP,
        exclude_senders: bool = False,
    ):
        self.universe = tuple(universe)
        self.actor_ids = [a.id for a in self.universe]
        self.actors_by_id = {a.id: a for a in self.universe}
        self.subset_cap = subset_cap
        self.exclude_senders = exclude_senders
        self.n_events = 0
        self._receiver_count: Counter = Counter()
        self._exact_count: Counter = Counter()
        self._subset_sender_count: Counter = Counter()
        self._subset_receiver_count: Counter = Counter()
        self._large_events: list[Hyperevent] = []

    def push(self, event: Hyperevent) -> None:
        self.n_events += 1
        self._receiver_count[event.receiver] += 1
        self._exact_count[(event.senders, event.receiver)] += 1
        if len(event.senders) <= self.subset_cap:
            members = sorted(event.senders)
            for p in range(1, len(members) + 1):
                for sub in itertools.combinations(members, p):
                    fsub = frozenset(sub)
                    self._subset_sender_count[fsub] += 1
                    self._subset_receiver_count[(fsub, event.receiver)] += 1
        else:
            self._large_events.append(event)

    def hyper_degree(self, sub_senders: frozenset, receiver: str) -> int:
        n = self._subset_receiver_count.get((sub_senders, receiver), 0)
        for e in self._large_events:
            if e.receiver == receiver and sub_senders <= e.senders:
                n += 1
        return n

    def _containment_count(self, senders: frozenset) -> int:
        n = self._subset_sender_count.get(senders, 0)
        for e in self._large_events:
            if senders <= e.senders:
                n += 1
        return n

    def value(self, name: str, senders: tuple, receiver: str) -> float:
        """Evaluate one statistic for a candidate at the current frontier."""
        s = frozenset(senders)
        if name == "sd":
            return self._containment_count(s) / len(s)
        if name == "rd":
            return float(self._receiver_count.get(receiver, 0))
        if name == "rep":
            return self._exact_count.get((s, receiver), 0) / len(s)
        if name == "sub_rep":
            total = 0.0
            members = sorted(s)
            for p in range(1, len(members) + 1):
                count = sum(
                    self.hyper_degree(frozenset(sub), receiver)
                    for sub in itertools.combinations(members, p)
                )
                total += count / math.comb(len(members), p)
            return total
        if name == "rec":
            # r_i lands on at most one member of S, so summing the
            # single-sender hyperdegrees over S counts each event once.
            return sum(self.hyper_degree(frozenset((receiver,)), m) for m in s) / len(s)
        if name in ("tc", "cc", "sb", "rb"):
            return self._triadic(name, s, receiver)
        if name == "girl_alter":
            return girl_alter(self.actors_by_id[receiver])
        if name == "girl_ego":
            return girl_ego([self.actors_by_id[m] for m in senders])
        if name == "avg_age":
            return avg_age([self.actors_by_id[m] for m in senders], self.actors_by_id[receiver])
        raise InvalidInputError(f"unknown statistic {name!r}")

    def _triadic(self, name: str, s: frozenset, receiver: str) -> float:
        total = 0
        for sender in s:
            for a in self.actor_ids:
                if a == sender or a == receiver:
                    continue
                if self.exclude_senders and a in s:
                    continue
                if name == "tc":
                    legs = (self.hyper_degree(s, a), self.hyper_degree(frozenset((a,)), receiver))
                elif name == "cc":
                    legs = (
                        self.hyper_degree(frozenset((receiver,)), a),
                        self.hyper_degree(frozenset((a,)), sender),
                    )
                elif name == "sb":
                    legs = (
                        self.hyper_degree(frozenset((a,)), sender),
                        self.hyper_degree(frozenset((a,)), receiver),
                    )
                else:
                    legs = (self.hyper_degree(s, a), self.hyper_degree(frozenset((receiver,)), a))
                total += min(legs)
        return total / len(s)


def compute_panel_statistics(
    history: EventHistory,
    risk_set: RiskSet,
    eval_times: Sequence[float],
    specs: Sequence[StatisticSpec],
    subset_cap: int = DEFAULT_SUBSET_CAP,
    exclude_senders: bool = False,
) -> np.ndarray:
    """Batch statistics: array of shape (candidates, times, specs).

    Equal to calling each statistic separately at each (candidate,
    time) pair, with transforms applied. ``eval_times`` must be sorted
    ascending; each evaluation uses the strict past of its time.
    """
    times = list(eval_times)
    if any(b < a for a, b in zip(times, times[1:])):
        raise InvalidInputError("eval_times must be sorted ascending")
    specs = [s if isinstance(s, StatisticSpec) else StatisticSpec.parse(str(s)) for s in specs]
    acc = HistoryAccumulator(history.universe, subset_cap, exclude_senders)
    out = np.zeros((len(risk_set.candidates), len(times), len(specs)))
    event_iter = iter(history.events)
    pending = next(event_iter, None)
    for j, t in enumerate(times):
        while pending is not None and pending.time < t:
            acc.push(pending)
            pending = next(event_iter, None)
        for i, (senders, receiver) in enumerate(risk_set.candidates):
            for k, spec in enumerate(specs):
                out[i, j, k] = spec.apply(acc.value(spec.name, senders, receiver))
    return out
