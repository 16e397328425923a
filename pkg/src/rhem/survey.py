"""Turn survey nominations into sender groups and hyperevents.

Friendship nominations carry scores in {-2, -1, 0, 1, 2}; an undirected
"mutual close friends" edge exists iff both directions score 2. Sender
groups are the maximal cliques of that graph (isolated actors count as
size-1 groups). Bad-talk nominations then pin each group, or the
largest nominating subgroup, to a target.
"""

from __future__ import annotations

import logging
from typing import Iterable, Mapping

import networkx as nx

from .censoring import WaveGrid
from .errors import InvalidInputError
from .events import Hyperevent

log = logging.getLogger(__name__)

MUTUAL_SCORE = 2
VALID_SCORES = (-2, -1, 0, 1, 2)


def sender_groups_from_friendship(
    nominations: Mapping[tuple[str, str], int],
    actors: Iterable[str] | None = None,
) -> list[frozenset[str]]:
    """Maximal cliques of the mutual close-friendship graph.

    ``nominations`` maps ordered (ego, alter) pairs to scores. Actors
    that appear in no mutual edge are returned as singleton groups;
    pass ``actors`` to include ids that never nominated anyone.
    """
    graph = nx.Graph()
    if actors is not None:
        graph.add_nodes_from(str(a) for a in actors)
    for (ego, alter), score in nominations.items():
        if score not in VALID_SCORES:
            raise InvalidInputError(f"score {score!r} for ({ego!r}, {alter!r}) not in {VALID_SCORES}")
        graph.add_node(ego)
        graph.add_node(alter)
        if score == MUTUAL_SCORE and nominations.get((alter, ego)) == MUTUAL_SCORE:
            graph.add_edge(ego, alter)
    groups = [frozenset(c) for c in nx.find_cliques(graph)]
    return sorted(groups, key=lambda g: tuple(sorted(g)))


def hyperevents_from_nominations(
    bad_talk: Mapping[str, set[str]] | Iterable[tuple[str, str]],
    groups: Iterable[frozenset[str]],
    wave: int,
    grid: WaveGrid | None = None,
    mode: str = "nominating_subgroup",
) -> list[Hyperevent]:
    """One hyperevent per inclusion-maximal group gossiping about a target.

    ``bad_talk`` is either a mapping ego -> set of nominated targets or
    an iterable of (ego, target) pairs. With the default
    ``mode="nominating_subgroup"``, each friendship group contributes
    the subset of its members that nominated the target, and
    inclusion-maximal distinct subsets are emitted. With
    ``mode="full_group"`` only groups whose every member nominated the
    target are considered.

    Event times sit at the wave's right endpoint: ``grid.boundaries[wave]``
    when a grid is supplied, else ``float(wave)``. Self-nominations are
    rejected with a logged diagnostic.
    """
    if mode not in ("nominating_subgroup", "full_group"):
        raise InvalidInputError(f"unknown mode {mode!r}")
    if isinstance(bad_talk, Mapping):
        pairs = [(ego, tgt) for ego, targets in bad_talk.items() for tgt in targets]
    else:
        pairs = list(bad_talk)

    nominators: dict[str, set[str]] = {}
    for ego, target in pairs:
        if ego == target:
            log.warning("rejected self-nomination by %r in wave %d", ego, wave)
            continue
        nominators.setdefault(target, set()).add(ego)

    if grid is not None:
        if not 1 <= wave <= grid.num_waves:
            raise InvalidInputError(f"wave {wave} outside grid with {grid.num_waves} waves")
        time = grid.boundaries[wave]
    else:
        time = float(wave)

    events: list[Hyperevent] = []
    group_list = [frozenset(g) for g in groups]
    for target in sorted(nominators):
        who = nominators[target]
        if mode == "full_group":
            active = [g for g in group_list if target not in g and g <= who]
        else:
            active = []
            for g in group_list:
                sub = (g - {target}) & who
                if sub:
                    active.append(frozenset(sub))
        maximal = _inclusion_maximal(active)
        for senders in maximal:
            events.append(Hyperevent(senders, target, time))
    events.sort(key=lambda e: (e.time, e.sender_tuple, e.receiver))
    return events


def _inclusion_maximal(sets: list[frozenset[str]]) -> list[frozenset[str]]:
    distinct = sorted(set(sets), key=lambda s: (-len(s), tuple(sorted(s))))
    kept: list[frozenset[str]] = []
    for s in distinct:
        if not any(s < k for k in kept):
            kept.append(s)
    return sorted(kept, key=lambda s: tuple(sorted(s)))
