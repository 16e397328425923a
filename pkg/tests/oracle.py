"""Brute-force covariate evaluator used as an independent oracle.

Written directly from the statistic definitions with plain nested
loops over events, subsets and intermediaries. Deliberately shares no
code with rhem.statistics: events are (senders, receiver, time)
tuples, histories are plain lists.
"""

import itertools
from math import comb


def past(events, t):
    return [e for e in events if e[2] < t]


def hyperdeg(events, sub, r, t):
    sub = set(sub)
    return sum(1 for s_i, r_i, _ in past(events, t) if r_i == r and sub.issubset(s_i))


def sd(events, S, t):
    S = set(S)
    return sum(1 for s_i, _, _ in past(events, t) if S.issubset(s_i)) / len(S)


def rd(events, r, t):
    return sum(1 for _, r_i, _ in past(events, t) if r_i == r)


def rep(events, S, r, t):
    S = set(S)
    return sum(1 for s_i, r_i, _ in past(events, t) if set(s_i) == S and r_i == r) / len(S)


def sub_rep(events, S, r, t):
    S = sorted(set(S))
    total = 0.0
    for p in range(1, len(S) + 1):
        acc = 0
        for sub in itertools.combinations(S, p):
            acc += hyperdeg(events, sub, r, t)
        total += acc / comb(len(S), p)
    return total


def rec(events, S, r, t):
    S = set(S)
    return sum(1 for s_i, r_i, _ in past(events, t) if r in s_i and r_i in S) / len(S)


def _triad(events, S, r, t, universe, legs, include_senders=True):
    S = sorted(set(S))
    total = 0
    for s in S:
        for a in universe:
            if a == s or a == r:
                continue
            if not include_senders and a in S:
                continue
            total += min(legs(events, S, s, r, a, t))
    return total / len(S)


def tc(events, S, r, t, universe):
    return _triad(
        events, S, r, t, universe,
        lambda ev, S_, s, r_, a, t_: (hyperdeg(ev, S_, a, t_), hyperdeg(ev, [a], r_, t_)),
    )


def cc(events, S, r, t, universe):
    return _triad(
        events, S, r, t, universe,
        lambda ev, S_, s, r_, a, t_: (hyperdeg(ev, [r_], a, t_), hyperdeg(ev, [a], s, t_)),
    )


def sb(events, S, r, t, universe):
    return _triad(
        events, S, r, t, universe,
        lambda ev, S_, s, r_, a, t_: (hyperdeg(ev, [a], s, t_), hyperdeg(ev, [a], r_, t_)),
    )


def rb(events, S, r, t, universe):
    return _triad(
        events, S, r, t, universe,
        lambda ev, S_, s, r_, a, t_: (hyperdeg(ev, S_, a, t_), hyperdeg(ev, [r_], a, t_)),
    )


ENDOGENOUS = {
    "sd": lambda ev, S, r, t, u: sd(ev, S, t),
    "rd": lambda ev, S, r, t, u: rd(ev, r, t),
    "rep": lambda ev, S, r, t, u: rep(ev, S, r, t),
    "sub_rep": lambda ev, S, r, t, u: sub_rep(ev, S, r, t),
    "rec": lambda ev, S, r, t, u: rec(ev, S, r, t),
    "tc": tc,
    "cc": cc,
    "sb": sb,
    "rb": rb,
}


def random_history(rng, n_actors=8, n_events=30, max_senders=4, horizon=10.0):
    """Random raw history: list of (frozenset senders, receiver, time)."""
    actors = [f"a{i}" for i in range(n_actors)]
    times = sorted(rng.uniform(0.0, horizon, size=n_events))
    events = []
    for t in times:
        k = int(rng.integers(1, max_senders + 1))
        chosen = list(rng.choice(actors, size=k + 1, replace=False))
        events.append((frozenset(chosen[:-1]), chosen[-1], float(t)))
    return actors, events
