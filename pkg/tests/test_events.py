import itertools
from math import comb

import pytest

from rhem import (
    Actor,
    EventHistory,
    Hyperevent,
    InvalidInputError,
    RiskSet,
    enumerate_risk_set,
    validate_history,
)


def actors(n, **kwargs):
    return tuple(Actor(id=f"a{i}", **kwargs) for i in range(n))


class TestEnumerateRiskSet:
    def test_eight_actors_max_three_gives_504(self):
        rs = enumerate_risk_set(actors(8), 3)
        assert len(rs) == 504

    def test_two_actors_max_one(self):
        rs = enumerate_risk_set(actors(2), 1)
        assert rs.candidates == ((("a0",), "a1"), (("a1",), "a0"))

    def test_single_actor_no_receiver(self):
        assert len(enumerate_risk_set(actors(1), 1)) == 0

    def test_empty_universe_rejected(self):
        with pytest.raises(InvalidInputError):
            enumerate_risk_set((), 2)

    def test_bad_max_size_rejected(self):
        with pytest.raises(InvalidInputError):
            enumerate_risk_set(actors(3), 0)

    @pytest.mark.parametrize("n", range(1, 11))
    @pytest.mark.parametrize("m", (1, 2, 3))
    def test_count_formula_all_small_universes(self, n, m):
        rs = enumerate_risk_set(actors(n), m)
        expected = sum(comb(n, p) * (n - p) for p in range(1, m + 1))
        assert len(rs) == expected

    def test_matches_exhaustive_enumeration(self):
        ids = [a.id for a in actors(5)]
        rs = enumerate_risk_set(actors(5), 3)
        exhaustive = set()
        for p in (1, 2, 3):
            for senders in itertools.combinations(ids, p):
                for r in ids:
                    if r not in senders:
                        exhaustive.add((senders, r))
        assert set(rs.candidates) == exhaustive

    def test_lexicographic_order(self):
        rs = enumerate_risk_set(actors(4), 2)
        assert list(rs.candidates) == sorted(rs.candidates)

    def test_scope_keeps_candidates_within_class(self):
        universe = actors(6)
        scope = {f"a{i}": ("c1" if i < 3 else "c2") for i in range(6)}
        rs = enumerate_risk_set(universe, 2, scope=scope)
        for senders, receiver in rs.candidates:
            labels = {scope[s] for s in senders} | {scope[receiver]}
            assert len(labels) == 1
        expected_per_class = sum(comb(3, p) * (3 - p) for p in (1, 2))
        assert len(rs) == 2 * expected_per_class


class TestRiskSetType:
    def test_duplicates_rejected(self):
        with pytest.raises(InvalidInputError):
            RiskSet(((("a",), "b"), (("a",), "b")))

    def test_receiver_in_senders_rejected(self):
        with pytest.raises(InvalidInputError):
            RiskSet(((("a", "b"), "a"),))


class TestValidateHistory:
    def test_well_formed(self):
        h = EventHistory(
            (Hyperevent(frozenset("ab"), "c", 0.0), Hyperevent(frozenset("a"), "b", 1.0)),
            actors_from("abc"),
        )
        assert validate_history(h) == []

    def test_receiver_in_senders(self):
        h = EventHistory((Hyperevent(frozenset("ab"), "a", 0.0),), actors_from("ab"))
        violations = validate_history(h)
        assert [v.kind for v in violations] == ["receiver-in-senders"]

    def test_decreasing_times(self):
        h = EventHistory(
            (Hyperevent(frozenset("a"), "b", 2.0), Hyperevent(frozenset("a"), "b", 1.0)),
            actors_from("ab"),
        )
        violations = validate_history(h)
        assert [v.kind for v in violations] == ["time-order"]

    def test_unknown_actor(self):
        h = EventHistory((Hyperevent(frozenset("a"), "z", 0.0),), actors_from("ab"))
        assert [v.kind for v in validate_history(h)] == ["unknown-actor"]


def actors_from(ids):
    return tuple(Actor(id=x) for x in ids)


class TestActor:
    def test_age_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            Actor(id="a", age=0.0)

    def test_unknown_gender_rejected(self):
        with pytest.raises(InvalidInputError):
            Actor(id="a", gender="unknown")


def test_history_truncation():
    h = EventHistory(
        (Hyperevent(frozenset("a"), "b", 1.0), Hyperevent(frozenset("a"), "b", 2.0)),
        actors_from("ab"),
    )
    assert len(h.truncated(1.0)) == 1
    assert len(h.truncated(2.0)) == 2
