import random

import pytest

from genutil import gen_hierarchy, reachable
from mfgsim.errors import (
    CycleIntroduced,
    DuplicateSortSet,
    InvalidIdentifier,
    UnknownSort,
    UnknownSortSet,
)
from mfgsim.sorts import Alphabet, SortSystem


def mfg_system():
    system = SortSystem().declare_sort_set("mfg")
    for s in ("RouteElement", "Track", "StraightTrack", "Curve", "Speed"):
        system = system.declare_sort("mfg", s)
    system = system.declare_subsort("mfg", "Track", "RouteElement")
    system = system.declare_subsort("mfg", "StraightTrack", "Track")
    return system


def test_declare_sort_set_from_empty():
    system = SortSystem().declare_sort_set("mfg")
    assert set(system.sort_sets) == {"mfg"}
    assert system.sort_set("mfg").sorts == frozenset()


def test_declare_sort_set_duplicate_rejected():
    system = SortSystem().declare_sort_set("mfg")
    with pytest.raises(DuplicateSortSet):
        system.declare_sort_set("mfg")


def test_two_view_sort_sets_are_independent():
    system = SortSystem().declare_sort_set("cost_view").declare_sort_set("logistics_view")
    system = system.declare_sort("cost_view", "CostCarrier")
    system = system.declare_sort("logistics_view", "CostCarrier")
    # same name in both sets, but the orders never connect
    system = system.declare_sort("cost_view", "Money")
    system = system.declare_subsort("cost_view", "CostCarrier", "Money")
    assert system.is_subsort("cost_view", "CostCarrier", "Money")
    with pytest.raises(UnknownSort):
        system.is_subsort("logistics_view", "CostCarrier", "Money")


def test_subsort_chain_held():
    system = mfg_system()
    ss = system.sort_set("mfg")
    assert ("StraightTrack", "Track") in ss.subsort_edges
    assert ("Track", "RouteElement") in ss.subsort_edges


def test_subsort_cycle_rejected():
    system = SortSystem().declare_sort_set("s")
    system = system.declare_sort("s", "X").declare_sort("s", "Y")
    system = system.declare_subsort("s", "X", "Y")
    with pytest.raises(CycleIntroduced):
        system.declare_subsort("s", "Y", "X")


def test_self_edge_rejected_reflexivity_in_query():
    system = SortSystem().declare_sort_set("s").declare_sort("s", "T")
    with pytest.raises(CycleIntroduced):
        system.declare_subsort("s", "T", "T")
    assert system.is_subsort("s", "T", "T")


def test_is_subsort_transitive():
    system = mfg_system()
    assert system.is_subsort("mfg", "StraightTrack", "RouteElement")


def test_is_subsort_unknown_sorts():
    system = mfg_system()
    with pytest.raises(UnknownSort):
        system.is_subsort("mfg", "StraightTrack", "Nonexistent")
    with pytest.raises(UnknownSortSet):
        system.is_subsort("other", "Track", "Track")


def test_unknown_sort_in_subsort_declaration():
    system = SortSystem().declare_sort_set("s").declare_sort("s", "A")
    with pytest.raises(UnknownSort):
        system.declare_subsort("s", "A", "B")


def test_identifier_rules():
    system = SortSystem()
    with pytest.raises(InvalidIdentifier):
        system.declare_sort_set("9bad")
    with pytest.raises(InvalidIdentifier):
        system.declare_sort_set("with space")
    system = system.declare_sort_set("ok_name-1")
    assert "ok_name-1" in system.sort_sets


def test_alphabet_single_and_multi_sort():
    system = mfg_system().declare_sort_set("cost_view")
    system = system.declare_sort("cost_view", "CostCarrier")
    alphabet = Alphabet().assign("agv_speed", {("mfg", "Speed")}, system)
    assert alphabet.sorts_of("agv_speed") == {("mfg", "Speed")}
    alphabet = alphabet.assign(
        "agv1", {("mfg", "Track"), ("cost_view", "CostCarrier")}, system
    )
    assert len(alphabet.sorts_of("agv1")) == 2


def test_alphabet_unknown_sort():
    system = mfg_system()
    with pytest.raises(UnknownSort):
        Alphabet().assign("x", {("mfg", "Nope")}, system)


def test_alphabet_merge_is_monotone():
    system = mfg_system()
    alphabet = Alphabet().assign("x", {("mfg", "Speed")}, system)
    more = alphabet.assign("x", {("mfg", "Track")}, system)
    assert alphabet.sorts_of("x") <= more.sorts_of("x")


def test_rank_sort_sets():
    system = SortSystem()
    for name in ("device", "facility", "site"):
        system = system.declare_sort_set(name)
    system = system.rank_sort_sets("device", "facility")
    system = system.rank_sort_sets("facility", "site")
    assert system.is_ranked_below("device", "facility")
    assert system.is_ranked_below("device", "site")  # transitive
    with pytest.raises(CycleIntroduced):
        system.rank_sort_sets("site", "device")
    with pytest.raises(UnknownSortSet):
        system.rank_sort_sets("device", "nowhere")


def test_randomized_order_laws_against_bfs_oracle():
    rng = random.Random(1234)
    for _ in range(50):
        system, names, accepted, _rejected = gen_hierarchy(rng)
        for t in names:
            up = reachable(accepted, t)
            for t1 in names:
                assert system.is_subsort("gen", t, t1) == (t1 in up)
        # antisymmetry: distinct mutually-reachable sorts cannot exist
        for t in names:
            for t1 in names:
                if t != t1 and system.is_subsort("gen", t, t1):
                    assert not system.is_subsort("gen", t1, t)
