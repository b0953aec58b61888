import random

import pytest

from genutil import fca_oracle, gen_model
from mfgsim.entities import (
    Attribute,
    DataParameter,
    EntitySpec,
    InformationModel,
    check_wellformed,
)
from mfgsim.errors import ModelNotWellFormed, UnknownConcept
from mfgsim.lattice import (
    build_conceptual_lattice,
    lattice_from_incidence,
    lattice_subsumes,
    model_incidence,
)
from mfgsim.pilot import build_pilot_workspace
from mfgsim.sorts import SortSystem


def _lattice_as_sets(lattice):
    concepts = {(c.extent, c.intent) for c in lattice.concepts}
    covers = {
        (lattice.concepts[sub].extent, lattice.concepts[sup].extent)
        for sub, sup in lattice.hasse_edges
    }
    return concepts, covers


def two_entity_model():
    system = SortSystem().declare_sort_set("s")
    for s in ("A", "B", "C"):
        system = system.declare_sort("s", s)
    model = InformationModel("m", "s", system)
    model = model.define_entity(EntitySpec("E1", "object", ("A",), (
        Attribute("shared", "A", DataParameter(1)),
        Attribute("only1", "B", DataParameter(2)),
    )))
    model = model.define_entity(EntitySpec("E2", "object", ("A",), (
        Attribute("shared", "A", DataParameter(3)),
        Attribute("only2", "C", DataParameter(4)),
    )))
    return model


def test_two_entities_one_shared_attribute_sort():
    # expected values computed with the brute-force oracle
    model = two_entity_model()
    expected_concepts, expected_covers = fca_oracle(model_incidence(model))
    lattice = build_conceptual_lattice(model)
    concepts, covers = _lattice_as_sets(lattice)
    assert concepts == expected_concepts
    assert covers == expected_covers
    assert len(lattice.concepts) <= 4
    shared = frozenset({("shared", "A")})
    assert any(c.intent == shared and c.extent == frozenset({"E1", "E2"})
               for c in lattice.concepts)


def test_single_entity_single_concept_chain():
    system = SortSystem().declare_sort_set("s").declare_sort("s", "A")
    model = InformationModel("m", "s", system)
    model = model.define_entity(EntitySpec("E", "object", ("A",), (
        Attribute("a0", "A", DataParameter(0)),
        Attribute("a1", "A", DataParameter(1)),
        Attribute("a2", "A", DataParameter(2)),
    )))
    lattice = build_conceptual_lattice(model)
    assert len(lattice.concepts) == 1
    assert lattice.top == lattice.bottom
    assert lattice.concepts[0].extent == frozenset({"E"})


def test_empty_model_single_degenerate_concept():
    system = SortSystem().declare_sort_set("s")
    lattice = build_conceptual_lattice(InformationModel("m", "s", system))
    assert len(lattice.concepts) == 1
    assert lattice.hasse_edges == frozenset()


def test_galois_fixed_point_per_concept():
    model = two_entity_model()
    incidence = model_incidence(model)
    lattice = build_conceptual_lattice(model)
    attrs = frozenset(lattice.attributes)
    for c in lattice.concepts:
        derived_extent = frozenset(g for g, row in incidence.items() if c.intent <= row)
        common = set(attrs)
        for g in c.extent:
            common &= incidence[g]
        assert derived_extent == c.extent
        assert frozenset(common) == c.intent


def test_subsumes_top_bottom_and_siblings():
    model = two_entity_model()
    lattice = build_conceptual_lattice(model)
    for i in range(len(lattice.concepts)):
        assert lattice_subsumes(lattice, lattice.top, i)
        assert lattice_subsumes(lattice, i, lattice.bottom)
    # the two single-entity object concepts are incomparable siblings
    e1 = lattice.index_of(frozenset({"E1"}))
    e2 = lattice.index_of(frozenset({"E2"}))
    assert not lattice_subsumes(lattice, e1, e2)
    assert not lattice_subsumes(lattice, e2, e1)


def test_subsumes_unknown_concept():
    lattice = build_conceptual_lattice(two_entity_model())
    with pytest.raises(UnknownConcept):
        lattice_subsumes(lattice, 0, 99)
    with pytest.raises(UnknownConcept):
        lattice.index_of(frozenset({"Ghost"}))


def test_requires_wellformed_model():
    system = SortSystem().declare_sort_set("s").declare_sort("s", "A")
    model = InformationModel("m", "s", system)
    model = model.define_entity(EntitySpec("E", "object", ("A",), (
        Attribute("a", "Missing", DataParameter(0)),
    )))
    with pytest.raises(ModelNotWellFormed):
        build_conceptual_lattice(model)


def test_pilot_lattice_places_transfer_components_under_shared_concept():
    ws = build_pilot_workspace()
    model = ws.models["transfer_detailed"]
    lattice = build_conceptual_lattice(model)
    # stop stations share (dwell_time, Duration): their concept subsumes none
    # of the AGVs, and the top concept subsumes everything
    stops = frozenset({"PickLine1", "PickLine2", "DropAssembly", "DropWarehouse"})
    stop_concept = None
    for i, c in enumerate(lattice.concepts):
        if c.extent == stops:
            stop_concept = i
    assert stop_concept is not None
    agv_extent = frozenset({"Agv1", "Agv2"})
    agv_concept = lattice.index_of(agv_extent)
    assert lattice_subsumes(lattice, lattice.top, stop_concept)
    assert lattice_subsumes(lattice, lattice.top, agv_concept)
    assert not lattice_subsumes(lattice, stop_concept, agv_concept)


def test_oracle_equivalence_on_random_models():
    rng = random.Random(99)
    checked = 0
    while checked < 30:
        model = gen_model(rng)
        incidence = model_incidence(model)
        n_attrs = len(set().union(*incidence.values()) if incidence else set())
        if n_attrs > 8 or not check_wellformed(model).ok:
            continue
        expected_concepts, expected_covers = fca_oracle(incidence)
        lattice = lattice_from_incidence(incidence)
        concepts, covers = _lattice_as_sets(lattice)
        assert concepts == expected_concepts
        assert covers == expected_covers
        checked += 1
