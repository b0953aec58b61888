import random

import pytest

from genutil import gen_model
from mfgsim.entities import (
    Attribute,
    AttrRef,
    Cmp,
    Collection,
    DataParameter,
    EntityRef,
    EntitySpec,
    Functor,
    FunctorFunction,
    Has,
    InformationModel,
    Lit,
    SortAtMost,
    check_wellformed,
    evaluate_rules,
    structure_graph,
)
from mfgsim.errors import DuplicateEntity, ModelNotWellFormed, UnknownEntity
from mfgsim.sorts import SortSystem


def small_system() -> SortSystem:
    system = SortSystem().declare_sort_set("mfg")
    for s in ("AGV", "Speed", "HomeStation", "Marker", "RouteElement", "Track",
              "StraightTrack", "Position", "Duration"):
        system = system.declare_sort("mfg", s)
    system = system.declare_subsort("mfg", "Track", "RouteElement")
    system = system.declare_subsort("mfg", "StraightTrack", "Track")
    return system


def agv_spec(**overrides) -> EntitySpec:
    fields = dict(
        name="Agv1",
        kind="object",
        result_sort=("AGV",),
        attributes=(
            Attribute("speed", "Speed", DataParameter(1.0, "m/s")),
            Attribute("home", "HomeStation", EntityRef("HomeStation1")),
        ),
        functor=Functor("derive", (FunctorFunction("pos", ("home",), "Position"),)),
        rules=(Cmp("<=", AttrRef("speed"), Lit(2.0)),),
    )
    fields.update(overrides)
    return EntitySpec(**fields)


def base_model() -> InformationModel:
    model = InformationModel("m", "mfg", small_system())
    model = model.define_entity(EntitySpec("HomeStation1", "object", ("HomeStation",)))
    return model.define_entity(agv_spec())


def test_define_entity_stores_spec():
    model = base_model()
    assert model.entity("Agv1").attributes[0].name == "speed"


def test_define_entity_empty_attribute_list_allowed():
    model = InformationModel("m", "mfg", small_system())
    model = model.define_entity(EntitySpec("Flag", "object", ("Marker",)))
    assert model.entity("Flag").attributes == ()
    assert check_wellformed(model).ok


def test_define_entity_duplicate_rejected():
    model = base_model()
    with pytest.raises(DuplicateEntity):
        model.define_entity(agv_spec())


def test_result_sort_must_be_nonempty():
    with pytest.raises(ValueError):
        EntitySpec("X", "object", ())


def test_wellformed_clean_model():
    report = check_wellformed(base_model())
    assert report.diagnostics == ()


def test_wellformed_functor_overlap_violation():
    bad = agv_spec(functor=Functor(
        "derive", (FunctorFunction("f", ("not_an_attr",), "Position"),)))
    model = InformationModel("m", "mfg", small_system()).define_entity(bad)
    codes = [d.code for d in check_wellformed(model).errors]
    assert "functor-overlap" in codes


def test_wellformed_functor_partial_domain_warns():
    spec = agv_spec(functor=Functor(
        "derive", (FunctorFunction("f", ("home", "extra_symbol"), "Position"),)))
    model = base_model()
    model = InformationModel("m2", "mfg", small_system())
    model = model.define_entity(EntitySpec("HomeStation1", "object", ("HomeStation",)))
    model = model.define_entity(spec)
    report = check_wellformed(model)
    assert report.ok  # warning, not error: the literal overlap condition holds
    assert [d.code for d in report.warnings] == ["functor-domain"]


def test_wellformed_dangling_ref():
    model = InformationModel("m", "mfg", small_system()).define_entity(agv_spec())
    diags = check_wellformed(model).errors
    assert any(d.code == "dangling-ref" and d.entity == "Agv1" and d.attribute == "home"
               for d in diags)


def test_wellformed_dangling_ref_inside_collection():
    spec = EntitySpec("Group", "object", ("Marker",), (
        Attribute("members", "Marker", Collection((EntityRef("Ghost"),))),
    ))
    model = InformationModel("m", "mfg", small_system()).define_entity(spec)
    assert any(d.code == "dangling-ref" for d in check_wellformed(model).errors)


def test_wellformed_unknown_sort():
    spec = EntitySpec("X", "object", ("AGV",), (
        Attribute("a", "NoSuchSort", DataParameter(1)),
    ))
    model = InformationModel("m", "mfg", small_system()).define_entity(spec)
    assert any(d.code == "unknown-sort" for d in check_wellformed(model).errors)


def test_wellformed_rule_unknown_attribute():
    spec = agv_spec(rules=(Cmp("<", AttrRef("missing"), Lit(1)),))
    model = InformationModel("m", "mfg", small_system())
    model = model.define_entity(EntitySpec("HomeStation1", "object", ("HomeStation",)))
    model = model.define_entity(spec)
    assert any(d.code == "rule-unknown-attr" for d in check_wellformed(model).errors)


def test_wellformed_order_independent():
    rng = random.Random(7)
    for _ in range(20):
        model = gen_model(rng)
        names = list(model.entities)
        rng.shuffle(names)
        permuted = InformationModel(model.name, model.primary_sort_set,
                                    model.sort_system, model.alphabet)
        for n in names:
            permuted = permuted.define_entity(model.entities[n])
        a = sorted(d.render() for d in check_wellformed(model).diagnostics)
        b = sorted(d.render() for d in check_wellformed(permuted).diagnostics)
        assert a == b


def test_evaluate_rules_numeric_pass():
    results = evaluate_rules(base_model(), "Agv1")
    assert len(results) == 1 and results[0].passed


def test_evaluate_rules_has_fails_when_absent():
    spec = agv_spec(attributes=(Attribute("speed", "Speed", DataParameter(1.0, "m/s")),),
                    functor=None, rules=(Has("home"),))
    model = InformationModel("m", "mfg", small_system()).define_entity(spec)
    results = evaluate_rules(model, "Agv1")
    assert not results[0].passed


def test_evaluate_rules_sort_at_most_via_hierarchy():
    # chain StraightTrack <= Track <= RouteElement checked through is_subsort
    spec = EntitySpec("R", "object", ("RouteElement",), (
        Attribute("track1", "StraightTrack", DataParameter("t1")),
    ), rules=(SortAtMost("track1", "RouteElement"), SortAtMost("track1", "Speed")))
    model = InformationModel("m", "mfg", small_system()).define_entity(spec)
    results = evaluate_rules(model, "R")
    assert results[0].passed
    assert not results[1].passed


def test_evaluate_rules_type_error_reported_not_raised():
    spec = EntitySpec("X", "object", ("AGV",), (
        Attribute("label", "Speed", DataParameter("fast")),
    ), rules=(Cmp("<", AttrRef("label"), Lit(3)),))
    model = InformationModel("m", "mfg", small_system()).define_entity(spec)
    results = evaluate_rules(model, "X")
    assert not results[0].passed
    assert "type-error" in results[0].detail


def test_evaluate_rules_unit_mismatch_is_type_error():
    spec = EntitySpec("X", "object", ("AGV",), (
        Attribute("speed", "Speed", DataParameter(1.0, "m/s")),
    ), rules=(Cmp("<=", AttrRef("speed"), Lit(10, "m")),
              Cmp("<=", AttrRef("speed"), Lit(2.0))))
    model = InformationModel("m", "mfg", small_system()).define_entity(spec)
    results = evaluate_rules(model, "X")
    assert not results[0].passed  # m/s against m
    assert results[1].passed  # unitless literal compares freely


def test_evaluate_rules_no_rules_always_passes():
    model = InformationModel("m", "mfg", small_system())
    model = model.define_entity(EntitySpec("Plain", "object", ("Marker",)))
    assert evaluate_rules(model, "Plain") == ()


def test_evaluate_rules_unknown_entity():
    with pytest.raises(UnknownEntity):
        evaluate_rules(base_model(), "Ghost")


def test_structure_graph_counts():
    graph = structure_graph(base_model())
    assert graph.nodes == ("Agv1", "HomeStation1")
    assert graph.edges == (("Agv1", "home", "HomeStation1"),)


def test_structure_graph_empty_model():
    model = InformationModel("m", "mfg", small_system())
    graph = structure_graph(model)
    assert graph.nodes == () and graph.edges == ()


def test_structure_graph_requires_wellformed():
    model = InformationModel("m", "mfg", small_system()).define_entity(agv_spec())
    with pytest.raises(ModelNotWellFormed):
        structure_graph(model)


def test_structure_graph_edge_per_ref_property():
    rng = random.Random(11)
    for _ in range(20):
        model = gen_model(rng)
        if not check_wellformed(model).ok:
            continue
        graph = structure_graph(model)
        assert len(graph.nodes) == len(model.entities)
        expected_edges = 0
        for spec in model.entities.values():
            for attr in spec.attributes:
                stack = [attr.value]
                while stack:
                    v = stack.pop()
                    if isinstance(v, EntityRef):
                        expected_edges += 1
                    elif isinstance(v, Collection):
                        stack.extend(v.items)
        assert len(graph.edges) == expected_edges


def test_structure_graph_dot_output():
    dot = structure_graph(base_model()).to_dot()
    assert dot.startswith("digraph") and '"Agv1" -> "HomeStation1"' in dot
