from pathlib import Path

from mfgsim.entities import check_wellformed, evaluate_rules, structure_graph
from mfgsim.lattice import build_conceptual_lattice
from mfgsim.ontology import verify_model
from mfgsim.pilot import build_pilot_workspace


def test_pilot_models_wellformed_and_verified():
    ws = build_pilot_workspace()
    profile = ws.ontologies["mfg_profile"]
    for model in ws.models.values():
        assert check_wellformed(model).diagnostics == ()
        assert verify_model(model, profile).ok


def test_pilot_entity_rules_all_pass():
    ws = build_pilot_workspace()
    model = ws.models["pilot"]
    for name in model.entities:
        for result in evaluate_rules(model, name):
            assert result.passed, (name, result)


def test_pilot_detailed_route_structure():
    ws = build_pilot_workspace()
    graph = structure_graph(ws.models["transfer_detailed"])
    targets_of_path = {dst for src, _label, dst in graph.edges
                       if src == "Path_MachLine1_Assembly1"}
    assert targets_of_path == {"PickLine1", "CrossC", "DropAssembly"}
    # every track touches the central crossing
    for src, label, dst in graph.edges:
        if src.startswith(("Track_", "Curve_")):
            assert label in ("endpoint_a", "endpoint_b")


def test_pilot_abstract_and_detailed_transits_agree():
    # the abstract legs and the detailed transit attributes come from one
    # geometry table; spot-check the values stay in lock step
    ws = build_pilot_workspace()
    abstract = ws.models["transfer_abstract"].entities["Route1"].attr_map()
    detailed = ws.models["transfer_detailed"].entities
    for leg_name, attr in abstract.items():
        if not leg_name.startswith("leg_"):
            continue
        o, d = leg_name[len("leg_"):].split("__")
        path = detailed[f"Path_{o}_{d}"].attr_map()["transit"]
        assert path.value.value == attr.value.value


def test_pilot_lattice_is_buildable():
    ws = build_pilot_workspace()
    lattice = build_conceptual_lattice(ws.models["pilot"])
    assert len(lattice.concepts) > 5
    assert lattice.concepts[lattice.top].extent == frozenset(ws.models["pilot"].entities)


def test_shipped_file_parses_with_zero_diagnostics():
    from mfgsim.dsl import parse_file

    shipped = Path(__file__).resolve().parent.parent / "models" / "pilot.mim"
    result = parse_file(shipped)
    assert result.ok
    assert all(not r.diagnostics for r in result.model_reports.values())
    assert set(result.workspace.scenarios) == {
        "base", "base_detailed", "stress", "varied", "both_to_assembly"}
