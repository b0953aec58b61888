"""The pilot manufacturing system: two machining lines, one assembly line,
an automatic warehouse, and an AGV transfer system modeled in both abstract
and detailed modes.

The numbers here are an illustrative desk-scale parameterization, not
published data. Abstract travel legs and the detailed route transit
attributes are both derived from one geometry table (track lengths, limits,
curve factor, AGV speed), so the two representations cannot drift apart.

The workspace ships three models: ``pilot`` (everything, used by the
scenarios), plus ``transfer_abstract`` and ``transfer_detailed`` (just the
two transfer representations, used by the mode-coordination mapping).
"""

from __future__ import annotations

from fractions import Fraction

from .abstraction import ModeMapping, ModePair, SortMap, SortMapEntry
from .dsl import Demand, Expansion, ScenarioConfig, Workspace, print_workspace
from .entities import (
    Attribute,
    AttrRef,
    Cmp,
    DataParameter,
    EntityRef,
    EntitySpec,
    Functor,
    FunctorFunction,
    InformationModel,
    Lit,
)
from .ontology import Commitment, Ontology, Requirement
from .sorts import Alphabet, SortSystem

STATIONS = ("home", "MachLine1", "MachLine2", "Assembly1", "Warehouse1")

# geometry: every station connects to the central crossing CrossC
# (node, edge kind, length m, straight speed limit m/s or curve factor)
_SPOKES = {
    "home": ("NodeHome", "straight", 2, Fraction(2)),
    "MachLine1": ("PickLine1", "straight", 30, Fraction(2)),
    "MachLine2": ("PickLine2", "curve", 25, Fraction(4, 5)),
    "Assembly1": ("DropAssembly", "straight", 30, Fraction(2)),
    "Warehouse1": ("DropWarehouse", "straight", 25, Fraction(3, 2)),
}
_CROSSING = "CrossC"
_AGV_SPEED = Fraction(1)  # m/s
_DWELL_S = 10  # load/unload dwell at stop stations


def _spoke_seconds(station: str) -> Fraction:
    _node, kind, length, param = _SPOKES[station]
    if kind == "straight":
        return Fraction(length) / min(_AGV_SPEED, param)
    return Fraction(length) / (_AGV_SPEED * param)


def _leg_seconds(o: str, d: str) -> Fraction:
    return _spoke_seconds(o) + _spoke_seconds(d)


def _num(value: Fraction):
    return int(value) if value.denominator == 1 else float(value)


def _dp(value, unit="none") -> DataParameter:
    return DataParameter(value, unit)


def _leg_pairs() -> list[tuple[str, str]]:
    out = []
    for i, o in enumerate(STATIONS):
        for d in STATIONS[i + 1:]:
            out.append((o, d))
    return out


def build_sort_system() -> SortSystem:
    system = SortSystem().declare_sort_set("mfg").declare_sort_set("cost_view")
    mfg_sorts = [
        "Equipment", "MachiningLine", "AssemblyLine", "Warehouse", "TransferSystem",
        "Station", "HomeStation", "AbstractHome", "HomeNode", "StopStation",
        "RouteElement", "Track", "StraightTrack", "Curve", "Crossing",
        "Route", "RouteData", "AGV", "AGVFleet",
        "Duration", "TransitTime", "Speed", "Distance", "Count", "Ratio",
        "Label", "Position", "CostRate", "CostCarrier",
    ]
    for s in mfg_sorts:
        system = system.declare_sort("mfg", s)
    edges = [
        ("MachiningLine", "Equipment"), ("AssemblyLine", "Equipment"),
        ("Warehouse", "Equipment"), ("TransferSystem", "Equipment"),
        ("HomeStation", "Station"), ("AbstractHome", "HomeStation"),
        ("HomeNode", "HomeStation"), ("StopStation", "Station"),
        ("StopStation", "RouteElement"), ("Track", "RouteElement"),
        ("StraightTrack", "Track"), ("Curve", "Track"),
        ("Crossing", "RouteElement"), ("TransitTime", "Duration"),
    ]
    for sub, sup in edges:
        system = system.declare_subsort("mfg", sub, sup)
    for s in ("CostCarrier", "CostRate"):
        system = system.declare_sort("cost_view", s)
    system = system.rank_sort_sets("cost_view", "mfg")
    return system


def build_alphabet(system: SortSystem) -> Alphabet:
    alphabet = Alphabet()
    alphabet = alphabet.assign("agv1", {("mfg", "AGV"), ("cost_view", "CostCarrier")}, system)
    alphabet = alphabet.assign("cycle_time", {("mfg", "Duration")}, system)
    alphabet = alphabet.assign("speed", {("mfg", "Speed")}, system)
    alphabet = alphabet.assign("transfer_route", {("mfg", "Route")}, system)
    return alphabet


def manufacturing_profile(system: SortSystem) -> Ontology:
    """The shipped profile: attribute shapes every component must satisfy
    before a model may be compiled into an executable scenario."""
    c = [
        Commitment("machining_line_shape", "MachiningLine", (
            Requirement("cycle_time", "Duration"),
            Requirement("input_buffer", "Count"),
            Requirement("output_buffer", "Count"),
        )),
        Commitment("assembly_shape", "AssemblyLine", (
            Requirement("assembly_time", "Duration"),
        )),
        Commitment("warehouse_shape", "Warehouse", (
            Requirement("store_time", "Duration"),
            Requirement("retrieve_time", "Duration"),
            Requirement("capacity", "Count"),
        )),
        Commitment("agv_shape", "AGV", (
            Requirement("speed", "Speed"),
            Requirement("home", "HomeStation"),
        ), (Cmp("<=", AttrRef("speed"), Lit(5.0, "m/s")),)),
        Commitment("fleet_shape", "AGVFleet", (
            Requirement("count", "Count"),
            Requirement("speed", "Speed"),
            Requirement("load_time", "Duration"),
            Requirement("unload_time", "Duration"),
        )),
        Commitment("home_shape", "HomeStation", (
            Requirement("dispatch", "Label"),
        )),
        Commitment("route_shape", "Route", (
            Requirement(None, "Duration"),
        )),
        Commitment("route_data_shape", "RouteData", (
            Requirement(None, "Station"),
            Requirement("transit", "Duration"),
        )),
        Commitment("track_shape", "StraightTrack", (
            Requirement("length", "Distance"),
            Requirement("speed_limit", "Speed"),
        )),
        Commitment("curve_shape", "Curve", (
            Requirement("length", "Distance"),
            Requirement("speed_factor", "Ratio"),
        ), (Cmp("<=", AttrRef("speed_factor"), Lit(1.0)),)),
        Commitment("stop_shape", "StopStation", (
            Requirement("dwell_time", "Duration"),
            Requirement("serves", "Label", required=False),
        )),
    ]
    return Ontology(
        "mfg_profile", tuple(c),
        provenance="attribute shapes for the pilot manufacturing system class",
        sort_system=system,
    )


def _production_entities() -> list[EntitySpec]:
    return [
        EntitySpec("MachLine1", "object", ("MachiningLine", "CostCarrier"), (
            Attribute("cycle_time", "Duration", _dp(60, "s")),
            Attribute("input_buffer", "Count", _dp(500, "count")),
            Attribute("output_buffer", "Count", _dp(10, "count")),
            Attribute("op_cost", "CostRate", _dp(14.5)),
        ), rules=(Cmp("<", Lit(0.0), AttrRef("cycle_time")),)),
        EntitySpec("MachLine2", "object", ("MachiningLine", "CostCarrier"), (
            Attribute("cycle_time", "Duration", _dp(90, "s")),
            Attribute("input_buffer", "Count", _dp(500, "count")),
            Attribute("output_buffer", "Count", _dp(10, "count")),
            Attribute("op_cost", "CostRate", _dp(11.0)),
        ), rules=(Cmp("<", Lit(0.0), AttrRef("cycle_time")),)),
        EntitySpec("Assembly1", "object", ("AssemblyLine",), (
            Attribute("assembly_time", "Duration", _dp(120, "s")),
        )),
        EntitySpec("Warehouse1", "object", ("Warehouse",), (
            Attribute("store_time", "Duration", _dp(30, "s")),
            Attribute("retrieve_time", "Duration", _dp(30, "s")),
            Attribute("capacity", "Count", _dp(500, "count")),
        )),
    ]


def _abstract_entities() -> list[EntitySpec]:
    leg_attrs = tuple(
        Attribute(f"leg_{o}__{d}", "Duration", _dp(_num(_leg_seconds(o, d)), "s"))
        for o, d in _leg_pairs()
    )
    fn = FunctorFunction(
        "round_trip",
        ("leg_home__MachLine1", "leg_MachLine1__Assembly1", "leg_home__Assembly1"),
        "Duration",
    )
    return [
        EntitySpec("Route1", "object", ("Route",), leg_attrs,
                   functor=Functor("aggregate", (fn,))),
        EntitySpec("HomeStation1", "object", ("AbstractHome",), (
            Attribute("dispatch", "Label", _dp("fifo")),
        )),
        EntitySpec("AgvFleet", "object", ("AGVFleet", "CostCarrier"), (
            Attribute("count", "Count", _dp(2, "count")),
            Attribute("speed", "Speed", _dp(1.0, "m/s")),
            Attribute("load_time", "Duration", _dp(_DWELL_S, "s")),
            Attribute("unload_time", "Duration", _dp(_DWELL_S, "s")),
            Attribute("op_cost", "CostRate", _dp(8.25)),
        )),
    ]


def _detailed_entities() -> list[EntitySpec]:
    out = [
        EntitySpec("NodeHome", "object", ("HomeNode",), (
            Attribute("dispatch", "Label", _dp("fifo")),
        )),
        EntitySpec(_CROSSING, "object", ("Crossing",), ()),
    ]
    for station in STATIONS[1:]:
        node, _kind, _length, _param = _SPOKES[station]
        out.append(EntitySpec(node, "object", ("StopStation",), (
            Attribute("dwell_time", "Duration", _dp(_DWELL_S, "s")),
            Attribute("serves", "Label", _dp(station)),
        )))
    node_sort = {"NodeHome": "HomeNode", _CROSSING: "Crossing"}
    for station in STATIONS[1:]:
        node_sort[_SPOKES[station][0]] = "StopStation"
    for station in STATIONS:
        node, kind, length, param = _SPOKES[station]
        if kind == "straight":
            out.append(EntitySpec(f"Track_{station}", "object", ("StraightTrack",), (
                Attribute("endpoint_a", node_sort[node], EntityRef(node)),
                Attribute("endpoint_b", "Crossing", EntityRef(_CROSSING)),
                Attribute("length", "Distance", _dp(_num(Fraction(length)), "m")),
                Attribute("speed_limit", "Speed", _dp(_num(param), "m/s")),
            )))
        else:
            out.append(EntitySpec(f"Curve_{station}", "object", ("Curve",), (
                Attribute("endpoint_a", node_sort[node], EntityRef(node)),
                Attribute("endpoint_b", "Crossing", EntityRef(_CROSSING)),
                Attribute("length", "Distance", _dp(_num(Fraction(length)), "m")),
                Attribute("speed_factor", "Ratio", _dp(_num(param))),
            ), rules=(Cmp("<=", AttrRef("speed_factor"), Lit(1.0)),)))
    for o, d in _leg_pairs():
        o_node, d_node = _SPOKES[o][0], _SPOKES[d][0]
        out.append(EntitySpec(f"Path_{o}_{d}", "object", ("RouteData",), (
            Attribute("node1", node_sort[o_node], EntityRef(o_node)),
            Attribute("node2", "Crossing", EntityRef(_CROSSING)),
            Attribute("node3", node_sort[d_node], EntityRef(d_node)),
            Attribute("transit", "TransitTime", _dp(_num(_leg_seconds(o, d)), "s")),
        )))
    position_fn = FunctorFunction("position", ("home",), "Position")
    for i in (1, 2):
        out.append(EntitySpec(f"Agv{i}", "object", ("AGV", "CostCarrier"), (
            Attribute("speed", "Speed", _dp(_num(_AGV_SPEED), "m/s")),
            Attribute("home", "HomeNode", EntityRef("NodeHome")),
            Attribute("op_cost", "CostRate", _dp(8.25)),
        ), functor=Functor("derive", (position_fn,)),
            rules=(Cmp("<=", AttrRef("speed"), Lit(5.0, "m/s")),)))
    return out


def _model(name: str, system: SortSystem, alphabet: Alphabet,
           entities: list[EntitySpec]) -> InformationModel:
    model = InformationModel(name, "mfg", system, alphabet)
    for spec in entities:
        model = model.define_entity(spec)
    return model


def transfer_mode_mapping() -> ModeMapping:
    pairs = [
        ModePair((f"Route1", f"leg_{o}__{d}"),
                 ((f"Path_{o}_{d}", "transit"),), "derive")
        for o, d in _leg_pairs()
    ]
    pairs += [
        ModePair(("AgvFleet", "speed"),
                 (("Agv1", "speed"), ("Agv2", "speed")), "aggregate"),
        ModePair(("AgvFleet", "load_time"),
                 (("PickLine1", "dwell_time"), ("PickLine2", "dwell_time")), "aggregate"),
        ModePair(("AgvFleet", "unload_time"),
                 (("DropAssembly", "dwell_time"), ("DropWarehouse", "dwell_time")),
                 "aggregate"),
        ModePair(("HomeStation1", "dispatch"),
                 (("NodeHome", "dispatch"),), "identity"),
    ]
    return ModeMapping("transfer_modes", "transfer_abstract", "transfer_detailed",
                       tuple(pairs))


def build_pilot_workspace() -> Workspace:
    system = build_sort_system()
    alphabet = build_alphabet(system)
    profile = manufacturing_profile(system)

    production = _production_entities()
    abstract = _abstract_entities()
    detailed = _detailed_entities()

    models = {
        "pilot": _model("pilot", system, alphabet, production + abstract + detailed),
        "transfer_abstract": _model("transfer_abstract", system, alphabet, abstract),
        "transfer_detailed": _model("transfer_detailed", system, alphabet, detailed),
    }

    sort_maps = {
        "track_up": SortMap("track_up", "mfg", "abstracting", (
            SortMapEntry("StraightTrack", "RouteElement", "elements", "aggregate"),
            SortMapEntry("Curve", "RouteElement", "elements", "aggregate"),
        )),
        "duration_down": SortMap("duration_down", "mfg", "refining", (
            SortMapEntry("Duration", "TransitTime"),
        )),
    }
    expansions = {
        "route_segments": Expansion("route_segments", {
            ("Route1", "leg_home__MachLine1"): (
                Attribute("seg_home_cross", "TransitTime",
                          _dp(_num(_spoke_seconds("home")), "s")),
                Attribute("seg_cross_line1", "TransitTime",
                          _dp(_num(_spoke_seconds("MachLine1")), "s")),
            ),
        }),
    }

    base_demand = {
        "MachLine1": Demand("every", interarrival_us=600_000_000),
        "MachLine2": Demand("every", interarrival_us=600_000_000),
    }
    split_routing = {"MachLine1": "assembly", "MachLine2": "warehouse"}
    horizon_8h = 8 * 3_600_000_000
    scenarios = {
        "base": ScenarioConfig("base", "pilot", "abstract", horizon_8h, 42,
                               dict(base_demand), dict(split_routing)),
        "base_detailed": ScenarioConfig("base_detailed", "pilot", "detailed",
                                        horizon_8h, 42,
                                        dict(base_demand), dict(split_routing)),
        "stress": ScenarioConfig("stress", "pilot", "detailed", horizon_8h, 42, {
            "MachLine1": Demand("every", interarrival_us=150_000_000),
            "MachLine2": Demand("every", interarrival_us=150_000_000),
        }, dict(split_routing)),
        "varied": ScenarioConfig("varied", "pilot", "detailed", horizon_8h, 42, {
            "MachLine1": Demand("exponential", interarrival_us=600_000_000),
            "MachLine2": Demand("exponential", interarrival_us=600_000_000),
        }, dict(split_routing)),
        "both_to_assembly": ScenarioConfig(
            "both_to_assembly", "pilot", "detailed", horizon_8h, 42,
            dict(base_demand),
            {"MachLine1": "assembly", "MachLine2": "assembly"}),
    }

    return Workspace(
        sort_system=system,
        alphabet=alphabet,
        ontologies={"mfg_profile": profile},
        models=models,
        sort_maps=sort_maps,
        expansions=expansions,
        mode_mappings={"transfer_modes": transfer_mode_mapping()},
        scenarios=scenarios,
    )


def pilot_text() -> str:
    return print_workspace(build_pilot_workspace())
