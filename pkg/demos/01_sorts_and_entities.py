"""Sorts, subsort hierarchies, and information entities.

Builds a small track vocabulary, declares an AGV entity over it, checks
well-formedness, evaluates its application rules, and prints the
entity-reference structure as DOT.
"""

import _path  # noqa: F401

from mfgsim import (
    Attribute,
    DataParameter,
    EntityRef,
    EntitySpec,
    Functor,
    FunctorFunction,
    InformationModel,
    SortSystem,
    check_wellformed,
    evaluate_rules,
    structure_graph,
)
from mfgsim.entities import AttrRef, Cmp, Lit, SortAtMost

# one sort set with a sort-subsort hierarchy
system = SortSystem().declare_sort_set("mfg")
for sort in ("RouteElement", "Track", "StraightTrack", "Curve",
             "AGV", "Speed", "HomeStation", "Position"):
    system = system.declare_sort("mfg", sort)
system = system.declare_subsort("mfg", "Track", "RouteElement")
system = system.declare_subsort("mfg", "StraightTrack", "Track")
system = system.declare_subsort("mfg", "Curve", "Track")

print("StraightTrack <= RouteElement:",
      system.is_subsort("mfg", "StraightTrack", "RouteElement"))
print("RouteElement <= StraightTrack:",
      system.is_subsort("mfg", "RouteElement", "StraightTrack"))

# entities: a home station and an AGV that references it
model = InformationModel("demo", "mfg", system)
model = model.define_entity(EntitySpec("Home1", "object", ("HomeStation",)))
model = model.define_entity(EntitySpec(
    "Agv1", "object", ("AGV",),
    attributes=(
        Attribute("speed", "Speed", DataParameter(1.0, "m/s")),
        Attribute("home", "HomeStation", EntityRef("Home1")),
        Attribute("lane", "StraightTrack", DataParameter("east")),
    ),
    functor=Functor("derive", (FunctorFunction("position", ("home",), "Position"),)),
    rules=(
        Cmp("<=", AttrRef("speed"), Lit(2.0)),
        SortAtMost("lane", "RouteElement"),
    ),
))

report = check_wellformed(model)
print("well-formed:", report.ok, f"({len(report.diagnostics)} diagnostics)")

for result in evaluate_rules(model, "Agv1"):
    print(f"rule {result.rule_index}: {'pass' if result.passed else 'FAIL'}")

print()
print(structure_graph(model).to_dot())
