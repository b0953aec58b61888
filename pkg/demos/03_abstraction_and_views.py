"""Abstraction, refinement, and view projection.

Collapses a detailed route description into one collection-valued
attribute, checks the pair, refines it back, and projects the pilot model
through the cost view.
"""

import _path  # noqa: F401

from mfgsim import (
    Attribute,
    EntityRef,
    EntitySpec,
    SortMap,
    SortMapEntry,
    abstract_entity,
    build_pilot_workspace,
    check_abstraction_pair,
    project_view,
    refine_entity,
)

ws = build_pilot_workspace()
sort_set = ws.sort_system.sort_set("mfg")

route = EntitySpec("RouteSketch", "object", ("Route",), (
    Attribute("track1", "StraightTrack", EntityRef("Track_MachLine1")),
    Attribute("curve1", "Curve", EntityRef("Curve_MachLine2")),
))

up = SortMap("up", "mfg", "abstracting", (
    SortMapEntry("StraightTrack", "RouteElement", "elements", "aggregate"),
    SortMapEntry("Curve", "RouteElement", "elements", "aggregate"),
))
abstracted = abstract_entity(route, up, sort_set)
print("abstracted attributes:")
for a in abstracted.attributes:
    print(f"  {a.name} : {a.sort} = {a.value}")

pair = check_abstraction_pair(route, abstracted, sort_set)
print("abstraction pair check:", "pass" if pair.ok else pair.render())

down = SortMap("down", "mfg", "refining", ())
expansion = {"elements": (
    Attribute("track1", "StraightTrack", EntityRef("Track_MachLine1")),
    Attribute("curve1", "Curve", EntityRef("Curve_MachLine2")),
)}
refined = refine_entity(abstracted, down, expansion, sort_set)
print("refined attribute names:", [a.name for a in refined.attributes])

print()
projected = project_view(ws.models["pilot"], "cost_view")
print(f"cost view keeps {len(projected.entities)} of "
      f"{len(ws.models['pilot'].entities)} entities:")
for name, spec in sorted(projected.entities.items()):
    attrs = ", ".join(f"{a.name}={a.value.value}" for a in spec.attributes)
    print(f"  {name}: {attrs}")
