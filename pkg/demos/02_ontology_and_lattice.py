"""Ontological verification and the conceptual lattice.

Verifies the pilot model against the shipped manufacturing profile, injects
a violation to show the report, and prints the concept lattice of the
detailed transfer model.
"""

import _path  # noqa: F401

from dataclasses import replace

from mfgsim import build_pilot_workspace, build_conceptual_lattice, verify_model

ws = build_pilot_workspace()
model = ws.models["pilot"]
profile = ws.ontologies["mfg_profile"]

print("intact pilot:", "verified" if verify_model(model, profile).ok else "violations!")

# drop the fleet's load_time and watch the commitment fire
fleet = model.entities["AgvFleet"]
broken_fleet = replace(fleet, attributes=tuple(
    a for a in fleet.attributes if a.name != "load_time"))
entities = dict(model.entities)
entities["AgvFleet"] = broken_fleet
broken = replace(model, entities=entities)

report = verify_model(broken, profile)
print(f"after removing AgvFleet.load_time: {len(report.violations)} violation(s)")
print(report.render())

print()
lattice = build_conceptual_lattice(ws.models["transfer_detailed"])
print(f"transfer_detailed lattice: {len(lattice.concepts)} concepts")
print(lattice.render())
