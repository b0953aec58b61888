"""Abstract capacity estimate against the detailed simulation.

The design workflow: size the fleet from the abstract travel-time matrix,
then confirm with the detailed track-level simulation and sweep fleet
sizes under stress load.
"""

import _path  # noqa: F401

from mfgsim import (
    build_pilot_workspace,
    compare_modes,
    estimate_transfer_capacity,
    instantiate,
    simulate,
    with_fleet,
)

ws = build_pilot_workspace()
profile = ws.ontologies["mfg_profile"]
model = ws.models["pilot"]

abstract = instantiate(model, profile, ws.scenarios["base"])
estimate = estimate_transfer_capacity(abstract)
print(f"required AGVs: {estimate.required_agvs} "
      f"(utilization {float(estimate.utilization):.3f})")
for (o, d), busy in sorted(estimate.busy_us.items()):
    rate = float(estimate.demand_per_hour[(o, d)])
    print(f"  {o} -> {d}: {rate:.1f}/h at {busy / 1e6:.2f} s busy per transfer")

detailed = instantiate(model, profile, ws.scenarios["base_detailed"])
report = simulate(with_fleet(detailed, estimate.required_agvs), engine_seed=42)
print()
print(compare_modes(estimate, report).render())

stress = instantiate(model, profile, ws.scenarios["stress"])
print("fleet sweep under stress load (transfers delivered in 8 h):")
for n in range(1, 6):
    swept = simulate(with_fleet(stress, n), engine_seed=42)
    offered = swept.transfer_requests
    print(f"  fleet {n}: {swept.delivered_total}/{offered}")
