"""Manufacturing layer: compile a verified information model into an
executable scenario and run it.

The modeled system class: machining lines feeding an assembly line and an
automatic warehouse through an intermittent AGV transfer system, in either
abstract mode (origin-destination travel-time matrix, home station, AGV
fleet) or detailed mode (track/curve/crossing/stop-station graph with
explicit route data).

Conventions the compiler expects from a model (the shipped manufacturing
profile ontology enforces the attribute shapes):

* machining lines carry ``cycle_time``, ``input_buffer``, ``output_buffer``;
* the assembly line carries ``assembly_time``; the warehouse carries
  ``store_time``, ``retrieve_time``, ``capacity``;
* abstract transfer: a fleet entity (``count``, ``speed``, ``load_time``,
  ``unload_time``), a home-station entity (``dispatch``), and a route entity
  whose ``leg_<origin>__<destination>`` attributes give the travel times
  (missing opposite directions are filled symmetrically);
* detailed transfer: node entities (home node, stop stations with
  ``dwell_time`` and a ``serves`` label naming their production station,
  crossings), track/curve edges with ``endpoint_a``/``endpoint_b``
  references, route-data entities whose ordered node references spell the
  walks, and AGV entities (``speed``, ``home``).

Dispatch policy: idle AGVs wait at the home station, requests are served
first-in-first-out, and an AGV becomes assignable again only once it is back
home. Crossings are capacity-one resources held while traversing the edge
leading out of the crossing. Edge traversal times round up to the next
microsecond, so no traversal ever completes early.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .dsl import Demand, ScenarioConfig
from .engine import Engine, RunStats
from .entities import (
    DataParameter,
    EntityRef,
    EntitySpec,
    InformationModel,
    as_fraction,
)
from .errors import (
    DeadlockDetected,
    MissingComponent,
    ModeMismatch,
    ModelMismatch,
    VerificationFailed,
)
from .ontology import Ontology, verify_model

SORT_MACHINING_LINE = "MachiningLine"
SORT_ASSEMBLY_LINE = "AssemblyLine"
SORT_WAREHOUSE = "Warehouse"
SORT_ROUTE = "Route"
SORT_ABSTRACT_HOME = "AbstractHome"
SORT_FLEET = "AGVFleet"
SORT_AGV = "AGV"
SORT_HOME_NODE = "HomeNode"
SORT_STOP = "StopStation"
SORT_CROSSING = "Crossing"
SORT_STRAIGHT = "StraightTrack"
SORT_CURVE = "Curve"
SORT_ROUTE_DATA = "RouteData"

HOME_KEY = "home"

US_PER_HOUR = 3_600_000_000


# ---------------------------------------------------------------------------
# executable scenario types


@dataclass(frozen=True)
class LineSpec:
    name: str
    cycle_us: int
    input_capacity: int
    output_capacity: int


@dataclass(frozen=True)
class AssemblySpec:
    name: str
    assembly_us: int
    inputs_per_line: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class WarehouseSpec:
    name: str
    store_us: int
    retrieve_us: int
    capacity: int


@dataclass(frozen=True)
class AbstractTransfer:
    stations: tuple[str, ...]
    travel_us: dict[tuple[str, str], int]
    agv_count: int
    load_us: int
    unload_us: int
    home_station: str = HOME_KEY
    dispatch: str = "fifo"

    def travel(self, o: str, d: str) -> int:
        if o == d:
            return 0
        return self.travel_us[(o, d)]


@dataclass(frozen=True)
class TrackEdge:
    a: str
    b: str
    kind: str  # "straight" | "curve"
    length_m: Fraction
    speed_limit_mps: Fraction | None = None
    speed_factor: Fraction | None = None


@dataclass(frozen=True)
class DetailedAgv:
    name: str
    speed_mps: Fraction
    home: str


@dataclass(frozen=True)
class DetailedTransfer:
    nodes: tuple[str, ...]
    crossings: frozenset[str]
    stop_dwell_us: dict[str, int]
    edges: tuple[TrackEdge, ...]
    paths: dict[tuple[str, str], tuple[str, ...]]
    station_nodes: dict[str, str]
    agvs: tuple[DetailedAgv, ...]
    home_node: str

    def edge_between(self, a: str, b: str) -> TrackEdge:
        for e in self.edges:
            if {e.a, e.b} == {a, b}:
                return e
        raise MissingComponent(f"no track between nodes {a!r} and {b!r}")

    def walk(self, origin: str, dest: str) -> tuple[str, ...]:
        """Explicit route data only; a declared path may be walked in
        reverse, but no path is ever computed."""
        if origin == dest:
            return (origin,)
        if (origin, dest) in self.paths:
            return self.paths[(origin, dest)]
        if (dest, origin) in self.paths:
            return tuple(reversed(self.paths[(dest, origin)]))
        raise MissingComponent(f"no route data covering {origin!r} -> {dest!r}")


@dataclass(frozen=True)
class ExecutableScenario:
    model_name: str
    mode: str
    lines: dict[str, LineSpec]
    assembly: AssemblySpec
    warehouse: WarehouseSpec
    transfer: AbstractTransfer | DetailedTransfer
    demand: dict[str, Demand]
    routing: dict[str, str]  # line -> "assembly" | "warehouse"
    horizon_us: int
    seed: int


def with_fleet(scenario: ExecutableScenario, count: int) -> ExecutableScenario:
    """Same scenario with the AGV fleet resized (sweep helper)."""
    if count < 1:
        raise ValueError("fleet size must be >= 1")
    t = scenario.transfer
    if isinstance(t, AbstractTransfer):
        return replace(scenario, transfer=replace(t, agv_count=count))
    proto = t.agvs[0]
    agvs = tuple(
        DetailedAgv(f"agv{i + 1}", proto.speed_mps, proto.home) for i in range(count)
    )
    return replace(scenario, transfer=replace(t, agvs=agvs))


# ---------------------------------------------------------------------------
# model -> scenario compilation


def _is_sorted_as(model: InformationModel, spec: EntitySpec, sort: str) -> bool:
    ss = model.primary_set()
    return any(
        s in ss.sorts and sort in ss.sorts and ss.is_subsort(s, sort)
        for s in spec.result_sort
    )


def _find_all(model: InformationModel, sort: str) -> list[EntitySpec]:
    return [model.entities[name] for name in sorted(model.entities)
            if _is_sorted_as(model, model.entities[name], sort)]


def _find_one(model: InformationModel, sort: str, what: str) -> EntitySpec:
    found = _find_all(model, sort)
    if not found:
        raise MissingComponent(f"model {model.name!r} has no {what} (sort {sort})")
    if len(found) > 1:
        names = [e.name for e in found]
        raise MissingComponent(f"model {model.name!r} has several {what}s: {names}")
    return found[0]


def _param(spec: EntitySpec, attr: str) -> DataParameter:
    a = spec.attr_map().get(attr)
    if a is None or not isinstance(a.value, DataParameter):
        raise MissingComponent(
            f"entity {spec.name!r} needs a data attribute {attr!r}"
        )
    return a.value


def _dur_us(spec: EntitySpec, attr: str) -> int:
    value = as_fraction(_param(spec, attr)) * 1_000_000
    if value.denominator != 1:
        raise ValueError(
            f"{spec.name}.{attr} is not representable at microsecond resolution"
        )
    if value < 0:
        raise ValueError(f"{spec.name}.{attr} must be non-negative")
    return int(value)


def _int(spec: EntitySpec, attr: str) -> int:
    value = as_fraction(_param(spec, attr))
    if value.denominator != 1:
        raise ValueError(f"{spec.name}.{attr} must be an integer")
    return int(value)


def _frac(spec: EntitySpec, attr: str) -> Fraction:
    return as_fraction(_param(spec, attr))


def _text(spec: EntitySpec, attr: str) -> str:
    p = _param(spec, attr)
    if not isinstance(p.value, str):
        raise MissingComponent(f"{spec.name}.{attr} must be text")
    return p.value


def _ref(spec: EntitySpec, attr: str) -> str:
    a = spec.attr_map().get(attr)
    if a is None or not isinstance(a.value, EntityRef):
        raise MissingComponent(f"entity {spec.name!r} needs a reference attribute {attr!r}")
    return a.value.target


def instantiate(
    model: InformationModel,
    profile: Ontology,
    config: ScenarioConfig,
) -> ExecutableScenario:
    """The vertical interface: verify the model against the manufacturing
    profile, then compile it into an executable scenario in the requested
    mode."""
    report = verify_model(model, profile)
    if not report.ok:
        raise VerificationFailed(
            f"model {model.name!r} violates the profile "
            f"({len(report.violations)} violation(s))",
            report=report,
        )

    lines = {}
    for spec in _find_all(model, SORT_MACHINING_LINE):
        line = LineSpec(
            name=spec.name,
            cycle_us=_dur_us(spec, "cycle_time"),
            input_capacity=_int(spec, "input_buffer"),
            output_capacity=_int(spec, "output_buffer"),
        )
        if line.cycle_us <= 0:
            raise ValueError(f"{spec.name}: cycle_time must be positive")
        if line.input_capacity < 1 or line.output_capacity < 1:
            raise ValueError(f"{spec.name}: buffer capacities must be >= 1")
        lines[spec.name] = line
    if not lines:
        raise MissingComponent(f"model {model.name!r} has no machining lines")
    assembly_spec = _find_one(model, SORT_ASSEMBLY_LINE, "assembly line")
    warehouse_spec = _find_one(model, SORT_WAREHOUSE, "warehouse")

    routing = dict(config.routing)
    for line in list(config.demand) + list(routing):
        if line not in lines:
            raise MissingComponent(
                f"scenario names {line!r}, which is not a machining line"
            )
    feeding = sorted(line for line, dest in routing.items() if dest == "assembly")
    assembly = AssemblySpec(
        name=assembly_spec.name,
        assembly_us=_dur_us(assembly_spec, "assembly_time"),
        inputs_per_line={line: 1 for line in feeding},
    )
    warehouse = WarehouseSpec(
        name=warehouse_spec.name,
        store_us=_dur_us(warehouse_spec, "store_time"),
        retrieve_us=_dur_us(warehouse_spec, "retrieve_time"),
        capacity=_int(warehouse_spec, "capacity"),
    )
    if assembly.assembly_us <= 0 or warehouse.store_us <= 0 or warehouse.retrieve_us <= 0:
        raise ValueError("assembly and warehouse service times must be positive")
    if warehouse.capacity < 1:
        raise ValueError("warehouse capacity must be >= 1")

    stations = (HOME_KEY,) + tuple(sorted(lines)) + (assembly.name, warehouse.name)
    if config.mode == "abstract":
        transfer = _build_abstract(model, stations)
    else:
        transfer = _build_detailed(model, stations, routing, assembly, warehouse)

    return ExecutableScenario(
        model_name=model.name,
        mode=config.mode,
        lines=lines,
        assembly=assembly,
        warehouse=warehouse,
        transfer=transfer,
        demand=dict(config.demand),
        routing=routing,
        horizon_us=config.horizon_us,
        seed=config.seed,
    )


def _mode_entities(model: InformationModel, mode: str) -> list[EntitySpec]:
    sorts = ((SORT_ROUTE, SORT_FLEET, SORT_ABSTRACT_HOME) if mode == "abstract"
             else (SORT_AGV, SORT_HOME_NODE, SORT_ROUTE_DATA))
    out = []
    for s in sorts:
        out.extend(_find_all(model, s))
    return out


def _require_mode(model: InformationModel, mode: str):
    if not _mode_entities(model, mode):
        other = "detailed" if mode == "abstract" else "abstract"
        if _mode_entities(model, other):
            raise ModeMismatch(
                f"model {model.name!r} carries only {other}-mode transfer entities "
                f"but mode {mode!r} was requested"
            )
        raise MissingComponent(
            f"model {model.name!r} has no transfer entities for mode {mode!r}"
        )


def _build_abstract(model: InformationModel, stations: tuple[str, ...]) -> AbstractTransfer:
    _require_mode(model, "abstract")
    route = _find_one(model, SORT_ROUTE, "route model")
    fleet = _find_one(model, SORT_FLEET, "AGV fleet model")
    home = _find_one(model, SORT_ABSTRACT_HOME, "home station model")

    travel: dict[tuple[str, str], int] = {}
    for attr in route.attributes:
        if not attr.name.startswith("leg_"):
            continue
        parts = attr.name[len("leg_"):].split("__")
        if len(parts) != 2:
            raise MissingComponent(
                f"route leg {attr.name!r} must be named leg_<origin>__<destination>"
            )
        o, d = parts
        for s in (o, d):
            if s not in stations:
                raise MissingComponent(
                    f"route leg {attr.name!r} names unknown station {s!r}"
                )
        value = as_fraction(attr.value) * 1_000_000
        if value.denominator != 1 or value < 0:
            raise ValueError(f"leg {attr.name!r} is not a whole non-negative microsecond count")
        travel[(o, d)] = int(value)
    for o, d in list(travel):
        travel.setdefault((d, o), travel[(o, d)])
    missing = [
        (o, d) for o in stations for d in stations if o != d and (o, d) not in travel
    ]
    if missing:
        raise MissingComponent(f"route model lacks legs for station pairs: {missing}")

    count = _int(fleet, "count")
    if count < 1:
        raise MissingComponent("AGV fleet count must be >= 1")
    return AbstractTransfer(
        stations=stations,
        travel_us=travel,
        agv_count=count,
        load_us=_dur_us(fleet, "load_time"),
        unload_us=_dur_us(fleet, "unload_time"),
        dispatch=_text(home, "dispatch"),
    )


def _build_detailed(model, stations, routing, assembly, warehouse) -> DetailedTransfer:
    _require_mode(model, "detailed")
    home = _find_one(model, SORT_HOME_NODE, "home node")
    stops = _find_all(model, SORT_STOP)
    crossings = frozenset(e.name for e in _find_all(model, SORT_CROSSING))
    agv_specs = _find_all(model, SORT_AGV)
    if not agv_specs:
        raise MissingComponent(f"model {model.name!r} has no AGVs")

    stop_dwell = {s.name: _dur_us(s, "dwell_time") for s in stops}
    station_nodes: dict[str, str] = {HOME_KEY: home.name}
    for s in stops:
        if "serves" in s.attr_map():
            station_nodes[_text(s, "serves")] = s.name

    nodes = tuple(sorted({home.name, *stop_dwell, *crossings}))

    edges = []
    for spec in _find_all(model, SORT_STRAIGHT):
        edges.append(TrackEdge(
            a=_ref(spec, "endpoint_a"), b=_ref(spec, "endpoint_b"),
            kind="straight", length_m=_frac(spec, "length"),
            speed_limit_mps=_frac(spec, "speed_limit"),
        ))
    for spec in _find_all(model, SORT_CURVE):
        factor = _frac(spec, "speed_factor")
        if not 0 < factor <= 1:
            raise ValueError(f"curve {spec.name!r} needs speed_factor in (0, 1]")
        edges.append(TrackEdge(
            a=_ref(spec, "endpoint_a"), b=_ref(spec, "endpoint_b"),
            kind="curve", length_m=_frac(spec, "length"),
            speed_factor=factor,
        ))
    for e in edges:
        if e.length_m <= 0:
            raise ValueError(f"track between {e.a!r} and {e.b!r} needs positive length")

    transfer = DetailedTransfer(
        nodes=nodes,
        crossings=crossings,
        stop_dwell_us=stop_dwell,
        edges=tuple(edges),
        paths={},
        station_nodes=station_nodes,
        agvs=tuple(
            DetailedAgv(spec.name, _frac(spec, "speed"), _ref(spec, "home"))
            for spec in agv_specs
        ),
        home_node=home.name,
    )

    paths: dict[tuple[str, str], tuple[str, ...]] = {}
    for spec in _find_all(model, SORT_ROUTE_DATA):
        seq = [a.value.target for a in spec.attributes if isinstance(a.value, EntityRef)]
        if len(seq) < 2:
            raise MissingComponent(f"route data {spec.name!r} needs at least two nodes")
        for n in seq:
            if n not in nodes:
                raise MissingComponent(f"route data {spec.name!r} names unknown node {n!r}")
        for a, b in zip(seq, seq[1:]):
            transfer.edge_between(a, b)  # connected edge walk
        paths[(seq[0], seq[-1])] = tuple(seq)
    transfer = replace(transfer, paths=paths)

    # every station the scenario can route between must be reachable
    used = {HOME_KEY, assembly.name, warehouse.name} | set(routing)
    for st in sorted(used):
        if st not in station_nodes:
            raise MissingComponent(f"no stop station serves {st!r}")
    for o in sorted(used):
        for d in sorted(used):
            if o != d:
                transfer.walk(station_nodes[o], station_nodes[d])
    return transfer


def _edge_time_us(edge: TrackEdge, speed_mps: Fraction) -> int:
    if edge.kind == "straight":
        v = min(speed_mps, edge.speed_limit_mps)
    else:
        v = speed_mps * edge.speed_factor
    if v <= 0:
        raise ValueError(f"AGV cannot move on track {edge.a!r}-{edge.b!r}")
    return math.ceil(edge.length_m / v * 1_000_000)


# ---------------------------------------------------------------------------
# simulation


@dataclass
class _Part:
    id: str
    line: str
    released_us: int
    location: str = "input"


@dataclass
class _Request:
    part: _Part
    origin: str
    dest: str
    ready_us: int
    load_start_us: int | None = None
    pickup_us: int | None = None
    delivered_us: int | None = None


class _AgvState:
    def __init__(self, name: str, station: str):
        self.name = name
        self.station = station
        self.idle_at_home = True
        self.service_us = 0
        self.return_us = 0
        self.approach_us = 0


class _Run:
    """One simulation run; wires the scenario onto an engine."""

    def __init__(self, scenario: ExecutableScenario, engine: Engine, horizon_us: int):
        self.sc = scenario
        self.eng = engine
        self.horizon_us = horizon_us
        self.parts: dict[str, _Part] = {}
        self.released: dict[str, int] = {line: 0 for line in sorted(scenario.lines)}
        self.machined: dict[str, int] = {line: 0 for line in sorted(scenario.lines)}
        self.completed = 0
        self.wip = 0
        self.assembled = 0
        self.stored = 0
        self.requests: list[_Request] = []
        self.delivered: dict[tuple[str, str], int] = {}
        self._part_seq = 0

        self.machines = {
            line: engine.resource(f"machine:{line}", 1) for line in sorted(scenario.lines)
        }
        self.outputs: dict[str, int] = {line: 0 for line in scenario.lines}
        self.blocked: dict[str, _Part | None] = {line: None for line in scenario.lines}
        self.input_count: dict[str, int] = {line: 0 for line in scenario.lines}
        self.asm_res = engine.resource(f"assembly:{scenario.assembly.name}", 1)
        self.crane = engine.resource(f"crane:{scenario.warehouse.name}", 1)
        self.staging: dict[str, deque] = {
            line: deque() for line in scenario.assembly.inputs_per_line
        }
        self.wh_overflow: deque = deque()

        if scenario.mode == "abstract":
            self.transfer = _AbstractSim(self, scenario.transfer)
        else:
            self.transfer = _DetailedSim(self, scenario.transfer)

    # demand ---------------------------------------------------------------

    def schedule_demand(self):
        for line in sorted(self.sc.demand):
            d = self.sc.demand[line]
            if d.kind == "every":
                t, n = 0, 0
                while t < self.horizon_us and (d.limit is None or n < d.limit):
                    self.eng.schedule(t, 0, self._release_fn(line), f"release:{line}")
                    t += d.interarrival_us
                    n += 1
            elif d.kind == "batch":
                for _ in range(d.count):
                    self.eng.schedule(0, 0, self._release_fn(line), f"release:{line}")
            else:  # exponential
                self._schedule_exponential(line, d, 0)

    def _schedule_exponential(self, line: str, d: Demand, count: int):
        if d.limit is not None and count >= d.limit:
            return
        gap = self.eng.stream("demand").exponential_us(d.interarrival_us)
        at = self.eng.now + gap
        if at >= self.horizon_us:
            return

        def fire():
            self._release(line)
            self._schedule_exponential(line, d, count + 1)

        self.eng.schedule(at, 0, fire, f"release:{line}")

    def _release_fn(self, line: str):
        return lambda: self._release(line)

    def _release(self, line: str):
        if self.input_count[line] >= self.sc.lines[line].input_capacity:
            raise RuntimeError(f"input buffer of {line} overflowed; raise its capacity")
        self._part_seq += 1
        part = _Part(f"p{self._part_seq}", line, self.eng.now)
        self.parts[part.id] = part
        self.released[line] += 1
        self.wip += 1
        self.eng.record("wip", self.wip)
        self.eng.trace_event("release", part.id, line)
        self.input_count[line] += 1
        self.machines[line].acquire(part.id, lambda: self._machine_start(part))

    # machining ------------------------------------------------------------

    def _machine_start(self, part: _Part):
        line = part.line
        self.input_count[line] -= 1
        part.location = "machine"
        self.eng.trace_event("mach_start", part.id, line)
        self.eng.schedule_in(self.sc.lines[line].cycle_us, 0,
                             lambda: self._machine_finish(part), f"mach:{line}")

    def _machine_finish(self, part: _Part):
        line = part.line
        if self.outputs[line] >= self.sc.lines[line].output_capacity:
            self.blocked[line] = part  # holds the machine until a pickup frees space
            return
        self._leave_machine(part)

    def _leave_machine(self, part: _Part):
        line = part.line
        self.machined[line] += 1
        self.eng.trace_event("mach_end", part.id, line)
        self.outputs[line] += 1
        part.location = "output"
        self.machines[line].release(part.id)
        dest = self.sc.routing.get(line)
        if dest is None:
            # line output is terminal when unrouted
            self.outputs[line] -= 1
            self._complete(part)
            return
        dest_station = self.sc.assembly.name if dest == "assembly" else self.sc.warehouse.name
        req = _Request(part, line, dest_station, self.eng.now)
        self.requests.append(req)
        self.eng.trace_event("transfer_request", part.id, f"{line}->{dest_station}")
        self.transfer.request(req)

    def on_pickup(self, req: _Request):
        line = req.origin
        req.pickup_us = self.eng.now
        req.part.location = "agv"
        self.outputs[line] -= 1
        self.eng.trace_event("pickup", req.part.id, line)
        blocked = self.blocked[line]
        if blocked is not None and self.outputs[line] < self.sc.lines[line].output_capacity:
            self.blocked[line] = None
            self._leave_machine(blocked)

    def on_delivered(self, req: _Request):
        req.delivered_us = self.eng.now
        key = (req.origin, req.dest)
        self.delivered[key] = self.delivered.get(key, 0) + 1
        self.eng.trace_event("deliver", req.part.id, req.dest)
        if req.dest == self.sc.assembly.name:
            req.part.location = "staging"
            self.staging[req.origin].append(req.part)
            self._try_assemble()
        else:
            self._warehouse_enqueue(req.part)

    # assembly ---------------------------------------------------------------

    def _try_assemble(self):
        need = self.sc.assembly.inputs_per_line
        if not need:
            return
        if self.asm_res.holders:
            return
        if any(len(self.staging[line]) < count for line, count in need.items()):
            return
        consumed: list[_Part] = []
        for line in sorted(need):
            for _ in range(need[line]):
                consumed.append(self.staging[line].popleft())
        for p in consumed:
            p.location = "assembling"
        batch_id = "+".join(p.id for p in consumed)
        self.asm_res.acquire(batch_id, lambda: self._assemble_start(batch_id, consumed))

    def _assemble_start(self, batch_id: str, consumed: list[_Part]):
        self.eng.trace_event("asm_start", batch_id, self.sc.assembly.name)
        self.eng.schedule_in(self.sc.assembly.assembly_us, 0,
                             lambda: self._assemble_finish(batch_id, consumed), "asm")

    def _assemble_finish(self, batch_id: str, consumed: list[_Part]):
        self.assembled += 1
        self.eng.trace_event("asm_end", batch_id, self.sc.assembly.name)
        self.asm_res.release(batch_id)
        for p in consumed:
            self._complete(p)
        self._try_assemble()

    # warehouse ---------------------------------------------------------------

    def _warehouse_enqueue(self, part: _Part):
        if self.stored >= self.sc.warehouse.capacity:
            part.location = "wh_overflow"
            self.wh_overflow.append(part)
            return
        part.location = "storing"
        self.crane.acquire(part.id, lambda: self._store_start(part))

    def _store_start(self, part: _Part):
        self.eng.trace_event("store_start", part.id, self.sc.warehouse.name)
        self.eng.schedule_in(self.sc.warehouse.store_us, 0,
                             lambda: self._store_finish(part), "store")

    def _store_finish(self, part: _Part):
        self.stored += 1
        self.eng.trace_event("store_end", part.id, self.sc.warehouse.name)
        self.crane.release(part.id)
        self._complete(part)

    def _complete(self, part: _Part):
        part.location = "done"
        self.completed += 1
        self.wip -= 1
        self.eng.record("wip", self.wip)

    def structural_wip(self) -> int:
        return sum(1 for p in self.parts.values() if p.location != "done")


class _AbstractSim:
    def __init__(self, run: _Run, spec: AbstractTransfer):
        self.run = run
        self.spec = spec
        self.pending: deque[_Request] = deque()
        self.agvs = [
            _AgvState(f"agv{i + 1}", spec.home_station) for i in range(spec.agv_count)
        ]

    def request(self, req: _Request):
        self.pending.append(req)
        self._dispatch()

    def _dispatch(self):
        while self.pending:
            idle = [a for a in self.agvs if a.idle_at_home]
            if not idle:
                return
            req = self.pending.popleft()
            agv = min(idle, key=lambda a: (self.spec.travel(a.station, req.origin),
                                           self.agvs.index(a)))
            self._assign(agv, req)

    def _assign(self, agv: _AgvState, req: _Request):
        eng = self.run.eng
        agv.idle_at_home = False
        eng.trace_event("agv_assign", agv.name, req.part.id)
        approach = self.spec.travel(agv.station, req.origin)
        t0 = eng.now
        eng.trace_event("agv_depart", agv.name, agv.station)

        def arrive_origin():
            agv.approach_us += eng.now - t0
            agv.station = req.origin
            eng.trace_event("agv_arrive", agv.name, req.origin)
            service_start = eng.now
            req.load_start_us = eng.now
            eng.trace_event("load_start", agv.name, req.origin)

            def loaded():
                self.run.on_pickup(req)
                eng.schedule_in(self.spec.travel(req.origin, req.dest), 0,
                                arrive_dest, "agv_move")

            def arrive_dest():
                agv.station = req.dest
                eng.trace_event("agv_arrive", agv.name, req.dest)
                eng.trace_event("unload_start", agv.name, req.dest)

                def unloaded():
                    agv.service_us += eng.now - service_start
                    self.run.on_delivered(req)
                    ret_start = eng.now
                    home = self.spec.home_station

                    def arrive_home():
                        agv.return_us += eng.now - ret_start
                        agv.station = home
                        agv.idle_at_home = True
                        eng.trace_event("return_home", agv.name, home)
                        self._dispatch()

                    eng.schedule_in(self.spec.travel(req.dest, home), 0,
                                    arrive_home, "agv_return")

                eng.schedule_in(self.spec.unload_us, 0, unloaded, "agv_unload")

            eng.schedule_in(self.spec.load_us, 0, loaded, "agv_load")

        eng.schedule_in(approach, 0, arrive_origin, "agv_move")


class _DetailedSim:
    def __init__(self, run: _Run, spec: DetailedTransfer):
        self.run = run
        self.spec = spec
        self.pending: deque[_Request] = deque()
        self.agvs = [_AgvState(a.name, a.home) for a in spec.agvs]
        self.speeds = {a.name: a.speed_mps for a in spec.agvs}
        self.crossing_res = {
            c: run.eng.resource(f"crossing:{c}", 1) for c in sorted(spec.crossings)
        }

    def _walk_time_us(self, agv: _AgvState, origin: str, dest: str) -> int:
        nodes = self.spec.walk(origin, dest)
        speed = self.speeds[agv.name]
        return sum(
            _edge_time_us(self.spec.edge_between(a, b), speed)
            for a, b in zip(nodes, nodes[1:])
        )

    def request(self, req: _Request):
        self.pending.append(req)
        self._dispatch()

    def _dispatch(self):
        while self.pending:
            idle = [a for a in self.agvs if a.idle_at_home]
            if not idle:
                return
            req = self.pending.popleft()
            origin_node = self.spec.station_nodes[req.origin]
            agv = min(idle, key=lambda a: (self._walk_time_us(a, a.station, origin_node),
                                           self.agvs.index(a)))
            self._assign(agv, req)

    def _traverse(self, agv: _AgvState, nodes: tuple[str, ...], mid_dwell: bool, on_done):
        """Walk a node sequence: dwell at intermediate stop stations, hold a
        crossing while traversing the edge that leaves it."""
        eng = self.run.eng
        speed = self.speeds[agv.name]

        def step(i: int):
            if i >= len(nodes) - 1:
                on_done()
                return
            here, nxt = nodes[i], nodes[i + 1]
            edge = self.spec.edge_between(here, nxt)
            dt = _edge_time_us(edge, speed)

            def arrive():
                agv.station = nxt
                eng.trace_event("agv_arrive", agv.name, nxt)
                if here in self.spec.crossings:
                    eng.trace_event("cross_release", agv.name, here)
                    self.crossing_res[here].release(agv.name)
                dwell = self.spec.stop_dwell_us.get(nxt, 0)
                if mid_dwell and dwell and i + 1 < len(nodes) - 1:
                    eng.schedule_in(dwell, 0, lambda: step(i + 1), "agv_dwell")
                else:
                    step(i + 1)

            def move():
                eng.schedule_in(dt, 0, arrive, "agv_move")

            if here in self.spec.crossings:
                def granted():
                    eng.trace_event("cross_acquire", agv.name, here)
                    move()
                self.crossing_res[here].acquire(agv.name, granted)
            else:
                move()

        eng.trace_event("agv_depart", agv.name, nodes[0])
        step(0)

    def _assign(self, agv: _AgvState, req: _Request):
        eng = self.run.eng
        spec = self.spec
        agv.idle_at_home = False
        eng.trace_event("agv_assign", agv.name, req.part.id)
        origin_node = spec.station_nodes[req.origin]
        dest_node = spec.station_nodes[req.dest]
        t0 = eng.now

        def at_origin():
            agv.approach_us += eng.now - t0
            service_start = eng.now
            req.load_start_us = eng.now
            load = spec.stop_dwell_us.get(origin_node, 0)
            eng.trace_event("load_start", agv.name, origin_node)

            def loaded():
                self.run.on_pickup(req)
                self._traverse(agv, spec.walk(origin_node, dest_node), True, at_dest)

            def at_dest():
                unload = spec.stop_dwell_us.get(dest_node, 0)
                eng.trace_event("unload_start", agv.name, dest_node)

                def unloaded():
                    agv.service_us += eng.now - service_start
                    self.run.on_delivered(req)
                    ret_start = eng.now

                    def at_home():
                        agv.return_us += eng.now - ret_start
                        agv.idle_at_home = True
                        eng.trace_event("return_home", agv.name, spec.home_node)
                        self._dispatch()

                    self._traverse(agv, spec.walk(dest_node, spec.home_node),
                                   True, at_home)

                eng.schedule_in(unload, 0, unloaded, "agv_unload")

            eng.schedule_in(load, 0, loaded, "agv_load")

        self._traverse(agv, spec.walk(agv.station, origin_node), True, at_origin)


# ---------------------------------------------------------------------------
# reports


@dataclass
class SimReport:
    model_name: str
    mode: str
    seed: int
    horizon_us: int
    stats: RunStats
    trace: list[dict]
    released: dict[str, int]
    machined: dict[str, int]
    completed: int
    wip_at_horizon: int
    assembled: int
    stored: int
    transfer_requests: int
    delivered: dict[tuple[str, str], int]
    latency_mean_us: Fraction | None
    wait_mean_us: Fraction | None
    agv_utilization: Fraction
    agv_busy_us: int
    agv_approach_us: int

    @property
    def released_total(self) -> int:
        return sum(self.released.values())

    @property
    def delivered_total(self) -> int:
        return sum(self.delivered.values())

    @property
    def conservation_residual(self) -> int:
        return self.released_total - self.completed - self.wip_at_horizon

    @property
    def throughput_per_hour(self) -> Fraction:
        return Fraction(self.delivered_total * US_PER_HOUR, self.horizon_us)

    def to_csv(self) -> str:
        rows: list[tuple[str, str, str, str]] = [("metric", "entity", "value", "unit")]

        def add(metric, entity, value, unit):
            rows.append((metric, str(entity), str(value), unit))

        add("model", "run", self.model_name, "none")
        add("mode", "run", self.mode, "none")
        add("seed", "run", self.seed, "none")
        add("horizon", "run", self.horizon_us, "us")
        add("event_count", "run", self.stats.event_count, "count")
        for line in sorted(self.released):
            add("parts_released", line, self.released[line], "count")
        add("parts_released", "total", self.released_total, "count")
        for line in sorted(self.machined):
            add("parts_machined", line, self.machined[line], "count")
        add("parts_completed", "total", self.completed, "count")
        add("wip_at_horizon", "total", self.wip_at_horizon, "count")
        add("conservation_residual", "total", self.conservation_residual, "count")
        add("transfers_requested", "total", self.transfer_requests, "count")
        for (o, d) in sorted(self.delivered):
            add("transfers_delivered", f"{o}->{d}", self.delivered[(o, d)], "count")
        add("transfers_delivered", "total", self.delivered_total, "count")
        add("throughput", "transfers", f"{float(self.throughput_per_hour):.6f}", "per-hour")
        if self.latency_mean_us is not None:
            add("transfer_latency_mean", "transfers", round(float(self.latency_mean_us)), "us")
        if self.wait_mean_us is not None:
            add("transfer_wait_mean", "transfers", round(float(self.wait_mean_us)), "us")
        add("agv_utilization", "fleet", f"{float(self.agv_utilization):.6f}", "fraction")
        add("agv_utilization_frac", "fleet",
            f"{self.agv_utilization.numerator}/{self.agv_utilization.denominator}",
            "fraction")
        add("agv_busy", "fleet", self.agv_busy_us, "us")
        add("agv_approach", "fleet", self.agv_approach_us, "us")
        add("assembled", "assembly", self.assembled, "count")
        add("stored", "warehouse", self.stored, "count")
        for name in sorted(self.stats.resources):
            r = self.stats.resources[name]
            add("utilization", name, f"{float(r.utilization):.6f}", "fraction")
            add("utilization_frac", name,
                f"{r.utilization.numerator}/{r.utilization.denominator}", "fraction")
            add("queue_mean", name, f"{float(r.mean_queue_length):.6f}", "count")
        wip_series = self.stats.series.get("wip", [])
        add("wip_samples", "total", len(wip_series), "count")
        return "\n".join(",".join(r) for r in rows) + "\n"

    def trace_jsonl(self) -> str:
        return "\n".join(
            json.dumps(e, separators=(",", ":")) for e in self.trace
        ) + ("\n" if self.trace else "")


def check_for_deadlock(engine: Engine) -> None:
    """An empty calendar with parts still queued on resources is a deadlock;
    an empty calendar with demand exhausted and no waiters is just normal
    completion. Raises with the (waiter, resource, holders) wait graph."""
    stalled = engine.idle_resources_with_waiters()
    if engine._fel or not stalled:
        return
    graph = []
    for res in stalled:
        for who, _cb in res.queue:
            graph.append((who, res.name, tuple(res.holders)))
    raise DeadlockDetected(
        f"run stalled with unfinished resource waits: {[r.name for r in stalled]}",
        wait_graph=graph,
    )


def simulate(
    scenario: ExecutableScenario,
    engine_seed: int | None = None,
    horizon_us: int | None = None,
) -> SimReport:
    """Run a compiled scenario to its horizon and gather statistics, the
    event trace, and exact part accounting."""
    seed = scenario.seed if engine_seed is None else engine_seed
    horizon = scenario.horizon_us if horizon_us is None else horizon_us
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    engine = Engine(seed)
    run = _Run(scenario, engine, horizon)
    run.schedule_demand()
    stats = engine.run_until(horizon)
    check_for_deadlock(engine)

    if run.wip != run.structural_wip():
        raise RuntimeError("internal accounting error: WIP gauge diverged")

    agvs = run.transfer.agvs
    busy = sum(a.service_us + a.return_us for a in agvs)
    approach = sum(a.approach_us for a in agvs)
    fleet = len(agvs)
    latencies = [r.delivered_us - r.load_start_us for r in run.requests
                 if r.delivered_us is not None and r.load_start_us is not None]
    waits = [r.load_start_us - r.ready_us for r in run.requests
             if r.load_start_us is not None]
    return SimReport(
        model_name=scenario.model_name,
        mode=scenario.mode,
        seed=seed,
        horizon_us=horizon,
        stats=stats,
        trace=list(engine.trace),
        released=dict(run.released),
        machined=dict(run.machined),
        completed=run.completed,
        wip_at_horizon=run.wip,
        assembled=run.assembled,
        stored=run.stored,
        transfer_requests=len(run.requests),
        delivered=dict(run.delivered),
        latency_mean_us=(Fraction(sum(latencies), len(latencies)) if latencies else None),
        wait_mean_us=(Fraction(sum(waits), len(waits)) if waits else None),
        agv_utilization=Fraction(busy, fleet * horizon) if fleet else Fraction(0),
        agv_busy_us=busy,
        agv_approach_us=approach,
    )


# ---------------------------------------------------------------------------
# capacity estimation and mode comparison


@dataclass(frozen=True)
class CapacityEstimate:
    model_name: str
    demand_per_hour: dict[tuple[str, str], Fraction]
    busy_us: dict[tuple[str, str], int]
    required_agvs: int
    utilization: Fraction
    implied_throughput_per_hour: Fraction
    latency_us: dict[tuple[str, str], int]

    @property
    def latency_mean_us(self) -> Fraction | None:
        total_rate = sum(self.demand_per_hour.values())
        if not total_rate:
            return None
        weighted = sum(rate * self.latency_us[od]
                       for od, rate in self.demand_per_hour.items())
        return Fraction(weighted, total_rate)


def demand_rates(scenario: ExecutableScenario) -> dict[tuple[str, str], Fraction]:
    """Offered transfers per hour for each origin-destination pair, derived
    from the demand schedule and routing table."""
    rates: dict[tuple[str, str], Fraction] = {}
    for line in sorted(scenario.demand):
        dest_kind = scenario.routing.get(line)
        if dest_kind is None:
            continue
        dest = scenario.assembly.name if dest_kind == "assembly" else scenario.warehouse.name
        d = scenario.demand[line]
        if d.kind == "batch":
            rate = Fraction(d.count * US_PER_HOUR, scenario.horizon_us)
        else:
            rate = Fraction(US_PER_HOUR, d.interarrival_us)
            if d.limit is not None:
                rate = min(rate, Fraction(d.limit * US_PER_HOUR, scenario.horizon_us))
        rates[(line, dest)] = rates.get((line, dest), Fraction(0)) + rate
    return rates


def estimate_transfer_capacity(
    scenario: ExecutableScenario,
    demand_per_hour: dict[tuple[str, str], Fraction | int | float] | None = None,
) -> CapacityEstimate:
    """Utilization-based fleet sizing for the abstract transfer system.

    Per-transfer busy time is travel(origin, destination) plus the return
    travel to the home station plus load and unload handling; the required
    fleet is the ceiling of total offered busy time per hour of capacity.
    """
    if scenario.mode != "abstract" or not isinstance(scenario.transfer, AbstractTransfer):
        raise ModeMismatch("capacity estimation needs an abstract-mode scenario")
    t = scenario.transfer
    if demand_per_hour is None:
        rates = demand_rates(scenario)
    else:
        rates = {od: Fraction(str(r)) if isinstance(r, float) else Fraction(r)
                 for od, r in demand_per_hour.items()}
    busy: dict[tuple[str, str], int] = {}
    latency: dict[tuple[str, str], int] = {}
    for (o, d) in sorted(rates):
        busy[(o, d)] = (t.travel(o, d) + t.travel(d, t.home_station)
                        + t.load_us + t.unload_us)
        latency[(o, d)] = t.load_us + t.travel(o, d) + t.unload_us
    load_us_per_hour = sum(rates[od] * busy[od] for od in rates)
    required = math.ceil(load_us_per_hour / US_PER_HOUR) if load_us_per_hour else 0
    utilization = (Fraction(load_us_per_hour, required * US_PER_HOUR)
                   if required else Fraction(0))
    return CapacityEstimate(
        model_name=scenario.model_name,
        demand_per_hour=rates,
        busy_us=busy,
        required_agvs=required,
        utilization=utilization,
        implied_throughput_per_hour=sum(rates.values(), Fraction(0)),
        latency_us=latency,
    )


@dataclass(frozen=True)
class ComparisonRow:
    metric: str
    abstract_value: float
    detailed_value: float
    gap: float
    flagged: bool


@dataclass(frozen=True)
class ComparisonReport:
    model_name: str
    threshold: float
    rows: tuple[ComparisonRow, ...]

    @property
    def ok(self) -> bool:
        return not any(r.flagged for r in self.rows)

    def render(self) -> str:
        header = f"{'metric':<28}{'abstract':>14}{'detailed':>14}{'gap':>10}  flag"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            flag = "OVER" if r.flagged else "ok"
            lines.append(
                f"{r.metric:<28}{r.abstract_value:>14.4f}{r.detailed_value:>14.4f}"
                f"{r.gap:>10.4f}  {flag}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        rows = ["metric,abstract,detailed,gap,flagged"]
        for r in self.rows:
            rows.append(f"{r.metric},{r.abstract_value:.6f},{r.detailed_value:.6f},"
                        f"{r.gap:.6f},{int(r.flagged)}")
        return "\n".join(rows) + "\n"


def compare_modes(
    estimate: CapacityEstimate,
    detailed_report: SimReport,
    threshold: float = 0.10,
) -> ComparisonReport:
    """Line up the abstract capacity estimate against a detailed-mode run of
    the same model: throughput, fleet utilization, and pickup-to-delivery
    transfer latency, flagging relative gaps above the threshold."""
    if estimate.model_name != detailed_report.model_name:
        raise ModelMismatch(
            f"estimate is for {estimate.model_name!r}, report for "
            f"{detailed_report.model_name!r}"
        )

    def gap(a: float, d: float) -> float:
        if d == 0:
            return 0.0 if a == 0 else float("inf")
        return abs(a - d) / d

    rows = []
    a_thr = float(estimate.implied_throughput_per_hour)
    d_thr = float(detailed_report.throughput_per_hour)
    rows.append(ComparisonRow("throughput_per_hour", a_thr, d_thr,
                              gap(a_thr, d_thr), gap(a_thr, d_thr) > threshold))
    a_util = float(estimate.utilization)
    d_util = float(detailed_report.agv_utilization)
    rows.append(ComparisonRow("agv_utilization", a_util, d_util,
                              gap(a_util, d_util), gap(a_util, d_util) > threshold))
    a_lat = float(estimate.latency_mean_us or 0)
    d_lat = float(detailed_report.latency_mean_us or 0)
    rows.append(ComparisonRow("transfer_latency_us", a_lat, d_lat,
                              gap(a_lat, d_lat), gap(a_lat, d_lat) > threshold))
    return ComparisonReport(estimate.model_name, threshold, tuple(rows))
