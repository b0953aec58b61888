"""Seeded generators and brute-force oracles shared by the test suite.

Everything takes an explicit random.Random so failures replay exactly.
The oracles deliberately recompute results from first principles (BFS
reachability, full-subset Galois closure) so they stay independent of the
implementation paths they check.
"""

from __future__ import annotations

import random

from mfgsim.abstraction import SortMap, SortMapEntry
from mfgsim.dsl import Demand, Expansion, ScenarioConfig, Workspace
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
)
from mfgsim.abstraction import ModeMapping, ModePair
from mfgsim.ontology import Commitment, Ontology, Requirement
from mfgsim.sorts import Alphabet, SortSystem


# ---------------------------------------------------------------------------
# independent reachability oracle


def reachable(edges: list[tuple[str, str]], start: str) -> set[str]:
    """BFS over raw (sub, super) pairs; reflexive."""
    seen = {start}
    frontier = [start]
    while frontier:
        node = frontier.pop()
        for a, b in edges:
            if a == node and b not in seen:
                seen.add(b)
                frontier.append(b)
    return seen


# ---------------------------------------------------------------------------
# random sort hierarchies


def gen_hierarchy(rng: random.Random, n_sorts: int = 8, n_edges: int = 10):
    """A sort set plus the shadow edge list of every edge that was accepted.

    Edge candidates are random ordered pairs, so cycle-inducing ones do
    occur; the caller sees which were rejected.
    """
    names = [f"T{i}" for i in range(n_sorts)]
    system = SortSystem().declare_sort_set("gen")
    for s in names:
        system = system.declare_sort("gen", s)
    accepted: list[tuple[str, str]] = []
    rejected: list[tuple[str, str]] = []
    for _ in range(n_edges):
        sub, sup = rng.choice(names), rng.choice(names)
        try:
            system = system.declare_subsort("gen", sub, sup)
            accepted.append((sub, sup))
        except Exception:
            rejected.append((sub, sup))
    return system, names, accepted, rejected


def acyclic_edges(rng: random.Random, names: list[str], density: float = 0.3):
    """Forest-style edges that only climb the name order, so never cyclic."""
    edges = []
    for i, sub in enumerate(names):
        for sup in names[i + 1:]:
            if rng.random() < density:
                edges.append((sub, sup))
    return edges


def gen_ordered_sort_set(rng: random.Random, n_sorts: int = 6):
    names = [f"T{i}" for i in range(n_sorts)]
    system = SortSystem().declare_sort_set("gen")
    for s in names:
        system = system.declare_sort("gen", s)
    edges = acyclic_edges(rng, names)
    for sub, sup in edges:
        system = system.declare_subsort("gen", sub, sup)
    return system.sort_set("gen"), names, edges


# ---------------------------------------------------------------------------
# random entities and abstraction maps


def _gen_value(rng: random.Random, entity_names: list[str]):
    roll = rng.random()
    if roll < 0.2 and entity_names:
        return EntityRef(rng.choice(entity_names))
    if roll < 0.3:
        return DataParameter(rng.choice(["idle", "busy", "spare"]))
    if roll < 0.4:
        return DataParameter(rng.random() < 0.5)
    unit = rng.choice(["none", "m", "m/s", "s", "count"])
    if rng.random() < 0.5:
        return DataParameter(rng.randrange(-50, 500), unit)
    return DataParameter(round(rng.uniform(-5, 50), 3), unit)


def gen_entity(rng: random.Random, sorts: list[str],
               entity_names: list[str] | None = None,
               name: str = "E0", min_attrs: int = 1) -> EntitySpec:
    n_attrs = rng.randint(min_attrs, 5)
    attrs = tuple(
        Attribute(f"a{i}", rng.choice(sorts), _gen_value(rng, entity_names or []))
        for i in range(n_attrs)
    )
    rules = []
    for _ in range(rng.randrange(3)):
        kind = rng.random()
        if kind < 0.4 and attrs:
            a = rng.choice(attrs)
            rules.append(Cmp(rng.choice(["==", "!=", "<", "<="]),
                             AttrRef(a.name), Lit(rng.randrange(100))))
        elif kind < 0.7 or not attrs:
            rules.append(Has(rng.choice([a.name for a in attrs] + ["phantom"])))
        else:
            a = rng.choice(attrs)
            rules.append(SortAtMost(a.name, rng.choice(sorts)))
    functor = None
    if attrs and rng.random() < 0.5:
        domain = tuple(sorted({rng.choice(attrs).name
                               for _ in range(rng.randint(1, 3))}))
        functor = Functor(rng.choice(["aggregate", "compose", "derive", "identity"]),
                          (FunctorFunction("f0", domain, rng.choice(sorts)),))
    return EntitySpec(name, rng.choice(["object", "operation", "situation", "process"]),
                      tuple(rng.sample(sorts, rng.randint(1, 2))),
                      attrs, functor, tuple(rules))


def gen_abstracting_map(rng: random.Random, sort_set, edges) -> SortMap:
    """Map a random subset of sorts to random strict supersorts; sorts with
    no supersort stay unmapped (implicit identity)."""
    entries = []
    used_merge_names = iter(f"m{i}" for i in range(100))
    for sort in sorted(sort_set.sorts):
        ups = sorted(reachable(edges, sort) - {sort})
        if not ups or rng.random() < 0.4:
            continue
        target = rng.choice(ups)
        if rng.random() < 0.4:
            entries.append(SortMapEntry(sort, target, next(used_merge_names), "aggregate"))
        else:
            entries.append(SortMapEntry(sort, target))
    return SortMap("up", sort_set.name, "abstracting", tuple(entries))


def gen_refining_map(rng: random.Random, sort_set, edges) -> SortMap:
    entries = []
    for sort in sorted(sort_set.sorts):
        downs = sorted(s for s in sort_set.sorts
                       if s != sort and sort in reachable(edges, s))
        if not downs or rng.random() < 0.4:
            continue
        entries.append(SortMapEntry(sort, rng.choice(downs)))
    return SortMap("down", sort_set.name, "refining", tuple(entries))


# ---------------------------------------------------------------------------
# random models


def gen_model(rng: random.Random, name: str = "gen_model",
              max_entities: int = 5) -> InformationModel:
    system = SortSystem().declare_sort_set("main").declare_sort_set("view")
    sorts = [f"T{i}" for i in range(6)]
    for s in sorts:
        system = system.declare_sort("main", s)
    for sub, sup in acyclic_edges(rng, sorts, 0.25):
        system = system.declare_subsort("main", sub, sup)
    # the view shares a subset of the sort names
    for s in rng.sample(sorts, rng.randint(1, 4)):
        system = system.declare_sort("view", s)
    model = InformationModel(name, "main", system)
    names: list[str] = []
    for i in range(rng.randrange(max_entities + 1)):
        spec = gen_entity(rng, sorts, names, name=f"E{i}", min_attrs=0)
        model = model.define_entity(spec)
        names.append(spec.name)
    return model


# ---------------------------------------------------------------------------
# brute-force formal-concept oracle


def fca_oracle(incidence: dict[str, frozenset]) -> tuple[set, set]:
    """All concepts and Hasse cover edges by full subset enumeration.

    Returns ({(extent, intent)}, {(sub_extent, super_extent)}) with
    frozenset members, comparable order-free against any construction.
    """
    attributes = sorted(set().union(*incidence.values()) if incidence else set())

    def derive_extent(intent):
        return frozenset(g for g, row in incidence.items() if intent <= row)

    def derive_intent(extent):
        common = set(attributes)
        for g in extent:
            common &= incidence[g]
        return frozenset(common)

    concepts = set()
    n = len(attributes)
    for mask in range(1 << n):
        intent = frozenset(attributes[i] for i in range(n) if mask & (1 << i))
        extent = derive_extent(intent)
        closed = derive_intent(extent)
        concepts.add((derive_extent(closed), closed))
    covers = set()
    extents = [c[0] for c in concepts]
    for sub in extents:
        for sup in extents:
            if not (sub < sup):
                continue
            if any(sub < mid < sup for mid in extents):
                continue
            covers.add((sub, sup))
    return concepts, covers


# ---------------------------------------------------------------------------
# random workspaces (for DSL round-trips)


_TEXT_POOL = ["fifo", "per shift", 'quote " inside', "back\\slash", "line\nbreak", ""]


def gen_workspace(rng: random.Random) -> Workspace:
    system = SortSystem()
    set_names = [f"set{i}" for i in range(rng.randint(1, 2))]
    sorts_per_set: dict[str, list[str]] = {}
    for sname in set_names:
        system = system.declare_sort_set(sname)
        sorts = [f"S{i}" for i in range(rng.randint(2, 6))]
        sorts_per_set[sname] = sorts
        for s in sorts:
            system = system.declare_sort(sname, s)
        for sub, sup in acyclic_edges(rng, sorts, 0.3):
            system = system.declare_subsort(sname, sub, sup)
    if len(set_names) == 2 and rng.random() < 0.5:
        system = system.rank_sort_sets(set_names[0], set_names[1])

    alphabet = Alphabet()
    for i in range(rng.randrange(3)):
        sname = rng.choice(set_names)
        assignments = {(sname, rng.choice(sorts_per_set[sname]))
                       for _ in range(rng.randint(1, 2))}
        alphabet = alphabet.assign(f"sym{i}", assignments, system)

    ontologies = {}
    for i in range(rng.randrange(2)):
        commitments = []
        for j in range(rng.randint(1, 2)):
            sname = rng.choice(set_names)
            sort = rng.choice(sorts_per_set[sname])
            reqs = []
            for k in range(rng.randrange(3)):
                if rng.random() < 0.3:
                    reqs.append(Requirement(None, sort, rng.random() < 0.8))
                else:
                    reqs.append(Requirement(f"a{k}", sort, rng.random() < 0.8))
            rules = ()
            if rng.random() < 0.5:
                rules = (Cmp("<=", AttrRef("a0"), Lit(rng.randrange(10))),)
            commitments.append(Commitment(f"c{i}_{j}", sort, tuple(reqs), rules,
                                          rng.choice(_TEXT_POOL)))
        ontologies[f"onto{i}"] = Ontology(f"onto{i}", tuple(commitments),
                                          rng.choice(_TEXT_POOL), system)

    models = {}
    model_entities: dict[str, list[str]] = {}
    for i in range(rng.randint(1, 2)):
        mname = f"model{i}"
        sname = rng.choice(set_names)
        model = InformationModel(mname, sname, system, alphabet)
        names: list[str] = []
        for j in range(rng.randrange(5)):
            spec = gen_entity(rng, sorts_per_set[sname], names, name=f"E{j}",
                              min_attrs=0)
            if rng.random() < 0.2 and spec.attributes:
                first = spec.attributes[0]
                coll = Collection((DataParameter(1), EntityRef(names[0])) if names
                                  else (DataParameter(1),))
                spec = EntitySpec(spec.name, spec.kind, spec.result_sort,
                                  (Attribute(first.name, first.sort, coll),)
                                  + spec.attributes[1:],
                                  spec.functor, spec.rules)
            model = model.define_entity(spec)
            names.append(spec.name)
        models[mname] = model
        model_entities[mname] = names

    sort_maps = {}
    for i in range(rng.randrange(2)):
        sname = rng.choice(set_names)
        sort_set = system.sort_set(sname)
        edges = list(sort_set.subsort_edges)
        if rng.random() < 0.5:
            sm = gen_abstracting_map(rng, sort_set, edges)
        else:
            sm = gen_refining_map(rng, sort_set, edges)
        if not sm.entries:  # identity fallback keeps the block non-trivial
            sm = SortMap(sm.name, sname, sm.direction,
                         (SortMapEntry(sorts_per_set[sname][0], sorts_per_set[sname][0]),))
        sort_maps[f"map{i}"] = SortMap(f"map{i}", sm.sort_set, sm.direction, sm.entries)

    expansions = {}
    if rng.random() < 0.5:
        items = {
            ("E0", "a0"): (
                Attribute("b0", rng.choice(sorts_per_set[set_names[0]]),
                          DataParameter(rng.randrange(10))),
            ),
        }
        expansions["exp0"] = Expansion("exp0", items)

    mode_mappings = {}
    if len(models) == 2 and rng.random() < 0.5:
        m0, m1 = sorted(models)
        mode_mappings["mm0"] = ModeMapping(
            "mm0", m0, m1,
            (ModePair(("E0", "a0"), (("E0", "a0"), ("E1", "a1")), "aggregate"),),
        )

    scenarios = {}
    for i in range(rng.randrange(3)):
        mname = rng.choice(sorted(models))
        entity_names = model_entities[mname]
        demand = {}
        routing = {}
        for ename in entity_names[:2]:
            roll = rng.random()
            if roll < 0.4:
                demand[ename] = Demand("every", interarrival_us=rng.randint(1, 10**7),
                                       limit=rng.choice([None, rng.randint(1, 9)]))
            elif roll < 0.6:
                demand[ename] = Demand("exponential",
                                       interarrival_us=rng.randint(1, 10**7))
            elif roll < 0.8:
                demand[ename] = Demand("batch", count=rng.randint(1, 50))
            if rng.random() < 0.6:
                routing[ename] = rng.choice(["assembly", "warehouse"])
        scenarios[f"sc{i}"] = ScenarioConfig(
            f"sc{i}", mname, rng.choice(["abstract", "detailed"]),
            rng.randint(1, 10**8), rng.randint(-5, 10**6), demand, routing)

    return Workspace(system, alphabet, ontologies, models, sort_maps,
                     expansions, mode_mappings, scenarios)
