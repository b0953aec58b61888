"""Conceptual lattices over the entity x attribute-sort incidence.

The incidence relation pairs each entity with the (attribute name, declared
sort) pairs it carries. Concepts are the Galois-closed (extent, intent)
pairs; construction uses the NextClosure enumeration in lectic order, which
stays comfortably cheap at model scale.
"""

from __future__ import annotations

from dataclasses import dataclass

from .entities import InformationModel, ModelNotWellFormed, check_wellformed
from .errors import UnknownConcept

AttrSort = tuple[str, str]


@dataclass(frozen=True)
class Concept:
    extent: frozenset[str]
    intent: frozenset[AttrSort]


@dataclass(frozen=True)
class ConceptualLattice:
    """All formal concepts of the incidence plus the Hasse cover edges
    (subconcept index -> superconcept index). Concepts are ordered by
    descending extent size, then lexically, so equal lattices list concepts
    identically."""

    objects: tuple[str, ...]
    attributes: tuple[AttrSort, ...]
    concepts: tuple[Concept, ...]
    hasse_edges: frozenset[tuple[int, int]]

    @property
    def top(self) -> int:
        return 0

    @property
    def bottom(self) -> int:
        return len(self.concepts) - 1

    def index_of(self, extent: frozenset[str]) -> int:
        for i, c in enumerate(self.concepts):
            if c.extent == extent:
                return i
        raise UnknownConcept(f"no concept with extent {sorted(extent)}")

    def subsumes(self, c1: int, c2: int) -> bool:
        """True iff c2 lies at or below c1 (c1 reachable upward from c2)."""
        n = len(self.concepts)
        for c in (c1, c2):
            if not 0 <= c < n:
                raise UnknownConcept(f"concept index {c} out of range")
        if c1 == c2:
            return True
        seen = {c2}
        stack = [c2]
        while stack:
            cur = stack.pop()
            for sub, sup in self.hasse_edges:
                if sub == cur and sup not in seen:
                    if sup == c1:
                        return True
                    seen.add(sup)
                    stack.append(sup)
        return False

    def to_dot(self) -> str:
        lines = ["digraph lattice {", "  rankdir=BT;"]
        for i, c in enumerate(self.concepts):
            ext = ",".join(sorted(c.extent)) or "-"
            intent = ",".join(f"{a}:{s}" for a, s in sorted(c.intent)) or "-"
            lines.append(f'  c{i} [label="{{{ext}}}\\n{{{intent}}}"];')
        for sub, sup in sorted(self.hasse_edges):
            lines.append(f"  c{sub} -> c{sup};")
        lines.append("}")
        return "\n".join(lines) + "\n"

    def render(self) -> str:
        out = []
        for i, c in enumerate(self.concepts):
            ext = ", ".join(sorted(c.extent)) or "(none)"
            intent = ", ".join(f"{a}:{s}" for a, s in sorted(c.intent)) or "(none)"
            out.append(f"concept {i}: extent [{ext}] intent [{intent}]")
        for sub, sup in sorted(self.hasse_edges):
            out.append(f"cover: {sub} -> {sup}")
        return "\n".join(out) + "\n"


def model_incidence(model: InformationModel) -> dict[str, frozenset[AttrSort]]:
    return {
        name: frozenset((a.name, a.sort) for a in spec.attributes)
        for name, spec in model.entities.items()
    }


def _derive_extent(incidence: dict[str, frozenset[AttrSort]], intent: frozenset) -> frozenset:
    return frozenset(g for g, row in incidence.items() if intent <= row)


def _derive_intent(
    incidence: dict[str, frozenset[AttrSort]],
    attributes: frozenset[AttrSort],
    extent: frozenset,
) -> frozenset:
    rows = [incidence[g] for g in extent]
    common = set(attributes)
    for row in rows:
        common &= row
    return frozenset(common)


def lattice_from_incidence(incidence: dict[str, frozenset[AttrSort]]) -> ConceptualLattice:
    objects = tuple(sorted(incidence))
    attributes = tuple(sorted(set().union(*incidence.values()) if incidence else set()))
    attrs_all = frozenset(attributes)
    n = len(attributes)
    index = {m: i for i, m in enumerate(attributes)}

    def closure(intent: frozenset) -> frozenset:
        return _derive_intent(incidence, attrs_all, _derive_extent(incidence, intent))

    # NextClosure in lectic order over attribute indices
    intents: list[frozenset] = []
    current = closure(frozenset())
    intents.append(current)
    while current != attrs_all:
        cur_idx = {index[m] for m in current}
        for i in range(n - 1, -1, -1):
            if i in cur_idx:
                cur_idx.discard(i)
                continue
            candidate = frozenset(attributes[j] for j in cur_idx) | {attributes[i]}
            closed = closure(candidate)
            new = {index[m] for m in closed} - cur_idx
            if min(new) >= i:
                current = closed
                intents.append(current)
                break
        else:
            break

    concepts = [Concept(_derive_extent(incidence, it), it) for it in intents]
    concepts.sort(key=lambda c: (-len(c.extent), tuple(sorted(c.extent)),
                                 tuple(sorted(c.intent))))

    # Hasse cover edges: sub -> super with nothing strictly between
    edges = set()
    m = len(concepts)
    for i in range(m):
        for j in range(m):
            if i == j or not concepts[i].extent < concepts[j].extent:
                continue
            between = any(
                k not in (i, j)
                and concepts[i].extent < concepts[k].extent < concepts[j].extent
                for k in range(m)
            )
            if not between:
                edges.add((i, j))
    return ConceptualLattice(objects, attributes, tuple(concepts), frozenset(edges))


def build_conceptual_lattice(model: InformationModel) -> ConceptualLattice:
    report = check_wellformed(model)
    if not report.ok:
        raise ModelNotWellFormed(
            f"model {model.name!r} has errors:\n{report.render()}"
        )
    return lattice_from_incidence(model_incidence(model))


def lattice_subsumes(lattice: ConceptualLattice, c1: int, c2: int) -> bool:
    return lattice.subsumes(c1, c2)
