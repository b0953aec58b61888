"""Ontological commitments and model verification.

A commitment binds a sort to required attribute shapes and predicates. A
model entity falls under a commitment when some sort in its result sequence
is a subsort of the commitment's target sort; matching is by sort, never by
entity name. Verification is explicitly partial: an empty report does not
certify validity, it only means no committed restriction was violated.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .entities import (
    Attribute,
    InformationModel,
    RuleExpr,
    check_wellformed,
    eval_rule,
)
from .errors import ModelNotWellFormed, SortSystemMismatch
from .sorts import SortSystem


@dataclass(frozen=True)
class Requirement:
    """One required attribute shape. name=None reads 'at least one attribute
    of this sort', which covers composite shapes such as a route needing a
    route element member."""

    name: str | None
    sort: str
    required: bool = True


@dataclass(frozen=True)
class Commitment:
    id: str
    applies_to: str
    requirements: tuple[Requirement, ...] = ()
    rules: tuple[RuleExpr, ...] = ()
    rationale: str = ""


@dataclass(frozen=True)
class Ontology:
    name: str
    commitments: tuple[Commitment, ...] = ()
    provenance: str = ""
    sort_system: SortSystem | None = None

    def __post_init__(self):
        ids = [c.id for c in self.commitments]
        if len(ids) != len(set(ids)):
            raise ValueError(f"ontology {self.name!r} has duplicate commitment ids")


@dataclass(frozen=True)
class Violation:
    commitment: str
    entity: str
    item: str
    detail: str

    def render(self) -> str:
        return f"{self.commitment}: entity {self.entity}: {self.item}: {self.detail}"


@dataclass(frozen=True)
class ViolationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def render(self) -> str:
        return "\n".join(v.render() for v in self.violations)

    def to_json(self) -> str:
        return json.dumps(
            [
                {
                    "commitment": v.commitment,
                    "entity": v.entity,
                    "item": v.item,
                    "detail": v.detail,
                }
                for v in self.violations
            ],
            indent=2,
        )


def _sort_leq(sort_set, sub: str, sup: str) -> bool:
    if sub not in sort_set.sorts or sup not in sort_set.sorts:
        return False
    return sort_set.is_subsort(sub, sup)


def verify_model(model: InformationModel, ontology: Ontology) -> ViolationReport:
    """Check every entity against every commitment whose target sort
    subsumes one of the entity's result sorts."""
    if ontology.sort_system is not None and ontology.sort_system != model.sort_system:
        raise SortSystemMismatch(
            f"ontology {ontology.name!r} was written against a different sort system"
        )
    wf = check_wellformed(model)
    if not wf.ok:
        raise ModelNotWellFormed(
            f"model {model.name!r} must be well-formed before verification:\n{wf.render()}"
        )
    sort_set = model.primary_set()
    out: list[Violation] = []
    for entity_name in sorted(model.entities):
        spec = model.entities[entity_name]
        attrs = spec.attr_map()
        for commitment in ontology.commitments:
            if not any(_sort_leq(sort_set, s, commitment.applies_to)
                       for s in spec.result_sort):
                continue
            for req in commitment.requirements:
                out.extend(_check_requirement(commitment, entity_name, attrs, req, sort_set))
            for i, rule in enumerate(commitment.rules):
                passed, detail = eval_rule(rule, attrs, sort_set)
                if not passed:
                    out.append(Violation(
                        commitment.id, entity_name, f"rule {i}",
                        detail or "commitment rule failed",
                    ))
    return ViolationReport(tuple(out))


def _check_requirement(commitment, entity_name, attrs: dict[str, Attribute],
                       req: Requirement, sort_set):
    if req.name is None:
        if any(_sort_leq(sort_set, a.sort, req.sort) for a in attrs.values()):
            return
        if req.required:
            yield Violation(commitment.id, entity_name, f"some {req.sort}",
                            f"no attribute of sort <= {req.sort}")
        return
    attr = attrs.get(req.name)
    if attr is None:
        if req.required:
            yield Violation(commitment.id, entity_name, f"missing {req.name}",
                            f"required attribute {req.name!r} absent")
        return
    if not _sort_leq(sort_set, attr.sort, req.sort):
        yield Violation(commitment.id, entity_name, f"wrong-sort {req.name}",
                        f"declared sort {attr.sort!r} is not <= {req.sort!r}")
