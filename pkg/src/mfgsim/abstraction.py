"""Abstraction, refinement, view projection, and abstract/detailed
coordination.

Abstraction rewrites an entity's attribute sorts upward along the subsort
order of one sort set; refinement rewrites downward and may expand an
attribute into several finer ones. Both keep the entity name, result sorts,
and rules fixed (rules are re-pointed when a merge renames attributes away).
Views project a model through a different sort set. Coordination checks the
attribute mappings between an abstract and a detailed model of the same
system.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .entities import (
    And,
    Attribute,
    AttrRef,
    Cmp,
    Collection,
    Diagnostic,
    EntityRef,
    EntitySpec,
    ExternalRef,
    Functor,
    FunctorFunction,
    InformationModel,
    Not,
    Or,
    Report,
    RuleExpr,
    check_wellformed,
    rule_attr_names,
    substitute_attrs,
)
from .errors import (
    ModelNotWellFormed,
    NotAbstracting,
    NotRefining,
    OrphanAttribute,
    UnmappedSort,
)
from .sorts import SortSet

MERGE_MODES = ("aggregate", "compose")


@dataclass(frozen=True)
class SortMapEntry:
    source: str
    target: str
    merged_name: str | None = None  # defaults to the lowercased target sort
    mode: str | None = None         # aggregate/compose merge many-to-one


@dataclass(frozen=True)
class SortMap:
    name: str
    sort_set: str
    direction: str  # "abstracting" | "refining"
    entries: tuple[SortMapEntry, ...] = ()

    def __post_init__(self):
        if self.direction not in ("abstracting", "refining"):
            raise ValueError(f"unknown map direction {self.direction!r}")
        sources = [e.source for e in self.entries]
        if len(sources) != len(set(sources)):
            raise ValueError(f"sort map {self.name!r} maps a sort twice")
        # entry order carries no meaning; keep one canonical order
        object.__setattr__(
            self, "entries",
            tuple(sorted(self.entries, key=lambda e: (e.source, e.target))),
        )

    def entry_for(self, sort: str) -> SortMapEntry | None:
        for e in self.entries:
            if e.source == sort:
                return e
        return None


def _validate_map(sort_map: SortMap, sort_set: SortSet, want: str) -> None:
    if sort_map.direction != want:
        exc = NotAbstracting if want == "abstracting" else NotRefining
        raise exc(f"map {sort_map.name!r} has direction {sort_map.direction!r}")
    for e in sort_map.entries:
        for s in (e.source, e.target):
            if s not in sort_set.sorts:
                raise UnmappedSort(
                    f"map {sort_map.name!r} names sort {s!r} outside set {sort_set.name!r}"
                )
        if want == "abstracting":
            if not sort_set.is_subsort(e.source, e.target):
                raise NotAbstracting(
                    f"{e.source!r} -> {e.target!r} does not climb the subsort order"
                )
        else:
            if not sort_set.is_subsort(e.target, e.source):
                raise NotRefining(
                    f"{e.source!r} -> {e.target!r} does not descend the subsort order"
                )


def abstract_entity(entity: EntitySpec, sort_map: SortMap, sort_set: SortSet) -> EntitySpec:
    """Produce the more abstract representation of an entity.

    Attribute sorts found in the map move to their target sorts; sorts not
    mentioned pass through unchanged. Attributes sent to the same target
    under an aggregate/compose entry merge into one collection-valued
    attribute; rules referencing merged-away names are re-pointed to the
    merged attribute.
    """
    _validate_map(sort_map, sort_set, "abstracting")
    new_attrs: list[Attribute] = []
    groups: dict[tuple[str, str], int] = {}  # (target sort, merged name) -> position
    rename: dict[str, str] = {}
    for attr in entity.attributes:
        entry = sort_map.entry_for(attr.sort)
        if entry is None:
            new_attrs.append(attr)
        elif entry.mode in MERGE_MODES:
            merged = entry.merged_name or entry.target.lower()
            key = (entry.target, merged)
            rename[attr.name] = merged
            if key in groups:
                slot = groups[key]
                old = new_attrs[slot]
                assert isinstance(old.value, Collection)
                new_attrs[slot] = replace(
                    old, value=Collection(old.value.items + (attr.value,))
                )
            else:
                groups[key] = len(new_attrs)
                new_attrs.append(
                    Attribute(merged, entry.target, Collection((attr.value,)))
                )
        else:
            new_attrs.append(replace(attr, sort=entry.target))
    names = [a.name for a in new_attrs]
    if len(names) != len(set(names)):
        raise NotAbstracting(
            f"merged attribute name collides with a kept attribute in {entity.name!r}"
        )
    rules = tuple(substitute_attrs(r, rename) for r in entity.rules)
    functor = _repoint_functor(entity.functor, rename)
    return replace(entity, attributes=tuple(new_attrs), rules=rules, functor=functor)


def _repoint_functor(functor: Functor | None, rename: dict[str, str]) -> Functor | None:
    if functor is None or not rename:
        return functor
    fns = []
    for fn in functor.functions:
        seen: list[str] = []
        for d in fn.domain_attrs:
            nd = rename.get(d, d)
            if nd not in seen:
                seen.append(nd)
        fns.append(FunctorFunction(fn.name, tuple(seen), fn.codomain_sort, fn.body))
    return Functor(functor.mode, tuple(fns))


def refine_entity(
    entity: EntitySpec,
    sort_map: SortMap,
    expansion: dict[str, tuple[Attribute, ...]],
    sort_set: SortSet,
) -> EntitySpec:
    """Produce the refined representation: expanded attributes are replaced
    by their finer parts, mapped sorts descend, everything else passes
    through. Name, result sorts, and rules stay fixed."""
    _validate_map(sort_map, sort_set, "refining")
    attr_names = {a.name for a in entity.attributes}
    for key in expansion:
        if key not in attr_names:
            raise ValueError(f"expansion names unknown attribute {key!r}")
    original_sorts = [a.sort for a in entity.attributes]

    def covered(sort: str) -> bool:
        if sort not in sort_set.sorts:
            return False
        return any(
            t in sort_set.sorts and sort_set.is_subsort(sort, t)
            for t in original_sorts
        )

    new_attrs: list[Attribute] = []
    for attr in entity.attributes:
        if attr.name in expansion:
            for rep in expansion[attr.name]:
                if not covered(rep.sort):
                    raise OrphanAttribute(
                        f"attribute {rep.name!r} at sort {rep.sort!r} has no covering "
                        f"original in {entity.name!r}"
                    )
                new_attrs.append(rep)
        else:
            entry = sort_map.entry_for(attr.sort)
            if entry is None:
                new_attrs.append(attr)
            else:
                new_attrs.append(replace(attr, sort=entry.target))
    return replace(entity, attributes=tuple(new_attrs))


# ---------------------------------------------------------------------------
# pair checks


def _cmp_attr_names(expr: RuleExpr) -> set[str]:
    """Attribute names appearing inside comparisons (collections cannot be
    compared, so re-pointed comparisons over merged attributes need review)."""
    out: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, Cmp):
            for side in (node.lhs, node.rhs):
                if isinstance(side, AttrRef):
                    out.add(side.name)
        elif isinstance(node, (And, Or)):
            stack.extend(node.items)
        elif isinstance(node, Not):
            stack.append(node.item)
    return out


def _cover_map(
    concrete: EntitySpec, abstract: EntitySpec, sort_set: SortSet
) -> tuple[dict[str, str], list[Diagnostic]]:
    """For each concrete attribute pick the abstract attribute that covers
    it: same name first, then a collection holding its value, then any
    attribute at a supersort."""
    diags: list[Diagnostic] = []
    abs_attrs = abstract.attr_map()
    mapping: dict[str, str] = {}
    for attr in concrete.attributes:
        if attr.sort not in sort_set.sorts:
            diags.append(Diagnostic(
                "unknown-sort", "error",
                f"sort {attr.sort!r} not in set {sort_set.name!r}",
                entity=concrete.name, attribute=attr.name))
            continue
        candidates = [
            b for b in abstract.attributes
            if b.sort in sort_set.sorts and sort_set.is_subsort(attr.sort, b.sort)
        ]
        chosen = None
        for b in candidates:
            if b.name == attr.name:
                chosen = b
                break
        if chosen is None:
            for b in candidates:
                if isinstance(b.value, Collection) and attr.value in b.value.items:
                    chosen = b
                    break
        if chosen is None and candidates:
            chosen = candidates[0]
        if chosen is None:
            diags.append(Diagnostic(
                "uncovered-attribute", "error",
                f"no abstract attribute covers {attr.name!r} at sort {attr.sort!r}",
                entity=concrete.name, attribute=attr.name))
        else:
            mapping[attr.name] = chosen.name
    return mapping, diags


def check_abstraction_pair(
    concrete: EntitySpec, abstract: EntitySpec, sort_set: SortSet
) -> Report:
    """Passes iff names and result sorts match, every concrete attribute is
    covered by an abstract attribute at an equal or higher sort, and the
    rules agree up to merge re-pointing."""
    diags: list[Diagnostic] = []
    if concrete.name != abstract.name:
        diags.append(Diagnostic("name-mismatch", "error",
                                f"{concrete.name!r} vs {abstract.name!r}"))
    if concrete.result_sort != abstract.result_sort:
        diags.append(Diagnostic("result-sort-mismatch", "error",
                                f"{concrete.result_sort} vs {abstract.result_sort}",
                                entity=concrete.name))
    mapping, cover_diags = _cover_map(concrete, abstract, sort_set)
    diags.extend(cover_diags)

    abs_attr_values = abstract.attr_map()
    remaining = list(abstract.rules)
    for i, rule in enumerate(concrete.rules):
        candidates = (rule, substitute_attrs(rule, mapping))
        matched = None
        for cand in candidates:
            if cand in remaining:
                matched = cand
                break
        if matched is None:
            diags.append(Diagnostic("rule-missing", "error",
                                    "no abstract counterpart for a concrete rule",
                                    entity=concrete.name, rule_index=i))
            continue
        remaining.remove(matched)
        if matched != rule:
            touched = _cmp_attr_names(matched)
            if any(isinstance(getattr(abs_attr_values.get(n), "value", None), Collection)
                   for n in touched):
                diags.append(Diagnostic(
                    "rule-review", "warning",
                    "rule needs manual review: comparison re-pointed to a merged "
                    "collection attribute",
                    entity=concrete.name, rule_index=i))
    for _ in remaining:
        diags.append(Diagnostic("rule-extra", "error",
                                "abstract rule has no concrete counterpart",
                                entity=concrete.name))
    return Report(tuple(diags))


def check_refinement_pair(
    refined: EntitySpec, original: EntitySpec, sort_set: SortSet
) -> Report:
    """Passes iff names, result sorts, and rules match and every refined
    attribute sits at or below the sort of some original attribute."""
    diags: list[Diagnostic] = []
    if refined.name != original.name:
        diags.append(Diagnostic("name-mismatch", "error",
                                f"{refined.name!r} vs {original.name!r}"))
    if refined.result_sort != original.result_sort:
        diags.append(Diagnostic("result-sort-mismatch", "error",
                                f"{refined.result_sort} vs {original.result_sort}",
                                entity=refined.name))
    if refined.rules != original.rules:
        diags.append(Diagnostic("rule-mismatch", "error",
                                "refinement must keep the rules verbatim",
                                entity=refined.name))
    original_sorts = [a.sort for a in original.attributes]
    for attr in refined.attributes:
        ok = attr.sort in sort_set.sorts and any(
            t in sort_set.sorts and sort_set.is_subsort(attr.sort, t)
            for t in original_sorts
        )
        if not ok:
            diags.append(Diagnostic(
                "orphan-attribute", "error",
                f"attribute {attr.name!r} at sort {attr.sort!r} has no covering original",
                entity=refined.name, attribute=attr.name))
    return Report(tuple(diags))


# ---------------------------------------------------------------------------
# views


def _project_value(value, kept: set[str]):
    if isinstance(value, EntityRef) and value.target not in kept:
        return ExternalRef(value.target)
    if isinstance(value, Collection):
        return Collection(tuple(_project_value(v, kept) for v in value.items))
    return value




def project_view(model: InformationModel, view_sort_set: str) -> InformationModel:
    """Project a model through a view sort set: keep entities whose result
    sorts intersect the view, keep only attributes declared at view sorts,
    and replace references to dropped entities with external stand-ins."""
    view = model.sort_system.sort_set(view_sort_set)
    kept_names = {
        name for name, spec in model.entities.items()
        if any(s in view.sorts for s in spec.result_sort)
    }
    entities: dict[str, EntitySpec] = {}
    for name in model.entities:
        if name not in kept_names:
            continue
        spec = model.entities[name]
        attrs = tuple(
            replace(a, value=_project_value(a.value, kept_names))
            for a in spec.attributes
            if a.sort in view.sorts
        )
        attr_names = {a.name for a in attrs}
        # has() may probe absent attributes by design, so only comparison and
        # sort-test references decide whether a rule survives the projection
        rules = tuple(r for r in spec.rules
                      if rule_attr_names(r) <= attr_names)
        functor = None
        if spec.functor is not None:
            fns = tuple(
                fn for fn in spec.functor.functions
                if set(fn.domain_attrs) & attr_names and fn.codomain_sort in view.sorts
            )
            if fns:
                functor = Functor(spec.functor.mode, fns)
        entities[name] = replace(
            spec,
            result_sort=tuple(s for s in spec.result_sort if s in view.sorts),
            attributes=attrs,
            rules=rules,
            functor=functor,
        )
    return replace(
        model, primary_sort_set=view_sort_set, entities=entities
    )


def external_refs(model: InformationModel) -> tuple[tuple[str, str, str], ...]:
    """(entity, attribute, target) triples for every external stand-in a
    projection left behind."""
    out = []
    for name in sorted(model.entities):
        for attr in model.entities[name].attributes:
            stack = [attr.value]
            while stack:
                v = stack.pop()
                if isinstance(v, ExternalRef):
                    out.append((name, attr.name, v.target))
                elif isinstance(v, Collection):
                    stack.extend(v.items)
    return tuple(out)


# ---------------------------------------------------------------------------
# abstract/detailed coordination


@dataclass(frozen=True)
class ModePair:
    abstract: tuple[str, str]                  # (entity, attribute)
    detailed: tuple[tuple[str, str], ...]      # one or more (entity, attribute)
    mode: str


@dataclass(frozen=True)
class ModeMapping:
    name: str
    abstract_model: str
    detailed_model: str
    pairs: tuple[ModePair, ...] = ()


def coordinate_modes(
    abstract_model: InformationModel,
    detailed_model: InformationModel,
    mapping: ModeMapping,
) -> Report:
    """Check that the attribute mapping coordinates the two representations:
    each pair must climb the subsort order at the attribute level, and every
    abstract entity needs at least one pair. Detailed-only entities are
    reported as warnings, never errors."""
    for m in (abstract_model, detailed_model):
        wf = check_wellformed(m)
        if not wf.ok:
            raise ModelNotWellFormed(
                f"model {m.name!r} must be well-formed before coordination:\n{wf.render()}"
            )
    sort_set = abstract_model.primary_set()
    diags: list[Diagnostic] = []
    covered: set[str] = set()
    mentioned: set[str] = set()

    def resolve(model: InformationModel, path: tuple[str, str], side: str):
        ent, attr = path
        spec = model.entities.get(ent)
        if spec is None:
            diags.append(Diagnostic(
                f"unresolved-{side}", "error",
                f"no entity {ent!r} in model {model.name!r}"))
            return None
        found = spec.attr_map().get(attr)
        if found is None:
            diags.append(Diagnostic(
                f"unresolved-{side}", "error",
                f"entity {ent!r} has no attribute {attr!r}", entity=ent))
        return found

    for pair in mapping.pairs:
        abs_attr = resolve(abstract_model, pair.abstract, "abstract")
        if abs_attr is not None:
            covered.add(pair.abstract[0])
        for det_path in pair.detailed:
            det_attr = resolve(detailed_model, det_path, "detailed")
            mentioned.add(det_path[0])
            if abs_attr is None or det_attr is None:
                continue
            if (det_attr.sort not in sort_set.sorts
                    or abs_attr.sort not in sort_set.sorts
                    or not sort_set.is_subsort(det_attr.sort, abs_attr.sort)):
                diags.append(Diagnostic(
                    "not-abstracting-attribute", "error",
                    f"{det_path[0]}.{det_path[1]} at {det_attr.sort!r} does not refine "
                    f"{pair.abstract[0]}.{pair.abstract[1]} at {abs_attr.sort!r}",
                    entity=pair.abstract[0]))

    for name in sorted(abstract_model.entities):
        if name not in covered:
            diags.append(Diagnostic(
                "uncovered-abstract-entity", "error",
                f"abstract entity uncovered: {name}", entity=name))
    for name in sorted(detailed_model.entities):
        if name not in mentioned:
            diags.append(Diagnostic(
                "unmapped-detailed-entity", "warning",
                f"detailed entity has no abstract counterpart: {name}", entity=name))
    return Report(tuple(diags))
