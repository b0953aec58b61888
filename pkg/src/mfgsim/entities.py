"""Entity kernel: information entities and information models.

An entity couples a name, a kind, an ordered attribute list, a nonempty
result-sort sequence, an optional functor (a mode plus named functions over
the attributes), and application rules. A model is a named set of entities
over one sort system, with a primary sort set in which all declared sorts
must resolve.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import DuplicateEntity, ModelNotWellFormed, UnknownEntity
from .sorts import Alphabet, SortSet, SortSystem, check_identifier

ENTITY_KINDS = ("object", "operation", "situation", "process")
FUNCTOR_MODES = ("aggregate", "compose", "derive", "identity")
UNITS = ("m", "m/s", "s", "count", "none")


# ---------------------------------------------------------------------------
# attribute values


@dataclass(frozen=True)
class EntityRef:
    """Reference to another entity in the same model."""

    target: str


@dataclass(frozen=True)
class ExternalRef:
    """Opaque stand-in for a reference whose target was dropped by a view
    projection."""

    target: str


@dataclass(frozen=True)
class DataParameter:
    """A literal datum: number (optionally unit-tagged), text, or boolean."""

    value: int | float | str | bool
    unit: str = "none"

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}; expected one of {UNITS}")
        if not isinstance(self.value, (int, float)) and self.unit != "none":
            raise ValueError("only numeric parameters may carry a unit")


@dataclass(frozen=True)
class Collection:
    """An ordered collection value, produced when abstraction merges several
    attributes into one."""

    items: tuple = ()


AttributeValue = EntityRef | ExternalRef | DataParameter | Collection


@dataclass(frozen=True)
class Attribute:
    name: str
    sort: str
    value: AttributeValue

    def __post_init__(self):
        check_identifier(self.name, "attribute")


def as_fraction(param: DataParameter) -> Fraction:
    """Exact rational view of a numeric parameter (decimal reading of
    floats, so 0.1 means 1/10)."""
    v = param.value
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"parameter {param!r} is not numeric")
    if isinstance(v, int):
        return Fraction(v)
    return Fraction(str(v))


# ---------------------------------------------------------------------------
# rule expressions

CMP_OPS = ("==", "!=", "<", "<=")


@dataclass(frozen=True)
class Lit:
    value: int | float | str | bool
    unit: str = "none"


@dataclass(frozen=True)
class AttrRef:
    name: str


@dataclass(frozen=True)
class Cmp:
    op: str
    lhs: "RuleExpr"
    rhs: "RuleExpr"


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: "RuleExpr"


@dataclass(frozen=True)
class Has:
    attr: str


@dataclass(frozen=True)
class SortAtMost:
    attr: str
    sort: str


RuleExpr = Lit | AttrRef | Cmp | And | Or | Not | Has | SortAtMost


def rule_attr_names(expr: RuleExpr) -> set[str]:
    """Attribute names a rule's comparisons and sort tests reference.

    has(x) is excluded on purpose: its whole point is to test presence, so
    it may name attributes the entity does not declare.
    """
    out: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, AttrRef):
            out.add(node.name)
        elif isinstance(node, Cmp):
            stack.extend((node.lhs, node.rhs))
        elif isinstance(node, (And, Or)):
            stack.extend(node.items)
        elif isinstance(node, Not):
            stack.append(node.item)
        elif isinstance(node, SortAtMost):
            out.add(node.attr)
    return out


def substitute_attrs(expr: RuleExpr, mapping: dict[str, str]) -> RuleExpr:
    """Rewrite attribute references through a renaming map."""
    if isinstance(expr, AttrRef):
        return AttrRef(mapping.get(expr.name, expr.name))
    if isinstance(expr, Cmp):
        return Cmp(expr.op, substitute_attrs(expr.lhs, mapping),
                   substitute_attrs(expr.rhs, mapping))
    if isinstance(expr, And):
        return And(tuple(substitute_attrs(i, mapping) for i in expr.items))
    if isinstance(expr, Or):
        return Or(tuple(substitute_attrs(i, mapping) for i in expr.items))
    if isinstance(expr, Not):
        return Not(substitute_attrs(expr.item, mapping))
    if isinstance(expr, Has):
        return Has(mapping.get(expr.attr, expr.attr))
    if isinstance(expr, SortAtMost):
        return SortAtMost(mapping.get(expr.attr, expr.attr), expr.sort)
    return expr


class _RuleTypeError(Exception):
    pass


def _atom_value(expr: RuleExpr, attrs: dict[str, Attribute]):
    if isinstance(expr, Lit):
        return expr.value, expr.unit
    if isinstance(expr, AttrRef):
        attr = attrs.get(expr.name)
        if attr is None:
            raise _RuleTypeError(f"attribute {expr.name!r} not present")
        v = attr.value
        if isinstance(v, DataParameter):
            return v.value, v.unit
        if isinstance(v, (EntityRef, ExternalRef)):
            return v, "none"
        raise _RuleTypeError(f"attribute {expr.name!r} is a collection")
    raise _RuleTypeError("expected a literal or attribute reference")


def _compare(op: str, lv, lu: str, rv, ru: str) -> bool:
    refs = isinstance(lv, (EntityRef, ExternalRef)) or isinstance(rv, (EntityRef, ExternalRef))
    if refs:
        if op not in ("==", "!=") or type(lv) is not type(rv):
            raise _RuleTypeError("references support only ==/!= against references")
        res = lv.target == rv.target
        return res if op == "==" else not res
    lnum = isinstance(lv, (int, float)) and not isinstance(lv, bool)
    rnum = isinstance(rv, (int, float)) and not isinstance(rv, bool)
    if lnum and rnum:
        if lu != "none" and ru != "none" and lu != ru:
            raise _RuleTypeError(f"unit mismatch: {lu} vs {ru}")
        if op == "==":
            return lv == rv
        if op == "!=":
            return lv != rv
        if op == "<":
            return lv < rv
        return lv <= rv
    if type(lv) is not type(rv):
        raise _RuleTypeError(f"cannot compare {type(lv).__name__} with {type(rv).__name__}")
    if op in ("==", "!="):
        return (lv == rv) if op == "==" else (lv != rv)
    raise _RuleTypeError(f"ordering not defined on {type(lv).__name__}")


def eval_rule(
    expr: RuleExpr,
    attrs: dict[str, Attribute],
    sort_set: SortSet,
) -> tuple[bool, str | None]:
    """Evaluate one rule against an attribute environment.

    Returns (passed, detail); unresolvable comparisons come back as a
    failure carrying a type-error detail rather than raising.
    """
    try:
        return _eval(expr, attrs, sort_set), None
    except _RuleTypeError as exc:
        return False, f"type-error: {exc}"


def _eval(expr: RuleExpr, attrs: dict[str, Attribute], sort_set: SortSet) -> bool:
    if isinstance(expr, Lit):
        if isinstance(expr.value, bool):
            return expr.value
        raise _RuleTypeError("rule must be boolean-valued")
    if isinstance(expr, Cmp):
        lv, lu = _atom_value(expr.lhs, attrs)
        rv, ru = _atom_value(expr.rhs, attrs)
        return _compare(expr.op, lv, lu, rv, ru)
    if isinstance(expr, And):
        # strict evaluation so type errors surface regardless of position
        results = [_eval(i, attrs, sort_set) for i in expr.items]
        return all(results)
    if isinstance(expr, Or):
        results = [_eval(i, attrs, sort_set) for i in expr.items]
        return any(results)
    if isinstance(expr, Not):
        return not _eval(expr.item, attrs, sort_set)
    if isinstance(expr, Has):
        return expr.attr in attrs
    if isinstance(expr, SortAtMost):
        attr = attrs.get(expr.attr)
        if attr is None:
            return False
        if attr.sort not in sort_set.sorts or expr.sort not in sort_set.sorts:
            raise _RuleTypeError(
                f"sort {attr.sort!r} or {expr.sort!r} unknown in set {sort_set.name!r}"
            )
        return sort_set.is_subsort(attr.sort, expr.sort)
    raise _RuleTypeError("rule must be boolean-valued")


# ---------------------------------------------------------------------------
# entities and models


@dataclass(frozen=True)
class FunctorFunction:
    name: str
    domain_attrs: tuple[str, ...]
    codomain_sort: str
    body: str | None = None

    def __post_init__(self):
        check_identifier(self.name, "function")
        if not self.domain_attrs:
            raise ValueError(f"function {self.name!r} needs a nonempty domain")


@dataclass(frozen=True)
class Functor:
    mode: str
    functions: tuple[FunctorFunction, ...]

    def __post_init__(self):
        if self.mode not in FUNCTOR_MODES:
            raise ValueError(f"unknown functor mode {self.mode!r}")
        if not self.functions:
            raise ValueError("a functor carries at least one function")


@dataclass(frozen=True)
class EntitySpec:
    name: str
    kind: str
    result_sort: tuple[str, ...]
    attributes: tuple[Attribute, ...] = ()
    functor: Functor | None = None
    rules: tuple[RuleExpr, ...] = ()

    def __post_init__(self):
        check_identifier(self.name, "entity")
        if self.kind not in ENTITY_KINDS:
            raise ValueError(f"unknown entity kind {self.kind!r}")
        if not self.result_sort:
            raise ValueError(f"entity {self.name!r} needs a nonempty result sort")
        names = [a.name for a in self.attributes]
        if len(names) != len(set(names)):
            raise ValueError(f"entity {self.name!r} has duplicate attribute names")

    def attr_map(self) -> dict[str, Attribute]:
        return {a.name: a for a in self.attributes}


@dataclass(frozen=True)
class InformationModel:
    name: str
    primary_sort_set: str
    sort_system: SortSystem
    alphabet: Alphabet = field(default_factory=Alphabet)
    entities: dict[str, EntitySpec] = field(default_factory=dict)

    def define_entity(self, spec: EntitySpec) -> "InformationModel":
        if spec.name in self.entities:
            raise DuplicateEntity(f"entity {spec.name!r} already defined in {self.name!r}")
        table = dict(self.entities)
        table[spec.name] = spec
        return replace(self, entities=table)

    def entity(self, name: str) -> EntitySpec:
        try:
            return self.entities[name]
        except KeyError:
            raise UnknownEntity(f"no entity named {name!r} in model {self.name!r}") from None

    def primary_set(self) -> SortSet:
        return self.sort_system.sort_set(self.primary_sort_set)


# ---------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class Diagnostic:
    code: str
    severity: str
    message: str
    entity: str | None = None
    attribute: str | None = None
    rule_index: int | None = None

    def render(self) -> str:
        where = ""
        if self.entity:
            where += f" entity={self.entity}"
        if self.attribute:
            where += f" attr={self.attribute}"
        if self.rule_index is not None:
            where += f" rule={self.rule_index}"
        return f"{self.severity}: {self.code}:{where} {self.message}"


@dataclass(frozen=True)
class Report:
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def errors(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")

    @property
    def warnings(self) -> tuple[Diagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "warning")

    @property
    def ok(self) -> bool:
        return not self.errors

    def render(self) -> str:
        return "\n".join(d.render() for d in self.diagnostics)


def _ref_targets(value: AttributeValue):
    if isinstance(value, EntityRef):
        yield value.target
    elif isinstance(value, Collection):
        for item in value.items:
            yield from _ref_targets(item)


def check_wellformed(model: InformationModel) -> Report:
    """Static checks: references resolve, declared sorts exist, functor
    functions overlap the attribute list, rules reference declared
    attributes. Deterministic and independent of definition order."""
    diags: list[Diagnostic] = []
    sort_set = model.primary_set()

    def err(code, msg, **kw):
        diags.append(Diagnostic(code, "error", msg, **kw))

    def warn(code, msg, **kw):
        diags.append(Diagnostic(code, "warning", msg, **kw))

    for name in sorted(model.entities):
        spec = model.entities[name]
        attr_names = {a.name for a in spec.attributes}
        for s in spec.result_sort:
            if s not in sort_set.sorts:
                err("unknown-sort", f"result sort {s!r} not in set {sort_set.name!r}",
                    entity=name)
        for attr in spec.attributes:
            if attr.sort not in sort_set.sorts:
                err("unknown-sort", f"declared sort {attr.sort!r} not in set {sort_set.name!r}",
                    entity=name, attribute=attr.name)
            for target in _ref_targets(attr.value):
                if target not in model.entities:
                    err("dangling-ref", f"reference to undefined entity {target!r}",
                        entity=name, attribute=attr.name)
        if spec.functor is not None:
            for fn in spec.functor.functions:
                overlap = set(fn.domain_attrs) & attr_names
                if not overlap:
                    err("functor-overlap",
                        f"function {fn.name!r} shares no attribute with the entity",
                        entity=name)
                elif not set(fn.domain_attrs) <= attr_names:
                    extra = sorted(set(fn.domain_attrs) - attr_names)
                    warn("functor-domain",
                         f"function {fn.name!r} names symbols outside the attributes: {extra}",
                         entity=name)
        for i, rule in enumerate(spec.rules):
            missing = sorted(rule_attr_names(rule) - attr_names)
            if missing:
                err("rule-unknown-attr",
                    f"rule references undeclared attributes: {missing}",
                    entity=name, rule_index=i)
    return Report(tuple(diags))


@dataclass(frozen=True)
class RuleResult:
    rule_index: int
    passed: bool
    detail: str | None = None


def evaluate_rules(model: InformationModel, entity: str) -> tuple[RuleResult, ...]:
    """Evaluate an entity's application rules against its own attribute
    values. An entity with no rules always passes (empty result)."""
    spec = model.entity(entity)
    attrs = spec.attr_map()
    sort_set = model.primary_set()
    out = []
    for i, rule in enumerate(spec.rules):
        passed, detail = eval_rule(rule, attrs, sort_set)
        out.append(RuleResult(i, passed, detail))
    return tuple(out)


@dataclass(frozen=True)
class StructureGraph:
    """Entity-reference structure: one node per entity, one labeled edge per
    EntityRef attribute (collection members included)."""

    nodes: tuple[str, ...]
    edges: tuple[tuple[str, str, str], ...]  # (source, attribute label, target)

    def to_dot(self) -> str:
        lines = ["digraph model {"]
        for n in self.nodes:
            lines.append(f'  "{n}";')
        for src, label, dst in self.edges:
            lines.append(f'  "{src}" -> "{dst}" [label="{label}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def structure_graph(model: InformationModel) -> StructureGraph:
    report = check_wellformed(model)
    if not report.ok:
        raise ModelNotWellFormed(
            f"model {model.name!r} has {len(report.errors)} error(s):\n{report.render()}"
        )
    nodes = tuple(sorted(model.entities))
    edges = []
    for name in nodes:
        for attr in model.entities[name].attributes:
            for target in _ref_targets(attr.value):
                edges.append((name, attr.name, target))
    return StructureGraph(nodes, tuple(edges))
