"""Workspace text language: parser and canonical printer.

One ``.mim`` file holds one workspace: sort sets, ranks, symbols,
ontologies, models, sort maps, expansions, mode mappings, and scenario
bindings. The grammar is keyword-introduced blocks with braces, comments
run ``//`` to end of line, and ``include "path";`` splices another file
(cycles rejected). Parsing either yields a workspace (with well-formedness
reports attached per model) or a list of diagnostics, never a partial
result.

Canonical printing orders blocks sort sets, ranks, symbols, ontologies,
models, sort maps, expansions, mode mappings, scenarios; entities print
alphabetically, indentation is two spaces, and ``parse(print(w))`` is
structurally equal to ``w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .abstraction import ModeMapping, ModePair, SortMap, SortMapEntry
from .entities import (
    And,
    Attribute,
    AttrRef,
    Cmp,
    Collection,
    DataParameter,
    EntityRef,
    EntitySpec,
    ExternalRef,
    Functor,
    FunctorFunction,
    Has,
    InformationModel,
    Lit,
    Not,
    Or,
    Report,
    RuleExpr,
    SortAtMost,
    check_wellformed,
)
from .errors import MfgsimError
from .ontology import Commitment, Ontology, Requirement
from .sorts import Alphabet, SortSystem

ENTITY_KIND_WORDS = ("object", "operation", "situation", "process")
FUNCTOR_MODE_WORDS = ("aggregate", "compose", "derive", "identity")
DURATION_UNITS = {"us": 1, "ms": 1000, "s": 1_000_000, "m": 60_000_000, "h": 3_600_000_000}


# ---------------------------------------------------------------------------
# supporting value types


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str
    message: str
    span: SourceSpan

    def render(self) -> str:
        s = self.span
        return f"{s.file}:{s.line}:{s.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class Demand:
    kind: str  # "every" | "exponential" | "batch"
    interarrival_us: int | None = None
    count: int | None = None
    limit: int | None = None

    def __post_init__(self):
        if self.kind not in ("every", "exponential", "batch"):
            raise ValueError(f"unknown demand kind {self.kind!r}")
        if self.kind == "batch":
            if self.count is None or self.count < 0:
                raise ValueError("batch demand needs a non-negative count")
        elif self.interarrival_us is None or self.interarrival_us < 1:
            raise ValueError(f"{self.kind} demand needs an interarrival of >= 1 us")
        if self.limit is not None and self.limit < 0:
            raise ValueError("demand limit cannot be negative")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    model: str
    mode: str = "abstract"
    horizon_us: int = 3_600_000_000
    seed: int = 0
    demand: dict[str, Demand] = field(default_factory=dict)
    routing: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in ("abstract", "detailed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.horizon_us <= 0:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class Expansion:
    name: str
    items: dict[tuple[str, str], tuple[Attribute, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Workspace:
    sort_system: SortSystem = field(default_factory=SortSystem)
    alphabet: Alphabet = field(default_factory=Alphabet)
    ontologies: dict[str, Ontology] = field(default_factory=dict)
    models: dict[str, InformationModel] = field(default_factory=dict)
    sort_maps: dict[str, SortMap] = field(default_factory=dict)
    expansions: dict[str, Expansion] = field(default_factory=dict)
    mode_mappings: dict[str, ModeMapping] = field(default_factory=dict)
    scenarios: dict[str, ScenarioConfig] = field(default_factory=dict)

    def model(self, name: str) -> InformationModel:
        if name not in self.models:
            raise MfgsimError(f"no model named {name!r} in workspace")
        return self.models[name]

    def scenario(self, name: str) -> ScenarioConfig:
        if name not in self.scenarios:
            raise MfgsimError(f"no scenario named {name!r} in workspace")
        return self.scenarios[name]

    def ontology(self, name: str) -> Ontology:
        if name not in self.ontologies:
            raise MfgsimError(f"no ontology named {name!r} in workspace")
        return self.ontologies[name]


@dataclass(frozen=True)
class ParseResult:
    workspace: Workspace | None
    diagnostics: tuple[ParseDiagnostic, ...] = ()
    model_reports: dict[str, Report] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.workspace is not None and not self.diagnostics


# ---------------------------------------------------------------------------
# lexer


@dataclass(frozen=True)
class _Token:
    kind: str  # ident, number, string, punct, eof
    text: str
    line: int
    col: int

    def span(self, file: str) -> SourceSpan:
        return SourceSpan(file, self.line, self.col, max(1, len(self.text)))


_PUNCT2 = ("->", "<-", "==", "!=", "<=")
_PUNCT1 = "{};:,.()[]</=-"


class _LexError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(message)
        self.line = line
        self.col = col


def _lex(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c == '"':
            j = i + 1
            buf = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    esc = text[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                elif text[j] == "\n":
                    raise _LexError("unterminated string", line, col)
                else:
                    buf.append(text[j])
                    j += 1
            if j >= n:
                raise _LexError("unterminated string", line, col)
            toks.append(_Token("string", "".join(buf), line, col))
            col += j + 1 - i
            i = j + 1
            continue
        if c.isdigit():
            j = i
            while j < n and (text[j].isdigit() or text[j] in ".eE+-"):
                # only consume +/- directly after an exponent marker
                if text[j] in "+-" and text[j - 1] not in "eE":
                    break
                j += 1
            toks.append(_Token("number", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_-"):
                j += 1
            toks.append(_Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        two = text[i:i + 2]
        if two in _PUNCT2:
            toks.append(_Token("punct", two, line, col))
            i += 2
            col += 2
            continue
        if c in _PUNCT1:
            toks.append(_Token("punct", c, line, col))
            i += 1
            col += 1
            continue
        raise _LexError(f"unexpected character {c!r}", line, col)
    toks.append(_Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# parser


class _ParseFail(Exception):
    def __init__(self, message: str, token: _Token):
        super().__init__(message)
        self.message = message
        self.token = token


class _Parser:
    """Recursive-descent parser producing raw block records; semantic
    assembly happens afterwards so block order in the file is free."""

    def __init__(self, text: str, file: str):
        self.file = file
        self.toks = _lex(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.toks[self.pos]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at_word(self, word: str) -> bool:
        t = self.peek()
        return t.kind == "ident" and t.text == word

    def eat_word(self, word: str) -> _Token:
        t = self.peek()
        if t.kind == "ident" and t.text == word:
            return self.next()
        raise _ParseFail(f"expected {word!r}", t)

    def eat_punct(self, p: str) -> _Token:
        t = self.peek()
        if t.kind == "punct" and t.text == p:
            return self.next()
        raise _ParseFail(f"expected {p!r}", t)

    def eat_ident(self, what: str = "identifier") -> _Token:
        t = self.peek()
        if t.kind == "ident":
            return self.next()
        raise _ParseFail(f"expected {what}", t)

    def eat_string(self) -> str:
        t = self.peek()
        if t.kind == "string":
            self.next()
            return t.text
        raise _ParseFail("expected string literal", t)

    def eat_int(self, what: str = "integer") -> int:
        neg = False
        if self.peek().kind == "punct" and self.peek().text == "-":
            self.next()
            neg = True
        t = self.peek()
        if t.kind != "number" or any(ch in t.text for ch in ".eE"):
            raise _ParseFail(f"expected {what}", t)
        self.next()
        v = int(t.text)
        return -v if neg else v

    # blocks -------------------------------------------------------------

    def parse_items(self, sink: "_RawWorkspace", include_stack: list[str]):
        while self.peek().kind != "eof":
            t = self.peek()
            if t.kind != "ident":
                raise _ParseFail("expected a block keyword", t)
            word = t.text
            if word == "include":
                self.next()
                rel = self.eat_string()
                self.eat_punct(";")
                _process_include(rel, t.span(self.file), sink, include_stack)
            elif word == "sortset":
                self.sortset(sink)
            elif word == "rank":
                self.next()
                below = self.eat_ident("sort set name")
                self.eat_punct("<")
                above = self.eat_ident("sort set name")
                self.eat_punct(";")
                sink.ranks.append((below.text, above.text, below.span(self.file)))
            elif word == "symbol":
                self.symbol(sink)
            elif word == "ontology":
                self.ontology(sink)
            elif word == "model":
                self.model(sink)
            elif word in ("abstractmap", "refinemap"):
                self.sortmap(sink, word)
            elif word == "modemapping":
                self.modemapping(sink)
            elif word == "expansion":
                self.expansion(sink)
            elif word == "scenario":
                self.scenario(sink)
            else:
                raise _ParseFail(f"unknown block keyword {word!r}", t)

    def sortset(self, sink):
        self.eat_word("sortset")
        name = self.eat_ident("sort set name")
        self.eat_punct("{")
        sorts: list[str] = []
        edges: list[tuple[str, str]] = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            self.eat_word("sort")
            s = self.eat_ident("sort name").text
            sorts.append(s)
            if self.peek().kind == "punct" and self.peek().text == "<":
                self.next()
                while True:
                    sup = self.eat_ident("sort name").text
                    edges.append((s, sup))
                    if self.peek().kind == "punct" and self.peek().text == ",":
                        self.next()
                        continue
                    break
            self.eat_punct(";")
        self.eat_punct("}")
        sink.sortsets.append((name.text, sorts, edges, name.span(self.file)))

    def symbol(self, sink):
        self.eat_word("symbol")
        name = self.eat_ident("symbol name")
        self.eat_punct(":")
        refs: list[tuple[str, str]] = []
        while True:
            s = self.eat_ident("sort set name").text
            self.eat_punct(".")
            refs.append((s, self.eat_ident("sort name").text))
            if self.peek().kind == "punct" and self.peek().text == ",":
                self.next()
                continue
            break
        self.eat_punct(";")
        sink.symbols.append((name.text, refs, name.span(self.file)))

    def ontology(self, sink):
        self.eat_word("ontology")
        name = self.eat_ident("ontology name")
        self.eat_punct("{")
        provenance = ""
        commitments = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            if self.at_word("provenance"):
                self.next()
                provenance = self.eat_string()
                self.eat_punct(";")
            elif self.at_word("commitment"):
                commitments.append(self.commitment())
            else:
                raise _ParseFail("expected 'provenance' or 'commitment'", self.peek())
        self.eat_punct("}")
        sink.ontologies.append((name.text, provenance, commitments, name.span(self.file)))

    def commitment(self) -> Commitment:
        self.eat_word("commitment")
        cid = self.eat_ident("commitment id").text
        self.eat_word("on")
        applies = self.eat_ident("sort name").text
        self.eat_punct("{")
        reqs: list[Requirement] = []
        rules: list[RuleExpr] = []
        rationale = ""
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            if self.at_word("requires") or self.at_word("optional"):
                required = self.next().text == "requires"
                if self.at_word("some"):
                    self.next()
                    sort = self.eat_ident("sort name").text
                    reqs.append(Requirement(None, sort, required))
                else:
                    attr = self.eat_ident("attribute name").text
                    self.eat_punct(":")
                    sort = self.eat_ident("sort name").text
                    reqs.append(Requirement(attr, sort, required))
                self.eat_punct(";")
            elif self.at_word("rule"):
                self.next()
                rules.append(self.rule_expr())
                self.eat_punct(";")
            elif self.at_word("rationale"):
                self.next()
                rationale = self.eat_string()
                self.eat_punct(";")
            else:
                raise _ParseFail(
                    "expected 'requires', 'optional', 'rule', or 'rationale'",
                    self.peek())
        self.eat_punct("}")
        return Commitment(cid, applies, tuple(reqs), tuple(rules), rationale)

    def model(self, sink):
        self.eat_word("model")
        name = self.eat_ident("model name")
        self.eat_word("in")
        sort_set = self.eat_ident("sort set name").text
        self.eat_punct("{")
        entities = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            entities.append(self.entity())
        self.eat_punct("}")
        sink.models.append((name.text, sort_set, entities, name.span(self.file)))

    def entity(self) -> EntitySpec:
        self.eat_word("entity")
        name_tok = self.eat_ident("entity name")
        self.eat_punct(":")
        sorts = [self.eat_ident("sort name").text]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.next()
            sorts.append(self.eat_ident("sort name").text)
        self.eat_word("kind")
        kind_tok = self.eat_ident("entity kind")
        if kind_tok.text not in ENTITY_KIND_WORDS:
            raise _ParseFail(f"unknown entity kind {kind_tok.text!r}", kind_tok)
        self.eat_punct("{")
        attrs: list[Attribute] = []
        rules: list[RuleExpr] = []
        functor: Functor | None = None
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            if self.at_word("attr"):
                attrs.append(self.attribute())
            elif self.at_word("functor"):
                if functor is not None:
                    raise _ParseFail("an entity carries at most one functor", self.peek())
                functor = self.functor()
            elif self.at_word("rule"):
                self.next()
                rules.append(self.rule_expr())
                self.eat_punct(";")
            else:
                raise _ParseFail("expected 'attr', 'functor', or 'rule'", self.peek())
        self.eat_punct("}")
        try:
            return EntitySpec(name_tok.text, kind_tok.text, tuple(sorts),
                              tuple(attrs), functor, tuple(rules))
        except ValueError as exc:
            raise _ParseFail(str(exc), name_tok) from None

    def attribute(self) -> Attribute:
        self.eat_word("attr")
        name = self.eat_ident("attribute name")
        self.eat_punct(":")
        sort = self.eat_ident("sort name").text
        self.eat_punct("=")
        value = self.value()
        self.eat_punct(";")
        try:
            return Attribute(name.text, sort, value)
        except ValueError as exc:
            raise _ParseFail(str(exc), name) from None

    def value(self):
        t = self.peek()
        if self.at_word("ref"):
            self.next()
            return EntityRef(self.eat_ident("entity name").text)
        if self.at_word("external"):
            self.next()
            return ExternalRef(self.eat_ident("entity name").text)
        if t.kind == "punct" and t.text == "[":
            self.next()
            items = []
            if not (self.peek().kind == "punct" and self.peek().text == "]"):
                items.append(self.value())
                while self.peek().kind == "punct" and self.peek().text == ",":
                    self.next()
                    items.append(self.value())
            self.eat_punct("]")
            return Collection(tuple(items))
        value, unit = self.literal()
        try:
            return DataParameter(value, unit)
        except ValueError as exc:
            raise _ParseFail(str(exc), t) from None

    def literal(self):
        """number [unit] | string | true | false; returns (value, unit)."""
        t = self.peek()
        if t.kind == "string":
            self.next()
            return t.text, "none"
        if self.at_word("true") or self.at_word("false"):
            self.next()
            return t.text == "true", "none"
        neg = False
        if t.kind == "punct" and t.text == "-":
            self.next()
            neg = True
            t = self.peek()
        if t.kind != "number":
            raise _ParseFail("expected a literal value", t)
        self.next()
        try:
            value = float(t.text) if any(c in t.text for c in ".eE") else int(t.text)
        except ValueError:
            raise _ParseFail(f"malformed number {t.text!r}", t) from None
        if neg:
            value = -value
        unit = "none"
        nxt = self.peek()
        # a following ident is a unit only when it names one; anything else
        # (e.g. 'and' inside a rule) belongs to the surrounding grammar
        if nxt.kind == "ident":
            if nxt.text == "m":
                self.next()
                if self.peek().kind == "punct" and self.peek().text == "/":
                    self.next()
                    s = self.eat_ident("unit")
                    if s.text != "s":
                        raise _ParseFail("expected unit 'm/s'", s)
                    unit = "m/s"
                else:
                    unit = "m"
            elif nxt.text in ("s", "count", "none"):
                self.next()
                unit = nxt.text
        return value, unit

    def functor(self) -> Functor:
        self.eat_word("functor")
        mode = self.eat_ident("functor mode")
        if mode.text not in FUNCTOR_MODE_WORDS:
            raise _ParseFail(f"unknown functor mode {mode.text!r}", mode)
        self.eat_punct("{")
        fns: list[FunctorFunction] = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            self.eat_word("fn")
            fname = self.eat_ident("function name").text
            self.eat_punct("(")
            domain = [self.eat_ident("attribute name").text]
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.next()
                domain.append(self.eat_ident("attribute name").text)
            self.eat_punct(")")
            self.eat_punct("->")
            codomain = self.eat_ident("sort name").text
            body = None
            if self.peek().kind == "punct" and self.peek().text == "=":
                self.next()
                parts = []
                while not (self.peek().kind == "punct" and self.peek().text == ";"):
                    if self.peek().kind == "eof":
                        raise _ParseFail("unterminated function body", self.peek())
                    tok = self.next()
                    parts.append(f'"{tok.text}"' if tok.kind == "string" else tok.text)
                body = " ".join(parts)
            self.eat_punct(";")
            fns.append(FunctorFunction(fname, tuple(domain), codomain, body))
        self.eat_punct("}")
        return Functor(mode.text, tuple(fns))

    # rule expressions ----------------------------------------------------

    def rule_expr(self) -> RuleExpr:
        items = [self.rule_and()]
        while self.at_word("or"):
            self.next()
            items.append(self.rule_and())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def rule_and(self) -> RuleExpr:
        items = [self.rule_not()]
        while self.at_word("and"):
            self.next()
            items.append(self.rule_not())
        return items[0] if len(items) == 1 else And(tuple(items))

    def rule_not(self) -> RuleExpr:
        if self.at_word("not"):
            self.next()
            return Not(self.rule_not())
        return self.rule_cmp()

    def rule_cmp(self) -> RuleExpr:
        t = self.peek()
        if t.kind == "punct" and t.text == "(":
            self.next()
            inner = self.rule_expr()
            self.eat_punct(")")
            return inner
        if self.at_word("has"):
            self.next()
            self.eat_punct("(")
            attr = self.eat_ident("attribute name").text
            self.eat_punct(")")
            return Has(attr)
        if self.at_word("sort_at_most"):
            self.next()
            self.eat_punct("(")
            attr = self.eat_ident("attribute name").text
            self.eat_punct(",")
            sort = self.eat_ident("sort name").text
            self.eat_punct(")")
            return SortAtMost(attr, sort)
        lhs = self.rule_atom()
        nxt = self.peek()
        if nxt.kind == "punct" and nxt.text in ("==", "!=", "<", "<="):
            self.next()
            rhs = self.rule_atom()
            return Cmp(nxt.text, lhs, rhs)
        return lhs

    def rule_atom(self) -> RuleExpr:
        t = self.peek()
        if t.kind == "ident" and t.text not in ("true", "false"):
            self.next()
            return AttrRef(t.text)
        value, unit = self.literal()
        return Lit(value, unit)

    # maps, mode mappings, expansions, scenarios ---------------------------

    def sortmap(self, sink, keyword: str):
        self.eat_word(keyword)
        name = self.eat_ident("map name")
        self.eat_word("in")
        sort_set = self.eat_ident("sort set name").text
        self.eat_punct("{")
        entries: list[SortMapEntry] = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            src = self.eat_ident("sort name").text
            self.eat_punct("->")
            dst = self.eat_ident("sort name").text
            merged = None
            mode = None
            if self.at_word("as"):
                self.next()
                merged = self.eat_ident("attribute name").text
            if self.peek().kind == "ident" and self.peek().text in FUNCTOR_MODE_WORDS:
                mode = self.next().text
            self.eat_punct(";")
            entries.append(SortMapEntry(src, dst, merged, mode))
        self.eat_punct("}")
        direction = "abstracting" if keyword == "abstractmap" else "refining"
        sink.sort_maps.append(
            (name.text, sort_set, direction, entries, name.span(self.file)))

    def path(self) -> tuple[str, str]:
        ent = self.eat_ident("entity name").text
        self.eat_punct(".")
        return ent, self.eat_ident("attribute name").text

    def modemapping(self, sink):
        self.eat_word("modemapping")
        name = self.eat_ident("mapping name")
        self.eat_punct("{")
        self.eat_word("abstract")
        abstract = self.eat_ident("model name").text
        self.eat_punct(";")
        self.eat_word("detailed")
        detailed = self.eat_ident("model name").text
        self.eat_punct(";")
        pairs: list[ModePair] = []
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            self.eat_word("pair")
            abs_path = self.path()
            self.eat_punct("<-")
            det_paths = [self.path()]
            while self.peek().kind == "punct" and self.peek().text == ",":
                self.next()
                det_paths.append(self.path())
            mode = self.eat_ident("mode")
            if mode.text not in FUNCTOR_MODE_WORDS:
                raise _ParseFail(f"unknown mode {mode.text!r}", mode)
            self.eat_punct(";")
            pairs.append(ModePair(abs_path, tuple(det_paths), mode.text))
        self.eat_punct("}")
        sink.mode_mappings.append(
            (name.text, abstract, detailed, pairs, name.span(self.file)))

    def expansion(self, sink):
        self.eat_word("expansion")
        name = self.eat_ident("expansion name")
        self.eat_punct("{")
        items: dict[tuple[str, str], tuple[Attribute, ...]] = {}
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            key = self.path()
            self.eat_punct("->")
            self.eat_punct("{")
            attrs: list[Attribute] = []
            while self.at_word("attr"):
                attrs.append(self.attribute())
            self.eat_punct("}")
            items[key] = tuple(attrs)
        self.eat_punct("}")
        sink.expansions.append((name.text, items, name.span(self.file)))

    def duration_us(self) -> int:
        t = self.peek()
        value = self.eat_int("duration")
        unit = self.eat_ident("duration unit")
        if unit.text not in DURATION_UNITS:
            raise _ParseFail(
                f"unknown duration unit {unit.text!r} (use us, ms, s, m, h)", unit)
        if value < 0:
            raise _ParseFail("durations cannot be negative", t)
        return value * DURATION_UNITS[unit.text]

    def scenario(self, sink):
        self.eat_word("scenario")
        name = self.eat_ident("scenario name")
        self.eat_punct("{")
        fields: dict = {"demand": {}, "routing": {}}
        while not (self.peek().kind == "punct" and self.peek().text == "}"):
            t = self.peek()
            if self.at_word("model"):
                self.next()
                fields["model"] = self.eat_ident("model name").text
                self.eat_punct(";")
            elif self.at_word("mode"):
                self.next()
                mode = self.eat_ident("mode")
                if mode.text not in ("abstract", "detailed"):
                    raise _ParseFail("mode must be 'abstract' or 'detailed'", mode)
                fields["mode"] = mode.text
                self.eat_punct(";")
            elif self.at_word("horizon"):
                self.next()
                fields["horizon_us"] = self.duration_us()
                self.eat_punct(";")
            elif self.at_word("seed"):
                self.next()
                fields["seed"] = self.eat_int("seed")
                self.eat_punct(";")
            elif self.at_word("demand"):
                self.next()
                line = self.eat_ident("line entity name").text
                spec = self.demand_spec()
                self.eat_punct(";")
                fields["demand"][line] = spec
            elif self.at_word("route"):
                self.next()
                line = self.eat_ident("line entity name").text
                self.eat_punct("->")
                dest = self.eat_ident("destination")
                if dest.text not in ("assembly", "warehouse"):
                    raise _ParseFail("route target must be 'assembly' or 'warehouse'", dest)
                fields["routing"][line] = dest.text
                self.eat_punct(";")
            else:
                raise _ParseFail("expected a scenario field", t)
        self.eat_punct("}")
        if "model" not in fields:
            raise _ParseFail(f"scenario {name.text!r} needs a model", name)
        sink.scenarios.append((name.text, fields, name.span(self.file)))

    def demand_spec(self) -> Demand:
        t = self.peek()
        try:
            if self.at_word("every") or self.at_word("exponential"):
                kind = self.next().text
                ia = self.duration_us()
                limit = None
                if self.at_word("limit"):
                    self.next()
                    limit = self.eat_int("limit")
                return Demand(kind, interarrival_us=ia, limit=limit)
            if self.at_word("batch"):
                self.next()
                return Demand("batch", count=self.eat_int("batch size"))
        except ValueError as exc:
            raise _ParseFail(str(exc), t) from None
        raise _ParseFail("expected 'every', 'exponential', or 'batch'", t)


# ---------------------------------------------------------------------------
# raw collection + includes + semantic assembly


class _RawWorkspace:
    def __init__(self):
        self.sortsets = []
        self.ranks = []
        self.symbols = []
        self.ontologies = []
        self.models = []
        self.sort_maps = []
        self.mode_mappings = []
        self.expansions = []
        self.scenarios = []


class _IncludeFail(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(message)
        self.message = message
        self.span = span


def _process_include(rel: str, span: SourceSpan, sink: _RawWorkspace,
                     include_stack: list[str]):
    base = Path(include_stack[-1]).parent if include_stack else Path.cwd()
    target = (base / rel).resolve()
    if str(target) in include_stack:
        raise _IncludeFail(f"include cycle through {rel!r}", span)
    try:
        text = target.read_text(encoding="utf-8")
    except OSError as exc:
        raise _IncludeFail(f"cannot read include {rel!r}: {exc}", span) from None
    try:
        parser = _Parser(text, str(target))
    except _LexError as exc:
        raise _IncludeFail(str(exc), SourceSpan(str(target), exc.line, exc.col, 1)) from None
    include_stack.append(str(target))
    try:
        parser.parse_items(sink, include_stack)
    except _ParseFail as exc:
        raise _IncludeFail(exc.message, exc.token.span(str(target))) from None
    finally:
        include_stack.pop()


def _sort_exists(system: SortSystem, sort: str) -> bool:
    return any(sort in ss.sorts for ss in system.sort_sets.values())


def _assemble(raw: _RawWorkspace, file: str) -> ParseResult:
    diags: list[ParseDiagnostic] = []

    def err(message: str, span: SourceSpan):
        diags.append(ParseDiagnostic("error", message, span))

    system = SortSystem()
    for name, sorts, edges, span in raw.sortsets:
        try:
            system = system.declare_sort_set(name)
            for s in sorts:
                system = system.declare_sort(name, s)
            for sub, sup in edges:
                system = system.declare_subsort(name, sub, sup)
        except MfgsimError as exc:
            err(str(exc), span)
    for below, above, span in raw.ranks:
        try:
            system = system.rank_sort_sets(below, above)
        except MfgsimError as exc:
            err(str(exc), span)

    alphabet = Alphabet()
    for name, refs, span in raw.symbols:
        try:
            alphabet = alphabet.assign(name, set(refs), system)
        except MfgsimError as exc:
            err(str(exc), span)

    ontologies: dict[str, Ontology] = {}
    for name, provenance, commitments, span in raw.ontologies:
        if name in ontologies:
            err(f"ontology {name!r} defined twice", span)
            continue
        for c in commitments:
            for s in [c.applies_to] + [r.sort for r in c.requirements]:
                if not _sort_exists(system, s):
                    err(f"commitment {c.id!r} references unknown sort {s!r}", span)
        try:
            ontologies[name] = Ontology(name, tuple(commitments), provenance, system)
        except ValueError as exc:
            err(str(exc), span)

    models: dict[str, InformationModel] = {}
    model_reports: dict[str, Report] = {}
    for name, sort_set, entities, span in raw.models:
        if name in models:
            err(f"model {name!r} defined twice", span)
            continue
        if sort_set not in system.sort_sets:
            err(f"model {name!r} names unknown sort set {sort_set!r}", span)
            continue
        model = InformationModel(name, sort_set, system, alphabet)
        try:
            for spec in entities:
                model = model.define_entity(spec)
        except MfgsimError as exc:
            err(str(exc), span)
            continue
        models[name] = model

    sort_maps: dict[str, SortMap] = {}
    for name, sort_set, direction, entries, span in raw.sort_maps:
        if name in sort_maps:
            err(f"sort map {name!r} defined twice", span)
            continue
        if sort_set not in system.sort_sets:
            err(f"map {name!r} names unknown sort set {sort_set!r}", span)
            continue
        try:
            sm = SortMap(name, sort_set, direction, tuple(entries))
        except ValueError as exc:
            err(str(exc), span)
            continue
        ss = system.sort_set(sort_set)
        for e in sm.entries:
            missing = [s for s in (e.source, e.target) if s not in ss.sorts]
            if missing:
                err(f"map {name!r} references unknown sorts {missing}", span)
                break
            ok = (ss.is_subsort(e.source, e.target) if direction == "abstracting"
                  else ss.is_subsort(e.target, e.source))
            if not ok:
                err(f"map {name!r}: {e.source!r} -> {e.target!r} violates the "
                    f"{direction} direction", span)
        else:
            sort_maps[name] = sm

    expansions: dict[str, Expansion] = {}
    for name, items, span in raw.expansions:
        if name in expansions:
            err(f"expansion {name!r} defined twice", span)
            continue
        expansions[name] = Expansion(name, items)

    mode_mappings: dict[str, ModeMapping] = {}
    for name, abstract, detailed, pairs, span in raw.mode_mappings:
        if name in mode_mappings:
            err(f"mode mapping {name!r} defined twice", span)
            continue
        for model_name in (abstract, detailed):
            if model_name not in models:
                err(f"mode mapping {name!r} names unknown model {model_name!r}", span)
        mode_mappings[name] = ModeMapping(name, abstract, detailed, tuple(pairs))

    scenarios: dict[str, ScenarioConfig] = {}
    for name, fields, span in raw.scenarios:
        if name in scenarios:
            err(f"scenario {name!r} defined twice", span)
            continue
        model_name = fields["model"]
        if model_name not in models:
            err(f"scenario {name!r} names unknown model {model_name!r}", span)
            continue
        model = models[model_name]
        for line in list(fields["demand"]) + list(fields["routing"]):
            if line not in model.entities:
                err(f"scenario {name!r} names unknown entity {line!r}", span)
        try:
            scenarios[name] = ScenarioConfig(
                name=name,
                model=model_name,
                mode=fields.get("mode", "abstract"),
                horizon_us=fields.get("horizon_us", 3_600_000_000),
                seed=fields.get("seed", 0),
                demand=fields["demand"],
                routing=fields["routing"],
            )
        except ValueError as exc:
            err(str(exc), span)

    if diags:
        return ParseResult(None, tuple(diags))
    for name, model in models.items():
        model_reports[name] = check_wellformed(model)
    ws = Workspace(system, alphabet, ontologies, models, sort_maps,
                   expansions, mode_mappings, scenarios)
    return ParseResult(ws, (), model_reports)


def parse(text: str, file: str = "<input>") -> ParseResult:
    """Parse workspace text. Returns the workspace with per-model
    well-formedness reports attached, or diagnostics; never both."""
    raw = _RawWorkspace()
    try:
        parser = _Parser(text, file)
    except _LexError as exc:
        span = SourceSpan(file, exc.line, exc.col, 1)
        return ParseResult(None, (ParseDiagnostic("error", str(exc), span),))
    try:
        parser.parse_items(raw, [str(Path(file).resolve())] if file != "<input>" else [])
    except _ParseFail as exc:
        return ParseResult(None, (ParseDiagnostic(
            "error", exc.message, exc.token.span(file)),))
    except _IncludeFail as exc:
        return ParseResult(None, (ParseDiagnostic("error", exc.message, exc.span),))
    return _assemble(raw, file)


def parse_file(path: str | Path) -> ParseResult:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        span = SourceSpan(str(p), 1, 1, 1)
        return ParseResult(None, (ParseDiagnostic("error", f"cannot read file: {exc}", span),))
    return parse(text, str(p))


# ---------------------------------------------------------------------------
# canonical printer


def _print_number(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v)


def _print_string(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _print_value(v) -> str:
    if isinstance(v, EntityRef):
        return f"ref {v.target}"
    if isinstance(v, ExternalRef):
        return f"external {v.target}"
    if isinstance(v, Collection):
        return "[" + ", ".join(_print_value(i) for i in v.items) + "]"
    if isinstance(v, DataParameter):
        if isinstance(v.value, str):
            return _print_string(v.value)
        text = _print_number(v.value)
        if v.unit != "none":
            text += f" {v.unit}"
        return text
    raise ValueError(f"unprintable value {v!r}")


_PREC = {Or: 1, And: 2, Not: 3}


def _print_rule(expr: RuleExpr, parent_prec: int = 0) -> str:
    if isinstance(expr, Lit):
        if isinstance(expr.value, str):
            return _print_string(expr.value)
        text = _print_number(expr.value)
        if expr.unit != "none":
            text += f" {expr.unit}"
        return text
    if isinstance(expr, AttrRef):
        return expr.name
    if isinstance(expr, Has):
        return f"has({expr.attr})"
    if isinstance(expr, SortAtMost):
        return f"sort_at_most({expr.attr}, {expr.sort})"
    if isinstance(expr, Cmp):
        return f"{_print_rule(expr.lhs, 5)} {expr.op} {_print_rule(expr.rhs, 5)}"
    if isinstance(expr, Not):
        inner = _print_rule(expr.item, _PREC[Not])
        return f"not {inner}"
    word = " or " if isinstance(expr, Or) else " and "
    prec = _PREC[type(expr)]
    parts = []
    for item in expr.items:
        rendered = _print_rule(item, prec)
        item_prec = _PREC.get(type(item), 5)
        if item_prec < prec or isinstance(item, (And, Or)):
            rendered = f"({rendered})"
        parts.append(rendered)
    text = word.join(parts)
    if prec < parent_prec:
        text = f"({text})"
    return text


def _print_duration(us: int) -> str:
    for unit in ("h", "m", "s", "ms", "us"):
        size = DURATION_UNITS[unit]
        if us % size == 0 and (us // size != 0 or unit == "us"):
            return f"{us // size}{unit}"
    return f"{us}us"


def _print_entity(spec: EntitySpec, out: list[str]):
    sorts = ", ".join(spec.result_sort)
    out.append(f"  entity {spec.name} : {sorts} kind {spec.kind} {{")
    for a in spec.attributes:
        out.append(f"    attr {a.name} : {a.sort} = {_print_value(a.value)};")
    if spec.functor is not None:
        out.append(f"    functor {spec.functor.mode} {{")
        for fn in spec.functor.functions:
            args = ", ".join(fn.domain_attrs)
            tail = f" = {fn.body}" if fn.body else ""
            out.append(f"      fn {fn.name}({args}) -> {fn.codomain_sort}{tail};")
        out.append("    }")
    for r in spec.rules:
        out.append(f"    rule {_print_rule(r)};")
    out.append("  }")


def print_workspace(ws: Workspace) -> str:
    """Render the canonical form; a fixed point of parse-then-print."""
    out: list[str] = []
    system = ws.sort_system
    for name in sorted(system.sort_sets):
        ss = system.sort_sets[name]
        out.append(f"sortset {name} {{")
        for s in sorted(ss.sorts):
            sups = ss.direct_supersorts(s)
            if sups:
                out.append(f"  sort {s} < {', '.join(sups)};")
            else:
                out.append(f"  sort {s};")
        out.append("}")
    for below, above in sorted(system.rank_edges):
        out.append(f"rank {below} < {above};")
    for symbol in sorted(ws.alphabet.symbols):
        refs = ", ".join(f"{s}.{t}" for s, t in sorted(ws.alphabet.symbols[symbol]))
        out.append(f"symbol {symbol} : {refs};")
    for name in sorted(ws.ontologies):
        onto = ws.ontologies[name]
        out.append(f"ontology {name} {{")
        if onto.provenance:
            out.append(f"  provenance {_print_string(onto.provenance)};")
        for c in onto.commitments:
            out.append(f"  commitment {c.id} on {c.applies_to} {{")
            for r in c.requirements:
                word = "requires" if r.required else "optional"
                if r.name is None:
                    out.append(f"    {word} some {r.sort};")
                else:
                    out.append(f"    {word} {r.name} : {r.sort};")
            for rule in c.rules:
                out.append(f"    rule {_print_rule(rule)};")
            if c.rationale:
                out.append(f"    rationale {_print_string(c.rationale)};")
            out.append("  }")
        out.append("}")
    for name in sorted(ws.models):
        model = ws.models[name]
        out.append(f"model {name} in {model.primary_sort_set} {{")
        for ename in sorted(model.entities):
            _print_entity(model.entities[ename], out)
        out.append("}")
    for name in sorted(ws.sort_maps):
        sm = ws.sort_maps[name]
        keyword = "abstractmap" if sm.direction == "abstracting" else "refinemap"
        out.append(f"{keyword} {name} in {sm.sort_set} {{")
        for e in sorted(sm.entries, key=lambda e: (e.source, e.target)):
            line = f"  {e.source} -> {e.target}"
            if e.merged_name:
                line += f" as {e.merged_name}"
            if e.mode:
                line += f" {e.mode}"
            out.append(line + ";")
        out.append("}")
    for name in sorted(ws.expansions):
        exp = ws.expansions[name]
        out.append(f"expansion {name} {{")
        for (ent, attr) in sorted(exp.items):
            out.append(f"  {ent}.{attr} -> {{")
            for a in exp.items[(ent, attr)]:
                out.append(f"    attr {a.name} : {a.sort} = {_print_value(a.value)};")
            out.append("  }")
        out.append("}")
    for name in sorted(ws.mode_mappings):
        mm = ws.mode_mappings[name]
        out.append(f"modemapping {name} {{")
        out.append(f"  abstract {mm.abstract_model};")
        out.append(f"  detailed {mm.detailed_model};")
        for pair in mm.pairs:
            dets = ", ".join(f"{e}.{a}" for e, a in pair.detailed)
            out.append(f"  pair {pair.abstract[0]}.{pair.abstract[1]} <- {dets} {pair.mode};")
        out.append("}")
    for name in sorted(ws.scenarios):
        sc = ws.scenarios[name]
        out.append(f"scenario {name} {{")
        out.append(f"  model {sc.model};")
        out.append(f"  mode {sc.mode};")
        out.append(f"  horizon {_print_duration(sc.horizon_us)};")
        out.append(f"  seed {sc.seed};")
        for line in sorted(sc.demand):
            d = sc.demand[line]
            if d.kind == "batch":
                out.append(f"  demand {line} batch {d.count};")
            else:
                text = f"  demand {line} {d.kind} {_print_duration(d.interarrival_us)}"
                if d.limit is not None:
                    text += f" limit {d.limit}"
                out.append(text + ";")
        for line in sorted(sc.routing):
            out.append(f"  route {line} -> {sc.routing[line]};")
        out.append("}")
    return "\n".join(out) + ("\n" if out else "")
