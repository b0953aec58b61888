"""Sort kernel: sort sets with subsort partial orders, sort-set ranking, and
the sorted symbol alphabet.

Each sort set carries its own strict partial order (stored as the direct-edge
set, reachability memoized on demand). Orders of different sort sets are
mutually independent: a subsort query never crosses set boundaries. Sort sets
themselves may be ranked by a second partial order held on the system.

All values are immutable; update methods return new values.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from functools import cached_property

from .errors import (
    CycleIntroduced,
    DuplicateSortSet,
    InvalidIdentifier,
    UnknownSort,
    UnknownSortSet,
)

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*\Z")


def check_identifier(name: str, what: str = "identifier") -> str:
    if not isinstance(name, str) or not _IDENT_RE.match(name):
        raise InvalidIdentifier(f"{what} {name!r} must match [A-Za-z_][A-Za-z0-9_-]*")
    return name


@dataclass(frozen=True)
class SortSet:
    """A named set of sorts ordered by a sort-subsort hierarchy.

    Only direct edges are stored; self-edges and cycle-inducing edges are
    rejected at declaration, so the stored relation stays a strict order and
    reflexivity lives in the query.
    """

    name: str
    sorts: frozenset[str] = frozenset()
    subsort_edges: frozenset[tuple[str, str]] = frozenset()

    @cached_property
    def _supersorts(self) -> dict[str, frozenset[str]]:
        """Reflexive-transitive up-sets, computed on demand and memoized."""
        direct: dict[str, set[str]] = {s: set() for s in self.sorts}
        for sub, sup in self.subsort_edges:
            direct[sub].add(sup)
        up: dict[str, frozenset[str]] = {}

        def climb(s: str) -> frozenset[str]:
            if s in up:
                return up[s]
            seen = {s}
            stack = list(direct[s])
            while stack:
                t = stack.pop()
                if t not in seen:
                    seen.add(t)
                    stack.extend(direct[t])
            up[s] = frozenset(seen)
            return up[s]

        for s in self.sorts:
            climb(s)
        return up

    def with_sort(self, sort: str) -> "SortSet":
        check_identifier(sort, "sort")
        if sort in self.sorts:
            return self
        return replace(self, sorts=self.sorts | {sort})

    def with_subsort(self, sub: str, sup: str) -> "SortSet":
        """Add the edge sub <= sup, preserving acyclicity."""
        for s in (sub, sup):
            if s not in self.sorts:
                raise UnknownSort(f"sort {s!r} not declared in sort set {self.name!r}")
        if sub == sup:
            raise CycleIntroduced(
                f"self-edge {sub!r} <= {sub!r} rejected; reflexivity is implicit"
            )
        if sub in self._supersorts[sup]:
            raise CycleIntroduced(
                f"edge {sub!r} <= {sup!r} would close a cycle in sort set {self.name!r}"
            )
        if (sub, sup) in self.subsort_edges:
            return self
        return replace(self, subsort_edges=self.subsort_edges | {(sub, sup)})

    def is_subsort(self, t: str, t1: str) -> bool:
        """True iff t = t1 or t <= t1 via the transitive closure."""
        for s in (t, t1):
            if s not in self.sorts:
                raise UnknownSort(f"sort {s!r} not declared in sort set {self.name!r}")
        return t1 in self._supersorts[t]

    def supersorts(self, t: str) -> frozenset[str]:
        if t not in self.sorts:
            raise UnknownSort(f"sort {t!r} not declared in sort set {self.name!r}")
        return self._supersorts[t]

    def direct_supersorts(self, t: str) -> tuple[str, ...]:
        return tuple(sorted(sup for sub, sup in self.subsort_edges if sub == t))


@dataclass(frozen=True)
class SortSystem:
    """A named collection of sort sets plus a strict partial rank order
    over the set names."""

    sort_sets: dict[str, SortSet] = field(default_factory=dict)
    rank_edges: frozenset[tuple[str, str]] = frozenset()

    def declare_sort_set(self, name: str) -> "SortSystem":
        check_identifier(name, "sort set")
        if name in self.sort_sets:
            raise DuplicateSortSet(f"sort set {name!r} already declared")
        sets = dict(self.sort_sets)
        sets[name] = SortSet(name=name)
        return replace(self, sort_sets=sets)

    def sort_set(self, name: str) -> SortSet:
        try:
            return self.sort_sets[name]
        except KeyError:
            raise UnknownSortSet(f"no sort set named {name!r}") from None

    def _update(self, sort_set: SortSet) -> "SortSystem":
        sets = dict(self.sort_sets)
        sets[sort_set.name] = sort_set
        return replace(self, sort_sets=sets)

    def declare_sort(self, set_name: str, sort: str) -> "SortSystem":
        return self._update(self.sort_set(set_name).with_sort(sort))

    def declare_subsort(self, set_name: str, sub: str, sup: str) -> "SortSystem":
        return self._update(self.sort_set(set_name).with_subsort(sub, sup))

    def is_subsort(self, set_name: str, t: str, t1: str) -> bool:
        return self.sort_set(set_name).is_subsort(t, t1)

    def has_sort(self, set_name: str, sort: str) -> bool:
        return sort in self.sort_set(set_name).sorts

    def _ranked_above(self, name: str) -> set[str]:
        above = set()
        stack = [b for a, b in self.rank_edges if a == name]
        while stack:
            n = stack.pop()
            if n not in above:
                above.add(n)
                stack.extend(b for a, b in self.rank_edges if a == n)
        return above

    def rank_sort_sets(self, below: str, above: str) -> "SortSystem":
        """Rank one sort set under another; the rank relation stays a strict
        partial order."""
        for name in (below, above):
            if name not in self.sort_sets:
                raise UnknownSortSet(f"no sort set named {name!r}")
        if below == above or below in self._ranked_above(above):
            raise CycleIntroduced(
                f"ranking {below!r} < {above!r} would close a cycle"
            )
        if (below, above) in self.rank_edges:
            return self
        return replace(self, rank_edges=self.rank_edges | {(below, above)})

    def is_ranked_below(self, below: str, above: str) -> bool:
        for name in (below, above):
            if name not in self.sort_sets:
                raise UnknownSortSet(f"no sort set named {name!r}")
        return above in self._ranked_above(below)


@dataclass(frozen=True)
class Alphabet:
    """The terminological alphabet: symbol -> set of (sort set, sort)
    assignments. A symbol may carry many sorts, across sort sets."""

    symbols: dict[str, frozenset[tuple[str, str]]] = field(default_factory=dict)

    def assign(
        self,
        symbol: str,
        assignments: set[tuple[str, str]] | frozenset[tuple[str, str]],
        system: SortSystem,
    ) -> "Alphabet":
        """Merge sort assignments for a symbol; never removes existing ones."""
        check_identifier(symbol, "symbol")
        for set_name, sort in assignments:
            if sort not in system.sort_set(set_name).sorts:
                raise UnknownSort(
                    f"sort {sort!r} not declared in sort set {set_name!r}"
                )
        merged = self.symbols.get(symbol, frozenset()) | frozenset(assignments)
        table = dict(self.symbols)
        table[symbol] = merged
        return replace(self, symbols=table)

    def sorts_of(self, symbol: str) -> frozenset[tuple[str, str]]:
        return self.symbols.get(symbol, frozenset())
