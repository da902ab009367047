"""Compiling resolved content models into deterministic automata.

Sequences and choices go through occurrence expansion and the position
construction; the unique particle attribution check then runs on the
position automaton.  ``xs:all`` groups get a small bitmask automaton instead
of an expansion, since expanding all orders would be exponential.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Union

from . import automata
from .automata import EPSILON, NOTHING, Regex, Sym, TooLarge, alt, cat, opt, star
from .diagnostics import DEFAULT_LIMITS, NOWHERE, Code, Diagnostic, Limits, Loc
from .simpletypes import CompiledSimple, SimpleTypeRejected, compile_simple
from .xmlcore import QName
from .xsdmodel import (
    EmptyContent,
    RAll,
    RChoice,
    RComplex,
    RElem,
    ResolvedSchema,
    RParticle,
    RSequence,
    RSimple,
    RSimpleContent,
    SchemaRejected,
)

__all__ = [
    "ElemPos",
    "normalize_occurs",
    "ContentAutomaton",
    "AllAutomaton",
    "UpaViolation",
    "glushkov_compile",
    "check_upa",
    "CompiledAttr",
    "ElementOnly",
    "SimpleValued",
    "EmptyType",
    "CompiledType",
    "CompiledSchema",
    "compile_schema",
    "MAX_ALL_MEMBERS",
    "EDGE_FACTOR",
]

MAX_ALL_MEMBERS = 16
EDGE_FACTOR = 16  # transition budget per allowed state


@dataclass(frozen=True)
class ElemPos:
    """Payload of one element position: what it matches and where it came from."""

    symbol: str
    element: int
    pid: int
    loc: Loc = field(default=NOWHERE, compare=False)


def _occurs(body: Regex, lo: int, hi: int | None) -> Regex:
    if body == NOTHING:
        return EPSILON if lo == 0 else NOTHING
    if (lo, hi) == (1, 1) or body == EPSILON:
        return body
    parts: list[Regex] = [body] * lo
    if hi is None:
        parts.append(star(body))
    elif hi > lo:
        # p{0,k} as (p (p (...)?)?)?: nested, so only one copy is live at a time
        tail = opt(body)
        for _ in range(hi - lo - 1):
            tail = opt(cat((body, tail)))
        parts.append(tail)
    return cat(parts)


def normalize_occurs(p: RParticle, schema: ResolvedSchema) -> Regex:
    """Rewrite occurrence ranges into sequence, choice, optional and star.

    Copies of a particle share one subtree; the position analysis still
    gives every copy its own positions.
    """
    match p:
        case RElem(element, occurs, pid):
            name = str(schema.elements[element].name.local)
            return _occurs(Sym(ElemPos(name, element, pid, p.loc)), occurs.min, occurs.max)
        case RSequence(items, occurs):
            return _occurs(cat([normalize_occurs(i, schema) for i in items]), occurs.min, occurs.max)
        case RChoice(items, occurs):
            return _occurs(alt([normalize_occurs(i, schema) for i in items]), occurs.min, occurs.max)
        case RAll():
            raise TypeError("xs:all groups are compiled by AllAutomaton")
    raise TypeError(f"not a particle: {p!r}")


@dataclass(frozen=True)
class UpaViolation:
    state: int
    symbol: str
    first: ElemPos
    second: ElemPos

    def message(self, label: str) -> str:
        a, b = self.first.loc, self.second.loc
        where = "at the start" if self.state == 0 else "after one of its predecessors"
        if self.first.pid == self.second.pid:
            return (
                f"{label}: element {self.symbol} is ambiguous {where}; two repetitions of the "
                f"particle at {a.line}:{a.col} could both match"
            )
        return (
            f"{label}: element {self.symbol} is ambiguous {where}; particles at "
            f"{a.line}:{a.col} and {b.line}:{b.col} could both match"
        )


@dataclass(frozen=True)
class ContentAutomaton:
    """Deterministic view of a position automaton over element names."""

    positions: tuple[ElemPos | None, ...]
    follow: tuple[tuple[int, ...], ...]
    accepting: frozenset[int]
    transitions: Mapping[tuple[int, str], int]

    start = 0

    @property
    def state_count(self) -> int:
        return len(self.positions)

    def step(self, state: int, symbol: str) -> tuple[int, int] | None:
        """(next state, element declaration index), or None if ``symbol`` is not allowed."""
        nxt = self.transitions.get((state, symbol))
        if nxt is None:
            return None
        pos = self.positions[nxt]
        assert pos is not None
        return nxt, pos.element

    def is_accepting(self, state: int) -> bool:
        return state in self.accepting

    def expected(self, state: int) -> tuple[str, ...]:
        return tuple(sorted({self.positions[q].symbol for q in self.follow[state]}))  # type: ignore[union-attr]


@dataclass(frozen=True)
class AllAutomaton:
    """Each member at most once, in any order; the state is the set of members seen."""

    symbols: tuple[str, ...]
    elements: tuple[int, ...]
    required: int  # bitmask of members with minOccurs 1
    optional: bool  # the whole group may be absent

    start = 0

    @property
    def state_count(self) -> int:
        return 1 << len(self.symbols)

    def step(self, state: int, symbol: str) -> tuple[int, int] | None:
        try:
            i = self.symbols.index(symbol)
        except ValueError:
            return None
        bit = 1 << i
        if state & bit:
            return None
        return state | bit, self.elements[i]

    def is_accepting(self, state: int) -> bool:
        if state == 0 and self.optional:
            return True
        return state & self.required == self.required

    def expected(self, state: int) -> tuple[str, ...]:
        return tuple(sorted(s for i, s in enumerate(self.symbols) if not state & (1 << i)))


def glushkov_compile(tree: Regex, limits: Limits = DEFAULT_LIMITS) -> ContentAutomaton:
    """Position automaton of a normalized content model; raises TooLarge."""
    auto = automata.analyse(tree, limits.max_automaton_states, EDGE_FACTOR * limits.max_automaton_states)
    transitions: dict[tuple[int, str], int] = {}
    for q, targets in enumerate(auto.follow):
        for r in targets:
            transitions.setdefault((q, auto.payloads[r].symbol), r)
    return ContentAutomaton(auto.payloads, auto.follow, auto.accepting, MappingProxyType(transitions))


def check_upa(auto: ContentAutomaton) -> UpaViolation | None:
    """First state (in state order) offering one element name from two positions."""
    for q, targets in enumerate(auto.follow):
        seen: dict[str, ElemPos] = {}
        for r in targets:
            pos = auto.positions[r]
            assert pos is not None
            other = seen.get(pos.symbol)
            if other is not None:
                return UpaViolation(q, pos.symbol, other, pos)
            seen[pos.symbol] = pos
    return None


# --- whole schemas -------------------------------------------------------------------------


@dataclass(frozen=True)
class CompiledAttr:
    name: str
    required: bool
    simple: CompiledSimple
    label: str


@dataclass(frozen=True)
class ElementOnly:
    automaton: ContentAutomaton | AllAutomaton
    attributes: tuple[CompiledAttr, ...]
    label: str


@dataclass(frozen=True)
class SimpleValued:
    simple: CompiledSimple
    attributes: tuple[CompiledAttr, ...]
    label: str


@dataclass(frozen=True)
class EmptyType:
    attributes: tuple[CompiledAttr, ...]
    label: str


CompiledType = Union[ElementOnly, SimpleValued, EmptyType]


@dataclass(frozen=True)
class CompiledSchema:
    elements: tuple[tuple[QName, int], ...]  # (name, type index)
    types: tuple[CompiledType, ...]
    roots: Mapping[str, int]

    def root_type(self, local: str) -> tuple[int, CompiledType] | None:
        idx = self.roots.get(local)
        if idx is None:
            return None
        return idx, self.types[self.elements[idx][1]]


class _Compiler:
    def __init__(self, rs: ResolvedSchema, limits: Limits) -> None:
        self.rs = rs
        self.limits = limits
        self.errors: list[Diagnostic] = []
        self.simple: dict[int, CompiledSimple | None] = {}

    def simple_type(self, index: int) -> CompiledSimple | None:
        """Compile a simple type and its ancestors, reusing folded prefixes."""
        chain = []
        cur: int | None = index
        while cur is not None and cur not in self.simple:
            chain.append(cur)
            node = self.rs.types[cur]
            assert isinstance(node, RSimple)
            cur = node.parent
        parent = None if cur is None else self.simple[cur]
        failed = cur is not None and parent is None
        for i in reversed(chain):
            node = self.rs.types[i]
            assert isinstance(node, RSimple)
            if not failed:
                try:
                    parent = compile_simple(node.base, (node.facets,), self.limits, parent)
                except SimpleTypeRejected as exc:
                    self.errors.extend(exc.diagnostics)
                    failed = True
            self.simple[i] = None if failed else parent
        return self.simple[index]

    def attrs(self, ct: RComplex) -> tuple[CompiledAttr, ...]:
        out = []
        for a in ct.attributes:
            st = self.simple_type(a.simple)
            if st is not None:
                out.append(CompiledAttr(str(a.name.local), a.required, st, f"attribute {a.name}"))
        return tuple(out)

    def all_group(self, group: RAll, label: str, loc: Loc) -> AllAutomaton | None:
        k = len(group.items)
        if k > MAX_ALL_MEMBERS or (1 << k) > self.limits.max_automaton_states:
            self.errors.append(
                loc.diagnostic(Code.LIM006, f"{label}: xs:all with {k} members exceeds the automaton limit")
            )
            return None
        symbols: list[str] = []
        required = 0
        for i, item in enumerate(group.items):
            sym = str(self.rs.elements[item.element].name.local)
            if sym in symbols:
                first = group.items[symbols.index(sym)].loc
                self.errors.append(
                    item.loc.diagnostic(
                        Code.SCH004,
                        f"{label}: element {sym} appears twice in xs:all (also at {first.line}:{first.col})",
                    )
                )
                return None
            symbols.append(sym)
            if item.occurs.min >= 1:
                required |= 1 << i
        return AllAutomaton(tuple(symbols), tuple(i.element for i in group.items), required, group.occurs.min == 0)

    def content(self, p: RParticle, label: str, loc: Loc) -> ContentAutomaton | AllAutomaton | None:
        if isinstance(p, RAll):
            return self.all_group(p, label, p.loc)
        tree = normalize_occurs(p, self.rs)
        try:
            auto = glushkov_compile(tree, self.limits)
        except TooLarge as exc:
            self.errors.append(loc.diagnostic(Code.LIM006, f"{label}: content model {exc}"))
            return None
        bad = check_upa(auto)
        if bad is not None:
            self.errors.append(bad.second.loc.diagnostic(Code.SCH004, bad.message(label)))
            return None
        return auto

    def compile(self) -> CompiledSchema:
        types: list[CompiledType | None] = []
        for index, t in enumerate(self.rs.types):
            match t:
                case RSimple():
                    st = self.simple_type(index)
                    types.append(None if st is None else SimpleValued(st, (), t.label))
                case RComplex(content=EmptyContent()):
                    types.append(EmptyType(self.attrs(t), t.label))
                case RComplex(content=RSimpleContent(simple)):
                    st = self.simple_type(simple)
                    attrs = self.attrs(t)
                    types.append(None if st is None else SimpleValued(st, attrs, t.label))
                case RComplex():
                    auto = self.content(t.content, t.label, t.loc)  # type: ignore[arg-type]
                    attrs = self.attrs(t)
                    types.append(None if auto is None else ElementOnly(auto, attrs, t.label))
        if self.errors:
            raise SchemaRejected(self.errors)
        assert all(t is not None for t in types)
        return CompiledSchema(
            elements=tuple((e.name, e.type_index) for e in self.rs.elements),
            types=tuple(types),  # type: ignore[arg-type]
            roots=self.rs.roots,
        )


def compile_schema(rs: ResolvedSchema, limits: Limits = DEFAULT_LIMITS) -> CompiledSchema:
    """Compile every type; raises :class:`SchemaRejected` listing all failures."""
    return _Compiler(rs, limits).compile()
