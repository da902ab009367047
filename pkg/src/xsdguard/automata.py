"""Position (Glushkov) analysis of regular expression trees.

Both content models and value patterns are reduced to the five operators
below before analysis.  The analysis walks the tree with an explicit stack,
so deeply nested expressions cannot exhaust the interpreter stack, and it
aborts with :class:`TooLarge` as soon as a size budget is exceeded.

Subtrees may be shared: every visit of a :class:`Sym` creates a fresh
position, which is what occurrence expansion relies on.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Union

__all__ = [
    "Sym",
    "Cat",
    "Alt",
    "Opt",
    "Star",
    "Regex",
    "EPSILON",
    "NOTHING",
    "cat",
    "alt",
    "opt",
    "star",
    "TooLarge",
    "PositionAutomaton",
    "analyse",
    "count_positions",
]


@dataclass(frozen=True)
class Sym:
    payload: Any


@dataclass(frozen=True)
class Cat:
    items: tuple[Regex, ...]


@dataclass(frozen=True)
class Alt:
    items: tuple[Regex, ...]


@dataclass(frozen=True)
class Opt:
    item: Regex


@dataclass(frozen=True)
class Star:
    item: Regex


Regex = Union[Sym, Cat, Alt, Opt, Star]

EPSILON = Cat(())  # the empty word
NOTHING = Alt(())  # the empty language


# Smart constructors.  They keep the empty word and the empty language out
# of larger trees, so repeating something that has no positions costs
# nothing, however often it is copied.


def _is_eps(node: Regex) -> bool:
    return isinstance(node, Cat) and not node.items


def _is_nothing(node: Regex) -> bool:
    return isinstance(node, Alt) and not node.items


def cat(items: tuple[Regex, ...] | list[Regex]) -> Regex:
    if any(_is_nothing(i) for i in items):
        return NOTHING
    kept = tuple(i for i in items if not _is_eps(i))
    return kept[0] if len(kept) == 1 else Cat(kept)


def alt(items: tuple[Regex, ...] | list[Regex]) -> Regex:
    live = [i for i in items if not _is_nothing(i)]
    if not live:
        return NOTHING
    kept = tuple(i for i in live if not _is_eps(i))
    if not kept:
        return EPSILON
    body = kept[0] if len(kept) == 1 else Alt(kept)
    return opt(body) if len(kept) < len(live) else body


def opt(item: Regex) -> Regex:
    if _is_nothing(item) or _is_eps(item):
        return EPSILON
    return item if isinstance(item, (Opt, Star)) else Opt(item)


def star(item: Regex) -> Regex:
    if _is_nothing(item) or _is_eps(item):
        return EPSILON
    return Star(item.item) if isinstance(item, (Opt, Star)) else Star(item)


class TooLarge(Exception):
    def __init__(self, what: str, bound: int) -> None:
        super().__init__(f"{what} exceeds {bound}")
        self.what = what
        self.bound = bound


@dataclass(frozen=True)
class PositionAutomaton:
    """State 0 is the start state; states 1..n are positions.

    ``follow[0]`` is the first set, so every state is treated alike.  All
    sets are tuples in first-seen order, which is document order of the
    source expression.
    """

    payloads: tuple[Any, ...]  # payloads[0] is None
    nullable: bool
    follow: tuple[tuple[int, ...], ...]
    accepting: frozenset[int]

    @property
    def state_count(self) -> int:
        return len(self.payloads)


def count_positions(tree: Regex) -> int:
    """Number of positions ``analyse`` would create (shared subtrees counted per use)."""
    memo: dict[int, int] = {}
    stack: list[tuple[Regex, bool]] = [(tree, False)]
    while stack:
        node, done = stack.pop()
        if id(node) in memo:
            continue
        kids = _children(node)
        if done or not kids:
            memo[id(node)] = 1 if isinstance(node, Sym) else sum(memo[id(k)] for k in kids)
            continue
        stack.append((node, True))
        stack.extend((k, False) for k in kids)
    return memo[id(tree)]


def _children(node: Regex) -> tuple[Regex, ...]:
    match node:
        case Sym():
            return ()
        case Cat(items) | Alt(items):
            return items
        case Opt(item) | Star(item):
            return (item,)
    raise TypeError(f"not a regex node: {node!r}")


class _Join:
    """Disjoint union of two position sets, built in constant time."""

    __slots__ = ("left", "right")

    def __init__(self, left: PosSet, right: PosSet) -> None:
        self.left = left
        self.right = right


PosSet = Union[tuple[int, ...], _Join]


def _union(a: PosSet, b: PosSet) -> PosSet:
    # Sets met during the analysis come from disjoint subtrees.
    if a == ():
        return b
    if b == ():
        return a
    return _Join(a, b)


def _members(s: PosSet) -> list[int]:
    out: list[int] = []
    stack = [s]
    while stack:
        top = stack.pop()
        if isinstance(top, _Join):
            stack.append(top.right)
            stack.append(top.left)
        else:
            out.extend(top)
    return out


def analyse(tree: Regex, max_states: int, max_edges: int) -> PositionAutomaton:
    """Positions, follow sets and accepting states of ``tree``.

    Raises :class:`TooLarge` as soon as the positions, the follow edges or
    the node visits exceed their budgets (visits share the edge budget).
    """
    payloads: list[Any] = [None]
    follow: list[dict[int, None]] = [{}]
    edges = 0
    visits = 0

    def link(sources: PosSet, targets: PosSet) -> None:
        nonlocal edges
        if sources == () or targets == ():
            return
        fresh = dict.fromkeys(_members(targets))
        for p in _members(sources):
            f = follow[p]
            before = len(f)
            f.update(fresh)
            edges += len(f) - before
            if edges > max_edges:
                raise TooLarge("transition count", max_edges)

    # results: (nullable, first, last) per finished node, in visit order
    results: list[tuple[bool, PosSet, PosSet]] = []
    stack: list[tuple[Regex, bool]] = [(tree, False)]
    while stack:
        node, expanded = stack.pop()
        kids = _children(node)
        if not expanded:
            visits += 1
            if visits > max_edges:
                raise TooLarge("expression size", max_edges)
            if kids:
                stack.append((node, True))
                stack.extend((k, False) for k in reversed(kids))
                continue
        parts = results[len(results) - len(kids) :] if kids else []
        if kids:
            del results[len(results) - len(kids) :]
        match node:
            case Sym(payload):
                if len(payloads) >= max_states:
                    raise TooLarge("state count", max_states)
                payloads.append(payload)
                follow.append({})
                p = len(payloads) - 1
                results.append((False, (p,), (p,)))
            case Cat():
                nullable = True
                first: PosSet = ()
                last: PosSet = ()
                for n, f, l in parts:
                    link(last, f)
                    if nullable:
                        first = _union(first, f)
                    last = _union(last, l) if n else l
                    nullable = nullable and n
                results.append((nullable, first, last))
            case Alt():
                first, last = (), ()
                for _, f, l in parts:
                    first = _union(first, f)
                    last = _union(last, l)
                results.append((any(n for n, _, _ in parts), first, last))
            case Opt():
                _, f, l = parts[0]
                results.append((True, f, l))
            case Star():
                _, f, l = parts[0]
                link(l, f)
                results.append((True, f, l))
    nullable, first, last = results.pop()
    link((0,), first)
    accepting = frozenset(_members(last)) | ({0} if nullable else frozenset())
    return PositionAutomaton(
        payloads=tuple(payloads),
        nullable=nullable,
        follow=tuple(tuple(f) for f in follow),
        accepting=frozenset(accepting),
    )
