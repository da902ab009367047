"""The pattern-facet regular expression subset and its linear-time matcher.

Supported: literals, ``.``, single-character escapes, ``\\d \\w \\s`` and
their negations (ASCII only), bracketed classes with ranges and negation,
groups, alternation and the quantifiers ``? * + {n} {n,} {n,m}`` with bounds
up to 256.  Patterns always match the whole value.

Matching simulates the position automaton one character at a time over a
set of live positions; nothing ever backtracks.
"""
from __future__ import annotations

import functools
from bisect import bisect_right
from dataclasses import dataclass
from typing import Union

from . import automata
from .automata import TooLarge
from .diagnostics import DEFAULT_LIMITS, Code, Limits
from .securetext import SecureText

__all__ = [
    "Literal",
    "Class",
    "Seq",
    "Alt",
    "Rep",
    "Empty",
    "PatternAst",
    "PatternError",
    "parse_pattern",
    "match_pattern",
    "compile_pattern",
    "MAX_REPEAT",
]

MAX_REPEAT = 256
MAX_GROUP_DEPTH = 100
_MAX_CP = 0x10FFFF


@dataclass(frozen=True)
class Literal:
    char: str


@dataclass(frozen=True)
class Class:
    ranges: tuple[tuple[int, int], ...]
    negated: bool = False

    def matches(self, ch: str) -> bool:
        cp = ord(ch)
        i = bisect_right(self.ranges, (cp, _MAX_CP + 1)) - 1
        inside = i >= 0 and self.ranges[i][0] <= cp <= self.ranges[i][1]
        return inside != self.negated


@dataclass(frozen=True)
class Seq:
    items: tuple[PatternAst, ...]


@dataclass(frozen=True)
class Alt:
    options: tuple[PatternAst, ...]


@dataclass(frozen=True)
class Rep:
    node: PatternAst
    min: int
    max: int | None  # None is unbounded


@dataclass(frozen=True)
class Empty:
    pass


PatternAst = Union[Literal, Class, Seq, Alt, Rep, Empty]


class PatternError(Exception):
    def __init__(self, code: Code, position: int, message: str) -> None:
        super().__init__(f"{code.value} at {position}: {message}")
        self.code = code
        self.position = position
        self.message = message


def _normalize(ranges: list[tuple[int, int]]) -> tuple[tuple[int, int], ...]:
    out: list[tuple[int, int]] = []
    for lo, hi in sorted(ranges):
        if out and lo <= out[-1][1] + 1:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return tuple(out)


def _complement(ranges: tuple[tuple[int, int], ...]) -> tuple[tuple[int, int], ...]:
    out = []
    nxt = 0
    for lo, hi in ranges:
        if lo > nxt:
            out.append((nxt, lo - 1))
        nxt = hi + 1
    if nxt <= _MAX_CP:
        out.append((nxt, _MAX_CP))
    return tuple(out)


_DIGIT = ((0x30, 0x39),)
_WORD = _normalize([(0x30, 0x39), (0x41, 0x5A), (0x61, 0x7A), (0x5F, 0x5F)])
_SPACE = _normalize([(0x9, 0xA), (0xD, 0xD), (0x20, 0x20)])
_MULTI = {
    "d": (_DIGIT, False),
    "D": (_DIGIT, True),
    "w": (_WORD, False),
    "W": (_WORD, True),
    "s": (_SPACE, False),
    "S": (_SPACE, True),
}
_SINGLE = {
    "n": "\n", "r": "\r", "t": "\t", "\\": "\\", "|": "|", ".": ".", "?": "?", "*": "*",
    "+": "+", "(": "(", ")": ")", "{": "{", "}": "}", "-": "-", "[": "[", "]": "]", "^": "^",
}
_DOT = Class(((0xA, 0xA), (0xD, 0xD)), negated=True)
_META = set(".\\?*+{}()[]|")


class _PatternParser:
    def __init__(self, text: str) -> None:
        self.t = text
        self.i = 0
        self.depth = 0

    def error(self, message: str, at: int | None = None):
        raise PatternError(Code.PAT001, self.i if at is None else at, message)

    def peek(self) -> str | None:
        return self.t[self.i] if self.i < len(self.t) else None

    def parse(self) -> PatternAst:
        node = self.regexp()
        if self.i < len(self.t):
            self.error(f"unexpected {self.t[self.i]!r}")
        return node

    def regexp(self) -> PatternAst:
        branches = [self.branch()]
        while self.peek() == "|":
            self.i += 1
            branches.append(self.branch())
        return branches[0] if len(branches) == 1 else Alt(tuple(branches))

    def branch(self) -> PatternAst:
        items: list[PatternAst] = []
        while self.peek() is not None and self.peek() not in "|)":
            items.append(self.piece())
        if not items:
            return Empty()
        return items[0] if len(items) == 1 else Seq(tuple(items))

    def piece(self) -> PatternAst:
        atom = self.atom()
        c = self.peek()
        if c == "?":
            self.i += 1
            atom = Rep(atom, 0, 1)
        elif c == "*":
            self.i += 1
            atom = Rep(atom, 0, None)
        elif c == "+":
            self.i += 1
            atom = Rep(atom, 1, None)
        elif c == "{":
            atom = self.quantity(atom)
        if self.peek() is not None and self.peek() in "?*+{":
            self.error("a quantifier cannot follow a quantifier")
        return atom

    def number(self) -> int:
        start = self.i
        while self.peek() is not None and self.peek() in "0123456789":
            self.i += 1
        if self.i == start:
            self.error("expected a number")
        digits = self.t[start : self.i]
        if len(digits) > 4 or int(digits) > MAX_REPEAT:
            self.error(f"repetition bound above {MAX_REPEAT}", start)
        return int(digits)

    def quantity(self, atom: PatternAst) -> PatternAst:
        start = self.i
        self.i += 1
        lo = self.number()
        hi: int | None = lo
        if self.peek() == ",":
            self.i += 1
            hi = None if self.peek() == "}" else self.number()
        if self.peek() != "}":
            self.error("unterminated quantifier")
        self.i += 1
        if hi is not None and hi < lo:
            self.error("quantifier maximum below minimum", start)
        if hi == 0:
            return Empty()
        return Rep(atom, lo, hi)

    def atom(self) -> PatternAst:
        c = self.peek()
        if c == "(":
            start = self.i
            self.i += 1
            self.depth += 1
            if self.depth > MAX_GROUP_DEPTH:
                self.error("groups nested too deeply", start)
            node = self.regexp()
            if self.peek() != ")":
                self.error("unbalanced '('", start)
            self.i += 1
            self.depth -= 1
            return node
        if c == "[":
            return self.char_class()
        if c == ".":
            self.i += 1
            return _DOT
        if c == "\\":
            return self.escape(in_class=False)
        if c in _META:
            self.error(f"unescaped {c!r}")
        self.i += 1
        return Literal(c)

    def escape(self, in_class: bool) -> PatternAst:
        start = self.i
        self.i += 1
        c = self.peek()
        if c is None:
            self.error("dangling backslash", start)
        self.i += 1
        if c in _SINGLE:
            return Literal(_SINGLE[c])
        if c in _MULTI:
            ranges, negated = _MULTI[c]
            return Class(ranges, negated)
        return self.error(f"unsupported escape \\{c}", start)

    def class_char(self) -> int | Class:
        c = self.peek()
        if c is None:
            self.error("unterminated character class")
        if c == "\\":
            node = self.escape(in_class=True)
            return ord(node.char) if isinstance(node, Literal) else node
        if c in "[":
            self.error("nested or subtracted classes are not supported")
        self.i += 1
        return ord(c)

    def char_class(self) -> Class:
        start = self.i
        self.i += 1
        negated = False
        if self.peek() == "^":
            negated = True
            self.i += 1
        ranges: list[tuple[int, int]] = []
        first = True
        while True:
            c = self.peek()
            if c is None:
                self.error("unterminated character class", start)
            if c == "]" and not first:
                self.i += 1
                break
            if c == "]":
                self.error("empty character class", start)
            if c == "-" and not first and self.t.startswith("-[", self.i):
                self.error("class subtraction is not supported")
            if c == "-" and not first and not self.t.startswith("-]", self.i):
                self.error("'-' must be escaped inside a class unless first or last")
            range_start = self.i
            lo = self.class_char()
            first = False
            if isinstance(lo, Class):
                ranges.extend(_complement(lo.ranges) if lo.negated else lo.ranges)
                continue
            if self.peek() == "-" and not self.t.startswith("-]", self.i):
                self.i += 1
                if self.t.startswith("[", self.i):
                    self.error("class subtraction is not supported")
                hi = self.class_char()
                if isinstance(hi, Class):
                    self.error("a range cannot end with a multi-character escape", range_start)
                if hi < lo:
                    self.error("range end below range start", range_start)
                ranges.append((lo, hi))
            else:
                ranges.append((lo, lo))
        return Class(_normalize(ranges), negated)


def parse_pattern(text: SecureText | str, limits: Limits = DEFAULT_LIMITS) -> PatternAst:
    raw = str(text)
    if len(raw) > limits.max_pattern_length:
        raise PatternError(Code.LIM008, 0, f"pattern longer than {limits.max_pattern_length} characters")
    return _PatternParser(raw).parse()


def _to_regex(node: PatternAst) -> automata.Regex:
    match node:
        case Literal(char):
            return automata.Sym(Class(((ord(char), ord(char)),)))
        case Class():
            return automata.Sym(node)
        case Seq(items):
            return automata.cat([_to_regex(i) for i in items])
        case Alt(options):
            return automata.alt([_to_regex(o) for o in options])
        case Rep(inner, lo, hi):
            body = _to_regex(inner)
            if body == automata.EPSILON:
                return body
            parts: list[automata.Regex] = [body] * lo
            if hi is None:
                parts.append(automata.star(body))
            else:
                parts.extend([automata.opt(body)] * (hi - lo))
            return automata.cat(parts)
        case Empty():
            return automata.EPSILON
    raise TypeError(f"not a pattern node: {node!r}")


class CompiledPattern:
    """Position automaton of a pattern plus a bounded cache of state steps."""

    _CACHE_LIMIT = 4096

    def __init__(self, auto: automata.PositionAutomaton) -> None:
        self.auto = auto
        self._steps: dict[tuple[frozenset[int], str], frozenset[int]] = {}

    def step(self, live: frozenset[int], ch: str) -> frozenset[int]:
        key = (live, ch)
        nxt = self._steps.get(key)
        if nxt is None:
            payloads = self.auto.payloads
            follow = self.auto.follow
            nxt = frozenset(q for p in live for q in follow[p] if payloads[q].matches(ch))
            if len(self._steps) >= self._CACHE_LIMIT:
                self._steps.clear()
            self._steps[key] = nxt
        return nxt

    def fullmatch(self, value: str) -> bool:
        live = frozenset((0,))
        for ch in value:
            live = self.step(live, ch)
            if not live:
                return False
        return not live.isdisjoint(self.auto.accepting)


@functools.lru_cache(maxsize=256)
def _compile_cached(node: PatternAst, max_states: int) -> CompiledPattern:
    return CompiledPattern(automata.analyse(_to_regex(node), max_states, 4 * max_states))


def compile_pattern(node: PatternAst, limits: Limits = DEFAULT_LIMITS) -> CompiledPattern:
    try:
        return _compile_cached(node, limits.max_automaton_states)
    except TooLarge as exc:
        raise PatternError(Code.LIM008, 0, f"pattern expands beyond limits ({exc})") from None


def match_pattern(p: PatternAst, value: SecureText | str, limits: Limits = DEFAULT_LIMITS) -> bool:
    """True iff the whole ``value`` is in the language of ``p``."""
    return compile_pattern(p, limits).fullmatch(str(value))
