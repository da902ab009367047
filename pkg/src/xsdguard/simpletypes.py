"""Built-in simple types, facets and the value-checking pipeline.

A value goes through whitespace handling, then a lexical parse into a
canonical value, then every facet.  Numbers and dates are compared exactly:
decimals as digit strings, instants as :class:`fractions.Fraction` seconds.
No floating point is involved anywhere.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .diagnostics import DEFAULT_LIMITS, NOWHERE, Code, Diagnostic, Limits, Loc
from .pattern import CompiledPattern, PatternError, compile_pattern, parse_pattern
from .securetext import SecureText

__all__ = [
    "BuiltinKind",
    "Length",
    "MinLength",
    "MaxLength",
    "Pattern",
    "Enumeration",
    "MinInclusive",
    "MaxInclusive",
    "MinExclusive",
    "MaxExclusive",
    "Facet",
    "Text",
    "Bool",
    "Int",
    "Dec",
    "Date",
    "DateTime",
    "CanonicalValue",
    "FacetViolation",
    "CompiledSimple",
    "SimpleTypeRejected",
    "compile_simple",
    "check_value",
    "parse_lexical",
    "compare_values",
    "whitespace",
]


class BuiltinKind(enum.Enum):
    STRING = "string"
    TOKEN = "token"
    BOOLEAN = "boolean"
    INTEGER = "integer"
    DECIMAL = "decimal"
    DATE = "date"
    DATETIME = "dateTime"
    ANYURI = "anyURI"

    @classmethod
    def from_xsd_name(cls, name: str) -> BuiltinKind | None:
        for kind in cls:
            if kind.value == name:
                return kind
        return None


# --- facets -----------------------------------------------------------------


@dataclass(frozen=True)
class Length:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class MinLength:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class MaxLength:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class Pattern:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class Enumeration:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class MinInclusive:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class MaxInclusive:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class MinExclusive:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class MaxExclusive:
    value: SecureText
    loc: Loc = field(default=NOWHERE, compare=False)


Facet = Union[Length, MinLength, MaxLength, Pattern, Enumeration, MinInclusive, MaxInclusive, MinExclusive, MaxExclusive]

FACET_NAMES: dict[str, type] = {
    "length": Length,
    "minLength": MinLength,
    "maxLength": MaxLength,
    "pattern": Pattern,
    "enumeration": Enumeration,
    "minInclusive": MinInclusive,
    "maxInclusive": MaxInclusive,
    "minExclusive": MinExclusive,
    "maxExclusive": MaxExclusive,
}
_FACET_XSD = {cls: name for name, cls in FACET_NAMES.items()}

_LENGTH_BASES = frozenset({BuiltinKind.STRING, BuiltinKind.TOKEN, BuiltinKind.ANYURI})
_ORDERED_BASES = frozenset({BuiltinKind.INTEGER, BuiltinKind.DECIMAL, BuiltinKind.DATE, BuiltinKind.DATETIME})


def facet_name(f: Facet) -> str:
    return _FACET_XSD[type(f)]


# --- canonical values ---------------------------------------------------------


@dataclass(frozen=True)
class Text:
    text: SecureText


@dataclass(frozen=True)
class Bool:
    value: bool


@dataclass(frozen=True)
class Int:
    """Arbitrary-precision integer kept as a digit string."""

    negative: bool
    digits: str

    @classmethod
    def from_int(cls, n: int) -> Int:
        return cls(n < 0, str(abs(n)))


@dataclass(frozen=True)
class Dec:
    """Decimal without trailing fraction zeros or leading integer zeros."""

    negative: bool
    int_digits: str
    frac_digits: str

    def as_fraction(self) -> Fraction:
        num = int(self.int_digits + self.frac_digits)
        value = Fraction(num, 10 ** len(self.frac_digits))
        return -value if self.negative else value


@dataclass(frozen=True)
class Date:
    year: int
    month: int
    day: int
    tz: int | None = None  # offset in minutes


@dataclass(frozen=True)
class DateTime:
    year: int
    month: int
    day: int
    hour: int
    minute: int
    second: int
    frac: str = ""  # fraction-of-second digits, trailing zeros removed
    tz: int | None = None


CanonicalValue = Union[Text, Bool, Int, Dec, Date, DateTime]


@dataclass(frozen=True)
class FacetViolation:
    facet: str  # "lexical", a facet name, or "indeterminate"
    message: str


# --- lexical spaces -----------------------------------------------------------

_INTEGER = re.compile(r"([+-]?)([0-9]+)")
_DECIMAL = re.compile(r"([+-]?)([0-9]*)(?:\.([0-9]*))?")
_TZ = r"(Z|[+-][0-9]{2}:[0-9]{2})?"
_DATE = re.compile(r"([0-9]{4,})-([0-9]{2})-([0-9]{2})" + _TZ)
_DATETIME = re.compile(r"([0-9]{4,})-([0-9]{2})-([0-9]{2})T([0-9]{2}):([0-9]{2}):([0-9]{2})(?:\.([0-9]+))?" + _TZ)
_COLLAPSE = re.compile("[ \t\n\r]+")


class _Lexical(ValueError):
    pass


def whitespace(kind: BuiltinKind, text: str) -> str:
    """Preserve for string, collapse for every other built-in."""
    match kind:
        case BuiltinKind.STRING:
            return text
        case (
            BuiltinKind.TOKEN
            | BuiltinKind.BOOLEAN
            | BuiltinKind.INTEGER
            | BuiltinKind.DECIMAL
            | BuiltinKind.DATE
            | BuiltinKind.DATETIME
            | BuiltinKind.ANYURI
        ):
            return _COLLAPSE.sub(" ", text).strip(" ")


def is_leap(year: int) -> bool:
    return year % 4 == 0 and (year % 100 != 0 or year % 400 == 0)


def days_in_month(year: int, month: int) -> int:
    if month == 2:
        return 29 if is_leap(year) else 28
    return 30 if month in (4, 6, 9, 11) else 31


def _year(text: str) -> int:
    if len(text) > 4 and text.startswith("0"):
        raise _Lexical("years beyond four digits cannot have leading zeros")
    if len(text) > 12:
        raise _Lexical("year out of range")
    year = int(text)
    if year == 0:
        raise _Lexical("year 0000 is not allowed")
    return year


def _ymd(y: str, m: str, d: str) -> tuple[int, int, int]:
    year, month, day = _year(y), int(m), int(d)
    if not 1 <= month <= 12:
        raise _Lexical(f"month {m} out of range")
    if not 1 <= day <= days_in_month(year, month):
        raise _Lexical(f"day {d} does not exist in {year:04d}-{month:02d}")
    return year, month, day


def _tz(text: str | None) -> int | None:
    if text is None:
        return None
    if text == "Z":
        return 0
    hours, minutes = int(text[1:3]), int(text[4:6])
    if minutes > 59 or hours > 14 or (hours == 14 and minutes != 0):
        raise _Lexical(f"timezone {text} out of range")
    offset = hours * 60 + minutes
    return -offset if text[0] == "-" else offset


def _civil_days(year: int, month: int, day: int) -> int:
    # Days since 1970-01-01 in the proleptic Gregorian calendar.
    y = year - (month <= 2)
    era = y // 400
    yoe = y - era * 400
    mp = (month + 9) % 12
    doy = (153 * mp + 2) // 5 + day - 1
    doe = yoe * 365 + yoe // 4 - yoe // 100 + doy
    return era * 146097 + doe - 719468


def _from_days(days: int) -> tuple[int, int, int]:
    z = days + 719468
    era = z // 146097
    doe = z - era * 146097
    yoe = (doe - doe // 1460 + doe // 36524 - doe // 146096) // 365
    doy = doe - (365 * yoe + yoe // 4 - yoe // 100)
    mp = (5 * doy + 2) // 153
    day = doy - (153 * mp + 2) // 5 + 1
    month = mp + 3 if mp < 10 else mp - 9
    return yoe + era * 400 + (month <= 2), month, day


def parse_lexical(kind: BuiltinKind, text: str) -> CanonicalValue:
    """Parse whitespace-processed ``text``; raises ValueError outside the lexical space."""
    match kind:
        case BuiltinKind.STRING | BuiltinKind.TOKEN | BuiltinKind.ANYURI:
            return Text(SecureText.of(text))
        case BuiltinKind.BOOLEAN:
            if text in ("true", "1"):
                return Bool(True)
            if text in ("false", "0"):
                return Bool(False)
            raise _Lexical("boolean must be one of true, false, 1, 0")
        case BuiltinKind.INTEGER:
            m = _INTEGER.fullmatch(text)
            if m is None:
                raise _Lexical("not an integer")
            digits = m.group(2).lstrip("0") or "0"
            return Int(m.group(1) == "-" and digits != "0", digits)
        case BuiltinKind.DECIMAL:
            m = _DECIMAL.fullmatch(text)
            if m is None or not (m.group(2) or m.group(3)):
                raise _Lexical("not a decimal")
            int_digits = m.group(2).lstrip("0") or "0"
            frac = (m.group(3) or "").rstrip("0")
            negative = m.group(1) == "-" and (int_digits != "0" or frac != "")
            return Dec(negative, int_digits, frac)
        case BuiltinKind.DATE:
            m = _DATE.fullmatch(text)
            if m is None:
                raise _Lexical("date must be YYYY-MM-DD with an optional timezone")
            return Date(*_ymd(m.group(1), m.group(2), m.group(3)), tz=_tz(m.group(4)))
        case BuiltinKind.DATETIME:
            m = _DATETIME.fullmatch(text)
            if m is None:
                raise _Lexical("dateTime must be YYYY-MM-DDThh:mm:ss with optional fraction and timezone")
            year, month, day = _ymd(m.group(1), m.group(2), m.group(3))
            hour, minute, second = int(m.group(4)), int(m.group(5)), int(m.group(6))
            frac = (m.group(7) or "").rstrip("0")
            tz = _tz(m.group(8))
            if hour == 24 and minute == 0 and second == 0 and frac == "":
                year, month, day = _from_days(_civil_days(year, month, day) + 1)
                hour = 0
            if hour > 23 or minute > 59 or second > 59:
                raise _Lexical("time of day out of range")
            return DateTime(year, month, day, hour, minute, second, frac, tz)
    raise TypeError(f"unknown built-in kind {kind!r}")


# --- ordering -------------------------------------------------------------------


def _cmp(a, b) -> int:
    return (a > b) - (a < b)


def _cmp_magnitude(ia: str, fa: str, ib: str, fb: str) -> int:
    if len(ia) != len(ib):
        return _cmp(len(ia), len(ib))
    if ia != ib:
        return _cmp(ia, ib)
    width = max(len(fa), len(fb))
    return _cmp(fa.ljust(width, "0"), fb.ljust(width, "0"))


def _cmp_signed(na: bool, ia: str, fa: str, nb: bool, ib: str, fb: str) -> int:
    if na != nb:
        return -1 if na else 1
    mag = _cmp_magnitude(ia, fa, ib, fb)
    return -mag if na else mag


def _instant(days: int, seconds: int, frac: str, tz: int | None) -> Fraction:
    total = Fraction(days * 86400 + seconds)
    if frac:
        total += Fraction(int(frac), 10 ** len(frac))
    if tz is not None:
        total -= tz * 60
    return total


def _date_instant(v: Date | DateTime) -> Fraction:
    days = _civil_days(v.year, v.month, v.day)
    match v:
        case Date():
            return _instant(days, 0, "", v.tz)
        case DateTime():
            return _instant(days, v.hour * 3600 + v.minute * 60 + v.second, v.frac, v.tz)
    raise TypeError(v)


def compare_values(a: CanonicalValue, b: CanonicalValue) -> int | None:
    """-1/0/1, or None when the order is indeterminate (timezoned vs naive)."""
    match a, b:
        case Int(), Int():
            return _cmp_signed(a.negative, a.digits, "", b.negative, b.digits, "")
        case Dec(), Dec():
            return _cmp_signed(a.negative, a.int_digits, a.frac_digits, b.negative, b.int_digits, b.frac_digits)
        case (Date() | DateTime()), (Date() | DateTime()):
            if (a.tz is None) != (b.tz is None):
                return None
            return _cmp(_date_instant(a), _date_instant(b))
        case Text(), Text():
            return _cmp(str(a.text), str(b.text))
        case Bool(), Bool():
            return _cmp(a.value, b.value)
    raise TypeError(f"values of different kinds: {a!r}, {b!r}")


# --- compilation ----------------------------------------------------------------


@dataclass(frozen=True)
class CompiledSimple:
    """Facets of every derivation step folded into directly checkable form.

    ``enumerations`` and ``patterns`` keep one entry per derivation step:
    within a step the alternatives are ORed, across steps they are ANDed.
    """

    base: BuiltinKind
    length: int | None = None
    min_length: int | None = None
    max_length: int | None = None
    enumerations: tuple[frozenset[str], ...] = ()
    patterns: tuple[tuple[tuple[str, CompiledPattern], ...], ...] = ()
    bounds: tuple[tuple[str, CanonicalValue, str], ...] = ()  # (facet name, value, source text)


class SimpleTypeRejected(Exception):
    def __init__(self, diagnostics: list[Diagnostic]) -> None:
        super().__init__("; ".join(f"{d.code.value}: {d.message}" for d in diagnostics))
        self.diagnostics = diagnostics


def _length_value(f: Facet, errors: list[Diagnostic]) -> int | None:
    raw = str(f.value).strip(" \t\n\r")
    if not re.fullmatch("[0-9]{1,18}", raw):
        errors.append(f.loc.diagnostic(Code.SCH006, f"{facet_name(f)} value {raw!r} is not a non-negative integer"))
        return None
    return int(raw)


def compile_simple(
    base: BuiltinKind,
    steps: tuple[tuple[Facet, ...], ...] | list,
    limits: Limits = DEFAULT_LIMITS,
    parent: CompiledSimple | None = None,
) -> CompiledSimple:
    """Fold the facet steps of a restriction chain (base-most first).

    ``parent`` is an already folded prefix of the chain, so derived types can
    be compiled one step at a time.  All problems are collected before
    raising :class:`SimpleTypeRejected`.
    """
    if parent is not None and parent.base is not base:
        raise ValueError("parent type has a different built-in base")
    errors: list[Diagnostic] = []
    length: int | None = None if parent is None else parent.length
    min_length: int | None = None if parent is None else parent.min_length
    max_length: int | None = None if parent is None else parent.max_length
    enumerations: list[frozenset[str]] = [] if parent is None else list(parent.enumerations)
    patterns: list[tuple[tuple[str, CompiledPattern], ...]] = [] if parent is None else list(parent.patterns)
    bounds: list[tuple[str, CanonicalValue, str]] = [] if parent is None else list(parent.bounds)
    length_loc = NOWHERE

    for step in steps:
        seen: set[type] = set()
        step_enum: list[str] = []
        step_patterns: list[tuple[str, CompiledPattern]] = []
        for f in step:
            name = facet_name(f)
            single = not isinstance(f, (Pattern, Enumeration))
            if single and type(f) in seen:
                errors.append(f.loc.diagnostic(Code.SCH006, f"{name} given more than once in one restriction"))
                continue
            seen.add(type(f))
            match f:
                case Length() | MinLength() | MaxLength():
                    if base not in _LENGTH_BASES:
                        errors.append(f.loc.diagnostic(Code.SCH006, f"{name} does not apply to {base.value}"))
                        continue
                    n = _length_value(f, errors)
                    if n is None:
                        continue
                    length_loc = f.loc
                    match f:
                        case Length():
                            if length is not None and length != n:
                                errors.append(f.loc.diagnostic(Code.SCH006, "length conflicts with the base type"))
                            length = n
                        case MinLength():
                            min_length = n if min_length is None else max(min_length, n)
                        case MaxLength():
                            max_length = n if max_length is None else min(max_length, n)
                case MinInclusive() | MaxInclusive() | MinExclusive() | MaxExclusive():
                    if base not in _ORDERED_BASES:
                        errors.append(f.loc.diagnostic(Code.SCH006, f"{name} does not apply to {base.value}"))
                        continue
                    raw = whitespace(base, str(f.value))
                    try:
                        bounds.append((name, parse_lexical(base, raw), raw))
                    except ValueError as exc:
                        errors.append(f.loc.diagnostic(Code.SCH006, f"{name} value {raw!r} is not a valid {base.value}: {exc}"))
                case Enumeration():
                    raw = whitespace(base, str(f.value))
                    try:
                        parse_lexical(base, raw)
                    except ValueError as exc:
                        errors.append(f.loc.diagnostic(Code.SCH006, f"enumeration value {raw!r} is not a valid {base.value}: {exc}"))
                        continue
                    step_enum.append(raw)
                case Pattern():
                    try:
                        ast = parse_pattern(f.value, limits)
                        step_patterns.append((str(f.value), compile_pattern(ast, limits)))
                    except PatternError as exc:
                        errors.append(
                            f.loc.diagnostic(exc.code, f"pattern {str(f.value)!r}: {exc.message} (offset {exc.position})")
                        )
        if {MinInclusive, MinExclusive} <= seen or {MaxInclusive, MaxExclusive} <= seen:
            loc = step[0].loc if step else NOWHERE
            errors.append(loc.diagnostic(Code.SCH006, "inclusive and exclusive bounds on the same side"))
        if step_enum:
            enumerations.append(frozenset(step_enum))
        if step_patterns:
            patterns.append(tuple(step_patterns))
    if min_length is not None and max_length is not None and min_length > max_length:
        errors.append(length_loc.diagnostic(Code.SCH006, "minLength exceeds maxLength"))
    if errors:
        raise SimpleTypeRejected(errors)
    return CompiledSimple(
        base=base,
        length=length,
        min_length=min_length,
        max_length=max_length,
        enumerations=tuple(enumerations),
        patterns=tuple(patterns),
        bounds=tuple(bounds),
    )


# --- checking -------------------------------------------------------------------

_BOUND_OK = {
    "minInclusive": (0, 1),
    "maxInclusive": (-1, 0),
    "minExclusive": (1,),
    "maxExclusive": (-1,),
}
_BOUND_WORD = {
    "minInclusive": "at least",
    "maxInclusive": "at most",
    "minExclusive": "greater than",
    "maxExclusive": "less than",
}


def _show(text: str, limit: int = 60) -> str:
    return repr(text if len(text) <= limit else text[:limit] + "...")


def check_value(ct: CompiledSimple, value: SecureText) -> CanonicalValue | list[FacetViolation]:
    """Canonical value of ``value`` under ``ct``, or every violated facet."""
    text = whitespace(ct.base, str(value))
    try:
        canonical = parse_lexical(ct.base, text)
    except ValueError as exc:
        return [FacetViolation("lexical", f"{_show(text)} is not a valid {ct.base.value}: {exc}")]
    violations: list[FacetViolation] = []
    n = len(text)
    if ct.length is not None and n != ct.length:
        violations.append(FacetViolation("length", f"length {n} differs from required length {ct.length}"))
    if ct.min_length is not None and n < ct.min_length:
        violations.append(FacetViolation("minLength", f"length {n} is below minimum {ct.min_length}"))
    if ct.max_length is not None and n > ct.max_length:
        violations.append(FacetViolation("maxLength", f"length {n} is above maximum {ct.max_length}"))
    for group in ct.patterns:
        if not any(compiled.fullmatch(text) for _, compiled in group):
            shown = " | ".join(source for source, _ in group)
            violations.append(FacetViolation("pattern", f"{_show(text)} does not match pattern {shown}"))
    for allowed in ct.enumerations:
        if text not in allowed:
            violations.append(
                FacetViolation("enumeration", f"{_show(text)} is not one of {', '.join(sorted(allowed))}")
            )
    for name, bound, source in ct.bounds:
        order = compare_values(canonical, bound)
        if order is None:
            violations.append(
                FacetViolation("indeterminate", f"{_show(text)} cannot be ordered against {name} {source}")
            )
        elif order not in _BOUND_OK[name]:
            violations.append(FacetViolation(name, f"{_show(text)} is not {_BOUND_WORD[name]} {source}"))
    return violations if violations else canonical
