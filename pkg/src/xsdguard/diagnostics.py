"""Stable diagnostic codes, resource limits and the diagnostic record."""
from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass

__all__ = ["Code", "Diagnostic", "Limits", "DEFAULT_LIMITS", "Loc", "NOWHERE", "render_line", "escape_field"]


class Code(str, enum.Enum):
    # well-formedness
    WF001 = "WF001"  # numeric character reference
    WF002 = "WF002"  # non-predefined entity reference
    WF003 = "WF003"  # DOCTYPE present
    WF004 = "WF004"  # structural / syntax error
    WF005 = "WF005"  # encoding violation
    WF006 = "WF006"  # illegal character
    # resource limits
    LIM001 = "LIM001"  # depth
    LIM002 = "LIM002"  # input / value size
    LIM003 = "LIM003"  # name length
    LIM004 = "LIM004"  # attribute count
    LIM005 = "LIM005"  # maxOccurs bound
    LIM006 = "LIM006"  # automaton size
    LIM007 = "LIM007"  # node count
    LIM008 = "LIM008"  # pattern size
    LIM009 = "LIM009"  # diagnostic cap reached
    # schema
    SCH001 = "SCH001"  # forbidden construct
    SCH002 = "SCH002"  # unresolved / malformed reference
    SCH003 = "SCH003"  # definition cycle
    SCH004 = "SCH004"  # unique particle attribution
    SCH005 = "SCH005"  # unsupported construct or combination
    SCH006 = "SCH006"  # facet / base mismatch
    PAT001 = "PAT001"  # pattern syntax
    # validation
    VAL001 = "VAL001"  # unexpected element
    VAL002 = "VAL002"  # incomplete content
    VAL003 = "VAL003"  # unknown attribute
    VAL004 = "VAL004"  # missing required attribute
    VAL005 = "VAL005"  # simple value rejected
    VAL006 = "VAL006"  # content kind mismatch
    # cli only
    IO001 = "IO001"  # unreadable input

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True, order=True)
class Diagnostic:
    """One located finding.  Ordering is (line, col, code, path, message)."""

    line: int
    col: int
    code: Code
    path: str = "/"
    message: str = ""


def escape_field(text: str) -> str:
    """Keep a value on one tab-separated line."""
    return (
        text.replace("\\", "\\\\")
        .replace("\t", "\\t")
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def render_line(d: Diagnostic) -> str:
    return f"{d.code.value}\t{d.line}:{d.col}\t{escape_field(d.path)}\t{escape_field(d.message)}"


@dataclass(frozen=True)
class Limits:
    max_input_bytes: int = 64 * 1024 * 1024
    max_depth: int = 256
    max_attrs_per_element: int = 64
    max_name_bytes: int = 1024
    max_attr_value_bytes: int = 64 * 1024
    max_total_nodes: int = 1_000_000
    max_occurs_bound: int = 1024
    max_automaton_states: int = 65_536
    max_pattern_length: int = 1024

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if type(value) is not int or value <= 0:
                raise ValueError(f"limit {f.name} must be a positive integer, got {value!r}")

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    def as_dict(self) -> dict[str, int]:
        return dataclasses.asdict(self)

    def replace(self, **changes: int) -> Limits:
        return dataclasses.replace(self, **changes)


DEFAULT_LIMITS = Limits()


@dataclass(frozen=True)
class Loc:
    """Where a schema component was written: position plus element path."""

    line: int = 1
    col: int = 1
    path: str = "/"

    def diagnostic(self, code: Code, message: str) -> Diagnostic:
        return Diagnostic(self.line, self.col, code, self.path, message)


NOWHERE = Loc()
