"""Hardened, non-validating XML 1.0 parser.

The parser is a single forward pass over the decoded input with an explicit
element stack, so nesting depth never turns into Python recursion.  Policy on
top of plain well-formedness:

* UTF-8 only; a BOM is stripped, any other declared encoding is WF005.
* No DOCTYPE at all (WF003), which also rules out entity expansion.
* Numeric character references are refused (WF001); only the five
  predefined entities resolve.
* Comments and processing instructions are parsed and dropped.
* Namespace prefixes are recorded lexically, never resolved.
"""
from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from typing import Union

from .diagnostics import DEFAULT_LIMITS, Code, Diagnostic, Limits
from .securetext import ForbiddenChar, InvalidUtf8, SecureText, decode_utf8

__all__ = [
    "QName",
    "Attribute",
    "TextNode",
    "Element",
    "Node",
    "XmlDocument",
    "WfError",
    "parse_document",
    "resolve_entity_ref",
    "check_name",
]

_NAME_START = (
    ":A-Z_a-z\xc0-\xd6\xd8-\xf6\xf8-\u02ff\u0370-\u037d\u037f-\u1fff\u200c-\u200d"
    "\u2070-\u218f\u2c00-\u2fef\u3001-\ud7ff\uf900-\ufdcf\ufdf0-\ufffd\U00010000-\U000effff"
)
_NAME_CHAR = _NAME_START + "\\-.0-9\xb7\u0300-\u036f\u203f-\u2040"
_NAME = re.compile(f"[{_NAME_START}][{_NAME_CHAR}]*")
_NCNAME = re.compile(f"[{_NAME_START.replace(':', '')}][{_NAME_CHAR.replace(':', '')}]*")
_WS = re.compile("[ \t\n]*")
_CHARDATA = re.compile("[^<&]*")
_ATTR_CHUNK = {'"': re.compile('[^<&"]*'), "'": re.compile("[^<&']*")}
_XML_DECL = re.compile(
    r"<\?xml[ \t\n]+version[ \t\n]*=[ \t\n]*(?:\"([^\"<]*)\"|'([^'<]*)')"
    r"(?:[ \t\n]+encoding[ \t\n]*=[ \t\n]*(?:\"([^\"<]*)\"|'([^'<]*)'))?"
    r"(?:[ \t\n]+standalone[ \t\n]*=[ \t\n]*(?:\"([^\"<]*)\"|'([^'<]*)'))?"
    r"[ \t\n]*\?>"
)
_ENC_NAME = re.compile("[A-Za-z][A-Za-z0-9._-]*")

_PREDEFINED = {"amp": "&", "lt": "<", "gt": ">", "quot": '"', "apos": "'"}


@dataclass(frozen=True)
class QName:
    local: SecureText
    prefix: SecureText | None = None

    def __str__(self) -> str:
        if self.prefix is None:
            return str(self.local)
        return f"{self.prefix}:{self.local}"


@dataclass(frozen=True)
class Attribute:
    name: QName
    value: SecureText
    line: int
    col: int


@dataclass(frozen=True)
class TextNode:
    text: SecureText
    line: int
    col: int


@dataclass(frozen=True, eq=False)
class Element:
    name: QName
    attributes: tuple[Attribute, ...]
    children: tuple[Node, ...]
    line: int
    col: int

    __hash__ = None  # type: ignore[assignment]

    def __eq__(self, other: object) -> bool:
        # Iterative so that comparing deep trees cannot exhaust the stack.
        if not isinstance(other, Element):
            return NotImplemented
        pending = [(self, other)]
        while pending:
            a, b = pending.pop()
            if (a.name, a.attributes, a.line, a.col) != (b.name, b.attributes, b.line, b.col):
                return False
            if len(a.children) != len(b.children):
                return False
            for x, y in zip(a.children, b.children):
                if isinstance(x, Element) and isinstance(y, Element):
                    pending.append((x, y))
                elif x != y:
                    return False
        return True

    def get(self, local: str) -> SecureText | None:
        """Value of the first attribute with this unprefixed name."""
        for attr in self.attributes:
            if attr.name.prefix is None and str(attr.name.local) == local:
                return attr.value
        return None


Node = Union[Element, TextNode]


@dataclass(frozen=True)
class XmlDocument:
    root: Element
    total_nodes: int
    max_depth: int


class WfError(Exception):
    """Input is not a well-formed document under the hardening policy."""

    def __init__(self, code: Code, line: int, col: int, message: str) -> None:
        super().__init__(f"{code.value} {line}:{col} {message}")
        self.code = code
        self.line = line
        self.col = col
        self.message = SecureText.of(_printable(message))

    @property
    def diagnostic(self) -> Diagnostic:
        return Diagnostic(self.line, self.col, self.code, "/", str(self.message))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WfError):
            return NotImplemented
        return (self.code, self.line, self.col, self.message) == (
            other.code,
            other.line,
            other.col,
            other.message,
        )

    __hash__ = Exception.__hash__


def _printable(text: str) -> str:
    return "".join(ch if " " <= ch <= "\ud7ff" or ch >= "\ue000" else f"\\x{ord(ch):02x}" for ch in text)


def _short(text: str, limit: int = 40) -> str:
    return text if len(text) <= limit else text[:limit] + "..."


def resolve_entity_ref(name: SecureText, line: int = 1, col: int = 1) -> str:
    """Resolve the text between ``&`` and ``;``.

    Only the five predefined entities produce a character; anything starting
    with ``#`` is a numeric character reference and is refused.
    """
    raw = str(name)
    if raw.startswith("#"):
        return _raise(Code.WF001, line, col, f"numeric character reference &{_short(raw)}; is not allowed")
    char = _PREDEFINED.get(raw)
    if char is None:
        return _raise(Code.WF002, line, col, f"undefined entity &{_short(raw)};")
    return char


def _raise(code: Code, line: int, col: int, message: str):
    raise WfError(code, line, col, message)


def check_name(text: SecureText, limits: Limits = DEFAULT_LIMITS, line: int = 1, col: int = 1) -> QName:
    raw = str(text)
    if len(raw.encode("utf-8")) > limits.max_name_bytes:
        raise WfError(Code.LIM003, line, col, f"name longer than {limits.max_name_bytes} bytes")
    parts = raw.split(":")
    if len(parts) > 2:
        raise WfError(Code.WF004, line, col, f"name {_short(raw)!r} has more than one colon")
    for part in parts:
        if not _NCNAME.fullmatch(part):
            raise WfError(Code.WF004, line, col, f"malformed name {_short(raw)!r}")
    if len(parts) == 2:
        return QName(SecureText._trusted(parts[1]), SecureText._trusted(parts[0]))
    return QName(SecureText._trusted(parts[0]))


def _line_col_raw(text: str, index: int) -> tuple[int, int]:
    prefix = text[:index].replace("\r\n", "\n").replace("\r", "\n")
    return prefix.count("\n") + 1, len(prefix) - prefix.rfind("\n")


class _Frame:
    __slots__ = ("raw", "name", "attrs", "children", "line", "col", "text", "text_line", "text_col")

    def __init__(self, raw: str, name: QName, attrs: tuple[Attribute, ...], line: int, col: int) -> None:
        self.raw = raw
        self.name = name
        self.attrs = attrs
        self.children: list[Node] = []
        self.line = line
        self.col = col
        self.text: list[str] = []
        self.text_line = 0
        self.text_col = 0


class _Parser:
    def __init__(self, text: str, limits: Limits) -> None:
        self.s = text
        self.n = len(text)
        self.limits = limits
        self._line_starts: list[int] | None = None
        self.units = 0  # parsed units, including comments and PIs
        self.tree_nodes = 0
        self.deepest = 0

    # positions ---------------------------------------------------------
    def where(self, pos: int) -> tuple[int, int]:
        if self._line_starts is None:
            self._line_starts = [0] + [m.end() for m in re.finditer("\n", self.s)]
        pos = min(pos, self.n)
        i = bisect_right(self._line_starts, pos) - 1
        return i + 1, pos - self._line_starts[i] + 1

    def fail(self, code: Code, pos: int, message: str):
        line, col = self.where(pos)
        raise WfError(code, line, col, message)

    def count_unit(self, pos: int) -> None:
        self.units += 1
        if self.units > self.limits.max_total_nodes:
            self.fail(Code.LIM007, pos, f"more than {self.limits.max_total_nodes} nodes")

    # lexical pieces ------------------------------------------------------
    def name_at(self, pos: int) -> tuple[str, QName, int]:
        m = _NAME.match(self.s, pos)
        if m is None:
            self.fail(Code.WF004, pos, "expected a name")
        raw = m.group()
        line, col = self.where(pos)
        return raw, check_name(SecureText._trusted(raw), self.limits, line, col), m.end()

    def reference(self, pos: int) -> tuple[str, int]:
        s = self.s
        if s.startswith("&#", pos):
            end = s.find(";", pos, pos + 64)
            shown = s[pos + 1 : end] if end > 0 else s[pos + 1 : pos + 12]
            line, col = self.where(pos)
            resolve_entity_ref(SecureText._trusted(shown or "#"), line, col)
        m = _NAME.match(s, pos + 1)
        if m is None or not s.startswith(";", m.end()):
            self.fail(Code.WF004, pos, "'&' must start an entity reference")
        line, col = self.where(pos)
        return resolve_entity_ref(SecureText._trusted(m.group()), line, col), m.end() + 1

    def comment(self, pos: int) -> int:
        end = self.s.find("--", pos + 4)
        if end < 0:
            self.fail(Code.WF004, pos, "unterminated comment")
        if not self.s.startswith(">", end + 2):
            self.fail(Code.WF004, end, "'--' is not allowed inside a comment")
        self.count_unit(pos)
        return end + 3

    def pi(self, pos: int) -> int:
        m = _NAME.match(self.s, pos + 2)
        if m is None:
            self.fail(Code.WF004, pos, "processing instruction without a target")
        if m.group().lower() == "xml":
            self.fail(Code.WF004, pos, "XML declaration is only allowed at the start of the document")
        after = m.end()
        if not self.s.startswith("?>", after):
            if after >= self.n or self.s[after] not in " \t\n":
                self.fail(Code.WF004, after, "malformed processing instruction")
            end = self.s.find("?>", after)
            if end < 0:
                self.fail(Code.WF004, pos, "unterminated processing instruction")
            after = end
        self.count_unit(pos)
        return after + 2

    def xml_decl(self) -> int:
        s = self.s
        if not (s.startswith("<?xml") and len(s) > 5 and s[5] in " \t\n?"):
            return 0
        m = _XML_DECL.match(s)
        if m is None:
            self.fail(Code.WF004, 0, "malformed XML declaration")
        version = m.group(1) if m.group(1) is not None else m.group(2)
        if version != "1.0":
            self.fail(Code.WF004, 0, f"unsupported XML version {_short(version)!r}")
        encoding = m.group(3) if m.group(3) is not None else m.group(4)
        if encoding is not None:
            if not _ENC_NAME.fullmatch(encoding):
                self.fail(Code.WF004, 0, "malformed encoding name")
            if encoding.lower() != "utf-8":
                self.fail(Code.WF005, 0, f"encoding {_short(encoding)!r} is not UTF-8")
        standalone = m.group(5) if m.group(5) is not None else m.group(6)
        if standalone is not None and standalone not in ("yes", "no"):
            self.fail(Code.WF004, 0, "standalone must be 'yes' or 'no'")
        return m.end()

    def misc(self, pos: int, before_root: bool) -> int:
        """Skip whitespace, comments and PIs; stop at the root start tag or EOF."""
        s = self.s
        while True:
            pos = _WS.match(s, pos).end()
            if pos >= self.n:
                if before_root:
                    self.fail(Code.WF004, pos, "no root element")
                return pos
            if s.startswith("<!--", pos):
                pos = self.comment(pos)
            elif s.startswith("<?", pos):
                pos = self.pi(pos)
            elif s.startswith("<!DOCTYPE", pos):
                self.fail(Code.WF003, pos, "DOCTYPE declarations are not allowed")
            elif s.startswith("<", pos) and before_root and not s.startswith("<!", pos) and not s.startswith("</", pos):
                return pos
            elif s.startswith("<", pos) and not before_root:
                self.fail(Code.WF004, pos, "content after the root element")
            else:
                self.fail(Code.WF004, pos, "unexpected content outside the root element")

    def attr_value(self, pos: int, quote: str) -> tuple[str, int]:
        s = self.s
        chunk = _ATTR_CHUNK[quote]
        parts: list[str] = []
        size = 0
        start = pos
        while True:
            m = chunk.match(s, pos)
            part = m.group()
            if part:
                part = part.replace("\t", " ").replace("\n", " ")
                parts.append(part)
                size += len(part.encode("utf-8"))
            pos = m.end()
            if size > self.limits.max_attr_value_bytes:
                self.fail(Code.LIM002, start, f"attribute value longer than {self.limits.max_attr_value_bytes} bytes")
            if pos >= self.n:
                self.fail(Code.WF004, start - 1, "unterminated attribute value")
            c = s[pos]
            if c == quote:
                return "".join(parts), pos + 1
            if c == "<":
                self.fail(Code.WF004, pos, "'<' is not allowed in attribute values")
            char, pos = self.reference(pos)
            parts.append(char)
            size += len(char)

    def start_tag(self, pos: int) -> tuple[str, QName, tuple[Attribute, ...], bool, int]:
        s = self.s
        raw, name, pos = self.name_at(pos + 1)
        attrs: list[Attribute] = []
        seen: set[QName] = set()
        while True:
            ws_end = _WS.match(s, pos).end()
            had_ws = ws_end > pos
            pos = ws_end
            if pos >= self.n:
                self.fail(Code.WF004, pos, f"unterminated start tag <{_short(raw)}>")
            if s[pos] == ">":
                return raw, name, tuple(attrs), False, pos + 1
            if s.startswith("/>", pos):
                return raw, name, tuple(attrs), True, pos + 2
            if not had_ws:
                self.fail(Code.WF004, pos, "whitespace required before attribute")
            attr_pos = pos
            _, aname, pos = self.name_at(pos)
            pos = _WS.match(s, pos).end()
            if not s.startswith("=", pos):
                self.fail(Code.WF004, pos, "expected '=' after attribute name")
            pos = _WS.match(s, pos + 1).end()
            if pos >= self.n or s[pos] not in "\"'":
                self.fail(Code.WF004, pos, "attribute value must be quoted")
            value, pos = self.attr_value(pos + 1, s[pos])
            if len(attrs) >= self.limits.max_attrs_per_element:
                self.fail(Code.LIM004, attr_pos, f"more than {self.limits.max_attrs_per_element} attributes")
            if aname in seen:
                self.fail(Code.WF004, attr_pos, f"duplicate attribute {aname}")
            seen.add(aname)
            line, col = self.where(attr_pos)
            attrs.append(Attribute(aname, SecureText._trusted(value), line, col))

    def add_text(self, frame: _Frame, text: str, pos: int) -> None:
        if not text:
            return
        if not frame.text:
            frame.text_line, frame.text_col = self.where(pos)
        frame.text.append(text)

    def flush_text(self, frame: _Frame, pos: int) -> None:
        if frame.text:
            self.count_unit(pos)
            self.tree_nodes += 1
            frame.children.append(TextNode(SecureText._trusted("".join(frame.text)), frame.text_line, frame.text_col))
            frame.text = []

    def open_element(self, pos: int, depth: int) -> tuple[_Frame, bool, int]:
        line, col = self.where(pos)
        raw, name, attrs, empty, end = self.start_tag(pos)
        if depth > self.limits.max_depth:
            self.fail(Code.LIM001, pos, f"element nesting deeper than {self.limits.max_depth}")
        self.count_unit(pos)
        self.tree_nodes += 1
        self.deepest = max(self.deepest, depth)
        return _Frame(raw, name, attrs, line, col), empty, end

    # document --------------------------------------------------------------
    def parse(self) -> XmlDocument:
        s = self.s
        pos = self.misc(self.xml_decl(), before_root=True)
        frame, empty, pos = self.open_element(pos, 1)
        stack = [frame]
        root: Element | None = None
        if empty:
            root = Element(frame.name, frame.attrs, (), frame.line, frame.col)
            stack.pop()
        while stack:
            top = stack[-1]
            if pos >= self.n:
                self.fail(Code.WF004, pos, f"unclosed element <{_short(top.raw)}>")
            c = s[pos]
            if c == "<":
                if s.startswith("</", pos):
                    self.flush_text(top, pos)
                    raw_m = _NAME.match(s, pos + 2)
                    if raw_m is None or raw_m.group() != top.raw:
                        self.fail(Code.WF004, pos, f"end tag does not match <{_short(top.raw)}>")
                    end = _WS.match(s, raw_m.end()).end()
                    if not s.startswith(">", end):
                        self.fail(Code.WF004, end, "malformed end tag")
                    pos = end + 1
                    stack.pop()
                    el = Element(top.name, top.attrs, tuple(top.children), top.line, top.col)
                    if stack:
                        stack[-1].children.append(el)
                    else:
                        root = el
                elif s.startswith("<!--", pos):
                    pos = self.comment(pos)
                elif s.startswith("<![CDATA[", pos):
                    end = s.find("]]>", pos + 9)
                    if end < 0:
                        self.fail(Code.WF004, pos, "unterminated CDATA section")
                    self.add_text(top, s[pos + 9 : end], pos)
                    pos = end + 3
                elif s.startswith("<?", pos):
                    pos = self.pi(pos)
                elif s.startswith("<!DOCTYPE", pos):
                    self.fail(Code.WF003, pos, "DOCTYPE declarations are not allowed")
                elif s.startswith("<!", pos):
                    self.fail(Code.WF004, pos, "markup declarations are not allowed in content")
                else:
                    self.flush_text(top, pos)
                    child, empty, pos = self.open_element(pos, len(stack) + 1)
                    if empty:
                        top.children.append(Element(child.name, child.attrs, (), child.line, child.col))
                    else:
                        stack.append(child)
            elif c == "&":
                char, end = self.reference(pos)
                self.add_text(top, char, pos)
                pos = end
            else:
                m = _CHARDATA.match(s, pos)
                text = m.group()
                bad = text.find("]]>")
                if bad >= 0:
                    self.fail(Code.WF004, pos + bad, "']]>' is not allowed in character data")
                self.add_text(top, text, pos)
                pos = m.end()
        self.misc(pos, before_root=False)
        assert root is not None
        return XmlDocument(root, self.tree_nodes, self.deepest)


def parse_document(data: bytes, limits: Limits = DEFAULT_LIMITS) -> XmlDocument:
    """Parse ``data`` into an immutable tree or raise :class:`WfError`."""
    if len(data) > limits.max_input_bytes:
        raise WfError(Code.LIM002, 1, 1, f"input larger than {limits.max_input_bytes} bytes")
    data = bytes(data)
    if data.startswith(b"\xef\xbb\xbf"):
        data = data[3:]
    try:
        text = str(decode_utf8(data))
    except InvalidUtf8 as exc:
        prefix = data[: exc.byte_offset].decode("utf-8")
        line, col = _line_col_raw(prefix, len(prefix))
        raise WfError(Code.WF005, line, col, "input is not valid UTF-8") from None
    except ForbiddenChar as exc:
        raw = data.decode("utf-8")
        line, col = _line_col_raw(raw, exc.position)
        raise WfError(Code.WF006, line, col, f"character U+{ord(exc.char):04X} is not allowed in XML") from None
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    return _Parser(text, limits).parse()
