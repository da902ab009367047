"""Validating a parsed document against a compiled schema.

``validate_document`` never raises: every failure becomes a diagnostic in an
:class:`Invalid` verdict.  The tree is walked with an explicit work stack;
each element is examined exactly once, so the walk is bounded by the node
count of the document.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from typing_extensions import assert_never

from .content import AllAutomaton, CompiledAttr, CompiledSchema, CompiledType, ContentAutomaton, ElementOnly, EmptyType, SimpleValued, compile_schema
from .diagnostics import DEFAULT_LIMITS, Code, Diagnostic, Limits
from .securetext import SecureText
from .simpletypes import FacetViolation, check_value
from .xmlcore import Element, TextNode, WfError, XmlDocument, parse_document
from .xsdmodel import SchemaRejected, build_schema, resolve_refs, screen_constructs

__all__ = [
    "Valid",
    "Invalid",
    "Verdict",
    "MAX_DIAGNOSTICS",
    "validate_document",
    "validate_element",
    "validate_attributes",
    "run_content_automaton",
    "load_schema",
]

MAX_DIAGNOSTICS = 1000


@dataclass(frozen=True)
class Valid:
    pass


@dataclass(frozen=True)
class Invalid:
    diagnostics: tuple[Diagnostic, ...]

    def __post_init__(self) -> None:
        if not self.diagnostics:
            raise ValueError("an Invalid verdict needs at least one diagnostic")


Verdict = Union[Valid, Invalid]


class _Sink:
    """Collects diagnostics up to the cap."""

    def __init__(self, cap: int = MAX_DIAGNOSTICS) -> None:
        self.items: list[Diagnostic] = []
        self.cap = cap
        self.overflow = False

    @property
    def full(self) -> bool:
        return self.overflow

    def add(self, d: Diagnostic) -> None:
        if len(self.items) >= self.cap:
            self.overflow = True
        else:
            self.items.append(d)

    def extend(self, ds: list[Diagnostic]) -> None:
        for d in ds:
            self.add(d)

    def result(self) -> list[Diagnostic]:
        out = sorted(self.items)
        if self.overflow:
            last = out[-1]
            out.append(Diagnostic(last.line, last.col, Code.LIM009, "/", f"diagnostic limit reached; only the first {self.cap} are reported"))
        return out


def _child_elements(el: Element, path: str) -> list[tuple[Element, str]]:
    counts: dict[str, int] = {}
    out = []
    for child in el.children:
        if isinstance(child, Element):
            key = str(child.name)
            counts[key] = counts.get(key, 0) + 1
            out.append((child, f"{path}/{key}[{counts[key]}]"))
    return out


def _violations(vs: list[FacetViolation], line: int, col: int, path: str, subject: str) -> list[Diagnostic]:
    return [Diagnostic(line, col, Code.VAL005, path, f"[{v.facet}] {subject}: {v.message}") for v in vs]


def validate_attributes(el: Element, specs: tuple[CompiledAttr, ...], path: str) -> list[Diagnostic]:
    """Unknown (VAL003), missing required (VAL004) and ill-typed (VAL005) attributes."""
    out: list[Diagnostic] = []
    by_name = {s.name: s for s in specs}
    seen: set[str] = set()
    for attr in el.attributes:
        prefix = None if attr.name.prefix is None else str(attr.name.prefix)
        local = str(attr.name.local)
        if prefix == "xmlns" or (prefix is None and local == "xmlns"):
            continue
        if prefix == "xsi" and local in ("schemaLocation", "noNamespaceSchemaLocation"):
            continue  # location hints are never followed
        spec = by_name.get(local)
        if spec is None or local in seen:
            what = "duplicate attribute" if spec is not None else "unknown attribute"
            out.append(Diagnostic(attr.line, attr.col, Code.VAL003, path, f"{what} {attr.name}"))
            continue
        seen.add(local)
        result = check_value(spec.simple, attr.value)
        if isinstance(result, list):
            out.extend(_violations(result, attr.line, attr.col, path, f"attribute {attr.name}"))
    for spec in specs:
        if spec.required and spec.name not in seen:
            out.append(Diagnostic(el.line, el.col, Code.VAL004, path, f"missing required attribute {spec.name}"))
    return out


def run_content_automaton(
    children: list[tuple[Element, str]],
    auto: ContentAutomaton | AllAutomaton,
    parent: Element,
    parent_path: str,
) -> tuple[list[tuple[Element, str, int]], list[Diagnostic]]:
    """Feed child element names through the automaton.

    Returns the matched children with their element declaration indices and
    the diagnostics.  An unexpected child is reported (VAL001) and then
    skipped, so the children after it are still checked exactly as if it
    were absent.
    """
    matched: list[tuple[Element, str, int]] = []
    out: list[Diagnostic] = []
    state = auto.start
    for child, path in children:
        step = auto.step(state, str(child.name.local))
        if step is None:
            expected = auto.expected(state)
            wanted = "{" + ", ".join(expected) + "}" if expected else "nothing"
            out.append(
                Diagnostic(child.line, child.col, Code.VAL001, path, f"unexpected element {child.name}, expected one of {wanted}")
            )
            continue
        state, element = step
        matched.append((child, path, element))
    if not auto.is_accepting(state):
        expected = ", ".join(auto.expected(state))
        out.append(
            Diagnostic(parent.line, parent.col, Code.VAL002, parent_path, f"content incomplete, expected one of {{{expected}}}")
        )
    return matched, out


def _check_element(
    el: Element, ct: CompiledType, path: str, schema: CompiledSchema, sink: _Sink
) -> list[tuple[Element, str, int]]:
    """Diagnostics for ``el`` itself; returns the children still to visit."""
    match ct:
        case EmptyType(attributes):
            sink.extend(validate_attributes(el, attributes, path))
            for child in el.children:
                match child:
                    case TextNode(text, line, col):
                        if not text.is_whitespace_only():
                            sink.add(Diagnostic(line, col, Code.VAL006, path, "text is not allowed in empty content"))
                    case Element():
                        pass
                    case _:
                        assert_never(child)
            for child, cpath in _child_elements(el, path):
                sink.add(Diagnostic(child.line, child.col, Code.VAL001, cpath, f"unexpected element {child.name}, expected nothing"))
            return []
        case SimpleValued(simple, attributes):
            sink.extend(validate_attributes(el, attributes, path))
            text = SecureText.of("")
            line, col = el.line, el.col
            for child in el.children:
                match child:
                    case TextNode():
                        text, line, col = child.text, child.line, child.col
                    case Element():
                        sink.add(
                            Diagnostic(child.line, child.col, Code.VAL006, path, f"element {child.name} is not allowed in simple content")
                        )
                    case _:
                        assert_never(child)
            result = check_value(simple, text)
            if isinstance(result, list):
                sink.extend(_violations(result, line, col, path, "value"))
            return []
        case ElementOnly(auto, attributes):
            sink.extend(validate_attributes(el, attributes, path))
            for child in el.children:
                match child:
                    case TextNode(text, line, col):
                        if not text.is_whitespace_only():
                            sink.add(Diagnostic(line, col, Code.VAL006, path, "text is not allowed in element-only content"))
                    case Element():
                        pass
                    case _:
                        assert_never(child)
            matched, diags = run_content_automaton(_child_elements(el, path), auto, el, path)
            sink.extend(diags)
            return matched
        case _:
            assert_never(ct)


def _walk(root: Element, type_index: int, path: str, schema: CompiledSchema, sink: _Sink) -> None:
    stack: list[tuple[Element, int, str]] = [(root, type_index, path)]
    while stack and not sink.full:
        el, ti, p = stack.pop()
        todo = _check_element(el, schema.types[ti], p, schema, sink)
        stack.extend((child, schema.elements[e][1], cpath) for child, cpath, e in reversed(todo))


def validate_element(
    el: Element, ct: CompiledType, schema: CompiledSchema, limits: Limits = DEFAULT_LIMITS, path: str | None = None
) -> list[Diagnostic]:
    """All diagnostics for the subtree rooted at ``el`` checked against ``ct``."""
    sink = _Sink()
    p = path if path is not None else f"/{el.name}[1]"
    todo = _check_element(el, ct, p, schema, sink)
    for child, cpath, e in todo:
        if sink.full:
            break
        _walk(child, schema.elements[e][1], cpath, schema, sink)
    return sink.result()


def validate_document(doc: XmlDocument, cs: CompiledSchema, limits: Limits = DEFAULT_LIMITS) -> Verdict:
    root = doc.root
    found = cs.root_type(str(root.name.local))
    if found is None:
        roots = ", ".join(sorted(cs.roots))
        return Invalid((Diagnostic(root.line, root.col, Code.VAL001, "/", f"unexpected root {root.name}, expected one of {{{roots}}}"),))
    element, _ = found
    sink = _Sink()
    _walk(root, cs.elements[element][1], f"/{root.name}[1]", cs, sink)
    diags = sink.result()
    return Invalid(tuple(diags)) if diags else Valid()


def load_schema(data: bytes, limits: Limits = DEFAULT_LIMITS) -> CompiledSchema:
    """Parse, screen, build, resolve and compile a schema document.

    Raises :class:`SchemaRejected`; a schema that is not well-formed is
    rejected with its parse diagnostic.
    """
    try:
        doc = parse_document(data, limits)
    except WfError as exc:
        raise SchemaRejected([exc.diagnostic]) from None
    screened = screen_constructs(doc)
    if screened:
        raise SchemaRejected(screened)
    return compile_schema(resolve_refs(build_schema(doc, limits)), limits)
