"""Reading an XSD document into a vetted, reference-resolved schema model.

Three stages:

``screen_constructs``
    Reports every construct on the ban list (SCH001) and every XSD element
    outside the supported vocabulary (SCH005).
``build_schema``
    Translates the whitelisted vocabulary into :class:`SchemaModel`.  It
    re-checks the ban list on its own, so skipping the screen cannot let a
    forbidden construct through.
``resolve_refs``
    Binds every ``ref=``/``type=``/``base=`` name and detects derivation
    cycles, producing :class:`ResolvedSchema` whose cross references are
    plain table indices.

Namespaces are handled lexically: the XSD vocabulary is whatever prefix the
schema root binds to the XSD namespace URI, and names of declarations are
compared by local name.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping, Union

from .diagnostics import DEFAULT_LIMITS, NOWHERE, Code, Diagnostic, Limits, Loc
from .securetext import SecureText
from .simpletypes import FACET_NAMES, BuiltinKind, Facet
from .xmlcore import Element, QName, TextNode, XmlDocument

__all__ = [
    "XSD_NS",
    "XSI_NS",
    "SchemaRejected",
    "TypeName",
    "ElementDecl",
    "ElementRef",
    "Occurs",
    "ElemParticle",
    "SequenceParticle",
    "ChoiceParticle",
    "AllParticle",
    "Particle",
    "EmptyContent",
    "SimpleContent",
    "AttrSpec",
    "SimpleTypeDef",
    "ComplexType",
    "TypeDef",
    "SchemaModel",
    "RElement",
    "RElem",
    "RSequence",
    "RChoice",
    "RAll",
    "RParticle",
    "RSimpleContent",
    "RAttr",
    "RComplex",
    "RSimple",
    "ResolvedSchema",
    "screen_constructs",
    "build_schema",
    "resolve_refs",
    "MAX_SCHEMA_DEPTH",
]

XSD_NS = "http://www.w3.org/2001/XMLSchema"
XSI_NS = "http://www.w3.org/2001/XMLSchema-instance"

MAX_SCHEMA_DEPTH = 128

FORBIDDEN_ELEMENTS = frozenset(
    {"any", "anyAttribute", "redefine", "override", "include", "import", "notation", "union", "list"}
)
SUPPORTED_ELEMENTS = frozenset(
    {
        "schema",
        "annotation",
        "element",
        "complexType",
        "simpleType",
        "sequence",
        "choice",
        "all",
        "attribute",
        "simpleContent",
        "extension",
        "restriction",
    }
    | set(FACET_NAMES)
)

_DIGITS = re.compile("[0-9]+")
_QNAME = re.compile(r"[^\s:]+(?::[^\s:]+)?")


class SchemaRejected(Exception):
    """The schema cannot be used; ``diagnostics`` lists every reason found."""

    def __init__(self, diagnostics: list[Diagnostic] | tuple[Diagnostic, ...]) -> None:
        self.diagnostics = tuple(sorted(diagnostics))
        super().__init__("; ".join(f"{d.code.value} {d.line}:{d.col} {d.message}" for d in self.diagnostics))


# --- unresolved model ---------------------------------------------------------------


@dataclass(frozen=True)
class TypeName:
    """A ``type=``/``base=`` reference: a built-in kind or a declared name."""

    local: str
    builtin: BuiltinKind | None = None
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class Occurs:
    min: int = 1
    max: int | None = 1  # None is unbounded


@dataclass(frozen=True)
class ElementDecl:
    name: QName
    type: TypeName | TypeDef
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class ElementRef:
    ref: str
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class ElemParticle:
    term: ElementDecl | ElementRef
    occurs: Occurs
    pid: int  # source particle id, document order
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class SequenceParticle:
    items: tuple[Particle, ...]
    occurs: Occurs
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class ChoiceParticle:
    items: tuple[Particle, ...]
    occurs: Occurs
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class AllParticle:
    items: tuple[ElemParticle, ...]
    occurs: Occurs
    loc: Loc = field(default=NOWHERE, compare=False)


Particle = Union[ElemParticle, SequenceParticle, ChoiceParticle, AllParticle]


@dataclass(frozen=True)
class EmptyContent:
    pass


@dataclass(frozen=True)
class SimpleContent:
    base: TypeName | SimpleTypeDef


@dataclass(frozen=True)
class AttrSpec:
    name: QName
    simple_type: TypeName | SimpleTypeDef
    required: bool
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class SimpleTypeDef:
    base: TypeName
    facets: tuple[Facet, ...]
    name: str | None = None
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class ComplexType:
    content: Particle | EmptyContent | SimpleContent
    attributes: tuple[AttrSpec, ...]
    name: str | None = None
    loc: Loc = field(default=NOWHERE, compare=False)


TypeDef = Union[ComplexType, SimpleTypeDef]


@dataclass(frozen=True)
class SchemaModel:
    xsd_prefix: str | None
    global_elements: Mapping[str, ElementDecl]
    global_types: Mapping[str, TypeDef]


# --- resolved model -------------------------------------------------------------------


@dataclass(frozen=True)
class RElement:
    name: QName
    type_index: int
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class RElem:
    element: int
    occurs: Occurs
    pid: int
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class RSequence:
    items: tuple[RParticle, ...]
    occurs: Occurs
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class RChoice:
    items: tuple[RParticle, ...]
    occurs: Occurs
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class RAll:
    items: tuple[RElem, ...]
    occurs: Occurs
    loc: Loc = field(default=NOWHERE, compare=False)


RParticle = Union[RElem, RSequence, RChoice, RAll]


@dataclass(frozen=True)
class RSimpleContent:
    simple: int


@dataclass(frozen=True)
class RAttr:
    name: QName
    simple: int
    required: bool
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class RComplex:
    content: RParticle | EmptyContent | RSimpleContent
    attributes: tuple[RAttr, ...]
    label: str
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class RSimple:
    """A simple type: built-in ``base`` plus the facets of each derivation step.

    ``parent`` points at the simple type this one restricts (None for a
    built-in), so long derivation chains stay linear in size.
    """

    base: BuiltinKind
    parent: int | None
    facets: tuple[Facet, ...]
    label: str
    loc: Loc = field(default=NOWHERE, compare=False)


@dataclass(frozen=True)
class ResolvedSchema:
    elements: tuple[RElement, ...]
    types: tuple[RComplex | RSimple, ...]
    roots: Mapping[str, int]


# --- shared helpers --------------------------------------------------------------------


def _vocabulary(root: Element) -> tuple[str | None, bool, set[str]]:
    """(XSD prefix, whether one is bound, xsi prefixes) from the root's xmlns attributes."""
    xsd_prefix: str | None = None
    bound = False
    xsi = {"xsi"}
    for attr in root.attributes:
        value = str(attr.value)
        if attr.name.prefix is None and str(attr.name.local) == "xmlns":
            if value == XSD_NS:
                xsd_prefix, bound = None, True
        elif attr.name.prefix is not None and str(attr.name.prefix) == "xmlns":
            if value == XSD_NS and not bound:
                xsd_prefix, bound = str(attr.name.local), True
            elif value == XSI_NS:
                xsi.add(str(attr.name.local))
    if not bound and root.name.prefix is not None and str(root.name.prefix) in ("xs", "xsd"):
        # Unbound but conventional prefix: still recognise the vocabulary.
        xsd_prefix, bound = str(root.name.prefix), True
    return xsd_prefix, bound, xsi


def _is_xsd(el: Element, prefix: str | None) -> bool:
    p = None if el.name.prefix is None else str(el.name.prefix)
    return p == prefix


def _loc(el: Element, path: str) -> Loc:
    return Loc(el.line, el.col, path)


def _child_paths(el: Element, path: str) -> list[tuple[Element, str]]:
    counts: dict[str, int] = {}
    out = []
    base = "" if path == "/" else path
    for child in el.children:
        if isinstance(child, Element):
            key = str(child.name)
            counts[key] = counts.get(key, 0) + 1
            out.append((child, f"{base}/{key}[{counts[key]}]"))
    return out


def _attr(el: Element, local: str) -> str | None:
    v = el.get(local)
    return None if v is None else str(v)


def _is_xsi_type(attr_name: QName, xsi: set[str]) -> bool:
    return attr_name.prefix is not None and str(attr_name.prefix) in xsi and str(attr_name.local) == "type"


def _forbidden_attributes(el: Element, local: str, xsi: set[str], loc: Loc) -> list[Diagnostic]:
    out = []
    for attr in el.attributes:
        name = str(attr.name.local)
        value = str(attr.value).strip(" \t\n")
        if _is_xsi_type(attr.name, xsi):
            out.append(loc.diagnostic(Code.SCH001, "xsi:type is not allowed"))
        elif attr.name.prefix is not None:
            continue
        elif name == "substitutionGroup":
            out.append(loc.diagnostic(Code.SCH001, "substitutionGroup is not allowed"))
        elif name == "abstract" and value in ("true", "1"):
            out.append(loc.diagnostic(Code.SCH001, 'abstract="true" is not allowed'))
        elif name == "mixed" and value in ("true", "1"):
            out.append(loc.diagnostic(Code.SCH001, 'mixed="true" is not allowed'))
        elif name in ("default", "fixed") and local == "element":
            out.append(loc.diagnostic(Code.SCH001, f"{name}= on an element declaration is not allowed"))
    return out


# --- screening --------------------------------------------------------------------------


def screen_constructs(doc: XmlDocument) -> list[Diagnostic]:
    """Every forbidden or unsupported construct in the schema document.

    An empty list means the document uses only the supported vocabulary.
    Annotation subtrees are not inspected.
    """
    root = doc.root
    prefix, bound, xsi = _vocabulary(root)
    out: list[Diagnostic] = []
    root_path = f"/{root.name}[1]"
    if not bound or not _is_xsd(root, prefix) or str(root.name.local) != "schema":
        out.append(_loc(root, root_path).diagnostic(Code.SCH005, f"root element {root.name} is not an XSD schema"))
    stack = [(root, root_path)]
    while stack:
        el, path = stack.pop()
        loc = _loc(el, path)
        local = str(el.name.local)
        if not bound or not _is_xsd(el, prefix):
            if el is not root:
                out.append(loc.diagnostic(Code.SCH005, f"element {el.name} is outside the XSD vocabulary"))
            continue
        if local == "annotation":
            continue
        if local in FORBIDDEN_ELEMENTS:
            out.append(loc.diagnostic(Code.SCH001, f"{el.name} is a forbidden construct"))
            continue
        if local not in SUPPORTED_ELEMENTS:
            out.append(loc.diagnostic(Code.SCH005, f"{el.name} is not supported"))
            continue
        out.extend(_forbidden_attributes(el, local, xsi, loc))
        stack.extend(reversed(_child_paths(el, path)))
    return sorted(out)


# --- building ------------------------------------------------------------------------------

_ATTRS = {
    "schema": {"targetNamespace", "elementFormDefault", "attributeFormDefault", "version", "id"},
    "element/global": {"name", "type", "id", "abstract"},
    "element/local": {"name", "ref", "type", "minOccurs", "maxOccurs", "id", "form"},
    "complexType/global": {"name", "id", "mixed", "abstract"},
    "complexType/local": {"id", "mixed"},
    "sequence": {"minOccurs", "maxOccurs", "id"},
    "choice": {"minOccurs", "maxOccurs", "id"},
    "all": {"minOccurs", "maxOccurs", "id"},
    "attribute": {"name", "type", "use", "id", "form"},
    "simpleType/global": {"name", "id"},
    "simpleType/local": {"id"},
    "restriction": {"base", "id"},
    "simpleContent": {"id"},
    "extension": {"base", "id"},
    "facet": {"value", "id"},
}


class _Builder:
    def __init__(self, doc: XmlDocument, limits: Limits) -> None:
        self.doc = doc
        self.limits = limits
        self.errors: list[Diagnostic] = []
        self.prefix, self.bound, self.xsi = _vocabulary(doc.root)
        self.pid = 0

    def err(self, loc: Loc, code: Code, message: str) -> None:
        self.errors.append(loc.diagnostic(code, message))

    # generic checks ----------------------------------------------------------------
    def children(self, el: Element, path: str) -> list[tuple[str, Element, Loc]]:
        """XSD children other than annotations; anything else is reported."""
        out = []
        for child in el.children:
            if isinstance(child, TextNode) and not child.text.is_whitespace_only():
                self.err(Loc(child.line, child.col, path), Code.SCH005, "text is not allowed here")
        for child, cpath in _child_paths(el, path):
            loc = _loc(child, cpath)
            local = str(child.name.local)
            if not _is_xsd(child, self.prefix):
                self.err(loc, Code.SCH005, f"element {child.name} is outside the XSD vocabulary")
            elif local == "annotation":
                continue
            elif local in FORBIDDEN_ELEMENTS:
                self.err(loc, Code.SCH001, f"{child.name} is a forbidden construct")
            elif local not in SUPPORTED_ELEMENTS:
                self.err(loc, Code.SCH005, f"{child.name} is not supported")
            else:
                out.append((local, child, loc))
        return out

    def check_attrs(self, el: Element, kind: str, loc: Loc) -> bool:
        forbidden = _forbidden_attributes(el, str(el.name.local), self.xsi, loc)
        self.errors.extend(forbidden)
        ok = not forbidden
        allowed = _ATTRS[kind]
        for attr in el.attributes:
            if attr.name.prefix is not None:
                continue  # namespace declarations and foreign annotations are inert
            name = str(attr.name.local)
            if name == "xmlns":
                continue
            if name not in allowed and name not in ("substitutionGroup", "default", "fixed"):
                self.err(loc, Code.SCH005, f"attribute {name} is not supported on {el.name}")
                ok = False
            elif name not in allowed and str(el.name.local) != "element":
                self.err(loc, Code.SCH005, f"attribute {name} is not supported on {el.name}")
                ok = False
        for flag in ("abstract", "mixed"):
            value = _attr(el, flag)
            if value is not None and value.strip() not in ("true", "false", "1", "0"):
                self.err(loc, Code.SCH005, f"{flag} must be a boolean")
                ok = False
        return ok

    def ncname(self, value: str | None, loc: Loc, what: str) -> str | None:
        if value is None:
            self.err(loc, Code.SCH005, f"{what} requires a name")
            return None
        value = value.strip(" \t\n")
        from .xmlcore import _NCNAME  # same production as the parser uses

        if not _NCNAME.fullmatch(value):
            self.err(loc, Code.SCH002, f"{what} name {value!r} is not a valid NCName")
            return None
        return value

    def type_name(self, value: str, loc: Loc) -> TypeName | None:
        value = value.strip(" \t\n")
        from .xmlcore import _NCNAME

        if not _QNAME.fullmatch(value) or not all(_NCNAME.fullmatch(p) for p in value.split(":")):
            self.err(loc, Code.SCH002, f"reference {value!r} is not a valid QName")
            return None
        prefix, _, local = value.rpartition(":")
        prefix_or_none = prefix if prefix else None
        if prefix_or_none == self.prefix and self.bound:
            kind = BuiltinKind.from_xsd_name(local)
            if kind is not None:
                return TypeName(local, kind, loc)
            if self.prefix is not None:
                if local in ("anyType",):
                    self.err(loc, Code.SCH001, "xs:anyType is a wildcard and is not allowed")
                else:
                    self.err(loc, Code.SCH005, f"built-in type {value} is not supported")
                return None
        return TypeName(local, None, loc)

    def occurs(self, el: Element, loc: Loc) -> Occurs | None:
        def number(attr: str, default: int | None) -> int | None | bool:
            raw = _attr(el, attr)
            if raw is None:
                return default
            raw = raw.strip(" \t\n")
            if attr == "maxOccurs" and raw == "unbounded":
                return None
            if not _DIGITS.fullmatch(raw):
                self.err(loc, Code.SCH005, f"{attr}={raw!r} is not a non-negative integer")
                return False
            if len(raw.lstrip("0")) > 9 or int(raw) > self.limits.max_occurs_bound:
                self.err(loc, Code.LIM005, f"{attr}={raw} exceeds the bound {self.limits.max_occurs_bound}")
                return False
            return int(raw)

        lo = number("minOccurs", 1)
        hi = number("maxOccurs", 1)
        if lo is False or hi is False:
            return None
        assert isinstance(lo, int)
        if hi == 0:
            self.err(loc, Code.SCH005, 'maxOccurs="0" is not supported')
            return None
        if hi is not None and lo > hi:
            self.err(loc, Code.SCH005, "minOccurs is greater than maxOccurs")
            return None
        return Occurs(lo, hi)

    # schema ----------------------------------------------------------------------------------
    def build(self) -> SchemaModel:
        root = self.doc.root
        root_path = f"/{root.name}[1]"
        loc = _loc(root, root_path)
        if self.doc.max_depth > MAX_SCHEMA_DEPTH:
            self.err(loc, Code.LIM001, f"schema documents may nest at most {MAX_SCHEMA_DEPTH} levels")
            raise SchemaRejected(self.errors)
        if not self.bound or not _is_xsd(root, self.prefix) or str(root.name.local) != "schema":
            self.err(loc, Code.SCH005, f"root element {root.name} is not an XSD schema")
            raise SchemaRejected(self.errors)
        self.check_attrs(root, "schema", loc)
        elements: dict[str, ElementDecl] = {}
        types: dict[str, TypeDef] = {}
        for local, child, cloc in self.children(root, root_path):
            if local == "element":
                decl = self.element_decl(child, cloc, top=True)
                if decl is not None:
                    key = str(decl.name.local)
                    if key in elements:
                        self.err(cloc, Code.SCH005, f"element {key} is declared twice")
                    else:
                        elements[key] = decl
            elif local in ("complexType", "simpleType"):
                td = self.complex_type(child, cloc, top=True) if local == "complexType" else self.simple_type(child, cloc, top=True)
                if td is not None and td.name is not None:
                    if td.name in types:
                        self.err(cloc, Code.SCH005, f"type {td.name} is declared twice")
                    else:
                        types[td.name] = td
            else:
                self.err(cloc, Code.SCH005, f"{child.name} is not allowed at the top level")
        if self.errors:
            raise SchemaRejected(self.errors)
        return SchemaModel(self.prefix, MappingProxyType(elements), MappingProxyType(types))

    def element_decl(self, el: Element, loc: Loc, top: bool) -> ElementDecl | None:
        ok = self.check_attrs(el, "element/global" if top else "element/local", loc)
        name = self.ncname(_attr(el, "name"), loc, "element")
        if name is None:
            return None
        inline = self.children(el, loc.path)
        type_attr = _attr(el, "type")
        if type_attr is not None and inline:
            self.err(loc, Code.SCH005, "element has both a type attribute and an inline type")
            return None
        if len(inline) > 1:
            self.err(loc, Code.SCH005, "element may contain at most one inline type")
            return None
        td: TypeName | TypeDef | None
        if type_attr is not None:
            td = self.type_name(type_attr, loc)
        elif inline:
            local, child, cloc = inline[0]
            if local == "complexType":
                td = self.complex_type(child, cloc, top=False)
            elif local == "simpleType":
                td = self.simple_type(child, cloc, top=False)
            else:
                self.err(cloc, Code.SCH005, f"{child.name} is not allowed inside an element declaration")
                td = None
        else:
            self.err(loc, Code.SCH001, f"element {name} has no type, which makes it xs:anyType (a wildcard)")
            td = None
        if td is None or not ok:
            return None
        return ElementDecl(QName(SecureText.of(name)), td, loc)

    def local_element(self, el: Element, loc: Loc) -> ElemParticle | None:
        occurs = self.occurs(el, loc)
        ref = _attr(el, "ref")
        self.pid += 1
        pid = self.pid
        if ref is not None:
            self.check_attrs(el, "element/local", loc)
            if any(_attr(el, a) is not None for a in ("name", "type", "form")) or self.children(el, loc.path):
                self.err(loc, Code.SCH005, "an element reference cannot also declare a name, type or content")
                return None
            target = self.type_name(ref, loc)
            if target is None or occurs is None:
                return None
            return ElemParticle(ElementRef(target.local, loc), occurs, pid, loc)
        form = _attr(el, "form")
        if form is not None and form.strip() not in ("qualified", "unqualified"):
            self.err(loc, Code.SCH005, "form must be qualified or unqualified")
        decl = self.element_decl(el, loc, top=False)
        if decl is None or occurs is None:
            return None
        return ElemParticle(decl, occurs, pid, loc)

    def particle(self, local: str, el: Element, loc: Loc) -> Particle | None:
        if local == "element":
            return self.local_element(el, loc)
        if local in ("sequence", "choice"):
            self.check_attrs(el, local, loc)
            occurs = self.occurs(el, loc)
            items = []
            for clocal, child, cloc in self.children(el, loc.path):
                if clocal in ("element", "sequence", "choice"):
                    p = self.particle(clocal, child, cloc)
                    if p is not None:
                        items.append(p)
                elif clocal == "all":
                    self.err(cloc, Code.SCH005, "xs:all must be the whole content model")
                else:
                    self.err(cloc, Code.SCH005, f"{child.name} is not allowed inside {el.name}")
            if occurs is None:
                return None
            if local == "choice":
                if not items:
                    self.err(loc, Code.SCH005, "xs:choice needs at least one member")
                    return None
                return ChoiceParticle(tuple(items), occurs, loc)
            return SequenceParticle(tuple(items), occurs, loc)
        if local == "all":
            self.check_attrs(el, "all", loc)
            occurs = self.occurs(el, loc)
            if occurs is not None and (occurs.max != 1 or occurs.min > 1):
                self.err(loc, Code.SCH005, "xs:all must have minOccurs 0 or 1 and maxOccurs 1")
                occurs = None
            members: list[ElemParticle] = []
            for clocal, child, cloc in self.children(el, loc.path):
                if clocal != "element":
                    self.err(cloc, Code.SCH005, "xs:all may only contain element declarations")
                    continue
                p = self.local_element(child, cloc)
                if p is None:
                    continue
                if p.occurs.max != 1:
                    self.err(cloc, Code.SCH005, "members of xs:all may occur at most once")
                    continue
                members.append(p)
            if occurs is None:
                return None
            return AllParticle(tuple(members), occurs, loc)
        self.err(loc, Code.SCH005, f"{el.name} is not a particle")
        return None

    def attribute(self, el: Element, loc: Loc) -> AttrSpec | None:
        if _attr(el, "ref") is not None:
            self.err(loc, Code.SCH005, "attribute references are not supported")
            return None
        for banned in ("default", "fixed"):
            if _attr(el, banned) is not None:
                self.err(loc, Code.SCH005, f"{banned}= on attributes is not supported")
                return None
        ok = self.check_attrs(el, "attribute", loc)
        name = self.ncname(_attr(el, "name"), loc, "attribute")
        use = (_attr(el, "use") or "optional").strip()
        if use not in ("optional", "required"):
            self.err(loc, Code.SCH005, f'use="{use}" is not supported')
            ok = False
        inline = self.children(el, loc.path)
        type_attr = _attr(el, "type")
        st: TypeName | SimpleTypeDef | None
        if type_attr is not None and inline:
            self.err(loc, Code.SCH005, "attribute has both a type attribute and an inline type")
            return None
        if type_attr is not None:
            st = self.type_name(type_attr, loc)
        elif inline:
            local, child, cloc = inline[0]
            if local != "simpleType" or len(inline) > 1:
                self.err(cloc, Code.SCH005, "an attribute may only contain one xs:simpleType")
                return None
            st = self.simple_type(child, cloc, top=False)
        else:
            st = TypeName("string", BuiltinKind.STRING, loc)
        if st is None or name is None or not ok:
            return None
        return AttrSpec(QName(SecureText.of(name)), st, use == "required", loc)

    def attributes(self, items: list[tuple[str, Element, Loc]]) -> tuple[AttrSpec, ...]:
        out: list[AttrSpec] = []
        seen: set[str] = set()
        for _, child, cloc in items:
            spec = self.attribute(child, cloc)
            if spec is None:
                continue
            key = str(spec.name.local)
            if key in seen:
                self.err(cloc, Code.SCH005, f"attribute {key} is declared twice")
                continue
            seen.add(key)
            out.append(spec)
        return tuple(out)

    def complex_type(self, el: Element, loc: Loc, top: bool) -> ComplexType | None:
        ok = self.check_attrs(el, "complexType/global" if top else "complexType/local", loc)
        name = self.ncname(_attr(el, "name"), loc, "complexType") if top else None
        if top and name is None:
            return None
        items = self.children(el, loc.path)
        content: Particle | EmptyContent | SimpleContent = EmptyContent()
        attr_items = []
        seen_content = False
        for local, child, cloc in items:
            if local == "attribute":
                attr_items.append((local, child, cloc))
                continue
            if attr_items or seen_content:
                self.err(cloc, Code.SCH005, f"{child.name} is out of place in a complexType")
                ok = False
                continue
            seen_content = True
            if local in ("sequence", "choice", "all"):
                p = self.particle(local, child, cloc)
                if p is None:
                    ok = False
                else:
                    content = p
            elif local == "simpleContent":
                sc = self.simple_content(child, cloc)
                if sc is None:
                    ok = False
                else:
                    content, ext_attrs = sc
                    attr_items.extend(ext_attrs)
            elif local == "element":
                self.err(cloc, Code.SCH005, "element declarations must be inside a compositor")
                ok = False
            else:
                self.err(cloc, Code.SCH005, f"{child.name} is not allowed inside a complexType")
                ok = False
        attrs = self.attributes(attr_items)
        if not ok:
            return None
        return ComplexType(content, attrs, name, loc)

    def simple_content(self, el: Element, loc: Loc) -> tuple[SimpleContent, list] | None:
        self.check_attrs(el, "simpleContent", loc)
        items = self.children(el, loc.path)
        if len(items) != 1 or items[0][0] != "extension":
            self.err(loc, Code.SCH005, "xs:simpleContent must contain exactly one xs:extension")
            return None
        _, ext, eloc = items[0]
        self.check_attrs(ext, "extension", eloc)
        base = _attr(ext, "base")
        if base is None:
            self.err(eloc, Code.SCH005, "xs:extension requires a base")
            return None
        tn = self.type_name(base, eloc)
        attr_items = []
        for local, child, cloc in self.children(ext, eloc.path):
            if local == "attribute":
                attr_items.append((local, child, cloc))
            else:
                self.err(cloc, Code.SCH005, f"{child.name} is not allowed inside xs:extension")
        if tn is None:
            return None
        return SimpleContent(tn), attr_items

    def simple_type(self, el: Element, loc: Loc, top: bool) -> SimpleTypeDef | None:
        self.check_attrs(el, "simpleType/global" if top else "simpleType/local", loc)
        name = self.ncname(_attr(el, "name"), loc, "simpleType") if top else None
        if top and name is None:
            return None
        items = self.children(el, loc.path)
        if len(items) != 1 or items[0][0] != "restriction":
            self.err(loc, Code.SCH005, "xs:simpleType must contain exactly one xs:restriction")
            return None
        _, rest, rloc = items[0]
        self.check_attrs(rest, "restriction", rloc)
        base = _attr(rest, "base")
        if base is None:
            self.err(rloc, Code.SCH005, "xs:restriction requires a base attribute")
            return None
        tn = self.type_name(base, rloc)
        facets: list[Facet] = []
        for local, child, cloc in self.children(rest, rloc.path):
            cls = FACET_NAMES.get(local)
            if cls is None:
                self.err(cloc, Code.SCH005, f"{child.name} is not allowed inside xs:restriction")
                continue
            self.check_attrs(child, "facet", cloc)
            value = child.get("value")
            if value is None:
                self.err(cloc, Code.SCH005, f"{child.name} requires a value")
                continue
            if self.children(child, cloc.path):
                self.err(cloc, Code.SCH005, f"{child.name} cannot have content")
            facets.append(cls(value, cloc))
        if tn is None:
            return None
        return SimpleTypeDef(tn, tuple(facets), name, loc)


def build_schema(doc: XmlDocument, limits: Limits = DEFAULT_LIMITS) -> SchemaModel:
    """Translate a schema document; raises :class:`SchemaRejected`."""
    return _Builder(doc, limits).build()


# --- resolution ----------------------------------------------------------------------------


class _Resolver:
    def __init__(self, model: SchemaModel) -> None:
        self.model = model
        self.errors: list[Diagnostic] = []
        self.elements: list[RElement | None] = []
        self.types: list[RComplex | RSimple | None] = []
        self.builtin: dict[BuiltinKind, int] = {}
        self.named: dict[str, int] = {}
        self.global_elements: dict[str, int] = {}

    def err(self, loc: Loc, code: Code, message: str) -> None:
        self.errors.append(loc.diagnostic(code, message))

    def slot(self) -> int:
        self.types.append(None)
        return len(self.types) - 1

    def builtin_index(self, kind: BuiltinKind) -> int:
        idx = self.builtin.get(kind)
        if idx is None:
            idx = self.slot()
            self.types[idx] = RSimple(kind, None, (), f"xs:{kind.value}")
            self.builtin[kind] = idx
        return idx

    def resolve(self) -> ResolvedSchema:
        for name in self.model.global_types:
            self.named[name] = self.slot()
        for name in self.model.global_elements:
            self.elements.append(None)
            self.global_elements[name] = len(self.elements) - 1
        self.resolve_simple_chains()
        for name, td in self.model.global_types.items():
            if isinstance(td, ComplexType):
                self.types[self.named[name]] = self.complex(td, name)
        for name, decl in self.model.global_elements.items():
            idx = self.global_elements[name]
            self.elements[idx] = RElement(decl.name, self.element_type(decl), decl.loc)
        if self.errors:
            raise SchemaRejected(self.errors)
        assert all(t is not None for t in self.types) and all(e is not None for e in self.elements)
        return ResolvedSchema(
            elements=tuple(self.elements),  # type: ignore[arg-type]
            types=tuple(self.types),  # type: ignore[arg-type]
            roots=MappingProxyType(dict(self.global_elements)),
        )

    def resolve_simple_chains(self) -> None:
        """Fill the slots of named simple types, following ``base`` links iteratively.

        Each base link is followed once overall; a name met again on the
        current walk is a derivation cycle.
        """
        done: dict[str, bool] = {}  # name -> resolved successfully
        types = self.model.global_types
        for start, td in types.items():
            if start in done or not isinstance(td, SimpleTypeDef):
                continue
            path: list[str] = []
            on_path: set[str] = set()
            cur: str | None = start
            outcome = True
            while cur is not None:
                if cur in done:
                    outcome = done[cur]
                    break
                if cur in on_path:
                    cycle = path[path.index(cur) :]
                    first = min(cycle, key=lambda n: (types[n].loc.line, types[n].loc.col, n))
                    self.err(types[first].loc, Code.SCH003, f"simple type {first} derives from itself via {' -> '.join(cycle + [cur])}")
                    outcome = False
                    break
                node = types[cur]
                assert isinstance(node, SimpleTypeDef)
                path.append(cur)
                on_path.add(cur)
                base = node.base
                if base.builtin is not None:
                    break
                target = types.get(base.local)
                if target is None:
                    self.err(base.loc, Code.SCH002, f"type {base.local} is not declared")
                    outcome = False
                    break
                if not isinstance(target, SimpleTypeDef):
                    self.err(base.loc, Code.SCH005, f"type {base.local} is not a simple type")
                    outcome = False
                    break
                cur = base.local
            # unwind base-most first
            for name in reversed(path):
                if name in done:
                    continue
                done[name] = outcome
                if not outcome:
                    continue
                node = types[name]
                assert isinstance(node, SimpleTypeDef)
                if node.base.builtin is not None:
                    parent = self.builtin_index(node.base.builtin)
                else:
                    parent = self.named[node.base.local]
                parent_type = self.types[parent]
                assert isinstance(parent_type, RSimple)
                self.types[self.named[name]] = RSimple(parent_type.base, parent, node.facets, name, node.loc)
        for name in types:
            if isinstance(types[name], SimpleTypeDef) and not done.get(name, False):
                # Failed types still need a slot value; errors are already recorded.
                self.types[self.named[name]] = RSimple(BuiltinKind.STRING, None, (), name)

    def simple_ref(self, ref: TypeName | SimpleTypeDef, label: str) -> int | None:
        match ref:
            case TypeName(builtin=kind) if kind is not None:
                return self.builtin_index(kind)
            case TypeName(local=local):
                target = self.model.global_types.get(local)
                if target is None:
                    self.err(ref.loc, Code.SCH002, f"type {local} is not declared")
                    return None
                if not isinstance(target, SimpleTypeDef):
                    self.err(ref.loc, Code.SCH005, f"type {local} is not a simple type")
                    return None
                return self.named[local]
            case SimpleTypeDef():
                parent = self.simple_ref(ref.base, label)
                if parent is None:
                    return None
                parent_type = self.types[parent]
                assert isinstance(parent_type, RSimple)
                idx = self.slot()
                self.types[idx] = RSimple(parent_type.base, parent, ref.facets, label, ref.loc)
                return idx
        raise TypeError(ref)

    def element_type(self, decl: ElementDecl) -> int:
        label = f"element {decl.name}"
        match decl.type:
            case TypeName(builtin=kind) if kind is not None:
                return self.builtin_index(kind)
            case TypeName(local=local):
                idx = self.named.get(local)
                if idx is None:
                    self.err(decl.type.loc, Code.SCH002, f"type {local} is not declared")
                    return -1
                return idx
            case SimpleTypeDef():
                idx = self.simple_ref(decl.type, f"anonymous type of {label}")
                return -1 if idx is None else idx
            case ComplexType():
                idx = self.slot()
                self.types[idx] = self.complex(decl.type, f"anonymous type of {label}")
                return idx
        raise TypeError(decl.type)

    def complex(self, ct: ComplexType, label: str) -> RComplex:
        attrs = []
        for spec in ct.attributes:
            idx = self.simple_ref(spec.simple_type, f"attribute {spec.name} of {label}")
            if idx is not None:
                attrs.append(RAttr(spec.name, idx, spec.required, spec.loc))
        content: RParticle | EmptyContent | RSimpleContent
        match ct.content:
            case EmptyContent():
                content = EmptyContent()
            case SimpleContent(base):
                idx = self.simple_ref(base, label)
                content = RSimpleContent(-1 if idx is None else idx)
            case ElemParticle() | SequenceParticle() | ChoiceParticle() | AllParticle():
                content = self.particle(ct.content)
        return RComplex(content, tuple(attrs), label, ct.loc)

    def elem(self, p: ElemParticle) -> RElem:
        match p.term:
            case ElementRef(ref):
                idx = self.global_elements.get(ref)
                if idx is None:
                    self.err(p.loc, Code.SCH002, f"element {ref} is not declared")
                    idx = -1
            case ElementDecl():
                self.elements.append(None)
                idx = len(self.elements) - 1
                self.elements[idx] = RElement(p.term.name, self.element_type(p.term), p.term.loc)
        return RElem(idx, p.occurs, p.pid, p.loc)

    def particle(self, p: Particle) -> RParticle:
        match p:
            case ElemParticle():
                return self.elem(p)
            case SequenceParticle(items, occurs):
                return RSequence(tuple(self.particle(i) for i in items), occurs, p.loc)
            case ChoiceParticle(items, occurs):
                return RChoice(tuple(self.particle(i) for i in items), occurs, p.loc)
            case AllParticle(items, occurs):
                return RAll(tuple(self.elem(i) for i in items), occurs, p.loc)
        raise TypeError(p)


def resolve_refs(model: SchemaModel) -> ResolvedSchema:
    """Bind all names; raises :class:`SchemaRejected` with SCH002/SCH003/SCH005."""
    return _Resolver(model).resolve()
