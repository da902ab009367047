import random
from types import MappingProxyType

import networkx as nx
import pytest

from schemas import codes, schema
from xsdguard.diagnostics import Code, Limits, Loc
from xsdguard.securetext import SecureText
from xsdguard.simpletypes import BuiltinKind, MaxLength
from xsdguard.xmlcore import QName, parse_document
from xsdguard.xsdmodel import (
    ComplexType,
    ElemParticle,
    ElementDecl,
    ElementRef,
    EmptyContent,
    Occurs,
    RSimple,
    SchemaModel,
    SchemaRejected,
    SequenceParticle,
    SimpleTypeDef,
    TypeName,
    build_schema,
    resolve_refs,
    screen_constructs,
)


def doc(text: str):
    return parse_document(text.encode())


def build(text: str):
    return build_schema(doc(text))


def build_codes(text: str) -> list[str]:
    try:
        resolve_refs(build(text))
    except SchemaRejected as exc:
        return [d.code.value for d in exc.diagnostics]
    return []


FORBIDDEN = [
    '<xs:element name="a"><xs:complexType><xs:sequence><xs:any/></xs:sequence></xs:complexType></xs:element>',
    '<xs:element name="a"><xs:complexType><xs:anyAttribute/></xs:complexType></xs:element>',
    '<xs:include schemaLocation="other.xsd"/>',
    '<xs:import namespace="urn:x" schemaLocation="x.xsd"/>',
    '<xs:redefine schemaLocation="x.xsd"/>',
    '<xs:override schemaLocation="x.xsd"/>',
    '<xs:notation name="n" public="p"/>',
    '<xs:simpleType name="u"><xs:union memberTypes="xs:string xs:integer"/></xs:simpleType>',
    '<xs:simpleType name="l"><xs:list itemType="xs:integer"/></xs:simpleType>',
    '<xs:element name="h" type="xs:string"/><xs:element name="a" type="xs:string" substitutionGroup="h"/>',
    '<xs:element name="a" type="xs:string" abstract="true"/>',
    '<xs:complexType name="t" mixed="true"><xs:sequence/></xs:complexType>',
    '<xs:element name="a" type="xs:string" default="x"/>',
    '<xs:element name="a" type="xs:string" fixed="x"/>',
    '<xs:element name="a" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:type="xs:string"/>',
    '<xs:element name="a"/>',
    '<xs:element name="a" type="xs:anyType"/>',
]


@pytest.mark.parametrize("body", FORBIDDEN)
def test_forbidden_constructs_screened(body):
    found = screen_constructs(doc(schema(body)))
    assert Code.SCH001 in {d.code for d in found} or body in (
        '<xs:element name="a"/>',
        '<xs:element name="a" type="xs:anyType"/>',
    )
    assert "SCH001" in codes(schema(body))


@pytest.mark.parametrize("body", FORBIDDEN)
def test_build_rejects_forbidden_without_screening(body):
    with pytest.raises(SchemaRejected) as info:
        resolve_refs(build(schema(body)))
    assert Code.SCH001 in {d.code for d in info.value.diagnostics}


@pytest.mark.parametrize(
    "body",
    [
        '<xs:complexType name="t"><xs:complexContent><xs:extension base="u"/></xs:complexContent></xs:complexType>',
        '<xs:group name="g"><xs:sequence/></xs:group>',
        '<xs:attributeGroup name="g"/>',
        '<xs:element name="a" type="xs:long"/>',
        '<xs:element name="a" type="xs:string" nillable="true"/>',
        '<xs:simpleType name="t"><xs:restriction base="xs:decimal"><xs:totalDigits value="3"/></xs:restriction></xs:simpleType>',
        '<xs:simpleType name="t"><xs:restriction base="xs:string"><xs:whiteSpace value="collapse"/></xs:restriction></xs:simpleType>',
        '<xs:element name="a" type="xs:string"/><xs:element name="a" type="xs:integer"/>',
        '<xs:element name="a" type="xs:string" bogus="1"/>',
        '<xs:element name="a"><xs:complexType><xs:attribute name="x" default="1"/></xs:complexType></xs:element>',
        '<xs:element name="a"><xs:complexType><xs:sequence><xs:element name="b" type="xs:string" maxOccurs="0"/></xs:sequence></xs:complexType></xs:element>',
        '<foo/>',
    ],
)
def test_unsupported_constructs(body):
    assert "SCH005" in codes(schema(body))


def test_non_schema_root():
    assert codes("<schema/>") == ["SCH005"]
    assert codes('<xs:element xmlns:xs="http://www.w3.org/2001/XMLSchema" name="a"/>') == ["SCH005"]


def test_default_namespace_vocabulary():
    text = '<schema xmlns="http://www.w3.org/2001/XMLSchema"><element name="a" type="string"/></schema>'
    assert codes(text) == []
    text = '<schema xmlns="http://www.w3.org/2001/XMLSchema"><any/></schema>'
    assert codes(text) == ["SCH001"]


def test_other_prefix_for_vocabulary():
    text = '<q:schema xmlns:q="http://www.w3.org/2001/XMLSchema"><q:element name="a" type="q:integer"/></q:schema>'
    assert codes(text) == []


def test_annotations_are_skipped():
    body = (
        '<xs:annotation><xs:documentation><any/><p>free text</p></xs:documentation></xs:annotation>'
        '<xs:element name="a" type="xs:string"><xs:annotation><xs:appinfo>x</xs:appinfo></xs:annotation></xs:element>'
    )
    assert codes(schema(body)) == []


def test_dangling_references():
    assert build_codes(schema('<xs:element name="a" type="Missing"/>')) == ["SCH002"]
    body = '<xs:element name="a"><xs:complexType><xs:sequence><xs:element ref="nope"/></xs:sequence></xs:complexType></xs:element>'
    assert build_codes(schema(body)) == ["SCH002"]
    assert build_codes(schema('<xs:element name="a" type="1bad"/>')) == ["SCH002"]


def test_derivation_cycle():
    body = (
        '<xs:simpleType name="A"><xs:restriction base="B"/></xs:simpleType>'
        '<xs:simpleType name="B"><xs:restriction base="A"/></xs:simpleType>'
        '<xs:simpleType name="C"><xs:restriction base="C"/></xs:simpleType>'
    )
    assert build_codes(schema(body)) == ["SCH003", "SCH003"]


def test_recursive_elements_are_allowed():
    body = (
        '<xs:element name="node"><xs:complexType><xs:sequence>'
        '<xs:element ref="node" minOccurs="0" maxOccurs="unbounded"/>'
        "</xs:sequence></xs:complexType></xs:element>"
    )
    assert codes(schema(body)) == []


def test_occurs_bounds():
    body = '<xs:element name="a"><xs:complexType><xs:sequence><xs:element name="b" type="xs:string" maxOccurs="{}"/></xs:sequence></xs:complexType></xs:element>'
    assert codes(schema(body.format(1024))) == []
    assert codes(schema(body.format(1025))) == ["LIM005"]
    assert codes(schema(body.format("99999999999999999999"))) == ["LIM005"]
    assert codes(schema(body.format("-1"))) == ["SCH005"]


def test_all_group_rules():
    ok = '<xs:element name="a"><xs:complexType><xs:all><xs:element name="b" type="xs:string"/><xs:element name="c" type="xs:string" minOccurs="0"/></xs:all></xs:complexType></xs:element>'
    assert codes(schema(ok)) == []
    many = '<xs:element name="a"><xs:complexType><xs:all><xs:element name="b" type="xs:string" maxOccurs="2"/></xs:all></xs:complexType></xs:element>'
    assert codes(schema(many)) == ["SCH005"]
    nested = '<xs:element name="a"><xs:complexType><xs:sequence><xs:all/></xs:sequence></xs:complexType></xs:element>'
    assert codes(schema(nested)) == ["SCH005"]


def test_diagnostics_are_located_inside_schema():
    text = schema('\n<xs:element name="a" type="Missing"/>\n<xs:element name="b" type="xs:long"/>\n<xs:any/>')
    lines = text.split("\n")
    for fn in (lambda: screen_constructs(doc(text)), lambda: codes(text)):
        fn()
    try:
        resolve_refs(build(text))
    except SchemaRejected as exc:
        diags = exc.diagnostics
    for d in list(diags) + screen_constructs(doc(text)):
        assert 1 <= d.line <= len(lines)
        assert 1 <= d.col <= len(lines[d.line - 1])
        assert d.path.startswith("/xs:schema[1]")


def test_build_is_deterministic():
    text = schema(
        '<xs:element name="a"><xs:complexType><xs:sequence><xs:element name="b" type="T" maxOccurs="3"/>'
        '</xs:sequence></xs:complexType></xs:element><xs:simpleType name="T"><xs:restriction base="xs:string">'
        '<xs:maxLength value="3"/></xs:restriction></xs:simpleType>'
    )
    assert build(text) == build(text)
    assert resolve_refs(build(text)) == resolve_refs(build(text))
    bad = schema('<xs:element name="a" type="Q"/><xs:any/><xs:element name="c"/>')
    first = [screen_constructs(doc(bad)), codes(bad)]
    assert first == [screen_constructs(doc(bad)), codes(bad)]


def test_schema_nesting_cap():
    deep = '<xs:element name="a"><xs:complexType>' + "<xs:sequence>" * 130 + "</xs:sequence>" * 130 + "</xs:complexType></xs:element>"
    assert codes(schema(deep)) == ["LIM001"]


# --- adversarial reference graphs -----------------------------------------------------


def _model(n: int, rng: random.Random, edges_per_node: int = 3):
    names = [f"t{i}" for i in range(n)]
    types = {}
    graph = nx.DiGraph()
    graph.add_nodes_from(names)
    for i, name in enumerate(names):
        roll = rng.random()
        if roll < 0.1:
            base = TypeName("string", BuiltinKind.STRING)
        elif roll < 0.12:
            base = TypeName(f"missing{i}")
        else:
            target = rng.choice(names)
            base = TypeName(target)
            graph.add_edge(name, target)
        types[name] = SimpleTypeDef(base, (MaxLength(SecureText.of("5")),), name, Loc(i + 1, 1))
    elements = {}
    for i in range(n):
        refs = tuple(
            ElemParticle(ElementRef(f"e{rng.randrange(n)}"), Occurs(0, None), j) for j in range(edges_per_node)
        )
        content = SequenceParticle(refs, Occurs()) if refs else EmptyContent()
        elements[f"e{i}"] = ElementDecl(QName(SecureText.of(f"e{i}")), ComplexType(content, ()), Loc(i + 1, 2))
    model = SchemaModel("xs", MappingProxyType(elements), MappingProxyType(types))
    return model, graph


@pytest.mark.parametrize("n, seed", [(50, 1), (500, 2), (10_000, 3), (10_000, 4)])
def test_resolution_terminates_on_random_graphs(n, seed):
    model, graph = _model(n, random.Random(seed))
    try:
        resolved = resolve_refs(model)
    except SchemaRejected as exc:
        found = {d.code for d in exc.diagnostics}
        assert found <= {Code.SCH002, Code.SCH003}
        has_cycle = not nx.is_directed_acyclic_graph(graph)
        assert (Code.SCH003 in found) == has_cycle
        # one report per cycle, each at a member of that cycle
        cycles = list(nx.simple_cycles(graph))
        assert sum(1 for d in exc.diagnostics if d.code == Code.SCH003) == len(cycles)
        return
    assert nx.is_directed_acyclic_graph(graph)
    assert all(isinstance(t, (RSimple,)) or t is not None for t in resolved.types)


def test_cycle_detection_agrees_with_networkx():
    rng = random.Random(5)
    for _ in range(200):
        n = rng.randint(1, 12)
        names = [f"t{i}" for i in range(n)]
        graph = nx.DiGraph()
        graph.add_nodes_from(names)
        types = {}
        for i, name in enumerate(names):
            if rng.random() < 0.3:
                base = TypeName("integer", BuiltinKind.INTEGER)
            else:
                target = rng.choice(names)
                graph.add_edge(name, target)
                base = TypeName(target)
            types[name] = SimpleTypeDef(base, (), name, Loc(i + 1, 1))
        model = SchemaModel("xs", MappingProxyType({}), MappingProxyType(types))
        try:
            resolve_refs(model)
            cycles = 0
        except SchemaRejected as exc:
            assert {d.code for d in exc.diagnostics} == {Code.SCH003}
            cycles = len(exc.diagnostics)
        assert cycles == len(list(nx.simple_cycles(graph)))


def test_chain_of_ten_thousand_derivations_compiles():
    from xsdguard.content import compile_schema

    n = 10_000
    types = {"t0": SimpleTypeDef(TypeName("string", BuiltinKind.STRING), (), "t0")}
    for i in range(1, n):
        types[f"t{i}"] = SimpleTypeDef(TypeName(f"t{i - 1}"), (), f"t{i}")
    elements = {"a": ElementDecl(QName(SecureText.of("a")), TypeName(f"t{n - 1}"))}
    model = SchemaModel("xs", MappingProxyType(elements), MappingProxyType(types))
    compiled = compile_schema(resolve_refs(model), Limits())
    assert "a" in compiled.roots
