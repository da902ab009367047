import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xsdguard.diagnostics import DEFAULT_LIMITS, Code, Limits
from xsdguard.securetext import SecureText
from xsdguard.xmlcore import Element, TextNode, WfError, check_name, parse_document, resolve_entity_ref


def parse(text: str, **limits):
    return parse_document(text.encode("utf-8"), DEFAULT_LIMITS.replace(**limits) if limits else DEFAULT_LIMITS)


def fails(text, code, **limits):
    data = text if isinstance(text, bytes) else text.encode("utf-8")
    with pytest.raises(WfError) as info:
        parse_document(data, DEFAULT_LIMITS.replace(**limits) if limits else DEFAULT_LIMITS)
    assert info.value.code == code, info.value
    return info.value


def test_minimal_document():
    doc = parse("<a/>")
    assert str(doc.root.name) == "a"
    assert doc.root.children == ()
    assert doc.total_nodes == 1
    assert doc.max_depth == 1


def test_numeric_references_rejected_with_position():
    err = fails("<a>&#115;</a>", Code.WF001)
    assert (err.line, err.col) == (1, 4)
    fails("<a>&#x73;</a>", Code.WF001)
    fails('<a b="&#115;"/>', Code.WF001)


def test_predefined_entities_only():
    doc = parse("<a>&lt;&gt;&amp;&quot;&apos;</a>")
    assert str(doc.root.children[0].text) == "<>&\"'"
    fails("<a>&nbsp;</a>", Code.WF002)
    assert resolve_entity_ref(SecureText.of("amp")) == "&"
    with pytest.raises(WfError):
        resolve_entity_ref(SecureText.of("#65"))


@pytest.mark.parametrize(
    "doc",
    [
        "<!DOCTYPE a><a/>",
        '<?xml version="1.0"?><!DOCTYPE a [<!ENTITY x "y">]><a/>',
        '<!DOCTYPE a SYSTEM "file:///etc/passwd"><a/>',
    ],
)
def test_doctype_rejected(doc):
    fails(doc, Code.WF003)


def test_billion_laughs_never_expands():
    bomb = '<?xml version="1.0"?><!DOCTYPE lolz [<!ENTITY lol "lol"><!ENTITY lol2 "&lol;&lol;">]><lolz>&lol2;</lolz>'
    fails(bomb, Code.WF003)


@pytest.mark.parametrize(
    "doc",
    ["<a>", "<a></b>", "<a><b></a></b>", "<a/><b/>", "text", "", "<a b='1' b='2'/>", "<a b=1/>", "<1a/>", "<a:b:c/>", "<a>]]></a>"],
)
def test_structural_errors(doc):
    fails(doc, Code.WF004)


def test_encoding_errors():
    fails(b"<a>\xc0\x80</a>", Code.WF005)
    fails('<?xml version="1.0" encoding="ISO-8859-1"?><a/>', Code.WF005)
    assert str(parse_document(b"\xef\xbb\xbf<a/>").root.name) == "a"


def test_forbidden_character_position():
    err = fails("<a>\x07</a>", Code.WF006)
    assert (err.line, err.col) == (1, 4)
    err = fails("<a>\n\n  \x01</a>", Code.WF006)
    assert (err.line, err.col) == (3, 3)


def test_xml_declaration():
    parse('<?xml version="1.0" encoding="UTF-8" standalone="yes"?><a/>')
    fails('<?xml version="1.1"?><a/>', Code.WF004)
    fails('<a/><?xml version="1.0"?>', Code.WF004)


def test_comments_pis_cdata_and_merging():
    doc = parse("<a>x<!-- c -->y<![CDATA[<z>]]>&amp;<?pi data?>w</a>")
    assert len(doc.root.children) == 1
    assert str(doc.root.children[0].text) == "xy<z>&w"
    fails("<a><!-- a -- b --></a>", Code.WF004)
    fails("<a><?xml bad?></a>", Code.WF004)


def test_newline_normalisation():
    doc = parse("<a>1\r\n2\r3</a>")
    assert str(doc.root.children[0].text) == "1\n2\n3"
    doc = parse('<a b="x\ty\nz"/>')
    assert str(doc.root.get("b")) == "x y z"


def test_positions_after_crlf():
    err = fails("<a>\r\n<b>\r\n&#1;</b></a>", Code.WF001)
    assert (err.line, err.col) == (3, 1)


def test_prefixed_names_kept_lexically():
    doc = parse('<p:a xmlns:p="urn:x" p:q="1"/>')
    assert str(doc.root.name.prefix) == "p" and str(doc.root.name.local) == "a"
    assert doc.root.get("q") is None


def test_depth_limit():
    parse("<a>" * 256 + "</a>" * 256)
    err = fails("<a>" * 257 + "</a>" * 257, Code.LIM001)
    assert err.line == 1
    fails("<a><a><a/></a></a>", Code.LIM001, max_depth=2)


def test_depth_bomb_is_cheap():
    import time

    data = b"<a>" * 1_000_000
    t = time.perf_counter()
    fails(data, Code.LIM001)
    assert time.perf_counter() - t < 1.0


def test_other_limits():
    fails("<a>" + "x" * 100 + "</a>", Code.LIM002, max_input_bytes=50)
    fails("<" + "a" * 2000 + "/>", Code.LIM003)
    fails("<a " + " ".join(f"x{i}='1'" for i in range(65)) + "/>", Code.LIM004)
    fails("<a b='" + "x" * 100 + "'/>", Code.LIM002, max_attr_value_bytes=10)
    fails("<a>" + "<b/>" * 20 + "</a>", Code.LIM007, max_total_nodes=10)
    fails("<a>" + "<!---->" * 20 + "</a>", Code.LIM007, max_total_nodes=10)


def test_check_name():
    assert str(check_name(SecureText.of("x:y"))) == "x:y"
    with pytest.raises(WfError):
        check_name(SecureText.of("x:y:z"))
    with pytest.raises(WfError) as info:
        check_name(SecureText.of("a" * 10), Limits(max_name_bytes=5))
    assert info.value.code == Code.LIM003


def _adjacent_text(el: Element) -> bool:
    stack = [el]
    while stack:
        e = stack.pop()
        for x, y in zip(e.children, e.children[1:]):
            if isinstance(x, TextNode) and isinstance(y, TextNode):
                return True
        stack.extend(c for c in e.children if isinstance(c, Element))
    return False


fragments = st.lists(
    st.sampled_from(["<b>", "</b>", "<c/>", "t", " ", "&amp;", "<!--x-->", "<![CDATA[q]]>", "<?p?>", "\r\n", "&#65;", "<d e='1'>", "</d>"]),
    max_size=12,
)


@given(fragments)
@settings(max_examples=300)
def test_merge_invariant_and_purity(parts):
    data = ("<a>" + "".join(parts) + "</a>").encode()
    try:
        first = parse_document(data)
    except WfError as e1:
        with pytest.raises(WfError) as e2:
            parse_document(data)
        assert e2.value == e1
        return
    assert parse_document(data).root == first.root
    assert not _adjacent_text(first.root)


@given(st.binary(max_size=64))
@settings(max_examples=300)
def test_error_positions_inside_input(data):
    try:
        parse_document(data)
    except WfError as err:
        text = data.decode("utf-8", "replace").replace("\r\n", "\n").replace("\r", "\n")
        lines = text.split("\n")
        assert 1 <= err.line <= len(lines)
        assert 1 <= err.col <= len(lines[err.line - 1]) + 1


def test_totality_on_mutated_documents():
    rng = random.Random(7)
    seed = b'<?xml version="1.0"?><root a="1"><x>t&amp;</x><!--c--><y b="2"/><![CDATA[z]]></root>'
    for _ in range(2000):
        data = bytearray(seed)
        for _ in range(rng.randint(1, 4)):
            i = rng.randrange(len(data))
            data[i] = rng.randrange(256)
        try:
            parse_document(bytes(data))
        except WfError:
            pass


def test_parser_touches_no_files_or_network(monkeypatch):
    import builtins
    import socket

    def refuse(*args, **kwargs):
        raise AssertionError("resource access during parsing")

    monkeypatch.setattr(builtins, "open", refuse)
    monkeypatch.setattr(socket, "socket", refuse)
    for doc in [b'<!DOCTYPE a SYSTEM "http://example.com/x.dtd"><a/>', b"<a>&ext;</a>", b'<a xmlns:xi="http://www.w3.org/2001/XInclude"><xi:include href="/etc/passwd"/></a>']:
        try:
            parse_document(doc)
        except WfError:
            pass
