import hashlib
import io
import random
import re

import pytest

import xsdguard.cli as cli
from cli_fuzz import fuzz
from schemas import schema
from xsdguard import __version__
from xsdguard.cli import (
    AuditReport,
    CheckSchema,
    DocEntry,
    Help,
    UsageError,
    Validate,
    Version,
    main,
    parse_args,
    render_report,
)
from xsdguard.diagnostics import DEFAULT_LIMITS, Code, Diagnostic

FIXED_TIME = "2024-01-01T00:00:00Z"

SCHEMA = schema(
    '<xs:element name="r"><xs:complexType><xs:sequence>'
    '<xs:element name="n" type="xs:integer" maxOccurs="unbounded"/>'
    "</xs:sequence></xs:complexType></xs:element>"
)


class Result:
    def __init__(self, code: int, out: str, err: str) -> None:
        self.code, self.out, self.err = code, out, err


def invoke(argv, stdin: bytes = b"", clock=lambda: FIXED_TIME) -> Result:
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdin=io.BytesIO(stdin), stdout=out, stderr=err, clock=clock)
    return Result(code, out.getvalue(), err.getvalue())


@pytest.fixture
def files(tmp_path):
    def write(name: str, content: str | bytes) -> str:
        p = tmp_path / name
        p.write_bytes(content.encode() if isinstance(content, str) else content)
        return str(p)

    write.dir = tmp_path
    return write


# --- parse_args ------------------------------------------------------------------------


def test_parse_examples():
    assert parse_args(["validate", "--schema", "s.xsd", "d.xml"]) == Validate("s.xsd", ("d.xml",))
    with pytest.raises(UsageError, match="unknown flag"):
        parse_args(["validate", "--schma", "s.xsd", "d.xml"])
    with pytest.raises(UsageError, match="more than once"):
        parse_args(["validate", "--schema", "a.xsd", "--schema", "b.xsd", "d.xml"])
    assert parse_args(["check-schema", "s.xsd"]) == CheckSchema("s.xsd")
    assert parse_args(["--version"]) == Version()
    assert parse_args(["--help"]) == Help()


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["--Version"],
        ["--version", "x"],
        ["--vers"],
        ["-h"],
        ["check-schema"],
        ["check-schema", "a", "b"],
        ["check-schema", "-x"],
        ["check-schema", "--"],
        ["validate"],
        ["validate", "d.xml"],
        ["validate", "--schema", "s.xsd"],
        ["validate", "--schema"],
        ["validate", "--schema=s.xsd", "d.xml"],
        ["validate", "--sch", "s.xsd", "d.xml"],
        ["validate", "-s", "s.xsd", "d.xml"],
        ["validate", "--schema", "--report", "d.xml"],
        ["validate", "--schema", "s.xsd", "d.xml", "--report", "r"],
        ["validate", "--schema", "s.xsd", "--report", "r", "--report", "q", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit", "max_depth", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit", "max_depth=0", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit", "max_depth=-1", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit", "max_depth=1e3", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit", "max_dept=5", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit", "max_depth=5", "--limit", "max_depth=6", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit", "max_depth=99999999", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit-unsafe", "max_depth=5", "d.xml"],
        ["validate", "--schema", "s.xsd", "--limit", "max_depth=5", "--limit-unsafe", "max_depth=9999", "d.xml"],
        ["validate", "--schema", "s.xsd", "-", "d.xml"],
        ["validate", "--schema", "s.xsd", "--report", "d.xml", "d.xml"],
        ["validate", "--schema", "s.xsd", "--report", "s.xsd", "d.xml"],
        ["validate", "--schema", "s.xsd", "x-report", "d.xml"],
        ["validate", "--schema", "s.xsd", "a-"],
        ["frobnicate"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_args(argv)


def test_limits_and_separator():
    cmd = parse_args(
        ["validate", "--limit", "max_depth=10", "--schema", "s.xsd", "--limit-unsafe", "max_total_nodes=2000000", "--", "-x", "--report"]
    )
    assert cmd == Validate("s.xsd", ("-x", "--report"), None, (("max_depth", 10),), (("max_total_nodes", 2000000),))
    assert cmd.effective_limits().max_depth == 10
    assert cmd.effective_limits().max_total_nodes == 2000000
    equal = parse_args(["validate", "--schema", "s", "--limit", f"max_depth={DEFAULT_LIMITS.max_depth}", "d"])
    assert equal.effective_limits() == DEFAULT_LIMITS


def test_mutation_fuzz_has_no_silent_misparse():
    assert fuzz(3000, seed=1) == []


def test_fuzz_detects_a_lax_parser(monkeypatch):
    # without the near-flag guard, a mistyped last flag turns its value into a document
    def lax(token, what):
        if token == "" or token.startswith("-"):
            raise UsageError(what)
        return token

    monkeypatch.setattr(cli, "_operand", lax)
    assert fuzz(3000, seed=1) != []


# --- running ---------------------------------------------------------------------------


def test_version_and_help():
    r = invoke(["--version"])
    assert (r.code, r.out, r.err) == (0, f"xsdguard {__version__}\n", "")
    r = invoke(["--help"])
    assert r.code == 0 and r.out.startswith("usage:") and r.err == ""


def test_usage_exit_code():
    r = invoke(["validate", "--schma", "s.xsd", "d.xml"])
    assert r.code == 4 and r.out == ""
    assert r.err.splitlines()[0].startswith("xsdguard: unknown flag")


def test_check_schema(files):
    good = files("s.xsd", SCHEMA)
    r = invoke(["check-schema", good])
    assert (r.code, r.out, r.err) == (0, "", "")
    bad = files("bad.xsd", schema('<xs:element name="a"><xs:complexType><xs:sequence><xs:any/></xs:sequence></xs:complexType></xs:element>'))
    r = invoke(["check-schema", bad])
    assert r.code == 3 and r.out == ""
    assert r.err.startswith("SCH001\t")
    r = invoke(["check-schema", str(files.dir / "missing.xsd")])
    assert r.code == 5 and r.err.startswith("IO001\t")


def test_validate_outcomes(files):
    s = files("s.xsd", SCHEMA)
    ok = files("ok.xml", "<r><n>1</n><n>2</n></r>")
    bad = files("bad.xml", "<r><n>x</n></r>")
    ncr = files("ncr.xml", "<r><n>&#115;</n></r>")
    r = invoke(["validate", "--schema", s, ok])
    assert (r.code, r.out, r.err) == (0, f"{ok}\tVALID\n", "")
    r = invoke(["validate", "--schema", s, bad])
    assert r.code == 1 and r.out == f"{bad}\tINVALID\n"
    assert r.err.startswith("VAL005\t1:7\t/r[1]/n[1]\t")
    r = invoke(["validate", "--schema", s, ncr])
    assert r.code == 2 and r.out == f"{ncr}\tINVALID\n" and r.err.startswith("WF001\t")
    r = invoke(["validate", "--schema", s, ok, bad, ncr])
    assert r.code == 2
    assert r.out.splitlines() == [f"{ok}\tVALID", f"{bad}\tINVALID", f"{ncr}\tINVALID"]
    missing = str(files.dir / "nope.xml")
    r = invoke(["validate", "--schema", s, ok, missing, bad])
    assert r.code == 5
    assert r.out.splitlines() == [f"{ok}\tVALID", f"{missing}\tINVALID", f"{bad}\tINVALID"]


def test_schema_rejection_processes_no_documents(files):
    s = files("s.xsd", schema('<xs:element name="a"><xs:complexType><xs:sequence><xs:any/></xs:sequence></xs:complexType></xs:element>'))
    d = files("d.xml", "<a/>")
    rep = str(files.dir / "r.txt")
    r = invoke(["validate", "--schema", s, "--report", rep, d])
    assert r.code == 3 and r.out == "" and "SCH001" in r.err
    assert not (files.dir / "r.txt").exists()


def test_limits_applied(files):
    s = files("s.xsd", SCHEMA)
    d = files("d.xml", "<r>" + "<n>1</n>" * 30 + "</r>")
    assert invoke(["validate", "--schema", s, d]).code == 0
    # limits also govern the schema, which here is smaller than the document
    r = invoke(["validate", "--schema", s, "--limit", "max_total_nodes=20", d])
    assert r.code == 2 and r.err.startswith("LIM")


def test_stdin_document(files):
    s = files("s.xsd", SCHEMA)
    r = invoke(["validate", "--schema", s, "-"], stdin=b"<r><n>5</n></r>")
    assert (r.code, r.out) == (0, "-\tVALID\n")
    r = invoke(["validate", "--schema", s, "-"], stdin=b"<r>")
    assert r.code == 2


def test_stream_discipline(files):
    s = files("s.xsd", SCHEMA)
    docs = [files(f"d{i}.xml", text) for i, text in enumerate(["<r><n>1</n></r>", "<r/>", "<r><q/></r>", "<<", "<r><n>&#x73;</n></r>"])]
    r = invoke(["validate", "--schema", s, *docs])
    verdict_line = re.compile(r"^.*\t(VALID|INVALID)$")
    diag_line = re.compile(r"^[A-Z]{2,3}\d{3}\t\d+:\d+\t/[^\t]*\t[^\t]*$")
    assert len(r.out.splitlines()) == len(docs)
    assert all(verdict_line.match(line) for line in r.out.splitlines())
    assert r.err and all(diag_line.match(line) for line in r.err.splitlines())
    assert not any(verdict_line.match(line) for line in r.err.splitlines())


def test_report_contents(files):
    s = files("s.xsd", SCHEMA)
    ok = files("ok.xml", "<r><n>1</n></r>")
    ncr = files("ncr.xml", "<r><n>&#115;</n></r>")
    rep = str(files.dir / "audit.txt")
    r = invoke(["validate", "--schema", s, "--report", rep, "--limit-unsafe", "max_depth=300", ok, ncr])
    text = (files.dir / "audit.txt").read_text()
    lines = text.splitlines()
    assert lines[0] == f"tool xsdguard {__version__}"
    assert lines[1] == f"time {FIXED_TIME}"
    assert lines[2] == "schema-sha256 " + hashlib.sha256(SCHEMA.encode()).hexdigest()
    assert lines[3].startswith("limits ") and "max_depth=300" in lines[3]
    names = [kv.split("=")[0] for kv in lines[3].split()[1:]]
    assert names == sorted(names)
    assert lines[4] == "unsafe-limits max_depth=300"
    digest = hashlib.sha256(b"<r><n>1</n></r>").hexdigest()
    assert lines[5] == f"doc {ok} sha256={digest} verdict=VALID"
    assert lines[6].startswith(f"doc {ncr} sha256=") and lines[6].endswith("verdict=INVALID")
    # the diagnostic line is exactly what went to stderr
    assert lines[7] == "  " + r.err.splitlines()[0]
    assert len(lines) == 8


def test_report_is_deterministic(files):
    s = files("s.xsd", SCHEMA)
    docs = [files("a.xml", "<r><n>1</n></r>"), files("b.xml", "<r><z/></r>")]
    outputs = []
    for stamp in ("2024-01-01T00:00:00Z", "2025-06-30T12:34:56Z"):
        rep = str(files.dir / "rep.txt")
        r = invoke(["validate", "--schema", s, "--report", rep, *docs], clock=lambda: stamp)
        report = [line for line in (files.dir / "rep.txt").read_text().splitlines() if not line.startswith("time ")]
        outputs.append((r.code, r.out, r.err, report))
    assert outputs[0] == outputs[1]


def test_report_write_failure(files):
    s = files("s.xsd", SCHEMA)
    d = files("d.xml", "<r><n>1</n></r>")
    r = invoke(["validate", "--schema", s, "--report", str(files.dir / "no" / "such" / "r.txt"), d])
    assert r.code == 5 and r.out == f"{d}\tVALID\n" and "IO001" in r.err


def test_render_report_unreadable_document():
    rep = AuditReport(
        "1.0", FIXED_TIME, "00", DEFAULT_LIMITS, (),
        (DocEntry("x\ty", None, False, (Diagnostic(1, 1, Code.IO001, "/", "cannot read"),)),),
    )
    text = render_report(rep)
    assert "doc x\\ty sha256=unavailable verdict=INVALID" in text


def test_exit_codes_are_total(files):
    s = files("s.xsd", SCHEMA)
    rng = random.Random(3)
    for i in range(300):
        data = bytes(rng.randrange(256) for _ in range(rng.randint(0, 40)))
        if rng.random() < 0.5:
            base = bytearray(b"<r><n>12</n><n>3</n></r>")
            base[rng.randrange(len(base))] = rng.randrange(256)
            data = bytes(base)
        r = invoke(["validate", "--schema", s, "-"], stdin=data)
        assert r.code in (0, 1, 2, 5)
        assert len(r.out.splitlines()) == 1


def test_real_process_entry_point(files):
    import subprocess
    import sys

    s = files("s.xsd", SCHEMA)
    d = files("d.xml", "<r><n>1</n></r>")
    proc = subprocess.run([sys.executable, "-m", "xsdguard", "validate", "--schema", s, d], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == f"{d}\tVALID\n"
    proc = subprocess.run([sys.executable, "-m", "xsdguard", "--bogus"], capture_output=True, text=True)
    assert proc.returncode == 4
