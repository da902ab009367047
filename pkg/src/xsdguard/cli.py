"""Command line front end.

Grammar (nothing else is accepted)::

    xsdguard check-schema [--] <schema>
    xsdguard validate --schema <schema> [--report <path>]
                      [--limit name=value]... [--limit-unsafe name=value]...
                      [--] <doc>...
    xsdguard --version
    xsdguard --help

Flags are matched exactly and may appear once (``--limit`` and
``--limit-unsafe`` once per limit name).  Flags must precede the documents.
An operand may not start with ``-`` or be one edit away from a flag unless
it follows ``--``.
Exit codes: 0 valid, 1 invalid, 2 not well-formed or over a limit, 3 schema
rejected, 4 usage error, 5 I/O failure.  With several documents the highest
code wins.
"""
from __future__ import annotations

import datetime
import hashlib
import re
import sys
from dataclasses import dataclass, field
from typing import BinaryIO, Callable, TextIO, Union

from typing_extensions import assert_never

from . import __version__
from .content import CompiledSchema
from .diagnostics import DEFAULT_LIMITS, Code, Diagnostic, Limits, escape_field, render_line
from .validator import Invalid, Valid, load_schema, validate_document
from .xmlcore import WfError, parse_document
from .xsdmodel import SchemaRejected

__all__ = [
    "UsageError",
    "CheckSchema",
    "Validate",
    "Version",
    "Help",
    "Command",
    "DocEntry",
    "AuditReport",
    "parse_args",
    "run",
    "render_report",
    "write_report",
    "main",
    "EXIT_VALID",
    "EXIT_INVALID",
    "EXIT_MALFORMED",
    "EXIT_SCHEMA",
    "EXIT_USAGE",
    "EXIT_IO",
]

EXIT_VALID = 0
EXIT_INVALID = 1
EXIT_MALFORMED = 2
EXIT_SCHEMA = 3
EXIT_USAGE = 4
EXIT_IO = 5

USAGE = """\
usage: xsdguard check-schema [--] <schema>
       xsdguard validate --schema <schema> [--report <path>]
                         [--limit name=value]... [--limit-unsafe name=value]...
                         [--] <doc>...
       xsdguard --version
       xsdguard --help

Exit codes: 0 valid, 1 invalid, 2 not well-formed or limit exceeded,
3 schema rejected, 4 usage error, 5 I/O failure.
A document path of - reads standard input (only as the sole document).
Limits: """ + ", ".join(Limits.names()) + "\n"


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class CheckSchema:
    schema_path: str


@dataclass(frozen=True)
class Validate:
    schema_path: str
    doc_paths: tuple[str, ...]
    report_path: str | None = None
    limits: tuple[tuple[str, int], ...] = ()  # --limit overrides, sorted by name
    unsafe_limits: tuple[tuple[str, int], ...] = ()  # --limit-unsafe overrides, sorted by name

    def __post_init__(self) -> None:
        if not self.doc_paths:
            raise ValueError("Validate needs at least one document")

    def effective_limits(self) -> Limits:
        return DEFAULT_LIMITS.replace(**dict(self.limits), **dict(self.unsafe_limits))


@dataclass(frozen=True)
class Version:
    pass


@dataclass(frozen=True)
class Help:
    pass


Command = Union[CheckSchema, Validate, Version, Help]

_LIMIT = re.compile(r"([a-z_]+)=([0-9]+)")
_DEFAULTS = DEFAULT_LIMITS.as_dict()


def _limit(token: str, unsafe: bool) -> tuple[str, int]:
    m = _LIMIT.fullmatch(token)
    if m is None:
        raise UsageError(f"limit must be name=value with a decimal value, got {token!r}")
    name, raw = m.group(1), m.group(2)
    if name not in _DEFAULTS:
        raise UsageError(f"unknown limit {name!r}")
    if len(raw) > 18:
        raise UsageError(f"limit value for {name} is too large")
    value = int(raw)
    if value <= 0:
        raise UsageError(f"limit {name} must be positive")
    default = _DEFAULTS[name]
    if not unsafe and value > default:
        raise UsageError(f"limit {name}={value} is above the default {default}; use --limit-unsafe to raise it")
    if unsafe and value <= default:
        raise UsageError(f"--limit-unsafe {name}={value} does not raise the default {default}; use --limit")
    return name, value


_FLAGS = ("--", "--schema", "--report", "--limit", "--limit-unsafe", "--version", "--help")


def _one_edit(a: str, b: str) -> bool:
    """True if ``a`` and ``b`` differ by at most one substitution, insertion or deletion."""
    if abs(len(a) - len(b)) > 1:
        return False
    if len(a) > len(b):
        a, b = b, a
    i = 0
    while i < len(a) and a[i] == b[i]:
        i += 1
    if len(a) == len(b):
        return a[i + 1 :] == b[i + 1 :]
    return a[i:] == b[i + 1 :]


def _operand(token: str, what: str) -> str:
    # A path one keystroke away from a flag is more likely a mistyped flag.
    if token == "":
        raise UsageError(f"{what} must not be empty")
    if token.startswith("-"):
        raise UsageError(f"{what} {token!r} looks like a flag")
    near = next((f for f in _FLAGS if _one_edit(token, f)), None)
    if near is not None:
        raise UsageError(f"{what} {token!r} is too close to the flag {near}; put it after --")
    return token


def parse_args(argv: list[str]) -> Command:
    """Parse a command line; raises :class:`UsageError`."""
    if not argv:
        raise UsageError("missing command")
    head, rest = argv[0], argv[1:]
    if head in ("--version", "--help"):
        if rest:
            raise UsageError(f"{head} takes no arguments")
        return Version() if head == "--version" else Help()
    if head == "check-schema":
        if rest and rest[0] == "--":
            rest = rest[1:]
            if len(rest) != 1 or rest[0] == "":
                raise UsageError("check-schema takes exactly one schema path")
            return CheckSchema(rest[0])
        if len(rest) != 1:
            raise UsageError("check-schema takes exactly one schema path")
        return CheckSchema(_operand(rest[0], "schema path"))
    if head == "validate":
        return _parse_validate(rest)
    raise UsageError(f"unknown command {head!r}")


def _parse_validate(args: list[str]) -> Validate:
    schema: str | None = None
    report: str | None = None
    limits: dict[str, int] = {}
    unsafe: dict[str, int] = {}
    docs: list[str] = []
    i = 0
    while i < len(args):
        tok = args[i]
        if tok == "--":
            docs.extend(args[i + 1 :])
            break
        if tok.startswith("-") and tok != "-":
            if docs:
                raise UsageError(f"flag {tok!r} after a document path; put flags first or use --")
            if tok not in ("--schema", "--report", "--limit", "--limit-unsafe"):
                raise UsageError(f"unknown flag {tok!r}")
            if i + 1 >= len(args):
                raise UsageError(f"{tok} requires a value")
            value = args[i + 1]
            i += 2
            if tok == "--schema":
                if schema is not None:
                    raise UsageError("--schema given more than once")
                schema = _operand(value, "schema path")
            elif tok == "--report":
                if report is not None:
                    raise UsageError("--report given more than once")
                report = _operand(value, "report path")
            else:
                is_unsafe = tok == "--limit-unsafe"
                name, n = _limit(value, is_unsafe)
                if name in limits or name in unsafe:
                    raise UsageError(f"limit {name} given more than once")
                (unsafe if is_unsafe else limits)[name] = n
            continue
        docs.append(_operand(tok, "document path") if tok != "-" else tok)
        i += 1
    if schema is None:
        raise UsageError("validate requires --schema")
    if not docs:
        raise UsageError("validate requires at least one document")
    if any(d == "" for d in docs):
        raise UsageError("document path must not be empty")  # only reachable after --
    if "-" in docs and len(docs) > 1:
        raise UsageError("standard input (-) must be the only document")
    if report is not None and (report == schema or report in docs):
        raise UsageError("the report path must differ from every input path")
    return Validate(
        schema_path=schema,
        doc_paths=tuple(docs),
        report_path=report,
        limits=tuple(sorted(limits.items())),
        unsafe_limits=tuple(sorted(unsafe.items())),
    )


# --- running ---------------------------------------------------------------------------------


@dataclass(frozen=True)
class DocEntry:
    path: str
    digest: str | None  # None when the document could not be read
    valid: bool
    diagnostics: tuple[Diagnostic, ...]


@dataclass(frozen=True)
class AuditReport:
    tool_version: str
    timestamp: str
    schema_digest: str
    limits: Limits
    unsafe: tuple[tuple[str, int], ...]
    documents: tuple[DocEntry, ...] = field(default=())


def render_report(report: AuditReport) -> str:
    lines = [
        f"tool xsdguard {report.tool_version}",
        f"time {report.timestamp}",
        f"schema-sha256 {report.schema_digest}",
        "limits " + " ".join(f"{k}={v}" for k, v in sorted(report.limits.as_dict().items())),
    ]
    if report.unsafe:
        lines.append("unsafe-limits " + " ".join(f"{k}={v}" for k, v in report.unsafe))
    for doc in report.documents:
        digest = doc.digest if doc.digest is not None else "unavailable"
        verdict = "VALID" if doc.valid else "INVALID"
        lines.append(f"doc {escape_field(doc.path)} sha256={digest} verdict={verdict}")
        lines.extend("  " + render_line(d) for d in doc.diagnostics)
    return "\n".join(lines) + "\n"


def write_report(report: AuditReport, path: str) -> None:
    """Raises OSError on failure."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(render_report(report))


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _read(path: str, limit: int, stdin: BinaryIO) -> bytes:
    # One byte past the limit is enough for the parser to report LIM002.
    if path == "-":
        return stdin.read(limit + 1)
    with open(path, "rb") as f:
        return f.read(limit + 1)


def _io_diag(path: str, exc: OSError) -> Diagnostic:
    reason = exc.strerror or type(exc).__name__
    return Diagnostic(1, 1, Code.IO001, "/", f"cannot read {path}: {reason}")


class _Runner:
    def __init__(self, stdin: BinaryIO, stdout: TextIO, stderr: TextIO, clock: Callable[[], str]) -> None:
        self.stdin = stdin
        self.stdout = stdout
        self.stderr = stderr
        self.clock = clock

    def emit(self, diags: tuple[Diagnostic, ...] | list[Diagnostic]) -> None:
        for d in diags:
            self.stderr.write(render_line(d) + "\n")

    def schema(self, path: str, limits: Limits) -> tuple[int, CompiledSchema | None, bytes]:
        try:
            data = _read(path, limits.max_input_bytes, self.stdin)
        except OSError as exc:
            self.emit([_io_diag(path, exc)])
            return EXIT_IO, None, b""
        try:
            return EXIT_VALID, load_schema(data, limits), data
        except SchemaRejected as exc:
            self.emit(exc.diagnostics)
            return EXIT_SCHEMA, None, data

    def check_schema(self, cmd: CheckSchema) -> int:
        code, _, _ = self.schema(cmd.schema_path, DEFAULT_LIMITS)
        return code

    def document(self, path: str, schema: CompiledSchema, limits: Limits) -> tuple[int, DocEntry]:
        try:
            data = _read(path, limits.max_input_bytes, self.stdin)
        except OSError as exc:
            diag = _io_diag(path, exc)
            return EXIT_IO, DocEntry(path, None, False, (diag,))
        digest = hashlib.sha256(data).hexdigest()
        try:
            doc = parse_document(data, limits)
        except WfError as exc:
            return EXIT_MALFORMED, DocEntry(path, digest, False, (exc.diagnostic,))
        verdict = validate_document(doc, schema, limits)
        match verdict:
            case Valid():
                return EXIT_VALID, DocEntry(path, digest, True, ())
            case Invalid(diags):
                return EXIT_INVALID, DocEntry(path, digest, False, diags)
            case _:
                assert_never(verdict)

    def validate(self, cmd: Validate) -> int:
        limits = cmd.effective_limits()
        code, schema, schema_bytes = self.schema(cmd.schema_path, limits)
        if schema is None:
            return code
        worst = EXIT_VALID
        entries = []
        for path in cmd.doc_paths:
            severity, entry = self.document(path, schema, limits)
            self.emit(entry.diagnostics)
            self.stdout.write(f"{escape_field(path)}\t{'VALID' if entry.valid else 'INVALID'}\n")
            entries.append(entry)
            worst = max(worst, severity)
        if cmd.report_path is not None:
            report = AuditReport(
                tool_version=__version__,
                timestamp=self.clock(),
                schema_digest=hashlib.sha256(schema_bytes).hexdigest(),
                limits=limits,
                unsafe=cmd.unsafe_limits,
                documents=tuple(entries),
            )
            try:
                write_report(report, cmd.report_path)
            except OSError as exc:
                self.emit([Diagnostic(1, 1, Code.IO001, "/", f"cannot write report {cmd.report_path}: {exc.strerror or type(exc).__name__}")])
                worst = max(worst, EXIT_IO)
        return worst


def run(
    cmd: Command,
    stdin: BinaryIO | None = None,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
    clock: Callable[[], str] = _now,
) -> int:
    """Execute a parsed command and return its exit code."""
    runner = _Runner(
        stdin if stdin is not None else sys.stdin.buffer,
        stdout if stdout is not None else sys.stdout,
        stderr if stderr is not None else sys.stderr,
        clock,
    )
    match cmd:
        case Version():
            runner.stdout.write(f"xsdguard {__version__}\n")
            return EXIT_VALID
        case Help():
            runner.stdout.write(USAGE)
            return EXIT_VALID
        case CheckSchema():
            return runner.check_schema(cmd)
        case Validate():
            return runner.validate(cmd)
        case _:
            assert_never(cmd)


def main(
    argv: list[str] | None = None,
    stdin: BinaryIO | None = None,
    stdout: TextIO | None = None,
    stderr: TextIO | None = None,
    clock: Callable[[], str] = _now,
) -> int:
    err = stderr if stderr is not None else sys.stderr
    try:
        cmd = parse_args(sys.argv[1:] if argv is None else list(argv))
    except UsageError as exc:
        err.write(f"xsdguard: {exc}\n")
        err.write("try 'xsdguard --help'\n")
        return EXIT_USAGE
    return run(cmd, stdin, stdout, err, clock)
