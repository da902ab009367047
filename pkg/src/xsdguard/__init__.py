"""Hardened XML validation against a vetted subset of XML Schema."""
from __future__ import annotations

__version__ = "0.1.0"

from .content import CompiledSchema, compile_schema  # noqa: E402
from .diagnostics import DEFAULT_LIMITS, Code, Diagnostic, Limits  # noqa: E402
from .validator import Invalid, Valid, Verdict, load_schema, validate_document  # noqa: E402
from .xmlcore import WfError, parse_document  # noqa: E402
from .xsdmodel import SchemaRejected  # noqa: E402


def __getattr__(name: str):
    # scikit-learn is slow to import; the command line never needs it
    if name == "XsdValidator":
        from .estimator import XsdValidator

        return XsdValidator
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    "__version__",
    "Code",
    "CompiledSchema",
    "DEFAULT_LIMITS",
    "Diagnostic",
    "Invalid",
    "Limits",
    "SchemaRejected",
    "Valid",
    "Verdict",
    "WfError",
    "XsdValidator",
    "compile_schema",
    "load_schema",
    "parse_document",
    "validate_document",
]
