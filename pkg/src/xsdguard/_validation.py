"""Input checks shared by the estimator front end."""
from __future__ import annotations

import os
from typing import Any

__all__ = ["check_document", "check_documents", "check_schema_source"]


def check_document(doc: Any) -> bytes:
    """Raw bytes of one document given as bytes or text."""
    if isinstance(doc, (bytes, bytearray, memoryview)):
        return bytes(doc)
    if isinstance(doc, str):
        return doc.encode("utf-8", "surrogatepass")
    raise TypeError(f"documents must be bytes or str, got {type(doc).__name__}")


def check_documents(X: Any) -> list[bytes]:
    if isinstance(X, (bytes, bytearray, str, memoryview)):
        raise TypeError("expected a sequence of documents, got a single document")
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"expected an iterable of documents, got {type(X).__name__}") from None
    return [check_document(d) for d in items]


def check_schema_source(schema: Any, max_bytes: int) -> bytes:
    """Schema bytes from bytes, text starting with '<', or a filesystem path.

    A file is read only one byte past ``max_bytes``; the parser reports the overrun.
    """
    if isinstance(schema, (bytes, bytearray, memoryview)):
        return bytes(schema)
    if isinstance(schema, str) and schema.lstrip().startswith("<"):
        return schema.encode("utf-8", "surrogatepass")
    if isinstance(schema, (str, os.PathLike)):
        with open(schema, "rb") as f:
            return f.read(max_bytes + 1)
    raise TypeError(f"schema must be bytes, XML text or a path, got {type(schema).__name__}")
