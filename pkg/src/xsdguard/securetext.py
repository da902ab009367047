"""Immutable, validated text.

Every piece of text handled by the validation core is a :class:`SecureText`.
Values are only created through :func:`decode_utf8` or :meth:`SecureText.of`,
both of which check the XML 1.0 ``Char`` production, so downstream code never
re-validates.  The public surface has no mutating operation.
"""
from __future__ import annotations

import re
from typing import Literal

__all__ = [
    "SecureText",
    "TextError",
    "InvalidUtf8",
    "ForbiddenChar",
    "decode_utf8",
    "concat",
    "compare",
    "first_forbidden_char",
]

# XML 1.0 Char: #x9 | #xA | #xD | [#x20-#xD7FF] | [#xE000-#xFFFD] | [#x10000-#x10FFFF]
_FORBIDDEN = re.compile("[^\t\n\r\x20-\ud7ff\ue000-\ufffd\U00010000-\U0010ffff]")


class TextError(ValueError):
    """Raised when bytes or a string cannot become a SecureText."""


class InvalidUtf8(TextError):
    def __init__(self, byte_offset: int) -> None:
        super().__init__(f"invalid UTF-8 at byte {byte_offset}")
        self.byte_offset = byte_offset


class ForbiddenChar(TextError):
    def __init__(self, position: int, char: str) -> None:
        super().__init__(f"character U+{ord(char):04X} at position {position} is not an XML Char")
        self.position = position
        self.char = char


def first_forbidden_char(text: str) -> int | None:
    """Index of the first scalar outside the XML 1.0 Char set, or None."""
    m = _FORBIDDEN.search(text)
    return None if m is None else m.start()


class SecureText:
    """A read-only sequence of XML Chars.

    Equality, hashing and ordering follow the code-point sequence.  The
    underlying ``str`` is exposed through ``str(t)``; Python strings are
    themselves immutable so handing them out cannot alter the value.
    """

    __slots__ = ("_s",)

    def __init__(self, *_args: object) -> None:
        raise TypeError("use SecureText.of() or decode_utf8()")

    @classmethod
    def of(cls, text: str) -> SecureText:
        if not isinstance(text, str):
            raise TypeError(f"expected str, got {type(text).__name__}")
        pos = first_forbidden_char(text)
        if pos is not None:
            raise ForbiddenChar(pos, text[pos])
        return cls._trusted(text)

    @classmethod
    def _trusted(cls, text: str) -> SecureText:
        # Only for text already known to consist of legal Chars.
        obj = object.__new__(cls)
        object.__setattr__(obj, "_s", text)
        return obj

    def __setattr__(self, name: str, value: object) -> None:
        raise AttributeError("SecureText is immutable")

    def __delattr__(self, name: str) -> None:
        raise AttributeError("SecureText is immutable")

    def __reduce__(self):
        return (SecureText.of, (self._s,))

    def __str__(self) -> str:
        return self._s

    def __repr__(self) -> str:
        return f"SecureText({self._s!r})"

    def __len__(self) -> int:
        return len(self._s)

    def __hash__(self) -> int:
        return hash(self._s)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SecureText):
            return self._s == other._s
        return NotImplemented

    def __lt__(self, other: SecureText) -> bool:
        return self._s < other._s

    def __le__(self, other: SecureText) -> bool:
        return self._s <= other._s

    def __gt__(self, other: SecureText) -> bool:
        return self._s > other._s

    def __ge__(self, other: SecureText) -> bool:
        return self._s >= other._s

    def __add__(self, other: SecureText) -> SecureText:
        if not isinstance(other, SecureText):
            return NotImplemented
        return concat(self, other)

    @property
    def byte_length(self) -> int:
        return len(self._s.encode("utf-8"))

    def encode(self) -> bytes:
        return self._s.encode("utf-8")

    def slice(self, start: int, stop: int | None = None) -> SecureText:
        return SecureText._trusted(self._s[start:stop])

    def is_whitespace_only(self) -> bool:
        return not self._s.strip(" \t\n\r")


def decode_utf8(data: bytes) -> SecureText:
    """Decode strict UTF-8 and check every scalar against the XML Char set.

    Overlong forms and encoded surrogates are rejected by the codec.  Line
    endings are left untouched.
    """
    try:
        text = bytes(data).decode("utf-8", errors="strict")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8(exc.start) from None
    return SecureText.of(text)


def concat(a: SecureText, b: SecureText) -> SecureText:
    return SecureText._trusted(a._s + b._s)


def compare(a: SecureText, b: SecureText) -> Literal["less", "equal", "greater"]:
    if a._s == b._s:
        return "equal"
    return "less" if a._s < b._s else "greater"
