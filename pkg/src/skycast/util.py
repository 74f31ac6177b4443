"""Small shared helpers: seed derivation and decimal float rendering."""

from __future__ import annotations

import hashlib


def mix_seed(*parts) -> int:
    """Derive a stable 64-bit seed from arbitrary labelled parts.

    Uses BLAKE2b over the repr of the parts, so the result is identical
    across processes and platforms (unlike the builtin hash()).
    """
    text = "\x1f".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def fmt_float(x: float) -> str:
    """Render a float with 17 significant decimal digits.

    17 digits are always enough to reconstruct the exact binary64 value.
    A bare integer rendering gets a trailing ".0" so parsers keep the
    float type (and the sign of -0.0).
    """
    s = format(float(x), ".17g")
    if not any(c in s for c in ".eE"):
        s += ".0"
    return s


def render_json(obj) -> str:
    """Serialize to JSON with fmt_float rendering for floats.

    The stdlib encoder hardwires repr() for floats; this walker keeps the
    pinned 17-significant-digit form. Dict keys keep insertion order, so
    output bytes are deterministic.
    """
    out: list[str] = []
    _render(obj, out)
    return "".join(out)


def _render(obj, out: list) -> None:
    if obj is None:
        out.append("null")
    elif obj is True:
        out.append("true")
    elif obj is False:
        out.append("false")
    elif isinstance(obj, str):
        out.append(_escape(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif isinstance(obj, float):
        out.append(fmt_float(obj))
    elif isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(",")
            out.append(_escape(str(k)))
            out.append(":")
            _render(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(",")
            _render(v, out)
        out.append("]")
    else:
        raise TypeError(f"cannot render {type(obj).__name__} as JSON")


def _escape(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)
