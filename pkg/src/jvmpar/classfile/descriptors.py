"""Method/field descriptor parsing helpers."""

from __future__ import annotations

from ..errors import MalformedClassfile


def parse_field_type(desc: str, pos: int = 0) -> tuple[str, int]:
    """Return (type descriptor substring, next position)."""
    start = pos
    while pos < len(desc) and desc[pos] == "[":
        pos += 1
    if pos >= len(desc):
        raise MalformedClassfile(f"truncated descriptor {desc!r}")
    c = desc[pos]
    if c in "BCDFIJSZ":
        return desc[start:pos + 1], pos + 1
    if c == "L":
        end = desc.find(";", pos)
        if end < 0:
            raise MalformedClassfile(f"unterminated class type in {desc!r}")
        return desc[start:end + 1], end + 1
    raise MalformedClassfile(f"bad type char {c!r} in {desc!r}")


def parse_method_descriptor(desc: str) -> tuple[list[str], str]:
    """Split '(II[D)V' into (['I', 'I', '[D'], 'V')."""
    if not desc.startswith("("):
        raise MalformedClassfile(f"bad method descriptor {desc!r}")
    params = []
    pos = 1
    while pos < len(desc) and desc[pos] != ")":
        t, pos = parse_field_type(desc, pos)
        params.append(t)
    if pos >= len(desc) or desc[pos] != ")":
        raise MalformedClassfile(f"bad method descriptor {desc!r}")
    ret = desc[pos + 1:]
    if ret != "V":
        parse_field_type(ret)  # validates
    return params, ret


def slot_width(type_desc: str) -> int:
    return 2 if type_desc in ("J", "D") else 1


def args_slot_count(desc: str, static: bool) -> int:
    params, _ = parse_method_descriptor(desc)
    n = 0 if static else 1
    for p in params:
        n += slot_width(p)
    return n
