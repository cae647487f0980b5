"""Bit-stable CSV and JSON emission.

Every float is serialized with 17 significant digits (round-trip exact for
IEEE doubles), keys are written in a fixed order, and line endings are always
'\\n', so rerunning an experiment with the same seed produces byte-identical
files regardless of platform locale or thread count.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

SCHEMA_VERSION = 1


def fmt_float(x: float) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def _json_value(v, indent: int) -> str:
    pad = "  " * (indent + 1)
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v) or math.isinf(v):
            return f'"{fmt_float(v)}"'
        return fmt_float(v)
    if isinstance(v, str):
        return _json_escape(v)
    if isinstance(v, Mapping):
        if not v:
            return "{}"
        items = [f'{pad}{_json_escape(str(k))}: {_json_value(val, indent + 1)}'
                 for k, val in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(v, (list, tuple)):
        if len(v) == 0:
            return "[]"
        items = [f"{pad}{_json_value(val, indent + 1)}" for val in v]
        return "[\n" + ",\n".join(items) + "\n" + "  " * indent + "]"
    # numpy scalars and arrays
    if hasattr(v, "item") and not hasattr(v, "__len__"):
        return _json_value(v.item(), indent)
    if hasattr(v, "tolist"):
        return _json_value(v.tolist(), indent)
    raise TypeError(f"cannot serialize {type(v)!r}")


def _json_escape(s: str) -> str:
    out = ['"']
    for ch in s:
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20 or ord(ch) > 0x7E:
            out.append(f"\\u{ord(ch):04x}")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def dumps_json(obj) -> str:
    return _json_value(obj, 0) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj), encoding="ascii")
