"""Small file helpers: atomic writes and round-trip-safe JSON.

Floats are serialized with 17 significant digits so every value survives
a save/load cycle bit-for-bit.
"""

from __future__ import annotations

import math
import os
import tempfile


def format_float(value: float) -> str:
    if value != value or math.isinf(value):
        raise ValueError(f"non-finite value {value!r} cannot be serialized")
    if value == int(value) and abs(value) < 1e15:
        return f"{value:.1f}"
    return f"{value:.17g}"


def dump_json(obj, indent: int = 0) -> str:
    """Serialize nested dict/list/scalar data to JSON text.

    Unlike the stdlib encoder this formats floats via :func:`format_float`,
    keeping checkpoints byte-stable across runs.
    """
    pad = " " * indent
    inner = " " * (indent + 2)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, str):
        out = obj.replace("\\", "\\\\").replace('"', '\\"')
        out = out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
        return f'"{out}"'
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{inner}{dump_json(str(k))}: {dump_json(v, indent + 2)}'
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(dump_json(v) for v in seq) + "]"
        items = [f"{inner}{dump_json(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def atomic_write_text(path: str, text: str) -> None:
    """Write text to a temp file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
