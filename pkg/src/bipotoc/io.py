"""Matrix text files and result serialization.

Matrix format (UTF-8 text)::

    rows cols
    re+imj re+imj ...     # one line per row
    ...

Entries are written with ``repr`` of the real and imaginary parts, so a
save/load round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

__all__ = [
    "MatrixFormatError",
    "format_complex",
    "save_matrix",
    "load_matrix",
    "dumps_json",
    "to_csv",
    "flatten",
]


class MatrixFormatError(ValueError):
    pass


def format_complex(z: complex) -> str:
    re, im = repr(float(z.real)), repr(float(z.imag))
    return f"{re}{'' if im.startswith('-') else '+'}{im}j"


def save_matrix(path, m) -> None:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValueError("only 2-D arrays can be saved")
    lines = [f"{m.shape[0]} {m.shape[1]}"]
    lines += [" ".join(format_complex(z) for z in row) for row in m]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    text = path.read_text(encoding="utf-8").splitlines()
    # drop trailing blank lines only; interior blanks are row errors
    while text and not text[-1].strip():
        text.pop()
    if not text:
        raise MatrixFormatError(f"{path}: empty file")
    header = text[0].split()
    try:
        rows, cols = (int(x) for x in header)
    except ValueError:
        raise MatrixFormatError(f"{path}:1: header must be 'rows cols', got {text[0]!r}") from None
    if rows < 1 or cols < 1:
        raise MatrixFormatError(f"{path}:1: dimensions must be positive")
    if len(text) - 1 != rows:
        raise MatrixFormatError(f"{path}: expected {rows} rows, found {len(text) - 1}")
    out = np.empty((rows, cols), dtype=complex)
    for i, line in enumerate(text[1:]):
        lineno = i + 2
        tokens = line.split()
        if len(tokens) != cols:
            raise MatrixFormatError(f"{path}:{lineno}: expected {cols} entries, found {len(tokens)}")
        for j, tok in enumerate(tokens):
            try:
                out[i, j] = complex(tok)
            except ValueError:
                raise MatrixFormatError(
                    f"{path}:{lineno}: column {j + 1}: cannot parse {tok!r} as a complex number"
                ) from None
    return out


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_default, allow_nan=True)


def flatten(obj, prefix: str = "") -> list[tuple[str, object]]:
    """Nested dicts/lists -> ``[(dotted.key, scalar), ...]``."""
    items = []
    if isinstance(obj, dict):
        for k, v in obj.items():
            items += flatten(v, f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            items += flatten(v, f"{prefix}.{i}" if prefix else str(i))
    else:
        items.append((prefix, obj))
    return items


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return "" if v is None else str(v)


def to_csv(payload: dict) -> str:
    """Flat CSV view: the ``table`` rows if present, else key/value pairs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    table = payload.get("table") if isinstance(payload, dict) else None
    if table:
        columns = list(dict.fromkeys(k for row in table for k in row))
        writer.writerow(columns)
        for row in table:
            writer.writerow([_cell(row.get(c)) for c in columns])
    else:
        writer.writerow(["key", "value"])
        for k, v in flatten(payload):
            writer.writerow([k, _cell(v)])
    return buf.getvalue()
