"""Fixed-format MPS writer.

Rows and columns come out in declaration order, integer columns are wrapped
in ``MARKER INTORG``/``INTEND`` pairs, and every column gets explicit ``LO``
and ``UP`` bounds so readers never fall back to their own defaults. Output
depends only on the model, so exporting twice yields identical bytes.
"""

from __future__ import annotations

import io
import os
import re

from .model import MilpModel, Relation

_MAX_NAME = 8
_ILLEGAL = re.compile(r"[^A-Za-z0-9_.\-\[\]()]")
_ROW_TYPE = {Relation.LE: "L", Relation.EQ: "E", Relation.GE: "G"}


def sanitize_names(names: list[str], prefix: str) -> list[str]:
    """MPS-legal names: illegal characters become ``_``.

    Fixed format allows at most eight characters. If any cleaned name is too
    long or two names collide, the whole list falls back to ``prefix`` plus a
    zero-padded position, which is unique and stable.
    """
    clean = [_ILLEGAL.sub("_", n) or "_" for n in names]
    if all(len(n) <= _MAX_NAME for n in clean) and len(set(clean)) == len(clean):
        return clean
    width = _MAX_NAME - len(prefix)
    if len(names) > 10 ** width:
        raise ValueError(f"too many names for fixed-format MPS ({len(names)})")
    return [f"{prefix}{i:0{width}d}" for i in range(len(names))]


def _num(v: float) -> str:
    v = float(v)
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _line(f1: str, f2: str, f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # field columns 2-3, 5-12, 15-22, 25-36, 40-47, 50-61; long numbers overflow
    # their field but stay whitespace-separated
    text = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        text += f"   {f5:<8}  {f6:>12}"
    return text.rstrip() + "\n"


def write_mps(model: MilpModel, sink) -> None:
    """Write ``model`` to a text stream or a path."""
    if isinstance(sink, (str, os.PathLike)):
        with open(os.fspath(sink), "w", encoding="ascii", newline="\n") as fh:
            fh.write(mps_string(model))
    else:
        sink.write(mps_string(model))


def export_mps(model: MilpModel) -> bytes:
    return mps_string(model).encode("ascii")


def mps_string(model: MilpModel) -> str:
    rows = sanitize_names([c.name for c in model.constraints], "R")
    cols = sanitize_names([v.name for v in model.variables], "C")
    obj_name = "OBJ"
    while obj_name in rows:
        obj_name += "_"

    # column-major view of the constraint matrix, rows in declaration order
    entries: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for j, v in sorted(model.objective.items()):
        if v != 0.0:
            entries[j].append((obj_name, v))
    for i, con in enumerate(model.constraints):
        for j, v in sorted(con.coefs.items()):
            entries[j].append((rows[i], v))

    out = io.StringIO()
    out.write(f"NAME          {_ILLEGAL.sub('_', model.name)[:_MAX_NAME]}\n")
    out.write("ROWS\n")
    out.write(_line("N", obj_name))
    for i, con in enumerate(model.constraints):
        out.write(_line(_ROW_TYPE[con.relation], rows[i]))

    out.write("COLUMNS\n")
    in_int = False
    marker = 0
    for j, var in enumerate(model.variables):
        if var.integer != in_int:
            tag = "'INTORG'" if var.integer else "'INTEND'"
            out.write(f"    MARKER{marker:04d}  'MARKER'                 {tag}\n")
            marker += 1
            in_int = var.integer
        ents = entries[j] or [(obj_name, 0.0)]
        for k in range(0, len(ents), 2):
            pair = ents[k:k + 2]
            if len(pair) == 2:
                out.write(_line("", cols[j], pair[0][0], _num(pair[0][1]), pair[1][0], _num(pair[1][1])))
            else:
                out.write(_line("", cols[j], pair[0][0], _num(pair[0][1])))
    if in_int:
        out.write(f"    MARKER{marker:04d}  'MARKER'                 'INTEND'\n")

    out.write("RHS\n")
    for i, con in enumerate(model.constraints):
        if con.rhs != 0.0:
            out.write(_line("", "RHS", rows[i], _num(con.rhs)))

    out.write("BOUNDS\n")
    for j, var in enumerate(model.variables):
        out.write(_line("LO", "BND", cols[j], _num(var.lower)))
        out.write(_line("UP", "BND", cols[j], _num(var.upper)))
    out.write("ENDATA\n")
    return out.getvalue()
