"""Plain-text model files and CSV helpers.

A model file looks like::

    rvine-model 1
    dimension 3
    structure
    3 0 0
    1 2 0
    2 1 1
    families
    0 0 0
    ...
    par
    ...
    par2
    ...

Integers are written as such and reals with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .errors import DomainError, StructureError
from .evaluate import RVineModel
from .structure import validate

MAGIC = "rvine-model 1"
SECTIONS = ("structure", "families", "par", "par2")


def _format_matrix(mat, real):
    fmt = (lambda v: "%.17g" % v) if real else (lambda v: str(int(v)))
    return [" ".join(fmt(v) for v in row) for row in mat]


def dumps_model(model: RVineModel) -> str:
    lines = [MAGIC, f"dimension {model.n}", "structure"]
    lines += _format_matrix(model.structure.matrix, real=False)
    lines.append("families")
    lines += _format_matrix(model.families, real=False)
    lines.append("par")
    lines += _format_matrix(model.par, real=True)
    lines.append("par2")
    lines += _format_matrix(model.par2, real=True)
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> RVineModel:
    """Parse a model file; the structure is validated on load."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != MAGIC:
        raise StructureError("not a model file (missing header line)", "shape")
    try:
        key, value = lines[1].split()
        n = int(value)
    except (IndexError, ValueError) as exc:
        raise StructureError("missing or malformed dimension line", "shape") from exc
    if key != "dimension" or n < 2:
        raise StructureError("missing or malformed dimension line", "shape")
    blocks = {}
    pos = 2
    for name in SECTIONS:
        if pos >= len(lines) or lines[pos] != name:
            raise StructureError(f"expected section '{name}'", "shape")
        rows = lines[pos + 1:pos + 1 + n]
        if len(rows) != n:
            raise StructureError(f"section '{name}' needs {n} rows", "shape")
        try:
            mat = np.array([[float(v) for v in r.split()] for r in rows])
        except ValueError as exc:
            raise StructureError(f"non-numeric entry in section '{name}'", "labels") from exc
        if mat.shape != (n, n):
            raise StructureError(f"section '{name}' is not {n}x{n}", "shape")
        blocks[name] = mat
        pos += 1 + n
    structure = validate(blocks["structure"].astype(np.int64))
    return RVineModel.from_matrices(structure, blocks["families"].astype(np.int64),
                                    blocks["par"], blocks["par2"])


def save_model(model: RVineModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))


def load_model(path) -> RVineModel:
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())


def read_csv(path_or_buffer):
    """Read a numeric CSV with a header row.

    Returns
    -------
    header : list of str
    data : ndarray of shape (N, n)
    """
    if isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__"):
        with open(path_or_buffer, newline="", encoding="utf-8") as fh:
            return _parse_csv(fh)
    return _parse_csv(path_or_buffer)


def _parse_csv(fh):
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DomainError("empty CSV input") from None
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DomainError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            rows.append([float(c) for c in row])
        except ValueError:
            bad = next(c for c in row if not _is_number(c))
            raise DomainError(f"line {lineno}: non-numeric cell {bad!r}") from None
    if not rows:
        raise DomainError("CSV input has no data rows")
    data = np.array(rows, dtype=float)
    if not np.all(np.isfinite(data)):
        raise DomainError("CSV input contains non-finite values")
    return [h.strip() for h in header], data


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def write_csv(fh, header, data, fmt="%.17g"):
    fh.write(",".join(header) + "\n")
    for row in np.atleast_2d(data):
        fh.write(",".join(fmt % v for v in row) + "\n")


def csv_text(header, data, fmt="%.17g") -> str:
    buf = io.StringIO()
    write_csv(buf, header, data, fmt)
    return buf.getvalue()
