"""File formats: point/field CSV, mesh-node import, JSON reports.

The CSV dialect is deliberately small: a header row naming the columns,
coordinates first (x, y, z as the dimension requires), one row per node,
'#' starting a comment line. Floats are written with shortest round-trip
formatting, so write followed by read reproduces values bit for bit.

Mesh import reads only the node section of Gmsh MSH files (ASCII versions
2.2 and 4.1); node tags are remapped to dense ids and the mapping is
returned. Reports are plain JSON documents with a stable key order.
"""

from __future__ import annotations

import csv
import json
from typing import Mapping

import numpy as np

from .cloud import PointCloud
from .elasticity import SymTensorField

_AXES = ("x", "y", "z")


class ParseError(ValueError):
    """Malformed input file; carries the path and 1-based line number."""

    def __init__(self, path, line: int | None, detail: str):
        self.path = str(path)
        self.line = line
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {detail}")


class UnsupportedFormatError(ValueError):
    """Recognizably valid input in a variant this reader does not support."""


def read_points_csv(path) -> tuple[PointCloud, dict[str, np.ndarray]]:
    """Read a cloud and named nodal fields from CSV.

    The dimension is inferred from the coordinate columns present: x alone,
    x and y, or x, y, and z. All remaining columns become scalar fields
    keyed by their header names. Non-numeric or non-finite entries raise
    ParseError with the offending line number.
    """
    rows: list[tuple[int, list[str]]] = []
    with open(path, newline="") as handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            if not row or (row[0].lstrip().startswith("#")):
                continue
            cells = [cell.strip() for cell in row]
            if all(cell == "" for cell in cells):
                continue
            rows.append((lineno, cells))
    if not rows:
        raise ParseError(path, None, "no header row found")
    header_line, header = rows[0]
    names = [name for name in header]
    if len(set(names)) != len(names):
        raise ParseError(path, header_line, "duplicate column names")
    dim = 0
    for axis in _AXES:
        if axis in names:
            dim += 1
        else:
            break
    if dim == 0:
        raise ParseError(path, header_line, "missing coordinate column 'x'")
    for axis in _AXES[dim:]:
        if axis in names:
            raise ParseError(
                path, header_line, f"column {axis!r} present without its predecessors"
            )
    data = np.empty((len(rows) - 1, len(names)))
    for i, (lineno, cells) in enumerate(rows[1:]):
        if len(cells) != len(names):
            raise ParseError(
                path, lineno, f"expected {len(names)} columns, found {len(cells)}"
            )
        for j, cell in enumerate(cells):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    path, lineno, f"column {names[j]!r}: not a number: {cell!r}"
                ) from None
            if not np.isfinite(value):
                raise ParseError(
                    path, lineno, f"column {names[j]!r}: non-finite value {cell!r}"
                )
            data[i, j] = value
    if data.shape[0] == 0:
        raise ParseError(path, None, "no data rows")
    coords = np.column_stack([data[:, names.index(axis)] for axis in _AXES[:dim]])
    fields = {
        name: data[:, j].copy()
        for j, name in enumerate(names)
        if name not in _AXES[:dim]
    }
    return PointCloud(coords), fields


def _expand_field(name: str, value, n: int, dim: int) -> list[tuple[str, np.ndarray]]:
    if isinstance(value, SymTensorField):
        if value.n != n:
            raise ValueError(f"field {name!r} has {value.n} rows, cloud has {n}")
        return [
            (name + comp, value.component(comp)) for comp in value.components
        ]
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape == (n,):
        return [(name, arr)]
    if arr.ndim == 2 and arr.shape[0] == n and arr.shape[1] == dim:
        return [(name + _AXES[j], arr[:, j]) for j in range(dim)]
    raise ValueError(
        f"field {name!r} has shape {arr.shape}, expected ({n},) or ({n}, {dim})"
    )


def write_field_csv(path, cloud: PointCloud, fields: Mapping | None = None) -> None:
    """Write a cloud and nodal fields as CSV.

    Columns are the coordinates followed by the fields sorted by name.
    Scalar fields map to one column; vector fields expand with axis
    suffixes (ux, uy, ...); symmetric tensor fields expand in the fixed
    component order xx, xy[, xz], yy[, yz, zz] prefixed by the field name.
    Values use shortest round-trip float formatting.
    """
    fields = dict(fields or {})
    columns: list[tuple[str, np.ndarray]] = [
        (_AXES[j], cloud.coords[:, j]) for j in range(cloud.dim)
    ]
    for name in sorted(fields):
        columns.extend(_expand_field(name, fields[name], cloud.n, cloud.dim))
    seen = set()
    for name, _ in columns:
        if name in seen:
            raise ValueError(f"duplicate output column {name!r}")
        seen.add(name)
    with open(path, "w", newline="") as handle:
        handle.write(",".join(name for name, _ in columns) + "\n")
        for i in range(cloud.n):
            handle.write(
                ",".join(repr(float(col[i])) for _, col in columns) + "\n"
            )


# ---------------------------------------------------------------------------
# Gmsh MSH node import


def _msh_lines(path):
    with open(path, errors="replace") as handle:
        return [line.strip() for line in handle]


def _find_section(lines, name, path):
    try:
        start = lines.index(f"${name}")
    except ValueError:
        raise ParseError(path, None, f"missing ${name} section") from None
    try:
        end = lines.index(f"$End{name}", start)
    except ValueError:
        raise ParseError(path, start + 1, f"unterminated ${name} section") from None
    return start, end


def _parse_nodes_v2(lines, start, end, path):
    count = int(lines[start + 1])
    tags = []
    coords = []
    for offset in range(count):
        lineno = start + 2 + offset
        if lineno >= end:
            raise ParseError(path, end + 1, "node section shorter than declared")
        parts = lines[lineno].split()
        if len(parts) < 4:
            raise ParseError(path, lineno + 1, "node line needs tag x y z")
        tags.append(int(parts[0]))
        coords.append([float(v) for v in parts[1:4]])
    return tags, coords


def _parse_nodes_v4(lines, start, end, path):
    header = lines[start + 1].split()
    if len(header) != 4:
        raise ParseError(
            path, start + 2, "expected numEntityBlocks numNodes minTag maxTag"
        )
    num_blocks, num_nodes = int(header[0]), int(header[1])
    tags: list[int] = []
    coords: list[list[float]] = []
    pos = start + 2
    for _ in range(num_blocks):
        if pos >= end:
            raise ParseError(path, end + 1, "fewer entity blocks than declared")
        block = lines[pos].split()
        if len(block) != 4:
            raise ParseError(
                path, pos + 1, "expected entityDim entityTag parametric numNodes"
            )
        in_block = int(block[3])
        pos += 1
        block_tags = []
        for i in range(in_block):
            block_tags.append(int(lines[pos + i]))
        pos += in_block
        for i in range(in_block):
            parts = lines[pos + i].split()
            if len(parts) < 3:
                raise ParseError(path, pos + i + 1, "node line needs x y z")
            coords.append([float(v) for v in parts[:3]])
        pos += in_block
        tags.extend(block_tags)
    if len(tags) != num_nodes:
        raise ParseError(
            path, start + 2, f"declared {num_nodes} nodes, found {len(tags)}"
        )
    return tags, coords


def read_msh_nodes(path) -> tuple[PointCloud, dict[int, int]]:
    """Read the nodes of a Gmsh MSH file (ASCII v2.2 or v4.1).

    Element data and physical groups are ignored. Node tags are remapped to
    dense ids 0..n-1 in file order; the returned dict maps original tag to
    dense id. Trailing all-zero coordinate columns are dropped to infer the
    dimension (a flat mesh in the xy plane reads back as 2-d).
    """
    lines = _msh_lines(path)
    fmt_start, _ = _find_section(lines, "MeshFormat", path)
    fmt = lines[fmt_start + 1].split()
    if len(fmt) < 2:
        raise ParseError(path, fmt_start + 2, "malformed $MeshFormat line")
    version, file_type = fmt[0], fmt[1]
    if file_type != "0":
        raise UnsupportedFormatError(
            f"{path}: binary MSH files are not supported (file-type {file_type})"
        )
    start, end = _find_section(lines, "Nodes", path)
    try:
        if version.startswith("2"):
            tags, coords = _parse_nodes_v2(lines, start, end, path)
        elif version.startswith("4"):
            tags, coords = _parse_nodes_v4(lines, start, end, path)
        else:
            raise UnsupportedFormatError(
                f"{path}: unsupported MSH version {version}"
            )
    except (ValueError, IndexError) as err:
        if isinstance(err, (ParseError, UnsupportedFormatError)):
            raise
        raise ParseError(path, start + 1, f"malformed node section: {err}") from None
    if not tags:
        raise ParseError(path, start + 1, "node section is empty")
    if len(set(tags)) != len(tags):
        raise ParseError(path, start + 1, "duplicate node tags")
    arr = np.asarray(coords, dtype=np.float64)
    dim = 3
    while dim > 1 and np.all(arr[:, dim - 1] == 0.0):
        dim -= 1
    mapping = {tag: i for i, tag in enumerate(tags)}
    return PointCloud(arr[:, :dim]), mapping


# ---------------------------------------------------------------------------
# reports


def write_report(path, report) -> None:
    """Write a convergence or benchmark report as JSON.

    Accepts a plain dict or any object with a to_dict method. Key order is
    preserved as built, floats keep full precision, and no volatile data
    (timestamps, hostnames) is included, so identical runs produce byte
    identical files.
    """
    doc = report.to_dict() if hasattr(report, "to_dict") else dict(report)
    with open(path, "w") as handle:
        json.dump(doc, handle, indent=2, allow_nan=False)
        handle.write("\n")


def read_report(path) -> dict:
    """Read a JSON report back as a dict."""
    with open(path) as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as err:
            raise ParseError(path, err.lineno, f"invalid JSON: {err.msg}") from None
    if not isinstance(doc, dict):
        raise ParseError(path, None, "report root must be a JSON object")
    return doc
