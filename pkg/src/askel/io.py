"""Cloud and skeleton files.

Cloud files are JSON ``{"dim": m, "points": [[...], ...], "ids": [...]}``
(``ids`` optional) or CSV with one point per row and an optional header.  A
CSV header may name an ``id`` column; every other column is a coordinate.

Skeleton files are JSON ``{"vertices", "edges", "provenance", "params",
"report"}``.  Floats are always written with 17 significant digits so that a
read after a write gives back the same doubles.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .geometry import GeometryError, PointCloud
from .mst import EmbeddedGraph, GraphError

__all__ = [
    "InputError",
    "format_float",
    "dumps",
    "read_cloud",
    "write_cloud",
    "cloud_to_json",
    "cloud_to_csv",
    "parse_cloud",
    "skeleton_document",
    "write_skeleton",
    "read_skeleton",
]


class InputError(ValueError):
    """A file could not be read as the expected format."""


def format_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialise non-finite value {x!r}")
    s = "%.17g" % x
    # keep a float marker so integral values read back as floats
    if not any(c in s for c in ".eEn"):
        s += ".0"
    return s


def dumps(obj, indent: int | None = None, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits.

    Lists of scalars stay on one line; ``indent`` only spreads dicts and
    lists of containers.
    """
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(float(obj)):
            return "null"
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    pad = "" if indent is None else "\n" + " " * (indent * (_level + 1))
    end = "" if indent is None else "\n" + " " * (indent * _level)
    sep = ", " if indent is None else ","
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{" + sep.join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        flat = all(not isinstance(v, (list, tuple, dict, np.ndarray)) for v in obj)
        if flat or indent is None:
            return "[" + ", ".join(dumps(v, None) for v in obj) + "]"
        return "[" + sep.join(f"{pad}{dumps(v, indent, _level + 1)}" for v in obj) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ---- clouds -----------------------------------------------------------------


def _cloud_from_arrays(points, ids=None) -> PointCloud:
    try:
        pts = np.asarray(points, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"points are not a numeric array: {exc}") from None
    if pts.ndim != 2:
        raise InputError("points must be a list of equal-length coordinate lists")
    if ids is None:
        ids = np.arange(len(pts), dtype=np.int64)
    try:
        return PointCloud(pts, np.asarray(ids, dtype=np.int64))
    except (GeometryError, TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


def _parse_json_cloud(text: str) -> PointCloud:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON cloud: {exc}") from None
    if not isinstance(doc, dict) or "points" not in doc:
        raise InputError("JSON cloud must be an object with a 'points' list")
    cloud = _cloud_from_arrays(doc["points"], doc.get("ids"))
    if "dim" in doc and doc["dim"] != cloud.dim:
        raise InputError(f"'dim' is {doc['dim']} but points have {cloud.dim} coordinates")
    return cloud


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _parse_csv_cloud(text: str) -> PointCloud:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError("CSV cloud has no rows")
    header = None
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip().lower() for c in rows[0]]
        rows = rows[1:]
    if not rows:
        raise InputError("CSV cloud has a header but no points")
    width = len(rows[0])
    for k, r in enumerate(rows):
        if len(r) != width:
            raise InputError(f"CSV row {k + 1} has {len(r)} columns, expected {width}")
    try:
        table = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise InputError(f"CSV cloud has a non-numeric entry: {exc}") from None
    ids = None
    if header is not None:
        if len(header) != width:
            raise InputError("CSV header and rows differ in width")
        if "id" in header:
            col = header.index("id")
            raw = table[:, col]
            if not np.all(raw == np.round(raw)):
                raise InputError("CSV id column must hold integers")
            ids = raw.astype(np.int64)
            table = np.delete(table, col, axis=1)
    return _cloud_from_arrays(table, ids)


def parse_cloud(text: str, fmt: str = "auto") -> PointCloud:
    """Parse cloud text; ``fmt`` is ``"json"``, ``"csv"`` or ``"auto"``."""
    if not text.strip():
        raise InputError("cloud file is empty")
    if fmt == "auto":
        fmt = "json" if text.lstrip()[:1] in "{[" else "csv"
    if fmt == "json":
        return _parse_json_cloud(text)
    if fmt == "csv":
        return _parse_csv_cloud(text)
    raise InputError(f"unknown cloud format {fmt!r}")


def _format_of(path: Path, fmt: str) -> str:
    if fmt != "auto":
        return fmt
    suffix = path.suffix.lower()
    return {".json": "json", ".csv": "csv"}.get(suffix, "auto")


def read_cloud(path, fmt: str = "auto") -> PointCloud:
    path = Path(path)
    try:
        text = path.read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    return parse_cloud(text, _format_of(path, fmt))


def cloud_to_json(cloud: PointCloud) -> str:
    doc = {"dim": cloud.dim, "points": cloud.points}
    if not np.array_equal(cloud.ids, np.arange(len(cloud))):
        doc["ids"] = cloud.ids
    return dumps(doc, indent=1) + "\n"


def cloud_to_csv(cloud: PointCloud) -> str:
    with_ids = not np.array_equal(cloud.ids, np.arange(len(cloud)))
    head = (["id"] if with_ids else []) + [f"x{k}" for k in range(cloud.dim)]
    lines = [",".join(head)]
    for i, p in zip(cloud.ids.tolist(), cloud.points):
        cells = ([str(i)] if with_ids else []) + [format_float(x) for x in p]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_cloud(cloud: PointCloud, path, fmt: str = "auto") -> None:
    path = Path(path)
    fmt = _format_of(path, fmt)
    text = cloud_to_csv(cloud) if fmt == "csv" else cloud_to_json(cloud)
    path.write_text(text)


# ---- skeletons --------------------------------------------------------------


def skeleton_document(skeleton, report=None, params=None) -> dict:
    doc = {
        "vertices": skeleton.graph.vertices,
        "edges": skeleton.graph.edges,
        "provenance": skeleton.provenance,
        "params": params if params is not None else (report.params if report is not None else {}),
    }
    if report is not None:
        doc["report"] = report.to_dict()
    return doc


def write_skeleton(skeleton, path, report=None, params=None) -> None:
    Path(path).write_text(dumps(skeleton_document(skeleton, report, params), indent=1) + "\n")


def read_skeleton(path) -> tuple[EmbeddedGraph, dict]:
    """Graph and the raw document of a skeleton file."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read skeleton {path}: {exc}") from None
    if not isinstance(doc, dict) or "vertices" not in doc or "edges" not in doc:
        raise InputError("skeleton file needs 'vertices' and 'edges'")
    verts = np.asarray(doc["vertices"], dtype=float)
    if verts.ndim != 2:
        raise InputError("skeleton vertices must be a list of coordinate lists")
    try:
        graph = EmbeddedGraph(verts, np.asarray(doc["edges"], dtype=np.int64).reshape(-1, 2))
    except GraphError as exc:
        raise InputError(f"invalid skeleton graph: {exc}") from None
    return graph, doc
