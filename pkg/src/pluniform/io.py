"""Mesh and metric ingestion plus the JSON document formats.

Formats
-------
OFF / OBJ
    Closed, manifold, pure-triangle meshes.  Only edge lengths are kept.
metric-json
    Intrinsic description with explicit gluing (see ``schemas/``)::

        {"format": "pluniform.metric", "version": 1,
         "faces": [[v0, v1, v2], ...],
         "face_edges": [[e0, e1, e2], ...],   # e_i sits on side v_i -> v_i+1
         "lengths": ["1", ...],               # indexed by edge id
         "target_curvature": [...],           # optional
         "conformal_factors": [...]}          # optional

Reals are written as decimal strings with 17 significant digits, which
round-trips IEEE doubles exactly.  Readers accept plain JSON numbers too.
"""
import json
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidMetric, NonManifold, NonTriangular, OpenBoundary, ParseError
from .surface import build_surface, check_lengths, validate_metric

__all__ = [
    "MetricDocument",
    "fmt_real",
    "parse_real",
    "parse_mesh_file",
    "read_off",
    "read_obj",
    "load_metric_json",
    "loads_metric_json",
    "dumps_metric_json",
    "report_to_dict",
    "dumps_report",
    "loads_report",
    "metric_from_dict",
    "report_dict_roundtrip",
]

METRIC_FORMAT = "pluniform.metric"
REPORT_FORMAT = "pluniform.report"
VERSION = 1


def fmt_real(x):
    return format(float(x), ".17g")


def parse_real(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ParseError(f"expected a real number, got {type(value).__name__}", where)
    try:
        return float(value)
    except ValueError:
        raise ParseError(f"cannot parse {value!r} as a real number", where) from None


def _reals(values):
    return [fmt_real(x) for x in np.asarray(values, dtype=float)]


@dataclass
class MetricDocument:
    faces: list
    face_edges: list
    lengths: np.ndarray
    target_curvature: np.ndarray = None
    conformal_factors: np.ndarray = None
    version: int = VERSION

    @classmethod
    def from_surface(cls, surface, lengths, target_curvature=None, conformal_factors=None):
        fv, fe = surface.face_vertex_table()
        return cls(fv.tolist(), fe.tolist(), np.asarray(lengths, dtype=float),
                   None if target_curvature is None else np.asarray(target_curvature, dtype=float),
                   None if conformal_factors is None else np.asarray(conformal_factors, dtype=float))

    def to_surface(self):
        surface = build_surface(self.faces, self.face_edges)
        lengths = check_lengths(surface, self.lengths)
        bad = validate_metric(surface, lengths)
        if bad:
            raise InvalidMetric(f"face {bad[0]} violates the triangle inequality")
        return surface, lengths

    @property
    def surface(self):
        return self.to_surface()[0]

    def to_dict(self):
        out = {
            "format": METRIC_FORMAT,
            "version": self.version,
            "faces": [list(map(int, f)) for f in self.faces],
            "face_edges": [list(map(int, f)) for f in self.face_edges],
            "lengths": _reals(self.lengths),
        }
        if self.target_curvature is not None:
            out["target_curvature"] = _reals(self.target_curvature)
        if self.conformal_factors is not None:
            out["conformal_factors"] = _reals(self.conformal_factors)
        return out

    def __eq__(self, other):
        if not isinstance(other, MetricDocument):
            return NotImplemented
        return self.to_dict() == other.to_dict()


# --- metric-json ----------------------------------------------------------------

def _int_triples(data, key):
    rows = data.get(key)
    if not isinstance(rows, list) or not rows:
        raise ParseError("expected a non-empty list of integer triples", key)
    for i, row in enumerate(rows):
        if (not isinstance(row, list) or len(row) != 3
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in row)):
            raise ParseError("expected three integers", f"{key}[{i}]")
        if min(row) < 0:
            raise ParseError("ids must be non-negative", f"{key}[{i}]")
    return rows


def _real_list(data, key, n=None):
    values = data.get(key)
    if not isinstance(values, list):
        raise ParseError("expected a list of reals", key)
    if n is not None and len(values) != n:
        raise ParseError(f"expected {n} entries, got {len(values)}", key)
    return np.array([parse_real(v, f"{key}[{i}]") for i, v in enumerate(values)], dtype=float)


def metric_from_dict(data):
    if not isinstance(data, dict):
        raise ParseError("top level must be an object")
    fmt = data.get("format", METRIC_FORMAT)
    if fmt not in (METRIC_FORMAT, REPORT_FORMAT):
        raise ParseError(f"unknown format {fmt!r}", "format")
    version = data.get("version", VERSION)
    if version != VERSION:
        raise ParseError(f"unsupported version {version!r}", "version")
    faces = _int_triples(data, "faces")
    face_edges = _int_triples(data, "face_edges")
    if len(face_edges) != len(faces):
        raise ParseError(f"expected {len(faces)} triples to match faces", "face_edges")
    n_edges = max(max(r) for r in face_edges) + 1
    lengths = _real_list(data, "lengths", n_edges)
    n_vertices = max(max(r) for r in faces) + 1
    target = _real_list(data, "target_curvature", n_vertices) if "target_curvature" in data else None
    u = _real_list(data, "conformal_factors", n_vertices) if "conformal_factors" in data else None
    return MetricDocument(faces, face_edges, lengths, target, u, version)


def loads_metric_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return metric_from_dict(data)


def load_metric_json(path):
    with open(path, encoding="utf-8") as fh:
        try:
            return loads_metric_json(fh.read())
        except ParseError as exc:
            raise ParseError(str(exc), os.fspath(path)) from None


def dumps_metric_json(doc):
    return json.dumps(doc.to_dict(), indent=1, sort_keys=True) + "\n"


# --- OFF / OBJ ------------------------------------------------------------------

def _content_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line


def _surface_from_embedding(points, faces, where):
    pairs = {}
    for f, (a, b, c) in enumerate(faces):
        if len({a, b, c}) < 3:
            raise ParseError(f"face {f} repeats a vertex", where)
        for x, y in ((a, b), (b, c), (c, a)):
            pairs[(min(x, y), max(x, y))] = pairs.get((min(x, y), max(x, y)), 0) + 1
    for key, count in pairs.items():
        if count == 1:
            raise OpenBoundary(f"{where}: edge {key} lies on a boundary")
        if count > 2:
            raise NonManifold(f"{where}: edge {key} is shared by {count} faces")
    used = np.unique(np.asarray(faces).ravel())
    if len(used) != len(points):
        raise ParseError(f"{len(points) - len(used)} vertices are not used by any face", where)
    surface = build_surface(faces)
    ends = surface.edge_endpoints()
    lengths = np.linalg.norm(points[ends[:, 0]] - points[ends[:, 1]], axis=1)
    if np.any(lengths <= 0):
        raise InvalidMetric(f"{where}: coincident vertices give a zero-length edge")
    bad = validate_metric(surface, lengths)
    if bad:
        raise InvalidMetric(f"{where}: face {bad[0]} is degenerate")
    return surface, lengths


def read_off(path):
    lines = list(_content_lines(path))
    if not lines or not lines[0][1].upper().startswith("OFF"):
        raise ParseError("missing OFF header", f"{path}:1")
    head = lines[0][1].split()[1:]
    rest = lines[1:]
    if not head:
        if not rest:
            raise ParseError("missing element counts", f"{path}")
        lineno, line = rest[0]
        head = line.split()
        rest = rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise ParseError("bad element counts", f"{path}:{lines[0][0]}") from None
    if len(rest) < nv + nf:
        raise ParseError(f"expected {nv} vertices and {nf} faces, file ends early", path)
    points = np.empty((nv, 3))
    for i in range(nv):
        lineno, line = rest[i]
        try:
            points[i] = [float(t) for t in line.split()[:3]]
        except ValueError:
            raise ParseError("bad vertex coordinates", f"{path}:{lineno}") from None
    faces = []
    for f in range(nf):
        lineno, line = rest[nv + f]
        toks = line.split()
        try:
            k = int(toks[0])
            idx = [int(t) for t in toks[1:1 + k]]
        except (ValueError, IndexError):
            raise ParseError("bad face record", f"{path}:{lineno}") from None
        if k != 3:
            raise NonTriangular(f"{path}:{lineno}: face {f} has {k} vertices")
        if len(idx) != 3 or min(idx) < 0 or max(idx) >= nv:
            raise ParseError("vertex index out of range", f"{path}:{lineno}")
        faces.append(idx)
    return _surface_from_embedding(points, faces, os.fspath(path))


def read_obj(path):
    points, faces = [], []
    for lineno, line in _content_lines(path):
        toks = line.split()
        if toks[0] == "v":
            try:
                points.append([float(t) for t in toks[1:4]])
            except ValueError:
                raise ParseError("bad vertex coordinates", f"{path}:{lineno}") from None
        elif toks[0] == "f":
            idx = []
            for t in toks[1:]:
                try:
                    i = int(t.split("/")[0])
                except ValueError:
                    raise ParseError(f"bad face index {t!r}", f"{path}:{lineno}") from None
                idx.append(i - 1 if i > 0 else len(points) + i)
            if len(idx) != 3:
                raise NonTriangular(f"{path}:{lineno}: face {len(faces)} has {len(idx)} vertices")
            if min(idx) < 0 or max(idx) >= len(points):
                raise ParseError("vertex index out of range", f"{path}:{lineno}")
            faces.append(idx)
    if not faces:
        raise ParseError("no faces", os.fspath(path))
    return _surface_from_embedding(np.array(points, dtype=float), faces, os.fspath(path))


def _guess_format(path):
    ext = os.path.splitext(os.fspath(path))[1].lower()
    return {".off": "off", ".obj": "obj", ".json": "metric-json"}.get(ext)


def parse_mesh_file(path, format=None):
    """Read a mesh or metric file into ``(surface, lengths)``.

    ``format`` is one of "off", "obj", "metric-json"; guessed from the
    extension when omitted.
    """
    fmt = format or _guess_format(path)
    if fmt == "off":
        return read_off(path)
    if fmt == "obj":
        return read_obj(path)
    if fmt == "metric-json":
        return load_metric_json(path).to_surface()
    raise ParseError(f"unknown mesh format {fmt!r}", os.fspath(path))


# --- reports --------------------------------------------------------------------

def report_to_dict(report, include_timing=True):
    fv, fe = report.surface.face_vertex_table()
    out = {
        "format": REPORT_FORMAT,
        "version": VERSION,
        "method": report.method,
        "termination": report.reason,
        "converged": report.converged,
        "iterations": report.iterations,
        "residuals": _reals(report.residuals),
        "residuals_l2": _reals(report.residuals_l2),
        "step_sizes": _reals(report.step_sizes),
        "flips_per_iter": [int(n) for n in report.flips_per_iter],
        "total_flips": report.total_flips,
        "input_flips": report.input_flip_log.count,
        "flip_log": [
            {"edge": r.edge, "old_length": fmt_real(r.old_length),
             "new_length": fmt_real(r.new_length), "step": r.step}
            for r in report.flip_log.records
        ],
        "cocircular_edges": list(report.cocircular),
        "u": _reals(report.u),
        "curvature": _reals(report.curvature),
        "target_curvature": _reals(report.target),
        "faces": fv.tolist(),
        "face_edges": fe.tolist(),
        "lengths": _reals(report.lengths),
    }
    if include_timing:
        out["timing"] = {"elapsed_s": fmt_real(report.elapsed)}
    return out


def dumps_report(report, include_timing=True):
    data = report if isinstance(report, dict) else report_to_dict(report, include_timing)
    return json.dumps(data, indent=1, sort_keys=True) + "\n"


def loads_report(text):
    """Parse a report document; returns a dict with real fields as float arrays."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    if data.get("format") != REPORT_FORMAT:
        raise ParseError("not a report document", "format")
    out = dict(data)
    for key in ("residuals", "residuals_l2", "step_sizes", "u", "curvature", "target_curvature", "lengths"):
        out[key] = _real_list(data, key)
    return out


def report_dict_roundtrip(parsed):
    """Serialise the output of :func:`loads_report` back to the JSON dict."""
    out = dict(parsed)
    for key in ("residuals", "residuals_l2", "step_sizes", "u", "curvature", "target_curvature", "lengths"):
        out[key] = _reals(parsed[key])
    return out
