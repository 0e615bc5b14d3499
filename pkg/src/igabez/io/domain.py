"""``.igad`` domain files: a JSON document describing one NURBS patch.

Layout::

    {
      "version": "igad-1",
      "dim": 2,
      "space_dim": 2,
      "degrees": [2, 2],
      "knots": [[0, 0, 0, ..., 1], [...]],
      "control_points": [x0, y0, x1, y1, ...],
      "weights": [w0, w1, ...]
    }

Control points are flattened basis-major with axis 0 fastest, ``space_dim``
reals per point. Reals are written with 17 significant digits.
"""
import json
from pathlib import Path

import numpy as np

from ..geometry import NurbsPatch
from ..splines import KnotVector

FORMAT_VERSION = "igad-1"
_KEYS = ("version", "dim", "space_dim", "degrees", "knots", "control_points", "weights")


class DomainFileError(ValueError):
    """Malformed or inconsistent domain document; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


def _fmt(v):
    return format(float(v), ".17g")


def _fmt_list(values):
    return "[" + ", ".join(_fmt(v) for v in values) + "]"


def dumps_domain(patch: NurbsPatch) -> str:
    knots = ",\n    ".join(_fmt_list(kv.knots) for kv in patch.knot_vectors)
    lines = [
        "{",
        f'  "version": "{FORMAT_VERSION}",',
        f'  "dim": {patch.dim},',
        f'  "space_dim": {patch.space_dim},',
        f'  "degrees": [{", ".join(str(p) for p in patch.degrees)}],',
        f'  "knots": [\n    {knots}\n  ],',
        '  "control_points": [\n    ' + ",\n    ".join(
            ", ".join(_fmt(v) for v in row) for row in patch.control_points) + "\n  ],",
        f'  "weights": {_fmt_list(patch.weights)}',
        "}",
    ]
    return "\n".join(lines) + "\n"


def _int(doc, key):
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise DomainFileError(f"expected an integer, got {v!r}", key)
    return v


def _reals(values, key):
    if not isinstance(values, list):
        raise DomainFileError("expected an array of numbers", key)
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise DomainFileError(f"entry {i} is not a number: {v!r}", key)
    arr = np.array(values, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DomainFileError("non-finite value", key)
    return arr


def loads_domain(text: str) -> NurbsPatch:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainFileError(f"not valid JSON (line {exc.lineno}, column {exc.colno}): "
                              f"{exc.msg}") from exc
    if not isinstance(doc, dict):
        raise DomainFileError("top level must be an object")
    for key in _KEYS:
        if key not in doc:
            raise DomainFileError("missing required key", key)
    if not isinstance(doc["version"], str):
        raise DomainFileError("expected a string", "version")
    if doc["version"] != FORMAT_VERSION:
        raise DomainFileError(f"unsupported version {doc['version']!r}", "version")
    dim = _int(doc, "dim")
    space_dim = _int(doc, "space_dim")
    if not 1 <= dim <= 3:
        raise DomainFileError(f"must be 1, 2 or 3, got {dim}", "dim")
    if not dim <= space_dim <= 3:
        raise DomainFileError(f"must be in {dim}..3, got {space_dim}", "space_dim")
    degrees = doc["degrees"]
    if not isinstance(degrees, list) or len(degrees) != dim:
        raise DomainFileError(f"expected {dim} integers", "degrees")
    knots = doc["knots"]
    if not isinstance(knots, list) or len(knots) != dim:
        raise DomainFileError(f"expected {dim} knot arrays", "knots")
    kvs = []
    for d in range(dim):
        p = degrees[d]
        if isinstance(p, bool) or not isinstance(p, int):
            raise DomainFileError(f"expected an integer, got {p!r}", f"degrees[{d}]")
        key = f"knots[{d}]"
        k = _reals(knots[d], key)
        if np.any(np.diff(k) < 0.0):
            i = int(np.argmax(np.diff(k) < 0.0))
            raise DomainFileError(f"axis {d}: knots not non-decreasing at index {i + 1}", key)
        try:
            kvs.append(KnotVector(k, p))
        except ValueError as exc:
            raise DomainFileError(f"axis {d}: {exc}", key) from exc
    n = int(np.prod([kv.n for kv in kvs]))
    cp = _reals(doc["control_points"], "control_points")
    if cp.size != n * space_dim:
        raise DomainFileError(f"expected {n} x {space_dim} = {n * space_dim} values, "
                              f"got {cp.size}", "control_points")
    w = _reals(doc["weights"], "weights")
    if w.size != n:
        raise DomainFileError(f"expected {n} values, got {w.size}", "weights")
    if np.any(w <= 0.0):
        raise DomainFileError(f"weight {int(np.argmax(w <= 0.0))} is not positive", "weights")
    try:
        return NurbsPatch(tuple(kvs), cp.reshape(n, space_dim), w)
    except ValueError as exc:
        raise DomainFileError(str(exc)) from exc


def read_domain_file(path) -> NurbsPatch:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"domain file not found: {path}")
    try:
        return loads_domain(path.read_text(encoding="utf-8"))
    except DomainFileError as exc:
        err = DomainFileError(f"{path}: {exc}")
        err.key = exc.key
        raise err from exc


def write_domain_file(patch: NurbsPatch, path):
    Path(path).write_text(dumps_domain(patch), encoding="utf-8", newline="\n")
