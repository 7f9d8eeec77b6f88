"""CSV and JSON artifacts with atomic writes.

Paths are stored as ``t,x1,...,xm``; area blocks as ``i,X11,X12,...,Xmm``
(row-major).  A rough path ``rough.csv`` comes with ``rough.path.csv`` for the
first level and a JSON sidecar ``rough.csv.json`` holding ``alpha``,
``geometric`` and the run configuration.  Floats are written with 17
significant digits, which round-trips every double.
"""

import json
import math
import os
import tempfile

import numpy as np

from .rough_core import ControlledGridPath, GridPath, LevyIncrements, RoughPathGrid

__all__ = [
    "InputError",
    "atomic_write",
    "fmt",
    "write_path_csv",
    "read_path_csv",
    "write_area_csv",
    "read_area_csv",
    "write_rough",
    "read_rough",
    "write_controlled_csv",
    "read_controlled_csv",
    "write_json",
    "read_json",
    "sidecar_path",
    "to_jsonable",
]


class InputError(ValueError):
    """Malformed input file or parameter; the message names the culprit."""


def fmt(x):
    return format(float(x), ".17g")


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _table(header, rows):
    lines = [",".join(header)]
    lines += [",".join(r) for r in rows]
    return "\n".join(lines) + "\n"


def _read_table(path, label):
    try:
        with open(path, newline="") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except FileNotFoundError:
        raise InputError(f"{label}: file not found: {path}") from None
    if not lines:
        raise InputError(f"{label}: {path} is empty")
    header = lines[0].split(",")
    data = []
    for r, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise InputError(
                f"{label}: {path} line {r} has {len(cells)} columns, header has {len(header)}"
            )
        try:
            data.append([float(c) for c in cells])
        except ValueError:
            raise InputError(f"{label}: {path} line {r} has a non-numeric entry") from None
    if not data:
        raise InputError(f"{label}: {path} has no data rows")
    return header, np.array(data)


def write_path_csv(path, gp):
    m = gp.dim
    header = ["t"] + [f"x{a + 1}" for a in range(m)]
    rows = ([fmt(t)] + [fmt(x) for x in v] for t, v in zip(gp.times, gp.values))
    atomic_write(path, _table(header, rows))


def read_path_csv(path, label="path"):
    header, data = _read_table(path, label)
    if len(header) < 2 or header[0] != "t":
        raise InputError(f"{label}: {path} must have header 't,x1,...,xm'")
    try:
        return GridPath(data[:, 0], data[:, 1:])
    except ValueError as exc:
        raise InputError(f"{label}: {exc}") from None


def write_area_csv(path, blocks):
    n, m, _ = blocks.shape
    header = ["i"] + [f"X{a + 1}{b + 1}" for a in range(m) for b in range(m)]
    rows = ([str(k)] + [fmt(x) for x in blocks[k].ravel()] for k in range(n))
    atomic_write(path, _table(header, rows))


def read_area_csv(path, label="area"):
    header, data = _read_table(path, label)
    k = len(header) - 1
    m = int(round(math.sqrt(k)))
    if header[0] != "i" or m * m != k or k == 0:
        raise InputError(f"{label}: {path} must have header 'i,X11,...,Xmm'")
    if not np.array_equal(data[:, 0], np.arange(data.shape[0])):
        raise InputError(f"{label}: {path} block indices must run 0, 1, 2, ...")
    return data[:, 1:].reshape(-1, m, m)


def sidecar_path(path):
    return os.fspath(path) + ".json"


def _companion(path):
    root, ext = os.path.splitext(os.fspath(path))
    return root + ".path" + (ext or ".csv")


def to_jsonable(obj):
    """Replace non-finite floats by strings and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path, obj):
    atomic_write(path, json.dumps(to_jsonable(obj), sort_keys=True, indent=2) + "\n")


def read_json(path, label="json"):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{label}: file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{label}: {path} is not valid JSON ({exc.msg})") from None


def write_rough(path, rp, config=None):
    """Write areas to ``path``, the first level next to it and the sidecar."""
    comp = _companion(path)
    write_path_csv(comp, rp.path)
    write_area_csv(path, rp.blocks)
    meta = {
        "kind": "rough_path",
        "alpha": rp.alpha,
        "geometric": bool(rp.geometric),
        "path_file": os.path.basename(comp),
        "config": config or {},
    }
    write_json(sidecar_path(path), meta)


def read_rough(path, label="rough"):
    meta = read_json(sidecar_path(path), f"{label} sidecar")
    if meta.get("kind") != "rough_path":
        raise InputError(f"{label}: sidecar of {path} does not describe a rough path")
    folder = os.path.dirname(os.path.abspath(path))
    gp = read_path_csv(os.path.join(folder, meta["path_file"]), f"{label} path")
    blocks = read_area_csv(path, label)
    try:
        return RoughPathGrid(gp, LevyIncrements(blocks), float(meta["alpha"]), bool(meta["geometric"]))
    except (ValueError, KeyError) as exc:
        raise InputError(f"{label}: {exc}") from None


def write_controlled_csv(path, y):
    """Columns ``t``, ``y{a}_{i}`` then ``yp{a}_{i}_{j}`` for a matrix-valued integrand."""
    n1, d, m = y.values.shape
    header = ["t"] + [f"y{a + 1}_{i + 1}" for a in range(d) for i in range(m)]
    header += [f"yp{a + 1}_{i + 1}_{j + 1}" for a in range(d) for i in range(m) for j in range(m)]
    rows = (
        [fmt(t)] + [fmt(x) for x in y.values[k].ravel()] + [fmt(x) for x in y.gubinelli[k].ravel()]
        for k, t in enumerate(y.base.times)
    )
    atomic_write(path, _table(header, rows))


def read_controlled_csv(path, rp, label="controlled"):
    header, data = _read_table(path, label)
    m = rp.dim
    ny = sum(1 for h in header if h.startswith("y") and not h.startswith("yp"))
    npr = sum(1 for h in header if h.startswith("yp"))
    if header[0] != "t" or ny == 0 or ny % m or npr != ny * m:
        raise InputError(
            f"{label}: {path} needs columns t, y<a>_<i> (d*{m}) and yp<a>_<i>_<j> (d*{m}*{m})"
        )
    if data.shape[0] != rp.n + 1 or not np.allclose(data[:, 0], rp.times, rtol=0, atol=1e-12):
        raise InputError(f"{label}: time column of {path} does not match the rough path grid")
    d = ny // m
    vals = data[:, 1 : 1 + ny].reshape(-1, d, m)
    der = data[:, 1 + ny :].reshape(-1, d, m, m)
    return ControlledGridPath(rp, vals, der)
