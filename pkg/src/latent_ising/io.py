"""File formats: matrices, datasets, models, JSON reports and CSV tables.

Floats are written with ``repr`` (shortest round-tripping form), so
reading a file back gives bit-identical arrays and rewriting it gives
byte-identical output.
"""

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .ising import BinaryDataset
from .latent import LatentCGModel
from .matrices import as_symmetric


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def to_jsonable(obj):
    """Convert numpy containers and scalars; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps_json(obj):
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def save_json(path, obj):
    Path(path).write_text(dumps_json(obj))


def load_json(path):
    return json.loads(Path(path).read_text())


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows):
    Path(path).write_text(csv_text(header, rows))


def read_csv(path):
    """Return ``(header, rows)`` with cells as strings."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV file")
    return rows[0], rows[1:]


# matrices


def matrix_to_json(m):
    m = np.asarray(m, dtype=np.float64)
    return {"dim": int(m.shape[0]), "rows": m.tolist()}


def matrix_from_json(obj, name="matrix"):
    if not isinstance(obj, dict) or "rows" not in obj:
        raise ValueError(f"{name}: expected an object with 'dim' and 'rows'")
    rows = np.array(obj["rows"], dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"{name}: rows must form a 2-D array")
    if "dim" in obj and obj["dim"] != rows.shape[0]:
        raise ValueError(f"{name}: dim {obj['dim']} does not match {rows.shape[0]} rows")
    return rows


def matrix_csv_text(m):
    m = np.asarray(m, dtype=np.float64)
    return "".join(",".join(repr(float(v)) for v in row) + "\n" for row in m)


def parse_matrix_csv(text, name="matrix"):
    rows = [ln for ln in text.splitlines() if ln.strip()]
    try:
        m = np.array([[float(v) for v in ln.split(",")] for ln in rows], dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{name}: {exc}") from None
    if m.ndim != 2:
        raise ValueError(f"{name}: rows have different lengths")
    return m


def save_matrix(path, m):
    """``.json`` gives ``{"dim", "rows"}``; anything else dense CSV."""
    path = Path(path)
    if path.suffix == ".json":
        save_json(path, matrix_to_json(m))
    else:
        path.write_text(matrix_csv_text(m))


def load_matrix(path, symmetric=True):
    path = Path(path)
    if path.suffix == ".json":
        m = matrix_from_json(load_json(path), str(path))
    else:
        m = parse_matrix_csv(path.read_text(), str(path))
    return as_symmetric(m, str(path)) if symmetric else m


# datasets


def save_dataset(path, data):
    """``.csv`` gives comma-separated 0/1 integers; otherwise one 0/1 string per line."""
    path = Path(path)
    if path.suffix == ".csv":
        path.write_text("".join(",".join(str(int(b)) for b in row) + "\n" for row in data.samples))
    else:
        path.write_text("".join(s + "\n" for s in data.to_strings()))


def load_dataset(path):
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".csv":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        return BinaryDataset.from_strings(["".join(c.strip() for c in ln.split(",")) for ln in lines])
    return BinaryDataset.from_strings(text.splitlines())


# models


def model_to_json(model):
    return {k: matrix_to_json(v) for k, v in model.to_dict().items()}


def model_from_json(obj):
    for key in ("S", "R", "Lambda"):
        if key not in obj:
            raise ValueError(f"model JSON lacks '{key}'")
    return LatentCGModel(matrix_from_json(obj["S"], "S"), matrix_from_json(obj["R"], "R"),
                         matrix_from_json(obj["Lambda"], "Lambda"))


def save_model(path, model):
    save_json(path, model_to_json(model))


def load_model(path):
    return model_from_json(load_json(path))
