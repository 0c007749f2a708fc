"""Canonical JSON interchange for tables, measures, and solutions.

Writers are deterministic (sorted keys, floats at 17 significant digits,
sorted record order) and atomic (temp file + rename), so identical inputs
and seeds give byte-identical files.  Readers reject malformed documents,
duplicate indices, and holes.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError
from .moments import Atom, AtomicMeasure, MomentTable


def _fmt_float(x: float) -> str:
    if not np.isfinite(x):
        raise InputError(f"cannot serialize non-finite float {x}")
    text = format(float(x), ".17g")
    # normalize "-0" so equal values serialize identically
    return "0" if text == "-0" else text


def canonical_json(obj) -> str:
    """Serialize with sorted keys and fixed float formatting."""

    def emit(node) -> str:
        if node is None:
            return "null"
        if isinstance(node, bool):
            return "true" if node else "false"
        if isinstance(node, (int, np.integer)):
            return str(int(node))
        if isinstance(node, (float, np.floating)):
            return _fmt_float(float(node))
        if isinstance(node, str):
            return json.dumps(node)
        if isinstance(node, dict):
            items = sorted(node.items())
            inner = ",".join(f"{json.dumps(str(k))}:{emit(v)}" for k, v in items)
            return "{" + inner + "}"
        if isinstance(node, (list, tuple)):
            return "[" + ",".join(emit(v) for v in node) + "]"
        raise InputError(f"cannot serialize value of type {type(node).__name__}")

    return emit(obj) + "\n"


def atomic_write_text(path, text: str) -> None:
    """Write via a sibling temp file and rename, so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(path):
    try:
        with open(path, "r") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"no such file: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise InputError(message)


def table_to_dict(table: MomentTable) -> dict:
    moments = []
    for m, n in table.indices():
        v = table.value(m, n)
        moments.append({"m": m, "n": n, "re": v.real, "im": v.imag})
    return {"max_power": table.max_power, "max_freq": table.max_freq,
            "moments": moments}


def dump_table(table: MomentTable, path) -> None:
    atomic_write_text(path, canonical_json(table_to_dict(table)))


def load_table(path) -> MomentTable:
    doc = _load_json(path)
    _require(isinstance(doc, dict), f"{path}: expected a JSON object")
    for key in ("max_power", "max_freq", "moments"):
        _require(key in doc, f"{path}: missing field '{key}'")
    mp, nf = doc["max_power"], doc["max_freq"]
    _require(isinstance(mp, int) and mp >= 1, f"{path}: max_power must be an int >= 1")
    _require(isinstance(nf, int) and nf >= 0, f"{path}: max_freq must be an int >= 0")
    _require(isinstance(doc["moments"], list), f"{path}: 'moments' must be an array")
    values = {}
    for rec in doc["moments"]:
        _require(isinstance(rec, dict), f"{path}: each moment must be an object")
        for key in ("m", "n", "re", "im"):
            _require(key in rec, f"{path}: moment entry missing '{key}'")
        m, n = rec["m"], rec["n"]
        _require(isinstance(m, int) and isinstance(n, int),
                 f"{path}: moment indices must be integers")
        _require(0 <= m <= 2 * mp and abs(n) <= 2 * nf,
                 f"{path}: moment index ({m}, {n}) outside the declared rectangle")
        _require((m, n) not in values, f"{path}: duplicate moment index ({m}, {n})")
        re, im = rec["re"], rec["im"]
        _require(isinstance(re, (int, float)) and isinstance(im, (int, float)),
                 f"{path}: moment values must be numbers")
        values[(m, n)] = complex(float(re), float(im))
    expected = (2 * mp + 1) * (4 * nf + 1)
    _require(len(values) == expected,
             f"{path}: table has holes ({len(values)} of {expected} entries)")
    return MomentTable.from_values(mp, nf, values)


def measure_to_dict(measure: AtomicMeasure, diagnostics: dict | None = None) -> dict:
    atoms = sorted(measure.atoms, key=lambda a: (a.x, a.phi, a.weight))
    doc = {"atoms": [{"x": a.x, "phi": a.phi, "weight": a.weight} for a in atoms]}
    if diagnostics is not None:
        doc["diagnostics"] = diagnostics
    return doc


def dump_measure(measure: AtomicMeasure, path, diagnostics: dict | None = None) -> None:
    atomic_write_text(path, canonical_json(measure_to_dict(measure, diagnostics)))


def load_measure(path) -> AtomicMeasure:
    measure, _ = load_solution(path)
    return measure


def load_solution(path) -> tuple[AtomicMeasure, dict]:
    """Read a measure file; returns (measure, diagnostics or {})."""
    doc = _load_json(path)
    _require(isinstance(doc, dict), f"{path}: expected a JSON object")
    _require("atoms" in doc, f"{path}: missing field 'atoms'")
    _require(isinstance(doc["atoms"], list), f"{path}: 'atoms' must be an array")
    _require(len(doc["atoms"]) >= 1, f"{path}: measure must contain at least one atom")
    triples = []
    for rec in doc["atoms"]:
        _require(isinstance(rec, dict), f"{path}: each atom must be an object")
        for key in ("x", "phi", "weight"):
            _require(key in rec, f"{path}: atom missing '{key}'")
            _require(isinstance(rec[key], (int, float)),
                     f"{path}: atom field '{key}' must be a number")
        _require(rec["weight"] > 0, f"{path}: weight must be positive")
        triples.append((rec["x"], rec["phi"], rec["weight"]))
    diagnostics = doc.get("diagnostics", {})
    _require(isinstance(diagnostics, dict), f"{path}: 'diagnostics' must be an object")
    return AtomicMeasure.create(Atom(x, p, w) for x, p, w in triples), diagnostics


def matrix_to_pairs(mat: np.ndarray) -> list:
    """Complex matrix as row-major nested [re, im] pairs."""
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.asarray(mat)]


def matrix_from_pairs(doc, path="<matrix>") -> np.ndarray:
    _require(isinstance(doc, list) and doc, f"{path}: expected a non-empty array of rows")
    rows = []
    width = None
    for row in doc:
        _require(isinstance(row, list), f"{path}: each row must be an array")
        if width is None:
            width = len(row)
        _require(len(row) == width, f"{path}: ragged rows")
        entries = []
        for cell in row:
            _require(isinstance(cell, list) and len(cell) == 2
                     and all(isinstance(c, (int, float)) for c in cell),
                     f"{path}: each entry must be an [re, im] pair")
            entries.append(complex(float(cell[0]), float(cell[1])))
        rows.append(entries)
    return np.array(rows, dtype=complex)


def load_matrix(path) -> np.ndarray:
    return matrix_from_pairs(_load_json(path), str(path))
