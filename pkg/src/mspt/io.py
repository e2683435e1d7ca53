"""JSON and CSV formats.

Tensor: ``{"d": 2, "D": 4, "A": [[[[[re, im], ...]]]]}`` with index order
``[p][q][a][b]`` (ket, bra, left bond, right bond). A ket-only tensor has
``"d_bra": 1``.

Matrix: ``[[[re, im], ...], ...]``.

Circuit: ``{"layers": [[{"pos": 0, "kraus": [matrix, ...], "span": 1}]]}``.
``span`` is optional and inferred from the matrix size and ``"d"`` (default
2). ``pos`` is the first site of the gate; a translation-invariant evolution
reads it as the layer offset.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math

import numpy as np

from .channels import ChannelCircuit, KrausGate
from .mpdo import MPDOTensor, as_tensor


class SchemaError(ValueError):
    pass


def _cnum(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def matrix_to_json(M) -> list:
    M = np.asarray(M, complex)
    return [[_cnum(z) for z in row] for row in M]


def _parse_complex_array(obj, where: str) -> np.ndarray:
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{where}: entries must be [re, im] number pairs") from exc
    if arr.ndim < 1 or arr.shape[-1] != 2:
        raise SchemaError(f"{where}: innermost entries must be [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def matrix_from_json(obj, where: str = "matrix") -> np.ndarray:
    M = _parse_complex_array(obj, where)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise SchemaError(f"{where}: expected a square matrix, got shape {M.shape}")
    return M


def tensor_to_json(A) -> dict:
    A = as_tensor(A)
    out = {"d": A.A.shape[0], "D": A.D, "A": [[[[_cnum(z) for z in row] for row in m] for m in pq] for pq in A.A]}
    if A.A.shape[1] != A.A.shape[0]:
        out["d_bra"] = A.A.shape[1]
    return out


def tensor_from_json(obj) -> MPDOTensor:
    if not isinstance(obj, dict):
        raise SchemaError("tensor: top level must be an object")
    for key in ("d", "D", "A"):
        if key not in obj:
            raise SchemaError(f"tensor: missing field {key!r}")
    d, D = obj["d"], obj["D"]
    db = obj.get("d_bra", d)
    if not all(isinstance(x, int) and x >= 1 for x in (d, D, db)):
        raise SchemaError("tensor: 'd', 'D' and 'd_bra' must be positive integers")
    A = _parse_complex_array(obj["A"], "tensor field 'A'")
    if A.shape != (d, db, D, D):
        raise SchemaError(f"tensor field 'A': shape {A.shape} does not match (d, d_bra, D, D) = {(d, db, D, D)}")
    return MPDOTensor(A)


def gate_to_json(pos: int, g: KrausGate) -> dict:
    return {"pos": int(pos), "span": g.span, "kraus": [matrix_to_json(k) for k in g.kraus]}


def circuit_to_json(c: ChannelCircuit, d: int = 2) -> dict:
    out = {"d": d, "layers": [[gate_to_json(pos, g) for pos, g in layer] for layer in c.layers]}
    if c.L is not None:
        out["L"] = c.L
    return out


def circuit_from_json(obj) -> ChannelCircuit:
    if not isinstance(obj, dict) or "layers" not in obj:
        raise SchemaError("circuit: expected an object with a 'layers' field")
    d = obj.get("d", 2)
    layers = []
    for li, layer in enumerate(obj["layers"]):
        if not isinstance(layer, list):
            raise SchemaError(f"circuit layer {li}: must be a list of gates")
        gates = []
        for gi, gate in enumerate(layer):
            where = f"circuit layer {li} gate {gi}"
            if not isinstance(gate, dict) or "pos" not in gate or "kraus" not in gate:
                raise SchemaError(f"{where}: needs 'pos' and 'kraus'")
            ks = [matrix_from_json(k, f"{where} kraus {ki}") for ki, k in enumerate(gate["kraus"])]
            if not ks:
                raise SchemaError(f"{where}: empty Kraus list")
            span = gate.get("span")
            if span is None:
                span = round(math.log(ks[0].shape[0], d))
            if d**span != ks[0].shape[0]:
                raise SchemaError(f"{where}: Kraus size {ks[0].shape[0]} is not {d}**{span}")
            gates.append((int(gate["pos"]), KrausGate(tuple(ks), span=span)))
        layers.append(gates)
    return ChannelCircuit(layers, obj.get("L"))


def load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def dump_json(obj, fh=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False)
    if fh is not None:
        fh.write(text + "\n")
    return text


def write_csv(header, rows, fh=None) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_csv(text: str) -> tuple[list[str], list[list[str]]]:
    rows = list(csv.reader(_io.StringIO(text)))
    return (rows[0], rows[1:]) if rows else ([], [])


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)
