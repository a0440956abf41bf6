"""JSON, CSV and binary encodings.

Symbols are stored with a shared node table so that the DAG sharing produced
by Moyal products survives a round trip; a coefficient is either an inline
tree or ``{"op": "ref", "id": i}`` pointing into ``nodes``. Floats use
Python's shortest round-trip representation, so decoding is bit-exact.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from . import fields as F
from .context import SemiclassicalContext
from .lattice import ResonanceLattice
from .symbols import FourierSymbol

CSV_SCHEMA = 1


def _c(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _z(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, dict):
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    return complex(v)


def _ref(ids, node):
    return {"op": "ref", "id": ids[id(node)]}


def encode_node(node: F.Field, ids: dict) -> dict:
    r = lambda ch: _ref(ids, ch)  # noqa: E731
    if isinstance(node, F.Const):
        return {"op": "const", "value": _c(node.value)}
    if isinstance(node, F.Poly):
        return {"op": "poly", "c0": _c(node.c0), "b": [_c(v) for v in node.b],
                "M": [[_c(v) for v in row] for row in node.M]}
    if isinstance(node, F.Trig):
        return {"op": "trig", "amp": _c(node.amp), "w": [float(v) for v in node.w], "phase": node.phase}
    if isinstance(node, F.Compose):
        return {"op": "compose", "fn": node.fn, "order": node.order, "fd_step": node.fd_step, "arg": r(node.arg)}
    if isinstance(node, F.Sum):
        return {"op": "sum", "terms": [r(t) for t in node.terms]}
    if isinstance(node, F.Product):
        return {"op": "product", "a": r(node.a), "b": r(node.b)}
    if isinstance(node, F.Scale):
        return {"op": "scale", "c": _c(node.c), "f": r(node.f)}
    if isinstance(node, F.Conj):
        return {"op": "conj", "f": r(node.f)}
    if isinstance(node, F.Shift):
        return {"op": "shift", "v": list(node.v), "f": r(node.f)}
    raise TypeError(f"cannot encode {type(node).__name__}")


def encode_fields(roots) -> tuple[list, dict]:
    """Node table (children before parents) and the id -> index map."""
    ids: dict = {}
    table = []
    for node in F.iter_nodes(roots):
        table.append(encode_node(node, ids))
        ids[id(node)] = len(table) - 1
    return table, ids


def decode_node(spec, table: list | None = None) -> F.Field:
    """Decode a node; ``ref`` entries resolve against already-decoded ``table``."""
    if isinstance(spec, (int, float, list)):
        return F.Const(_z(spec))
    op = spec["op"]
    sub = lambda s: decode_node(s, table)  # noqa: E731
    if op == "ref":
        if table is None:
            raise ValueError("reference node outside a node table")
        return table[spec["id"]]
    if op == "const":
        return F.Const(_z(spec["value"]))
    if op == "poly":
        b = [_z(v) for v in spec["b"]]
        M = [[_z(v) for v in row] for row in spec["M"]] if "M" in spec else None
        return F.Poly(_z(spec.get("c0", 0.0)), b, M)
    if op == "trig":
        return F.Trig(_z(spec.get("amp", 1.0)), spec["w"], float(spec.get("phase", 0.0)))
    if op == "compose":
        return F.Compose(spec["fn"], sub(spec["arg"]), int(spec.get("order", 0)),
                         float(spec.get("fd_step", 1e-5)))
    if op == "sum":
        return F.Sum([sub(t) for t in spec["terms"]])
    if op == "product":
        return F.Product(sub(spec["a"]), sub(spec["b"]))
    if op == "scale":
        return F.Scale(_z(spec["c"]), sub(spec["f"]))
    if op == "conj":
        return F.Conj(sub(spec["f"]))
    if op == "shift":
        return F.Shift(sub(spec["f"]), spec["v"])
    raise ValueError(f"unknown node op {op!r}")


def decode_table(nodes: list) -> list:
    table: list = []
    for spec in nodes:
        table.append(decode_node(spec, table))
    return table


def _ctx_dict(ctx: SemiclassicalContext) -> dict:
    return {"dims": ctx.d, "hbar": ctx.hbar, "kappa": ctx.kappa, "gamma": ctx.gamma,
            "delta": ctx.delta, "xi_window": list(ctx.xi_window)}


def _ctx_from(doc: dict) -> SemiclassicalContext:
    return SemiclassicalContext(d=int(doc["dims"]), hbar=float(doc["hbar"]), kappa=float(doc["kappa"]),
                                gamma=float(doc["gamma"]), delta=float(doc["delta"]),
                                xi_window=tuple(doc.get("xi_window", (-2.0, 2.0))))


def symbols_to_dict(symbols: dict) -> dict:
    """Several symbols sharing one context and one node table."""
    syms = list(symbols.values())
    if not syms:
        raise ValueError("nothing to serialize")
    ctx = syms[0].ctx
    roots = [f for P in syms for f in P.coeffs.values()]
    table, ids = encode_fields(roots)
    out = _ctx_dict(ctx)
    out["nodes"] = table
    out["symbols"] = {name: [{"k": list(k), "coeff": _ref(ids, f)} for k, f in P.coeffs.items()]
                      for name, P in symbols.items()}
    return out


def symbols_from_dict(doc: dict) -> dict:
    ctx = _ctx_from(doc)
    table = decode_table(doc.get("nodes", []))
    return {name: FourierSymbol(ctx, {tuple(m["k"]): decode_node(m["coeff"], table) for m in modes})
            for name, modes in doc["symbols"].items()}


def symbol_to_dict(P: FourierSymbol) -> dict:
    doc = symbols_to_dict({"P": P})
    doc["modes"] = doc.pop("symbols")["P"]
    return doc


def symbol_from_dict(doc: dict) -> FourierSymbol:
    ctx = _ctx_from(doc)
    table = decode_table(doc.get("nodes", []))
    return FourierSymbol(ctx, {tuple(m["k"]): decode_node(m["coeff"], table) for m in doc["modes"]})


def symbol_to_json(P: FourierSymbol) -> str:
    return json.dumps(symbol_to_dict(P))


def symbol_from_json(text: str) -> FourierSymbol:
    return symbol_from_dict(json.loads(text))


def normal_form_to_dict(nf) -> dict:
    syms = {"K0": nf.K0}
    for n, s in enumerate(nf.steps):
        syms[f"P{n}"] = s.P
        syms[f"A{n}"] = s.A
        syms[f"K{n + 1}"] = s.K_next
    doc = symbols_to_dict(syms)
    doc["N"] = nf.N
    doc["M"] = nf.M
    doc["hamiltonian"] = nf.H.to_dict()
    doc["diagnostics"] = nf.diagnostics
    return doc


def lattices_to_json(lattices) -> str:
    return json.dumps([R.to_list() for R in lattices])


def lattices_from_json(text: str, d: int):
    return [ResonanceLattice(rows, d=d) if rows else ResonanceLattice.trivial(d) for rows in json.loads(text)]


# ------------------------------------------------------------------ CSV


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={CSV_SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def write_csv(path, columns, rows) -> Path:
    path = Path(path)
    path.write_text(csv_text(columns, rows))
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


# --------------------------------------------------------------- binary


def dump_matrix(path, M) -> tuple[Path, Path]:
    """Dense row-major little-endian complex64 dump plus a JSON sidecar."""
    path = Path(path)
    A = M.dense().astype("<c8")
    path.write_bytes(A.tobytes(order="C"))
    side = path.with_suffix(path.suffix + ".json")
    side.write_text(json.dumps({"dims": M.ctx.d, "K_basis": M.K_basis, "hbar": M.ctx.hbar,
                                "size": M.size, "dtype": "complex64", "byteorder": "little",
                                "layout": "row-major"}))
    return path, side


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    n = int(meta["size"])
    return np.frombuffer(path.read_bytes(), dtype="<c8").reshape(n, n)
