"""Machine-readable result reports (JSON and CSV)."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field

from . import __version__
from .circuit import Branch
from .fock import ZERO_NORM_SQ, PureState, normalize

# components smaller than this are written as 0: keeps goldens free of 1e-17 noise
_SNAP = 1e-15


def clean_float(x: float) -> float:
    x = float(x)
    if abs(x) < _SNAP:
        return 0.0
    return x


def state_terms(s: PureState | None) -> list[list]:
    if s is None:
        return []
    rows = [[b.label(), clean_float(a.real), clean_float(a.imag)] for b, a in s.items()]
    return sorted(rows, key=lambda r: r[0])


def circuit_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass
class RunReport:
    probability: float | None
    state: PureState | None = None
    claimed: float | None = None
    branches: list[dict] = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    circuit_text: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        meta = {
            "circuit_hash": circuit_hash(self.circuit_text) if self.circuit_text else None,
            "tool_version": __version__,
            "parameters": self.parameters,
        }
        out = {
            "probability": None if self.probability is None else clean_float(self.probability),
            "state": state_terms(self.state),
            "claimed": None if self.claimed is None else clean_float(self.claimed),
            "branches": self.branches,
        }
        out.update(self.extra)
        out["meta"] = meta
        return out

    def to_json(self) -> str:
        return dumps(self.to_dict())


def format_float(x: float) -> str:
    """17 significant digits (round-trips every double), always with a decimal point."""
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"cannot serialize non-finite float {x}")
    s = format(x, ".17g")
    if not any(ch in s for ch in ".en"):
        s += ".0"
    return s


def _encode(obj, depth: int) -> str:
    # json.dumps renders floats with repr(); reports need a fixed 17-digit form
    pad, inner = "  " * depth, "  " * (depth + 1)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, float):
        return format_float(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {_encode(v, depth + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _encode(v, depth + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, 2-space indent, trailing newline."""
    return _encode(obj, 0) + "\n"


def branch_entry(record, probability: float, state: PureState | None, **extra) -> dict:
    entry = {
        "record": list(record),
        "label": "".join(record),
        "probability": clean_float(probability),
        "state": state_terms(state),
    }
    entry.update(extra)
    return entry


def report_from_branches(branches: list[Branch], circuit_text: str = "", parameters=None) -> RunReport:
    """Report for a pure-state circuit run; states are normalized per branch."""
    total = sum(b.probability for b in branches)
    entries = []
    normalized = []
    for b in branches:
        p = b.probability
        s = normalize(b.state)[0] if p > ZERO_NORM_SQ else None
        normalized.append(s)
        entries.append(branch_entry(b.record, p, s))
    single = normalized[0] if len(branches) == 1 else None
    return RunReport(total, single, None, entries, parameters or {}, circuit_text)


def branches_csv(branches: list[Branch]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["record", "probability", "basis", "re", "im"])
    for b in branches:
        p = b.probability
        s = normalize(b.state)[0] if p > ZERO_NORM_SQ else None
        label = "".join(b.record)
        for basis, re, im in state_terms(s) or [["", 0.0, 0.0]]:
            w.writerow([label, format_float(clean_float(p)), basis, format_float(re), format_float(im)])
    return buf.getvalue()


def rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_float(clean_float(x)) if isinstance(x, float) else x for x in row])
    return buf.getvalue()
