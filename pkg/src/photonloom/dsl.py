"""Line-oriented circuit scripts.

One statement per line, whitespace-separated tokens, ``#`` starts a
comment::

    mode v1                      # vacuum modes
    source x5 H 1                # n photons into a rail
    pair 1 2 0.6 0.8             # alpha|HH> + beta|VV>, complex as 0.6+0.1j
    pbs 1 3 1' 3'                # in1 in2 out1 out2
    hwp 1' 45                    # map angle in degrees
    bs 5 x5 5 x5 0.5             # in1 in2 out1 out2 transmittance
    detect x5 1                  # photons summed over H and V
    detect-rail x5 H 1
    detect-none j1 j2
    measure-diag 11 D4 D5        # optional outcome labels
    relabel 5' 9

Modes must be declared (``mode``, ``source``, ``pair``, or as an element
output) before they are read.  A mode used as an element input and not
listed among its outputs is consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .circuit import Apply, Circuit, Declare, MeasureDiag, Pair, PostSelect, Source
from .errors import ArityError, ParseError, TransmittanceOutOfRange, UndeclaredMode
from .fock import Rail
from .measurement import DetectionPattern
from .optics import make_beamsplitter, make_pbs, make_relabel, make_waveplate

# keyword -> (min args, max args or None for unbounded)
ARITY = {
    "mode": (1, None),
    "source": (3, 3),
    "pair": (4, 4),
    "pbs": (4, 4),
    "hwp": (2, 2),
    "bs": (5, 5),
    "detect": (2, 2),
    "detect-rail": (3, 3),
    "detect-none": (1, None),
    "measure-diag": (1, 3),
    "relabel": (2, 2),
}


@dataclass(frozen=True)
class Statement:
    keyword: str
    args: tuple
    line: int = field(default=0, compare=False)
    column: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CircuitScript:
    statements: tuple[Statement, ...]
    source_text: str = field(default="", compare=False, repr=False)

    def to_circuit(self, name: str = "") -> Circuit:
        return compile_script(self, name)


def _fmt_real(x: float) -> str:
    return repr(float(x))


def _fmt_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return _fmt_real(z.real)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{_fmt_real(z.real)}{sign}{_fmt_real(abs(z.imag))}j"


def _parse_number(tok, kind, line, col):
    try:
        value = complex(tok) if kind is complex else kind(tok)
    except ValueError:
        raise ParseError(f"expected {kind.__name__} literal, got {tok!r}", line, col) from None
    if kind is float and not math.isfinite(value):
        raise ParseError(f"non-finite number {tok!r}", line, col)
    if kind is complex and not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise ParseError(f"non-finite number {tok!r}", line, col)
    return value


def _parse_pol(tok, line, col):
    if tok not in ("H", "V"):
        raise ParseError(f"polarization must be H or V, got {tok!r}", line, col)
    return tok


def _parse_count(tok, line, col):
    n = _parse_number(tok, int, line, col)
    if n < 0:
        raise ParseError(f"photon count must be non-negative, got {n}", line, col)
    return n


def _tokenize(line: str):
    """``(token, column)`` pairs with 1-based columns, comments stripped."""
    body = line.split("#", 1)[0]
    out, i = [], 0
    while i < len(body):
        if body[i].isspace():
            i += 1
            continue
        j = i
        while j < len(body) and not body[j].isspace():
            j += 1
        out.append((body[i:j], i + 1))
        i = j
    return out


class _Scope:
    """Tracks which spatial modes are live while parsing."""

    def __init__(self):
        self.live: set[str] = set()

    def need(self, mode, line, col):
        if mode not in self.live:
            raise UndeclaredMode(f"mode {mode!r} is not declared", line, col)

    def fresh(self, mode, line, col):
        if mode in self.live:
            raise ParseError(f"mode {mode!r} is already in use", line, col)
        self.live.add(mode)

    def transform(self, inputs, outputs, line, cols):
        for m, c in zip(inputs, cols):
            self.need(m, line, c)
        self.live -= set(inputs)
        for m, c in zip(outputs, cols[len(inputs):]):
            self.fresh(m, line, c)


def parse_circuit(text: str) -> CircuitScript:
    scope = _Scope()
    statements = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokenize(raw)
        if not toks:
            continue
        (kw, kcol), rest = toks[0], toks[1:]
        if kw not in ARITY:
            raise ParseError(f"unknown statement {kw!r}", lineno, kcol)
        lo, hi = ARITY[kw]
        if len(rest) < lo or (hi is not None and len(rest) > hi):
            want = f"{lo}" if lo == hi else f"{lo}..{hi if hi is not None else 'n'}"
            raise ArityError(f"{kw} takes {want} arguments, got {len(rest)}", lineno, kcol)
        words = [t for t, _ in rest]
        cols = [c for _, c in rest]
        args = _parse_args(kw, words, cols, lineno, kcol, scope)
        statements.append(Statement(kw, args, lineno, kcol))
    return CircuitScript(tuple(statements), text)


def _parse_args(kw, words, cols, line, kcol, scope: _Scope) -> tuple:
    if kw == "mode":
        for m, c in zip(words, cols):
            scope.fresh(m, line, c)
        return tuple(words)
    if kw == "source":
        mode, pol, n = words
        pol = _parse_pol(pol, line, cols[1])
        n = _parse_count(n, line, cols[2])
        scope.live.add(mode)
        return (mode, pol, n)
    if kw == "pair":
        m1, m2 = words[:2]
        if m1 == m2:
            raise ParseError("pair needs two distinct modes", line, cols[1])
        alpha = _parse_number(words[2], complex, line, cols[2])
        beta = _parse_number(words[3], complex, line, cols[3])
        scope.fresh(m1, line, cols[0])
        scope.fresh(m2, line, cols[1])
        return (m1, m2, alpha, beta)
    if kw in ("pbs", "bs"):
        in1, in2, out1, out2 = words[:4]
        if in1 == in2 or out1 == out2:
            raise ParseError(f"{kw} needs distinct modes on each side", line, kcol)
        if kw == "bs":
            T = _parse_number(words[4], float, line, cols[4])
            if not 0.0 <= T <= 1.0:
                raise TransmittanceOutOfRange(
                    f"line {line}, column {cols[4]}: transmittance must lie in [0, 1], got {T}"
                )
        scope.transform((in1, in2), (out1, out2), line, cols)
        return (in1, in2, out1, out2) if kw == "pbs" else (in1, in2, out1, out2, T)
    if kw == "hwp":
        scope.need(words[0], line, cols[0])
        return (words[0], _parse_number(words[1], float, line, cols[1]))
    if kw == "detect":
        scope.need(words[0], line, cols[0])
        scope.live.discard(words[0])
        return (words[0], _parse_count(words[1], line, cols[1]))
    if kw == "detect-rail":
        scope.need(words[0], line, cols[0])
        return (words[0], _parse_pol(words[1], line, cols[1]), _parse_count(words[2], line, cols[2]))
    if kw == "detect-none":
        for m, c in zip(words, cols):
            scope.need(m, line, c)
        if len(set(words)) != len(words):
            raise ParseError("detect-none lists a mode twice", line, kcol)
        scope.live -= set(words)
        return tuple(words)
    if kw == "measure-diag":
        if len(words) == 2:
            raise ArityError("measure-diag takes a mode and optionally two labels", line, kcol)
        scope.need(words[0], line, cols[0])
        scope.live.discard(words[0])
        return tuple(words)
    if kw == "relabel":
        old, new = words
        scope.transform((old,), (new,), line, cols)
        return (old, new)
    raise ParseError(f"unknown statement {kw!r}", line, kcol)  # pragma: no cover


def format_statement(st: Statement) -> str:
    kw, a = st.keyword, st.args
    if kw == "pair":
        parts = [a[0], a[1], _fmt_complex(a[2]), _fmt_complex(a[3])]
    elif kw == "bs":
        parts = [*a[:4], _fmt_real(a[4])]
    elif kw == "hwp":
        parts = [a[0], _fmt_real(a[1])]
    else:
        parts = [str(x) for x in a]
    return " ".join([kw, *parts])


def format_script(script: CircuitScript) -> str:
    """Canonical text: one statement per line, no comments."""
    return "".join(format_statement(st) + "\n" for st in script.statements)


def compile_statement(st: Statement):
    kw, a = st.keyword, st.args
    if kw == "mode":
        return Declare(tuple(a))
    if kw == "source":
        return Source(a[0], a[1], a[2])
    if kw == "pair":
        return Pair(a[0], a[1], a[2], a[3])
    if kw == "pbs":
        return Apply(make_pbs(*a))
    if kw == "hwp":
        return Apply(make_waveplate(*a))
    if kw == "bs":
        return Apply(make_beamsplitter(*a))
    if kw == "detect":
        return PostSelect(DetectionPattern.of((a[0], a[1])))
    if kw == "detect-rail":
        return PostSelect(DetectionPattern.of((Rail(a[0], a[1]), a[2])))
    if kw == "detect-none":
        return PostSelect(DetectionPattern(tuple((m, 0) for m in a)))
    if kw == "measure-diag":
        labels = tuple(a[1:]) if len(a) == 3 else ("+45", "-45")
        return MeasureDiag(a[0], labels)
    if kw == "relabel":
        return Apply(make_relabel(*a))
    raise ParseError(f"unknown statement {kw!r}", st.line, st.column)


def compile_script(script: CircuitScript, name: str = "") -> Circuit:
    return Circuit(tuple(compile_statement(st) for st in script.statements), name)


def load_circuit(path) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        return parse_circuit(fh.read()).to_circuit(str(path))
