"""Linear optical elements and the sparse multinomial expansion engine.

An element maps the creation operators of its input rails onto its output
rails: ``a_in[r]^dag -> sum_s matrix[s, r] a_out[s]^dag``.  Rails that an
element does not list are left untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import (
    DuplicateRail,
    NonUnitaryElement,
    PhotonCapExceeded,
    RailCollision,
    TransmittanceOutOfRange,
    UnknownRail,
)
from .fock import FockBasisState, PureState, Rail, mode_rails, photon_cap

UNITARY_TOL = 1e-12

PBS = "PBS"
WAVEPLATE = "WavePlate"
BEAMSPLITTER = "BeamSplitter"
RELABEL = "Relabel"


@dataclass(frozen=True)
class Element:
    """A passive linear transform over a named list of rails.

    Equality and hashing use ``kind``, the rail lists and ``params``; the
    matrix is a function of those.
    """

    kind: str
    rails_in: tuple[Rail, ...]
    rails_out: tuple[Rail, ...]
    matrix: np.ndarray = field(compare=False, repr=False)
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        n = len(self.rails_in)
        if len(set(self.rails_in)) != n or len(set(self.rails_out)) != len(self.rails_out):
            raise DuplicateRail(f"{self.kind}: rails repeated in {self.rails_in} -> {self.rails_out}")
        if m.shape != (n, n) or len(self.rails_out) != n:
            raise ValueError(f"{self.kind}: matrix shape {m.shape} does not match {n} rails")
        err = np.max(np.abs(m @ m.conj().T - np.eye(n))) if n else 0.0
        if err > UNITARY_TOL:
            raise NonUnitaryElement(f"{self.kind}: matrix deviates from unitary by {err:.3g}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    @property
    def rails(self) -> frozenset[Rail]:
        return frozenset(self.rails_in) | frozenset(self.rails_out)


def _check_distinct(*names):
    if len(set(names)) != len(names):
        raise DuplicateRail(f"spatial modes must be distinct: {names}")


def make_pbs(in1, in2, out1, out2) -> Element:
    """Polarizing beam splitter: H is transmitted, V is reflected.

    ``in1.H -> out1.H``, ``in2.H -> out2.H``, ``in1.V -> out2.V``,
    ``in2.V -> out1.V``, with no phase on reflection.
    """
    in1, in2, out1, out2 = map(str, (in1, in2, out1, out2))
    _check_distinct(in1, in2)
    _check_distinct(out1, out2)
    (h1, v1), (h2, v2) = mode_rails(in1), mode_rails(in2)
    (oh1, ov1), (oh2, ov2) = mode_rails(out1), mode_rails(out2)
    rails_in = (h1, v1, h2, v2)
    rails_out = (oh1, ov1, oh2, ov2)
    # column = input rail, row = output rail
    m = np.zeros((4, 4))
    m[0, 0] = 1.0  # in1.H -> out1.H
    m[3, 1] = 1.0  # in1.V -> out2.V
    m[2, 2] = 1.0  # in2.H -> out2.H
    m[1, 3] = 1.0  # in2.V -> out1.V
    return Element(PBS, rails_in, rails_out, m)


def make_waveplate(mode, theta_deg: float) -> Element:
    """Wave plate map ``H -> cos t H + sin t V``, ``V -> sin t H - cos t V``.

    ``theta_deg`` is the angle of the map itself: 45 gives the Hadamard-type
    map, 0 is a phase flip on V, 90 swaps H and V.
    """
    theta = float(theta_deg)
    if not math.isfinite(theta):
        raise ValueError(f"waveplate angle must be finite, got {theta_deg}")
    t = math.radians(theta)
    c, s = _clean(math.cos(t)), _clean(math.sin(t))
    rails = mode_rails(mode)
    m = np.array([[c, s], [s, -c]])
    return Element(WAVEPLATE, rails, rails, m, (("theta_deg", theta),))


def _clean(x: float) -> float:
    # cos(90 deg) evaluates to 6e-17; snap exact zeros and units at those angles
    for v in (0.0, 1.0, -1.0):
        if abs(x - v) < 1e-15:
            return v
    return x


def make_beamsplitter(in1, in2, out1, out2, T: float) -> Element:
    """Polarization-independent beam splitter with transmittance ``T``.

    ``a -> sqrt(T) a' + sqrt(1-T) b'`` and ``b -> sqrt(1-T) a' - sqrt(T) b'``
    on the H rails and, identically, on the V rails.
    """
    T = float(T)
    if not (0.0 <= T <= 1.0) or math.isnan(T):
        raise TransmittanceOutOfRange(f"transmittance must lie in [0, 1], got {T}")
    in1, in2, out1, out2 = map(str, (in1, in2, out1, out2))
    _check_distinct(in1, in2)
    _check_distinct(out1, out2)
    t, r = math.sqrt(T), math.sqrt(1.0 - T)
    rails_in, rails_out = [], []
    for pol in ("H", "V"):
        rails_in += [Rail(in1, pol), Rail(in2, pol)]
        rails_out += [Rail(out1, pol), Rail(out2, pol)]
    block = np.array([[t, r], [r, -t]])
    m = np.zeros((4, 4))
    m[:2, :2] = block
    m[2:, 2:] = block
    return Element(BEAMSPLITTER, tuple(rails_in), tuple(rails_out), m, (("T", T),))


def make_relabel(old, new) -> Element:
    old, new = str(old), str(new)
    return Element(RELABEL, mode_rails(old), mode_rails(new), np.eye(2))


@lru_cache(maxsize=None)
def _factorial(n: int) -> int:
    return math.factorial(n)


def _compositions(n: int, k: int):
    """All ways to write ``n`` as an ordered sum of ``k`` non-negative ints."""
    if k == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, k - 1):
            yield (first, *rest)


def _expand_local(matrix: np.ndarray, occ_in: tuple[int, ...]) -> dict[tuple[int, ...], complex]:
    """Output occupations reached from ``occ_in`` and their amplitudes.

    ``prod_r (a_r^dag)^{n_r} / sqrt(n_r!)`` is expanded one input rail at a
    time with exact multinomial coefficients; the final bosonic factor is
    ``sqrt(prod_s m_s!)``.
    """
    k = matrix.shape[0]
    poly: dict[tuple[int, ...], complex] = {(0,) * k: 1.0 + 0j}
    for r, n in enumerate(occ_in):
        if n == 0:
            continue
        col = matrix[:, r]
        targets = [s for s in range(k) if col[s] != 0]
        terms = []
        for comp in _compositions(n, len(targets)):
            coef = _factorial(n)
            amp = 1.0 + 0j
            for s, c in zip(targets, comp):
                coef //= _factorial(c)
                if c:
                    amp *= col[s] ** c
            terms.append((comp, coef * amp))
        new_poly: dict[tuple[int, ...], complex] = {}
        for occ, a in poly.items():
            for comp, c in terms:
                out = list(occ)
                for s, cnt in zip(targets, comp):
                    out[s] += cnt
                key = tuple(out)
                new_poly[key] = new_poly.get(key, 0j) + a * c
        poly = new_poly
    norm_in = math.prod(_factorial(n) for n in occ_in)
    result = {}
    for occ, a in poly.items():
        amp = a * math.sqrt(math.prod(_factorial(m) for m in occ) / norm_in)
        if abs(amp) > 0:
            result[occ] = amp
    return result


def apply_element(s: PureState, e: Element, cap: int | None = None) -> PureState:
    """Evolve a sparse state through one element."""
    missing = [r for r in e.rails_in if r not in s.registry]
    if missing:
        raise UnknownRail(f"{e.kind}: rails {missing} not in state registry")
    fresh = set(e.rails_out) - set(e.rails_in)
    clash = fresh & s.registry
    if clash:
        raise RailCollision(f"{e.kind}: output rails {sorted(clash)} already in use")
    limit = photon_cap() if cap is None else cap
    in_index = {r: i for i, r in enumerate(e.rails_in)}
    registry = (s.registry - set(e.rails_in)) | set(e.rails_out)
    cache: dict[tuple[int, ...], dict[tuple[int, ...], complex]] = {}
    out: dict[FockBasisState, complex] = {}
    for basis, amp in s.items():
        if basis.total > limit:
            raise PhotonCapExceeded(f"term with {basis.total} photons exceeds cap {limit}")
        local = [0] * len(e.rails_in)
        rest = []
        for r, n in basis.items:
            i = in_index.get(r)
            if i is None:
                rest.append((r, n))
            else:
                local[i] = n
        key = tuple(local)
        if key not in cache:
            cache[key] = _expand_local(e.matrix, key)
        for occ, a in cache[key].items():
            items = rest + [(e.rails_out[j], m) for j, m in enumerate(occ) if m]
            b = FockBasisState(tuple(sorted(items)))
            out[b] = out.get(b, 0j) + amp * a
    return PureState(out, registry)


def apply_elements(s: PureState, elements) -> PureState:
    for e in elements:
        s = apply_element(s, e)
    return s
