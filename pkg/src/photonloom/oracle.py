"""Dense reference engine over an explicitly enumerated truncated Fock basis.

This is a separate code path from :mod:`photonloom.optics`: many-body
matrix elements come from permanents of the single-particle matrix,

    <m| U |n> = perm(U[m, n]) / sqrt(prod n_r! prod m_s!),

where ``U[m, n]`` repeats output row ``s`` ``m_s`` times and input column
``r`` ``n_r`` times.  Post-selection, sources and measurements are also
re-implemented on dense vectors.  Only the single-particle ``Element``
matrices and the step types are shared with the sparse engine.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .circuit import Apply, Circuit, Declare, MeasureDiag, Pair, PostSelect, Source
from .errors import (
    BasisOverflow,
    MixedOutcome,
    NonSinglePhotonMode,
    RailSetMismatch,
    SourceOccupied,
    UnknownRail,
)
from .fock import FockBasisState, PureState, Rail, mode_rails
from .measurement import DetectionPattern
from .optics import Element, make_waveplate

MAX_BASIS = 2_000_000
DENSE_UNITARY_TOL = 1e-10


def basis_size(n_rails: int, cap: int) -> int:
    return math.comb(n_rails + cap, cap)


def _occupations(n_rails: int, cap: int):
    """Occupation vectors with total <= cap, lexicographic in rail order."""
    if n_rails == 0:
        yield ()
        return
    for first in range(cap + 1):
        for rest in _occupations(n_rails - 1, cap - first):
            yield (first, *rest)


@lru_cache(maxsize=64)
def _basis(n_rails: int, cap: int) -> np.ndarray:
    size = basis_size(n_rails, cap)
    if size > MAX_BASIS:
        raise BasisOverflow(f"{size} basis states for {n_rails} rails at cap {cap}")
    rows = np.array(list(_occupations(n_rails, cap)), dtype=np.int64).reshape(size, n_rails)
    return rows


class _Index:
    """Row lookup for a (rails, cap) basis."""

    def __init__(self, n_rails: int, cap: int):
        self.rows = _basis(n_rails, cap)
        self.base = cap + 1
        self.fits = n_rails == 0 or math.log2(self.base) * n_rails < 62
        if self.fits:
            self.weights = self.base ** np.arange(n_rails - 1, -1, -1, dtype=np.int64)
            self.keys = self.rows @ self.weights  # ascending: rows are lexicographic
        else:
            self.lookup = {tuple(r): i for i, r in enumerate(self.rows.tolist())}

    def find(self, rows: np.ndarray) -> np.ndarray:
        if len(rows) == 0:
            return np.zeros(0, dtype=np.int64)
        if self.fits:
            keys = rows @ self.weights
            idx = np.searchsorted(self.keys, keys)
            bad = (idx >= len(self.keys)) | (self.keys[np.minimum(idx, len(self.keys) - 1)] != keys)
            if np.any(bad):
                raise BasisOverflow("row outside the truncated basis")
            return idx
        return np.array([self.lookup[tuple(r)] for r in rows.tolist()], dtype=np.int64)


@lru_cache(maxsize=64)
def _index(n_rails: int, cap: int) -> _Index:
    return _Index(n_rails, cap)


@dataclass(frozen=True)
class DenseState:
    """Dense amplitudes over all occupations of ``rails`` with at most ``cap`` photons."""

    rails: tuple[Rail, ...]
    cap: int
    amplitudes: np.ndarray

    def __post_init__(self):
        rails = tuple(sorted(Rail(*r) for r in self.rails))
        object.__setattr__(self, "rails", rails)
        size = basis_size(len(rails), self.cap)
        if size > MAX_BASIS:
            raise BasisOverflow(f"{size} basis states for {len(rails)} rails at cap {self.cap}")
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (basis_size(len(rails), self.cap),):
            raise ValueError(f"amplitude vector of shape {amps.shape} does not match basis")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def basis(self) -> np.ndarray:
        return _basis(len(self.rails), self.cap)

    def basis_states(self) -> list[FockBasisState]:
        return [
            FockBasisState(tuple((r, int(n)) for r, n in zip(self.rails, row) if n))
            for row in self.basis
        ]

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    @classmethod
    def zeros(cls, rails, cap: int) -> "DenseState":
        rails = tuple(sorted(rails))
        size = basis_size(len(rails), cap)
        if size > MAX_BASIS:
            raise BasisOverflow(f"{size} basis states for {len(rails)} rails at cap {cap}")
        return cls(rails, cap, np.zeros(size, dtype=complex))

    @classmethod
    def from_pure(cls, s: PureState, cap: int | None = None) -> "DenseState":
        rails = tuple(sorted(s.registry))
        if cap is None:
            cap = max((b.total for b in s.amplitudes), default=0)
        pos = {r: i for i, r in enumerate(rails)}
        rows = np.zeros((len(s), len(rails)), dtype=np.int64)
        vals = np.zeros(len(s), dtype=complex)
        for k, (b, a) in enumerate(s.items()):
            if b.total > cap:
                raise BasisOverflow(f"term {b.label()} exceeds cap {cap}")
            for r, n in b.items:
                rows[k, pos[r]] = n
            vals[k] = a
        out = cls.zeros(rails, cap)
        amps = out.amplitudes.copy()
        amps[_index(len(rails), cap).find(rows)] = vals
        return cls(rails, cap, amps)

    def to_pure(self, tol: float = 1e-14) -> PureState:
        amps = {}
        nz = np.nonzero(np.abs(self.amplitudes) >= tol)[0]
        for i in nz:
            row = self.basis[i]
            b = FockBasisState(tuple((r, int(n)) for r, n in zip(self.rails, row) if n))
            amps[b] = complex(self.amplitudes[i])
        return PureState(amps, self.rails)

    def mode_counts(self, spatial: str) -> np.ndarray:
        cols = [i for i, r in enumerate(self.rails) if r.spatial == spatial]
        return self.basis[:, cols].sum(axis=1)


def permanent(m: np.ndarray) -> complex:
    """Ryser's formula; adequate for the handful of photons an element sees."""
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0j
    total = 0j
    for k in range(1, n + 1):
        for cols in itertools.combinations(range(n), k):
            total += (-1) ** k * np.prod(m[:, cols].sum(axis=1))
    return (-1) ** n * total


def _transition_amplitude(u: np.ndarray, occ_in, occ_out) -> complex:
    cols = [r for r, n in enumerate(occ_in) for _ in range(n)]
    rows = [s for s, n in enumerate(occ_out) for _ in range(n)]
    sub = u[np.ix_(rows, cols)]
    norm = math.sqrt(math.prod(math.factorial(n) for n in occ_in)
                     * math.prod(math.factorial(n) for n in occ_out))
    return permanent(sub) / norm


def _local_outputs(k: int, total: int):
    return [occ for occ in itertools.product(range(total + 1), repeat=k) if sum(occ) == total]


@lru_cache(maxsize=512)
def _element_matrix(e: Element, rails: tuple[Rail, ...], cap: int, check: bool = True):
    """Many-body matrix of ``e`` from the ``rails`` basis to the post-element basis."""
    missing = [r for r in e.rails_in if r not in rails]
    if missing:
        raise UnknownRail(f"{e.kind}: rails {missing} not in dense rail set")
    new_rails = tuple(sorted((set(rails) - set(e.rails_in)) | set(e.rails_out)))
    if len(new_rails) != len(rails):
        raise RailSetMismatch(f"{e.kind}: output rails collide with untouched rails")
    src = _index(len(rails), cap)
    dst = _index(len(new_rails), cap)
    pos_in = [rails.index(r) for r in e.rails_in]
    # untouched rails keep their occupation, in their new column position
    keep_old = [i for i, r in enumerate(rails) if r not in e.rails_in]
    keep_new = [new_rails.index(rails[i]) for i in keep_old]
    pos_out = [new_rails.index(r) for r in e.rails_out]
    local = src.rows[:, pos_in]
    patterns, inverse = np.unique(local, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    rows_all, cols_all, vals_all = [], [], []
    k = len(e.rails_in)
    for p_idx, pattern in enumerate(patterns):
        members = np.nonzero(inverse == p_idx)[0]
        total = int(pattern.sum())
        for occ in _local_outputs(k, total):
            amp = _transition_amplitude(e.matrix, tuple(int(x) for x in pattern), occ)
            if abs(amp) < 1e-15:
                continue
            out_rows = np.zeros((len(members), len(new_rails)), dtype=np.int64)
            out_rows[:, keep_new] = src.rows[members][:, keep_old]
            out_rows[:, pos_out] = occ
            rows_all.append(dst.find(out_rows))
            cols_all.append(members)
            vals_all.append(np.full(len(members), amp))
    size = len(src.rows)
    if rows_all:
        mat = sp.csr_matrix(
            (np.concatenate(vals_all), (np.concatenate(rows_all), np.concatenate(cols_all))),
            shape=(size, size),
        )
    else:
        mat = sp.csr_matrix((size, size), dtype=complex)
    if check:
        dev = (mat.conj().T @ mat - sp.identity(size, format="csr")).tocoo()
        err = np.max(np.abs(dev.data)) if dev.nnz else 0.0
        if err > DENSE_UNITARY_TOL:
            raise RailSetMismatch(f"{e.kind}: dense matrix not unitary (deviation {err:.3g})")
    return mat, new_rails


def element_matrix(e: Element, rails, cap: int) -> np.ndarray:
    """Dense many-body matrix of ``e`` on the given rail set (for inspection)."""
    mat, _ = _element_matrix(e, tuple(sorted(rails)), cap)
    return mat.toarray()


def dense_apply(s: DenseState, e: Element, check: bool = True) -> DenseState:
    mat, new_rails = _element_matrix(e, s.rails, s.cap, check)
    return DenseState(new_rails, s.cap, mat @ s.amplitudes)


def _remap(s: DenseState, new_rails, new_cap, rows_old, rows_new, factors=None) -> DenseState:
    out = np.zeros(basis_size(len(new_rails), new_cap), dtype=complex)
    idx = _index(len(new_rails), new_cap).find(rows_new)
    vals = s.amplitudes[rows_old]
    if factors is not None:
        vals = vals * factors
    np.add.at(out, idx, vals)
    return DenseState(tuple(new_rails), new_cap, out)


def dense_postselect(s: DenseState, pattern: DetectionPattern) -> DenseState:
    rails = list(s.rails)
    measured = pattern.rails()
    missing = [r for r in measured if r not in rails]
    if missing:
        raise UnknownRail(f"detection on rails not in dense rail set: {missing}")
    mask = np.ones(len(s.basis), dtype=bool)
    removed = 0
    for target, n in pattern.constraints:
        if isinstance(target, str):
            counts = s.mode_counts(target)
        else:
            counts = s.basis[:, rails.index(target)]
        mask &= counts == n
        removed += n
    keep_cols = [i for i, r in enumerate(rails) if r not in measured]
    meas_cols = [i for i, r in enumerate(rails) if r in measured]
    new_rails = [rails[i] for i in keep_cols]
    new_cap = max(s.cap - removed, 0)
    sel = np.nonzero(mask)[0]
    if len(sel) == 0:
        return DenseState.zeros(new_rails, new_cap)
    # one remainder vector per distinct occupation of the measured rails
    patterns, which = np.unique(s.basis[sel][:, meas_cols], axis=0, return_inverse=True)
    which = np.asarray(which).reshape(-1)
    vecs = [_remap(s, new_rails, new_cap, sel[which == k], s.basis[sel[which == k]][:, keep_cols])
            .amplitudes for k in range(len(patterns))]
    weights = np.array([np.vdot(v, v).real for v in vecs])
    live = [v for v, w in zip(vecs, weights) if w > 1e-28]
    if len(live) <= 1:
        return DenseState(tuple(new_rails), new_cap, live[0] if live else vecs[0])
    ref = vecs[int(np.argmax(weights))]
    ref_w = np.vdot(ref, ref).real
    for v in live:
        if abs(np.vdot(ref, v)) ** 2 < (1 - 1e-10) * ref_w * np.vdot(v, v).real:
            raise MixedOutcome("measured-rail sub-patterns herald different remainders")
    return DenseState(tuple(new_rails), new_cap, ref * np.sqrt(weights.sum() / ref_w))


def dense_declare(s: DenseState, modes) -> DenseState:
    new = [r for m in modes for r in mode_rails(m)]
    if set(new) & set(s.rails):
        raise RailSetMismatch(f"modes already present: {modes}")
    rails = tuple(sorted(set(s.rails) | set(new)))
    old_cols = [rails.index(r) for r in s.rails]
    rows = np.zeros((len(s.basis), len(rails)), dtype=np.int64)
    rows[:, old_cols] = s.basis
    return _remap(s, rails, s.cap, np.arange(len(s.basis)), rows)


def dense_source(s: DenseState, mode: str, pol: str, n: int = 1) -> DenseState:
    target = Rail(str(mode), pol)
    if target not in s.rails:
        s = dense_declare(s, [mode])
    col = s.rails.index(target)
    live = np.nonzero(np.abs(s.amplitudes) > 0)[0]
    if np.any(s.basis[live, col] > 0):
        raise SourceOccupied(f"rail {target} already holds photons")
    rows = s.basis[live].copy()
    rows[:, col] += n
    return _remap(s, s.rails, s.cap + n, live, rows)


def dense_pair(s: DenseState, m1: str, m2: str, alpha: complex, beta: complex) -> DenseState:
    s = dense_declare(s, [m1, m2])
    rails = list(s.rails)
    live = np.nonzero(np.abs(s.amplitudes) > 0)[0]
    rows_h = s.basis[live].copy()
    rows_v = s.basis[live].copy()
    for m in (m1, m2):
        rows_h[:, rails.index(Rail(str(m), "H"))] += 1
        rows_v[:, rails.index(Rail(str(m), "V"))] += 1
    rows_old = np.concatenate([live, live])
    rows_new = np.concatenate([rows_h, rows_v])
    factors = np.concatenate([np.full(len(live), complex(alpha)), np.full(len(live), complex(beta))])
    return _remap(s, s.rails, s.cap + 2, rows_old, rows_new, factors)


def dense_measure_diag(s: DenseState, mode: str, labels=("+45", "-45")):
    live = np.abs(s.amplitudes) > 0
    if np.any(s.mode_counts(str(mode))[live] != 1):
        raise NonSinglePhotonMode(f"mode {mode} does not hold exactly one photon")
    rotated = dense_apply(s, make_waveplate(mode, 45.0))
    h, v = mode_rails(mode)
    return [
        (labels[0], dense_postselect(rotated, DetectionPattern.of((h, 1), (v, 0)))),
        (labels[1], dense_postselect(rotated, DetectionPattern.of((h, 0), (v, 1)))),
    ]


def dense_run(circuit: Circuit, state: PureState | DenseState | None = None,
              cap: int | None = None) -> list[tuple[tuple[str, ...], DenseState]]:
    """Run a circuit on the dense engine; returns ``(record, state)`` per outcome."""
    if state is None:
        state = PureState.vacuum()
    if isinstance(state, PureState):
        state = DenseState.from_pure(state, cap)
    branches = [((), state)]
    for st in circuit.steps:
        nxt = []
        for rec, d in branches:
            if isinstance(st, Apply):
                nxt.append((rec, dense_apply(d, st.element)))
            elif isinstance(st, PostSelect):
                nxt.append((rec, dense_postselect(d, st.pattern)))
            elif isinstance(st, Source):
                nxt.append((rec, dense_source(d, st.mode, st.pol, st.n)))
            elif isinstance(st, Pair):
                nxt.append((rec, dense_pair(d, st.m1, st.m2, st.alpha, st.beta)))
            elif isinstance(st, Declare):
                nxt.append((rec, dense_declare(d, st.modes)))
            elif isinstance(st, MeasureDiag):
                for label, sub in dense_measure_diag(d, st.mode, st.labels):
                    if sub.norm_sq() > 1e-28:
                        nxt.append((rec + (label,), sub))
            else:
                raise TypeError(f"unsupported step {st!r}")
        branches = nxt
    return branches


def compare(sparse: PureState, dense: DenseState) -> float:
    """Max amplitude difference after removing the best global phase."""
    if tuple(sorted(sparse.registry)) != dense.rails:
        raise RailSetMismatch(
            f"sparse rails {sorted(sparse.registry)} differ from dense rails {list(dense.rails)}"
        )
    try:
        vec = DenseState.from_pure(sparse, dense.cap).amplitudes
    except BasisOverflow as exc:
        raise RailSetMismatch(str(exc)) from exc
    overlap = np.vdot(vec, dense.amplitudes)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(vec * phase - dense.amplitudes), initial=0.0))


def density_matrix(branches) -> np.ndarray:
    """``sum_i w_i |psi_i><psi_i|`` for ``(weight, DenseState)`` pairs on one basis."""
    branches = list(branches)
    rails, cap = branches[0][1].rails, branches[0][1].cap
    dim = basis_size(len(rails), cap)
    rho = np.zeros((dim, dim), dtype=complex)
    for w, d in branches:
        if d.rails != rails or d.cap != cap:
            raise RailSetMismatch("density matrix branches live on different bases")
        rho += w * np.outer(d.amplitudes, d.amplitudes.conj())
    return rho
