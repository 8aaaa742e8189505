"""Fock basis over polarization rails and sparse pure-state algebra.

A *rail* is one bosonic mode: a spatial path plus a polarization.  Basis
states store only non-zero occupations, sorted by rail, so two basis
states are equal exactly when their canonical tuples are equal.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple

from .errors import (
    OverlappingRegistries,
    PhotonCapExceeded,
    RegistryMismatch,
    ZeroState,
)

POLARIZATIONS = ("H", "V")
PRUNE_TOL = 1e-14
ZERO_NORM_SQ = 1e-28
DEFAULT_PHOTON_CAP = 16
CAP_ENV_VAR = "PHOTONLOOM_PHOTON_CAP"


def photon_cap() -> int:
    """Current photon cap; ``PHOTONLOOM_PHOTON_CAP`` overrides the default."""
    raw = os.environ.get(CAP_ENV_VAR)
    if raw is None or raw.strip() == "":
        return DEFAULT_PHOTON_CAP
    cap = int(raw)
    if cap < 0:
        raise ValueError(f"{CAP_ENV_VAR} must be non-negative, got {cap}")
    return cap


class Rail(NamedTuple):
    spatial: str
    pol: str

    def __str__(self):
        return f"{self.pol}_{self.spatial}"


def rail(spatial, pol: str) -> Rail:
    if pol not in POLARIZATIONS:
        raise ValueError(f"polarization must be H or V, got {pol!r}")
    return Rail(str(spatial), pol)


def mode_rails(spatial) -> tuple[Rail, Rail]:
    """Both polarization rails of one spatial mode, H first."""
    return Rail(str(spatial), "H"), Rail(str(spatial), "V")


@dataclass(frozen=True)
class FockBasisState:
    """Canonical sparse occupation: sorted ``(rail, count)`` pairs, counts > 0."""

    items: tuple[tuple[Rail, int], ...] = ()

    @classmethod
    def from_mapping(cls, occupations: Mapping[Rail, int] | Iterable[tuple[Rail, int]],
                     cap: int | None = None) -> "FockBasisState":
        pairs = occupations.items() if isinstance(occupations, Mapping) else occupations
        merged: dict[Rail, int] = {}
        for r, n in pairs:
            n = int(n)
            if n < 0:
                raise ValueError(f"negative occupation {n} on {r}")
            merged[Rail(*r)] = merged.get(Rail(*r), 0) + n
        items = tuple(sorted((r, n) for r, n in merged.items() if n))
        state = cls(items)
        limit = photon_cap() if cap is None else cap
        if state.total > limit:
            raise PhotonCapExceeded(f"{state.total} photons exceeds cap {limit}")
        return state

    @property
    def total(self) -> int:
        return sum(n for _, n in self.items)

    @property
    def rails(self) -> frozenset[Rail]:
        return frozenset(r for r, _ in self.items)

    def count(self, r: Rail) -> int:
        for q, n in self.items:
            if q == r:
                return n
        return 0

    def mode_count(self, spatial: str) -> int:
        return sum(n for q, n in self.items if q.spatial == spatial)

    def as_dict(self) -> dict[Rail, int]:
        return dict(self.items)

    def without(self, rails: Iterable[Rail]) -> "FockBasisState":
        drop = set(rails)
        return FockBasisState(tuple((r, n) for r, n in self.items if r not in drop))

    def canonical(self) -> "FockBasisState":
        return FockBasisState.from_mapping(self.items, cap=self.total)

    def label(self) -> str:
        if not self.items:
            return "|vac>"
        parts = [(f"{n}" if n > 1 else "") + f"{r.pol}_{r.spatial}" for r, n in self.items]
        return "|" + ",".join(parts) + ">"

    def __str__(self):
        return self.label()


VACUUM = FockBasisState()


class PureState:
    """Sparse complex amplitudes over ``FockBasisState`` plus a rail registry.

    States are immutable.  They may be unnormalized: post-selection leaves
    the acceptance probability in the squared norm.
    """

    __slots__ = ("_amps", "_registry")

    def __init__(self, amplitudes: Mapping[FockBasisState, complex] | None = None,
                 registry: Iterable[Rail] = ()):
        reg = frozenset(Rail(*r) for r in registry)
        amps: dict[FockBasisState, complex] = {}
        for basis, amp in (amplitudes or {}).items():
            amp = complex(amp)
            if abs(amp) < PRUNE_TOL:
                continue
            if not basis.rails <= reg:
                missing = sorted(basis.rails - reg)
                raise RegistryMismatch(f"basis rails {missing} not in registry")
            amps[basis] = amp
        self._amps = amps
        self._registry = reg

    @classmethod
    def vacuum(cls, registry: Iterable[Rail] = ()) -> "PureState":
        return cls({VACUUM: 1.0}, registry)

    @classmethod
    def basis(cls, occupations: Mapping[Rail, int], registry: Iterable[Rail] | None = None,
              amplitude: complex = 1.0) -> "PureState":
        b = FockBasisState.from_mapping(occupations)
        reg = b.rails if registry is None else registry
        return cls({b: amplitude}, reg)

    @property
    def amplitudes(self) -> Mapping[FockBasisState, complex]:
        return MappingProxyType(self._amps)

    @property
    def registry(self) -> frozenset[Rail]:
        return self._registry

    @property
    def modes(self) -> frozenset[str]:
        return frozenset(r.spatial for r in self._registry)

    def items(self):
        return self._amps.items()

    def __len__(self):
        return len(self._amps)

    def amplitude(self, occupations: Mapping[Rail, int] | FockBasisState) -> complex:
        if not isinstance(occupations, FockBasisState):
            occupations = FockBasisState.from_mapping(occupations)
        return self._amps.get(occupations, 0j)

    def norm_sq(self) -> float:
        return math.fsum(abs(a) ** 2 for a in self._amps.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def photon_numbers(self) -> set[int]:
        return {b.total for b in self._amps}

    def scaled(self, factor: complex) -> "PureState":
        return PureState({b: a * factor for b, a in self._amps.items()}, self._registry)

    def with_registry(self, registry: Iterable[Rail]) -> "PureState":
        return PureState(self._amps, registry)

    def drop_empty_rails(self) -> "PureState":
        """Remove registry rails that are vacuum in every term (exact)."""
        used = frozenset().union(*(b.rails for b in self._amps)) if self._amps else frozenset()
        return PureState(self._amps, used)

    def canonical(self) -> "PureState":
        return PureState({b.canonical(): a for b, a in self._amps.items()}, self._registry)

    def sorted_terms(self) -> list[tuple[FockBasisState, complex]]:
        return sorted(self._amps.items(), key=lambda kv: kv[0].items)

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return self._registry == other._registry and self._amps == other._amps

    def __hash__(self):
        return hash((self._registry, frozenset(self._amps.items())))

    def __add__(self, other: "PureState") -> "PureState":
        if self._registry != other._registry:
            raise RegistryMismatch("cannot add states over different registries")
        amps = dict(self._amps)
        for b, a in other._amps.items():
            amps[b] = amps.get(b, 0j) + a
        return PureState(amps, self._registry)

    def __repr__(self):
        terms = " + ".join(f"({a.real:.6g}{a.imag:+.6g}j){b.label()}" for b, a in self.sorted_terms())
        return f"PureState({terms or '0'})"


def tensor(a: PureState, b: PureState) -> PureState:
    overlap = a.registry & b.registry
    if overlap:
        raise OverlappingRegistries(f"rails in both states: {sorted(overlap)}")
    amps = {}
    for ba, xa in a.items():
        for bb, xb in b.items():
            amps[FockBasisState(tuple(sorted(ba.items + bb.items)))] = xa * xb
    return PureState(amps, a.registry | b.registry)


def inner_product(a: PureState, b: PureState) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.registry != b.registry:
        raise RegistryMismatch("inner product needs identical registries")
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    bb = b.amplitudes
    aa = a.amplitudes
    for basis, _ in small.items():
        if basis in large.amplitudes:
            total += aa[basis].conjugate() * bb[basis]
    return total


def normalize(s: PureState) -> tuple[PureState, float]:
    nsq = s.norm_sq()
    if nsq <= ZERO_NORM_SQ:
        raise ZeroState(f"squared norm {nsq:.3g} is too small to normalize")
    n = math.sqrt(nsq)
    return s.scaled(1.0 / n), n


def fidelity_pure(a: PureState, b: PureState) -> float:
    return abs(inner_product(a, b)) ** 2


def superpose(terms: Iterable[tuple[complex, Mapping[Rail, int]]],
              registry: Iterable[Rail]) -> PureState:
    """Build ``sum_k c_k |n_k>`` from ``(c_k, occupation)`` pairs."""
    amps: dict[FockBasisState, complex] = {}
    for c, occ in terms:
        b = FockBasisState.from_mapping(occ)
        amps[b] = amps.get(b, 0j) + c
    return PureState(amps, registry)


def polarization_pair(m1: str, m2: str, coeffs: Mapping[str, complex]) -> PureState:
    """Two-photon state ``sum c_{pq} |p_{m1} q_{m2}>`` keyed by ``"HV"``-style strings."""
    reg = (*mode_rails(m1), *mode_rails(m2))
    return superpose(
        ((c, {Rail(m1, k[0]): 1, Rail(m2, k[1]): 1}) for k, c in coeffs.items()), reg
    )


def phi_plus(m1="a", m2="b") -> PureState:
    r = 1 / math.sqrt(2)
    return polarization_pair(m1, m2, {"HH": r, "VV": r})


def phi_minus(m1="a", m2="b") -> PureState:
    r = 1 / math.sqrt(2)
    return polarization_pair(m1, m2, {"HH": r, "VV": -r})


def psi_plus(m1="a", m2="b") -> PureState:
    r = 1 / math.sqrt(2)
    return polarization_pair(m1, m2, {"HV": r, "VH": r})


def psi_minus(m1="a", m2="b") -> PureState:
    r = 1 / math.sqrt(2)
    return polarization_pair(m1, m2, {"HV": r, "VH": -r})


def vv(m1="a", m2="b") -> PureState:
    return polarization_pair(m1, m2, {"VV": 1.0})
