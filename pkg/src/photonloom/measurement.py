"""Photon-number projection, post-selection and diagonal-basis measurement.

Detectors are ideal and photon-number resolving.  Measured rails are
removed from the registry: the detector absorbs the photons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

from .errors import MixedOutcome, NonSinglePhotonMode, UnknownRail
from .fock import (
    ZERO_NORM_SQ,
    FockBasisState,
    PureState,
    Rail,
    inner_product,
    mode_rails,
    normalize,
)
from .optics import apply_element, make_waveplate

Target = Union[Rail, str]

# sub-pattern remainders this close to parallel count as one pure state
PARALLEL_TOL = 1e-10


@dataclass(frozen=True)
class DetectionPattern:
    """Photon-count constraints.

    A ``Rail`` target constrains one rail; a ``str`` target constrains the
    total over the H and V rails of that spatial mode.
    """

    constraints: tuple[tuple[Target, int], ...]

    def __post_init__(self):
        targets = [t for t, _ in self.constraints]
        if len(set(targets)) != len(targets):
            raise ValueError(f"detection targets must be distinct: {targets}")
        for t, n in self.constraints:
            if int(n) != n or n < 0:
                raise ValueError(f"photon count must be a non-negative integer, got {n}")

    @classmethod
    def modes(cls, **counts: int) -> "DetectionPattern":
        return cls(tuple((m, n) for m, n in counts.items()))

    @classmethod
    def of(cls, *constraints: tuple[Target, int]) -> "DetectionPattern":
        return cls(tuple(constraints))

    def rails(self) -> set[Rail]:
        out = set()
        for t, _ in self.constraints:
            out.update(mode_rails(t) if isinstance(t, str) else (t,))
        return out

    def accepts(self, basis: FockBasisState) -> bool:
        for t, n in self.constraints:
            got = basis.mode_count(t) if isinstance(t, str) else basis.count(t)
            if got != n:
                return False
        return True


@dataclass(frozen=True)
class MeasurementOutcome:
    label: object
    probability: float
    conditioned: PureState | None  # None when the outcome has zero probability


def _check_targets(s: PureState, pattern: DetectionPattern):
    missing = sorted(r for r in pattern.rails() if r not in s.registry)
    if missing:
        raise UnknownRail(f"detection on rails not in registry: {missing}")


def postselect(s: PureState, pattern: DetectionPattern, remove: bool = True) -> PureState:
    """Keep the terms matching ``pattern``; the result is left unnormalized.

    With ``remove`` the measured rails leave the registry (the default,
    matching absorption by a detector).  If accepted terms differ on the
    measured rails (a polarization-blind count), the remainder is pure only
    when every sub-pattern leaves the same state up to scale; that state is
    returned carrying the summed probability.  Otherwise the conditional
    state is mixed and :class:`MixedOutcome` is raised.
    """
    _check_targets(s, pattern)
    measured = pattern.rails()
    if not remove:
        return PureState({b: a for b, a in s.items() if pattern.accepts(b)}, s.registry)
    order = sorted(measured)
    registry = s.registry - measured
    groups: dict[tuple[int, ...], dict] = {}
    for basis, amp in s.items():
        if pattern.accepts(basis):
            key = tuple(basis.count(r) for r in order)
            groups.setdefault(key, {})[basis.without(measured)] = amp
    parts = [PureState(g, registry) for _, g in sorted(groups.items())]
    parts = [p for p in parts if p.norm_sq() > ZERO_NORM_SQ] or parts[:1]
    if len(parts) <= 1:
        return parts[0] if parts else PureState({}, registry)
    ref = max(parts, key=lambda p: p.norm_sq())
    for p in parts:
        if abs(inner_product(ref, p)) ** 2 < (1 - PARALLEL_TOL) * ref.norm_sq() * p.norm_sq():
            raise MixedOutcome(
                f"detection on {order} leaves a mixed state: sub-patterns {sorted(groups)} "
                "herald different states"
            )
    total = math.fsum(p.norm_sq() for p in parts)
    return ref.scaled(math.sqrt(total / ref.norm_sq()))


def _number_branches(s: PureState, spatial: str) -> dict[tuple[int, int], PureState]:
    spatial = str(spatial)
    h, v = mode_rails(spatial)
    if h not in s.registry or v not in s.registry:
        raise UnknownRail(f"mode {spatial} not in registry")
    groups: dict[tuple[int, int], dict] = {}
    for basis, amp in s.items():
        key = (basis.count(h), basis.count(v))
        groups.setdefault(key, {})[basis.without((h, v))] = amp
    reg = s.registry - {h, v}
    return {k: PureState(g, reg) for k, g in sorted(groups.items())}


def measure_number_complete(s: PureState, spatial: str) -> list[MeasurementOutcome]:
    """Resolve ``(n_H, n_V)`` of one spatial mode; one outcome per result seen."""
    outcomes = []
    for key, branch in _number_branches(s, spatial).items():
        p = branch.norm_sq()
        cond = normalize(branch)[0] if p > ZERO_NORM_SQ else None
        outcomes.append(MeasurementOutcome(key, p, cond))
    return outcomes


def diagonal_branches(s: PureState, spatial: str,
                      labels: tuple[str, str] = ("+45", "-45")) -> list[tuple[str, PureState]]:
    """Unnormalized post-measurement branches of a 45-degree polarization analysis.

    A 45-degree wave plate followed by a PBS and one detector per port is the
    same as resolving the H/V rails of the rotated mode, which is what this
    computes.
    """
    spatial = str(spatial)
    h, v = mode_rails(spatial)
    if h not in s.registry or v not in s.registry:
        raise UnknownRail(f"mode {spatial} not in registry")
    for basis in s.amplitudes:
        if basis.mode_count(spatial) != 1:
            raise NonSinglePhotonMode(
                f"mode {spatial} holds {basis.mode_count(spatial)} photons in {basis.label()}"
            )
    rotated = apply_element(s, make_waveplate(spatial, 45.0))
    branches = _number_branches(rotated, spatial)
    reg = s.registry - {h, v}
    return [
        (labels[0], branches.get((1, 0), PureState({}, reg))),
        (labels[1], branches.get((0, 1), PureState({}, reg))),
    ]


def measure_diagonal(s: PureState, spatial: str,
                     labels: tuple[str, str] = ("+45", "-45")) -> list[MeasurementOutcome]:
    outcomes = []
    for label, branch in diagonal_branches(s, spatial, labels):
        p = branch.norm_sq()
        cond = normalize(branch)[0] if p > ZERO_NORM_SQ else None
        outcomes.append(MeasurementOutcome(label, p, cond))
    return outcomes


def total_probability(outcomes: Iterable[MeasurementOutcome]) -> float:
    return sum(o.probability for o in outcomes)
