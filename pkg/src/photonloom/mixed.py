"""Weighted-ensemble mixed states.

The protocols only ever produce mixtures that are diagonal in a known set
of pure branches, so a mixed state is stored as ``(weight, state)``
branches rather than as a density matrix.  Unitaries and projective
post-selection act branch by branch and never create coherences between
branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .circuit import Circuit, run_circuit
from .errors import NotNormalized, ZeroEnsemble
from .fock import ZERO_NORM_SQ, PureState, fidelity_pure, normalize, tensor

MATCH_TOL = 1e-9


@dataclass(frozen=True)
class EnsembleBranch:
    weight: float
    state: PureState
    record: tuple[str, ...] = ()


@dataclass(frozen=True)
class MixedState:
    branches: tuple[EnsembleBranch, ...] = ()

    def __post_init__(self):
        for b in self.branches:
            if b.weight < 0:
                raise ValueError(f"negative branch weight {b.weight}")
            if abs(b.state.norm_sq() - 1.0) > 1e-9:
                raise NotNormalized(f"branch state has squared norm {b.state.norm_sq():.12g}")

    @classmethod
    def of(cls, *pairs: tuple[float, PureState]) -> "MixedState":
        return cls(tuple(EnsembleBranch(float(w), s) for w, s in pairs))

    @classmethod
    def pure(cls, state: PureState) -> "MixedState":
        return cls.of((1.0, state))

    @property
    def total_weight(self) -> float:
        return math.fsum(b.weight for b in self.branches)

    def renormalized(self) -> "MixedState":
        total = self.total_weight
        if total <= ZERO_NORM_SQ:
            raise ZeroEnsemble("ensemble has no weight")
        return MixedState(tuple(EnsembleBranch(b.weight / total, b.state, b.record)
                                for b in self.branches))

    def records(self) -> list[tuple[str, ...]]:
        seen = []
        for b in self.branches:
            if b.record not in seen:
                seen.append(b.record)
        return seen

    def condition(self, record: tuple[str, ...]) -> "MixedState":
        """Sub-ensemble with the given outcome record (weights left as is)."""
        return MixedState(tuple(b for b in self.branches if b.record == tuple(record)))

    def merged(self, other: "MixedState", weight: float = 1.0, other_weight: float = 1.0) -> "MixedState":
        return MixedState(
            tuple(EnsembleBranch(b.weight * weight, b.state, b.record) for b in self.branches)
            + tuple(EnsembleBranch(b.weight * other_weight, b.state, b.record) for b in other.branches)
        )

    def map_states(self, fn) -> "MixedState":
        return MixedState(tuple(EnsembleBranch(b.weight, fn(b), b.record) for b in self.branches))

    def product(self, other: "MixedState") -> "MixedState":
        return MixedState(tuple(
            EnsembleBranch(a.weight * b.weight, tensor(a.state, b.state), a.record + b.record)
            for a in self.branches for b in other.branches
        ))


@dataclass(frozen=True)
class FractionReport:
    gamma: float
    target: PureState = field(repr=False)
    residual_weight: float


def apply_circuit_mixed(m: MixedState, c: Circuit) -> MixedState:
    """Push every branch through ``c``.

    Post-selection multiplies a branch's weight by its acceptance
    probability; each diagonal measurement outcome becomes its own branch
    with the outcome appended to the record.  Branches with zero
    acceptance are dropped.
    """
    out = []
    for b in m.branches:
        for sub in run_circuit(c, b.state):
            p = sub.state.norm_sq()
            if p <= ZERO_NORM_SQ:
                continue
            state, _ = normalize(sub.state)
            out.append(EnsembleBranch(b.weight * p, state, b.record + sub.record))
    return MixedState(tuple(out))


def fraction_of(m: MixedState, target: PureState) -> FractionReport:
    """Weight of the branches that coincide with ``target`` (fidelity >= 1 - 1e-9)."""
    m = m.renormalized()
    gamma = math.fsum(b.weight for b in m.branches
                      if fidelity_pure(b.state, target) >= 1.0 - MATCH_TOL)
    gamma = min(gamma, 1.0)
    return FractionReport(gamma, target, 1.0 - gamma)


def fidelity_mixed(m: MixedState, target: PureState) -> float:
    m = m.renormalized()
    return math.fsum(b.weight * fidelity_pure(b.state, target) for b in m.branches)
