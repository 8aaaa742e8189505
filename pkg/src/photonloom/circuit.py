"""Circuits: an ordered list of element, source and detection steps."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .errors import PhotonCapExceeded, RailCollision, SourceOccupied
from .fock import (
    ZERO_NORM_SQ,
    FockBasisState,
    PureState,
    Rail,
    mode_rails,
    photon_cap,
    polarization_pair,
    tensor,
)
from .measurement import DetectionPattern, diagonal_branches, postselect
from .optics import Element, apply_element


@dataclass(frozen=True)
class Declare:
    """Introduce vacuum spatial modes."""

    modes: tuple[str, ...]


@dataclass(frozen=True)
class Source:
    """Insert ``n`` photons of polarization ``pol`` into an empty rail."""

    mode: str
    pol: str
    n: int = 1


@dataclass(frozen=True)
class Pair:
    """Insert ``alpha|H H> + beta|V V>`` on two fresh modes."""

    m1: str
    m2: str
    alpha: complex
    beta: complex


@dataclass(frozen=True)
class Apply:
    element: Element


@dataclass(frozen=True)
class PostSelect:
    pattern: DetectionPattern


@dataclass(frozen=True)
class MeasureDiag:
    """45-degree polarization analysis; splits the run by outcome."""

    mode: str
    labels: tuple[str, str] = ("+45", "-45")


Step = Union[Declare, Source, Pair, Apply, PostSelect, MeasureDiag]


@dataclass(frozen=True)
class Circuit:
    steps: tuple[Step, ...] = ()
    name: str = field(default="", compare=False)

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.steps + other.steps, self.name or other.name)

    def __len__(self):
        return len(self.steps)

    def elements(self) -> list[Element]:
        return [st.element for st in self.steps if isinstance(st, Apply)]

    def inventory(self) -> dict[str, int]:
        """Count of each element kind and of the other step types."""
        counts: dict[str, int] = {}
        for st in self.steps:
            key = st.element.kind if isinstance(st, Apply) else type(st).__name__
            counts[key] = counts.get(key, 0) + 1
        return counts


@dataclass(frozen=True)
class Branch:
    """One classical outcome record and its unnormalized conditional state."""

    record: tuple[str, ...]
    state: PureState

    @property
    def probability(self) -> float:
        return self.state.norm_sq()


def declare(s: PureState, modes) -> PureState:
    new = set()
    for m in modes:
        new.update(mode_rails(m))
    clash = new & s.registry
    if clash:
        raise RailCollision(f"modes already declared: {sorted({r.spatial for r in clash})}")
    return s.with_registry(s.registry | new)


def add_source(s: PureState, mode: str, pol: str, n: int = 1, cap: int | None = None) -> PureState:
    r = Rail(str(mode), pol)
    if r not in s.registry:
        s = declare(s, [mode])
    limit = photon_cap() if cap is None else cap
    amps = {}
    for basis, amp in s.items():
        if basis.count(r):
            raise SourceOccupied(f"rail {r} already holds photons")
        if basis.total + n > limit:
            raise PhotonCapExceeded(f"source pushes {basis.total + n} photons past cap {limit}")
        amps[FockBasisState(tuple(sorted(basis.items + ((r, n),)))) if n else basis] = amp
    return PureState(amps, s.registry)


def add_pair(s: PureState, m1: str, m2: str, alpha: complex, beta: complex) -> PureState:
    return tensor(s, polarization_pair(m1, m2, {"HH": alpha, "VV": beta}))


def _step(state: PureState, st: Step) -> PureState:
    if isinstance(st, Apply):
        return apply_element(state, st.element)
    if isinstance(st, PostSelect):
        return postselect(state, st.pattern)
    if isinstance(st, Source):
        return add_source(state, st.mode, st.pol, st.n)
    if isinstance(st, Pair):
        return add_pair(state, st.m1, st.m2, st.alpha, st.beta)
    if isinstance(st, Declare):
        return declare(state, st.modes)
    raise TypeError(f"unsupported step {st!r}")


def run_circuit(circuit: Circuit, state: PureState | None = None) -> list[Branch]:
    """Run a circuit on a pure state with the sparse engine.

    Without ``MeasureDiag`` steps the result is a single branch with an
    empty record.  Each diagonal measurement splits every live branch in
    two; zero-probability outcomes are dropped.
    """
    branches = [Branch((), PureState.vacuum() if state is None else state)]
    for st in circuit.steps:
        if isinstance(st, MeasureDiag):
            split = []
            for b in branches:
                for label, sub in diagonal_branches(b.state, st.mode, st.labels):
                    if sub.norm_sq() > ZERO_NORM_SQ:
                        split.append(Branch(b.record + (label,), sub))
            branches = split
        else:
            branches = [Branch(b.record, _step(b.state, st)) for b in branches]
    return branches
