"""Randomized sparse-vs-dense equivalence checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import Apply, Circuit, PostSelect, run_circuit
from .fock import FockBasisState, PureState, Rail, mode_rails
from .measurement import DetectionPattern
from .optics import make_beamsplitter, make_pbs, make_relabel, make_waveplate
from .oracle import compare, dense_run

AGREEMENT_TOL = 1e-10


def random_state(rng: np.random.Generator, modes, max_photons: int = 4, max_terms: int = 6) -> PureState:
    """Random normalized superposition of a few basis states over ``modes``."""
    rails = [r for m in modes for r in mode_rails(m)]
    amps = {}
    for _ in range(int(rng.integers(1, max_terms + 1))):
        n = int(rng.integers(0, max_photons + 1))
        occ = rng.multinomial(n, np.ones(len(rails)) / len(rails))
        b = FockBasisState.from_mapping({r: int(k) for r, k in zip(rails, occ)})
        amps[b] = amps.get(b, 0j) + complex(rng.normal(), rng.normal())
    s = PureState(amps, rails)
    return s.scaled(1 / s.norm())


def random_element(rng: np.random.Generator, live: list[str], fresh_name):
    kind = rng.choice(["pbs", "hwp", "bs", "relabel"] if len(live) >= 2 else ["hwp", "relabel"])
    if kind == "hwp":
        return make_waveplate(rng.choice(live), float(rng.uniform(-180, 180)))
    if kind == "relabel":
        old = str(rng.choice(live))
        new = fresh_name()
        live[live.index(old)] = new
        return make_relabel(old, new)
    a, b = (str(x) for x in rng.choice(live, size=2, replace=False))
    outs = (a, b) if rng.random() < 0.5 else (b, a)
    if kind == "pbs":
        return make_pbs(a, b, *outs)
    return make_beamsplitter(a, b, *outs, float(rng.uniform(0, 1)))


def random_circuit(rng: np.random.Generator, modes=("m0", "m1", "m2"), max_elements: int = 8,
                   max_photons: int = 4, p_detect: float = 0.3) -> tuple[PureState, Circuit]:
    """Random state on <= 6 rails and a random circuit of <= 8 elements.

    Polarization-resolved (or empty-mode) post-selections are interleaved,
    so every detection leaves a pure state; a single-rail detection may
    close the circuit.
    """
    live = list(modes)
    state = random_state(rng, live, max_photons)
    counter = iter(range(10_000))
    steps = []
    for _ in range(int(rng.integers(1, max_elements + 1))):
        if not live:
            break
        steps.append(Apply(random_element(rng, live, lambda: f"r{next(counter)}")))
        if len(live) > 1 and rng.random() < p_detect:
            m = str(rng.choice(live))
            live.remove(m)
            if rng.random() < 0.5:
                pattern = DetectionPattern.of((m, 0))
            else:
                h, v = mode_rails(m)
                pattern = DetectionPattern.of((h, int(rng.integers(0, 3))), (v, int(rng.integers(0, 2))))
            steps.append(PostSelect(pattern))
    if live and rng.random() < p_detect:
        m = str(rng.choice(live))
        steps.append(PostSelect(DetectionPattern.of((Rail(m, str(rng.choice(["H", "V"]))),
                                                     int(rng.integers(0, 2))))))
    return state, Circuit(tuple(steps), "random")


@dataclass(frozen=True)
class EquivalenceResult:
    index: int
    max_diff: float
    sparse_norm_sq: float
    dense_norm_sq: float

    @property
    def ok(self) -> bool:
        return self.max_diff <= AGREEMENT_TOL and math.isclose(
            self.sparse_norm_sq, self.dense_norm_sq, abs_tol=AGREEMENT_TOL)


def check_circuit(state: PureState, circuit: Circuit) -> float:
    """Worst phase-aligned amplitude difference over all outcome branches."""
    sparse = run_circuit(circuit, state)
    dense = dense_run(circuit, state)
    if [s.record for s in sparse] != [rec for rec, _ in dense]:
        return math.inf
    return max((compare(s.state, d) for s, (_, d) in zip(sparse, dense)), default=0.0)


def run_equivalence_suite(n: int = 200, seed: int = 0) -> list[EquivalenceResult]:
    rng = np.random.default_rng(seed)
    results = []
    for i in range(n):
        state, circuit = random_circuit(rng)
        (s,) = run_circuit(circuit, state)
        (_, d), = dense_run(circuit, state)
        results.append(EquivalenceResult(i, compare(s.state, d), s.state.norm_sq(), d.norm_sq()))
    return results
