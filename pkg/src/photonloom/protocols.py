"""Drivers for the concentration and purification protocols.

Concentration: two copies of ``alpha|HH> + beta|VV>`` shared by Alice
(photons 1, 3) and Bob (photons 2, 4) are turned into a four-photon GHZ
state on modes 10-13 by PBS routing, single-photon ancilla filters and
one attenuating beam splitter; a 45-degree analysis of modes 11 and 13
then leaves a Bell pair on modes 10 and 12.

Purification: two copies of ``gamma |Psi+><Psi+| + (1 - gamma)|VV><VV|``
are interfered mode by mode, filtered by eight ancilla beam splitters and
recombined; a 45-degree analysis of modes b and d leaves one pair on
modes a and c with fraction ``gamma^2 / (gamma^2 + (1 - gamma)^2)``.

Mode names follow the schematic numbering, with ``'`` for primed modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .circuit import (
    Apply,
    Circuit,
    Declare,
    MeasureDiag,
    PostSelect,
    Source,
    run_circuit,
)
from .errors import (
    GammaOutOfRange,
    NotConverging,
    NotNormalized,
    ProtocolMismatch,
    ShapeMismatch,
)
from .fock import (
    ZERO_NORM_SQ,
    PureState,
    Rail,
    mode_rails,
    normalize,
    phi_plus,
    polarization_pair,
    psi_plus,
    superpose,
    tensor,
    vv,
)
from .measurement import DetectionPattern
from .mixed import EnsembleBranch, MixedState, apply_circuit_mixed, fraction_of
from .optics import (
    apply_element,
    make_beamsplitter,
    make_pbs,
    make_relabel,
    make_waveplate,
)

GAMMA_TOL = 1e-10
GHZ_MODES = ("10", "11", "12", "13")
BELL_CORRECTED = {"D4D7", "D5D6"}
PURIFY_CORRECTED = {"D9D12", "D10D11"}
NOISE_MODELS = ("vv", "phi")


class _Builder:
    def __init__(self):
        self.steps = []

    def mode(self, *names):
        self.steps.append(Declare(tuple(names)))

    def source(self, mode, pol, n=1):
        self.steps.append(Source(mode, pol, n))

    def pbs(self, *modes):
        self.steps.append(Apply(make_pbs(*modes)))

    def hwp(self, mode, deg):
        self.steps.append(Apply(make_waveplate(mode, deg)))

    def bs(self, in1, in2, out1, out2, T):
        self.steps.append(Apply(make_beamsplitter(in1, in2, out1, out2, T)))

    def relabel(self, old, new):
        self.steps.append(Apply(make_relabel(old, new)))

    def detect(self, mode, n):
        self.steps.append(PostSelect(DetectionPattern.of((mode, n))))

    def detect_none(self, *modes):
        self.steps.append(PostSelect(DetectionPattern(tuple((m, 0) for m in modes))))

    def measure_diag(self, mode, labels):
        self.steps.append(MeasureDiag(mode, tuple(labels)))

    def ancilla_filter(self, mode, pol, aux):
        """50:50 beam splitter against one ancilla photon; keep 1 photon in the aux port.

        Two-photon interference removes the single-photon component of
        ``mode``; vacuum and two-photon components pass.
        """
        self.mode(aux)
        self.source(aux, pol, 1)
        self.bs(mode, aux, mode, aux, 0.5)
        self.detect(aux, 1)

    def attenuate(self, mode, T, aux):
        """Beam splitter to a vacuum port, accepted only if the port stays dark."""
        self.mode(aux)
        self.bs(mode, aux, mode, aux, T)
        self.detect(aux, 0)

    def build(self, name):
        return Circuit(tuple(self.steps), name)


# ----------------------------------------------------------------------------
# concentration


@dataclass(frozen=True)
class ConcentrationParams:
    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1.0) > 1e-10:
            raise NotNormalized(f"|alpha|^2 + |beta|^2 = {abs(a)**2 + abs(b)**2:.12g}, expected 1")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def from_angle(cls, theta: float, phase: float = 0.0) -> "ConcentrationParams":
        return cls(math.cos(theta), math.sin(theta) * complex(math.cos(phase), math.sin(phase)))


@dataclass(frozen=True)
class BellOutcome:
    label: str
    probability: float
    bell_state: PureState = field(repr=False)
    correction_applied: bool
    raw_state: PureState = field(repr=False)


@dataclass(frozen=True)
class ConcentrationResult:
    params: ConcentrationParams
    ghz_state: PureState | None = field(repr=False)
    success_probability: float
    claimed_probability: float
    bell_outcomes: tuple[BellOutcome, ...] = ()
    unnormalized_output: PureState | None = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        return self.ghz_state is None

    def probability_agrees(self, tol: float = 1e-12) -> bool:
        return abs(self.success_probability - self.claimed_probability) <= tol


def concentration_input(params: ConcentrationParams) -> PureState:
    """Two copies of ``alpha|HH> + beta|VV>`` on modes (1, 2) and (3, 4)."""
    coeffs = {"HH": params.alpha, "VV": params.beta}
    return tensor(polarization_pair("1", "2", coeffs), polarization_pair("3", "4", coeffs))


def build_concentration_circuit() -> Circuit:
    """The concentration optics, acting on the modes 1-4 input."""
    c = _Builder()
    c.pbs("1", "3", "1'", "3'")             # PBS1, Alice
    c.pbs("2", "4", "2'", "4'")             # PBS2, Bob
    c.hwp("1'", 45)
    c.mode("v1", "v4")
    c.pbs("1'", "v1", "5", "6")             # PBS3: 1'.H -> 5, 1'.V -> 6
    c.pbs("4'", "v4", "7", "8")             # PBS4: 4'.H -> 7, 4'.V -> 8
    c.ancilla_filter("5", "H", "x5")
    c.ancilla_filter("6", "V", "x6")
    c.attenuate("7", 0.25, "y7")
    c.pbs("5", "6", "5'", "j1")             # 5.H, 6.V -> 5'
    c.pbs("7", "8", "7'", "j2")             # 7.H, 8.V -> 7'
    c.hwp("5'", 45)
    c.relabel("5'", "9")
    c.pbs("3'", "9", "10", "11")
    c.pbs("7'", "2'", "12", "13")
    # the ancilla filters leave the two GHZ terms with opposite sign
    c.hwp("10", 0)
    c.detect_none("j1", "j2")
    return c.build("concentration")


def ghz_target() -> PureState:
    """``(|H10 V11 H12 V13> + |V10 H11 V12 H13>) / sqrt(2)``."""
    reg = [r for m in GHZ_MODES for r in mode_rails(m)]
    r2 = 1 / math.sqrt(2)
    t1 = {Rail("10", "H"): 1, Rail("11", "V"): 1, Rail("12", "H"): 1, Rail("13", "V"): 1}
    t2 = {Rail("10", "V"): 1, Rail("11", "H"): 1, Rail("12", "V"): 1, Rail("13", "H"): 1}
    return superpose([(r2, t1), (r2, t2)], reg)


def claimed_success_probability(params: ConcentrationParams) -> float:
    return abs(params.alpha * params.beta) ** 2 / 8


def run_concentration(params: ConcentrationParams, circuit: Circuit | None = None) -> ConcentrationResult:
    """Run the concentration circuit and the Bell projection.

    For ``alpha * beta == 0`` nothing is accepted: the result has
    ``success_probability == 0``, no GHZ state and no Bell outcomes.
    """
    circuit = build_concentration_circuit() if circuit is None else circuit
    (branch,) = run_circuit(circuit, concentration_input(params))
    p = branch.state.norm_sq()
    claimed = claimed_success_probability(params)
    if p <= ZERO_NORM_SQ:
        return ConcentrationResult(params, None, 0.0, claimed, (), branch.state)
    ghz, _ = normalize(branch.state)
    return ConcentrationResult(params, ghz, p, claimed, tuple(project_ghz_to_bell(ghz)), branch.state)


def phase_flip(s: PureState, mode: str) -> PureState:
    """Local ``V -> -V`` on one mode."""
    return apply_element(s, make_waveplate(mode, 0))


def _check_ghz_shape(ghz: PureState):
    if ghz.modes != set(GHZ_MODES):
        raise ShapeMismatch(f"expected modes {GHZ_MODES}, got {sorted(ghz.modes)}")
    for basis in ghz.amplitudes:
        if basis.total != 4 or any(basis.mode_count(m) != 1 for m in GHZ_MODES):
            raise ShapeMismatch(f"term {basis.label()} is not one photon per mode")


def bell_projection_circuit() -> Circuit:
    c = _Builder()
    c.measure_diag("11", ("D4", "D5"))
    c.measure_diag("13", ("D6", "D7"))
    return c.build("bell-projection")


def project_ghz_to_bell(ghz: PureState) -> list[BellOutcome]:
    """45-degree analysis of modes 11 and 13; corrects Phi- outcomes on mode 10."""
    _check_ghz_shape(ghz)
    outcomes = []
    for branch in run_circuit(bell_projection_circuit(), ghz):
        label = "".join(branch.record)
        raw, _ = normalize(branch.state)
        corrected = label in BELL_CORRECTED
        state = phase_flip(raw, "10") if corrected else raw
        outcomes.append(BellOutcome(label, branch.probability, state, corrected, raw))
    return outcomes


# ----------------------------------------------------------------------------
# purification

_FILTERS = (("10", "H"), ("11", "H"), ("12", "V"), ("13", "V"),
            ("14", "H"), ("15", "H"), ("16", "V"), ("17", "V"))


def build_purification_circuit(balanced: bool = True) -> Circuit:
    """The purification optics, acting on pairs (1, 2) and (3, 4).

    ``balanced`` adds one T=1/2 attenuator on each of Alice's mode 13' and
    Bob's mode 17'.  Without them the ``|VV>`` noise branch is accepted
    twice as often as the ``Psi+ Psi+`` branch and the update becomes
    ``gamma^2 / (gamma^2 + 2 (1 - gamma)^2)``.  The ``Phi+`` noise model
    needs the unbalanced circuit.
    """
    c = _Builder()
    c.mode("e1", "e2", "e3", "e4")
    c.pbs("1", "e1", "5", "6")              # split H/V of every photon
    c.pbs("2", "e2", "7", "8")
    c.pbs("3", "e3", "5'", "6'")
    c.pbs("4", "e4", "7'", "8'")
    c.bs("5", "5'", "10", "11", 0.5)
    c.bs("6", "6'", "12", "13", 0.5)
    c.bs("7", "7'", "14", "15", 0.5)
    c.bs("8", "8'", "16", "17", 0.5)
    for mode, pol in _FILTERS:
        c.ancilla_filter(mode, pol, "x" + mode)
    c.bs("10", "11", "10'", "11'", 0.5)
    c.bs("12", "13", "12'", "13'", 0.5)
    c.bs("14", "15", "14'", "15'", 0.5)
    c.bs("16", "17", "16'", "17'", 0.5)
    if balanced:
        c.attenuate("13'", 0.5, "z13")
        c.attenuate("17'", 0.5, "z17")
    c.pbs("10'", "12'", "a", "j1")
    c.pbs("11'", "13'", "b", "j2")
    c.pbs("14'", "16'", "c", "j3")
    c.pbs("15'", "17'", "d", "j4")
    c.detect_none("j1", "j2", "j3", "j4")
    c.measure_diag("b", ("D9", "D10"))
    c.measure_diag("d", ("D11", "D12"))
    return c.build("purification" if balanced else "purification-unbalanced")


def noisy_pair(gamma: float, m1: str, m2: str, noise: str = "vv") -> MixedState:
    if noise not in NOISE_MODELS:
        raise ValueError(f"noise must be one of {NOISE_MODELS}, got {noise!r}")
    other = vv(m1, m2) if noise == "vv" else phi_plus(m1, m2)
    return MixedState((EnsembleBranch(gamma, psi_plus(m1, m2), ("psi+",)),
                       EnsembleBranch(1.0 - gamma, other, (noise,))))


def purification_input(gamma: float, noise: str = "vv") -> MixedState:
    """Four-branch product ensemble of two noisy pairs on (1, 2) and (3, 4)."""
    _check_gamma(gamma)
    return noisy_pair(gamma, "1", "2", noise).product(noisy_pair(gamma, "3", "4", noise))


def _check_gamma(gamma):
    if not (0.0 <= gamma <= 1.0) or math.isnan(gamma):
        raise GammaOutOfRange(f"gamma must lie in [0, 1], got {gamma}")


def gamma_update_map(gamma: float) -> float:
    """``gamma^2 / (gamma^2 + (1 - gamma)^2)``."""
    _check_gamma(gamma)
    g2 = gamma * gamma
    return g2 / (g2 + (1.0 - gamma) ** 2)


@dataclass(frozen=True)
class PurificationRound:
    gamma_in: float
    gamma_out: float
    acceptance_probability: float | None
    output: MixedState = field(repr=False)
    branch_acceptance: dict = field(default_factory=dict, repr=False)
    outcome_probabilities: dict = field(default_factory=dict, repr=False)


def purification_target() -> PureState:
    return psi_plus("a", "c")


def run_purification_round(gamma: float, noise: str = "vv",
                           circuit: Circuit | None = None) -> PurificationRound:
    """One full-optics purification round.

    ``acceptance_probability`` covers every heralding step and all four
    detector pairs.  With the built-in circuit the output fraction is
    checked against :func:`gamma_update_map`.
    """
    _check_gamma(gamma)
    default = circuit is None
    if default:
        circuit = build_purification_circuit(balanced=(noise == "vv"))
    ens = purification_input(gamma, noise)
    evolved = apply_circuit_mixed(ens, circuit)

    in_weight = {b.record: b.weight for b in ens.branches}
    branch_acc = {tag: 0.0 for tag in in_weight}
    outcome_p: dict[str, float] = {}
    out = []
    for b in evolved.branches:
        n_tag = len(b.record) - 2
        tag, label = b.record[:n_tag], "".join(b.record[n_tag:])
        branch_acc[tag] += b.weight
        outcome_p[label] = outcome_p.get(label, 0.0) + b.weight
        state = phase_flip(b.state, "a") if label in PURIFY_CORRECTED else b.state
        out.append(EnsembleBranch(b.weight, state, b.record[n_tag:]))
    # per input branch; nan where the branch had no weight to begin with
    branch_acc = {"|".join(k): (v / in_weight[k] if in_weight[k] > 0 else math.nan)
                  for k, v in branch_acc.items()}
    acceptance = math.fsum(b.weight for b in out)
    output = MixedState(tuple(out)).renormalized()
    gamma_out = fraction_of(output, purification_target()).gamma
    if default:
        expected = gamma_update_map(gamma)
        if abs(gamma_out - expected) > GAMMA_TOL:
            raise ProtocolMismatch(f"circuit gave gamma' = {gamma_out!r}, closed form {expected!r}")
    return PurificationRound(gamma, gamma_out, acceptance, output, branch_acc, outcome_p)


def _fast_round(gamma: float, noise: str) -> PurificationRound:
    g = gamma_update_map(gamma)
    return PurificationRound(gamma, g, None, noisy_pair(g, "a", "c", noise))


def iterate_purification(gamma0: float, target: float | None = None, max_rounds: int = 50,
                         mode: str = "fast", noise: str = "vv") -> list[PurificationRound]:
    """Repeat rounds until the fraction reaches ``target`` or ``max_rounds`` run.

    Without a target exactly ``max_rounds`` rounds are run.  ``mode`` is
    ``"fast"`` (closed-form update) or ``"circuit"`` (full optics).
    """
    _check_gamma(gamma0)
    if mode not in ("fast", "circuit"):
        raise ValueError(f"mode must be 'fast' or 'circuit', got {mode!r}")
    if target is not None:
        if not (0.5 < target < 1.0):
            raise GammaOutOfRange(f"target must lie in (1/2, 1), got {target}")
        if gamma0 <= 0.5 and gamma0 < target:
            raise NotConverging(f"gamma0 = {gamma0} <= 1/2 never reaches {target}")
    rounds: list[PurificationRound] = []
    gamma = gamma0
    while len(rounds) < max_rounds and (target is None or gamma < target):
        rnd = _fast_round(gamma, noise) if mode == "fast" else run_purification_round(gamma, noise)
        rounds.append(rnd)
        gamma = rnd.gamma_out
    return rounds
