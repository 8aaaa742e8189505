import pytest
from conftest import R2, H, V, assert_states_close, ket

from photonloom.errors import MixedOutcome, NonSinglePhotonMode, UnknownRail
from photonloom.fock import PureState, mode_rails, tensor
from photonloom.measurement import (
    DetectionPattern,
    measure_diagonal,
    measure_number_complete,
    postselect,
    total_probability,
)

P = mode_rails("p")


def plus(m="p"):
    reg = mode_rails(m)
    return ket(H(m), registry=reg, amp=R2) + ket(V(m), registry=reg, amp=R2)


def test_pattern_rejects_repeated_targets():
    with pytest.raises(ValueError):
        DetectionPattern.of(("x", 1), ("x", 0))
    with pytest.raises(ValueError):
        DetectionPattern.of(("x", -1))


def test_postselect_projects_and_removes():
    psi1 = ket(H("s"), registry=mode_rails("s"))
    psi2 = ket(V("s"), registry=mode_rails("s"))
    aux = mode_rails("x")
    s = (tensor(ket(H("x"), registry=aux), psi1) + tensor(PureState.vacuum(aux), psi2)).scaled(R2)
    out = postselect(s, DetectionPattern.of(("x", 1)))
    assert_states_close(out, psi1.scaled(R2))
    assert out.registry == psi1.registry


def test_postselect_keep_rails_is_idempotent():
    s = tensor(plus("x"), plus("s"))
    pat = DetectionPattern.of((H("x"), 1))
    once = postselect(s, pat, remove=False)
    assert_states_close(postselect(once, pat, remove=False), once)


def test_postselect_unknown_rail():
    with pytest.raises(UnknownRail):
        postselect(plus(), DetectionPattern.of(("q", 0)))


def test_polarization_blind_detection_of_a_superposition_is_mixed():
    # a detector that clicks for H or V and is then discarded leaves a mixture
    from photonloom.fock import psi_plus
    with pytest.raises(MixedOutcome):
        postselect(psi_plus("x", "s"), DetectionPattern.of(("x", 1)))


def test_blind_detection_of_unentangled_photon_stays_pure():
    # |+>_x |psi>_s: both sub-patterns of x herald the same |psi>
    s = tensor(plus("x"), plus("s")).scaled(0.5)
    out = postselect(s, DetectionPattern.of(("x", 1)))
    assert_states_close(out.scaled(1 / out.norm()), plus("s"))
    assert out.norm_sq() == pytest.approx(0.25)


def test_rail_resolved_detection_stays_pure():
    s = tensor(plus("x"), plus("s"))
    out = postselect(s, DetectionPattern.of((H("x"), 1), (V("x"), 0)))
    assert_states_close(out, plus("s").scaled(R2))


def test_number_measurement_single_outcome():
    (o,) = measure_number_complete(ket(H("p"), registry=P), "p")
    assert o.label == (1, 0) and o.probability == pytest.approx(1.0)


def test_number_measurement_symmetric():
    out = measure_number_complete(plus(), "p")
    assert [o.label for o in out] == [(0, 1), (1, 0)]
    assert all(o.probability == pytest.approx(0.5) for o in out)


def test_postselect_consistent_with_number_measurement():
    reg = mode_rails("p") + mode_rails("s")
    s = (ket(H("p"), H("p"), V("s"), registry=reg, amp=0.6)
         + ket(V("s"), registry=reg, amp=0.8j))
    outcomes = {o.label: o.probability for o in measure_number_complete(s, "p")}
    assert postselect(s, DetectionPattern.of(("p", 2))).norm_sq() == pytest.approx(outcomes[(2, 0)], abs=1e-12)
    assert postselect(s, DetectionPattern.of(("p", 0))).norm_sq() == pytest.approx(outcomes[(0, 0)], abs=1e-12)


def test_diagonal_of_h_is_even():
    out = measure_diagonal(ket(H("p"), registry=P), "p")
    assert [o.label for o in out] == ["+45", "-45"]
    assert [o.probability for o in out] == pytest.approx([0.5, 0.5])


def test_diagonal_of_plus_is_certain():
    out = measure_diagonal(plus(), "p", labels=("D4", "D5"))
    assert out[0].label == "D4" and out[0].probability == pytest.approx(1.0)
    assert out[1].probability == pytest.approx(0.0, abs=1e-15)
    assert out[1].conditioned is None


def test_diagonal_requires_single_photon():
    with pytest.raises(NonSinglePhotonMode):
        measure_diagonal(ket(H("p"), H("p"), registry=P), "p")
    with pytest.raises(NonSinglePhotonMode):
        measure_diagonal(PureState.vacuum(P), "p")


def test_diagonal_completeness_on_entangled_state():
    reg = mode_rails("p") + mode_rails("q")
    s = (ket(H("p"), V("q"), registry=reg, amp=0.6) + ket(V("p"), H("q"), registry=reg, amp=0.8j))
    assert total_probability(measure_diagonal(s, "p")) == pytest.approx(1.0, abs=1e-12)
