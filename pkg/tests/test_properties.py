"""Property-based checks over random states, elements and scripts."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from photonloom.dsl import format_script, parse_circuit
from photonloom.fock import inner_product, mode_rails
from photonloom.measurement import DetectionPattern, measure_number_complete, postselect
from photonloom.optics import apply_element, make_beamsplitter, make_pbs, make_waveplate
from photonloom.protocols import gamma_update_map
from photonloom.report import dumps, format_float
from photonloom.verify import random_element, random_state

MODES = ("m0", "m1", "m2")
seeds = st.integers(min_value=0, max_value=2**32 - 1)
angles = st.floats(min_value=-360, max_value=360, allow_nan=False)
transmittances = st.floats(min_value=0, max_value=1)


def state_from(seed, modes=MODES):
    return random_state(np.random.default_rng(seed), modes)


def close(a, b, tol=1e-12):
    keys = set(a.amplitudes) | set(b.amplitudes)
    return a.registry == b.registry and all(abs(a.amplitude(k) - b.amplitude(k)) <= tol for k in keys)


@settings(max_examples=80, deadline=None)
@given(seeds)
def test_elements_preserve_norm_and_photon_number(seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng, MODES)
    live = list(MODES)
    e = random_element(rng, live, lambda: "fresh")
    out = apply_element(s, e)
    assert abs(out.norm_sq() - s.norm_sq()) <= 1e-12
    assert out.photon_numbers() <= s.photon_numbers()


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_hwp45_is_an_involution(seed):
    s = state_from(seed)
    e = make_waveplate("m1", 45)
    assert close(apply_element(apply_element(s, e), e), s)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_pbs_undone_by_reverse_pbs(seed):
    s = state_from(seed)
    out = apply_element(apply_element(s, make_pbs("m0", "m1", "x", "y")), make_pbs("x", "y", "m0", "m1"))
    assert close(out, s)


@settings(max_examples=50, deadline=None)
@given(seeds, angles, transmittances)
def test_disjoint_elements_commute(seed, theta, T):
    s = state_from(seed)
    a = make_waveplate("m2", theta)
    b = make_beamsplitter("m0", "m1", "m0", "m1", T)
    assert close(apply_element(apply_element(s, a), b), apply_element(apply_element(s, b), a))


@settings(max_examples=50, deadline=None)
@given(seeds, st.sampled_from(MODES))
def test_number_measurement_is_complete(seed, mode):
    s = state_from(seed).scaled(0.7)
    total = sum(o.probability for o in measure_number_complete(s, mode))
    assert abs(total - s.norm_sq()) <= 1e-10


@settings(max_examples=50, deadline=None)
@given(seeds, st.integers(0, 2), st.integers(0, 2))
def test_resolved_postselect_matches_number_outcome(seed, nh, nv):
    s = state_from(seed)
    h, v = mode_rails("m0")
    probs = {o.label: o.probability for o in measure_number_complete(s, "m0")}
    got = postselect(s, DetectionPattern.of((h, nh), (v, nv))).norm_sq()
    assert abs(got - probs.get((nh, nv), 0.0)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_postselect_keeping_rails_is_idempotent(seed):
    s = state_from(seed)
    pat = DetectionPattern.of((mode_rails("m1")[0], 1))
    once = postselect(s, pat, remove=False)
    assert close(postselect(once, pat, remove=False), once)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_inner_product_hermitian(seed):
    a, b = state_from(seed), state_from(seed + 1)
    assert abs(inner_product(a, b) - inner_product(b, a).conjugate()) <= 1e-14


names = st.sampled_from(["a", "b", "c", "d"])
reals = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


@st.composite
def scripts(draw):
    lines = ["mode a b c d"]
    for _ in range(draw(st.integers(0, 8))):
        kind = draw(st.sampled_from(["hwp", "pbs", "bs", "source", "detect-rail"]))
        if kind == "hwp":
            lines.append(f"hwp {draw(names)} {draw(reals)!r}")
        elif kind in ("pbs", "bs"):
            x, y = draw(st.permutations(["a", "b", "c", "d"]))[:2]
            tail = f" {draw(transmittances)!r}" if kind == "bs" else ""
            lines.append(f"{kind} {x} {y} {x} {y}{tail}")
        elif kind == "source":
            lines.append(f"source {draw(names)} {draw(st.sampled_from('HV'))} {draw(st.integers(0, 3))}")
        else:
            lines.append(f"detect-rail {draw(names)} {draw(st.sampled_from('HV'))} {draw(st.integers(0, 2))}")
    re, im = draw(reals), draw(reals)
    lines.append(f"pair p q {re!r}{im:+}j 0.5")
    return "\n".join(lines) + "\n"


@settings(max_examples=100, deadline=None)
@given(scripts())
def test_parser_round_trip(text):
    first = parse_circuit(text)
    second = parse_circuit(format_script(first))
    assert first.statements == second.statements


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_float_format_round_trips(x):
    assert float(format_float(x)) == x


@given(st.recursive(st.none() | st.booleans() | st.floats(allow_nan=False, allow_infinity=False) | st.text(),
                    lambda kids: st.lists(kids) | st.dictionaries(st.text(), kids), max_leaves=20))
def test_dumps_deterministic_and_valid(obj):
    import json
    text = dumps(obj)
    assert text == dumps(obj)
    assert json.loads(text) == obj


@given(st.floats(min_value=0.5, max_value=1.0), st.floats(min_value=0.5, max_value=1.0))
def test_update_map_monotone_above_half(g1, g2):
    lo, hi = sorted((g1, g2))
    assert gamma_update_map(lo) <= gamma_update_map(hi)
    assert gamma_update_map(lo) >= lo - 1e-15


@pytest.mark.parametrize("g", [0.0, 0.5, 1.0])
def test_update_map_fixed_points(g):
    assert gamma_update_map(g) == g
