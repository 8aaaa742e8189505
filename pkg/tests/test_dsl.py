from pathlib import Path

import pytest

from photonloom.circuit import Apply, MeasureDiag, Pair, PostSelect
from photonloom.dsl import format_script, load_circuit, parse_circuit
from photonloom.errors import (
    ArityError,
    ParseError,
    TransmittanceOutOfRange,
    UndeclaredMode,
)
from photonloom.protocols import build_concentration_circuit, build_purification_circuit

FIGURES = Path(__file__).resolve().parents[1] / "figures"


def test_mode_and_pbs():
    script = parse_circuit("mode a b\npbs a b a b")
    assert [st.keyword for st in script.statements] == ["mode", "pbs"]


def test_pair_and_hwp():
    script = parse_circuit("pair p q 0.6 0.8\nhwp p 45")
    steps = script.to_circuit().steps
    assert isinstance(steps[0], Pair) and steps[0].alpha == 0.6
    assert isinstance(steps[1], Apply) and steps[1].element.param("theta_deg") == 45.0


def test_complex_literals():
    (st,) = parse_circuit("pair p q 0.6 0+0.8j").statements
    assert st.args[3] == 0.8j


def test_bs_transmittance_checked():
    with pytest.raises(TransmittanceOutOfRange, match="line 2"):
        parse_circuit("mode a b\nbs a b a b 1.5")


def test_undeclared_mode_position():
    with pytest.raises(UndeclaredMode) as info:
        parse_circuit("mode a\n  hwp b 45")
    assert (info.value.line, info.value.column) == (2, 7)


def test_consumed_mode_cannot_be_reused():
    with pytest.raises(UndeclaredMode):
        parse_circuit("mode a b\npbs a b c d\nhwp a 45")
    with pytest.raises(UndeclaredMode):
        parse_circuit("mode a b\ndetect a 1\nhwp a 45")


def test_redeclaration_rejected():
    with pytest.raises(ParseError):
        parse_circuit("mode a\nmode a")


def test_arity():
    with pytest.raises(ArityError):
        parse_circuit("mode a b\npbs a b a")
    with pytest.raises(ArityError):
        parse_circuit("mode a\nmeasure-diag a D1")


def test_unknown_keyword_and_bad_numbers():
    with pytest.raises(ParseError, match="unknown"):
        parse_circuit("teleport a")
    with pytest.raises(ParseError):
        parse_circuit("mode a\nhwp a forty-five")
    with pytest.raises(ParseError):
        parse_circuit("mode a\ndetect a -1")
    with pytest.raises(ParseError):
        parse_circuit("source a D 1")


def test_comments_and_blank_lines():
    script = parse_circuit("# header\n\nmode a   # vacuum\n")
    assert len(script.statements) == 1


def test_detection_statements_compile():
    steps = parse_circuit(
        "mode a b c d\ndetect a 1\ndetect-rail b H 0\ndetect-none c\nmeasure-diag d D1 D2"
    ).to_circuit().steps
    assert all(isinstance(s, PostSelect) for s in steps[1:4])
    assert isinstance(steps[4], MeasureDiag) and steps[4].labels == ("D1", "D2")


@pytest.mark.parametrize("name", ["fig1_concentration.qc", "fig2_purification.qc"])
def test_round_trip_bundled(name):
    text = (FIGURES / name).read_text()
    first = parse_circuit(text)
    second = parse_circuit(format_script(first))
    assert first.statements == second.statements
    assert format_script(second) == format_script(first)


def test_bundled_scripts_match_builders():
    fig1 = load_circuit(FIGURES / "fig1_concentration.qc")
    fig2 = load_circuit(FIGURES / "fig2_purification.qc")
    assert fig1.steps[2:] == build_concentration_circuit().steps
    assert fig2.steps[4:] == build_purification_circuit().steps
