import math
import sys

import numpy as np
import pytest

from photonloom.fock import FockBasisState, PureState, Rail

R2 = 1 / math.sqrt(2)


def H(m):
    return Rail(str(m), "H")


def V(m):
    return Rail(str(m), "V")


def ket(*rails, registry=None, amp=1.0):
    """Basis state from a list of rails; repeats mean higher occupation."""
    occ = {}
    for r in rails:
        occ[r] = occ.get(r, 0) + 1
    b = FockBasisState.from_mapping(occ)
    reg = set(b.rails) if registry is None else registry
    return PureState({b: amp}, reg)


def assert_states_close(a: PureState, b: PureState, tol=1e-12):
    assert a.registry == b.registry
    keys = set(a.amplitudes) | set(b.amplitudes)
    diff = max((abs(a.amplitude(k) - b.amplitude(k)) for k in keys), default=0.0)
    assert diff <= tol, f"max amplitude difference {diff:.3g}\n{a}\n{b}"


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
