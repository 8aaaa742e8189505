"""Polarization linear-optics simulator for entanglement concentration and purification."""

__version__ = "0.1.0"

from .circuit import Circuit, run_circuit  # noqa: E402
from .fock import (  # noqa: E402
    FockBasisState,
    PureState,
    Rail,
    fidelity_pure,
    inner_product,
    normalize,
    tensor,
)
from .mixed import MixedState, apply_circuit_mixed, fidelity_mixed, fraction_of  # noqa: E402
from .optics import (  # noqa: E402
    Element,
    apply_element,
    make_beamsplitter,
    make_pbs,
    make_relabel,
    make_waveplate,
)

__all__ = [
    "Circuit",
    "Element",
    "FockBasisState",
    "MixedState",
    "PureState",
    "Rail",
    "apply_circuit_mixed",
    "apply_element",
    "fidelity_mixed",
    "fidelity_pure",
    "fraction_of",
    "inner_product",
    "make_beamsplitter",
    "make_pbs",
    "make_relabel",
    "make_waveplate",
    "normalize",
    "run_circuit",
    "tensor",
]
