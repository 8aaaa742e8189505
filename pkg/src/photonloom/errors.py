"""Exception hierarchy shared by the simulator modules."""


class PhotonloomError(Exception):
    """Base class for every error raised by photonloom."""


class SimulationError(PhotonloomError):
    """Raised when a well-formed request cannot be simulated."""


class OverlappingRegistries(SimulationError):
    pass


class RegistryMismatch(SimulationError):
    pass


class ZeroState(SimulationError):
    pass


class UnknownRail(SimulationError):
    pass


class RailCollision(SimulationError):
    """An element or source would write into a rail that is already in use."""


class DuplicateRail(SimulationError):
    pass


class PhotonCapExceeded(SimulationError):
    pass


class TransmittanceOutOfRange(SimulationError, ValueError):
    pass


class NonUnitaryElement(SimulationError):
    pass


class NonSinglePhotonMode(SimulationError):
    pass


class MixedOutcome(SimulationError):
    """A detection that leaves a mixed state, which a pure state cannot hold.

    Raised when accepted terms differ on the rails being absorbed, e.g. a
    polarization-blind detector that sees ``|H>`` in one term and ``|V>``
    in another.
    """


class SourceOccupied(SimulationError):
    pass


class ZeroEnsemble(SimulationError):
    pass


class ShapeMismatch(SimulationError):
    pass


class NotNormalized(SimulationError, ValueError):
    pass


class DegenerateInput(SimulationError):
    pass


class GammaOutOfRange(SimulationError, ValueError):
    pass


class NotConverging(SimulationError):
    pass


class ProtocolMismatch(SimulationError):
    """A protocol driver produced a value that disagrees with its closed form."""


class BasisOverflow(SimulationError):
    pass


class RailSetMismatch(SimulationError):
    pass


class ParseError(PhotonloomError):
    """Circuit-script syntax or validation failure with source position."""

    def __init__(self, message, line=0, column=0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class UndeclaredMode(ParseError):
    pass


class ArityError(ParseError):
    pass
