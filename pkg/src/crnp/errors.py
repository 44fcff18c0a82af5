"""Exception types raised across the package."""


class CRNError(Exception):
    """Base class for all errors raised by crnp."""


class NetworkError(CRNError, ValueError):
    """Invalid network content (bad rates, delays, species, ...)."""


class ParseError(NetworkError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonPositiveRate(NetworkError):
    pass


class NegativeDelay(NetworkError):
    pass


class DuplicateSpeciesDecl(ParseError):
    pass


class EmptyNetwork(NetworkError):
    pass


class DegenerateReaction(NetworkError):
    """Reactant and product complexes coincide."""


class UnknownSpecies(NetworkError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptySet(NetworkError):
    pass


class NoPartition(CRNError):
    pass


class BlockOutOfRange(CRNError, IndexError):
    pass


class TooLarge(CRNError):
    pass


class NotSemilocking(CRNError, ValueError):
    pass


class NotWeaklyReversible(CRNError, ValueError):
    pass


class NonPositiveConcentration(CRNError, ValueError):
    pass


class InternalInconsistency(CRNError, RuntimeError):
    pass


class EmptyKeepSet(CRNError, ValueError):
    pass


class SimulationError(CRNError):
    pass


class StepTooLarge(SimulationError, ValueError):
    pass


class NonFiniteState(SimulationError, FloatingPointError):
    pass


class NegativeStateAborted(SimulationError):
    pass


class MemoryCapExceeded(SimulationError):
    pass


class WindowTooShort(CRNError, ValueError):
    pass


class NonPositiveWindow(CRNError, ValueError):
    pass
