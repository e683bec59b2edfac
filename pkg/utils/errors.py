"""
Exception hierarchy for the blind-estimation simulator
"""


class SimulationError(Exception):
    """Base class for every failure raised by the simulator"""


class ConfigError(SimulationError, ValueError):
    """Invalid scenario, experiment file or CLI flag"""


class DimensionError(SimulationError, ValueError):
    """Operands with incompatible shapes"""


class NumericalRankError(SimulationError):
    """Least-squares system is numerically rank deficient"""


class NumericalError(SimulationError):
    """Non-finite value produced during an iterative computation"""


class DegenerateInputError(SimulationError, ValueError):
    """Input for which the requested quantity is undefined (zero column, zero channel, ...)"""


class EncodingError(SimulationError, ValueError):
    """Bit vector or codeword index outside the codebook layout"""


class InvalidUserError(SimulationError):
    """Codeword index falls in a range that no user owns"""


class ModelInconsistencyError(SimulationError):
    """Two constructions of the same received signal disagree"""


class InsufficientMeasurementsError(SimulationError):
    """Fewer usable measurements than unknowns requested"""


class AccountingError(SimulationError):
    """Ground truth and recovered results do not cover the same user-blocks"""
