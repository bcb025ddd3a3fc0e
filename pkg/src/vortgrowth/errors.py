"""Exception hierarchy.

Every error raised by the package derives from :class:`VortError`. The
``exit_code`` attribute maps the error family onto the CLI exit codes:
2 for invariant violations, 3 for numerical failures and 4 for
configuration problems.
"""


class VortError(Exception):
    exit_code = 3


class InvariantViolation(VortError):
    exit_code = 2


class NumericalFailure(VortError):
    exit_code = 3


class ConfigError(VortError):
    exit_code = 4


class MeanZeroError(InvariantViolation):
    """Torus vorticity with a nonzero mean."""


class SupportOverflowError(InvariantViolation):
    """Free-space vorticity reached the padded-box margin."""


class FluxSquareError(InvariantViolation):
    """The probe square has no positive flux constant."""


class FluxFloorError(InvariantViolation):
    """Measured flux dropped below the required floor."""


class OrderingError(InvariantViolation):
    """Level-curve ordering hypothesis is violated."""


class DegeneracyError(InvariantViolation):
    """Saddle or probe matrix is degenerate."""


class NoSaddleError(InvariantViolation):
    pass


class InfeasibleSeedError(InvariantViolation):
    """Seed constraints cannot be met on the given grid.

    ``minimal_eps`` holds the smallest achievable perturbation size.
    """

    def __init__(self, message, minimal_eps=None):
        super().__init__(message)
        self.minimal_eps = minimal_eps


class BlowUpError(NumericalFailure):
    """Non-finite values or a collapsed time step."""


class StepSizeError(NumericalFailure):
    pass


class TrackerDegeneracyError(NumericalFailure):
    """Tracked Fourier amplitude dropped below the floor."""


class AliasingError(NumericalFailure):
    """Phase increment too large to unwrap unambiguously."""


class TieError(NumericalFailure):
    """Two candidate translations are equally good."""


class RegimeLossError(NumericalFailure):
    """The plane tracker root left its bracket."""


class SnapshotFormatError(ConfigError):
    pass
