"""Exception types shared across the package."""


class ConsensusLabError(Exception):
    """Base class for all package-specific errors."""


class OutOfRangeError(ConsensusLabError, ValueError):
    """A time or index falls outside the covered horizon."""


class KindError(ConsensusLabError, TypeError):
    """An operation received a schedule of the wrong kind."""


class InvariantViolation(ConsensusLabError, ValueError):
    """A structural invariant of a domain type is broken."""


class CouplingContractError(ConsensusLabError, ValueError):
    """A coupling gain evaluated outside its admissible range."""


class ReductionDomainError(ConsensusLabError, ValueError):
    """The discrete-to-continuous reduction is undefined for the input."""
