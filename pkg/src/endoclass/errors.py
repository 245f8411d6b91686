"""Exception hierarchy shared across the package."""


class EndoError(Exception):
    """Base class for all structured failures raised by this package."""


class InvalidCartanType(EndoError):
    pass


class AutomorphismMismatch(EndoError):
    pass


class NotDiagramAutomorphism(EndoError):
    pass


class NonCommuting(EndoError):
    pass


class RankGuardExceeded(EndoError):
    pass


class DegenerateComponent(EndoError):
    """Internal inconsistency while building an affine basis; must not occur."""


class NonTermination(EndoError):
    """Iteration cap hit inside alcove reduction; signals a bug, not bad data."""


class GroupTooLarge(EndoError):
    pass


class NotInWaff(EndoError):
    pass


class NotHomomorphism(EndoError):
    pass


class NotFixed(EndoError):
    pass


class ModelMismatch(EndoError):
    pass


class InvalidGaloisAction(EndoError):
    pass


class InternalInconsistency(EndoError):
    """Two independent computations of the same invariant disagree."""


class CheckFailed(EndoError):
    """A machine check found a counterexample; carries the witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class UnknownClassId(EndoError):
    pass


class ConfigError(EndoError):
    pass
