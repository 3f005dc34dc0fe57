"""Exception hierarchy shared by all modules."""


class HofvError(Exception):
    """Base class for every error raised by this package."""


class IterationFailure(HofvError):
    """Newton iteration for polynomial roots did not converge."""


class InvalidDomain(HofvError):
    """Degenerate or unordered domain / break sequence."""


class NotInterior(HofvError):
    """A boundary lattice node was given where an interior one is required."""


class OutOfDomain(HofvError):
    """Evaluation point lies outside the closed domain."""


class InconsistentJump(HofvError):
    """The overdetermined jump system behind the trial-to-test map is violated."""


class SingularSystem(HofvError):
    """Sparse factorization met a structurally or numerically singular matrix."""


class NonConvergence(HofvError):
    """Iterative solver hit its iteration cap.

    The best iterate and its relative residual are kept so callers can
    decide whether to accept them.
    """

    def __init__(self, message, best, residual, iterations):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations


class InvalidSequence(HofvError):
    """Mesh sequence given to the rate table does not halve h."""


class RegistrationError(HofvError):
    """Problem registration rejected (duplicate id or failed self-check)."""


class ConfigError(HofvError):
    """Malformed study configuration."""
