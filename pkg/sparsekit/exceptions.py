class DomainError(ValueError):
    """
    Exception type to signal an argument outside the domain of a function,
    e.g. a negative entry passed to a merit function
    """
    pass


class DimensionMismatch(ValueError):
    """
    Exception type to signal inconsistent array dimensions
    """
    pass


class InvalidWeightSet(ValueError):
    """
    Exception type to signal a malformed weight set rule
    """
    pass


class AmbiguousBackends(Exception):
    """
    Exception type to signal registering equally specific solver backends in
    a context
    """
    pass


class NoNamedSetting(Exception):
    """
    Exception type to signal lookup of a solver setting that no context
    provides
    """
    pass


class UnknownBackend(Exception):
    """
    Exception type to signal lookup of a backend name that was never
    registered
    """
    pass


class UnknownAlgorithm(Exception):
    """
    Exception type to signal an unknown algorithm preset or variant
    """
    pass


class InvalidSeed(Exception):
    """
    Exception type to signal a seed environment variable that is not an
    integer
    """
    pass


class NotConeRepresentable(Exception):
    """
    Exception type to signal a merit function or surrogate without an exact
    conic formulation
    """
    pass


class SolverFailure(Exception):
    """
    Exception type to signal a cone program that did not reach an optimal
    solution
    """
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SubproblemFailure(Exception):
    """
    Exception type to signal a relaxation or linearization subproblem that
    produced no usable iterate
    """
    pass


class AssumptionViolation(Exception):
    """
    Exception type to signal that a weight or instance does not satisfy the
    preconditions of the strictly complementary pair construction
    """
    def __init__(self, message, checks=None):
        super().__init__(message)
        self.checks = checks or {}


class CardinalityLimit(Exception):
    """
    Exception type to signal an instance too large for support enumeration
    """
    pass
