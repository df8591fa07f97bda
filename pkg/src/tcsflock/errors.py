"""Exception hierarchy shared across the package."""


class TCSError(Exception):
    """Base class for all package errors."""


class GraphError(TCSError, ValueError):
    """Malformed graph construction (bad index, bad adjacency)."""


class NoSpanningTreeError(GraphError):
    """The digraph has no root from which every vertex is reachable."""


class DomainError(TCSError, ValueError):
    """An input lies outside the mathematical domain of an operation."""


class NumericError(TCSError, ArithmeticError):
    """Non-finite values appeared in a computation."""


class IntegrationError(NumericError):
    """A time step left the admissible region (e.g. coldness became non-positive)."""


class ScenarioError(TCSError, ValueError):
    """Scenario file could not be parsed or validated."""
