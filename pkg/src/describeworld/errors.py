"""Shared exception types."""


class DescribeWorldError(Exception):
    """Base class for package errors."""


class ConfigError(DescribeWorldError):
    """World definition failed validation."""


class UnsupportedRecipe(DescribeWorldError):
    """Recipe family has no cell for the requested ingredient."""


class AmbiguityError(DescribeWorldError):
    """An action matched more than one completion; indicates a broken config."""


class ParseError(DescribeWorldError):
    """Text does not parse as a task description or instruction."""


class InfeasibleMapError(DescribeWorldError):
    """No feasible map found for a task within the attempt budget."""


class OracleStuck(DescribeWorldError):
    """The planner found no executable leg; the map cannot support the task."""


class ProtocolError(DescribeWorldError):
    """Malformed or out-of-order wire protocol message."""


class ReplayError(DescribeWorldError):
    """A recorded episode diverged from the engine on replay."""
