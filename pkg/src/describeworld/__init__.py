"""Deterministic crafting grid world with a synthetic language layer.

An 8x8 walled grid where an agent gathers resources, crafts items at
stations, and modifies terrain, driven by a fixed dependency graph of 56
named subtasks.  On top of the engine sit a goal/task universe with
canonical text rendering, a scripted expert, seeded map generation,
train/test split builders, and an evaluation harness that talks to
external agents over a line-delimited wire protocol.
"""

ENGINE_VERSION = "0.1.0"
__version__ = ENGINE_VERSION

from .errors import (  # noqa: F401
    AmbiguityError,
    ConfigError,
    DescribeWorldError,
    InfeasibleMapError,
    OracleStuck,
    ParseError,
    ProtocolError,
    UnsupportedRecipe,
)
from .graph import WorldGraph, default_graph, load_graph  # noqa: F401
from .grid import GridMap  # noqa: F401
from .world import Episode, Transition  # noqa: F401
