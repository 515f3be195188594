import pytest

from describeworld.graph import default_graph
from describeworld.grid import GridMap


@pytest.fixture(scope="session")
def graph():
    return default_graph()


def make_map(agent, objects=None, terrain=None, size=(8, 8)):
    """Hand-built map: objects/terrain are {(r, c): name} dicts."""
    m = GridMap.empty(size[0], size[1], agent=tuple(agent))
    for (r, c), kind in (objects or {}).items():
        m.objects[r][c] = kind
    for (r, c), t in (terrain or {}).items():
        m.terrain[r][c] = t
    return m
