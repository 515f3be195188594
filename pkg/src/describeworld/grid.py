"""Grid maps and observation tensors.

A map is a 10x10 board whose outer ring is wall; only the 8x8 interior is
stored and observed. Each interior cell carries an optional terrain and an
optional object, plus the agent position. Observations are (h, w, 3) int
tensors: channel 0 is the agent one-hot, channel 1 object ids, channel 2
terrain ids (0 = empty in both registries).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .graph import WorldGraph

Cell = tuple[int, int]


@dataclass
class GridMap:
    height: int
    width: int
    terrain: list[list[Optional[str]]]
    objects: list[list[Optional[str]]]
    agent: Cell
    seed: Optional[int] = None
    _objs_cache: Optional[frozenset[str]] = field(
        default=None, compare=False, repr=False)

    @classmethod
    def empty(cls, height: int = 8, width: int = 8, agent: Cell = (0, 0)) -> "GridMap":
        return cls(
            height=height,
            width=width,
            terrain=[[None] * width for _ in range(height)],
            objects=[[None] * width for _ in range(height)],
            agent=agent,
        )

    def copy(self) -> "GridMap":
        return GridMap(
            height=self.height,
            width=self.width,
            terrain=[row[:] for row in self.terrain],
            objects=[row[:] for row in self.objects],
            agent=self.agent,
            seed=self.seed,
        )

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def cells(self) -> Iterator[Cell]:
        for r in range(self.height):
            for c in range(self.width):
                yield (r, c)

    def terrain_at(self, cell: Cell) -> Optional[str]:
        return self.terrain[cell[0]][cell[1]]

    def object_at(self, cell: Cell) -> Optional[str]:
        return self.objects[cell[0]][cell[1]]

    def set_object(self, cell: Cell, obj: Optional[str]) -> None:
        self.objects[cell[0]][cell[1]] = obj
        self._objs_cache = None

    def set_terrain(self, cell: Cell, terrain: Optional[str]) -> None:
        self.terrain[cell[0]][cell[1]] = terrain

    def find_objects(self, kind: str) -> list[Cell]:
        out = []
        for r, row in enumerate(self.objects):
            for c, obj in enumerate(row):
                if obj == kind:
                    out.append((r, c))
        return out

    def find_terrain(self, kind: str) -> list[Cell]:
        out = []
        for r, row in enumerate(self.terrain):
            for c, t in enumerate(row):
                if t == kind:
                    out.append((r, c))
        return out

    def present_objects(self) -> frozenset[str]:
        # valid as long as every post-construction write goes through set_object
        cached = self._objs_cache
        if cached is None:
            cached = frozenset(o for row in self.objects for o in row if o is not None)
            self._objs_cache = cached
        return cached

    def present_terrains(self) -> frozenset[str]:
        return frozenset(t for row in self.terrain for t in row if t is not None)

    # -- observation encoding -------------------------------------------------

    def observation(self, graph: WorldGraph) -> np.ndarray:
        obs = np.zeros((self.height, self.width, 3), dtype=np.int32)
        obs[self.agent[0], self.agent[1], 0] = 1
        for r in range(self.height):
            for c in range(self.width):
                obs[r, c, 1] = graph.object_id(self.objects[r][c])
                obs[r, c, 2] = graph.terrain_id(self.terrain[r][c])
        return obs

    @classmethod
    def from_observation(cls, obs: np.ndarray, graph: WorldGraph) -> "GridMap":
        h, w, depth = obs.shape
        if depth != 3:
            raise ValueError(f"expected 3 channels, got {depth}")
        agents = np.argwhere(obs[:, :, 0] == 1)
        if len(agents) != 1:
            raise ValueError(f"expected one agent cell, got {len(agents)}")
        m = cls.empty(h, w, agent=(int(agents[0][0]), int(agents[0][1])))
        for r in range(h):
            for c in range(w):
                m.objects[r][c] = graph.object_name(int(obs[r, c, 1]))
                m.terrain[r][c] = graph.terrain_name(int(obs[r, c, 2]))
        return m

    # -- serialization ---------------------------------------------------------

    def to_dict(self) -> dict:
        d = {
            "version": 1,
            "size": [self.height, self.width],
            "agent": list(self.agent),
            "terrain": [[t for t in row] for row in self.terrain],
            "objects": [[o for o in row] for row in self.objects],
        }
        if self.seed is not None:
            d["seed"] = self.seed
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GridMap":
        h, w = d["size"]
        return cls(
            height=h,
            width=w,
            terrain=[row[:] for row in d["terrain"]],
            objects=[row[:] for row in d["objects"]],
            agent=(d["agent"][0], d["agent"][1]),
            seed=d.get("seed"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GridMap":
        return cls.from_dict(json.loads(text))
