"""Dense 2D grid containers and world <-> cell coordinate transforms.

Cell indices are (i, j) with i along world x and j along world y. Arrays are
stored row-major with shape (height, width) and accessed as values[j, i];
the row-major linear index of a cell is j * width + i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Occupancy probability that encodes "never observed".
UNKNOWN_P = 0.5

# Cell states of the binary traversability grid.
UNKNOWN = -1
BLOCKED = 0
FREE = 1


class OutOfBoundsError(ValueError):
    """A world point or cell index lies outside the grid extent."""


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a dense 2D grid.

    (origin_x, origin_y) is the world position of the corner of cell (0, 0).
    Cell membership uses half-open intervals [corner, corner + resolution) so
    every point maps to exactly one cell.
    """

    origin_x: float
    origin_y: float
    resolution: float
    width: int
    height: int

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        if self.width < 1 or self.height < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.width}x{self.height}")

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    def in_bounds(self, i: int, j: int) -> bool:
        return 0 <= i < self.width and 0 <= j < self.height

    def point_in_bounds(self, x: float, y: float) -> bool:
        return (
            self.origin_x <= x < self.origin_x + self.width * self.resolution
            and self.origin_y <= y < self.origin_y + self.height * self.resolution
        )

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        """Map a world point to its containing cell, or raise OutOfBoundsError."""
        i = math.floor((x - self.origin_x) / self.resolution)
        j = math.floor((y - self.origin_y) / self.resolution)
        if not self.in_bounds(i, j):
            raise OutOfBoundsError(f"point ({x}, {y}) outside grid extent")
        return i, j

    def cell_to_world(self, i: int, j: int) -> tuple[float, float]:
        """World coordinates of the center of cell (i, j)."""
        if not self.in_bounds(i, j):
            raise OutOfBoundsError(f"cell ({i}, {j}) outside {self.width}x{self.height} grid")
        return (
            self.origin_x + (i + 0.5) * self.resolution,
            self.origin_y + (j + 0.5) * self.resolution,
        )

    def linear_index(self, i: int, j: int) -> int:
        return j * self.width + i

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Arrays of shape (height, width) with the world x and y of every cell center."""
        xs = self.origin_x + (np.arange(self.width) + 0.5) * self.resolution
        ys = self.origin_y + (np.arange(self.height) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)


def _check_shape(spec: GridSpec, values: np.ndarray) -> None:
    if values.shape != (spec.height, spec.width):
        raise ValueError(f"values shape {values.shape} does not match spec "
                         f"({spec.height}, {spec.width})")


@dataclass
class OccupancyGrid:
    """Per-cell occupancy probability in [0, 1]; Unknown is exactly 0.5."""

    spec: GridSpec
    p: np.ndarray  # float64, shape (height, width)

    def __post_init__(self):
        _check_shape(self.spec, self.p)

    @classmethod
    def unknown(cls, spec: GridSpec) -> "OccupancyGrid":
        return cls(spec, np.full((spec.height, spec.width), UNKNOWN_P))

    def copy(self) -> "OccupancyGrid":
        return OccupancyGrid(self.spec, self.p.copy())

    def unknown_mask(self) -> np.ndarray:
        return self.p == UNKNOWN_P

    def to_text(self) -> str:
        lines = [_header(self.spec)]
        for row in self.p:
            lines.append(" ".join(format(v, ".6g") for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "OccupancyGrid":
        spec, rows = _parse_raster(text)
        p = np.array([[float(v) for v in row] for row in rows])
        return cls(spec, p)


@dataclass
class TraversabilityGrid:
    """Per-cell traversability score in [0, 1]; NaN encodes Unknown."""

    spec: GridSpec
    score: np.ndarray  # float64, NaN = unknown

    def __post_init__(self):
        _check_shape(self.spec, self.score)

    @classmethod
    def unknown(cls, spec: GridSpec) -> "TraversabilityGrid":
        return cls(spec, np.full((spec.height, spec.width), np.nan))

    def copy(self) -> "TraversabilityGrid":
        return TraversabilityGrid(self.spec, self.score.copy())

    def to_text(self) -> str:
        lines = [_header(self.spec)]
        for row in self.score:
            lines.append(" ".join("?" if np.isnan(v) else format(v, ".6g") for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TraversabilityGrid":
        spec, rows = _parse_raster(text)
        score = np.array([[np.nan if v == "?" else float(v) for v in row] for row in rows])
        return cls(spec, score)


_BINARY_CHARS = {UNKNOWN: "?", FREE: ".", BLOCKED: "#"}
_BINARY_STATES = {v: k for k, v in _BINARY_CHARS.items()}


@dataclass
class BinaryTraversabilityGrid:
    """Thresholded traversability: each cell is Unknown, Free or Blocked."""

    spec: GridSpec
    state: np.ndarray  # int8, values in {UNKNOWN, BLOCKED, FREE}

    def __post_init__(self):
        _check_shape(self.spec, self.state)

    @classmethod
    def unknown(cls, spec: GridSpec) -> "BinaryTraversabilityGrid":
        return cls(spec, np.full((spec.height, spec.width), UNKNOWN, dtype=np.int8))

    def copy(self) -> "BinaryTraversabilityGrid":
        return BinaryTraversabilityGrid(self.spec, self.state.copy())

    def free_mask(self) -> np.ndarray:
        return self.state == FREE

    def is_free(self, i: int, j: int) -> bool:
        return bool(self.state[j, i] == FREE)

    def to_text(self) -> str:
        lines = [_header(self.spec)]
        for row in self.state:
            lines.append(" ".join(_BINARY_CHARS[int(v)] for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BinaryTraversabilityGrid":
        spec, rows = _parse_raster(text)
        state = np.array([[_BINARY_STATES[v] for v in row] for row in rows], dtype=np.int8)
        return cls(spec, state)


def _header(spec: GridSpec) -> str:
    return (f"{spec.width} {spec.height} {format(spec.resolution, '.6g')} "
            f"{format(spec.origin_x, '.6g')} {format(spec.origin_y, '.6g')}")


def _parse_raster(text: str) -> tuple[GridSpec, list[list[str]]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty raster")
    w, h, res, ox, oy = lines[0].split()
    spec = GridSpec(float(ox), float(oy), float(res), int(w), int(h))
    rows = [ln.split() for ln in lines[1:]]
    if len(rows) != spec.height or any(len(r) != spec.width for r in rows):
        raise ValueError("raster body does not match header dimensions")
    return spec, rows
