"""Traversability-aware frontier exploration with Fisher-information goal
selection, plus a desk-scale simulator and strategy-comparison harness."""

from importlib import resources

from .grid import (BinaryTraversabilityGrid, GridSpec, OccupancyGrid,
                   OutOfBoundsError, TraversabilityGrid)

__version__ = "0.1.0"

PRESET_WORLDS = ("flat_office", "ramp_yard", "obstacle_ring")


def preset_world_path(name: str):
    """Filesystem path of a bundled preset world config."""
    if name not in PRESET_WORLDS:
        raise ValueError(f"unknown preset {name!r}; available: {PRESET_WORLDS}")
    return resources.files("fitslam") / "worlds" / f"{name}.json"
