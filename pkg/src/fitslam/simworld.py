"""Synthetic world, robot motion, sensing and the surrogate localization model.

The simulator replaces a full SLAM backend with a covariance surrogate:
dead-reckoning noise grows the 6x6 pose covariance with distance, bearing
observations of landmarks shrink it through their Fisher information, and
re-observing long-known landmarks triggers a loop-closure contraction. The
true pose drives sensing, so the strategy comparison is not confounded by
map corruption.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import fisher, traversability
from .fisher import CameraPose, Landmark
from .frontier import Blacklist, ExplorationBoundary
from .grid import GridSpec, OccupancyGrid, UNKNOWN_P
from .planner import Path
from .traversability import TerrainStatsGrid, TraversabilityParams

LOG_ODDS_STEP = math.log(0.8 / 0.2)  # +- per hit / miss observation
P_CLAMP = (0.02, 0.98)
ROTATION_RATE = 1.0  # rad/s


class ConfigError(ValueError):
    """Malformed world or experiment configuration."""


class PathBlockedError(RuntimeError):
    """A path cell turned out non-traversable during execution."""


@dataclass
class SensorConfig:
    fov: float = math.radians(87.0)
    max_depth: float = 5.0
    lidar_radius: float = 8.0
    ray_step: float = math.radians(1.5)  # angular spacing of sensing rays


@dataclass
class SurrogateConfig:
    q: float = 1e-3        # covariance growth per meter traveled
    kappa: float = 0.5     # loop-closure contraction factor
    t_lc: float = 60.0     # s; landmark age before it can close a loop
    l_min: int = 5         # landmarks required to close a loop


@dataclass
class RobotConfig:
    start: tuple = (2.0, 2.0, 0.0)  # x, y, theta
    speed: float = 0.4              # m/s


@dataclass
class WorldConfig:
    seed: int = 0
    size_m: float = 20.0
    resolution: float = 0.1
    terrain: dict = field(default_factory=lambda: {"type": "flat"})
    obstacles: list = field(default_factory=list)
    landmarks: dict = field(default_factory=lambda: {"count": 60, "clusters": 5})
    sensors: SensorConfig = field(default_factory=SensorConfig)
    robot: RobotConfig = field(default_factory=RobotConfig)
    surrogate: SurrogateConfig = field(default_factory=SurrogateConfig)

    @classmethod
    def from_dict(cls, raw: dict) -> "WorldConfig":
        try:
            sensors = raw.get("sensors", {})
            robot = raw.get("robot", {})
            cfg = cls(
                seed=int(raw.get("seed", 0)),
                size_m=float(raw.get("size_m", 20.0)),
                resolution=float(raw.get("resolution", 0.1)),
                terrain=dict(raw.get("terrain", {"type": "flat"})),
                obstacles=list(raw.get("obstacles", [])),
                landmarks=dict(raw.get("landmarks", {"count": 60, "clusters": 5})),
                sensors=SensorConfig(
                    fov=math.radians(float(sensors.get("fov_deg", 87.0))),
                    max_depth=float(sensors.get("max_depth_m", 5.0)),
                    lidar_radius=float(sensors.get("lidar_radius_m", 8.0)),
                    ray_step=math.radians(float(sensors.get("ray_step_deg", 1.5))),
                ),
                robot=RobotConfig(
                    start=tuple(robot.get("start_xy_theta", (2.0, 2.0, 0.0))),
                    speed=float(robot.get("speed", 0.4)),
                ),
                surrogate=SurrogateConfig(**raw.get("surrogate", {})),
            )
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"bad world config: {exc}") from exc
        if cfg.size_m <= 0 or cfg.resolution <= 0:
            raise ConfigError("size_m and resolution must be > 0")
        return cfg

    @classmethod
    def from_json(cls, path) -> "WorldConfig":
        with open(path) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(raw)


@dataclass
class World:
    config: WorldConfig
    spec: GridSpec
    elevation: np.ndarray      # per-cell terrain height at the cell center
    occupied: np.ndarray       # bool, true-obstacle footprint
    landmarks: list            # Landmark
    boundary: ExplorationBoundary

    def terrain_z(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return _terrain_z(self.config, np.asarray(x, float), np.asarray(y, float))

    @property
    def landmark_positions(self) -> np.ndarray:
        if not hasattr(self, "_lm_pos"):
            self._lm_pos = np.array([lm.position for lm in self.landmarks]).reshape(-1, 3)
        return self._lm_pos

    @property
    def centers(self) -> tuple:
        if not hasattr(self, "_centers"):
            self._centers = self.spec.cell_centers()
        return self._centers

    @property
    def boundary_mask(self) -> np.ndarray:
        if not hasattr(self, "_bmask"):
            xs, ys = self.centers
            b = self.boundary
            self._bmask = ((xs >= b.x_min) & (xs <= b.x_max)
                           & (ys >= b.y_min) & (ys <= b.y_max))
        return self._bmask


def _terrain_z(config: WorldConfig, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic terrain height plus obstacle tops, deterministic in the seed."""
    t = config.terrain
    kind = t.get("type", "flat")
    z = np.zeros_like(x, dtype=float)
    if kind in ("ramp", "ramp_bumps"):
        z = z + float(t.get("grade", 0.05)) * x
    if kind in ("bumps", "ramp_bumps"):
        rng = np.random.default_rng(config.seed ^ 0x5EED)
        n = int(t.get("n_bumps", 5))
        amp = float(t.get("bump_amp", 0.3))
        sigma = float(t.get("bump_sigma", 2.5))
        centers = rng.uniform(0.0, config.size_m, size=(n, 2))
        for cx, cy in centers:
            z = z + amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma ** 2))
    elif kind not in ("flat", "ramp"):
        raise ConfigError(f"unknown terrain type {kind!r}")
    for ob in config.obstacles:
        inside = ((x >= ob["x"]) & (x < ob["x"] + ob["w"])
                  & (y >= ob["y"]) & (y < ob["y"] + ob["h"]))
        # Rough tops keep thresholding from declaring obstacle roofs navigable.
        rough = 0.08 * np.sin(37.0 * x + 1.3) * np.sin(41.0 * y + 0.7)
        z = np.where(inside, float(ob.get("height", 1.5)) + rough, z)
    return z


def generate_world(config: WorldConfig) -> World:
    """Build the deterministic world implied by the config and its seed."""
    for ob in config.obstacles:
        for key in ("x", "y", "w", "h"):
            if key not in ob:
                raise ConfigError(f"obstacle missing {key!r}: {ob}")

    n = int(round(config.size_m / config.resolution))
    spec = GridSpec(0.0, 0.0, config.resolution, n, n)
    xs, ys = spec.cell_centers()
    elevation = _terrain_z(config, xs, ys)

    occupied = np.zeros((n, n), dtype=bool)
    for ob in config.obstacles:
        occupied |= ((xs >= ob["x"]) & (xs < ob["x"] + ob["w"])
                     & (ys >= ob["y"]) & (ys < ob["y"] + ob["h"]))

    landmarks = _place_landmarks(config)
    boundary = ExplorationBoundary(0.0, 0.0, config.size_m, config.size_m)
    sx, sy, _ = config.robot.start
    if not boundary.contains(sx, sy):
        raise ConfigError("robot start must lie inside the exploration boundary")
    return World(config, spec, elevation, occupied, landmarks, boundary)


def _place_landmarks(config: WorldConfig) -> list:
    lm_cfg = config.landmarks
    if "points" in lm_cfg:
        return [Landmark(np.asarray(p, float)) for p in lm_cfg["points"]]
    rng = np.random.default_rng(config.seed ^ 0x1A4D)
    count = int(lm_cfg.get("count", 60))
    n_clusters = max(1, int(lm_cfg.get("clusters", 5)))

    centers = []
    for ob in config.obstacles:
        # Midpoints of the four faces are natural feature-rich spots.
        cx, cy = ob["x"] + ob["w"] / 2, ob["y"] + ob["h"] / 2
        centers.extend([(ob["x"] - 0.3, cy), (ob["x"] + ob["w"] + 0.3, cy),
                        (cx, ob["y"] - 0.3), (cx, ob["y"] + ob["h"] + 0.3)])
    while len(centers) < n_clusters:
        centers.append(tuple(rng.uniform(0.1 * config.size_m, 0.9 * config.size_m, 2)))
    idx = rng.choice(len(centers), size=n_clusters, replace=False)
    chosen = [centers[k] for k in idx]

    landmarks = []
    per = count // n_clusters
    extra = count - per * n_clusters
    for k, (cx, cy) in enumerate(chosen):
        m = per + (1 if k < extra else 0)
        for _ in range(m):
            for _attempt in range(20):
                x = cx + rng.normal(0.0, 0.6)
                y = cy + rng.normal(0.0, 0.6)
                x = float(np.clip(x, 0.05, config.size_m - 0.05))
                y = float(np.clip(y, 0.05, config.size_m - 0.05))
                if not _inside_obstacle(config, x, y):
                    break
            z = float(_terrain_z(config, np.array(x), np.array(y))) + rng.uniform(0.2, 1.0)
            landmarks.append(Landmark(np.array([x, y, z])))
    return landmarks


def _inside_obstacle(config: WorldConfig, x: float, y: float) -> bool:
    return any(ob["x"] <= x < ob["x"] + ob["w"] and ob["y"] <= y < ob["y"] + ob["h"]
               for ob in config.obstacles)


@dataclass
class MetricSample:
    t: float
    trace_cov: float
    pct_unexplored: float
    n_loop_closures: int
    distance: float


@dataclass
class MissionState:
    world: World
    occ: OccupancyGrid
    log_odds: np.ndarray
    stats: TerrainStatsGrid
    sampled: np.ndarray          # bool, cells whose terrain points are in
    observed: np.ndarray         # bool, occupancy cells updated at least once
    unknown_inside: int          # running count of unobserved cells in-boundary
    pose: tuple                  # (x, y, theta) true pose
    cov: np.ndarray              # 6x6 localization covariance
    blacklist: Blacklist = field(default_factory=Blacklist)
    clock: float = 0.0
    distance: float = 0.0
    n_loop_closures: int = 0
    first_seen: dict = field(default_factory=dict)  # landmark idx -> first obs time
    samples: list = field(default_factory=list)
    trav_params: TraversabilityParams = field(default_factory=TraversabilityParams)

    @classmethod
    def initial(cls, world: World) -> "MissionState":
        spec = world.spec
        shape = (spec.height, spec.width)
        return cls(
            world=world,
            occ=OccupancyGrid.unknown(spec),
            log_odds=np.zeros(shape),
            stats=TerrainStatsGrid(spec),
            sampled=np.zeros(shape, dtype=bool),
            observed=np.zeros(shape, dtype=bool),
            unknown_inside=int(world.boundary_mask.sum()),
            pose=tuple(world.config.robot.start),
            cov=1e-4 * np.eye(6),
        )


# Fractions of a cell at which synthetic terrain points are sampled; five
# points satisfy the plane-fit minimum in one pass.
_CELL_SAMPLES = np.array([[0.5, 0.5], [0.2, 0.2], [0.2, 0.8], [0.8, 0.2], [0.8, 0.8]])


def sense(world: World, state: MissionState) -> np.ndarray:
    """One sensing step at the current pose.

    Terrain points inside the lidar radius feed the traversability statistics,
    the camera wedge updates occupancy by ray casting against the true
    obstacles, and the indices of landmarks inside the camera frustum are
    returned.
    """
    _sense_terrain(world, state)
    _sense_occupancy(world, state)
    return _visible_landmarks(world, state.pose)


def _sense_terrain(world: World, state: MissionState) -> None:
    spec = world.spec
    px, py, _ = state.pose
    r = world.config.sensors.lidar_radius
    i0 = max(0, int((px - r - spec.origin_x) / spec.resolution))
    i1 = min(spec.width, int((px + r - spec.origin_x) / spec.resolution) + 2)
    j0 = max(0, int((py - r - spec.origin_y) / spec.resolution))
    j1 = min(spec.height, int((py + r - spec.origin_y) / spec.resolution) + 2)
    xs, ys = world.centers
    win = np.s_[j0:j1, i0:i1]
    in_range = (xs[win] - px) ** 2 + (ys[win] - py) ** 2 <= r * r
    fresh = in_range & ~state.sampled[win]
    if not fresh.any():
        return
    jj, ii = np.nonzero(fresh)
    cx = xs[win][jj, ii]
    cy = ys[win][jj, ii]
    corner_x = cx - 0.5 * spec.resolution
    corner_y = cy - 0.5 * spec.resolution
    pts_x = (corner_x[:, None] + _CELL_SAMPLES[None, :, 0] * spec.resolution).ravel()
    pts_y = (corner_y[:, None] + _CELL_SAMPLES[None, :, 1] * spec.resolution).ravel()
    pts_z = world.terrain_z(pts_x, pts_y)
    state.stats.accumulate(np.column_stack([pts_x, pts_y, pts_z]))
    state.sampled[win][jj, ii] = True


def _sense_occupancy(world: World, state: MissionState) -> None:
    spec = world.spec
    cfg = world.config.sensors
    px, py, theta = state.pose
    n_rays = max(2, int(round(cfg.fov / cfg.ray_step)) + 1)
    angles = theta + np.linspace(-cfg.fov / 2, cfg.fov / 2, n_rays)
    dr = spec.resolution / 2
    ranges = np.arange(dr, cfg.max_depth + dr / 2, dr)
    x = px + np.cos(angles)[:, None] * ranges[None, :]
    y = py + np.sin(angles)[:, None] * ranges[None, :]
    i = np.floor((x - spec.origin_x) / spec.resolution).astype(int)
    j = np.floor((y - spec.origin_y) / spec.resolution).astype(int)
    inside = (i >= 0) & (i < spec.width) & (j >= 0) & (j < spec.height)
    hit = np.zeros_like(inside)
    hit[inside] = world.occupied[j[inside], i[inside]]
    hit &= inside
    # Index of the first hit sample per ray; past it the ray is blocked.
    first_hit = np.where(hit.any(axis=1), hit.argmax(axis=1), ranges.size)
    sample_idx = np.arange(ranges.size)[None, :]
    before_hit = sample_idx < first_hit[:, None]
    at_hit = sample_idx == first_hit[:, None]

    free_lin = np.unique(j[before_hit & inside] * spec.width + i[before_hit & inside])
    hit_lin = np.unique(j[at_hit & inside] * spec.width + i[at_hit & inside])
    free_lin = np.setdiff1d(free_lin, hit_lin, assume_unique=True)

    lo = state.log_odds.ravel()
    lo[free_lin] -= LOG_ODDS_STEP
    lo[hit_lin] += LOG_ODDS_STEP
    touched = np.concatenate([free_lin, hit_lin])
    if touched.size:
        p = 1.0 / (1.0 + np.exp(-lo[touched]))
        p = np.clip(p, P_CLAMP[0], P_CLAMP[1])
        # An observed cell must not read as Unknown (exactly 0.5) again.
        p = np.where(p == UNKNOWN_P, UNKNOWN_P + 1e-9, p)
        state.occ.p.ravel()[touched] = p
        obs = state.observed.ravel()
        new = touched[~obs[touched]]
        obs[new] = True
        state.unknown_inside -= int(world.boundary_mask.ravel()[new].sum())


def _visible_landmarks(world: World, pose: tuple) -> np.ndarray:
    if not world.landmarks:
        return np.zeros(0, dtype=int)
    cfg = world.config.sensors
    px, py, theta = pose
    pos = world.landmark_positions
    d = pos - np.array([px, py, fisher.DEFAULT_SENSOR_HEIGHT])
    fwd = np.array([math.cos(theta), math.sin(theta), 0.0])
    depth = d @ fwd
    norm = np.linalg.norm(d, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos_ang = np.where(norm > 0, depth / norm, -1.0)
    ok = (depth > 0) & (norm <= cfg.max_depth) & (norm > 1e-9)
    ok &= np.arccos(np.clip(cos_ang, -1.0, 1.0)) <= cfg.fov / 2 + 1e-12
    return np.nonzero(ok)[0]


def _camera_pose(world: World, pose: tuple) -> CameraPose:
    cfg = world.config.sensors
    return CameraPose.from_planar(pose[0], pose[1], pose[2],
                                  fov=cfg.fov, max_depth=cfg.max_depth)


_MOTION_DIRS = np.diag([1.0, 1.0, 0.1, 0.1, 0.1, 1.0])  # translation-dominant noise


def _measurement_update(world: World, state: MissionState, observed: np.ndarray) -> None:
    if observed.size == 0:
        return
    pose = _camera_pose(world, state.pose)
    info = np.zeros((6, 6))
    for k in observed:
        info += fisher.landmark_fim(pose, world.landmarks[int(k)])
    if not info.any():
        return
    cov = np.linalg.inv(np.linalg.inv(state.cov) + info)
    state.cov = 0.5 * (cov + cov.T)


def _loop_closure_check(state: MissionState, observed: np.ndarray) -> None:
    sur = state.world.config.surrogate
    mature = [int(k) for k in observed
              if state.first_seen.get(int(k), math.inf) <= state.clock - sur.t_lc]
    for k in observed:
        state.first_seen.setdefault(int(k), state.clock)
    if len(mature) >= sur.l_min:
        state.cov = sur.kappa * state.cov
        state.n_loop_closures += 1
        # Reset the triggering landmarks so one revisit closes one loop.
        for k in mature:
            state.first_seen[k] = state.clock


def observe(world: World, state: MissionState) -> None:
    """Sense, apply the measurement update and check for loop closures."""
    observed = sense(world, state)
    _measurement_update(world, state, observed)
    _loop_closure_check(state, observed)


def initial_spin(world: World, state: MissionState) -> None:
    """Turn in place once so the robot starts with a full disk of terrain data."""
    x, y, theta0 = state.pose
    n = int(math.ceil(2 * math.pi / (world.config.sensors.fov / 2)))
    for k in range(n):
        state.pose = (x, y, theta0 + k * 2 * math.pi / n)
        observe(world, state)
    state.pose = (x, y, theta0)
    state.clock += 2 * math.pi / ROTATION_RATE
    record_metrics(state)


def execute_path(world: World, state: MissionState, path: Path, theta_star: float,
                 nav=None) -> None:
    """Drive the path cell by cell, then rotate to the arrival orientation.

    Each step grows the covariance with distance, senses, folds observed
    landmark information back into the covariance and checks loop closures.
    A cell found non-traversable in `nav` aborts with PathBlockedError.
    """
    spec = world.spec
    sur = world.config.surrogate
    speed = world.config.robot.speed
    cells = path.cells
    for prev, cell in zip(cells, cells[1:]):
        if nav is not None and not nav.is_free(*cell):
            raise PathBlockedError(f"path cell {cell} is not traversable")
        diagonal = prev[0] != cell[0] and prev[1] != cell[1]
        dd = spec.resolution * (math.sqrt(2.0) if diagonal else 1.0)
        state.cov = state.cov + sur.q * dd * _MOTION_DIRS
        x, y = spec.cell_to_world(*cell)
        state.pose = (x, y, math.atan2(cell[1] - prev[1], cell[0] - prev[0]))
        state.distance += dd
        state.clock += dd / speed
        observe(world, state)
        record_metrics(state)
    # Arrival: turn toward the chosen orientation and take a final look.
    x, y, theta = state.pose
    dth = abs(_wrap(theta_star - theta))
    state.clock += dth / ROTATION_RATE
    state.pose = (x, y, theta_star)
    observe(world, state)
    record_metrics(state)


def _wrap(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


def record_metrics(state: MissionState) -> MetricSample:
    """Append the current (time, covariance trace, coverage) sample."""
    world = state.world
    pct = 100.0 * state.unknown_inside / world.boundary_mask.sum()
    sample = MetricSample(
        t=state.clock,
        trace_cov=float(np.trace(state.cov)),
        pct_unexplored=float(pct),
        n_loop_closures=state.n_loop_closures,
        distance=state.distance,
    )
    state.samples.append(sample)
    return sample


DEFAULT_TRAV_THRESHOLD = 0.3


def current_grids(state: MissionState, threshold_value: float = DEFAULT_TRAV_THRESHOLD):
    """Score and threshold the traversability seen so far."""
    trav = state.stats.score_cells(state.trav_params)
    nav = traversability.threshold(trav, threshold_value)
    return trav, nav
