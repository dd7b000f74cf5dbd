import json
import math

import numpy as np
import pytest

import fitslam
from fitslam import simworld
from fitslam.grid import FREE, UNKNOWN_P
from fitslam.planner import Path, plan
from fitslam.simworld import (
    ConfigError,
    MissionState,
    PathBlockedError,
    World,
    WorldConfig,
    current_grids,
    execute_path,
    generate_world,
    initial_spin,
    observe,
)


def tiny_config(**overrides):
    raw = {
        "seed": 42,
        "size_m": 8.0,
        "resolution": 0.2,
        "terrain": {"type": "flat"},
        "obstacles": [],
        "landmarks": {"count": 12, "clusters": 2},
        "robot": {"start_xy_theta": [2.0, 2.0, 0.0], "speed": 0.4},
    }
    raw.update(overrides)
    return WorldConfig.from_dict(raw)


class TestWorldConfig:
    def test_round_trip_via_json(self, tmp_path):
        path = tmp_path / "world.json"
        path.write_text(json.dumps({
            "seed": 7, "size_m": 10.0, "resolution": 0.25,
            "sensors": {"fov_deg": 90.0, "max_depth_m": 4.0},
            "surrogate": {"q": 0.002, "kappa": 0.4},
        }))
        cfg = WorldConfig.from_json(path)
        assert cfg.seed == 7
        assert cfg.sensors.fov == pytest.approx(math.radians(90.0))
        assert cfg.sensors.max_depth == 4.0
        assert cfg.surrogate.kappa == 0.4

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            WorldConfig.from_json(path)

    def test_bad_surrogate_key_rejected(self):
        with pytest.raises(ConfigError):
            WorldConfig.from_dict({"surrogate": {"nope": 1.0}})

    def test_nonpositive_size_rejected(self):
        with pytest.raises(ConfigError):
            WorldConfig.from_dict({"size_m": -5.0})

    def test_presets_all_parse(self):
        for name in fitslam.PRESET_WORLDS:
            cfg = WorldConfig.from_json(fitslam.preset_world_path(name))
            world = generate_world(cfg)
            assert isinstance(world, World)


class TestGenerateWorld:
    def test_same_seed_bit_identical(self):
        a = generate_world(tiny_config())
        b = generate_world(tiny_config())
        assert np.array_equal(a.elevation, b.elevation)
        assert np.array_equal(a.occupied, b.occupied)
        assert len(a.landmarks) == len(b.landmarks)
        for la, lb in zip(a.landmarks, b.landmarks):
            assert np.array_equal(la.position, lb.position)

    def test_different_seed_different_landmarks(self):
        a = generate_world(tiny_config(seed=1))
        b = generate_world(tiny_config(seed=2))
        assert not all(np.array_equal(la.position, lb.position)
                       for la, lb in zip(a.landmarks, b.landmarks))

    def test_obstacle_footprint(self):
        cfg = tiny_config(obstacles=[{"x": 3.0, "y": 3.0, "w": 1.0, "h": 0.6,
                                      "height": 1.5}])
        world = generate_world(cfg)
        i, j = world.spec.world_to_cell(3.5, 3.3)
        assert world.occupied[j, i]
        i, j = world.spec.world_to_cell(1.0, 1.0)
        assert not world.occupied[j, i]

    def test_obstacle_missing_key_rejected(self):
        with pytest.raises(ConfigError):
            generate_world(tiny_config(obstacles=[{"x": 1.0, "y": 1.0, "w": 1.0}]))

    def test_start_outside_boundary_rejected(self):
        with pytest.raises(ConfigError):
            generate_world(tiny_config(robot={"start_xy_theta": [99.0, 2.0, 0.0]}))

    def test_landmarks_not_inside_obstacles(self):
        cfg = tiny_config(obstacles=[{"x": 3.0, "y": 3.0, "w": 1.5, "h": 1.5}],
                          landmarks={"count": 40, "clusters": 4})
        world = generate_world(cfg)
        for lm in world.landmarks:
            x, y = lm.position[:2]
            assert not (3.0 <= x < 4.5 and 3.0 <= y < 4.5)

    def test_unknown_terrain_type_rejected(self):
        with pytest.raises(ConfigError):
            generate_world(tiny_config(terrain={"type": "volcano"}))

    def test_flat_terrain_fully_sensed_scores_one(self):
        world = generate_world(tiny_config())
        state = MissionState.initial(world)
        # Sweep the robot across the map so the lidar covers every cell.
        for x in np.arange(1.0, 8.0, 2.0):
            for y in np.arange(1.0, 8.0, 2.0):
                state.pose = (float(x), float(y), 0.0)
                simworld.sense(world, state)
        trav, _ = current_grids(state)
        known = ~np.isnan(trav.score)
        assert known.all()
        assert np.allclose(trav.score[known], 1.0)


class TestSensing:
    def test_wall_cells_reach_high_probability(self):
        cfg = tiny_config(obstacles=[{"x": 3.0, "y": 1.0, "w": 0.4, "h": 2.0,
                                      "height": 1.5}])
        world = generate_world(cfg)
        state = MissionState.initial(world)
        state.pose = (2.0, 2.0, 0.0)  # facing the wall 1 m ahead
        for _ in range(3):
            simworld.sense(world, state)
        i, j = world.spec.world_to_cell(3.1, 2.0)
        assert state.occ.p[j, i] >= 0.9

    def test_cells_behind_wall_stay_unknown(self):
        cfg = tiny_config(obstacles=[{"x": 3.0, "y": 1.0, "w": 0.4, "h": 2.0,
                                      "height": 1.5}])
        world = generate_world(cfg)
        state = MissionState.initial(world)
        state.pose = (2.0, 2.0, 0.0)
        simworld.sense(world, state)
        i, j = world.spec.world_to_cell(4.5, 2.0)
        assert state.occ.p[j, i] == UNKNOWN_P

    def test_free_cells_marked_low(self):
        world = generate_world(tiny_config())
        state = MissionState.initial(world)
        simworld.sense(world, state)
        i, j = world.spec.world_to_cell(3.0, 2.0)
        assert state.occ.p[j, i] < 0.5

    def test_no_landmarks_in_fov_returns_empty(self):
        cfg = tiny_config(landmarks={"points": [[7.5, 7.5, 0.5]]})
        world = generate_world(cfg)
        state = MissionState.initial(world)
        state.pose = (2.0, 2.0, math.pi)  # looking away
        assert simworld.sense(world, state).size == 0

    def test_landmark_ahead_is_observed(self):
        cfg = tiny_config(landmarks={"points": [[4.0, 2.0, 0.5]]})
        world = generate_world(cfg)
        state = MissionState.initial(world)
        state.pose = (2.0, 2.0, 0.0)
        assert list(simworld.sense(world, state)) == [0]

    def test_observed_cell_never_reads_unknown_again(self):
        world = generate_world(tiny_config())
        state = MissionState.initial(world)
        simworld.sense(world, state)
        observed = state.observed.copy()
        # Re-observing with opposite evidence may cross 0.5 but not equal it.
        for _ in range(5):
            simworld.sense(world, state)
        assert not np.any(state.occ.p[observed] == UNKNOWN_P)


class TestSurrogateCovariance:
    def test_landmark_free_path_trace_increases(self):
        cfg = tiny_config(landmarks={"points": []})
        world = generate_world(cfg)
        state = MissionState.initial(world)
        nav_path = plan_straight_path(world, (2.0, 2.0), (6.0, 2.0))
        trace0 = float(np.trace(state.cov))
        traces = [trace0]
        execute_path(world, state, nav_path, 0.0)
        traces.extend(s.trace_cov for s in state.samples)
        assert all(b >= a - 1e-15 for a, b in zip(traces, traces[1:]))
        assert traces[-1] > trace0

    def test_landmarks_lower_final_trace(self):
        lms = [[4.0 + 0.2 * k, 2.4, 0.6] for k in range(10)]
        base = tiny_config(landmarks={"points": []})
        rich = tiny_config(landmarks={"points": lms})
        final = {}
        for name, cfg in (("bare", base), ("rich", rich)):
            world = generate_world(cfg)
            state = MissionState.initial(world)
            path = plan_straight_path(world, (2.0, 2.0), (6.0, 2.0))
            execute_path(world, state, path, 0.0)
            final[name] = float(np.trace(state.cov))
        assert final["rich"] < final["bare"]

    def test_covariance_stays_symmetric_psd(self):
        cfg = tiny_config(landmarks={"count": 20, "clusters": 3})
        world = generate_world(cfg)
        state = MissionState.initial(world)
        initial_spin(world, state)
        path = plan_straight_path(world, (2.0, 2.0), (6.0, 6.0))
        execute_path(world, state, path, 1.0)
        assert np.allclose(state.cov, state.cov.T)
        assert np.linalg.eigvalsh(state.cov).min() > 0.0

    def test_loop_closure_requires_mature_landmarks(self):
        lms = [[3.0 + 0.1 * k, 2.0, 0.6] for k in range(8)]
        cfg = tiny_config(landmarks={"points": lms},
                          surrogate={"t_lc": 10.0, "l_min": 5, "kappa": 0.5,
                                     "q": 1e-3})
        world = generate_world(cfg)
        state = MissionState.initial(world)
        state.pose = (2.0, 2.0, 0.0)
        observe(world, state)  # first sight registers the landmarks
        assert state.n_loop_closures == 0
        state.clock += 5.0
        observe(world, state)  # still younger than t_lc
        assert state.n_loop_closures == 0
        state.clock += 6.0
        trace_before = float(np.trace(state.cov))
        observe(world, state)  # now mature: one closure
        assert state.n_loop_closures == 1
        # The contraction multiplies cov by kappa before the measurement
        # update, so the trace drops at least that much.
        assert float(np.trace(state.cov)) < 0.5 * trace_before + 1e-12

    def test_loop_closure_resets_first_seen(self):
        lms = [[3.0 + 0.1 * k, 2.0, 0.6] for k in range(8)]
        cfg = tiny_config(landmarks={"points": lms},
                          surrogate={"t_lc": 10.0, "l_min": 5})
        world = generate_world(cfg)
        state = MissionState.initial(world)
        state.pose = (2.0, 2.0, 0.0)
        observe(world, state)
        state.clock += 11.0
        observe(world, state)
        assert state.n_loop_closures == 1
        observe(world, state)  # immediately again: landmarks are young now
        assert state.n_loop_closures == 1


class TestExecutePath:
    def test_blocked_cell_aborts(self):
        world = generate_world(tiny_config())
        state = MissionState.initial(world)
        _, nav = current_grids(state)
        start = world.spec.world_to_cell(2.0, 2.0)
        cells = [start, (start[0] + 1, start[1])]
        nav.state[cells[1][1], cells[1][0]] = 0  # BLOCKED
        with pytest.raises(PathBlockedError):
            execute_path(world, state, Path(cells, 0.2), 0.0, nav=nav)

    def test_clock_and_distance_advance(self):
        world = generate_world(tiny_config())
        state = MissionState.initial(world)
        path = plan_straight_path(world, (2.0, 2.0), (4.0, 2.0))
        t0, d0 = state.clock, state.distance
        execute_path(world, state, path, 0.0)
        assert state.distance == pytest.approx(d0 + path.length_m)
        assert state.clock >= t0 + path.length_m / world.config.robot.speed

    def test_pose_ends_at_goal_with_theta_star(self):
        world = generate_world(tiny_config())
        state = MissionState.initial(world)
        path = plan_straight_path(world, (2.0, 2.0), (4.0, 4.0))
        execute_path(world, state, path, 1.25)
        gx, gy = world.spec.cell_to_world(*path.cells[-1])
        assert state.pose == pytest.approx((gx, gy, 1.25))


class TestMetrics:
    def test_initial_spin_covers_disk(self):
        world = generate_world(tiny_config())
        state = MissionState.initial(world)
        initial_spin(world, state)
        assert len(state.samples) == 1
        assert state.samples[0].pct_unexplored < 100.0
        assert state.samples[0].t == pytest.approx(2 * math.pi)

    def test_pct_unexplored_monotone(self):
        world = generate_world(tiny_config(seed=5))
        state = MissionState.initial(world)
        initial_spin(world, state)
        path = plan_straight_path(world, (2.0, 2.0), (6.0, 6.0))
        execute_path(world, state, path, 2.0)
        pcts = [s.pct_unexplored for s in state.samples]
        assert all(b <= a for a, b in zip(pcts, pcts[1:]))

    def test_pct_tracks_unknown_inside_boundary(self):
        world = generate_world(tiny_config())
        state = MissionState.initial(world)
        initial_spin(world, state)
        inside = world.boundary_mask
        unknown = state.occ.unknown_mask()
        expected = 100.0 * (unknown & inside).sum() / inside.sum()
        assert state.samples[-1].pct_unexplored == pytest.approx(expected)


def plan_straight_path(world, start_xy, goal_xy):
    """Plan on a fully-Free grid of the world's shape (flat tiny worlds)."""
    from fitslam.grid import BinaryTraversabilityGrid
    spec = world.spec
    nav = BinaryTraversabilityGrid(
        spec, np.full((spec.height, spec.width), FREE, dtype=np.int8))
    return plan(nav, spec.world_to_cell(*start_xy), spec.world_to_cell(*goal_xy))
