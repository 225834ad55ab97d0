import math

import numpy as np
import pytest

from tracksim.geometry import (
    FovParams,
    NavCommand,
    Occluder,
    RobotConfig,
    TargetState,
    WorldState,
    effective_fov_area,
    effective_fov_contains,
    effective_fov_mask,
    fov_contains,
    fov_mask,
    step_world,
    wrap_angle,
)

FOV = FovParams(alpha=math.pi / 3, radius=4.0)


def world_with(occluders=(), target=(5.0, 5.0), robot=None):
    return WorldState(
        robot=robot or RobotConfig(0.0, 0.0, 0.0, 0.0),
        target=TargetState(target),
        occluders=tuple(occluders),
    )


def segments_intersect_oracle(p0, p1, q0, q1):
    """Brute-force proper-intersection test via parametric solve."""
    p0, p1, q0, q1 = map(np.asarray, (p0, p1, q0, q1))
    d = p1 - p0
    e = q1 - q0
    denom = d[0] * e[1] - d[1] * e[0]
    if abs(denom) < 1e-14:
        return False
    w = q0 - p0
    t = (w[0] * e[1] - w[1] * e[0]) / denom
    u = (w[0] * d[1] - w[1] * d[0]) / denom
    return 0.0 < t < 1.0 and 0.0 < u < 1.0


class TestFovContains:
    def test_on_axis_half_range(self):
        q = RobotConfig(0, 0, 0, 0)
        assert fov_contains(q, FOV, (2.0, 0.0))

    def test_behind_sensor(self):
        q = RobotConfig(0, 0, 0, 0)
        assert not fov_contains(q, FOV, (-1.0, 0.0))

    def test_bearing_inside_half_angle(self):
        # bearing 0.4 rad < alpha/2 ~ 0.5236 and range 2 < 4
        q = RobotConfig(0, 0, 0, 0)
        p = (2 * math.cos(0.4), 2 * math.sin(0.4))
        bearing = math.atan2(p[1], p[0])
        assert bearing < FOV.alpha / 2
        assert fov_contains(q, FOV, p)

    def test_outside_range(self):
        q = RobotConfig(0, 0, 0, 0)
        assert not fov_contains(q, FOV, (4.5, 0.0))

    def test_pan_shifts_cone(self):
        q = RobotConfig(0, 0, 0, math.pi / 2)
        assert fov_contains(q, FOV, (0.0, 2.0))
        assert not fov_contains(q, FOV, (2.0, 0.0))

    def test_rigid_transform_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            qx, qy, heading, pan = rng.uniform(-3, 3, 4)
            pan = float(np.clip(pan, -1.2, 1.2))
            p = rng.uniform(-5, 5, 2)
            q = RobotConfig(qx, qy, heading, pan)
            base = fov_contains(q, FOV, p)
            # apply a random rotation + translation jointly
            ang = rng.uniform(-math.pi, math.pi)
            shift = rng.uniform(-4, 4, 2)
            rot = np.array([[math.cos(ang), -math.sin(ang)],
                            [math.sin(ang), math.cos(ang)]])
            q2 = RobotConfig(*(rot @ [qx, qy] + shift), heading + ang, pan)
            p2 = rot @ p + shift
            assert fov_contains(q2, FOV, p2) == base

    def test_mask_matches_scalar(self):
        rng = np.random.default_rng(3)
        q = RobotConfig(0.5, -0.25, 0.3, -0.2)
        pts = rng.uniform(-5, 5, size=(500, 2))
        mask = fov_mask(q, FOV, pts)
        for i in range(len(pts)):
            assert mask[i] == fov_contains(q, FOV, pts[i])


class TestEffectiveFov:
    def test_no_occluders(self):
        w = world_with()
        q = w.robot
        assert effective_fov_contains(w, q, FOV, (2.0, 0.0))

    def test_occluder_blocks_midpoint(self):
        occ = Occluder("wall", (1.0, -1.0), (1.0, 1.0))
        w = world_with([occ])
        q = w.robot
        p = (2.0, 0.0)
        assert segments_intersect_oracle((0, 0), p, occ.a, occ.b)
        assert fov_contains(q, FOV, p)
        assert not effective_fov_contains(w, q, FOV, p)

    def test_occluder_outside_sector(self):
        occ = Occluder("wall", (-1.0, -1.0), (-1.0, 1.0))
        w = world_with([occ])
        q = w.robot
        p = (2.0, 0.0)
        assert not segments_intersect_oracle((0, 0), p, occ.a, occ.b)
        assert effective_fov_contains(w, q, FOV, p)

    def test_shadowing_only_removes_visibility(self):
        rng = np.random.default_rng(11)
        occ = Occluder("wall", (1.5, -0.7), (1.2, 0.9))
        w = world_with([occ])
        q = w.robot
        for _ in range(500):
            p = rng.uniform(-5, 5, 2)
            if effective_fov_contains(w, q, FOV, p):
                assert fov_contains(q, FOV, p)

    def test_mask_matches_scalar_with_occluders(self):
        rng = np.random.default_rng(5)
        occ1 = Occluder("a", (1.0, -2.0), (1.5, 2.0))
        occ2 = Occluder("b", (2.5, 0.0), (2.5, 3.0))
        w = world_with([occ1, occ2])
        q = RobotConfig(-0.5, 0.25, 0.2, 0.1)
        pts = rng.uniform(-5, 5, size=(400, 2))
        mask = effective_fov_mask(w, q, FOV, pts)
        for i in range(len(pts)):
            assert mask[i] == effective_fov_contains(w, q, FOV, pts[i])

    def test_area_without_occluders_is_sector_area(self):
        w = world_with()
        area = effective_fov_area(w, w.robot, FOV)
        assert area == pytest.approx(0.5 * FOV.alpha * FOV.radius ** 2)

    def test_area_with_blocking_wall_matches_quadrature_oracle(self):
        occ = Occluder("wall", (2.0, -3.0), (2.0, 3.0))
        w = world_with([occ])
        q = w.robot
        # wall at x=2 fully crosses the sector: visible region is the
        # triangle-ish slice r <= 2/cos(phi)
        phis = np.linspace(-FOV.alpha / 2, FOV.alpha / 2, 20001)
        r = np.minimum(FOV.radius, 2.0 / np.cos(phis))
        oracle = np.trapezoid(0.5 * r * r, phis)
        area = effective_fov_area(w, q, FOV, n_rays=2048)
        assert area == pytest.approx(oracle, rel=1e-3)


class TestStepWorld:
    def test_fixed_point(self):
        w = world_with()
        cmd = NavCommand(w.robot)
        w2 = step_world(w, cmd, 0.1)
        assert w2.robot == w.robot
        assert w2.time == pytest.approx(0.1)

    def test_speed_saturation(self):
        w = world_with()
        cmd = NavCommand(RobotConfig(10.0, 0.0, 0.0, 0.0), max_speed=1.0)
        w2 = step_world(w, cmd, 1.0)
        assert w2.robot.x == pytest.approx(1.0)
        assert w2.robot.y == pytest.approx(0.0)

    def test_turn_rate_saturation(self):
        w = world_with()
        cmd = NavCommand(RobotConfig(0.0, 0.0, 1.0, 0.0), max_turn_rate=0.5)
        w2 = step_world(w, cmd, 1.0)
        assert w2.robot.heading == pytest.approx(0.5)

    def test_rejects_bad_dt(self):
        w = world_with()
        cmd = NavCommand(w.robot)
        with pytest.raises(ValueError):
            step_world(w, cmd, 0.0)
        with pytest.raises(ValueError):
            step_world(w, cmd, float("nan"))
        with pytest.raises(ValueError):
            step_world(w, cmd, float("inf"))

    def test_target_advances_by_velocity(self):
        w = WorldState(robot=RobotConfig(0, 0, 0, 0),
                       target=TargetState((1.0, 1.0), velocity=(0.5, -0.25)))
        w2 = step_world(w, NavCommand(w.robot), 0.2)
        assert w2.target.position[0] == pytest.approx(1.1)
        assert w2.target.position[1] == pytest.approx(0.95)

    def test_deterministic(self):
        w = world_with(target=(2.0, 1.0))
        cmd = NavCommand(RobotConfig(3.0, -2.0, 1.2, 0.4))
        a = step_world(w, cmd, 0.1)
        b = step_world(w, cmd, 0.1)
        assert a == b

    def test_pan_clamped_to_limit(self):
        w = world_with()
        cmd = NavCommand(RobotConfig(0, 0, 0, 3.0), max_turn_rate=100.0)
        w2 = step_world(w, cmd, 1.0, pan_limit=math.pi / 2)
        assert w2.robot.pan == pytest.approx(math.pi / 2)

    def test_occluder_inflation_blocks_entry(self):
        occ = Occluder("wall", (1.0, -1.0), (1.0, 1.0))
        w = world_with([occ])
        cmd = NavCommand(RobotConfig(1.0, 0.0, 0.0, 0.0), max_speed=5.0)
        w2 = step_world(w, cmd, 1.0, occluder_inflation=0.3)
        assert w2.robot.x == pytest.approx(0.0)  # would end inside the margin


def test_wrap_angle_range():
    for a in np.linspace(-12, 12, 1001):
        w = wrap_angle(float(a))
        assert -math.pi < w <= math.pi
        assert math.cos(w) == pytest.approx(math.cos(a), abs=1e-9)
        assert math.sin(w) == pytest.approx(math.sin(a), abs=1e-9)
