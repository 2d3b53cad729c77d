import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smartcloud.apps.mapper import (
    CELL_FREE,
    CELL_OCCUPIED,
    CELL_UNKNOWN,
    L_FREE,
    L_MAX,
    L_MIN,
    L_OCC,
    LaserScan2D,
    MapperError,
    OccupancyGrid,
    Pose2D,
    PoseOutOfBounds,
    bresenham,
    map_entropy,
    normalize_angle,
    occupancy_update,
)

angles = st.floats(min_value=-50.0, max_value=50.0, allow_nan=False)


@given(angles)
def test_normalize_angle_range(theta):
    out = normalize_angle(theta)
    assert -math.pi < out <= math.pi


@given(angles, st.integers(min_value=-5, max_value=5))
def test_normalize_angle_periodic(theta, k):
    a = normalize_angle(theta)
    b = normalize_angle(theta + 2.0 * math.pi * k)
    assert abs(a - b) < 1e-9


def test_pose_theta_normalized_on_build():
    pose = Pose2D(1.0, 2.0, 3.0 * math.pi)
    assert abs(pose.theta - math.pi) < 1e-12


def test_pose_wire_round_trip():
    pose = Pose2D(1.5, -2.25, 0.75)
    assert Pose2D.from_wire(pose.to_wire()) == pose


# ---- scans ------------------------------------------------------------------


def make_scan(ranges, angle_min=0.0, angle_increment=math.pi / 180.0,
              range_min=0.05, range_max=15.0):
    angle_max = angle_min + (len(ranges) - 1) * angle_increment
    return LaserScan2D(angle_min, angle_max, angle_increment, range_min, range_max,
                       tuple(ranges))


def test_scan_length_invariant_enforced():
    with pytest.raises(MapperError):
        LaserScan2D(0.0, 1.0, 0.1, 0.05, 10.0, (1.0, 2.0))


def test_scan_is_return_boundaries():
    scan = make_scan([1.0], range_min=0.5, range_max=2.0)
    assert scan.is_return(0.5) and scan.is_return(2.0)
    assert not scan.is_return(0.49)
    assert not scan.is_return(2.01)
    assert not scan.is_return(math.inf)
    assert not scan.is_return(math.nan)


def test_scan_wire_round_trip_maps_nonfinite_to_null():
    scan = make_scan([1.0, math.inf, math.nan, 3.5])
    wire = scan.to_wire()
    assert wire["ranges"][1] is None and wire["ranges"][2] is None
    back = LaserScan2D.from_wire(wire)
    assert back.ranges[0] == 1.0 and back.ranges[3] == 3.5
    assert math.isnan(back.ranges[1]) and math.isnan(back.ranges[2])


# ---- bresenham ---------------------------------------------------------------

coords = st.integers(min_value=-30, max_value=30)


@given(coords, coords, coords, coords)
def test_bresenham_endpoints_connectivity_monotone(x0, y0, x1, y1):
    pts = list(bresenham(x0, y0, x1, y1))
    assert pts[0] == (x0, y0) and pts[-1] == (x1, y1)
    assert len(pts) == max(abs(x1 - x0), abs(y1 - y0)) + 1
    assert len(set(pts)) == len(pts)
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        assert max(abs(bx - ax), abs(by - ay)) == 1  # 8-connected single steps
        assert (bx - ax) * (x1 - x0) >= 0 and (by - ay) * (y1 - y0) >= 0


@given(coords, coords, coords, coords)
def test_bresenham_stays_near_ideal_line(x0, y0, x1, y1):
    # every visited cell is within half a cell of the continuous segment
    dx, dy = x1 - x0, y1 - y0
    length_sq = dx * dx + dy * dy
    for x, y in bresenham(x0, y0, x1, y1):
        if length_sq == 0:
            dist = math.hypot(x - x0, y - y0)
        else:
            t = max(0.0, min(1.0, ((x - x0) * dx + (y - y0) * dy) / length_sq))
            dist = math.hypot(x - (x0 + t * dx), y - (y0 + t * dy))
        assert dist <= 0.5 * math.sqrt(2.0) + 1e-9


# ---- occupancy updates --------------------------------------------------------


def test_single_beam_hand_trace():
    # pose cell (0,0); beam along +x hits at 10 m: cells 1..9 free, 10 occupied
    grid = OccupancyGrid.from_extent(0.0, 0.0, 12.0, 12.0, 1.0)
    pose = Pose2D(0.5, 0.5, 0.0)
    scan = make_scan([10.0], angle_min=0.0, range_max=12.0)
    occupancy_update(grid, pose, scan)
    assert grid.cells[0, 0] == 0.0  # robot cell untouched
    for cx in range(1, 10):
        assert grid.cells[0, cx] == pytest.approx(L_FREE)
    assert grid.cells[0, 10] == pytest.approx(L_OCC)
    assert grid.cells[0, 11] == 0.0


def test_no_return_frees_to_range_max():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 12.0, 12.0, 1.0)
    pose = Pose2D(0.5, 0.5, 0.0)
    scan = make_scan([math.inf], angle_min=0.0, range_max=6.0)
    occupancy_update(grid, pose, scan)
    for cx in range(1, 7):
        assert grid.cells[0, cx] == pytest.approx(L_FREE)
    assert not np.any(grid.cells > 0.0)


def test_too_close_beam_is_skipped():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 12.0, 12.0, 1.0)
    pose = Pose2D(0.5, 0.5, 0.0)
    scan = make_scan([0.01], angle_min=0.0, range_min=0.5)
    occupancy_update(grid, pose, scan)
    assert not np.any(grid.cells != 0.0)


def test_pose_outside_grid_raises():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 5.0, 5.0, 1.0)
    with pytest.raises(PoseOutOfBounds):
        occupancy_update(grid, Pose2D(9.0, 1.0, 0.0), make_scan([1.0]))


def test_beam_endpoint_on_pose_cell_leaves_pose_cell_alone():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 5.0, 5.0, 1.0)
    pose = Pose2D(2.5, 2.5, 0.0)
    scan = make_scan([0.2], range_min=0.05)  # endpoint inside the pose cell
    occupancy_update(grid, pose, scan)
    assert not np.any(grid.cells != 0.0)


poses_strategy = st.builds(
    Pose2D,
    x=st.floats(min_value=0.2, max_value=9.8),
    y=st.floats(min_value=0.2, max_value=9.8),
    theta=st.floats(min_value=-math.pi, max_value=math.pi),
)
ranges_strategy = st.lists(
    st.one_of(
        st.floats(min_value=0.0, max_value=20.0),
        st.just(math.inf),
        st.just(math.nan),
    ),
    min_size=1,
    max_size=24,
)


@given(st.lists(st.tuples(poses_strategy, ranges_strategy), min_size=1, max_size=5))
@settings(max_examples=100, deadline=None)
def test_clamping_after_any_update_sequence(steps):
    grid = OccupancyGrid.from_extent(0.0, 0.0, 10.0, 10.0, 0.5)
    for pose, ranges in steps:
        occupancy_update(grid, pose, make_scan(ranges))
    assert np.all(grid.cells >= L_MIN) and np.all(grid.cells <= L_MAX)


def test_saturation_is_idempotent():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 12.0, 12.0, 1.0)
    pose = Pose2D(0.5, 0.5, 0.0)
    scan = make_scan([10.0], range_max=12.0)
    for _ in range(30):  # far beyond saturation
        occupancy_update(grid, pose, scan)
    assert grid.cells[0, 10] == L_MAX
    assert grid.cells[0, 5] == L_MIN
    before = grid.cells.copy()
    occupancy_update(grid, pose, scan)
    assert np.array_equal(grid.cells, before)


# ---- entropy -------------------------------------------------------------------


def entropy_reference(grid):
    """Independent slow implementation: plain math.log2 per cell."""
    total = 0.0
    for l in grid.cells.ravel().tolist():
        p = 1.0 / (1.0 + math.exp(-l))
        for v in (p, 1.0 - p):
            if v > 0.0:
                total -= v * math.log2(v)
    return total


def test_all_unknown_grid_attains_upper_bound_exactly():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 2.0, 2.0, 1.0)
    assert map_entropy(grid) == 4.0


def test_entropy_bounds_and_oracle_agreement():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 10.0, 10.0, 0.5)
    rng = np.random.default_rng(7)
    grid.cells[:] = rng.uniform(L_MIN, L_MAX, size=grid.cells.shape)
    h = map_entropy(grid)
    assert 0.0 <= h <= grid.width * grid.height
    ref = entropy_reference(grid)
    assert abs(h - ref) <= 1e-12 * max(1.0, abs(ref))


@given(st.lists(st.floats(min_value=L_MIN, max_value=L_MAX), min_size=1, max_size=50))
@settings(max_examples=200)
def test_entropy_oracle_agreement_property(values):
    side = int(math.ceil(math.sqrt(len(values))))
    grid = OccupancyGrid(width=side, height=side, resolution=1.0)
    flat = grid.cells.ravel()
    flat[: len(values)] = values
    h = map_entropy(grid)
    ref = entropy_reference(grid)
    assert abs(h - ref) <= 1e-12 * max(1.0, abs(ref))
    assert 0.0 <= h <= grid.width * grid.height + 1e-12


def test_observation_strictly_reduces_entropy():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 10.0, 10.0, 0.5)
    h0 = map_entropy(grid)
    occupancy_update(grid, Pose2D(5.0, 5.0, 0.0), make_scan([3.0]))
    assert map_entropy(grid) < h0


# ---- snapshots -----------------------------------------------------------------


def test_snapshot_round_trip_probabilities_close():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 10.0, 10.0, 0.5)
    rng = np.random.default_rng(11)
    grid.cells[:] = rng.uniform(L_MIN, L_MAX, size=grid.cells.shape)
    snap = grid.to_snapshot()
    back = OccupancyGrid.from_snapshot(snap)
    assert (back.width, back.height, back.resolution) == (grid.width, grid.height, 0.5)
    assert (back.origin_x, back.origin_y) == (grid.origin_x, grid.origin_y)
    # 8-bit quantization: half a step of probability error
    assert np.max(np.abs(back.probabilities() - grid.probabilities())) <= 0.5 / 255.0 + 1e-9


def test_snapshot_rejects_unknown_format():
    grid = OccupancyGrid.from_extent(0.0, 0.0, 2.0, 2.0, 1.0)
    snap = grid.to_snapshot()
    snap["format"] = "pgm"
    with pytest.raises(MapperError):
        OccupancyGrid.from_snapshot(snap)


def test_classify_thresholds():
    grid = OccupancyGrid(width=3, height=1, resolution=1.0)
    p_occupied, p_free = 0.8, 0.2
    grid.cells[0, 0] = math.log(p_occupied / (1 - p_occupied))
    grid.cells[0, 1] = math.log(p_free / (1 - p_free))
    grid.cells[0, 2] = 0.0
    assert list(grid.classify()[0]) == [CELL_OCCUPIED, CELL_FREE, CELL_UNKNOWN]


def test_cell_index_and_bounds():
    grid = OccupancyGrid.from_extent(-0.05, -0.05, 10.05, 10.05, 0.1)
    assert (grid.width, grid.height) == (101, 101)
    # integer world coordinates land in cell centers
    assert grid.cell_index(0.0, 0.0) == (0, 0)
    assert grid.cell_index(10.0, 10.0) == (100, 100)
    assert grid.in_bounds(0, 0) and grid.in_bounds(100, 100)
    assert not grid.in_bounds(101, 0) and not grid.in_bounds(0, -1)
