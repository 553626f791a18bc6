"""Domain, point-set, and fill-distance checks."""

import numpy as np
import pytest

from ovkflow.errors import InputError
from ovkflow.points import (
    Box,
    PointSet,
    bounding_domain,
    fill_distance,
    grid_points,
    load_pointset_csv,
    min_separation,
    random_points,
    save_pointset_csv,
)


def unit_interval():
    return Box(np.array([0.0]), np.array([1.0]))


def unit_square():
    return Box(np.zeros(2), np.ones(2))


def test_box_validation():
    with pytest.raises(InputError):
        Box(np.array([0.0]), np.array([0.0]))
    with pytest.raises(InputError):
        Box(np.array([1.0]), np.array([0.0]))
    with pytest.raises(InputError):
        Box(np.array([0.0, 0.0]), np.array([1.0]))


def test_box_contains():
    b = unit_square()
    assert b.contains(np.array([[0.0, 0.0], [1.0, 1.0], [0.5, 0.25]]))
    assert not b.contains(np.array([[0.5, 1.0001]]))


def test_pointset_rejects_duplicates():
    with pytest.raises(InputError):
        PointSet(np.array([[0.1], [0.1], [0.5]]), unit_interval())


def test_pointset_rejects_out_of_domain():
    with pytest.raises(InputError):
        PointSet(np.array([[0.5], [1.2]]), unit_interval())


def test_grid_points_counts_and_endpoints():
    ps = grid_points(unit_square(), (3, 5))
    assert len(ps) == 15
    assert ps.coords.min() == 0.0 and ps.coords.max() == 1.0
    # endpoint-inclusive mesh: corner rows present
    corners = {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)}
    rows = {tuple(r) for r in ps.coords}
    assert corners <= rows


def test_grid_points_time_axis_split():
    b = Box(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    ps = grid_points(b, (4, 6), time_axis=True)
    assert ps.time_axis
    assert ps.spatial.shape == (24, 1)
    assert ps.times.min() == 0.0 and ps.times.max() == 2.0


def test_random_points_seeded_and_inside():
    a = random_points(unit_square(), 50, seed=9)
    b = random_points(unit_square(), 50, seed=9)
    c = random_points(unit_square(), 50, seed=10)
    assert np.array_equal(a.coords, b.coords)
    assert not np.array_equal(a.coords, c.coords)
    assert unit_square().contains(a.coords)


def test_fill_distance_two_points():
    # {0, 1} on [0,1]: farthest interior point is the midpoint
    ps = PointSet(np.array([[0.0], [1.0]]), unit_interval())
    assert abs(fill_distance(ps, probe_resolution=1001) - 0.5) < 1e-12


def test_fill_distance_square_center():
    # single corner point: the opposite corner is sqrt(2) away, center sqrt(2)/2
    ps = PointSet(np.array([[0.5, 0.5]]), unit_square())
    h = fill_distance(ps, probe_resolution=129)
    assert abs(h - 0.7071067811865476) < 1e-12


def test_fill_distance_decreases_under_refinement():
    hs = []
    for n in (4, 8, 16, 32):
        ps = grid_points(unit_interval(), (n,))
        hs.append(fill_distance(ps, probe_resolution=2048))
    assert all(b < a for a, b in zip(hs, hs[1:]))


def test_min_separation_grid():
    ps = grid_points(unit_interval(), (11,))
    assert abs(min_separation(ps) - 0.1) < 1e-12


def test_bounding_domain_contains_random_sets():
    rng = np.random.default_rng(23)
    for trial in range(50):
        scale = 10.0 ** rng.integers(-6, 7)
        coords = scale * rng.normal(size=(rng.integers(1, 12), rng.integers(1, 4)))
        box = bounding_domain(coords)
        assert np.all(box.upper > box.lower)
        assert box.contains(coords)


def test_bounding_domain_degenerate_axes():
    # single sites and constant columns must still give an open box
    for value in (0.0, 0.3, 1.0, -7.0, 1e6, -1e8):
        box = bounding_domain(np.array([[value]]))
        assert box.upper[0] > value > box.lower[0]
    # time column frozen at t = 2.0 across all rows
    coords = np.array([[0.1, 2.0], [0.7, 2.0], [0.4, 2.0]])
    box = bounding_domain(coords)
    assert box.upper[1] > 2.0 > box.lower[1]
    assert box.contains(coords)


def test_load_single_site_csv(tmp_path):
    path = tmp_path / "one.csv"
    path.write_text("x_1,t\n0.3,0.2\n")
    ps = load_pointset_csv(path)
    assert len(ps) == 1 and ps.time_axis


def test_csv_round_trip_exact():
    rng = np.random.default_rng(17)
    coords = rng.uniform(0, 1, size=(20, 3))
    b = Box(np.zeros(3), np.ones(3))
    ps = PointSet(coords, b)
    save_pointset_csv(ps, "/tmp/ovk_test_points.csv")
    back = load_pointset_csv("/tmp/ovk_test_points.csv", domain=b)
    assert np.array_equal(back.coords, ps.coords)
    assert not back.time_axis


def test_csv_round_trip_with_time(tmp_path):
    rng = np.random.default_rng(19)
    coords = np.column_stack([rng.uniform(0, 1, 15), rng.uniform(0, 2, 15)])
    b = Box(np.array([0.0, 0.0]), np.array([1.0, 2.0]))
    ps = PointSet(coords, b, time_axis=True)
    path = tmp_path / "pts.csv"
    save_pointset_csv(ps, path)
    header = open(path).readline().strip()
    assert header == "x_1,t"
    back = load_pointset_csv(path, domain=b)
    assert back.time_axis
    assert np.array_equal(back.coords, ps.coords)


def test_load_rejects_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x_1,t\n0.5,oops\n")
    with pytest.raises(InputError):
        load_pointset_csv(path)
