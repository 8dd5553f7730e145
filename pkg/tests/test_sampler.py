import numpy as np
import pytest

from lnelab.exceptions import ConvergenceError, EmptyCloudError, IsolatedApexError
from lnelab.metric import shortest_paths
from lnelab.polynomial import parse_polynomial
from lnelab.sampler import (attach_apex, build_graph, graph_components, project_to_variety,
                            sample_region, sample_set)
from lnelab.semialgebraic import Relation, SignCondition, make_set


@pytest.fixture(scope="module")
def halfline_cloud(halfline):
    return sample_region(halfline, 0, (0.1, 1.0), 0.01)


def test_halfline_cloud_is_collinear_and_spans(halfline_cloud):
    pts = halfline_cloud.points
    assert 160 <= len(pts) <= 200
    assert np.all(pts[:, 1] == 0)
    assert pts[:, 0].min() == pytest.approx(0.1, abs=0.005)
    assert pts[:, 0].max() == pytest.approx(1.0, abs=0.005)


def test_x3_cloud_passes_membership_audit(x3):
    cloud = sample_region(x3, 0, (0.05, 0.5), 0.01)
    t, x, z = cloud.points.T
    tol = cloud.tol
    assert len(cloud) > 100
    assert np.all(np.abs(z ** 2 - t ** 2 * x ** 2) <= tol)
    assert np.all(x >= -tol) and np.all(t - x >= -tol)
    nrm = np.linalg.norm(cloud.points, axis=1)
    assert nrm.min() >= 0.05 - tol and nrm.max() <= 0.5 + tol


def test_plane_missing_ball_is_empty():
    s = make_set(["x1", "x2"], [[("x1 - 5", "=0")]])
    with pytest.raises(EmptyCloudError):
        sample_region(s, 0, (0.1, 1.0), 0.01)


def test_projection_examples():
    f = parse_polynomial("z^2 - t^2*x^2", ["t", "x", "z"])
    p = project_to_variety([1, 0.5, 0.52], [f])
    assert abs(f(p)) <= 1e-10
    assert np.linalg.norm(p - [1, 0.5, 0.52]) <= 0.03
    q, iters = project_to_variety([1, 0.5, 0.5], [f], full_output=True)
    assert iters == 0 and np.array_equal(q, [1, 0.5, 0.5])
    assert np.array_equal(project_to_variety([0, 0, 0], [f]), [0, 0, 0])


def test_projection_failure_raises():
    f = parse_polynomial("x^2 + 1", ["x"])
    with pytest.raises(ConvergenceError):
        project_to_variety([0.3], [f])


def test_path_graph_distance_equals_span(halfline_cloud):
    g = build_graph(halfline_cloud, 3.0)
    assert len(graph_components(g)) == 1
    x = halfline_cloud.points[:, 0]
    d = shortest_paths(g, int(np.argmin(x)))
    span = x.max() - x.min()
    assert d[int(np.argmax(x))] == pytest.approx(span, rel=1e-3)


def test_parallel_segments_stay_apart():
    h = 0.01
    s = make_set(["x1", "x2"], [[("x2", "=0"), ("x1", ">=0")], [("x2 - 0.1", "=0"), ("x1", ">=0")]])
    cloud = sample_set(s, (0.2, 1.0), h)
    g = build_graph(cloud, 3.0)
    comps = graph_components(g)
    assert len(comps) == 2
    y = cloud.points[:, 1]
    assert not np.any(np.abs(y[g.edges[:, 0]] - y[g.edges[:, 1]]) > 1e-9)


def test_x3_slice_v_is_connected(x3):
    s = x3.with_condition(SignCondition(parse_polynomial("t - 0.2", x3.variables), Relation.EQ0))
    cloud = sample_set(s, (0.2, 0.3), 0.004)
    g = build_graph(cloud, 3.0)
    assert len(graph_components(g)) == 1
    x = cloud.points[:, 1]
    tips = [int(i) for i in np.flatnonzero(np.isclose(x, x.max()))]
    tip_a = min(tips, key=lambda i: cloud.points[i, 2])
    tip_b = max(tips, key=lambda i: cloud.points[i, 2])
    arms = np.linalg.norm(cloud.points[tip_a] - [0.2, 0, 0]) + np.linalg.norm(cloud.points[tip_b] - [0.2, 0, 0])
    assert shortest_paths(g, tip_a)[tip_b] == pytest.approx(arms, rel=5e-3)


def test_apex_joins_two_halflines(two_halflines):
    cloud = sample_set(two_halflines, (0.05, 1.0), 0.01)
    g = build_graph(cloud, 3.0)
    assert len(graph_components(g)) == 2
    ga = attach_apex(g, 0.07)
    assert len(graph_components(ga)) == 1
    pts = cloud.points
    tip_a = int(np.argmax(pts[:, 0]))
    tip_b = int(np.argmax(pts[:, 1]))
    d = shortest_paths(ga, tip_a)[tip_b]
    assert d == pytest.approx(np.linalg.norm(pts[tip_a]) + np.linalg.norm(pts[tip_b]), rel=5e-3)


def test_apex_does_not_shorten_convex_geodesics(convex_cone):
    cloud = sample_set(convex_cone, (0.1, 1.0), 0.05)
    g = build_graph(cloud, 3.0)
    ga = attach_apex(g, 0.15)
    for src in (0, len(cloud) // 2):
        plain, apexed = shortest_paths(g, src), shortest_paths(ga, src)[: len(cloud)]
        assert np.all(apexed >= plain - 3 * cloud.spacing)


def test_isolated_apex_error(halfline_cloud):
    with pytest.raises(IsolatedApexError):
        attach_apex(build_graph(halfline_cloud), 0.05)


def test_determinism(x3):
    a = sample_region(x3, 0, (0.05, 0.5), 0.02)
    b = sample_region(x3, 0, (0.05, 0.5), 0.02)
    assert np.array_equal(a.points, b.points)
    ga, gb = build_graph(a), build_graph(b)
    assert np.array_equal(ga.edges, gb.edges) and np.array_equal(ga.weights, gb.weights)


def test_halving_h_keeps_tip_distance(halfline):
    lengths = []
    for h in (0.01, 0.005):
        cloud = sample_region(halfline, 0, (0.1, 1.0), h)
        x = cloud.points[:, 0]
        lengths.append(shortest_paths(build_graph(cloud), int(np.argmin(x)))[int(np.argmax(x))])
    assert abs(lengths[0] - lengths[1]) < 5e-3 * lengths[1]
