import math

import numpy as np
import pytest
from sklearn.base import clone

from lnelab.link import extract_link
from lnelab.metric import (LneConstantEstimator, exhaustive_lne_constant, lne_constant, outer_distance,
                           shortest_paths)
from lnelab.radius import RadiusFunction
from lnelab.sampler import MeshGraph, SampleCloud, attach_apex, build_graph, sample_set
from lnelab.semialgebraic import make_set

from oracles import exhaustive_constant, frozen

ORACLE = frozen()


def _graph(points, edges, spacing=0.1):
    points = np.asarray(points, float)
    edges = np.asarray(edges, np.int64).reshape(-1, 2)
    w = np.linalg.norm(points[edges[:, 0]] - points[edges[:, 1]], axis=1)
    n = len(points)
    cloud = SampleCloud(points, np.zeros(n, int), spacing, None, None, np.ones((n, 1), bool))
    return MeshGraph(cloud, edges, w)


def test_path_graph_distances():
    g = _graph([[0, 0], [1, 0], [2, 0]], [[0, 1], [1, 2]])
    assert shortest_paths(g, 0).tolist() == [0, 1, 2]


def test_unreachable_is_infinite():
    g = _graph([[0, 0], [1, 0], [5, 0], [6, 0]], [[0, 1], [2, 3]])
    d = shortest_paths(g, 0)
    assert np.isinf(d[2]) and np.isinf(d[3])
    est = lne_constant(g, eta=0.5)
    assert math.isinf(est.constant)


@pytest.mark.parametrize("u, v, d", [((0, 0), (3, 4), 5.0), ((1, 2), (1, 2), 0.0),
                                     ((0.2, 0.04), (0.2, -0.04), 0.08)])
def test_outer_distance(u, v, d):
    assert outer_distance(u, v) == pytest.approx(d, abs=1e-15)


def test_convex_cone_is_lne(convex_cone):
    cloud = sample_set(convex_cone, (0.01, 1.0), 0.01)
    est = lne_constant(attach_apex(build_graph(cloud), 0.02), eta=0.05, landmarks=200)
    assert 1.0 <= est.constant <= 1.05


def test_two_halflines_with_apex(two_halflines):
    cloud = sample_set(two_halflines, (0.02, 1.0), 0.01)
    est = lne_constant(attach_apex(build_graph(cloud), 0.03), eta=0.05)
    assert est.constant == pytest.approx(ORACLE["wedge_constant_90"], rel=0.05)


def test_x3_v_constant(x3):
    link = extract_link(x3, RadiusFunction.coordinate(3, 0), 0.2, h_rel=0.02)
    est = lne_constant(link.graph, eta=0.02)
    assert est.constant == pytest.approx(ORACLE["v_link_constant"]["0.2"], rel=0.10)


def test_witness_reproduces_constant(two_halflines):
    g = attach_apex(build_graph(sample_set(two_halflines, (0.02, 1.0), 0.02)), 0.05)
    est = lne_constant(g, eta=0.1)
    i, j = est.witness_pair
    d_inn = shortest_paths(g, i)[j]
    assert d_inn / outer_distance(g.points[i], g.points[j]) == est.constant
    assert est.constant >= 1 - 1e-12


@pytest.mark.parametrize("name", ["two_halflines", "x3_link", "tangent"])
def test_full_landmarks_match_exhaustive_oracle(name, two_halflines, x3):
    if name == "two_halflines":
        g = attach_apex(build_graph(sample_set(two_halflines, (0.05, 1.0), 0.01)), 0.07)
        eta = 0.05
    elif name == "x3_link":
        g = extract_link(x3, RadiusFunction.coordinate(3, 0), 0.2, h_rel=0.02).graph
        eta = 0.02
    else:
        s = make_set(["x1", "x2"], [[("x2 - x1^2", "=0")], [("x2 + x1^2", "=0"), ("x1", ">=0")]])
        g = attach_apex(build_graph(sample_set(s, (0.05, 1.0), 0.01)), 0.07)
        eta = 0.05
    n = g.n_vertices
    assert n <= 500
    est = lne_constant(g, eta=eta, landmarks=n)
    assert est.constant == exhaustive_constant(g.points, g.edges, g.weights, eta)
    # floyd_warshall sums edges in another order; agreement is to rounding
    assert est.constant == pytest.approx(exhaustive_lne_constant(g, eta), rel=1e-12)


def test_monotone_in_landmarks(x3):
    g = extract_link(x3, RadiusFunction.coordinate(3, 0), 0.2, h_rel=0.02).graph
    values = [lne_constant(g, eta=0.02, landmarks=m).constant for m in (2, 4, 8, 16, 64, g.n_vertices)]
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_relabel_invariance(two_halflines):
    g = attach_apex(build_graph(sample_set(two_halflines, (0.05, 1.0), 0.02)), 0.07)
    perm = np.random.default_rng(3).permutation(g.n_vertices)
    inv = np.argsort(perm)
    pts = g.points[perm]
    edges = inv[g.edges]
    h = _graph(pts, edges, g.cloud.spacing)
    for m in (8, 32):
        assert lne_constant(h, eta=0.1, landmarks=m).constant == pytest.approx(
            lne_constant(g, eta=0.1, landmarks=m).constant, rel=1e-12)


def test_inner_dominates_outer(x3):
    g = extract_link(x3, RadiusFunction.coordinate(3, 0), 0.1, h_rel=0.02).graph
    for src in (0, g.n_vertices // 3):
        d = shortest_paths(g, src)
        out = np.linalg.norm(g.points - g.points[src], axis=1)
        ok = np.isfinite(d)
        assert np.all(d[ok] >= out[ok] - 1e-9)


def test_parallel_map_matches_serial(x3):
    g = extract_link(x3, RadiusFunction.coordinate(3, 0), 0.2, h_rel=0.02).graph
    assert lne_constant(g, eta=0.02, n_jobs=1) == lne_constant(g, eta=0.02, n_jobs=4)


@pytest.mark.parametrize("kwargs", [{"eta": 0.01}, {"landmarks": 1}])
def test_bad_arguments(kwargs):
    g = _graph([[0, 0], [0.1, 0], [0.2, 0]], [[0, 1], [1, 2]])
    with pytest.raises(ValueError):
        lne_constant(g, **{"eta": 0.3, **kwargs})


def test_too_small_graph():
    with pytest.raises(ValueError):
        lne_constant(_graph([[0, 0]], []), eta=1.0)


def test_estimator_api():
    est = LneConstantEstimator(landmarks=64, eta=0.2)
    assert clone(est).get_params()["landmarks"] == 64
    theta = np.linspace(0.0, np.pi, 200)
    X = np.column_stack([np.cos(theta), np.sin(theta)])
    est.fit(X)
    assert est.constant_ == pytest.approx(ORACLE["semicircle_ratio"], rel=0.02)
    assert est.score() == est.constant_
