"""Inner (graph) versus outer (Euclidean) distances and LNE constant estimates."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import dijkstra
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points, check_positive
from .sampler import MeshGraph, SampleCloud, attach_apex, build_graph
from .semialgebraic import Relation, SemialgebraicSet, SignCondition
from .polynomial import Polynomial

ETA_SLACK = 1e-9


@dataclass(frozen=True)
class LneEstimate:
    constant: float
    witness_pair: tuple
    pairs_evaluated: int
    eta: float
    landmarks: int
    d_inn: float
    d_out: float

    @property
    def resolved(self) -> bool:
        """False when no pair was far enough apart to be evaluated."""
        return self.pairs_evaluated > 0


def shortest_paths(graph: MeshGraph, source: int) -> np.ndarray:
    """Single-source Dijkstra distances; unreachable vertices are +inf."""
    return dijkstra(graph.csr, directed=False, indices=int(source))


def outer_distance(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape:
        raise ValueError("points must have equal dimension")
    return float(np.linalg.norm(u - v))


def default_eta(graph: MeshGraph) -> float:
    h = graph.cloud.spacing
    width = 0.0
    if graph.cloud.annulus is not None:
        width = graph.cloud.annulus[1] - graph.cloud.annulus[0]
    return max(4.0 * h, 0.01 * width)


def farthest_point_order(points: np.ndarray, count: int, seed: int = 0) -> np.ndarray:
    """Euclidean farthest-point sampling.

    Starts at the point farthest from the centroid; ties at every step go to
    the lexicographically smallest point, so the selection does not depend
    on vertex labels. ``seed`` only rotates the start among exact ties.
    """
    m = points.shape[0]
    count = min(count, m)
    order = np.empty(count, dtype=np.int64)
    lex_rank = np.empty(m, dtype=np.int64)
    lex_rank[np.lexsort([points[:, k] for k in range(points.shape[1] - 1, -1, -1)])] = np.arange(m)

    def pick(score):
        best = np.flatnonzero(score == score.max())
        return best, best[np.argmin(lex_rank[best])]

    ties, first = pick(np.linalg.norm(points - points.mean(axis=0), axis=1))
    if ties.size > 1 and seed:
        first = ties[np.argsort(lex_rank[ties])][seed % ties.size]
    order[0] = first
    dmin = np.linalg.norm(points - points[first], axis=1)
    for k in range(1, count):
        _, nxt = pick(dmin)
        order[k] = nxt
        np.minimum(dmin, np.linalg.norm(points - points[nxt], axis=1), out=dmin)
    return order


def _rows(graph: MeshGraph, sources: np.ndarray, n_jobs: int, block: int = 64) -> list:
    chunks = [sources[i:i + block] for i in range(0, sources.size, block)]

    def run(chunk):
        return dijkstra(graph.csr, directed=False, indices=chunk)

    if n_jobs and n_jobs > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            return list(pool.map(run, chunks))
    return [run(c) for c in chunks]


def lne_constant(graph: MeshGraph, eta: float | None = None, landmarks: int = 256,
                 seed: int = 0, n_jobs: int = 1) -> LneEstimate:
    """Estimate sup d_inn/d_out over pairs with d_out >= eta.

    Sources are ``landmarks`` vertices chosen by farthest-point sampling;
    targets are all vertices. A disconnected evaluated pair gives +inf.
    """
    n = graph.n_vertices
    if n < 2:
        raise ValueError("graph needs at least two vertices")
    if landmarks < 2:
        raise ValueError("landmarks must be >= 2")
    h = graph.cloud.spacing
    if eta is None:
        eta = default_eta(graph)
    if not eta > 2 * h:
        raise ValueError(f"eta={eta:g} must exceed 2h={2 * h:g}")
    pts = graph.points
    sources = farthest_point_order(pts, landmarks, seed)
    cutoff = eta * (1 - ETA_SLACK)
    best = (1.0, (int(sources[0]), int(sources[0])), 0.0, 0.0)
    best_ratio = -np.inf
    evaluated = 0
    offset = 0
    for block in _rows(graph, sources, n_jobs):
        for k, row in enumerate(np.atleast_2d(block)):
            src = int(sources[offset + k])
            d_out = np.linalg.norm(pts - pts[src], axis=1)
            mask = d_out >= cutoff
            if not mask.any():
                continue
            evaluated += int(mask.sum())
            d_inn = row[mask]
            targets = np.flatnonzero(mask)
            if np.isinf(d_inn).any():
                j = int(targets[np.flatnonzero(np.isinf(d_inn))[0]])
                return LneEstimate(np.inf, (src, j), evaluated, eta, sources.size,
                                   np.inf, float(d_out[j]))
            ratios = d_inn / d_out[mask]
            i = int(np.argmax(ratios))
            if ratios[i] > best_ratio:
                best_ratio = float(ratios[i])
                j = int(targets[i])
                best = (best_ratio, (src, j), float(row[j]), float(d_out[j]))
        offset += np.atleast_2d(block).shape[0]
    if evaluated == 0:
        return LneEstimate(1.0, best[1], 0, eta, sources.size, 0.0, 0.0)
    constant, pair, d_inn, d_out = best
    return LneEstimate(constant, pair, evaluated, eta, sources.size, d_inn, d_out)


def exhaustive_lne_constant(graph: MeshGraph, eta: float) -> float:
    """All-pairs maximum of d_inn/d_out via Floyd-Warshall (independent oracle)."""
    from scipy.sparse.csgraph import floyd_warshall

    d = floyd_warshall(graph.csr, directed=False)
    pts = graph.points
    out = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    mask = out >= eta * (1 - ETA_SLACK)
    if not mask.any():
        return 1.0
    return float(np.max(d[mask] / out[mask]))


def whole_space(n: int) -> SemialgebraicSet:
    return SemialgebraicSet(n, ((SignCondition(Polynomial.zero(n), Relation.EQ0),),))


class LneConstantEstimator(BaseEstimator):
    """Estimate the LNE constant of a sampled set.

    ``fit`` accepts a :class:`SampleCloud` or an array of points of shape
    (m, n). For raw arrays ``spacing`` is the sampling length h (estimated
    from nearest neighbours when None) and ``domain`` is the set used for the
    chord-midpoint test (no test when None).

    Attributes set by ``fit``: ``graph_``, ``estimate_``, ``constant_``,
    ``witness_pair_``.
    """

    def __init__(self, connect_factor=3.0, eta=None, landmarks=256, seed=0, spacing=None,
                 domain=None, apex_radius=None, n_jobs=1):
        self.connect_factor = connect_factor
        self.eta = eta
        self.landmarks = landmarks
        self.seed = seed
        self.spacing = spacing
        self.domain = domain
        self.apex_radius = apex_radius
        self.n_jobs = n_jobs

    def _cloud(self, X) -> SampleCloud:
        if isinstance(X, SampleCloud):
            return X
        pts = check_points(X)
        n = pts.shape[1]
        h = self.spacing
        if h is None:
            from scipy.spatial import cKDTree

            dist, _ = cKDTree(pts).query(pts, k=2)
            h = 2.0 * float(np.median(dist[:, 1]))
        check_positive(h, "spacing")
        domain = self.domain if self.domain is not None else whole_space(n)
        mask = np.ones((pts.shape[0], len(domain.regions)), bool)
        return SampleCloud(pts, np.zeros(pts.shape[0], np.int64), float(h), None, domain, mask)

    def fit(self, X, y=None):
        cloud = self._cloud(X)
        graph = build_graph(cloud, self.connect_factor)
        if self.apex_radius is not None:
            graph = attach_apex(graph, self.apex_radius)
        self.graph_ = graph
        self.estimate_ = lne_constant(graph, self.eta, self.landmarks, self.seed, self.n_jobs)
        self.constant_ = self.estimate_.constant
        self.witness_pair_ = self.estimate_.witness_pair
        return self

    def score(self, X=None, y=None):
        """The fitted constant (an estimator-style scalar summary)."""
        check_is_fitted(self, "estimate_")
        return self.constant_
