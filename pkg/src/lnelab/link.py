"""Links {rho = r} of a set, their components and separation."""
from __future__ import annotations

import dataclasses
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import EmptyCloudError, EmptyLinkError
from .metric import LneEstimate, lne_constant
from .polynomial import Polynomial
from .radius import RadiusFunction, RadiusKind
from .sampler import Level, MeshGraph, SampleCloud, build_graph, graph_components, sample_level
from .semialgebraic import Relation, SemialgebraicSet, SignCondition

MAX_RAY_FAILURE_RATE = 0.05
DEFAULT_BOX_FACTOR = 8.0


@dataclass(frozen=True, eq=False)
class LinkSlice:
    r: float
    rho: RadiusFunction
    cloud: SampleCloud
    graph: MeshGraph
    components: tuple
    band: float
    low_confidence: bool = False

    @property
    def spacing(self) -> float:
        return self.cloud.spacing

    def level_errors(self) -> np.ndarray:
        return np.abs(self.rho(self.cloud.points) - self.r)


def _exact(r: float) -> Fraction:
    return Fraction(r).limit_denominator(10**12)


def _level_set(s: SemialgebraicSet, rho: RadiusFunction, r: float) -> SemialgebraicSet:
    n = s.ambient_dim
    rq = Polynomial.constant(n, _exact(r))
    if rho.kind is RadiusKind.EUCLIDEAN:
        sq = sum((Polynomial.variable(n, i) ** 2 for i in range(n)), Polynomial.zero(n))
        return s.with_condition(SignCondition(sq - rq * rq, Relation.EQ0))
    if rho.kind is RadiusKind.COORDINATE:
        return s.with_condition(SignCondition(Polynomial.variable(n, rho.index) - rq, Relation.EQ0))
    if rho.kind is RadiusKind.MAXNORM:
        regions = []
        for region in s.regions:
            for i in range(n):
                for sign in (1, -1):
                    face = [SignCondition(Polynomial.variable(n, i) * sign - rq, Relation.EQ0)]
                    for j in range(n):
                        if j != i:
                            xj = Polynomial.variable(n, j)
                            face.append(SignCondition(rq - xj, Relation.GE0))
                            face.append(SignCondition(rq + xj, Relation.GE0))
                    regions.append(tuple(region) + tuple(face))
        return SemialgebraicSet(n, tuple(regions), s.variables)
    raise ValueError(f"{rho.kind} has no polynomial level condition")


def extract_link(s: SemialgebraicSet, rho: RadiusFunction, r: float, h_rel: float = 0.02,
                 seed: int = 0, box_radius: float | None = None,
                 connect_factor: float = 3.0) -> LinkSlice:
    """Sample L = {rho = r} on ``s`` with spacing h = r*h_rel and build its graph.

    Polynomial radius functions (Euclidean, max-norm, coordinate) become
    extra sign conditions. Composite ones are sampled in the band
    |rho - r| <= h/2 and slid radially onto the level; if more than 5% of
    rays fail the slice is marked ``low_confidence``. The search box is
    [-R, R]^n with R = ``box_radius`` (default 8r, or ~r for norm-type rho).
    """
    if not r > 0:
        raise ValueError("r must be positive")
    if not 0 < h_rel <= 0.2:
        raise ValueError("h_rel must lie in (0, 0.2]")
    if rho.ambient_dim != s.ambient_dim:
        raise ValueError("radius function and set have different dimensions")
    h = r * h_rel
    band = 0.5 * h
    level = Level(rho, float(r), band)
    if box_radius is None:
        norm_type = rho.kind in (RadiusKind.EUCLIDEAN, RadiusKind.MAXNORM)
        box_radius = r + 2 * h if norm_type else DEFAULT_BOX_FACTOR * r
    try:
        if rho.kind is RadiusKind.COMPOSITE:
            target = s
            cloud = sample_level(s, box_radius, h, level, seed)
        else:
            target = _level_set(s, rho, r)
            cloud = sample_level(target, box_radius, h, None, seed)
            cloud = dataclasses.replace(cloud, level=level)
    except EmptyCloudError as exc:
        raise EmptyLinkError(f"link at r={r:g} is empty at h={h:g}: {exc}") from exc
    on_level = np.abs(rho(cloud.points) - r) <= band
    if not on_level.all():
        cloud = cloud.subset(np.flatnonzero(on_level))
        if len(cloud) == 0:
            raise EmptyLinkError(f"link at r={r:g} is empty at h={h:g}")
    graph = build_graph(cloud, connect_factor, target)
    comps = tuple(graph_components(graph))
    return LinkSlice(float(r), rho, cloud, graph, comps, band,
                     cloud.failure_rate > MAX_RAY_FAILURE_RATE)


def components(link: LinkSlice) -> list:
    """Vertex sets of the connected components, ordered by smallest index."""
    return list(link.components)


def separation_ratio(link: LinkSlice) -> float:
    """Smallest Euclidean gap between two components, divided by r (+inf for one component)."""
    comps = link.components
    if len(comps) < 2:
        return float("inf")
    pts = link.cloud.points
    trees = [cKDTree(pts[c]) for c in comps]
    best = np.inf
    for a in range(len(comps)):
        for b in range(a + 1, len(comps)):
            d, _ = trees[b].query(pts[comps[a]], k=1)
            best = min(best, float(d.min()))
    return best / link.r


def _singleton(vertex: int, eta: float) -> LneEstimate:
    return LneEstimate(1.0, (vertex, vertex), 0, eta, 0, 0.0, 0.0)


def link_lne_constant(link: LinkSlice, eta_rel: float = 0.1, landmarks: int = 256,
                      seed: int = 0, n_jobs: int = 1) -> list:
    """Per-component LNE estimates with eta = eta_rel * r.

    Components with fewer than two vertices get constant 1. Witness indices
    are translated back to vertex indices of the whole slice.
    """
    eta = eta_rel * link.r

    def one(comp):
        if comp.size < 2:
            return _singleton(int(comp[0]), eta)
        sub = link.graph.induced(comp)
        est = lne_constant(sub, eta, landmarks, seed)
        i, j = est.witness_pair
        return dataclasses.replace(est, witness_pair=(int(comp[i]), int(comp[j])))

    if n_jobs and n_jobs > 1 and len(link.components) > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            return list(pool.map(one, link.components))
    return [one(c) for c in link.components]


def split_unresolved(link: LinkSlice) -> bool:
    """True when two components come closer than the sample spacing.

    The sampler thins points to spacing h/2, so pieces that close cannot be
    told apart from one piece whose bridging chords were refused; the
    component structure of the slice is below resolution.
    """
    return len(link.components) > 1 and separation_ratio(link) * link.r < link.spacing


def cutoff_limited(estimate: LneEstimate, spacing: float) -> bool:
    """True when the maximising pair sits within one spacing of the eta cutoff.

    The supremum is then attained at the resolution limit, so the value is
    only a lower bound for the continuum quantity.
    """
    return estimate.pairs_evaluated > 0 and estimate.d_out < estimate.eta + spacing
