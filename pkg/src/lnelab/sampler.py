"""Point clouds on semialgebraic sets and the proximity graphs built on them.

Seeds come from an origin-aligned grid of pitch h/2. Grid cells that
provably miss the set (natural interval enclosures of the defining
polynomials exclude zero) are pruned by recursive bisection, so only cells
near the variety are ever materialised. Surviving cell centres are pushed
onto the equality locus by Gauss-Newton, filtered, and thinned.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from .exceptions import ConvergenceError, DimensionError, EmptyCloudError, IsolatedApexError
from .polynomial import Polynomial
from .radius import RadiusFunction
from .semialgebraic import SemialgebraicSet

PROJECTION_TOL = 1e-13
PROJECTION_MAX_ITER = 60
MAX_BOUNDARY_CODIM = 2
REFINE_DEPTH = 5
REFINE_BUDGET = 200_000


def sample_tolerance(r_max: float) -> float:
    return 1e-7 * (1.0 + r_max)


@dataclass(frozen=True)
class Level:
    """A level set {rho = r} that a cloud was sampled on, with its thickness."""

    rho: RadiusFunction
    r: float
    band: float


@dataclass(frozen=True, eq=False)
class SampleCloud:
    points: np.ndarray
    region_tag: np.ndarray
    spacing: float
    annulus: tuple | None
    set: SemialgebraicSet
    region_mask: np.ndarray
    level: Level | None = None
    ray_failures: int = 0
    ray_attempts: int = 0

    def __len__(self):
        return self.points.shape[0]

    @property
    def tol(self) -> float:
        r_max = self.annulus[1] if self.annulus else float(np.abs(self.points).max(initial=0.0))
        return sample_tolerance(r_max)

    @property
    def failure_rate(self) -> float:
        return self.ray_failures / self.ray_attempts if self.ray_attempts else 0.0

    def subset(self, idx) -> "SampleCloud":
        idx = np.asarray(idx)
        return SampleCloud(self.points[idx], self.region_tag[idx], self.spacing, self.annulus,
                           self.set, self.region_mask[idx], self.level,
                           self.ray_failures, self.ray_attempts)


@dataclass(frozen=True, eq=False)
class MeshGraph:
    """Undirected proximity graph. When ``apex_index`` is set, the apex is an
    extra vertex at the origin appended after the cloud's points."""

    cloud: SampleCloud
    edges: np.ndarray  # (E, 2) int, i < j
    weights: np.ndarray  # (E,)
    apex_index: int | None = None

    @property
    def n_vertices(self) -> int:
        return len(self.cloud) + (1 if self.apex_index is not None else 0)

    @cached_property
    def points(self) -> np.ndarray:
        if self.apex_index is None:
            return self.cloud.points
        return np.vstack([self.cloud.points, np.zeros((1, self.cloud.points.shape[1]))])

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        n = self.n_vertices
        i, j = self.edges[:, 0], self.edges[:, 1]
        m = sparse.coo_matrix((np.concatenate([self.weights, self.weights]),
                               (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n))
        return m.tocsr()

    def induced(self, vertices) -> "MeshGraph":
        """Subgraph on ``vertices`` (cloud indices only; the apex is dropped)."""
        vertices = np.asarray(vertices, dtype=np.int64)
        remap = np.full(self.n_vertices, -1, dtype=np.int64)
        remap[vertices] = np.arange(vertices.size)
        keep = (remap[self.edges[:, 0]] >= 0) & (remap[self.edges[:, 1]] >= 0)
        sub_cloud = self.cloud.subset(vertices[vertices < len(self.cloud)])
        return MeshGraph(sub_cloud, remap[self.edges[keep]], self.weights[keep], None)


# -- projection ----------------------------------------------------------------
def _residuals(polys: Sequence[Polynomial], x: np.ndarray):
    f = np.stack([p(x) for p in polys], axis=1)
    s = np.stack([p.scale(x) for p in polys], axis=1)
    return f, s


def _jacobian(polys, x):
    return np.stack([p.gradient(x) for p in polys], axis=1)  # (m, k, n)


def project_batch(x: np.ndarray, polys: Sequence[Polynomial], tol: float = PROJECTION_TOL,
                  max_iter: int = PROJECTION_MAX_ITER):
    """Gauss-Newton projection of many points at once.

    Returns ``(y, ok, iterations)``. A point fails when it does not converge,
    when its Jacobian becomes rank deficient away from a solution, or when
    it travels further than 3 * residual / sigma_min measured at the start.
    """
    x = np.asarray(x, dtype=float)
    y = x.copy()
    m = y.shape[0]
    iters = np.zeros(m, dtype=np.int64)
    if not polys or m == 0:
        return y, np.ones(m, bool), iters
    f, s = _residuals(polys, y)
    done = np.all(np.abs(f) <= tol * s, axis=1)
    alive = np.ones(m, bool)
    sv = np.linalg.svd(_jacobian(polys, y), compute_uv=False)
    sigma0 = sv[:, -1] if sv.shape[1] else np.zeros(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        bound = np.where(done, 0.0, 3.0 * np.linalg.norm(f, axis=1) / sigma0)
    bound = np.where(np.isnan(bound), np.inf, bound)
    for _ in range(max_iter):
        act = np.flatnonzero(~done & alive)
        if act.size == 0:
            break
        ya = y[act]
        fa, _ = _residuals(polys, ya)
        j = _jacobian(polys, ya)
        u, sv, vt = np.linalg.svd(j, full_matrices=False)
        smax = sv[:, :1]
        good = sv > 1e-13 * np.maximum(smax, 1e-300)
        inv = np.where(good, 1.0 / np.where(good, sv, 1.0), 0.0)
        # minimum-norm Gauss-Newton step: -V diag(1/s) U^T f
        utf = np.einsum("mki,mk->mi", u, fa)
        step = -np.einsum("min,mi->mn", vt, inv * utf)
        degenerate = ~good.all(axis=1) & (np.linalg.norm(step, axis=1) == 0)
        alive[act[degenerate]] = False
        y[act] = ya + step
        iters[act] += 1
        fa, sa = _residuals(polys, y[act])
        done[act] = np.all(np.abs(fa) <= tol * sa, axis=1)
        moved = np.linalg.norm(y[act] - x[act], axis=1)
        alive[act[moved > bound[act] + 1e-12]] = False
        alive[act[~np.isfinite(y[act]).all(axis=1)]] = False
    return y, done & alive, iters


def project_to_variety(start, equalities: Sequence[Polynomial], tol: float = 1e-10,
                       max_iter: int = 50, full_output: bool = False):
    """Pull ``start`` onto the common zero set of ``equalities``.

    Raises ConvergenceError when Gauss-Newton fails; callers discard such
    seeds. With ``full_output`` returns ``(point, iterations)``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not equalities:
        raise ValueError("equalities must be non-empty")
    start = np.asarray(start, dtype=float)
    n = equalities[0].ambient_dim
    if start.ndim != 1 or start.shape[0] != n:
        raise DimensionError(f"expected a point of length {n}")
    y, ok, iters = project_batch(start[None, :], list(equalities), tol, max_iter)
    if not ok[0]:
        f, s = _residuals(equalities, y)
        raise ConvergenceError(
            f"projection from {start.tolist()} did not converge "
            f"(residual {np.abs(f).max():.3g} after {int(iters[0])} iterations)")
    return (y[0], int(iters[0])) if full_output else y[0]


# -- radial level sliding --------------------------------------------------
def slide_to_level(points: np.ndarray, rho: RadiusFunction, r: float, n_bisect: int = 80,
                   check_points: int = 9):
    """Move each point along its ray from the origin onto {rho = r}.

    Returns ``(slid, ok)``. A ray fails when no bracket is found or rho is
    not monotone on the bracket (checked at ``check_points`` samples).
    """
    x = np.asarray(points, dtype=float)
    m = x.shape[0]
    if m == 0:
        return x.copy(), np.ones(0, bool)
    lo = np.ones(m)
    hi = np.ones(m)
    f1 = rho(x) - r
    ok = np.isfinite(f1)
    above = f1 > 0
    # expand a bracket [lo, hi] in the ray parameter
    step = np.full(m, 0.05)
    for _ in range(40):
        need_lo = above & (rho(x * lo[:, None]) - r > 0)
        need_hi = ~above & (rho(x * hi[:, None]) - r < 0)
        if not (need_lo.any() or need_hi.any()):
            break
        lo = np.where(need_lo, np.maximum(lo * (1 - step), 1e-9), lo)
        hi = np.where(need_hi, hi * (1 + step), hi)
        step = np.minimum(step * 1.6, 0.5)
    f_lo = rho(x * lo[:, None]) - r
    f_hi = rho(x * hi[:, None]) - r
    ok &= (f_lo <= 0) & (f_hi >= 0)
    ts = np.linspace(0.0, 1.0, check_points)
    prev = None
    for t in ts:
        v = rho(x * (lo + t * (hi - lo))[:, None])
        if prev is not None:
            ok &= v >= prev - 1e-12 * (1.0 + np.abs(prev))
        prev = v
    a, b = lo.copy(), hi.copy()
    for _ in range(n_bisect):
        mid = 0.5 * (a + b)
        fm = rho(x * mid[:, None]) - r
        a = np.where(fm <= 0, mid, a)
        b = np.where(fm <= 0, b, mid)
    s = 0.5 * (a + b)
    return x * s[:, None], ok


# -- grid seeding ----------------------------------------------------------------
def _grid_centers(n: int, half_cells: int, pitch: float, keep) -> np.ndarray:
    lo = np.full((1, n), -half_cells, dtype=np.int64)
    hi = np.full((1, n), half_cells, dtype=np.int64)
    patterns = [np.array(b, dtype=bool) for b in itertools.product((False, True), repeat=n)]
    while True:
        mask = keep((lo - 0.5) * pitch, (hi + 0.5) * pitch)
        lo, hi = lo[mask], hi[mask]
        if lo.shape[0] == 0:
            return np.zeros((0, n))
        split = hi > lo
        if not split.any():
            return lo.astype(float) * pitch
        mid = (lo + hi) // 2
        new_lo, new_hi = [], []
        for bits in patterns:
            valid = ~(bits & ~split).any(axis=1)
            c_lo = np.where(bits, mid + 1, lo)
            c_hi = np.where(bits, hi, np.where(split, mid, hi))
            new_lo.append(c_lo[valid])
            new_hi.append(c_hi[valid])
        lo = np.concatenate(new_lo)
        hi = np.concatenate(new_hi)


def _box_norm_range(blo, bhi):
    near = np.where(blo > 0, blo, np.where(bhi < 0, -bhi, 0.0))
    far = np.maximum(np.abs(blo), np.abs(bhi))
    return np.linalg.norm(near, axis=1), np.linalg.norm(far, axis=1)


def _make_keep(eqs, ineqs, annulus, level):
    def keep(blo, bhi):
        mask = np.ones(blo.shape[0], bool)
        for p in eqs:
            lo, hi = p.interval(blo, bhi)
            slack = 1e-12 * (1.0 + np.abs(lo) + np.abs(hi))
            mask &= (lo <= slack) & (hi >= -slack)
        for g in ineqs:
            _, hi = g.interval(blo, bhi)
            mask &= hi >= -1e-12 * (1.0 + np.abs(hi))
        if annulus is not None:
            near, far = _box_norm_range(blo, bhi)
            mask &= (near <= annulus[1]) & (far >= annulus[0])
        if level is not None:
            lo, hi = level.rho.interval(blo, bhi)
            mask &= (lo <= level.r + level.band) & (hi >= level.r - level.band)
        return mask
    return keep


def thin(points: np.ndarray, min_dist: float, priority: np.ndarray | None = None) -> np.ndarray:
    """Greedy thinning: visit points by (priority, lexicographic order) and keep
    a point unless a kept point lies strictly closer than ``min_dist``.

    Returns the indices kept, in visiting order.
    """
    m = points.shape[0]
    if m == 0:
        return np.zeros(0, dtype=np.int64)
    keys = [points[:, k] for k in range(points.shape[1] - 1, -1, -1)]
    if priority is not None:
        keys.append(priority)
    order = np.lexsort(keys)
    tree = cKDTree(points)
    neighbours = tree.query_ball_point(points, min_dist * (1 - 1e-9))
    suppressed = np.zeros(m, bool)
    kept = []
    for i in order:
        if suppressed[i]:
            continue
        kept.append(i)
        suppressed[neighbours[i]] = True
    return np.asarray(kept, dtype=np.int64)


def _land(seeds, target, level):
    """Project seeds onto the equalities, then onto the level. Returns (pts, ok, slide_failed)."""
    pts, ok = seeds, np.ones(seeds.shape[0], bool)
    if target:
        pts, ok, _ = project_batch(seeds, target)
    slide_failed = np.zeros(seeds.shape[0], bool)
    if level is not None and ok.any():
        idx = np.flatnonzero(ok)
        moved, ok_level = _onto_level(pts[idx], target, level)
        pts = pts.copy()
        pts[idx] = moved
        ok[idx] = ok_level
        slide_failed[idx] = ~ok_level
    return pts, ok, slide_failed


def _refined_seeds(n, seeds, pitch, keep, target, level):
    """Land grid seeds, bisecting cells whose seed lands farther than 1.5 cell diameters away.

    Near singular points Newton (or a ray nearly tangent to the level) can
    carry a cell's centre far from that cell, leaving holes; smaller cells
    fix this. Returns (points, attempts, failures) where the ray counts refer
    to the top-level seeds.
    """
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    centers, width = seeds, pitch
    found = []
    attempts = failures = 0
    for depth in range(REFINE_DEPTH + 1):
        pts, ok, slide_failed = _land(centers, target, level)
        if depth == 0 and level is not None:
            attempts, failures = centers.shape[0], int(slide_failed.sum())
        near = ok & (np.linalg.norm(pts - centers, axis=1) <= 1.5 * width * math.sqrt(n))
        found.append(pts[near])
        redo = centers[~near]
        if depth == REFINE_DEPTH or redo.shape[0] == 0:
            break
        q = width / 4.0
        kids = (redo[:, None, :] + q * signs[None, :, :]).reshape(-1, n)
        kids = kids[keep(kids - q, kids + q)][:REFINE_BUDGET]
        if kids.shape[0] == 0:
            break
        centers, width = kids, width / 2.0
    return np.vstack(found), attempts, failures


def _seed_region(s: SemialgebraicSet, region: int, box_radius: float, pitch: float,
                 annulus, level: Level | None, tol_sample: float, rng, jitter: float):
    """Seeds for one region over all boundary strata. Returns (points, codim, attempts, failures)."""
    n = s.ambient_dim
    eqs = s.equalities(region)
    ineqs = [c.as_ge() for c in s.inequalities(region)]
    half_cells = int(math.ceil(box_radius / pitch))
    out, codims = [], []
    attempts = failures = 0
    for k in range(0, MAX_BOUNDARY_CODIM + 1):
        if len(eqs) + k > n:
            break
        for active in itertools.combinations(range(len(ineqs)), k):
            active_polys = [ineqs[i] for i in active]
            rest = [ineqs[i] for i in range(len(ineqs)) if i not in active]
            target = eqs + active_polys
            keep = _make_keep(target, rest, annulus, level)
            seeds = _grid_centers(n, half_cells, pitch, keep)
            if seeds.shape[0] == 0:
                continue
            if jitter and k == 0:
                seeds = seeds + rng.uniform(-jitter, jitter, seeds.shape) * pitch
            pts, a, f = _refined_seeds(n, seeds, pitch, keep, target, level)
            attempts += a
            failures += f
            if pts.shape[0] == 0:
                continue
            res = s.region_residuals(pts)[:, region]
            good = res <= tol_sample
            if annulus is not None:
                nrm = np.linalg.norm(pts, axis=1)
                good &= (nrm >= annulus[0]) & (nrm <= annulus[1])
            out.append(pts[good])
            codims.append(np.full(int(good.sum()), len(target)))
    if not out:
        return np.zeros((0, n)), np.zeros(0, dtype=np.int64), attempts, failures
    return np.vstack(out), np.concatenate(codims), attempts, failures


def _onto_level(pts, target, level: Level, rounds: int = 30):
    """Alternate radial sliding and projection until both the level and the
    equalities hold."""
    ok = np.ones(pts.shape[0], bool)
    for _ in range(rounds):
        pts, slid_ok = slide_to_level(pts, level.rho, level.r)
        ok &= slid_ok
        if not target:
            break
        f, s = _residuals(target, pts)
        if np.all(np.abs(f) <= PROJECTION_TOL * s):
            break
        pts, proj_ok, _ = project_batch(pts, target)
        ok &= proj_ok
    return pts, ok


def _assemble(s: SemialgebraicSet, regions: Sequence[int], box_radius: float, h: float,
              annulus, level, seed: int, jitter: float) -> SampleCloud:
    tol_sample = sample_tolerance(annulus[1] if annulus else box_radius)
    rng = np.random.default_rng(seed)
    pitch = h / 2.0
    pts, codim = [], []
    attempts = failures = 0
    for region in regions:
        p, c, a, f = _seed_region(s, region, box_radius, pitch, annulus, level, tol_sample, rng, jitter)
        pts.append(p)
        codim.append(c)
        attempts += a
        failures += f
    points = np.vstack(pts) if pts else np.zeros((0, s.ambient_dim))
    codim = np.concatenate(codim) if codim else np.zeros(0, dtype=np.int64)
    if points.shape[0] == 0:
        raise EmptyCloudError(
            f"no sample points (regions {list(regions)}, box radius {box_radius:g}, h {h:g})")
    kept = thin(points, pitch, priority=-codim)
    # canonical order: lexicographic in the coordinates
    pts_kept = points[kept]
    order = np.lexsort([pts_kept[:, k] for k in range(pts_kept.shape[1] - 1, -1, -1)])
    pts_kept = pts_kept[order]
    mask = s.region_residuals(pts_kept) <= tol_sample
    tag = np.argmax(mask, axis=1)
    return SampleCloud(pts_kept, tag, h, annulus, s, mask, level, failures, attempts)


def sample_region(s: SemialgebraicSet, region_index: int, annulus: tuple, h: float,
                  seed: int = 0, jitter: float = 0.0) -> SampleCloud:
    """Near-uniform cloud of spacing ~h/2 on one region inside ``r_min <= |x| <= r_max``.

    ``jitter`` (in units of the grid pitch) randomises top-stratum seeds with
    ``seed``; the default grid is deterministic without it.
    """
    r_min, r_max = annulus
    if not 0 < r_min < r_max:
        raise ValueError("annulus must satisfy 0 < r_min < r_max")
    if not 0 < h < r_max - r_min:
        raise ValueError("h must satisfy 0 < h < r_max - r_min")
    if not 0 <= region_index < len(s.regions):
        raise IndexError(f"region {region_index} out of range")
    return _assemble(s, [region_index], r_max, h, (float(r_min), float(r_max)), None, seed, jitter)


def sample_set(s: SemialgebraicSet, annulus: tuple, h: float, seed: int = 0,
               jitter: float = 0.0) -> SampleCloud:
    """Like :func:`sample_region` but over every region, thinned jointly."""
    r_min, r_max = annulus
    if not 0 < r_min < r_max:
        raise ValueError("annulus must satisfy 0 < r_min < r_max")
    if not 0 < h < r_max - r_min:
        raise ValueError("h must satisfy 0 < h < r_max - r_min")
    return _assemble(s, range(len(s.regions)), r_max, h, (float(r_min), float(r_max)), None,
                     seed, jitter)


def sample_level(s: SemialgebraicSet, box_radius: float, h: float, level: Level | None = None,
                 seed: int = 0) -> SampleCloud:
    """Cloud on the whole set inside the box [-R, R]^n, optionally pushed onto a rho-level."""
    return _assemble(s, range(len(s.regions)), box_radius, h, None, level, seed, 0.0)


# -- graphs ------------------------------------------------------------------------
def build_graph(cloud: SampleCloud, connect_factor: float = 3.0,
                s: SemialgebraicSet | None = None) -> MeshGraph:
    """Connect points closer than ``connect_factor * h`` whose chord midpoint
    lies within first-order distance 0.2*h of the set (and of the cloud's level, if any), and
    that share at least one region."""
    if connect_factor < 2:
        raise ValueError("connect_factor must be >= 2")
    s = s if s is not None else cloud.set
    h = cloud.spacing
    pts = cloud.points
    if len(cloud) < 2:
        return MeshGraph(cloud, np.zeros((0, 2), np.int64), np.zeros(0), None)
    pairs = cKDTree(pts).query_pairs(connect_factor * h, output_type="ndarray")
    if pairs.shape[0] == 0:
        return MeshGraph(cloud, np.zeros((0, 2), np.int64), np.zeros(0), None)
    pairs = np.sort(pairs, axis=1)
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    share = (cloud.region_mask[pairs[:, 0]] & cloud.region_mask[pairs[:, 1]]).any(axis=1)
    pairs = pairs[share]
    mid = 0.5 * (pts[pairs[:, 0]] + pts[pairs[:, 1]])
    # distance band only: a residual test would admit chords across a
    # crossing, where the defining polynomial is tiny but the set is not near
    ok = (s.region_distances(mid) <= 0.2 * h).any(axis=1)
    if cloud.level is not None:
        ok &= np.abs(cloud.level.rho(mid) - cloud.level.r) <= cloud.level.band
    pairs = pairs[ok]
    w = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
    pos = w > 0
    return MeshGraph(cloud, pairs[pos].astype(np.int64), w[pos], None)


def attach_apex(graph: MeshGraph, apex_radius: float) -> MeshGraph:
    """Add a vertex at the origin joined by straight chords to every point
    with |p| <= apex_radius."""
    if graph.apex_index is not None:
        raise ValueError("graph already has an apex")
    pts = graph.cloud.points
    nrm = np.linalg.norm(pts, axis=1)
    near = np.flatnonzero((nrm <= apex_radius) & (nrm > 0))
    if near.size == 0:
        raise IsolatedApexError(f"no points within apex_radius {apex_radius:g}; apex would be isolated")
    apex = len(graph.cloud)
    new_edges = np.column_stack([near, np.full(near.size, apex)])
    return MeshGraph(graph.cloud, np.vstack([graph.edges, new_edges]),
                     np.concatenate([graph.weights, nrm[near]]), apex)


def graph_components(graph: MeshGraph) -> list[np.ndarray]:
    """Connected components ordered by their smallest vertex index."""
    from scipy.sparse.csgraph import connected_components

    if graph.n_vertices == 0:
        return []
    _, labels = connected_components(graph.csr, directed=False)
    comps: dict[int, list[int]] = {}
    for v, lab in enumerate(labels):
        comps.setdefault(int(lab), []).append(v)
    return sorted((np.asarray(c, dtype=np.int64) for c in comps.values()), key=lambda c: c[0])
