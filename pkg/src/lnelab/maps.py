"""The radial transport map onto max-norm levels and a discrete rho-descending flow."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_points
from .exceptions import ConvergenceError, DimensionError, StationaryPointError
from .radius import RadiusFunction
from .sampler import Level, SampleCloud, _onto_level, sample_tolerance, slide_to_level
from .semialgebraic import SemialgebraicSet


def transport_phi(rho: RadiusFunction, x) -> np.ndarray:
    """phi(x) = rho(x) / |x|_inf * x, with phi(0) = 0. Accepts one point or an (m, n) array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[1] != rho.ambient_dim:
        raise DimensionError(f"expected points of dimension {rho.ambient_dim}")
    inf = np.abs(pts).max(axis=1)
    out = np.zeros_like(pts)
    nz = inf > 0
    if nz.any():
        out[nz] = pts[nz] * (rho(pts[nz]) / inf[nz])[:, None]
    return out[0] if single else out


class TransportMap(TransformerMixin, BaseEstimator):
    """The map phi as a transformer; ``inverse_transform`` solves rho(x) = |y|_inf on the ray of y."""

    def __init__(self, rho=None):
        self.rho = rho

    def fit(self, X=None, y=None):
        if self.rho is None:
            raise ValueError("rho must be set")
        if X is not None:
            check_points(X, self.rho.ambient_dim)
        self.n_features_in_ = self.rho.ambient_dim
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        return transport_phi(self.rho, check_points(X, self.n_features_in_))

    def inverse_transform(self, X):
        check_is_fitted(self, "n_features_in_")
        Y = check_points(X, self.n_features_in_)
        out = np.zeros_like(Y)
        level = np.abs(Y).max(axis=1)
        nz = level > 0
        if nz.any():
            pts, ok = slide_to_level(Y[nz], self.rho, level[nz])
            if not ok.all():
                raise ConvergenceError("rho is not monotone along some rays; phi is not invertible there")
            out[nz] = pts
        return out


@dataclass(frozen=True)
class DistortionReport:
    min_ratio: float
    max_ratio: float
    histogram: np.ndarray
    bin_edges: np.ndarray
    ratios: np.ndarray


def transport_distortion(cloud: SampleCloud, rho: RadiusFunction, pairs: int = 2000,
                         seed: int = 0, bins: int = 20) -> DistortionReport:
    """Ratios |phi(x) - phi(y)| / |x - y| over random pairs at distance >= h.

    The histogram is of log-ratios with ``bins`` equal bins.
    """
    pts = cloud.points
    m = pts.shape[0]
    if m < 2:
        raise ValueError("cloud needs at least two points")
    rng = np.random.default_rng(seed)
    phi = transport_phi(rho, pts)
    ratios = []
    have = 0
    for _ in range(50):
        i = rng.integers(0, m, size=2 * pairs)
        j = rng.integers(0, m, size=2 * pairs)
        d = np.linalg.norm(pts[i] - pts[j], axis=1)
        keep = d >= cloud.spacing
        r = np.linalg.norm(phi[i[keep]] - phi[j[keep]], axis=1) / d[keep]
        ratios.append(r[:pairs - have])
        have += ratios[-1].size
        if have >= pairs:
            break
    ratios = np.concatenate(ratios)
    if ratios.size == 0:
        raise ValueError("no pairs at distance >= h")
    hist, edges = np.histogram(np.log(ratios), bins=bins)
    return DistortionReport(float(ratios.min()), float(ratios.max()), hist, edges, ratios)


@dataclass(frozen=True, eq=False)
class FlowPath:
    vertices: np.ndarray
    rho_values: np.ndarray
    arc_length: np.ndarray  # cumulative, starts at 0
    constant_C: float
    levels: np.ndarray  # the level each vertex was placed on
    band: float

    @property
    def length(self) -> float:
        return float(self.arc_length[-1])


def _null_projector(normals: list, n: int) -> np.ndarray:
    if not normals:
        return np.eye(n)
    a = np.array(normals)
    u, sv, _ = np.linalg.svd(a.T, full_matrices=False)
    basis = u[:, sv > 1e-12 * max(sv.max(), 1e-300)]
    return np.eye(n) - basis @ basis.T


def _region_of(s: SemialgebraicSet, x, tol) -> int:
    res = s.region_residuals(x)[0]
    best = int(np.argmin(res))
    if res[best] > tol:
        raise ValueError(f"start point is not on the set (residual {res[best]:.3g})")
    return best


def descend_flow(s: SemialgebraicSet, rho: RadiusFunction, start, target_level: float,
                 step_rel: float = 0.05, h_rel: float = 0.02, max_steps: int = 10_000) -> FlowPath:
    """Walk from ``start`` down to {rho = target_level} inside the set.

    Each step follows minus the gradient of rho projected onto the tangent
    space of the equalities and of the active inequalities that it would
    otherwise violate, is scaled to lower rho by delta = step_rel * rho(start),
    and is then pulled back onto the set and the new level. The recorded
    ``constant_C`` is path length over the drop in rho. ``band`` is
    h/2 with h = h_rel * rho(start).
    """
    x = np.asarray(start, dtype=float)
    n = s.ambient_dim
    if x.shape != (n,):
        raise DimensionError(f"start must have length {n}")
    if not 0 < step_rel <= 0.1:
        raise ValueError("step_rel must lie in (0, 0.1]")
    rho0 = float(rho(x))
    if not 0 < target_level < rho0:
        raise ValueError(f"need 0 < target_level < rho(start) = {rho0:g}")
    tol = sample_tolerance(float(np.linalg.norm(x)))
    region = _region_of(s, x, tol)
    eqs = s.equalities(region)
    ineqs = [c.as_ge() for c in s.inequalities(region)]
    delta = step_rel * rho0
    band = 0.5 * h_rel * rho0
    verts, levels = [x.copy()], [rho0]
    current = rho0
    for _ in range(max_steps):
        if abs(current - target_level) <= 1e-6 * target_level:
            break
        nxt = max(current - delta, target_level)
        g = rho.gradient(x)
        normals = [p.gradient(x) for p in eqs]
        active = [q for q in ineqs if q(x) <= 2 * tol * q.scale(x)]
        d = -_null_projector(normals, n) @ g
        for _ in range(len(active)):
            blocking = [q for q in active if q.gradient(x) @ d < 0]
            if not blocking:
                break
            normals = normals + [q.gradient(x) for q in blocking]
            active = [q for q in active if q not in blocking]
            d = -_null_projector(normals, n) @ g
        dn2 = float(d @ d)
        if dn2 < (1e-10 * np.linalg.norm(g)) ** 2:
            raise StationaryPointError(
                f"projected gradient of rho vanishes at {x.tolist()}", location=x.tolist())
        y = x + d * (current - nxt) / dn2
        level = Level(rho, nxt, band)
        target = list(eqs)
        for _ in range(len(ineqs) + 1):
            pts, ok = _onto_level(y[None, :], target, level)
            if not ok[0]:
                raise ConvergenceError(f"could not return to the set at level {nxt:g}")
            landed = pts[0]
            broken = [q for q in ineqs if q(landed) < -tol * q.scale(landed) and q not in target]
            if not broken:
                break
            target = target + broken
        else:
            raise ConvergenceError(f"flow left the set near {landed.tolist()}")
        x = landed
        current = float(rho(x))
        verts.append(x.copy())
        levels.append(nxt)
    else:
        raise ConvergenceError(f"target level not reached in {max_steps} steps")
    verts = np.array(verts)
    seg = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    values = np.asarray(rho(verts), dtype=float)
    return FlowPath(verts, values, cum, float(cum[-1] / (rho0 - values[-1])), np.array(levels), band)
