"""Radius sweeps over links, direct germ estimates, and the three-way verdict."""
from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import EmptyLinkError, IsolatedApexError
from .link import cutoff_limited, extract_link, link_lne_constant, separation_ratio, split_unresolved
from .metric import lne_constant
from .radius import RadiusFunction
from .sampler import attach_apex, build_graph, sample_set
from .semialgebraic import SemialgebraicSet


class Verdict(str, enum.Enum):
    LNE = "LNE"
    NOT_LNE = "NOT_LNE"
    INCONCLUSIVE = "INCONCLUSIVE"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Thresholds:
    growth: float = -0.25  # slope of log K vs log r at or below which K diverges
    separation: float = 0.25  # slope of log(ratio) vs log r at or above which ratio -> 0
    germ_ratio: float = 1.3  # per-halving growth of germ K counted as divergence
    k_variation: float = 0.15
    separation_variation: float = 0.25
    monotone_slack: float = 0.02
    tail: int = 3
    fit_fraction: float = 2.0 / 3.0


@dataclass(frozen=True)
class RadiusResult:
    r: float
    components: int
    per_component_K: tuple
    separation_ratio: float
    points: int
    edges: int
    cutoff_limited: bool = False
    low_confidence: bool = False
    split_unresolved: bool = False
    component_points: tuple = ()
    component_edges: tuple = ()

    @property
    def max_K(self) -> float:
        return max(self.per_component_K)


@dataclass(frozen=True)
class GermEstimate:
    scale: float
    K: float
    points: int
    pairs_evaluated: int


@dataclass
class SweepReport:
    rho: RadiusFunction
    radii: list
    per_radius: list
    germ_estimates: list = field(default_factory=list)
    growth_exponent: float = float("nan")
    separation_trend: float = float("nan")
    verdict: Verdict | None = None
    reasons: list = field(default_factory=list)
    link_verdict: Verdict | None = None
    germ_verdict: Verdict | None = None
    settings: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "verdict": None if self.verdict is None else self.verdict.value,
            "growth_exponent": _json_float(self.growth_exponent),
            "separation_trend": _json_float(self.separation_trend),
            "reasons": list(self.reasons),
        }


def _json_float(x):
    if x is None or math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _tail_count(m: int, fraction: float) -> int:
    return max(2, math.ceil(fraction * m)) if m >= 2 else m


def _fit_slope(r, y, fraction) -> float:
    """Least-squares slope of log y vs log r over the smallest ceil(fraction*m) radii."""
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = np.isfinite(y) & (y > 0)
    r, y = r[ok], y[ok]
    if r.size < 2:
        return float("nan")
    order = np.argsort(r)
    take = order[:_tail_count(r.size, fraction)]
    return float(np.polyfit(np.log(r[take]), np.log(y[take]), 1)[0])


def usable_radii(per_radius) -> list:
    """Slices ordered by decreasing r, without those whose component split is
    below resolution (unless that would leave nothing)."""
    per = sorted(per_radius, key=lambda p: -p.r)
    kept = [p for p in per if not p.split_unresolved]
    return kept or per


def growth_radii(per_radius) -> tuple[list, bool]:
    """Radii used for the growth fit and whether they are only lower bounds.

    Slices whose K is cutoff-limited are left out while at least two
    resolved slices remain; otherwise every slice is used and the K values
    are lower bounds (links that are not LNE themselves, such as cusps).
    """
    per = usable_radii(per_radius)
    resolved = [p for p in per if not p.cutoff_limited]
    if len(resolved) >= 2:
        return resolved, False
    return per, True


def growth_exponent(per_radius, thresholds: Thresholds = Thresholds()) -> float:
    use, _ = growth_radii(per_radius)
    return _fit_slope([p.r for p in use], [p.max_K for p in use], thresholds.fit_fraction)


def separation_trend(per_radius, thresholds: Thresholds = Thresholds()) -> float:
    use = [p for p in usable_radii(per_radius) if math.isfinite(p.separation_ratio)]
    return _fit_slope([p.r for p in use], [p.separation_ratio for p in use], thresholds.fit_fraction)


def _radius_job(s, rho, r, h_rel, eta_rel, landmarks, seed):
    try:
        link = extract_link(s, rho, r, h_rel, seed)
    except EmptyLinkError as exc:
        raise EmptyLinkError(f"sweep aborted at r={r:g}: {exc}; try a larger h_rel or r0") from exc
    ests = link_lne_constant(link, eta_rel, landmarks, seed)
    worst = max(range(len(ests)), key=lambda i: ests[i].constant)
    label = np.empty(len(link.cloud), dtype=np.int64)
    for k, comp in enumerate(link.components):
        label[comp] = k
    edges = np.bincount(label[link.graph.edges[:, 0]], minlength=len(link.components))
    return RadiusResult(
        r=float(r), components=len(link.components),
        per_component_K=tuple(float(e.constant) for e in ests),
        separation_ratio=separation_ratio(link), points=len(link.cloud),
        edges=int(link.graph.edges.shape[0]),
        cutoff_limited=cutoff_limited(ests[worst], link.spacing),
        low_confidence=link.low_confidence,
        split_unresolved=split_unresolved(link),
        component_points=tuple(int(c.size) for c in link.components),
        component_edges=tuple(int(e) for e in edges))


def sweep_radii(r0: float, steps: int) -> list:
    return [r0 * 2.0 ** (-k) for k in range(steps + 1)]


def sweep_links(s: SemialgebraicSet, rho: RadiusFunction, r0: float = 0.4, steps: int = 4,
                h_rel: float = 0.02, landmarks: int = 256, seed: int = 42, eta_rel: float = 0.1,
                n_jobs: int = 1, thresholds: Thresholds = Thresholds()) -> SweepReport:
    """Links at r0 * 2^-k for k = 0..steps with per-component K and separation.

    Slices whose worst pair sits at the eta cutoff are kept in the report but
    their K is only a lower bound; see :func:`growth_radii` for how the
    growth fit treats them.
    """
    if steps < 3:
        raise ValueError("steps must be >= 3 (a slope fit needs four radii)")
    if not r0 > 0:
        raise ValueError("r0 must be positive")
    radii = sweep_radii(r0, steps)

    def job(r):
        return _radius_job(s, rho, r, h_rel, eta_rel, landmarks, seed)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            per_radius = list(pool.map(job, radii))
    else:
        per_radius = [job(r) for r in radii]
    return SweepReport(
        rho=rho, radii=radii, per_radius=per_radius,
        growth_exponent=growth_exponent(per_radius, thresholds),
        separation_trend=separation_trend(per_radius, thresholds),
        settings={"r0": r0, "steps": steps, "h_rel": h_rel, "landmarks": landmarks,
                  "seed": seed, "eta_rel": eta_rel})


def germ_scales(r0: float, count: int = 3) -> list:
    return [r0 * 2.0 ** (-k) for k in range(count)]


def germ_lne_estimate(s: SemialgebraicSet, scales, h_rel: float = 0.02, landmarks: int = 256,
                      seed: int = 42, n_jobs: int = 1) -> list:
    """Direct LNE constant of the set on the annuli s/8 <= |x| <= s, apex at the origin.

    The apex is joined to every sample within 1.5*s/8 so that paths may pass
    through the origin. An annulus whose pieces cannot reach each other gives
    K = +inf.
    """
    scales = [float(x) for x in scales]
    if len(scales) < 2:
        raise ValueError("need at least two scales")
    if any(b >= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly decreasing")

    def job(scale):
        h = h_rel * scale
        cloud = sample_set(s, (scale / 8.0, scale), h, seed)
        graph = build_graph(cloud)
        try:
            graph = attach_apex(graph, 1.5 * scale / 8.0)
        except IsolatedApexError:
            pass
        est = lne_constant(graph, None, landmarks, seed)
        return GermEstimate(scale, float(est.constant), len(cloud), est.pairs_evaluated)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            return list(pool.map(job, scales))
    return [job(x) for x in scales]


def _monotone(values, increasing: bool, slack: float) -> bool:
    for a, b in zip(values, values[1:]):
        if increasing and b < a * (1 - slack):
            return False
        if not increasing and b > a * (1 + slack):
            return False
    return True


def _variation(values) -> float:
    values = [v for v in values]
    if not values:
        return float("nan")
    if any(not math.isfinite(v) for v in values):
        return float("inf")
    return max(values) / min(values) - 1.0


def link_verdict(report: SweepReport, t: Thresholds = Thresholds()):
    """Verdict from the link track alone (separation and per-component K)."""
    per = usable_radii(report.per_radius)
    reasons = []
    used, lower = growth_radii(per)
    tail_k = [p.max_K for p in used[-t.tail:]]
    g = report.growth_exponent
    if (len(tail_k) >= 2 and math.isfinite(g) and g <= t.growth
            and _monotone(tail_k, True, t.monotone_slack)):
        reasons.append(f"link K grows like r^({g:.1f})" + (" (lower bounds)" if lower else ""))
    finite = [p.separation_ratio for p in per if math.isfinite(p.separation_ratio)]
    st = report.separation_trend
    if (len(finite) >= 2 and math.isfinite(st) and st >= t.separation
            and _monotone(finite[-t.tail:], False, t.monotone_slack)):
        reasons.append(f"separation ratio -> 0 (trend r^({st:.1f}))")
    if reasons:
        return Verdict.NOT_LNE, reasons
    kvar = _variation([p.max_K for p in per])
    seps = [p.separation_ratio for p in per]
    sep_ok = all(math.isinf(x) for x in seps) or (
        all(math.isfinite(x) for x in seps) and _variation(seps) < t.separation_variation)
    if kvar < t.k_variation and sep_ok:
        return Verdict.LNE, [f"link K stable (variation {kvar:.0%})"]
    diag = []
    if not kvar < t.k_variation:
        diag.append(f"link K varies by {kvar:.0%} without a clear power law (slope {g:.2f})")
    if not sep_ok:
        diag.append(f"separation ratio not stable (trend {st:.2f})")
    return Verdict.INCONCLUSIVE, diag


def germ_verdict(germ_estimates, t: Thresholds = Thresholds()):
    """Verdict from the direct germ estimates alone."""
    ks = [g.K for g in sorted(germ_estimates, key=lambda g: -g.scale)]
    if not ks:
        return Verdict.INCONCLUSIVE, ["no germ estimates"]
    if any(math.isinf(k) for k in ks):
        return Verdict.INCONCLUSIVE, ["germ annulus disconnected (K = inf)"]
    ratios = [b / a for a, b in zip(ks, ks[1:])]
    for a, b in zip(ratios, ratios[1:]):
        if a >= t.germ_ratio and b >= t.germ_ratio:
            return Verdict.NOT_LNE, [f"germ K diverges (x{b:.2f} per halving)"]
    var = _variation(ks)
    if var < t.k_variation:
        return Verdict.LNE, [f"germ K stable at {ks[-1]:.3g}"]
    return Verdict.INCONCLUSIVE, [f"germ K varies by {var:.0%} without steady growth"]


def verdict(report: SweepReport, thresholds: Thresholds = Thresholds()):
    """Combine both tracks. Returns ``(Verdict, reasons)`` without touching the report.

    NOT_LNE if either track shows divergence, LNE if both are stable. When
    rho is not declared Lipschitz the link track is reported but not used.
    """
    lv, lr = link_verdict(report, thresholds)
    if not report.germ_estimates:
        gv, gr = Verdict.INCONCLUSIVE, ["no germ estimates"]
    else:
        gv, gr = germ_verdict(report.germ_estimates, thresholds)
    if not report.rho.declared_lipschitz:
        note = "rho is not Lipschitz: link track (" + lv.value + ") not used"
        return gv, gr + [note] + (lr if lv is Verdict.NOT_LNE else [])
    if lv is Verdict.NOT_LNE or gv is Verdict.NOT_LNE:
        reasons = (lr if lv is Verdict.NOT_LNE else []) + (gr if gv is Verdict.NOT_LNE else [])
        return Verdict.NOT_LNE, reasons
    if lv is Verdict.LNE and gv is Verdict.LNE:
        return Verdict.LNE, lr + gr
    return Verdict.INCONCLUSIVE, lr + gr


@dataclass(frozen=True)
class Consistency:
    applicable: bool
    consistent: bool
    link_verdict: Verdict
    germ_verdict: Verdict
    details: dict

    @property
    def anomaly(self) -> bool:
        return self.applicable and not self.consistent


def cross_validate(report: SweepReport, thresholds: Thresholds = Thresholds()) -> Consistency:
    """Compare the link-track and germ-track verdicts; they should agree.

    Not applicable when rho is not Lipschitz (the equivalence needs it).
    """
    lv, _ = link_verdict(report, thresholds)
    gv, _ = germ_verdict(report.germ_estimates, thresholds)
    details = {
        "growth_exponent": report.growth_exponent,
        "separation_trend": report.separation_trend,
        "link_K": [p.max_K for p in report.per_radius],
        "separation_ratio": [p.separation_ratio for p in report.per_radius],
        "germ_K": [g.K for g in report.germ_estimates],
    }
    applicable = bool(report.rho.declared_lipschitz)
    return Consistency(applicable, lv == gv, lv, gv, details)


def run_criterion(s: SemialgebraicSet, rho: RadiusFunction, r0: float = 0.4, steps: int = 4,
                  h_rel: float = 0.02, landmarks: int = 256, seed: int = 42, eta_rel: float = 0.1,
                  germ_count: int = 3, n_jobs: int = 1,
                  thresholds: Thresholds = Thresholds()) -> SweepReport:
    """Full pipeline: link sweep, germ estimates at r0 * 2^-k (k < germ_count), verdict."""
    report = sweep_links(s, rho, r0, steps, h_rel, landmarks, seed, eta_rel, n_jobs, thresholds)
    report.germ_estimates = germ_lne_estimate(s, germ_scales(r0, germ_count), h_rel, landmarks,
                                              seed, n_jobs)
    report.link_verdict, _ = link_verdict(report, thresholds)
    report.germ_verdict, _ = germ_verdict(report.germ_estimates, thresholds)
    report.verdict, report.reasons = verdict(report, thresholds)
    return report


class LneCriterion(BaseEstimator):
    """Estimator front end: ``fit(set)`` runs the sweep and germ estimates.

    After fitting, ``report_`` and ``verdict_`` hold the results and
    ``predict`` returns the verdict string for the fitted set.
    """

    def __init__(self, rho=None, r0=0.4, steps=4, h_rel=0.02, landmarks=256, seed=42,
                 eta_rel=0.1, germ_count=3, n_jobs=1, thresholds=None):
        self.rho = rho
        self.r0 = r0
        self.steps = steps
        self.h_rel = h_rel
        self.landmarks = landmarks
        self.seed = seed
        self.eta_rel = eta_rel
        self.germ_count = germ_count
        self.n_jobs = n_jobs
        self.thresholds = thresholds

    def fit(self, X: SemialgebraicSet, y=None):
        if not isinstance(X, SemialgebraicSet):
            raise TypeError("fit expects a SemialgebraicSet")
        rho = self.rho if self.rho is not None else RadiusFunction.euclidean(X.ambient_dim)
        self.report_ = run_criterion(X, rho, self.r0, self.steps, self.h_rel, self.landmarks,
                                     self.seed, self.eta_rel, self.germ_count, self.n_jobs,
                                     self.thresholds or Thresholds())
        self.verdict_ = self.report_.verdict
        self.consistency_ = cross_validate(self.report_, self.thresholds or Thresholds())
        return self

    def predict(self, X=None):
        check_is_fitted(self, "report_")
        return self.verdict_.value
