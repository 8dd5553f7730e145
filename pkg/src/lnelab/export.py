"""CSV, JSON and self-contained SVG writers. Float formatting is fixed so
repeated runs produce byte-identical files."""
from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(round(x, 12) + 0.0)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cloud_csv(cloud) -> str:
    n = cloud.points.shape[1]
    norms = np.linalg.norm(cloud.points, axis=1)
    rows = [[i, *map(fmt, p), int(cloud.region_tag[i]), fmt(norms[i])]
            for i, p in enumerate(cloud.points)]
    return _csv(["idx", *[f"x{k + 1}" for k in range(n)], "region", "norm"], rows)


def graph_csv(graph) -> str:
    return _csv(["i", "j", "weight"],
                [[int(i), int(j), fmt(w)] for (i, j), w in zip(graph.edges, graph.weights)])


def estimate_csv(est) -> str:
    i, j = est.witness_pair
    return _csv(["K", "eta", "landmarks", "witness_i", "witness_j", "d_inn", "d_out"],
                [[fmt(est.constant), fmt(est.eta), est.landmarks, i, j, fmt(est.d_inn), fmt(est.d_out)]])


SLICE_HEADER = ["r", "component", "K", "separation_ratio", "points", "edges"]


def slice_csv(link, estimates, sep) -> str:
    rows = [[fmt(link.r), k, fmt(e.constant), fmt(sep), int(c.size),
             int(link.graph.induced(c).edges.shape[0])]
            for k, (e, c) in enumerate(zip(estimates, link.components))]
    return _csv(SLICE_HEADER, rows)


def radius_slice_csv(result) -> str:
    """Slice CSV rebuilt from one row of a sweep report."""
    rows = [[fmt(result.r), k, fmt(K), fmt(result.separation_ratio), n, e]
            for k, (K, n, e) in enumerate(zip(result.per_component_K, result.component_points,
                                               result.component_edges))]
    return _csv(SLICE_HEADER, rows)


def flow_csv(path) -> str:
    n = path.vertices.shape[1]
    rows = [[k, *map(fmt, v), fmt(path.rho_values[k]), fmt(path.arc_length[k])]
            for k, v in enumerate(path.vertices)]
    return _csv(["k", *[f"x{i + 1}" for i in range(n)], "rho", "cumlen"], rows)


def report_csv(report) -> str:
    rows = []
    for p in report.per_radius:
        rows.append([fmt(p.r), p.components, fmt(p.max_K), ";".join(fmt(k) for k in p.per_component_K),
                     fmt(p.separation_ratio), p.points, p.edges, int(p.cutoff_limited),
                     int(p.low_confidence), int(p.split_unresolved)])
    return _csv(["r", "components", "max_K", "per_component_K", "separation_ratio", "points",
                 "edges", "cutoff_limited", "low_confidence", "split_unresolved"], rows)


def report_json(report) -> str:
    doc = report.summary()
    doc["link_verdict"] = None if report.link_verdict is None else report.link_verdict.value
    doc["germ_verdict"] = None if report.germ_verdict is None else report.germ_verdict.value
    doc["germ_estimates"] = [{"scale": g.scale, "K": g.K, "points": g.points}
                             for g in report.germ_estimates]
    doc["settings"] = report.settings
    doc["rho"] = report.rho.describe()
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


# -- SVG -----------------------------------------------------------------------------
_W, _H, _PAD = 480, 360, 40


def _frame(body: list, title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
            f'viewBox="0 0 {_W} {_H}">\n<rect width="100%" height="100%" fill="white"/>\n'
            f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" '
            f'font-size="13">{title}</text>\n')
    return head + "\n".join(body) + "\n</svg>\n"


def _scale(v, lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return a + (v - lo) / span * (b - a)


def best_plane(points: np.ndarray) -> np.ndarray:
    """2-D coordinates of the points in their principal plane."""
    if points.shape[1] <= 2:
        return points if points.shape[1] == 2 else np.column_stack([points[:, 0], np.zeros(len(points))])
    centred = points - points.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    axes = vt[:2]
    for a in axes:  # fix the SVD sign ambiguity so output is reproducible
        k = int(np.argmax(np.abs(a)))
        if a[k] < 0:
            a *= -1
    return centred @ axes.T


def scatter_svg(points: np.ndarray, title: str, labels=None) -> str:
    xy = best_plane(np.asarray(points, dtype=float))
    if len(xy) == 0:
        return _frame([], title)
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = max(hi - lo)
    mid = (lo + hi) / 2
    lo, hi = mid - span / 2, mid + span / 2
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    body = []
    for k, (x, y) in enumerate(xy):
        c = palette[int(labels[k]) % len(palette)] if labels is not None else palette[0]
        px = _scale(x, lo[0], hi[0], _PAD, _W - _PAD)
        py = _scale(y, lo[1], hi[1], _H - _PAD, _PAD)
        body.append(f'<circle cx="{px:.2f}" cy="{py:.2f}" r="1.6" fill="{c}"/>')
    return _frame(body, title)


def loglog_svg(r, k, title: str = "K(r)") -> str:
    r = np.asarray(r, dtype=float)
    k = np.asarray(k, dtype=float)
    ok = np.isfinite(k) & (k > 0) & (r > 0)
    if not ok.any():
        return _frame([], title)
    lx, ly = np.log10(r[ok]), np.log10(k[ok])
    x0, x1 = lx.min(), lx.max()
    y0, y1 = min(ly.min(), 0.0), ly.max() + 0.1
    pts = [(_scale(a, x0, x1, _PAD, _W - _PAD), _scale(b, y0, y1, _H - _PAD, _PAD)) for a, b in zip(lx, ly)]
    body = [f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
            f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
            f'<text x="{_W / 2:.1f}" y="{_H - 8}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">log10 r</text>',
            f'<text x="12" y="{_H / 2:.1f}" font-family="sans-serif" font-size="11" '
            f'transform="rotate(-90 12 {_H / 2:.1f})">log10 K</text>',
            '<polyline fill="none" stroke="#1f77b4" points="'
            + " ".join(f"{x:.2f},{y:.2f}" for x, y in pts) + '"/>']
    body += [f'<circle cx="{x:.2f}" cy="{y:.2f}" r="3" fill="#1f77b4"/>' for x, y in pts]
    return _frame(body, title)
