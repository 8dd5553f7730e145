"""Independent reference values. Nothing here imports the package under test."""
import heapq
import json
import math
from pathlib import Path

import numpy as np


def v_link_constant(r):
    """Worst ratio on the V {(r, x, +-r x): 0 <= x <= r}: tips at distance 2r^2, arms r*sqrt(1+r^2)."""
    return math.sqrt(1 + r * r) / r


def v_arm_length(r):
    return r * math.sqrt(1 + r * r)


def parabola_gap_over_r(r):
    """Gap between x2 = x1^2 and x2 = -x1^2 on the circle of radius r, divided by r."""
    u = (-1 + math.sqrt(1 + 4 * r * r)) / 2  # x1^2 solving x1^2 + x1^4 = r^2
    return 2 * u / r


def chord_ratio(theta):
    """Gap between two rays at angle theta on the unit circle."""
    return 2 * math.sin(theta / 2)


def wedge_constant(theta):
    """Worst inner/outer ratio for two rays at angle theta <= pi joined at the apex."""
    return 1 / math.sin(theta / 2)


def semicircle_ratio():
    return math.pi / 2


def cusp_quartered_factor():
    """Tip ratio ~ u^(-1/2) with cutoff 2u^(3/2) ~ eta ~ h: quartering h scales K by 4^(1/3)."""
    return 4 ** (1 / 3)


def cone_ruling_C():
    return math.sqrt(2)


def punctured_halfplane_constant():
    """Half-plane minus a half-disc of radius a, apex joined to the rim.

    Rim points at angles alpha and pi - alpha are 2a cos(alpha) apart; the
    inner route is min(2a via the apex, a(pi - 2 alpha) along the rim). The
    worst ratio sits where the two routes tie, alpha = pi/2 - 1.
    """
    return 1 / math.sin(1.0)


def dijkstra_all_pairs(n, edges, weights):
    """Textbook heap Dijkstra from every vertex."""
    adj = [[] for _ in range(n)]
    for (i, j), w in zip(edges, weights):
        adj[int(i)].append((int(j), float(w)))
        adj[int(j)].append((int(i), float(w)))
    out = np.full((n, n), np.inf)
    for s in range(n):
        dist = out[s]
        dist[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            d, u = heapq.heappop(heap)
            if d > dist[u]:
                continue
            for v, w in adj[u]:
                nd = d + w
                if nd < dist[v]:
                    dist[v] = nd
                    heapq.heappush(heap, (nd, v))
    return out


def exhaustive_constant(points, edges, weights, eta):
    """max d_inn/d_out over all ordered pairs with d_out >= eta (relative slack 1e-9)."""
    pts = np.asarray(points, dtype=float)
    d_inn = dijkstra_all_pairs(len(pts), edges, weights)
    best = -math.inf
    for i in range(len(pts)):
        for j in range(len(pts)):
            d_out = math.dist(pts[i], pts[j])
            if d_out >= eta * (1 - 1e-9) and i != j:
                best = max(best, d_inn[i, j] / d_out)
    return 1.0 if best == -math.inf else best


def compute():
    radii = [0.4, 0.2, 0.1, 0.05, 0.025]
    return {
        "v_link_constant": {str(r): v_link_constant(r) for r in radii},
        "v_arm_length": {str(r): v_arm_length(r) for r in radii},
        "parabola_gap_over_r": {str(r): parabola_gap_over_r(r) for r in radii},
        "chord_ratio_90": chord_ratio(math.pi / 2),
        "wedge_constant_90": wedge_constant(math.pi / 2),
        "semicircle_ratio": semicircle_ratio(),
        "cusp_quartered_factor": cusp_quartered_factor(),
        "cone_ruling_C": cone_ruling_C(),
        "punctured_halfplane_constant": punctured_halfplane_constant(),
    }


FROZEN_PATH = Path(__file__).with_name("frozen_oracles.json")


def frozen():
    """Reference values as frozen on disk."""
    return json.loads(FROZEN_PATH.read_text())


if __name__ == "__main__":
    FROZEN_PATH.write_text(json.dumps(compute(), indent=2, sort_keys=True) + "\n")
    print("wrote", FROZEN_PATH)
