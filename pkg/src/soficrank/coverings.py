"""Product pseudometrics on finite point sets and greedy covering bounds.

Points are arrays of shape (P, k, n): P points, k product indices, n torus
(or real) coordinates per index.  The per-index distance is an l2 or sup
norm on the n coordinates (with wrap-around for torus data), combined over
the k indices by the normalized l^p mean ((1/k) sum rho^p)^(1/p), or the
max for p = infinity.

Covering conventions: a set is eps-dense when every point lies strictly
within eps of it, and eps-separated when all pairwise distances are >= eps.
The reported pair brackets the optimal covering number S_eps via
N_{2 eps} <= S_eps <= N_eps: the lower bound is a greedy maximal
2eps-separated set, the upper bound a greedy maximum-coverage eps-cover.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .soficrep import BudgetError

DEFAULT_POINT_BUDGET = 20000
_FULL_MATRIX_LIMIT = 8192       # above this, fall back to streaming greedy

# Distances within one part in 1e9 of a threshold count as at the threshold
# (outside the open ball), so float noise cannot flip exact ties.
_TIE_SNAP = 1.0 - 1e-9


@dataclass(frozen=True)
class PseudometricSpec:
    """Per-index metric kind ("l2", "linf", or "generator", an alias of
    "l2") and product exponent p in [1, inf]."""

    kind: str = "l2"
    p: float = math.inf
    torus: bool = True

    def __post_init__(self):
        if self.kind not in ("l2", "linf", "generator"):
            raise ValueError(f"unknown pseudometric kind {self.kind!r}")
        if not (self.p >= 1):
            raise ValueError("product exponent must satisfy p >= 1")


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 2:
        pts = pts[:, :, None]
    if pts.ndim != 3:
        raise ValueError("points must have shape (P, k) or (P, k, n)")
    return pts


def pair_distances(a, b, metric: PseudometricSpec) -> np.ndarray:
    """Distance matrix between two point arrays under the product metric."""
    pa = _as_points(a)
    pb = _as_points(b)
    diff = np.abs(pa[:, None, :, :] - pb[None, :, :, :])
    if metric.torus:
        diff = np.minimum(diff, 1.0 - diff)
    if metric.kind == "linf":
        per = diff.max(axis=3)
    else:
        per = np.sqrt((diff ** 2).sum(axis=3))
    if math.isinf(metric.p):
        return per.max(axis=2)
    return ((per ** metric.p).mean(axis=2)) ** (1.0 / metric.p)


def _adjacency(points: np.ndarray, metric: PseudometricSpec, thresholds, block: int = 256):
    """Boolean matrices d(i, j) < t for each threshold, built blockwise."""
    n = points.shape[0]
    outs = [np.zeros((n, n), dtype=bool) for _ in thresholds]
    for start in range(0, n, block):
        stop = min(start + block, n)
        dmat = pair_distances(points[start:stop], points, metric)
        for out, t in zip(outs, thresholds):
            out[start:stop] = dmat < t * _TIE_SNAP
    return outs


def _greedy_cover(adj: np.ndarray) -> list[int]:
    """Maximum-coverage greedy cover over the strict adjacency relation."""
    n = adj.shape[0]
    uncovered = np.ones(n, dtype=bool)
    counts = adj.sum(axis=1).astype(np.int64)
    chosen: list[int] = []
    # points adjacent only to themselves are forced centers in any cover
    isolated = np.flatnonzero(counts == 1)
    if isolated.size:
        chosen.extend(int(i) for i in isolated)
        uncovered[isolated] = False
        counts[isolated] = 0
    while uncovered.any():
        best = int(np.argmax(counts))
        newly = uncovered & adj[best]
        chosen.append(best)
        counts -= adj[:, newly].sum(axis=1)
        uncovered &= ~adj[best]
    return chosen


def _greedy_separated(adj: np.ndarray) -> list[int]:
    """Maximal separated set in scan order: keep i unless it is strictly
    within the threshold of an already kept point."""
    n = adj.shape[0]
    conflicted = np.zeros(n, dtype=bool)
    kept: list[int] = []
    for i in range(n):
        if not conflicted[i]:
            kept.append(i)
            conflicted |= adj[i]
    return kept


def _greedy_separated_streaming(points, metric, threshold) -> list[int]:
    kept: list[int] = []
    for i in range(points.shape[0]):
        if kept:
            d = pair_distances(points[i : i + 1], points[kept], metric)[0]
            if (d < threshold * _TIE_SNAP).any():
                continue
        kept.append(i)
    return kept


@dataclass
class CoveringBounds:
    eps: float
    lower: int          # size of a 2eps-separated set: S_eps is at least this
    upper: int          # size of an explicit eps-cover: S_eps is at most this
    method: str = "max-coverage"
    cover_indices: list[int] | None = None
    separated_indices: list[int] | None = None

    def __iter__(self):
        return iter((self.lower, self.upper))


def covering_number_bruteforce(
    points,
    metric: PseudometricSpec,
    eps: float,
    budget: int = DEFAULT_POINT_BUDGET,
    keep_indices: bool = False,
) -> CoveringBounds:
    """Bracket the optimal eps-covering number of a finite sample.

    The lower bound is the size of a greedy maximal 2eps-separated subset
    (every eps-dense set must hit each of its points separately); the upper
    bound is the size of a greedy maximum-coverage eps-cover, which is an
    actual cover of the sample.  Both scans are deterministic in the input
    order.
    """
    pts = _as_points(points)
    n = pts.shape[0]
    if n == 0:
        raise ValueError("empty point set")
    if n > budget:
        raise BudgetError(f"{n} points exceed the covering budget {budget}")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if n <= _FULL_MATRIX_LIMIT:
        adj_eps, adj_2eps = _adjacency(pts, metric, [eps, 2.0 * eps])
        cover = _greedy_cover(adj_eps)
        separated = _greedy_separated(adj_2eps)
        method = "max-coverage"
    else:
        separated = _greedy_separated_streaming(pts, metric, 2.0 * eps)
        cover = _greedy_separated_streaming(pts, metric, eps)
        method = "greedy-scan"
    return CoveringBounds(
        eps=eps,
        lower=len(separated),
        upper=len(cover),
        method=method,
        cover_indices=cover if keep_indices else None,
        separated_indices=separated if keep_indices else None,
    )


def covering_exponents(bounds: CoveringBounds, degree: int) -> tuple[float, float]:
    """Normalized exponents log(count) / (degree * log(1/eps))."""
    denom = degree * math.log(1.0 / bounds.eps)
    return math.log(bounds.lower) / denom, math.log(bounds.upper) / denom
