"""Bottleneck and Wasserstein distances, persistence images and distances
between distributed invariants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .persistence import PersistenceDiagram


@dataclass(frozen=True)
class MetricConfig:
    """How two multi-degree diagrams are compared.

    ``degrees=None`` compares every non-truncated degree present in either
    diagram; the result is the maximum over degrees.
    """

    flavor: str = "bottleneck"
    p: float = 2.0
    degrees: tuple | None = None

    def __post_init__(self):
        if self.flavor not in ("bottleneck", "wasserstein"):
            raise ValueError(f"unknown metric flavor {self.flavor!r}")
        if self.p < 1:
            raise ValueError("Wasserstein order p must be >= 1")


def _points(D, degree) -> np.ndarray:
    if isinstance(D, PersistenceDiagram):
        return D[degree]
    return np.asarray(D, dtype=float).reshape(-1, 2)


def _split(pts):
    inf = np.isinf(pts[:, 1])
    return pts[~inf], np.sort(pts[inf, 0])


def _sup_costs(a, b):
    return np.maximum(np.abs(a[:, None, 0] - b[None, :, 0]), np.abs(a[:, None, 1] - b[None, :, 1]))


def _perfect_matching_exists(a, b, cab, da, db, c) -> bool:
    s, t = len(a), len(b)
    rows, cols = np.nonzero(cab <= c)
    r = [rows, np.arange(s)[da <= c], s + np.arange(t)[db <= c]]
    k = [cols, t + np.arange(s)[da <= c], np.arange(t)[db <= c]]
    # diagonal copies match each other at no cost
    gi, gj = np.meshgrid(np.arange(t), np.arange(s), indexing="ij")
    r.append(s + gi.ravel())
    k.append(t + gj.ravel())
    r, k = np.concatenate(r), np.concatenate(k)
    graph = csr_matrix((np.ones(len(r), dtype=np.int8), (r, k)), shape=(s + t, s + t))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck(A, B, degree: int = 0) -> float:
    """Bottleneck distance with sup-norm ground metric.

    A point may be matched to the diagonal at cost (death - birth) / 2.
    Essential (infinite) points are matched among themselves by sorted birth;
    if their counts differ the distance is infinite.
    """
    a, ea = _split(_points(A, degree))
    b, eb = _split(_points(B, degree))
    if len(ea) != len(eb):
        return math.inf
    ess = float(np.max(np.abs(ea - eb))) if len(ea) else 0.0
    if len(a) + len(b) == 0:
        return ess
    cab = _sup_costs(a, b)
    da = (a[:, 1] - a[:, 0]) / 2
    db = (b[:, 1] - b[:, 0]) / 2
    cand = np.unique(np.concatenate([cab.ravel(), da, db, [0.0]]))
    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _perfect_matching_exists(a, b, cab, da, db, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return max(float(cand[lo]), ess)


def wasserstein_matching(A, B, p: float = 2.0, degree: int = 0):
    """Optimal p-Wasserstein matching of the finite parts.

    Returns ``(total_cost, pairs)`` where ``total_cost`` is the sum of
    cost**p and ``pairs`` lists ``(i, j)`` with ``i`` a row of A's finite
    points (or None for the diagonal) and ``j`` likewise for B.
    """
    a, _ = _split(_points(A, degree))
    b, _ = _split(_points(B, degree))
    s, t = len(a), len(b)
    if s + t == 0:
        return 0.0, []
    C = np.full((s + t, t + s), np.inf)
    C[:s, :t] = _sup_costs(a, b) ** p
    C[np.arange(s), t + np.arange(s)] = ((a[:, 1] - a[:, 0]) / 2) ** p
    C[s + np.arange(t), np.arange(t)] = ((b[:, 1] - b[:, 0]) / 2) ** p
    C[s:, t:] = 0.0
    rows, cols = linear_sum_assignment(C)
    pairs = []
    for i, j in zip(rows, cols):
        ii = int(i) if i < s else None
        jj = int(j) if j < t else None
        if ii is None and jj is None:
            continue
        pairs.append((ii, jj))
    return float(C[rows, cols].sum()), pairs


def wasserstein(A, B, p: float = 2.0, degree: int = 0) -> float:
    """p-Wasserstein distance with sup-norm ground metric and diagonal projection.

    Essential points are matched by sorted birth (infinite on a count mismatch).
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    _, ea = _split(_points(A, degree))
    _, eb = _split(_points(B, degree))
    if len(ea) != len(eb):
        return math.inf
    total, _ = wasserstein_matching(A, B, p, degree)
    total += float(np.sum(np.abs(ea - eb) ** p))
    return total ** (1.0 / p)


def _degrees(A, B, cfg):
    if cfg.degrees is not None:
        return list(cfg.degrees)
    qs = set()
    for D in (A, B):
        qs.update(D.metric_degrees() if isinstance(D, PersistenceDiagram) else [0])
    return sorted(qs)


def diagram_distance(A, B, cfg: MetricConfig = MetricConfig()) -> float:
    """Maximum over the configured degrees of the per-degree distance."""
    out = 0.0
    for q in _degrees(A, B, cfg):
        if cfg.flavor == "bottleneck":
            d = bottleneck(A, B, q)
        else:
            d = wasserstein(A, B, cfg.p, q)
        out = max(out, d)
    return out


@dataclass(frozen=True)
class ImageConfig:
    birth_range: tuple
    persistence_range: tuple
    shape: tuple = (20, 20)
    sigma: float = 0.05

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("bandwidth must be positive")
        if self.birth_range[1] <= self.birth_range[0] or self.persistence_range[1] <= self.persistence_range[0]:
            raise ValueError("image ranges must have positive width")

    def pixel_centers(self):
        h, w = self.shape
        bl, bh = self.birth_range
        pl, ph = self.persistence_range
        bx = bl + (np.arange(w) + 0.5) * (bh - bl) / w
        py = pl + (np.arange(h) + 0.5) * (ph - pl) / h
        return bx, py


@dataclass
class PersistenceImage:
    """``grid[i, j]`` is the value at persistence row i, birth column j."""

    grid: np.ndarray
    config: ImageConfig
    dropped_infinite: int = 0

    def normalized(self):
        """Grid scaled to [0, 1] together with the scale factor used."""
        top = float(self.grid.max())
        return (self.grid / top if top > 0 else self.grid.copy()), top


def image_config_for(diagrams, degree: int, shape=(20, 20), sigma_fraction: float = 0.05) -> ImageConfig:
    """Grid over the birth/persistence bounding box of a batch of diagrams."""
    pts = [_split(_points(D, degree))[0] for D in diagrams]
    pts = np.concatenate(pts) if pts else np.empty((0, 2))
    if len(pts) == 0:
        return ImageConfig((0.0, 1.0), (0.0, 1.0), tuple(shape), sigma_fraction)
    births, pers = pts[:, 0], pts[:, 1] - pts[:, 0]
    brange = (float(births.min()), float(births.max()))
    prange = (float(pers.min()), float(pers.max()))
    brange = brange if brange[1] > brange[0] else (brange[0] - 0.5, brange[0] + 0.5)
    prange = prange if prange[1] > prange[0] else (prange[0] - 0.5, prange[0] + 0.5)
    sigma = sigma_fraction * (prange[1] - prange[0])
    return ImageConfig(brange, prange, tuple(shape), sigma)


def persistence_image(D, degree: int, cfg: ImageConfig) -> PersistenceImage:
    """Sum of persistence-weighted isotropic Gaussians at (birth, persistence)."""
    raw = _points(D, degree)
    finite, ess = _split(raw)
    bx, py = cfg.pixel_centers()
    grid = np.zeros(cfg.shape)
    if len(finite):
        b = finite[:, 0]
        pers = finite[:, 1] - finite[:, 0]
        s2 = cfg.sigma ** 2
        gx = np.exp(-((bx[None, :] - b[:, None]) ** 2) / (2 * s2))
        gy = np.exp(-((py[None, :] - pers[:, None]) ** 2) / (2 * s2))
        grid = np.einsum("k,ki,kj->ij", pers / (2 * np.pi * s2), gy, gx)
    return PersistenceImage(grid, cfg, len(ess))


def average_images(images) -> PersistenceImage:
    images = list(images)
    if not images:
        raise ValueError("nothing to average")
    cfg = images[0].config
    if any(im.config != cfg for im in images):
        raise ValueError("images were computed on different grids")
    grid = np.mean([im.grid for im in images], axis=0)
    return PersistenceImage(grid, cfg, sum(im.dropped_infinite for im in images))


def image_l2(a: PersistenceImage, b: PersistenceImage) -> float:
    if a.config != b.config:
        raise ValueError("images were computed on different grids")
    return float(np.linalg.norm(a.grid - b.grid))


def _entries(X):
    return X.entries if hasattr(X, "entries") else X


def distributed_distance(A, B, cfg: MetricConfig = MetricConfig(), labeled: bool = True) -> float:
    """Distance between two collections of diagrams.

    Labeled: maximum over shared labels (label sets must agree).
    Unlabeled: Hausdorff distance between the two sets of diagrams.
    """
    ea, eb = _entries(A), _entries(B)
    if labeled:
        if set(ea) != set(eb):
            raise ValueError("labeled comparison needs identical subset labels")
        return max((diagram_distance(ea[s], eb[s], cfg) for s in ea), default=0.0)
    da = list(ea.values()) if isinstance(ea, dict) else list(ea)
    db = list(eb.values()) if isinstance(eb, dict) else list(eb)
    if not da or not db:
        return 0.0 if not da and not db else math.inf
    M = np.array([[diagram_distance(x, y, cfg) for y in db] for x in da])
    return float(max(M.min(axis=1).max(), M.min(axis=0).max()))
