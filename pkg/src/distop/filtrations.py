"""Rips and Cech skeleton filtrations, and rounding of filtrations to a grid."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .geometry import PointCloud, pairwise_distances


@dataclass
class FilteredComplex:
    """An m-skeleton simplicial complex on ``vertices`` points with appearance times.

    ``simplices[i]`` is a sorted vertex tuple appearing at ``times[i]``.
    """

    vertices: int
    simplices: list
    times: np.ndarray
    skeleton_dim: int

    def __post_init__(self):
        self.simplices = [tuple(int(v) for v in s) for s in self.simplices]
        self.times = np.asarray(self.times, dtype=float)
        if len(self.simplices) != len(self.times):
            raise ValueError("one appearance time per simplex is required")

    def __len__(self):
        return len(self.simplices)

    def dims(self) -> np.ndarray:
        return np.fromiter((len(s) - 1 for s in self.simplices), dtype=int, count=len(self.simplices))

    def time_of(self) -> dict:
        return dict(zip(self.simplices, self.times.tolist()))

    def check(self) -> None:
        """Raise ``ValueError`` unless this is a valid monotone m-skeleton filtration."""
        t = self.time_of()
        if len(t) != len(self.simplices):
            raise ValueError("duplicate simplices")
        for s, ts in t.items():
            if list(s) != sorted(set(s)) or not all(0 <= v < self.vertices for v in s):
                raise ValueError(f"bad simplex {s}")
            if len(s) - 1 > self.skeleton_dim:
                raise ValueError(f"simplex {s} exceeds skeleton dimension {self.skeleton_dim}")
            if len(s) == 1 and ts != 0:
                raise ValueError(f"vertex {s} must appear at time 0")
            if ts < 0:
                raise ValueError(f"negative appearance time for {s}")
            for face in combinations(s, len(s) - 1):
                if face and (face not in t or t[face] > ts):
                    raise ValueError(f"face {face} of {s} missing or appears later")

    def to_json(self) -> list:
        return [{"vertices": list(s), "time": float(x)} for s, x in zip(self.simplices, self.times)]

    @classmethod
    def from_json(cls, data, vertices=None, skeleton_dim=None) -> "FilteredComplex":
        if isinstance(data, str):
            data = json.loads(data)
        simplices = [tuple(sorted(e["vertices"])) for e in data]
        times = [float(e["time"]) for e in data]
        if vertices is None:
            vertices = 1 + max((max(s) for s in simplices if s), default=-1)
        if skeleton_dim is None:
            skeleton_dim = max((len(s) - 1 for s in simplices), default=0)
        return cls(vertices, simplices, times, skeleton_dim)


def _combos(n, size) -> np.ndarray:
    if size > n:
        return np.empty((0, size), dtype=int)
    return np.array(list(combinations(range(n), size)), dtype=int).reshape(-1, size)


def rips_filtration(D, m: int) -> FilteredComplex:
    """Vietoris-Rips m-skeleton: a simplex appears at its largest pairwise distance."""
    if m < 0:
        raise ValueError("skeleton dimension must be non-negative")
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    simplices = [(i,) for i in range(n)]
    times = [np.zeros(n)]
    for q in range(1, m + 1):
        C = _combos(n, q + 1)
        if len(C) == 0:
            break
        t = np.zeros(len(C))
        for a, b in combinations(range(q + 1), 2):
            np.maximum(t, D[C[:, a], C[:, b]], out=t)
        simplices.extend(map(tuple, C.tolist()))
        times.append(t)
    return FilteredComplex(n, simplices, np.concatenate(times), m)


def _ball_from_boundary(R: np.ndarray) -> tuple[np.ndarray, float]:
    """Smallest ball with all points of R on its boundary (circumball in their affine hull)."""
    if len(R) == 1:
        return R[0].copy(), 0.0
    A = R[1:] - R[0]
    G = A @ A.T
    rhs = 0.5 * np.einsum("ij,ij->i", A, A)
    lam, *_ = np.linalg.lstsq(G, rhs, rcond=None)
    c = R[0] + lam @ A
    return c, float(np.max(np.linalg.norm(R - c, axis=1)))


def _inside(p, center, radius) -> bool:
    return float(np.linalg.norm(p - center)) <= radius + 1e-12 * max(1.0, radius)


def minimal_enclosing_ball(points) -> tuple[np.ndarray, float]:
    """Exact minimal enclosing ball by Welzl's recursion on boundary sets."""
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or len(P) == 0:
        raise ValueError("need a non-empty (n, d) array of points")
    d = P.shape[1]

    def welzl(k, R):
        # ball of P[:k] with the points R on the boundary
        if k == 0 or len(R) == d + 1:
            if not R:
                return P[0].copy(), 0.0
            return _ball_from_boundary(P[R])
        center, radius = welzl(k - 1, R)
        if _inside(P[k - 1], center, radius):
            return center, radius
        return welzl(k - 1, R + [k - 1])

    return welzl(len(P), [])


def cech_filtration(cloud, m: int) -> FilteredComplex:
    """Cech m-skeleton with the diameter convention: a simplex appears at twice
    the radius of the minimal enclosing ball of its vertices.

    Edges get exactly the pairwise distance, so the 1-skeleton agrees with Rips.
    """
    if m < 0:
        raise ValueError("skeleton dimension must be non-negative")
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    D = pairwise_distances(pts)
    K = rips_filtration(D, min(m, 1))
    if m < 2:
        return K
    time = K.time_of()
    simplices, times = list(K.simplices), list(K.times)
    for q in range(2, m + 1):
        for s in combinations(range(len(pts)), q + 1):
            _, r = minimal_enclosing_ball(pts[list(s)])
            # float guard: a ball's radius never shrinks on passing to a superset
            t = max(2.0 * r, max(time[f] for f in combinations(s, q)))
            time[s] = t
            simplices.append(s)
            times.append(t)
    return FilteredComplex(len(pts), simplices, np.array(times), m)


@dataclass
class RoundingGrid:
    """A strictly increasing set of reals; ``round`` sends x to the nearest value,
    rounding up at midpoints."""

    values: np.ndarray
    density: float | None = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size == 0:
            raise ValueError("a rounding grid needs at least one value")
        if np.any(np.diff(v) <= 0):
            raise ValueError("grid values must be strictly increasing")
        self.values = v

    def round(self, x):
        x = np.asarray(x, dtype=float)
        v = self.values
        idx = np.searchsorted(v, x, side="right")
        lo = v[np.clip(idx - 1, 0, len(v) - 1)]
        hi = v[np.clip(idx, 0, len(v) - 1)]
        out = np.where(x >= (lo + hi) / 2, hi, lo)
        out = np.where(idx == 0, v[0], out)
        out = np.where(np.isinf(x), x, out)
        return out if out.ndim else float(out)

    def max_gap(self) -> float:
        return float(np.max(np.diff(self.values))) if len(self.values) > 1 else 0.0

    def covering_radius(self, lo: float, hi: float) -> float:
        """Largest distance from a point of [lo, hi] to the grid."""
        v = self.values
        mids = (v[:-1] + v[1:]) / 2
        cands = np.concatenate([[lo, hi], mids[(mids >= lo) & (mids <= hi)]])
        idx = np.searchsorted(v, cands)
        left = v[np.clip(idx - 1, 0, len(v) - 1)]
        right = v[np.clip(idx, 0, len(v) - 1)]
        return float(np.max(np.minimum(np.abs(cands - left), np.abs(cands - right))))


def round_filtration(K: FilteredComplex, R: RoundingGrid) -> FilteredComplex:
    """Post-compose appearance times with nearest-point rounding to ``R``.

    Rounding is monotone, so the result is again a valid filtration.
    """
    return FilteredComplex(K.vertices, list(K.simplices), R.round(K.times), K.skeleton_dim)
