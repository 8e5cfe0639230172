"""Point clouds, distance matrices, distortion and furthest-point sampling."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class PointCloud:
    """A labeled point cloud; the label of a point is its row index."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("a point cloud needs at least one point given as rows of an (n, d) array")
        if pts.shape[1] < 1:
            raise ValueError("points must have positive dimension")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def subset(self, idx) -> "PointCloud":
        return PointCloud(self.points[list(idx)])


def pairwise_distances(cloud) -> np.ndarray:
    """Euclidean distance matrix of a cloud (``PointCloud`` or raw array)."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # exact symmetry and zero diagonal regardless of rounding in the einsum
    D = np.triu(D, 1)
    return D + D.T


def check_distance_matrix(D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    if not np.all(np.isfinite(D)) or np.any(D < 0):
        raise ValueError("distance matrix entries must be finite and non-negative")
    if not np.array_equal(D, D.T) or np.any(np.diag(D) != 0):
        raise ValueError("distance matrix must be symmetric with zero diagonal")
    return D


def quasi_isometry_distortion(X, Y, phi=None) -> float:
    """Least eps for which ``phi`` is an eps-quasi-isometry between X and Y.

    ``X`` and ``Y`` are distance matrices; ``phi[i]`` is the index in Y paired
    with index ``i`` of X (identity when omitted).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"size mismatch: {X.shape} vs {Y.shape}")
    phi = _check_bijection(phi, X.shape[0])
    if X.shape[0] < 2:
        return 0.0
    return float(np.max(np.abs(X - Y[np.ix_(phi, phi)])))


def mean_pairwise_distortion(X, Y, phi=None) -> float:
    """Mean of |X[i,j] - Y[phi(i),phi(j)]| over unordered pairs i < j."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    phi = _check_bijection(phi, X.shape[0])
    iu = np.triu_indices(X.shape[0], 1)
    return float(np.mean(np.abs(X - Y[np.ix_(phi, phi)])[iu]))


def _check_bijection(phi, n) -> np.ndarray:
    if phi is None:
        return np.arange(n)
    phi = np.asarray(phi, dtype=int)
    if phi.shape != (n,) or not np.array_equal(np.sort(phi), np.arange(n)):
        raise ValueError("phi must be a permutation of 0..n-1")
    return phi


def furthest_point_sample(D, s: int, seed_index: int = 0) -> tuple[list[int], float]:
    """Greedy maximin sample of ``s`` indices starting at ``seed_index``.

    Returns the sample and its covering radius (largest distance from any
    point to its nearest sample). Ties go to the lowest index.
    """
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if not 1 <= s <= n:
        raise ValueError(f"sample size s={s} must lie in [1, {n}]")
    if not 0 <= seed_index < n:
        raise ValueError(f"seed_index {seed_index} out of range")
    sample = [seed_index]
    nearest = D[seed_index].copy()
    for _ in range(s - 1):
        nxt = int(np.argmax(nearest))  # argmax returns the first maximum
        sample.append(nxt)
        np.minimum(nearest, D[nxt], out=nearest)
    return sample, float(nearest.max())


def load_point_cloud(path) -> PointCloud:
    """Read a CSV point cloud, one point per row, optional header row."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if lineno == 1 and not rows:
                    continue  # header
                raise ValueError(f"{path}: row {lineno}: non-numeric entry in {row!r}") from None
    if not rows:
        raise ValueError(f"{path}: no points found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have differing numbers of columns {sorted(widths)}")
    return PointCloud(np.array(rows))


def save_point_cloud(cloud, path) -> None:
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud)
    np.savetxt(Path(path), pts, delimiter=",", fmt="%.17g")


def load_distance_matrix(path) -> np.ndarray:
    return check_distance_matrix(load_point_cloud(path).points)


def save_matrix(M, path) -> None:
    np.savetxt(Path(path), np.asarray(M), delimiter=",", fmt="%.17g")
