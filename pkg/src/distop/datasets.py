"""Seeded synthetic clouds used by the case study and the alignment runs."""

import numpy as np

from .geometry import PointCloud


def circle(n: int = 500, radius: float = 1.0) -> PointCloud:
    """n evenly spaced points on a circle."""
    t = 2 * np.pi * np.arange(n) / n
    return PointCloud(radius * np.column_stack([np.cos(t), np.sin(t)]))


def disc(n: int = 500, seed: int = 0, radius: float = 1.0) -> PointCloud:
    """n uniform points in a disc, by rejection from the bounding square."""
    rng = np.random.default_rng(seed)
    out = np.empty((0, 2))
    while len(out) < n:
        cand = rng.uniform(-radius, radius, size=(2 * n, 2))
        out = np.vstack([out, cand[np.einsum("ij,ij->i", cand, cand) <= radius ** 2]])
    return PointCloud(out[:n])


def noisy_circle(n: int = 500, n_disc: int | None = None, seed: int = 0) -> PointCloud:
    """Evenly spaced circle points plus uniform disc points (450 + 50 at n=500)."""
    n_disc = n // 10 if n_disc is None else n_disc
    ring = circle(n - n_disc).points
    return PointCloud(np.vstack([ring, disc(n_disc, seed=seed).points]))


def torus(n_theta: int = 16, n_phi: int = 16, R: float = 2.0, r: float = 1.0) -> PointCloud:
    """Angle grid on the standard torus in R^3 (256 points by default)."""
    th, ph = np.meshgrid(2 * np.pi * np.arange(n_theta) / n_theta,
                         2 * np.pi * np.arange(n_phi) / n_phi, indexing="ij")
    th, ph = th.ravel(), ph.ravel()
    return PointCloud(np.column_stack([(R + r * np.cos(ph)) * np.cos(th),
                                       (R + r * np.cos(ph)) * np.sin(th),
                                       r * np.sin(ph)]))


def add_noise(cloud: PointCloud, sigma: float, seed: int = 0) -> PointCloud:
    """Coordinate-wise i.i.d. Gaussian noise."""
    rng = np.random.default_rng(seed)
    return PointCloud(cloud.points + sigma * rng.standard_normal(cloud.points.shape))


GENERATORS = {"circle": circle, "disc": disc, "noisy_circle": noisy_circle}
