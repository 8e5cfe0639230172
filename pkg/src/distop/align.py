"""Align a movable cloud Y to a fixed cloud X by stochastic descent on
per-subset Wasserstein losses between Rips diagrams."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import PointCloud, mean_pairwise_distortion, pairwise_distances, quasi_isometry_distortion
from .metrics import wasserstein_matching
from .persistence import rips_persistence

DEGREES = (0, 1)


@dataclass(frozen=True)
class AdamState:
    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stab: float = 1e-8

    @classmethod
    def zeros(cls, shape, **kw) -> "AdamState":
        return cls(np.zeros(shape), np.zeros(shape), 0, **kw)


def adam_step(state: AdamState, coords, grad, rows=None):
    """Bias-corrected Adam update; returns (new coords, new state).

    With ``rows`` given only those rows move and only their moments are
    updated; the step count is global.
    """
    coords = np.asarray(coords, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if coords.shape != state.first_moment.shape:
        raise ValueError(f"coords shape {coords.shape} does not match state {state.first_moment.shape}")
    rows = np.arange(coords.shape[0]) if rows is None else np.asarray(rows, dtype=int)
    if grad.shape != (len(rows),) + coords.shape[1:]:
        raise ValueError(f"gradient shape {grad.shape} does not match {len(rows)} rows")
    t = state.step_count + 1
    m1 = state.first_moment.copy()
    m2 = state.second_moment.copy()
    m1[rows] = state.beta1 * m1[rows] + (1 - state.beta1) * grad
    m2[rows] = state.beta2 * m2[rows] + (1 - state.beta2) * grad ** 2
    mhat = m1[rows] / (1 - state.beta1 ** t)
    vhat = m2[rows] / (1 - state.beta2 ** t)
    out = coords.copy()
    out[rows] -= state.lr * mhat / (np.sqrt(vhat) + state.eps_stab)
    return out, replace(state, first_moment=m1, second_moment=m2, step_count=t)


@dataclass
class SubsetLoss:
    loss: float
    # (degree, which coordinate of Y's point: 0 birth / 1 death, critical edge, coefficient)
    terms: list = field(default_factory=list)


def _critical_edge(simplex, D):
    if simplex is None or len(simplex) < 2:
        return None
    if len(simplex) == 2:
        return tuple(simplex)
    x, y, z = simplex
    # latest edge in (time, vertices) order
    return max([(x, y), (x, z), (y, z)], key=lambda e: (D[e], e))


def _subset_loss(DX, DY) -> SubsetLoss:
    dx, _ = rips_persistence(DX)
    dy, pair_y = rips_persistence(DY)
    out = SubsetLoss(0.0)
    for q in DEGREES:
        total, pairs = wasserstein_matching(dx, dy, 2.0, q)
        fx, fy = dx[q], dy[q]
        ey = np.isinf(fy[:, 1])
        ex = np.isinf(fx[:, 1])
        crit = [c for c, e in zip(pair_y.pairs[q], ey) if not e]
        fin_x, fin_y = fx[~ex], fy[~ey]
        out.loss += total
        for i, j in pairs:
            if j is None:
                continue
            b, d = fin_y[j]
            birth_e = _critical_edge(crit[j][0], DY)
            death_e = _critical_edge(crit[j][1], DY)
            if i is None:
                half = (d - b) / 2
                # d/dy of ((d - b) / 2)^2
                out.terms += [(q, death_e, half), (q, birth_e, -half)]
            else:
                xb, xd = fin_x[i]
                if abs(d - xd) >= abs(b - xb):
                    out.terms.append((q, death_e, 2 * (d - xd)))
                else:
                    out.terms.append((q, birth_e, 2 * (b - xb)))
        # essential classes: births matched in sorted order
        bx, by = np.sort(fx[ex, 0]), fy[ey, 0]
        order = np.argsort(by, kind="stable")
        ess = [c for c, e in zip(pair_y.pairs[q], ey) if e]
        for rank, j in enumerate(order):
            if rank < len(bx):
                diff = by[j] - bx[rank]
                out.loss += diff ** 2
                out.terms.append((q, _critical_edge(ess[j][0], DY), 2 * diff))
    return out


def _as_points(c):
    return c.points if isinstance(c, PointCloud) else np.asarray(c, dtype=float)


def subset_loss(X_sub, Y_sub) -> tuple[float, SubsetLoss]:
    """Sum over degrees 0 and 1 of squared 2-Wasserstein distances between
    Rips diagrams (sup-norm ground metric)."""
    X, Y = _as_points(X_sub), _as_points(Y_sub)
    if len(X) != len(Y):
        raise ValueError("subsets must have the same cardinality")
    info = _subset_loss(pairwise_distances(X), pairwise_distances(Y))
    return info.loss, info


def _gradient(Y, DY, info: SubsetLoss):
    g = np.zeros_like(Y)
    for _, e, coef in info.terms:
        if e is None or coef == 0:
            continue
        u, v = e
        if DY[u, v] == 0:
            continue
        unit = (Y[u] - Y[v]) / DY[u, v]
        g[u] += coef * unit
        g[v] -= coef * unit
    return g


def subset_loss_gradient(X_sub, Y_sub):
    """Gradient of ``subset_loss`` with respect to Y_sub's coordinates.

    Every birth or death is an edge length, so each matched coordinate
    pulls on the two endpoints of its critical edge.
    """
    X, Y = _as_points(X_sub), _as_points(Y_sub)
    DY = pairwise_distances(Y)
    info = _subset_loss(pairwise_distances(X), DY)
    return _gradient(Y, DY, info)


@dataclass(frozen=True)
class AlignConfig:
    k: int = 25
    iterations: int = 20000
    seed: int = 0
    snapshot_every: int = 1000
    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be at least 2")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.snapshot_every < 1:
            raise ValueError("snapshot_every must be >= 1")


@dataclass
class AlignResult:
    Y: np.ndarray
    snapshots: list
    losses: np.ndarray
    initial_distortion: float
    final_distortion: float
    initial_mean_distortion: float
    final_mean_distortion: float


def align(X, Y0, cfg: AlignConfig = AlignConfig(), callback=None) -> AlignResult:
    """Move Y toward X with one uniformly sampled k-subset per step.

    Snapshots ``(iteration, coords)`` are taken before the first step, every
    ``snapshot_every`` steps, and at the end.
    """
    X, Y = _as_points(X), _as_points(Y0).copy()
    n = len(X)
    if len(Y) != n:
        raise ValueError("X and Y0 must have the same number of points")
    if cfg.k > n:
        raise ValueError(f"k={cfg.k} exceeds n={n}")
    rng = np.random.default_rng(cfg.seed)
    DX = pairwise_distances(X)
    state = AdamState.zeros(Y.shape, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2)
    snaps = [(0, Y.copy())]
    losses = np.empty(cfg.iterations)
    for it in range(cfg.iterations):
        S = np.sort(rng.choice(n, cfg.k, replace=False))
        Ys = Y[S]
        DY = pairwise_distances(Ys)
        info = _subset_loss(DX[np.ix_(S, S)], DY)
        losses[it] = info.loss
        g = _gradient(Ys, DY, info)
        Y, state = adam_step(state, Y, g, rows=S)
        if (it + 1) % cfg.snapshot_every == 0 or it + 1 == cfg.iterations:
            snaps.append((it + 1, Y.copy()))
            if callback is not None:
                callback(it + 1, Y, losses[:it + 1])
    D0, D1 = pairwise_distances(_as_points(Y0)), pairwise_distances(Y)
    return AlignResult(Y, snaps, losses,
                       quasi_isometry_distortion(DX, D0), quasi_isometry_distortion(DX, D1),
                       mean_pairwise_distortion(DX, D0), mean_pairwise_distortion(DX, D1))
