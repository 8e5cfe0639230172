"""Inverse machinery: rounding grids, inclusion-exclusion recovery of Euler
curves, distance recovery, and quasi-isometry bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .distributed import (
    DistributedInvariant,
    check_cover_closure,
    invariant_of,
)
from .filtrations import RoundingGrid
from .geometry import PointCloud, pairwise_distances, quasi_isometry_distortion
from .metrics import MetricConfig, diagram_distance, wasserstein, wasserstein_matching
from .persistence import EulerCurve, PersistenceDiagram


class CoverClosureError(ValueError):
    """A subset collection lacks the covering or closure property."""

    def __init__(self, report, msg="collection fails the covering/closure requirements"):
        super().__init__(f"{msg}: {len(report.missing_pairs)} uncovered pairs, "
                         f"{len(report.missing_closures)} missing closure subsets")
        self.report = report


# ---------------------------------------------------------------------------
# rounding


@dataclass
class RoundingResult:
    grid: RoundingGrid
    epsilon: float
    delta: float
    P: np.ndarray
    Q: np.ndarray

    def pi(self, x):
        return self.grid.round(x)


def rounding_grid(P, Q) -> RoundingResult:
    """Build a grid on which each matched pair (p_i, q_i) rounds to the same value.

    P is sorted (stably) and Q reordered alongside. Grid points are admitted
    greedily from P; a new top point is pushed up by 2|p_i - q_i| whenever
    some earlier pair straddles its midpoint with the previous top, and the
    scan repeats until no pair straddles.
    """
    P = np.asarray(P, dtype=float).ravel()
    Q = np.asarray(Q, dtype=float).ravel()
    if P.shape != Q.shape:
        raise ValueError(f"P and Q must have equal length, got {len(P)} and {len(Q)}")
    if len(P) == 0:
        raise ValueError("need at least one matched pair")
    order = np.argsort(P, kind="stable")
    P, Q = P[order], Q[order]
    d = np.abs(P - Q)
    eps = float(d.max())
    delta = float(d.sum())
    gap = 2 * eps + 4 * delta
    R = [float(P[0])]
    for n in range(1, len(P)):
        top = R[-1]
        if P[n] < top + gap:
            continue
        r = float(P[n])
        while True:
            mid = (r + top) / 2
            bad = np.flatnonzero((P[:n] >= mid) != (Q[:n] >= mid))
            if len(bad) == 0:
                break
            r += 2 * d[bad[0]]
        if r > top:
            R.append(r)
    return RoundingResult(RoundingGrid(np.array(R)), eps, delta, P, Q)


def _fill(a, b, h):
    # points strictly inside (a, b), evenly spaced, gaps < 2h and > h
    g = b - a
    if g <= 2 * h:
        return []
    pieces = math.floor(g / (2 * h)) + 1
    return [a + g * j / pieces for j in range(1, pieces)]


def densify_grid(r: RoundingResult, lo=None, hi=None, density=None) -> RoundingGrid:
    """Add points so every x in [lo, hi] lies within 14*delta of the grid.

    New points keep a distance of more than 14*delta from existing ones, so
    rounding of the matched values is unchanged. With delta = 0 the caller
    must supply ``density``.
    """
    h = 14 * r.delta
    if h == 0:
        if density is None or density <= 0:
            raise ValueError("delta is 0; pass a positive density")
        h = float(density)
    data = np.concatenate([r.P, r.Q])
    lo = float(data.min()) if lo is None else float(lo)
    hi = float(data.max()) if hi is None else float(hi)
    span = max(hi, r.grid.values[-1]) - min(lo, r.grid.values[0])
    if span / h > 1e7:
        raise ValueError(f"densifying a range of {span:g} at spacing {h:g} needs too many points")
    v = r.grid.values.tolist()
    new = []
    for a, b in zip(v[:-1], v[1:]):
        new.extend(_fill(a, b, h))
    # tails: steps just under 2h, computed from the index to avoid drift
    step = 2 * h * (1 - 1e-6)
    j = 1
    while v[0] - (j - 1) * step - h > lo:
        new.append(v[0] - j * step)
        j += 1
    j = 1
    while v[-1] + (j - 1) * step + h < hi:
        new.append(v[-1] + j * step)
        j += 1
    return RoundingGrid(np.array(sorted(v + new)), density=h)


def round_diagram(D: PersistenceDiagram, R: RoundingGrid) -> PersistenceDiagram:
    """Round births and deaths to R; points landing on the diagonal vanish."""
    out = {}
    for q, pts in D.degrees.items():
        rp = np.column_stack([R.round(pts[:, 0]), R.round(pts[:, 1])]) if len(pts) else pts
        out[q] = rp[rp[:, 0] != rp[:, 1]] if len(rp) else rp
    return PersistenceDiagram(out, D.truncated)


def _pair_values(A, B, degree):
    P, Q = [], []
    _, pairs = wasserstein_matching(A, B, 1.0, degree)
    a, b = A.finite(degree), B.finite(degree)
    for i, j in pairs:
        if i is not None and j is not None:
            P += [a[i, 0], a[i, 1]]
            Q += [b[j, 0], b[j, 1]]
        elif i is not None:
            P.append(a[i, 0])
            Q.append(a[i, 1])
        else:
            P.append(b[j, 0])
            Q.append(b[j, 1])
    ea, eb = A.essential(degree), B.essential(degree)
    if len(ea) != len(eb):
        raise ValueError(f"degree {degree}: essential point counts differ")
    P += np.sort(ea).tolist()
    Q += np.sort(eb).tolist()
    return P, Q


def pair_rounding_grid(pairs, lo=None, hi=None) -> RoundingGrid:
    """Grid forcing round(A_i) == round(B_i) for every pair of diagrams.

    Births and deaths are matched along optimal 1-Wasserstein matchings; a
    point matched to the diagonal contributes its own (birth, death) pair so
    that it rounds onto the diagonal.
    """
    P, Q = [], []
    for A, B in pairs:
        for q in sorted(set(A.degrees) | set(B.degrees)):
            p_, q_ = _pair_values(A, B, q)
            P += p_
            Q += q_
    if not P:
        return RoundingGrid([0.0], density=0.0)
    r = rounding_grid(P, Q)
    if r.delta == 0:
        return RoundingGrid(np.unique(r.P), density=0.0)
    return densify_grid(r, lo, hi)


# ---------------------------------------------------------------------------
# inclusion-exclusion


def euler_ie_step(curves, W, Y, m: int) -> EulerCurve:
    """Euler curve of Y from those of W and the sets between Y and W.

    ``W`` has Y plus m + 2 extra points; ``curves`` must hold W and every
    W minus j of the extra points for 1 <= j <= m + 1.
    """
    W = tuple(sorted(W))
    Y = tuple(sorted(Y))
    extra = [x for x in W if x not in set(Y)]
    if len(extra) != m + 2 or len(W) - len(Y) != m + 2:
        raise ValueError(f"W must contain Y plus exactly m + 2 = {m + 2} points")

    def get(T):
        try:
            return curves[T]
        except KeyError:
            raise ValueError(f"missing Euler curve for subset {T}") from None

    acc = get(W)
    for j in range(1, m + 2):
        sign = 1 if j % 2 == 1 else -1
        for J in combinations(extra, j):
            drop = set(J)
            T = tuple(x for x in W if x not in drop)
            acc = acc - get(T) if sign == 1 else acc + get(T)
    return -acc if (m + 3) % 2 == 1 else acc


def euler_reconstruct_pairs(inv: DistributedInvariant, check: bool = True) -> DistributedInvariant:
    """Recover the Euler curves of all pairs from curves of sizes k..k-m-1."""
    if not inv.is_euler:
        raise ValueError("Euler-curve reconstruction needs an RE or CE invariant")
    C = inv.collection()
    n, m = C.n, inv.m
    k = max(C.sizes(), default=0)
    if k < 2:
        raise ValueError("need subsets of size at least 2")
    if check:
        report = check_cover_closure(C, n, k, m, p=2)
        # curves of single points are never needed to reach the pairs
        report.missing_closures = [t for t in report.missing_closures if len(t) >= 2]
        report.closure_ok = not report.missing_closures
        if not report.ok:
            raise CoverClosureError(report)
    known = dict(inv.entries)
    tops = C.of_size(k)

    def derive(T, S):
        if T in known:
            return
        rest = [x for x in S if x not in set(T)]
        W = tuple(sorted(T + tuple(rest[:m + 2])))
        extra = rest[:m + 2]
        derive(W, S)
        for j in range(1, m + 2):
            for J in combinations(extra, j):
                drop = set(J)
                derive(tuple(x for x in W if x not in drop), S)
        known[T] = euler_ie_step(known, W, T, m)

    out = {}
    for pair in combinations(range(n), 2):
        if pair not in known:
            S = next((s for s in tops if pair[0] in s and pair[1] in s), None)
            if S is None:
                raise ValueError(f"pair {pair} lies in no subset of size {k}")
            derive(pair, S)
        out[pair] = known[pair]
    return DistributedInvariant(inv.kind, m, out, n)


def euler_sparse_step(chi_W: EulerCurve, chi_Y1: EulerCurve, chi_Y2: EulerCurve, r: float) -> EulerCurve:
    """1-skeleton inclusion-exclusion corrected for the edge missing from Y1 u Y2."""
    out = chi_Y1 + chi_Y2 - chi_W
    return out - EulerCurve([r], [1]) if math.isfinite(r) else out


def distances_from_pair_curves(pairs: DistributedInvariant) -> np.ndarray:
    """Distance matrix read off pair invariants (Euler curves or diagrams)."""
    n = pairs.n if pairs.n is not None else pairs.collection().n
    D = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        if (i, j) not in pairs.entries:
            raise ValueError(f"missing pair ({i}, {j})")
        val = pairs.entries[(i, j)]
        if isinstance(val, EulerCurve):
            t, v = val.thresholds.tolist(), val.values.tolist()
            if v == [1] and t == [0.0]:
                d = 0.0
            elif len(t) == 2 and v == [2, 1] and t[0] == 0.0:
                d = t[1]
            else:
                raise ValueError(f"pair ({i}, {j}): not a two-point Euler curve: {val!r}")
        else:
            fin = val.finite(0)
            if len(fin) > 1:
                raise ValueError(f"pair ({i}, {j}): more than one finite degree-0 point")
            d = float(fin[0, 1]) if len(fin) else 0.0
        D[i, j] = D[j, i] = d
    return D


# ---------------------------------------------------------------------------
# bounds


def s_km(k: int, m: int) -> int:
    """C(k, 2) + C(k, 3) + ... + C(k, m + 1)."""
    if not 0 < m < k:
        raise ValueError(f"need 0 < m < k, got k={k}, m={m}")
    return sum(math.comb(k, j) for j in range(2, m + 2))


@dataclass(frozen=True)
class BoundReport:
    flavor: str
    k: int
    m: int
    epsilon: float
    bound: float
    formula: str


def quasi_isometry_bound(flavor: str, k: int, m: int, eps: float) -> BoundReport:
    """Quasi-isometry constant implied by eps-close RP or CP distributed invariants."""
    flavor = flavor.upper()
    if not 0 < m < k:
        raise ValueError(f"need k > m > 0, got k={k}, m={m}")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if flavor == "RP":
        return BoundReport(flavor, k, m, eps, 112 * k ** 2 * eps, "112*k^2*eps")
    if flavor == "CP":
        return BoundReport(flavor, k, m, eps, 224 * s_km(k, m) * k ** (m + 1) * eps,
                           "224*S(k,m)*k^(m+1)*eps")
    raise ValueError(f"flavor must be RP or CP, got {flavor!r}")


def gh_bound_dense_cover(flavor: str, k: int, m: int, eps: float, delta: float) -> float:
    if delta < 0:
        raise ValueError("delta must be non-negative")
    return quasi_isometry_bound(flavor, k, m, eps).bound + 2 * delta


def cech_via_rips_bound(k: int, eps: float, d1: int, d2: int) -> float:
    if d1 < 1 or d2 < 1:
        raise ValueError("ambient dimensions must be >= 1")
    if eps < 0 or k < 1:
        raise ValueError("need k >= 1 and eps >= 0")
    return 112 * k ** 2 * (eps + math.sqrt(2 * d1 / (d1 + 1)) + math.sqrt(2 * d2 / (d2 + 1)))


def sparse_quasi_isometry_bound(k: int, eps1: float, eps2: float) -> float:
    if k <= 1:
        raise ValueError("need k > 1")
    if eps1 < 0 or eps2 < 0:
        raise ValueError("eps1 and eps2 must be non-negative")
    return 56 * (k + 1) * eps1 + 28 * eps2


# ---------------------------------------------------------------------------
# certification


@dataclass
class CertificationReport:
    eps_obs: float
    bound: float
    distortion: float
    flavor: str
    k: int
    m: int
    collection_size: int

    def to_json(self) -> dict:
        return {"eps_obs": self.eps_obs, "bound": self.bound, "distortion": self.distortion,
                "flavor": self.flavor, "k": self.k, "m": self.m, "collection_size": self.collection_size}


def _as_cloud(X):
    return X if isinstance(X, PointCloud) else PointCloud(X)


def certify_alignment(X, Y, phi, C, kind: str = "RP", m: int = 1, cfg: MetricConfig | None = None) -> CertificationReport:
    """Largest bottleneck discrepancy over C, the quasi-isometry constant it
    certifies, and the directly measured distortion of phi."""
    kind = kind.upper()
    if kind not in ("RP", "CP"):
        raise ValueError("certification uses persistence kinds RP or CP")
    X, Y = _as_cloud(X), _as_cloud(Y)
    n = X.n
    if Y.n != n:
        raise ValueError("X and Y must have the same number of points")
    phi = np.arange(n) if phi is None else np.asarray(phi, dtype=int)
    subsets = [tuple(s) for s in C]
    k = max(len(s) for s in subsets)
    report = check_cover_closure(subsets, n, k, m, p=2)
    if not report.ok:
        raise CoverClosureError(report)
    cfg = cfg or MetricConfig("bottleneck", degrees=tuple(range(m + 1)))
    DX, DY = pairwise_distances(X), pairwise_distances(Y)
    eps_obs = 0.0
    for s in subsets:
        idx = list(s)
        jdx = phi[idx].tolist()
        a = invariant_of(X.points[idx], DX[np.ix_(idx, idx)], kind, m)
        b = invariant_of(Y.points[jdx], DY[np.ix_(jdx, jdx)], kind, m)
        eps_obs = max(eps_obs, diagram_distance(a, b, cfg))
    bound = quasi_isometry_bound(kind, k, m, eps_obs).bound
    return CertificationReport(eps_obs, bound, quasi_isometry_distortion(DX, DY, phi), kind, k, m, len(subsets))


@dataclass
class SparseCertificationReport:
    eps1: float
    eps2: float
    bound: float
    distortion: float
    k: int
    anchor: tuple

    def to_json(self) -> dict:
        return {"eps1": self.eps1, "eps2": self.eps2, "bound": self.bound,
                "distortion": self.distortion, "k": self.k, "anchor": list(self.anchor)}


def certify_sparse(X, Y, phi, k: int, anchor, kind: str = "RP") -> SparseCertificationReport:
    """Linear-in-k certificate from an anchor set of k - 1 points.

    eps2 sums the distance discrepancies over ordered anchor pairs; eps1 is the
    largest 1-Wasserstein discrepancy (degrees 0 and 1, 1-skeleton) over the
    size-k sets made of a pair plus anchor points, and their (k-1)-subsets.
    """
    X, Y = _as_cloud(X), _as_cloud(Y)
    n = X.n
    phi = np.arange(n) if phi is None else np.asarray(phi, dtype=int)
    anchor = tuple(sorted(int(a) for a in anchor))
    if len(anchor) != k - 1 or len(set(anchor)) != k - 1:
        raise ValueError(f"anchor must hold k - 1 = {k - 1} distinct points")
    DX, DY = pairwise_distances(X), pairwise_distances(Y)
    A = list(anchor)
    eps2 = float(np.abs(DX[np.ix_(A, A)] - DY[np.ix_(phi[A], phi[A])]).sum())
    sets = set()
    inside = set(anchor)
    for x1, x2 in combinations(range(n), 2):
        if x1 in inside and x2 in inside:
            continue
        fill = [a for a in anchor if a not in (x1, x2)][:k - 2]
        S = tuple(sorted([x1, x2] + fill))
        sets.add(S)
        sets.update(combinations(S, k - 1))
    eps1 = 0.0
    for s in sets:
        idx = list(s)
        jdx = phi[idx].tolist()
        a = invariant_of(X.points[idx], DX[np.ix_(idx, idx)], kind, 1)
        b = invariant_of(Y.points[jdx], DY[np.ix_(jdx, jdx)], kind, 1)
        eps1 = max(eps1, max(wasserstein(a, b, 1.0, q) for q in (0, 1)))
    return SparseCertificationReport(eps1, eps2, sparse_quasi_isometry_bound(k, eps1, eps2),
                                     quasi_isometry_distortion(DX, DY, phi), k, anchor)
