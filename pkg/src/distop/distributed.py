"""Distributed invariants over subsets of a point cloud, covering checks and
covering-probability bounds."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .filtrations import cech_filtration, rips_filtration
from .geometry import PointCloud, furthest_point_sample, pairwise_distances
from .persistence import EulerCurve, PersistenceDiagram, compute_persistence, euler_curve

KINDS = ("RP", "CP", "RE", "CE")


class SubsetCollection:
    """Sorted, duplicate-free collection of sorted index tuples over range(n)."""

    def __init__(self, n: int, subsets=()):
        self.n = int(n)
        clean = set()
        for s in subsets:
            t = tuple(sorted(int(i) for i in s))
            if len(set(t)) != len(t):
                raise ValueError(f"subset {s} repeats an index")
            if t and not (0 <= t[0] and t[-1] < self.n):
                raise ValueError(f"subset {s} has indices outside 0..{self.n - 1}")
            clean.add(t)
        self.subsets = sorted(clean, key=lambda t: (len(t), t))
        self._set = clean

    def __iter__(self):
        return iter(self.subsets)

    def __len__(self):
        return len(self.subsets)

    def __contains__(self, s):
        return tuple(s) in self._set

    def __eq__(self, other):
        return isinstance(other, SubsetCollection) and self.n == other.n and self._set == other._set

    def of_size(self, k: int) -> list:
        return [s for s in self.subsets if len(s) == k]

    def sizes(self) -> list:
        return sorted({len(s) for s in self.subsets})

    def union(self, more) -> "SubsetCollection":
        return SubsetCollection(self.n, list(self.subsets) + list(more))

    def to_text(self) -> str:
        return "".join(",".join(map(str, s)) + "\n" for s in self.subsets)

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> "SubsetCollection":
        subs = [tuple(int(x) for x in line.replace(",", " ").split()) for line in text.splitlines() if line.strip()]
        if n is None:
            n = 1 + max((max(s) for s in subs if s), default=-1)
        return cls(n, subs)


def enumerate_subsets(n: int, k: int):
    """All k-subsets of range(n) in lexicographic order, lazily."""
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    return combinations(range(n), k)


def sample_subsets(n: int, k: int, M: int, rng_seed=None) -> SubsetCollection:
    """M i.i.d. uniform k-subsets of range(n); repeats are merged."""
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if M < 1:
        raise ValueError("M must be at least 1")
    rng = np.random.default_rng(rng_seed)
    return SubsetCollection(n, (rng.choice(n, size=k, replace=False) for _ in range(M)))


@dataclass
class DistributedInvariant:
    """Invariant values keyed by subset label."""

    kind: str
    m: int
    entries: dict = field(default_factory=dict)
    n: int | None = None

    def __post_init__(self):
        self.kind = self.kind.upper()
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")

    @property
    def is_euler(self) -> bool:
        return self.kind in ("RE", "CE")

    def collection(self) -> SubsetCollection:
        n = self.n if self.n is not None else 1 + max((max(s) for s in self.entries if s), default=-1)
        return SubsetCollection(n, self.entries)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "m": self.m}
        if self.n is not None:
            out["n"] = self.n
        out["entries"] = [{"subset": list(s), "invariant": self.entries[s].to_json()}
                          for s in sorted(self.entries, key=lambda t: (len(t), t))]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data) -> "DistributedInvariant":
        if isinstance(data, str):
            data = json.loads(data)
        kind = data["kind"].upper()
        parse = EulerCurve.from_json if kind in ("RE", "CE") else PersistenceDiagram.from_json
        entries = {tuple(e["subset"]): parse(e["invariant"]) for e in data["entries"]}
        return cls(kind, int(data["m"]), entries, data.get("n"))


def invariant_of(points, D, kind: str, m: int):
    """The ``kind`` invariant of the m-skeleton filtration of one (sub)cloud."""
    kind = kind.upper()
    if kind in ("RP", "RE"):
        K = rips_filtration(D, m)
    else:
        K = cech_filtration(points, m)
    if kind in ("RP", "CP"):
        return compute_persistence(K)[0]
    return euler_curve(K)


def _task(args):
    pts, D, kind, m, chunk = args
    out = []
    for s in chunk:
        idx = list(s)
        out.append((s, invariant_of(None if pts is None else pts[idx], D[np.ix_(idx, idx)], kind, m)))
    return out


def worker_count(requested=None) -> int:
    cap = os.environ.get("DISTOP_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def compute_distributed(cloud, C, kind: str, m: int, workers: int | None = None) -> DistributedInvariant:
    """Invariant of the restricted filtration for every subset in ``C``.

    ``cloud`` is a PointCloud, or for Rips kinds a distance matrix. Subsets are
    independent, so they are farmed out to worker processes when more than
    one worker is available.
    """
    kind = kind.upper()
    if isinstance(cloud, PointCloud):
        pts = cloud.points
        D = pairwise_distances(cloud)
    else:
        if kind in ("CP", "CE"):
            raise ValueError("Cech invariants need coordinates, not a distance matrix")
        pts, D = None, np.asarray(cloud, dtype=float)
    n = D.shape[0]
    subsets = list(C)
    for s in subsets:
        if s and (min(s) < 0 or max(s) >= n):
            raise ValueError(f"subset {s} has indices outside 0..{n - 1}")
    nw = worker_count(workers)
    if nw == 1 or len(subsets) < 64:
        results = _task((pts, D, kind, m, subsets))
    else:
        size = math.ceil(len(subsets) / (4 * nw))
        chunks = [subsets[i:i + size] for i in range(0, len(subsets), size)]
        with ProcessPoolExecutor(max_workers=nw) as ex:
            results = [r for part in ex.map(_task, [(pts, D, kind, m, c) for c in chunks]) for r in part]
    return DistributedInvariant(kind, m, dict(results), n)


@dataclass
class CoverReport:
    covering_ok: bool
    closure_ok: bool
    missing_pairs: list
    missing_closures: list

    @property
    def ok(self) -> bool:
        return self.covering_ok and self.closure_ok

    def to_json(self) -> dict:
        return {"covering_ok": self.covering_ok, "closure_ok": self.closure_ok,
                "missing_pairs": [list(s) for s in self.missing_pairs],
                "missing_closures": [list(s) for s in self.missing_closures]}


def _closure_sizes(k, m):
    return range(k - 1, max(1, k - m - 1) - 1, -1)


def check_cover_closure(C, n: int, k: int, m: int, p: int = 2) -> CoverReport:
    """Check the covering property (every p-subset inside some k-member) and the
    closure property (all subsets of k-members down to size k-m-1 present)."""
    members = set(map(tuple, C))
    top = [s for s in members if len(s) == k]
    q = min(p, n)
    covered = set()
    for s in top:
        covered.update(combinations(s, q))
    missing = [s for s in combinations(range(n), q) if s not in covered]
    missing_closures = set()
    for s in top:
        for size in _closure_sizes(k, m):
            missing_closures.update(t for t in combinations(s, size) if t not in members)
    missing_closures = sorted(missing_closures, key=lambda t: (-len(t), t))
    return CoverReport(not missing, not missing_closures, missing, missing_closures)


def closure_completion(C, k: int, m: int, n: int | None = None) -> SubsetCollection:
    """Smallest superset of C with the closure property for (k, m)."""
    if isinstance(C, SubsetCollection):
        n = C.n if n is None else n
    subsets = [tuple(s) for s in C]
    if n is None:
        n = 1 + max((max(s) for s in subsets if s), default=-1)
    extra = []
    for s in subsets:
        if len(s) == k:
            for size in _closure_sizes(k, m):
                extra.extend(combinations(s, size))
    return SubsetCollection(n, subsets + extra)


def _check_counts(n, k, p):
    if not (1 <= p <= k <= n):
        raise ValueError(f"need 1 <= p <= k <= n, got n={n}, k={k}, p={p}")


def _miss_term(n, k, p, M):
    # C(n, p) * (1 - ((k-p+1)/(n-p+1))^p)^M, evaluated in log space
    hit = min(1.0, ((k - p + 1) / (n - p + 1)) ** p)
    if hit >= 1.0:
        return 0.0
    log_term = math.log(math.comb(n, p)) + M * math.log1p(-hit)
    return math.exp(min(log_term, 700.0))


def cover_probability_lower_bound(n: int, k: int, p: int, M: int, clamp: bool = True) -> float:
    """Lower bound on the probability that M uniform k-subsets cover every p-subset."""
    _check_counts(n, k, p)
    if M < 1:
        raise ValueError("M must be at least 1")
    raw = 1.0 - _miss_term(n, k, p, M)
    return min(1.0, max(0.0, raw)) if clamp else raw


def required_sample_count(n: int, k: int, p: int, eps: float) -> int:
    """Number of sampled k-subsets sufficient for covering probability >= eps."""
    _check_counts(n, k, p)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    M = (p * math.log(n * math.e / p) - math.log(1 - eps)) * ((n - p + 1) / (k - p + 1)) ** p
    return max(1, math.ceil(M))


def dense_cover_probability_bound(s: int, k: int, p: int, M: int, clamp: bool = True) -> float:
    """Covering-probability bound for s cells of measure >= 1/s each.

    The per-draw hit probability is capped at 1 when k >= s.
    """
    if not (1 <= p <= k and p <= s):
        raise ValueError(f"need 1 <= p <= k and p <= s, got s={s}, k={k}, p={p}")
    if M < 1:
        raise ValueError("M must be at least 1")
    raw = 1.0 - _miss_term(s, k, p, M)
    return min(1.0, max(0.0, raw)) if clamp else raw


def monte_carlo_cover_probability(n: int, k: int, p: int, M: int, trials: int, seed=None) -> float:
    """Fraction of trials in which M uniform k-subsets cover every p-subset."""
    rng = np.random.default_rng(seed)
    tuples = np.array(list(combinations(range(n), p)))
    hits = 0
    for _ in range(trials):
        inc = np.zeros((M, n), dtype=bool)
        picks = np.argsort(rng.random((M, n)), axis=1)[:, :k]
        np.put_along_axis(inc, picks, True, axis=1)
        cover = np.ones((M, len(tuples)), dtype=bool)
        for c in range(p):
            cover &= inc[:, tuples[:, c]]
        hits += bool(cover.any(axis=0).all())
    return hits / trials


@dataclass
class MixedMeasureSampler:
    """Draws a Voronoi cell uniformly, then a point uniformly inside it."""

    centers: list
    delta: float
    cells: list
    dphi: np.ndarray

    def point_probabilities(self) -> np.ndarray:
        prob = np.zeros(self.dphi.shape[0])
        for cell in self.cells:
            prob[cell] += 1.0 / (len(self.cells) * len(cell))
        return prob

    def draw(self, rng) -> int:
        cell = self.cells[rng.integers(len(self.cells))]
        return int(cell[rng.integers(len(cell))])

    def sample_subset(self, k: int, rng) -> tuple:
        n = self.dphi.shape[0]
        if k > n:
            raise ValueError("subset larger than the cloud")
        chosen = set()
        while len(chosen) < k:
            chosen.add(self.draw(rng))
        return tuple(sorted(chosen))

    def sample_collection(self, k: int, M: int, seed=None) -> SubsetCollection:
        rng = np.random.default_rng(seed)
        return SubsetCollection(self.dphi.shape[0], (self.sample_subset(k, rng) for _ in range(M)))


def mixed_measure_sampler(X, Y, phi=None, s: int = 1, seed_index: int = 0) -> MixedMeasureSampler:
    """Sampler for the furthest-point mixed measure under d_phi = max(d_X, d_Y o phi)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape:
        raise ValueError(f"size mismatch: {X.shape} vs {Y.shape}")
    n = X.shape[0]
    phi = np.arange(n) if phi is None else np.asarray(phi, dtype=int)
    dphi = np.maximum(X, Y[np.ix_(phi, phi)])
    centers, delta = furthest_point_sample(dphi, s, seed_index)
    owner = np.argmin(dphi[:, centers], axis=1)  # first minimum: lowest-ranked center
    owner[centers] = np.arange(len(centers))
    cells = [np.flatnonzero(owner == c) for c in range(len(centers))]
    return MixedMeasureSampler(centers, delta, cells, dphi)
