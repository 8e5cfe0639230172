"""Persistence diagrams, Euler curves and Betti curves of filtered complexes."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .filtrations import FilteredComplex

_EMPTY = np.empty((0, 2))


def _fmt(x: float):
    return "inf" if math.isinf(x) else float(x)


def _parse(x) -> float:
    return math.inf if x in ("inf", "Infinity", None) else float(x)


@dataclass
class PersistenceDiagram:
    """Per-degree multisets of (birth, death) pairs; death may be ``inf``.

    ``truncated`` names the degree (if any) that only exists because the
    complex was cut off at its top skeleton dimension.
    """

    degrees: dict = field(default_factory=dict)
    truncated: int | None = None

    def __post_init__(self):
        clean = {}
        for q, pts in self.degrees.items():
            arr = np.asarray(pts, dtype=float).reshape(-1, 2)
            if np.any(arr[:, 0] > arr[:, 1]):
                raise ValueError(f"degree {q}: birth after death")
            clean[int(q)] = arr
        self.degrees = clean

    def __getitem__(self, q: int) -> np.ndarray:
        return self.degrees.get(q, _EMPTY)

    def max_degree(self) -> int:
        return max(self.degrees, default=-1)

    def metric_degrees(self) -> list:
        """Degrees used by default in comparisons: everything except a truncated top degree."""
        return [q for q in sorted(self.degrees) if q != self.truncated]

    def finite(self, q: int) -> np.ndarray:
        a = self[q]
        return a[np.isfinite(a[:, 1])]

    def essential(self, q: int) -> np.ndarray:
        a = self[q]
        return a[np.isinf(a[:, 1]), 0]

    def sorted(self) -> "PersistenceDiagram":
        out = {}
        for q, a in self.degrees.items():
            out[q] = a[np.lexsort((a[:, 1], a[:, 0]))] if len(a) else a
        return PersistenceDiagram(out, self.truncated)

    def __eq__(self, other):
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        a, b = self.sorted(), other.sorted()
        qs = {q for q in a.degrees if len(a[q])} | {q for q in b.degrees if len(b[q])}
        return all(np.array_equal(a[q], b[q]) for q in qs)

    def to_json(self) -> dict:
        d = self.sorted()
        out = {str(q): [[_fmt(b), _fmt(x)] for b, x in d.degrees[q]] for q in sorted(d.degrees)}
        if self.truncated is not None:
            out["truncated"] = self.truncated
        return out

    @classmethod
    def from_json(cls, data) -> "PersistenceDiagram":
        if isinstance(data, str):
            data = json.loads(data)
        data = dict(data)
        truncated = data.pop("truncated", None)
        return cls({int(q): [[_parse(b), _parse(d)] for b, d in pts] for q, pts in data.items()}, truncated)


class EulerCurve:
    """Integer step function given by breakpoints; zero before the first one, right-continuous."""

    __slots__ = ("thresholds", "values")

    def __init__(self, thresholds=(), values=()):
        t = np.asarray(thresholds, dtype=float).ravel()
        v = np.asarray(values, dtype=np.int64).ravel()
        if t.shape != v.shape:
            raise ValueError("thresholds and values must have equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("thresholds must be strictly increasing")
        keep = v != np.concatenate([[0], v[:-1]])
        self.thresholds = t[keep]
        self.values = v[keep]

    @classmethod
    def from_events(cls, times, deltas) -> "EulerCurve":
        """Curve whose value jumps by ``deltas[i]`` at ``times[i]``."""
        times = np.asarray(times, dtype=float)
        deltas = np.asarray(deltas, dtype=np.int64)
        if len(times) == 0:
            return cls()
        uniq, inv = np.unique(times, return_inverse=True)
        jumps = np.zeros(len(uniq), dtype=np.int64)
        np.add.at(jumps, inv, deltas)
        finite = np.isfinite(uniq)
        return cls(uniq[finite], np.cumsum(jumps)[finite])

    @classmethod
    def constant(cls, value: int, start: float = 0.0) -> "EulerCurve":
        return cls([start], [value])

    def __call__(self, r):
        idx = np.searchsorted(self.thresholds, r, side="right") - 1
        vals = np.where(idx >= 0, self.values[np.clip(idx, 0, None)] if len(self.values) else 0, 0)
        return vals if np.ndim(r) else int(vals)

    def _combine(self, other, sign):
        t = np.union1d(self.thresholds, other.thresholds)
        return EulerCurve(t, self(t) + sign * other(t))

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __neg__(self):
        return EulerCurve(self.thresholds, -self.values)

    def __mul__(self, k: int):
        return EulerCurve(self.thresholds, int(k) * self.values)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, EulerCurve):
            return NotImplemented
        return np.array_equal(self.thresholds, other.thresholds) and np.array_equal(self.values, other.values)

    def __len__(self):
        return len(self.thresholds)

    def __repr__(self):
        return f"EulerCurve({list(zip(self.thresholds.tolist(), self.values.tolist()))})"

    def to_json(self) -> list:
        return [[float(t), int(v)] for t, v in zip(self.thresholds, self.values)]

    @classmethod
    def from_json(cls, data) -> "EulerCurve":
        if isinstance(data, str):
            data = json.loads(data)
        if not data:
            return cls()
        t, v = zip(*data)
        return cls(t, v)


@dataclass(frozen=True)
class CriticalPairing:
    """``pairs[q][i]`` holds the (birth simplex, death simplex or None) of row i of degree q."""

    pairs: dict


def filtration_order(K: FilteredComplex) -> list:
    """Simplex indices sorted by (time, dimension, vertices)."""
    return sorted(range(len(K)), key=lambda i: (K.times[i], len(K.simplices[i]), K.simplices[i]))


def reduce_boundary(K: FilteredComplex) -> tuple[list, list, list]:
    """Standard Z/2 column reduction of the boundary matrix.

    Returns the simplices in filtration order, their times, and the list of
    ``(birth_position, death_position)`` pairs; unpaired positive positions
    are reported with death ``None``.
    """
    order = filtration_order(K)
    simplices = [K.simplices[i] for i in order]
    times = [float(K.times[i]) for i in order]
    pos = {s: j for j, s in enumerate(simplices)}
    reduced = {}
    pivot_of = {}
    positive = []
    pairs = []
    for j, s in enumerate(simplices):
        col = 0
        if len(s) > 1:
            for face in combinations(s, len(s) - 1):
                col ^= 1 << pos[face]
        while col:
            low = col.bit_length() - 1
            other = pivot_of.get(low)
            if other is None:
                break
            col ^= reduced[other]
        if col:
            low = col.bit_length() - 1
            pivot_of[low] = j
            reduced[j] = col
            pairs.append((low, j))
        else:
            positive.append(j)
    pairs.extend((j, None) for j in positive if j not in pivot_of)
    return simplices, times, pairs


def compute_persistence(K: FilteredComplex) -> tuple[PersistenceDiagram, CriticalPairing]:
    """Persistence diagram of a filtered complex in degrees 0..m.

    Degree-m classes of an m-skeleton are kept but the diagram marks that
    degree as truncated. Zero-persistence pairs are dropped.
    """
    simplices, times, pairs = reduce_boundary(K)
    pts = {q: [] for q in range(K.skeleton_dim + 1)}
    crit = {q: [] for q in range(K.skeleton_dim + 1)}
    for b, d in sorted(pairs, key=lambda p: p[0]):
        birth = times[b]
        death = math.inf if d is None else times[d]
        if death == birth:
            continue
        q = len(simplices[b]) - 1
        pts[q].append((birth, death))
        crit[q].append((simplices[b], None if d is None else simplices[d]))
    dgm = PersistenceDiagram({q: v for q, v in pts.items()}, truncated=K.skeleton_dim)
    return dgm, CriticalPairing(crit)


def euler_curve(K: FilteredComplex) -> EulerCurve:
    """r -> sum over simplices with time <= r of (-1)^dim."""
    signs = np.where(K.dims() % 2 == 0, 1, -1)
    return EulerCurve.from_events(K.times, signs)


def betti_curves_from_diagram(dgm: PersistenceDiagram, degrees) -> list:
    curves = []
    for q in degrees:
        a = dgm[q]
        times = np.concatenate([a[:, 0], a[:, 1]])
        deltas = np.concatenate([np.ones(len(a), dtype=np.int64), -np.ones(len(a), dtype=np.int64)])
        curves.append(EulerCurve.from_events(times, deltas))
    return curves


def betti_curves(K: FilteredComplex) -> list:
    """Betti curves for degrees 0..m, read off the persistence diagram."""
    dgm, _ = compute_persistence(K)
    return betti_curves_from_diagram(dgm, range(K.skeleton_dim + 1))


def alternating_sum(curves) -> EulerCurve:
    total = EulerCurve()
    for q, c in enumerate(curves):
        total = total + c if q % 2 == 0 else total - c
    return total


def rips_persistence(D) -> tuple[PersistenceDiagram, CriticalPairing]:
    """Degree 0 and 1 persistence of the Rips 2-skeleton of a distance matrix.

    Same simplex order and pairs as ``compute_persistence(rips_filtration(D, 2))``
    restricted to degrees 0 and 1, computed without building the complex.
    """
    from ._ripsfast import rips_pairs

    D = np.ascontiguousarray(D, dtype=float)
    n = D.shape[0]
    if n == 1:
        return (PersistenceDiagram({0: [(0.0, math.inf)], 1: []}),
                CriticalPairing({0: [((0,), None)], 1: []}))
    h0, h1, ess = rips_pairs(D)
    pts0, crit0 = [], []
    dying = set(h0[:, 0].tolist())
    for v in range(n):
        if v not in dying:
            pts0.append((0.0, math.inf))
            crit0.append(((v,), None))
    for v, a, b in h0.tolist():
        if D[a, b] > 0:
            pts0.append((0.0, float(D[a, b])))
            crit0.append(((v,), (a, b)))
    pts1, crit1 = [], []
    for a, b, x, y, z in h1.tolist():
        birth = float(D[a, b])
        death = float(max(D[x, y], D[x, z], D[y, z]))
        if death > birth:
            pts1.append((birth, death))
            crit1.append(((a, b), (x, y, z)))
    for a, b in ess.tolist():
        pts1.append((float(D[a, b]), math.inf))
        crit1.append(((a, b), None))
    return PersistenceDiagram({0: pts0, 1: pts1}), CriticalPairing({0: crit0, 1: crit1})
