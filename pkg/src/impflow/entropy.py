"""Classical and tau-modified entropy estimates from separated-set counts.

Two points p, q are ``(T, eps)``-close for center p when their orbits stay
within ``eps`` at every grid time of J(p) (all of [0, T] in classical mode).
Because J depends on the center, a pair is separated only when neither
point lies in the other's ball.  Counts are taken on a deterministic sample
and the growth rate is fitted by least squares over the upper half of the
T grid.
"""

from __future__ import annotations

import csv
import io
import json
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError
from .impulsive import ImpulsiveSystem, impulsive_orbits
from .spaces import SemiflowSpec, euclidean_dist, modulus_beta
from .timefns import IntervalSet, TimeFunction, TimeSequence, j_mask

MODES = ("classical", "tau")
EXACT_LIMIT = 20
N_PROBES = 24
PRECOMPUTE_LIMIT = 2 * 10**7
BETA_SAMPLE = 200
GREEDY_BLOCK = 512

System = ImpulsiveSystem | SemiflowSpec


@dataclass(frozen=True)
class SeparationParams:
    """Horizon, scale and time grid of one separation count.

    The grid is ``k * time_grid_step`` for ``k >= 0`` plus ``T`` itself.
    In tau mode the grid step must not exceed ``delta / 4`` so that every
    excluded window is resolved.
    """

    T: float
    epsilon: float
    delta: float = 0.0
    mode: str = "classical"
    time_grid_step: float = 0.01

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}")
        if self.T <= 0 or self.epsilon <= 0 or self.time_grid_step <= 0:
            raise DomainError("T, epsilon and time_grid_step must be positive")
        if self.mode == "tau":
            if self.delta <= 0:
                raise DomainError("tau mode needs delta > 0")
            if self.time_grid_step > self.delta / 4 * (1 + 1e-12):
                raise DomainError(f"time_grid_step must be <= delta/4 = {self.delta / 4}")

    def grid(self) -> np.ndarray:
        n = int(math.floor(self.T / self.time_grid_step + 1e-9))
        g = self.time_grid_step * np.arange(n + 1)
        if self.T - g[-1] > 1e-12:
            g = np.append(g, self.T)
        else:
            g[-1] = self.T
        return g


@dataclass
class GrowthEstimate:
    """Separated counts over a T grid and their fitted exponential rate."""

    counts: dict[float, int]
    slope: float
    intercept: float
    residuals: list[float]
    fit_T: list[float]
    degenerate: bool
    mode: str
    epsilon: float
    delta: float
    n_points: int
    time_grid_step: float

    @property
    def monotone(self) -> bool:
        c = list(self.counts.values())
        return all(b >= a for a, b in zip(c, c[1:]))

    @property
    def saturated(self) -> bool:
        return max(self.counts.values()) >= 0.5 * self.n_points

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = {f"{k:.12g}": v for k, v in self.counts.items()}
        d["monotone"] = self.monotone
        d["saturated"] = self.saturated
        return d


# -- orbit bank ------------------------------------------------------------------


class OrbitCache:
    """Orbits of a fixed sample, shared by every (T, eps, delta) cell.

    Impulsive orbits and time sequences are computed once up to ``T_max``
    and truncated per cell; closed-form flows are evaluated on demand.
    """

    def __init__(self, system: System, points: np.ndarray, T_max: float):
        self.system = system
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.T_max = float(T_max)
        self.flow = system if isinstance(system, SemiflowSpec) else system.flow
        self.space = self.flow.space
        self._orbits = None
        self._seqs: dict[int, list[np.ndarray]] = {}
        self._etas: dict[int, float] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.points)

    @property
    def impulsive(self) -> bool:
        return isinstance(self.system, ImpulsiveSystem)

    def orbits(self):
        with self._lock:
            if self._orbits is None:
                self._orbits = impulsive_orbits(self.system, self.points, self.T_max)
            return self._orbits

    def states(self, grid: np.ndarray, idx=None) -> np.ndarray:
        ids = np.arange(len(self.points)) if idx is None else np.atleast_1d(idx)
        if not self.impulsive:
            return self.flow.evolve_array(grid[None, :], self.points[ids][:, None, :])
        orbits = self.orbits()
        return np.stack([orbits[i].evaluate(grid) for i in ids])

    def features(self, states: np.ndarray) -> np.ndarray:
        return self.space.features(states) if self.space.has_features else states

    def metric(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return euclidean_dist(a, b) if self.space.has_features else self.space.distance(a, b)

    def sequences(self, time_fn: TimeFunction | Callable) -> tuple[list[np.ndarray], float]:
        key = id(time_fn)
        with self._lock:
            if key not in self._seqs:
                if isinstance(time_fn, TimeFunction):
                    seqs = time_fn.many(self.points, self.T_max)
                else:
                    seqs = [time_fn(x, self.T_max) for x in self.points]
                self._seqs[key] = [s.array for s in seqs]
                self._etas[key] = min((s.eta for s in seqs), default=math.inf)
            return self._seqs[key], self._etas[key]


def _as_cache(system: System, points, T: float, cache: OrbitCache | None) -> OrbitCache:
    if cache is not None:
        if cache.T_max < T - 1e-12:
            raise DomainError(f"cache horizon {cache.T_max} below T={T}")
        return cache
    return OrbitCache(system, points, T)


def _masks(cache: OrbitCache, params: SeparationParams, grid: np.ndarray,
           time_fn) -> np.ndarray:
    n = len(cache)
    if params.mode == "classical":
        return np.ones((n, grid.size), dtype=bool)
    if time_fn is None:
        raise DomainError("tau mode needs a time function")
    seqs, eta = cache.sequences(time_fn)
    if not params.delta < eta / 2:
        raise DomainError(f"delta={params.delta} must be below eta/2 = {eta / 2}")
    masks = np.empty((n, grid.size), dtype=bool)
    for i, s in enumerate(seqs):
        masks[i] = j_mask(s, grid, params.T, params.delta)
    empty = ~masks.any(axis=1)
    if empty.any():
        raise DomainError(f"J is empty on the grid for point {tuple(cache.points[np.argmax(empty)])}")
    return masks


# -- pair distances ----------------------------------------------------------------


def orbit_sep_dist(system: System, x, y, J: IntervalSet | None, grid: float,
                   T: float | None = None) -> float:
    """Max distance between the orbits of x and y over grid times in J.

    With ``J=None`` the classical distance over [0, T] is returned.
    """
    if grid <= 0:
        raise DomainError("grid step must be positive")
    horizon = J.T if J is not None else T
    if horizon is None or horizon <= 0:
        raise DomainError("a positive horizon is required")
    params = SeparationParams(horizon, 1.0, time_grid_step=grid)
    times = params.grid()
    if J is not None:
        times = times[J.mask(times)]
    if times.size == 0:
        raise DomainError("no grid time lies in J")
    cache = OrbitCache(system, np.stack([np.asarray(x, float), np.asarray(y, float)]), horizon)
    f = cache.features(cache.states(times))
    return float(np.max(cache.metric(f[0], f[1])))


def _pair_maxima(d: np.ndarray, masks: np.ndarray) -> np.ndarray:
    return np.where(masks, d, -np.inf).max(axis=-1)


def conflict_matrix(system: System, points, params: SeparationParams,
                    time_fn=None, cache: OrbitCache | None = None) -> np.ndarray:
    """Symmetric boolean matrix: True where one point lies in the other's ball."""
    cache = _as_cache(system, points, params.T, cache)
    grid = params.grid()
    masks = _masks(cache, params, grid, time_fn)
    f = cache.features(cache.states(grid))
    d = cache.metric(f[:, None], f[None, :])  # (n, n, G)
    a = _pair_maxima(d, masks[:, None, :])  # center is the row point
    close = a < params.epsilon
    out = close | close.T
    np.fill_diagonal(out, False)
    return out


# -- counting -----------------------------------------------------------------------


class _PairJudge:
    """Decides the separation of index pairs exactly, filtering cheaply first.

    A pair conflicts when, for one of its two centers c, the orbits stay
    within eps at every grid time of J(c).  Any grid time of J(c) where they
    are eps apart rules that direction out, so probes and anchors only ever
    discard directions that truly fail.
    """

    def __init__(self, cache: OrbitCache, params: SeparationParams, time_fn):
        self.cache = cache
        self.eps = params.epsilon
        self.grid = params.grid()
        G = self.grid.size
        self.masks = _masks(cache, params, self.grid, time_fn)
        late = G - 1 - np.argmax(self.masks[:, ::-1], axis=1)
        early = np.argmax(self.masks, axis=1)
        spread = np.linspace(0, G - 1, N_PROBES).round().astype(int)
        probes = np.unique(np.concatenate([late, early, spread]))
        self.pos_late = np.searchsorted(probes, late)
        self.pos_early = np.searchsorted(probes, early)
        self.PF = np.ascontiguousarray(
            cache.features(cache.states(self.grid[probes])).transpose(1, 0, 2))
        self.MP = self.masks[:, probes]
        self.kd = cache.space.has_features
        n, k = len(cache), self.PF.shape[-1]
        self.full = None
        if n * G * k <= PRECOMPUTE_LIMIT:
            self.full = cache.features(cache.states(self.grid))
        self._block: dict[int, int] = {}
        self._block_feats = None

    def load_block(self, idx: np.ndarray) -> None:
        if self.full is None:
            self._block = {int(i): k for k, i in enumerate(idx)}
            self._block_feats = self.cache.features(self.cache.states(self.grid, idx))

    def full_features(self, idx: np.ndarray) -> np.ndarray:
        if self.full is not None:
            return self.full[idx]
        local = np.array([self._block.get(int(i), -1) for i in idx])
        out = np.empty((len(idx), self.grid.size, self.PF.shape[-1]))
        hit = local >= 0
        if hit.any():
            out[hit] = self._block_feats[local[hit]]
        if (~hit).any():
            out[~hit] = self.cache.features(self.cache.states(self.grid, idx[~hit]))
        return out

    def _near(self, centers: np.ndarray, others: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Pairs (c, o) possibly within eps at both anchors of center c.

        Closeness at both anchors implies the concatenated anchor features
        are within sqrt(2) eps, so the tree query returns a superset.
        """
        if not self.kd:
            c, o = np.meshgrid(centers, others, indexing="ij")
            return c.ravel(), o.ravel()
        cs, os_ = [], []
        anchors = np.stack([self.pos_early[centers], self.pos_late[centers]], axis=1)
        for ge, gl in np.unique(anchors, axis=0):
            group = centers[(anchors[:, 0] == ge) & (anchors[:, 1] == gl)]
            tree = cKDTree(np.concatenate([self.PF[ge, others], self.PF[gl, others]], axis=1))
            query = np.concatenate([self.PF[ge, group], self.PF[gl, group]], axis=1)
            hits = tree.query_ball_point(query, math.sqrt(2) * self.eps)
            lens = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
            if lens.sum():
                cs.append(np.repeat(group, lens))
                os_.append(others[np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])])
        if not cs:
            return np.empty(0, np.int64), np.empty(0, np.int64)
        return np.concatenate(cs), np.concatenate(os_)

    def _same_anchors(self, idx: np.ndarray) -> bool:
        return bool(np.all(self.pos_early[idx] == self.pos_early[idx[0]])
                    and np.all(self.pos_late[idx] == self.pos_late[idx[0]]))

    def candidates(self, A: np.ndarray, B: np.ndarray | None = None
                   ) -> tuple[np.ndarray, np.ndarray]:
        """Pairs that survive the anchor tests, a superset of the conflicts."""
        if B is None:
            c, o = self._near(A, A)
            a, b = np.minimum(c, o), np.maximum(c, o)
        else:
            a, b = self._near(A, B)
            if not self._same_anchors(np.concatenate([A, B])):
                # centers in B may use other anchors
                o2, c2 = self._near(B, A)
                a, b = np.concatenate([a, c2]), np.concatenate([b, o2])
        keep = a != b
        a, b = a[keep], b[keep]
        if a.size == 0:
            return a, b
        n = len(self.cache)
        key = np.unique(a * n + b)
        a, b = key // n, key % n
        PF, eps, metric = self.PF, self.eps, self.cache.metric
        alive_a = ((metric(PF[self.pos_early[a], a], PF[self.pos_early[a], b]) < eps)
                   & (metric(PF[self.pos_late[a], a], PF[self.pos_late[a], b]) < eps))
        alive_b = ((metric(PF[self.pos_early[b], a], PF[self.pos_early[b], b]) < eps)
                   & (metric(PF[self.pos_late[b], a], PF[self.pos_late[b], b]) < eps))
        keep = alive_a | alive_b
        return a[keep], b[keep]

    def prefilter(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Probe cascade: False only for pairs proven separated."""
        PF, eps, metric = self.PF, self.eps, self.cache.metric
        pos = np.arange(a.size)
        alive_a = np.ones(a.size, dtype=bool)
        alive_b = np.ones(a.size, dtype=bool)
        for g in range(PF.shape[0]):
            if pos.size == 0:
                break
            far = metric(PF[g, a], PF[g, b]) >= eps
            alive_a &= ~(far & self.MP[a, g])
            alive_b &= ~(far & self.MP[b, g])
            keep = alive_a | alive_b
            a, b, pos = a[keep], b[keep], pos[keep]
            alive_a, alive_b = alive_a[keep], alive_b[keep]
        return pos

    def confirm(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Exact conflict flag on the full time grid."""
        a, b = np.asarray(a, np.int64), np.asarray(b, np.int64)
        out = np.zeros(a.size, dtype=bool)
        for s in range(0, a.size, 256):
            sl = slice(s, s + 256)
            d = self.cache.metric(self.full_features(a[sl]), self.full_features(b[sl]))
            ma = _pair_maxima(d, self.masks[a[sl]])
            mb = _pair_maxima(d, self.masks[b[sl]])
            out[sl] = (ma < self.eps) | (mb < self.eps)
        return out

    def survivors(self, A: np.ndarray, B: np.ndarray | None = None
                  ) -> tuple[np.ndarray, np.ndarray]:
        """Candidate pairs that also pass the probe cascade."""
        a, b = self.candidates(A, B)
        pos = self.prefilter(a, b)
        return a[pos], b[pos]

    def conflicts(self, A: np.ndarray, B: np.ndarray | None = None
                  ) -> tuple[np.ndarray, np.ndarray]:
        """Conflicting pairs (a, b) with a in A and b in B, or a < b within A."""
        a, b = self.survivors(A, B)
        hit = self.confirm(a, b)
        return a[hit], b[hit]


def separated_count_greedy(system: System, points, params: SeparationParams,
                           time_fn=None, cache: OrbitCache | None = None,
                           block: int = GREEDY_BLOCK) -> tuple[int, np.ndarray]:
    """Greedy maximal separated subset in the given point order.

    A point is kept iff it is separated from every point kept before it.
    Points are processed in blocks: each block is first tested against the
    points kept so far, then resolved in order among its own members, which
    gives exactly the one-at-a-time result.  Returns the count and the
    indices of the selected points.
    """
    cache = _as_cache(system, points, params.T, cache)
    n = len(cache)
    if n == 0:
        raise DomainError("points must be nonempty")
    judge = _PairJudge(cache, params, time_fn)
    kept: list[np.ndarray] = []
    for start in range(0, n, block):
        idx = np.arange(start, min(n, start + block))
        judge.load_block(idx)
        blocked = np.zeros(n, dtype=bool)
        if kept:
            # one confirmed conflict settles a point, so candidates are
            # judged in rounds, one per unresolved point
            a, q = judge.survivors(idx, np.concatenate(kept))
            order = np.argsort(a, kind="stable")
            a, q = a[order], q[order]
            first = np.searchsorted(a, idx)
            last = np.searchsorted(a, idx, side="right")
            open_ = first < last
            ptr, end, pts = first[open_], last[open_], idx[open_]
            while pts.size:
                hit = judge.confirm(pts, q[ptr])
                blocked[pts[hit]] = True
                ptr = ptr + 1
                more = ~hit & (ptr < end)
                ptr, end, pts = ptr[more], end[more], pts[more]
        free = idx[~blocked[idx]]
        lo, hi = judge.survivors(free)
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]
        starts = np.searchsorted(lo, free)
        ends = np.searchsorted(lo, free, side="right")
        chosen = []
        for i, s, e in zip(free, starts, ends):
            if blocked[i]:
                continue
            chosen.append(i)
            nb = hi[s:e]
            nb = nb[~blocked[nb]]
            if nb.size:
                blocked[nb[judge.confirm(np.full(nb.size, i), nb)]] = True
        kept.append(np.asarray(chosen, dtype=np.int64))
    sel = np.concatenate(kept) if kept else np.empty(0, np.int64)
    return int(sel.size), sel


def _max_independent(adj: Sequence[int], n: int) -> int:
    @lru_cache(maxsize=None)
    def best(cand: int) -> int:
        if cand == 0:
            return 0
        v = (cand & -cand).bit_length() - 1
        rest = cand & ~(1 << v)
        with_v = 1 + best(rest & ~adj[v])
        if not adj[v] & rest:
            return with_v
        return max(with_v, best(rest))

    return best((1 << n) - 1)


def separated_count_exact(system: System, points, params: SeparationParams,
                          time_fn=None, cache: OrbitCache | None = None) -> int:
    """Exact maximum separated subset size by exhaustive search (at most 20 points)."""
    pts = np.atleast_2d(np.asarray(points if cache is None else cache.points, dtype=float))
    if len(pts) > EXACT_LIMIT:
        raise DomainError(f"exact count refuses more than {EXACT_LIMIT} points")
    if len(pts) == 0:
        raise DomainError("points must be nonempty")
    c = conflict_matrix(system, pts, params, time_fn, cache)
    adj = [int(sum(1 << j for j in np.nonzero(row)[0])) for row in c]
    return _max_independent(adj, len(pts))


# -- growth fits --------------------------------------------------------------------


def fit_growth(T_grid: Sequence[float], counts: Sequence[int]) -> tuple[float, float, list[float], list[float], bool]:
    """Least-squares slope of log(count) against T over the upper half of the grid."""
    T = np.asarray(T_grid, dtype=float)
    c = np.asarray(counts, dtype=float)
    upper = slice(len(T) // 2, None)
    if np.all(c <= 1):
        return 0.0, 0.0, [0.0] * len(T[upper]), list(map(float, T[upper])), True
    x, y = T[upper], np.log(c[upper])
    slope, intercept = np.polyfit(x, y, 1)
    res = y - (slope * x + intercept)
    return float(slope), float(intercept), list(map(float, res)), list(map(float, x)), False


def default_step(system: System, points, epsilon: float, delta: float, mode: str,
                 T_max: float) -> float:
    if mode == "tau":
        return delta / 4
    flow = system if isinstance(system, SemiflowSpec) else system.flow
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    sample = pts[:: max(1, len(pts) // BETA_SAMPLE)][:BETA_SAMPLE]
    return modulus_beta(flow, epsilon / 2, sample, T_max) / 2


def _check_grid(values: Sequence[float], name: str, increasing: bool, min_len: int = 1):
    v = list(values)
    if len(v) < min_len:
        raise DomainError(f"{name} needs at least {min_len} entries")
    pairs = zip(v, v[1:])
    ok = all(b > a for a, b in pairs) if increasing else all(b < a for a, b in pairs)
    if not ok:
        raise DomainError(f"{name} must be strictly {'increasing' if increasing else 'decreasing'}")


def entropy_estimate(system: System, points, T_grid: Sequence[float], epsilon: float,
                     delta: float = 0.0, mode: str = "classical", time_fn=None,
                     step: float | None = None, cache: OrbitCache | None = None
                     ) -> GrowthEstimate:
    """Greedy counts over ``T_grid`` and their fitted growth rate."""
    _check_grid(T_grid, "T_grid", increasing=True, min_len=4)
    T_max = float(T_grid[-1])
    cache = _as_cache(system, points, T_max, cache)
    if step is None:
        step = default_step(system, cache.points, epsilon, delta, mode, T_max)
    counts: dict[float, int] = {}
    for T in T_grid:
        params = SeparationParams(float(T), epsilon, delta if mode == "tau" else 0.0, mode, step)
        counts[float(T)] = separated_count_greedy(system, None, params, time_fn, cache)[0]
    slope, intercept, res, fit_T, degenerate = fit_growth(list(counts), list(counts.values()))
    return GrowthEstimate(counts, slope, intercept, res, fit_T, degenerate, mode, epsilon,
                          delta if mode == "tau" else 0.0, len(cache), step)


@dataclass
class SweepResult:
    """Table of growth estimates over (epsilon, delta) with convergence flags."""

    estimates: list[GrowthEstimate]
    estimate: float
    stable: bool
    flags: list[str]
    monotone_violations: list[tuple[float, float, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stable": self.stable,
            "flags": self.flags,
            "monotone_violations": [list(v) for v in self.monotone_violations],
            "cells": [e.to_dict() for e in self.estimates],
        }


STABILITY_REL = 0.1
STABILITY_ABS = 0.02


def entropy_sweep(system: System, points, T_grid: Sequence[float],
                  epsilon_grid: Sequence[float], delta_grid: Sequence[float] = (0.0,),
                  mode: str = "classical", time_fn=None, step: float | None = None,
                  workers: int = 1) -> SweepResult:
    """Growth estimates for every (epsilon, delta) cell.

    The reported estimate is the slope at the smallest epsilon and delta.
    It is flagged stable when the last two epsilon steps differ by at most
    10% of the previous slope, with an absolute floor of 0.02 for slopes
    near zero.
    """
    _check_grid(epsilon_grid, "epsilon_grid", increasing=False)
    if mode == "classical":
        delta_grid = (0.0,)
    else:
        _check_grid(delta_grid, "delta_grid", increasing=False)
    cache = OrbitCache(system, points, float(T_grid[-1]))
    cells = [(e, d) for d in delta_grid for e in epsilon_grid]

    def run(cell):
        e, d = cell
        return entropy_estimate(system, None, T_grid, e, d, mode, time_fn, step, cache)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            estimates = list(pool.map(run, cells))
    else:
        estimates = [run(c) for c in cells]

    last = [est for est in estimates if est.delta == estimates[-1].delta]
    estimate = last[-1].slope
    stable = True
    if len(last) >= 2:
        prev = last[-2].slope
        stable = abs(estimate - prev) <= max(STABILITY_REL * abs(prev), STABILITY_ABS)
    flags = ["stable" if stable else "unstable"]
    if any(est.saturated for est in estimates):
        flags.append("saturated")
    if any(est.degenerate for est in estimates):
        flags.append("degenerate")
    violations = []
    for d in delta_grid:
        row = [est for est in estimates if est.delta == (d if mode == "tau" else 0.0)]
        for a, b in zip(row, row[1:]):
            if b.slope < a.slope - STABILITY_ABS:
                violations.append((d, b.epsilon, b.slope - a.slope))
        if len(row) >= 3 and all(
            b.slope - a.slope > max(STABILITY_REL * abs(a.slope), STABILITY_ABS)
            for a, b in zip(row, row[1:])
        ):
            flags.append("unbounded_growth")
    return SweepResult(estimates, estimate, stable, flags, violations)


# -- emitters -----------------------------------------------------------------------


CSV_HEADER = ["mode", "T", "epsilon", "delta", "count", "slope_so_far"]


def sweep_rows(estimates: Sequence[GrowthEstimate]) -> list[list[str]]:
    rows = []
    for est in estimates:
        Ts, cs = list(est.counts), list(est.counts.values())
        for k, (T, c) in enumerate(zip(Ts, cs)):
            slope = ""
            if k >= 1 and max(cs[: k + 1]) > 0:
                slope = f"{np.polyfit(Ts[: k + 1], np.log(np.maximum(cs[: k + 1], 1)), 1)[0]:.12g}"
            rows.append([est.mode, f"{T:.12g}", f"{est.epsilon:.12g}", f"{est.delta:.12g}",
                         str(c), slope])
    return rows


def sweep_csv(estimates: Sequence[GrowthEstimate], preamble: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in preamble:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(sweep_rows(estimates))
    return buf.getvalue()


def sweep_json(result: SweepResult, extra: dict | None = None) -> str:
    payload = dict(extra or {})
    payload.update(result.to_dict())
    return json.dumps(payload, indent=2, sort_keys=True)
