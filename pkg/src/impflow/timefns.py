"""Admissible time functions and the interval sets they carve out of (0, T].

A time function assigns to every point an increasing sequence of positive
times: the impulse times, the visit times to I(D), or a merge of the two.
``j_set`` removes open ``delta``-neighborhoods of those times from (0, T].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConsistencyError, DomainError
from .impulsive import (
    GAP_TOL,
    ImpulseSet,
    ImpulsiveSystem,
    _scan_hits,
    advance,
    impulsive_orbit,
    impulsive_orbits,
)
from .spaces import SemiflowSpec, _coords

DUPLICATE_TOL = 1e-9
MIN_MERGED_GAP = 1e-6

SOURCES = ("impulse", "visit", "merged", "section")


@dataclass(frozen=True)
class TimeSequence:
    """Horizon-truncated sequence of times attached to one point.

    ``eta`` is the gap bound the sequence is meant to honor; only strict
    increase and positivity are enforced here, gap violations are reported
    by :func:`check_admissible`.
    """

    times: tuple[float, ...]
    eta: float
    source: str = "impulse"

    def __post_init__(self):
        if self.source not in SOURCES:
            raise DomainError(f"unknown source {self.source!r}")
        t = self.times
        if any(v <= 0 for v in t):
            raise DomainError("times must be positive")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise DomainError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    @property
    def min_gap(self) -> float:
        if len(self.times) < 2:
            return math.inf
        return float(np.min(np.diff(self.array)))

    def n_T(self, T: float) -> int:
        return int(np.searchsorted(self.array, T, side="right"))


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_closed: bool
    hi_closed: bool

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        left = t >= self.lo if self.lo_closed else t > self.lo
        right = t <= self.hi if self.hi_closed else t < self.hi
        return left & right

    def within(self, other: "Interval") -> bool:
        left = other.lo < self.lo or (other.lo == self.lo and (other.lo_closed or not self.lo_closed))
        right = other.hi > self.hi or (other.hi == self.hi and (other.hi_closed or not self.hi_closed))
        return left and right

    def __str__(self) -> str:
        return f"{'[' if self.lo_closed else '('}{self.lo:.12g}, {self.hi:.12g}{']' if self.hi_closed else ')'}"


@dataclass(frozen=True)
class IntervalSet:
    """Sorted disjoint union of subintervals of (0, T]."""

    intervals: tuple[Interval, ...]
    T: float

    def __post_init__(self):
        for iv in self.intervals:
            if iv.lo < 0 or iv.hi > self.T or iv.lo > iv.hi:
                raise DomainError(f"interval {iv} outside (0, {self.T}]")
        for a, b in zip(self.intervals, self.intervals[1:]):
            if a.hi > b.lo or (a.hi == b.lo and a.hi_closed and b.lo_closed):
                raise DomainError(f"intervals {a} and {b} overlap")

    def __iter__(self):
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def length(self) -> float:
        return float(sum(iv.length for iv in self.intervals))

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def mask(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape, dtype=bool)
        for iv in self.intervals:
            out |= iv.contains(t)
        return out

    def issubset(self, other: "IntervalSet") -> bool:
        return all(any(iv.within(o) for o in other.intervals) for iv in self.intervals)

    def __str__(self) -> str:
        return " U ".join(str(iv) for iv in self.intervals) or "{}"


def full_interval(T: float) -> IntervalSet:
    return IntervalSet((Interval(0.0, T, False, True),), T)


def j_set(times: TimeSequence, T: float, delta: float) -> IntervalSet:
    """(0, T] minus the open ``delta``-neighborhoods of the times up to T."""
    if T <= 0:
        raise DomainError("T must be positive")
    if not 0 < delta < times.eta / 2:
        raise DomainError(f"delta={delta} must lie in (0, eta/2) with eta={times.eta}")
    pieces: list[Interval] = []
    lo, lo_closed = 0.0, False
    for tj in times.times:
        if tj > T:
            break
        hi = tj - delta
        if hi > lo or (hi == lo and lo_closed):
            pieces.append(Interval(lo, min(hi, T), lo_closed, True))
        lo, lo_closed = tj + delta, True
    if T > lo or (T == lo and lo_closed):
        pieces.append(Interval(lo, T, lo_closed, True))
    return IntervalSet(tuple(pieces), T)


def j_mask(times: np.ndarray, grid: np.ndarray, T: float, delta: float) -> np.ndarray:
    """Boolean mask of the grid times lying in ``j_set``, with t = 0 excluded."""
    keep = (grid > 0) & (grid <= T)
    for tj in np.asarray(times, dtype=float):
        if tj > T:
            break
        keep &= np.abs(grid - tj) >= delta
    return keep


# -- sequence builders ---------------------------------------------------------

SequenceBuilder = Callable[[np.ndarray, float], TimeSequence]


@dataclass(frozen=True, eq=False)
class TimeFunction:
    """A named sequence builder with an optional batched form."""

    name: str
    single: SequenceBuilder
    batch: Callable[[np.ndarray, float], list[TimeSequence]] | None = None

    def __call__(self, x, T: float) -> TimeSequence:
        return self.single(np.asarray(x, dtype=float), T)

    def many(self, X: np.ndarray, T: float) -> list[TimeSequence]:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.batch is not None:
            return self.batch(X, T)
        return [self.single(x, T) for x in X]


def impulse_sequence(sys: ImpulsiveSystem, x, T: float) -> TimeSequence:
    if sys.d_set is None:
        return TimeSequence((), sys.eta, "impulse")
    orbit = impulsive_orbit(sys, _coords(sys.space, x), T)
    return TimeSequence(orbit.impulse_times, sys.eta, "impulse")


def impulse_sequences(sys: ImpulsiveSystem, X: np.ndarray, T: float) -> list[TimeSequence]:
    if sys.d_set is None:
        return [TimeSequence((), sys.eta, "impulse") for _ in X]
    return [TimeSequence(o.impulse_times, sys.eta, "impulse") for o in impulsive_orbits(sys, X, T)]


def visit_times_ID(sys: ImpulsiveSystem, x, T: float) -> TimeSequence:
    """Times in (0, T] at which the impulsive orbit lies in I(D).

    Includes continuous passes through I(D) and the post-jump landings.
    """
    if sys.d_set is None:
        return TimeSequence((), sys.s0, "visit")
    if sys.image_set is None:
        raise DomainError(f"{sys.name} has no I(D) crossing set")
    return _visits(sys, impulsive_orbit(sys, _coords(sys.space, x), T))


def visit_sequences(sys: ImpulsiveSystem, X: np.ndarray, T: float) -> list[TimeSequence]:
    if sys.d_set is None:
        return [TimeSequence((), sys.s0, "visit") for _ in X]
    if sys.image_set is None:
        raise DomainError(f"{sys.name} has no I(D) crossing set")
    return [_visits(sys, o) for o in impulsive_orbits(sys, X, T)]


def _visits(sys: ImpulsiveSystem, orbit) -> TimeSequence:
    visits: list[float] = []
    for k, seg in enumerate(orbit.segments):
        if k > 0:
            visits.append(seg.start_time)
        if seg.duration > 0:
            hits = _scan_hits(sys.flow.evolve_array, sys.image_set, np.asarray(seg.start_point),
                              seg.duration, sys.scan_step, False)
            visits += [seg.start_time + h for h in hits if h < seg.duration]
    return TimeSequence(tuple(sorted(visits)), sys.s0, "visit")


def section_times(flow: SemiflowSpec, section: ImpulseSet, x, T: float, eta: float,
                  step: float | None = None) -> TimeSequence:
    """Crossing times of a marked section by the continuous flow."""
    step = step if step is not None else min(eta, 1.0) / 50.0
    hits = _scan_hits(flow.evolve_array, section, _coords(flow.space, x), T, step, False)
    return TimeSequence(tuple(hits), eta, "section")


def refine_merge(tau: TimeSequence, theta: TimeSequence,
                 min_gap: float = MIN_MERGED_GAP) -> TimeSequence:
    """Sorted merge of two sequences; entries closer than 1e-9 are collapsed.

    Collapsed entries keep the value from ``tau`` so the result contains
    every entry of ``tau`` exactly.
    """
    tagged = sorted([(t, 0) for t in tau.times] + [(t, 1) for t in theta.times])
    merged: list[float] = []
    from_tau: list[bool] = []
    for t, tag in tagged:
        if merged and t - merged[-1] <= DUPLICATE_TOL:
            if tag == 0 and not from_tau[-1]:
                merged[-1], from_tau[-1] = t, True
            continue
        merged.append(t)
        from_tau.append(tag == 0)
    gaps = np.diff(merged) if len(merged) > 1 else np.empty(0)
    if gaps.size and gaps.min() < min_gap:
        k = int(np.argmin(gaps))
        raise ConsistencyError(f"merged gap {gaps[k]:.3g} below {min_gap}",
                               witness=(merged[k], merged[k + 1]))
    eta = min(tau.eta, theta.eta, float(gaps.min()) if gaps.size else math.inf)
    return TimeSequence(tuple(merged), eta, "merged")


def merged_sequence(sys: ImpulsiveSystem, x, T: float) -> TimeSequence:
    return refine_merge(impulse_sequence(sys, x, T), visit_times_ID(sys, x, T))


def merged_sequences(sys: ImpulsiveSystem, X: np.ndarray, T: float) -> list[TimeSequence]:
    return [refine_merge(a, b) for a, b in
            zip(impulse_sequences(sys, X, T), visit_sequences(sys, X, T))]


# -- admissibility and refinement ------------------------------------------------


@dataclass
class AdmissibilityReport:
    passed: bool
    min_first: float
    min_gap: float
    max_translation_error: float
    failures: list[tuple[str, object]]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "min_first": self.min_first,
            "min_gap": self.min_gap,
            "max_translation_error": self.max_translation_error,
            "failures": [[name, repr(w)] for name, w in self.failures],
        }


def check_admissible(
    system: ImpulsiveSystem | SemiflowSpec,
    seq_builder: SequenceBuilder,
    Z: Iterable,
    samples: Iterable,
    eta: float,
    T: float = 20.0,
    n_shifts: int = 3,
    seed: int = 0,
) -> AdmissibilityReport:
    """Check the admissibility conditions of a time function on samples.

    Verifies the first time is at least ``eta`` on ``Z``, consecutive gaps
    are at least ``eta`` and the translation identity
    ``tau_n(psi_s x) = tau_n(x) - s`` for sampled ``s < tau_1(x)``.
    """
    samples = [np.asarray(s, dtype=float) for s in samples]
    if not samples:
        raise DomainError("samples must be nonempty")
    rng = np.random.default_rng(seed)
    failures: list[tuple[str, object]] = []
    min_first = math.inf
    for z in Z:
        seq = seq_builder(np.asarray(z, dtype=float), T)
        if len(seq):
            min_first = min(min_first, seq.times[0])
            if seq.times[0] < eta - GAP_TOL:
                failures.append(("first", (tuple(z), seq.times[0])))
    min_gap = math.inf
    max_err = 0.0
    for x in samples:
        seq = seq_builder(x, T)
        if len(seq) > 1:
            gap = seq.min_gap
            min_gap = min(min_gap, gap)
            if gap < eta - GAP_TOL:
                failures.append(("gap", (tuple(x), gap)))
        first = seq.times[0] if len(seq) else T
        for s in rng.uniform(0, first, n_shifts):
            if s <= 0 or s >= first:
                continue
            shifted = seq_builder(advance(system, s, x), T - s).array
            expected = seq.array - s
            expected = expected[expected <= T - s]
            if shifted.shape != expected.shape:
                failures.append(("translation", (tuple(x), float(s))))
                max_err = math.inf
                continue
            if expected.size:
                err = float(np.max(np.abs(shifted - expected)))
                max_err = max(max_err, err)
                if err > 1e-9:
                    failures.append(("translation", (tuple(x), float(s), err)))
    return AdmissibilityReport(not failures, min_first, min_gap, max_err, failures)


def is_refinement(fine: SequenceBuilder, coarse: SequenceBuilder, samples: Iterable,
                  T: float) -> bool:
    """True if every coarse time up to T appears (within 1e-9) in the fine sequence."""
    for x in samples:
        x = np.asarray(x, dtype=float)
        f = fine(x, T).array
        for t in coarse(x, T).times:
            if t > T:
                break
            if f.size == 0 or np.min(np.abs(f - t)) > DUPLICATE_TOL:
                return False
    return True


# -- serialization -------------------------------------------------------------


def sequence_rows(points: Sequence, seqs: Sequence[TimeSequence]) -> list[list[str]]:
    rows = []
    for p, s in zip(points, seqs):
        rows.append([";".join(f"{v:.12g}" for v in np.asarray(p, dtype=float))]
                    + [f"{t:.12g}" for t in s.times])
    return rows


def write_sequences_csv(path, points: Sequence, seqs: Sequence[TimeSequence]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point", "times..."])
        w.writerows(sequence_rows(points, seqs))
