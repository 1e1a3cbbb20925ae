"""Compact phase spaces, their metrics, and closed-form continuous semiflows.

Every flow in this module is an exact evaluator ``evolve(t, coords)`` rather
than an ODE integrator.  Evaluators broadcast: ``t`` of shape ``S`` and
``coords`` of shape ``S' + (dim,)`` with ``S`` and ``S'`` broadcastable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DomainError

MEMBERSHIP_TOL = 1e-9

ArrayFn = Callable[[np.ndarray], np.ndarray]
DistFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
EvolveFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class Point:
    """A point of a compact phase space, tagged with the id of its space."""

    coords: tuple[float, ...]
    space_id: str

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __iter__(self):
        return iter(self.coords)


@dataclass(frozen=True, eq=False)
class MetricSpaceSpec:
    """A compact metric space described by coordinate bounds.

    Args:
        space_id: identifier carried by every Point of this space.
        dimension: number of coordinates.
        bounds: per-coordinate closed box ``((lo, hi), ...)``.
        dist_fn: vectorized metric over the last axis.
        region: optional extra membership predicate (vectorized) for spaces
            that are not boxes, e.g. an annulus.
        sampler: draws ``n`` points of the space from a numpy Generator.
        embedding: optional map into R^k whose Euclidean distance equals
            ``dist_fn``; lets callers precompute features once per orbit.
    """

    space_id: str
    dimension: int
    bounds: tuple[tuple[float, float], ...]
    dist_fn: DistFn
    region: ArrayFn | None = None
    sampler: Sampler | None = None
    description: str = ""
    embedding: ArrayFn | None = None

    def features(self, coords) -> np.ndarray:
        """Coordinates in which the metric is Euclidean."""
        c = np.asarray(coords, dtype=float)
        if self.embedding is not None:
            return self.embedding(c)
        if self.dist_fn is euclidean_dist:
            return c
        raise DomainError(f"{self.space_id} has no Euclidean embedding")

    @property
    def has_features(self) -> bool:
        return self.embedding is not None or self.dist_fn is euclidean_dist

    def contains(self, coords, tol: float = MEMBERSHIP_TOL) -> np.ndarray | bool:
        c = np.asarray(coords, dtype=float)
        if c.shape[-1] != self.dimension:
            return False
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        ok = np.all((c >= lo - tol) & (c <= hi + tol), axis=-1)
        if self.region is not None:
            ok = ok & self.region(c, tol)
        return ok if np.ndim(ok) else bool(ok)

    def point(self, *coords: float) -> Point:
        if len(coords) == 1 and np.ndim(coords[0]) == 1:
            coords = tuple(coords[0])
        values = tuple(float(c) for c in coords)
        if len(values) != self.dimension:
            raise DomainError(
                f"{self.space_id}: expected {self.dimension} coordinates, got {len(values)}"
            )
        if not self.contains(values):
            raise DomainError(f"{values} is outside {self.space_id}")
        return Point(values, self.space_id)

    def points(self, coords: Iterable) -> list[Point]:
        return [self.point(c) for c in np.atleast_2d(np.asarray(coords, dtype=float))]

    def distance(self, a, b) -> np.ndarray:
        return self.dist_fn(np.asarray(a, dtype=float), np.asarray(b, dtype=float))

    def sample(self, n: int, seed: int) -> np.ndarray:
        if self.sampler is None:
            raise DomainError(f"{self.space_id} has no sampler")
        return self.sampler(np.random.default_rng(seed), n)


@dataclass(frozen=True, eq=False)
class SemiflowSpec:
    """A continuous semiflow with an exact evaluator.

    ``reverse`` is the backward flow for invertible systems; it is only used
    to test membership in flow tubes and may be absent.
    """

    space: MetricSpaceSpec
    evolve_fn: EvolveFn
    description: str = ""
    reverse_fn: EvolveFn | None = None
    name: str = field(default="flow")

    def evolve_array(self, t, coords) -> np.ndarray:
        return self.evolve_fn(np.asarray(t, dtype=float), np.asarray(coords, dtype=float))

    def reverse_array(self, t, coords) -> np.ndarray:
        if self.reverse_fn is None:
            raise DomainError(f"{self.name} is not invertible")
        return self.reverse_fn(np.asarray(t, dtype=float), np.asarray(coords, dtype=float))


def _coords(space: MetricSpaceSpec, x) -> np.ndarray:
    if isinstance(x, Point):
        if x.space_id != space.space_id:
            raise DomainError(f"point of {x.space_id} used in {space.space_id}")
        return x.array
    return np.asarray(x, dtype=float)


def dist(space: MetricSpaceSpec, x: Point, y: Point) -> float:
    """Metric value between two points of ``space``."""
    for p in (x, y):
        if isinstance(p, Point) and p.space_id != space.space_id:
            raise DomainError(f"point of {p.space_id} used in {space.space_id}")
    return float(space.distance(_coords(space, x), _coords(space, y)))


def evolve(flow: SemiflowSpec, t: float, x: Point) -> Point:
    if t < 0:
        raise DomainError(f"negative time {t}")
    out = flow.evolve_array(t, _coords(flow.space, x))
    return Point(tuple(float(v) for v in out), flow.space.space_id)


def modulus_beta(
    flow: SemiflowSpec,
    alpha: float,
    sample: Sequence[Point] | np.ndarray,
    t_max: float,
) -> float:
    """Verified witness of uniform continuity in time.

    Returns the largest grid lag ``beta`` (grid step ``alpha / 20``) such
    that every sampled orbit moves less than ``alpha`` over every grid lag
    up to ``beta``.  If every lag up to ``t_max`` verifies, ``t_max`` is
    returned; at worst the grid step itself.
    """
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    xs = np.array([_coords(flow.space, p) for p in sample]) if not isinstance(
        sample, np.ndarray
    ) else np.atleast_2d(sample)
    if len(xs) == 0:
        raise DomainError("empty sample")
    step = alpha / 20.0
    n_steps = int(math.floor(t_max / step + 1e-9))
    if n_steps < 1:
        return float(t_max)
    times = step * np.arange(n_steps + 1)
    orbit = flow.evolve_array(times[None, :], xs[:, None, :])
    space = flow.space
    if space.has_features:
        orbit = space.features(orbit)
        metric = euclidean_dist
    else:
        metric = space.distance
    for lag in range(1, n_steps + 1):
        d = metric(orbit[:, :-lag], orbit[:, lag:])
        if np.max(d) >= alpha:
            return max(lag - 1, 1) * step
    return float(t_max)


# -- Euclidean plane and the closed annulus 1 <= r <= 2 ------------------------


def euclidean_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum((a - b) ** 2, axis=-1))


def _annulus_region(r_in: float, r_out: float):
    def region(c, tol):
        r = np.hypot(c[..., 0], c[..., 1])
        return (r >= r_in - tol) & (r <= r_out + tol)

    return region


def _annulus_sampler(r_in: float, r_out: float) -> Sampler:
    def sampler(rng, n):
        r = rng.uniform(r_in, r_out, n)
        th = rng.uniform(0.0, 2 * np.pi, n)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)

    return sampler


def annulus_space(r_in: float = 1.0, r_out: float = 2.0) -> MetricSpaceSpec:
    return MetricSpaceSpec(
        space_id="annulus",
        dimension=2,
        bounds=((-r_out, r_out), (-r_out, r_out)),
        dist_fn=euclidean_dist,
        region=_annulus_region(r_in, r_out),
        sampler=_annulus_sampler(r_in, r_out),
        description=f"closed annulus {r_in} <= r <= {r_out} with the Euclidean metric",
    )


def _rotate(t: np.ndarray, c: np.ndarray) -> np.ndarray:
    ct, st = np.cos(t), np.sin(t)
    x, y = c[..., 0], c[..., 1]
    return np.stack(np.broadcast_arrays(x * ct - y * st, x * st + y * ct), axis=-1)


def rotation_flow(space: MetricSpaceSpec | None = None) -> SemiflowSpec:
    """Unit angular speed counterclockwise rotation (r' = 0, theta' = 1)."""
    space = space or annulus_space()
    return SemiflowSpec(
        space=space,
        evolve_fn=_rotate,
        reverse_fn=lambda t, c: _rotate(-t, c),
        description="rigid rotation r'=0, theta'=1",
        name="rotation",
    )


def fixed_point_flow(space: MetricSpaceSpec) -> SemiflowSpec:
    def still(t, c):
        return np.broadcast_to(c, np.broadcast_shapes(np.shape(t) + (1,), c.shape)).copy()

    return SemiflowSpec(
        space=space, evolve_fn=still, reverse_fn=still,
        description="identity flow", name="fixed",
    )


# -- unit-roof suspension of the angle-doubling map -----------------------------
#
# Coordinates (theta, h) in [0, 1) x [0, 1), glued by (theta, 1) ~ (2 theta, 0).
# The metric is the Euclidean distance of the continuous injective embedding
#
#   E(theta, h) = (L cos 2pi h, L sin 2pi h,
#                  K (c^2 e(theta) + s^2 e(2 theta)),  K c s (e(2 theta) - e(theta)))
#
# with c = cos(pi h / 2), s = sin(pi h / 2), e(a) = (cos 2pi a, sin 2pi a).
# The fiber block is a rotation of (c e(theta), s e(2 theta)), so on a common
# height the fiber distance is K sqrt(c^2 |de(theta)|^2 + s^2 |de(2 theta)|^2).
# At h = 1 the embedding equals that of (2 theta, 0), which realizes the gluing.

SUSPENSION_FIBER_SCALE = 0.25
SUSPENSION_HEIGHT_SCALE = 1.0 / (4.0 * np.pi)


def suspension_embed(c: np.ndarray) -> np.ndarray:
    th, h = c[..., 0], c[..., 1]
    cc, ss = np.cos(0.5 * np.pi * h), np.sin(0.5 * np.pi * h)
    a1, a2 = 2 * np.pi * th, 4 * np.pi * th
    e1x, e1y, e2x, e2y = np.cos(a1), np.sin(a1), np.cos(a2), np.sin(a2)
    k, lam = SUSPENSION_FIBER_SCALE, SUSPENSION_HEIGHT_SCALE
    return np.stack(
        [
            lam * np.cos(2 * np.pi * h),
            lam * np.sin(2 * np.pi * h),
            k * (cc * cc * e1x + ss * ss * e2x),
            k * (cc * cc * e1y + ss * ss * e2y),
            k * cc * ss * (e2x - e1x),
            k * cc * ss * (e2y - e1y),
        ],
        axis=-1,
    )


def suspension_dist(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return euclidean_dist(suspension_embed(a), suspension_embed(b))


def _suspension_sampler(rng, n):
    return np.stack([rng.random(n), rng.random(n)], axis=-1)


def doubling_suspension_space() -> MetricSpaceSpec:
    return MetricSpaceSpec(
        space_id="doubling_suspension",
        dimension=2,
        bounds=((0.0, 1.0), (0.0, 1.0)),
        dist_fn=suspension_dist,
        sampler=_suspension_sampler,
        embedding=suspension_embed,
        description="mapping torus of theta -> 2 theta mod 1 with unit roof",
    )


def _suspension_evolve(t: np.ndarray, c: np.ndarray) -> np.ndarray:
    th, h = c[..., 0], c[..., 1]
    s = h + t
    n = np.floor(s)
    # ldexp and mod 1 are exact in binary floating point
    new_th = np.mod(np.ldexp(th, n.astype(np.int64)), 1.0)
    return np.stack(np.broadcast_arrays(new_th, s - n), axis=-1)


def doubling_suspension_flow(space: MetricSpaceSpec | None = None) -> SemiflowSpec:
    return SemiflowSpec(
        space=space or doubling_suspension_space(),
        evolve_fn=_suspension_evolve,
        description="unit-speed vertical flow, (theta, 1) glued to (2 theta mod 1, 0)",
        name="doubling_suspension",
    )


def suspension_roof_times(coords, T: float) -> np.ndarray:
    """Times in (0, T] at which the orbit of ``coords`` reaches the roof."""
    h = float(np.asarray(coords, dtype=float)[1]) % 1.0
    first = 1.0 - h
    if first > T:
        return np.empty(0)
    return first + np.arange(int(math.floor(T - first + 1e-12)) + 1, dtype=float)
