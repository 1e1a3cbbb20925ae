"""Impulsive dynamical systems: continuous flow plus a reset map on an impulse set.

A trajectory follows the flow until it reaches the impulse set ``D``, is sent
to ``I(point)`` and continues from there.  Hits are located by scanning a
signed crossing function for sign changes and refining with a bracketed
root solver; tangential touches raise :class:`GrazingError`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from .errors import ConsistencyError, DomainError, GrazingError
from .spaces import MEMBERSHIP_TOL, MetricSpaceSpec, Point, SemiflowSpec, _coords

HIT_XTOL = 1e-12
GRAZE_TOL = 1e-9
GAP_TOL = 1e-9
# hit times are resolved to this accuracy; a time this close below an
# impulse counts as the impulse itself
TIME_TOL = 1e-10
TAU_STAR_HORIZON = 100.0


@dataclass(frozen=True, eq=False)
class ImpulseSet:
    """A compact set met transversally by the flow.

    Args:
        membership_fn: ``(coords, tol) -> bool array``.
        crossing_fn: signed scalar function of the state; along a trajectory
            ``t -> crossing(phi_t(x))`` changes sign where the orbit crosses
            the set.  Zeros outside the set (membership false) are ignored.
        parametrization: maps parameters in ``param_interval`` to coordinates.
    """

    membership_fn: Callable[[np.ndarray, float], np.ndarray]
    crossing_fn: Callable[[np.ndarray], np.ndarray]
    parametrization: Callable[[np.ndarray], np.ndarray] | None = None
    param_interval: tuple[float, float] | None = None
    dimension: int = 1
    name: str = "D"

    def contains(self, coords, tol: float = MEMBERSHIP_TOL):
        out = self.membership_fn(np.asarray(coords, dtype=float), tol)
        return out if np.ndim(out) else bool(out)

    def crossing(self, coords) -> np.ndarray:
        return self.crossing_fn(np.asarray(coords, dtype=float))

    def parametrize(self, s) -> np.ndarray:
        if self.parametrization is None:
            raise DomainError(f"{self.name} has no parametrization")
        return self.parametrization(np.asarray(s, dtype=float))

    def param_grid(self, n: int) -> np.ndarray:
        lo, hi = self.param_interval
        return np.linspace(lo, hi, n)


@dataclass(frozen=True, eq=False)
class ImpulseMap:
    apply_fn: Callable[[np.ndarray], np.ndarray]
    lipschitz_bound: float

    def __call__(self, coords) -> np.ndarray:
        return self.apply_fn(np.asarray(coords, dtype=float))


@dataclass(frozen=True, eq=False)
class ImpulsiveSystem:
    """The bundle (X, phi, D, I) with the constants its hypotheses use.

    ``xi0`` is the half-tube length, ``eta`` the impulse gap, ``a`` the
    distance between D and I(D), ``s0`` the return gap to I(D) and ``xi`` the
    tube width removed from X.  ``image_set`` describes I(D) as a crossing
    set; it is needed for visit times to I(D) and transversality checks.
    """

    space: MetricSpaceSpec
    flow: SemiflowSpec
    d_set: ImpulseSet | None
    i_map: ImpulseMap | None
    xi0: float
    eta: float
    a: float
    s0: float
    xi: float
    image_set: ImpulseSet | None = None
    name: str = "impulsive"

    def __post_init__(self):
        bound = min(self.eta / 4, self.xi0 / 2, self.a / 2)
        if not 0 < self.xi < bound:
            raise DomainError(f"xi={self.xi} violates 0 < xi < {bound}")
        if (self.d_set is None) != (self.i_map is None):
            raise DomainError("d_set and i_map must be given together")

    @classmethod
    def without_impulses(cls, flow: SemiflowSpec, eta: float = 2 * math.pi,
                         name: str = "no_impulses") -> "ImpulsiveSystem":
        return cls(flow.space, flow, None, None, xi0=1.0, eta=eta, a=math.inf,
                   s0=eta, xi=min(eta / 8, 0.25), name=name)

    @property
    def scan_step(self) -> float:
        return min(self.eta, 1.0) / 50.0

    def in_d(self, coords) -> bool:
        return self.d_set is not None and bool(self.d_set.contains(coords))

    def in_image(self, coords) -> bool:
        return self.image_set is not None and bool(self.image_set.contains(coords))


@dataclass(frozen=True)
class Segment:
    start_time: float
    start_point: tuple[float, ...]
    duration: float


@dataclass(frozen=True, eq=False)
class ImpulsiveOrbit:
    """Piecewise-continuous trajectory up to ``horizon``.

    Segment ``k`` is the flow orbit of ``start_point`` on
    ``[start_time, start_time + duration)``; the orbit is right-continuous so
    at an impulse time it takes the post-jump value.
    """

    segments: tuple[Segment, ...]
    impulse_times: tuple[float, ...]
    horizon: float
    flow: SemiflowSpec = field(repr=False)

    @property
    def n_impulses(self) -> int:
        return len(self.impulse_times)

    def _starts(self) -> np.ndarray:
        return np.array([s.start_time for s in self.segments])

    def evaluate(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        if np.any(t < 0) or np.any(t > self.horizon + 1e-12):
            raise DomainError(f"times outside [0, {self.horizon}]")
        idx = np.searchsorted(self._starts(), t + TIME_TOL, side="right") - 1
        out = np.empty(t.shape + (self.flow.space.dimension,))
        for k in np.unique(idx):
            seg = self.segments[k]
            sel = idx == k
            out[sel] = self.flow.evolve_array(
                np.maximum(t[sel] - seg.start_time, 0.0), np.asarray(seg.start_point)[None, :]
            )
        return out[0] if scalar else out

    def left_limit(self, t: float) -> np.ndarray:
        """Limit of the orbit as time increases to ``t``."""
        if t <= 0:
            raise DomainError("left limit needs t > 0")
        k = int(np.searchsorted(self._starts(), t - TIME_TOL, side="left")) - 1
        seg = self.segments[k]
        return self.flow.evolve_array(t - seg.start_time, np.asarray(seg.start_point))


def _scan_hits(evolve_fn, dset: ImpulseSet, x: np.ndarray, horizon: float,
               step: float, first_only: bool) -> list[float]:
    """Times in (0, horizon] where the orbit crosses ``dset``."""
    n = max(2, int(math.ceil(horizon / step)))
    times = np.linspace(0.0, horizon, n + 1)
    pts = evolve_fn(times, x[None, :])
    g = dset.crossing(pts)
    sg = np.sign(g)

    def f(t):
        return float(dset.crossing(evolve_fn(np.float64(t), x)))

    candidates = []
    cells = np.nonzero(sg[:-1] * sg[1:] < 0)[0]
    candidates += [(times[k], "cell", k) for k in cells]
    zeros = np.nonzero(sg[1:] == 0)[0] + 1
    candidates += [(times[j], "zero", j) for j in zeros]
    inner = np.arange(1, n)
    ag = np.abs(g)
    minima = inner[
        (ag[inner] < ag[inner - 1]) & (ag[inner] <= ag[inner + 1])
        & (sg[inner - 1] == sg[inner]) & (sg[inner] == sg[inner + 1]) & (sg[inner] != 0)
    ]
    candidates += [(times[j], "min", j) for j in minima]
    candidates.sort(key=lambda c: (c[0], c[1]))

    hits: list[float] = []
    for _, kind, k in candidates:
        if kind == "cell":
            t_hit = brentq(f, times[k], times[k + 1], xtol=HIT_XTOL)
            if dset.contains(evolve_fn(np.float64(t_hit), x)):
                hits.append(float(t_hit))
        elif kind == "zero":
            pt = pts[k]
            if not dset.contains(pt):
                continue
            after = sg[k + 1] if k + 1 <= n else -sg[k - 1]
            if sg[k - 1] * after < 0 or k == n:
                hits.append(float(times[k]))
            else:
                raise GrazingError(f"{dset.name} touched without crossing at t={times[k]}",
                                   float(times[k]), tuple(pt))
        else:
            res = minimize_scalar(lambda t: abs(f(t)), bounds=(times[k - 1], times[k + 1]),
                                  method="bounded", options={"xatol": HIT_XTOL})
            if res.fun <= GRAZE_TOL:
                pt = evolve_fn(np.float64(res.x), x)
                if dset.contains(pt, tol=max(MEMBERSHIP_TOL, 10 * GRAZE_TOL)):
                    raise GrazingError(
                        f"{dset.name} touched without crossing at t={res.x:.12g}",
                        float(res.x), tuple(pt))
        if first_only and hits:
            break
    return sorted(hits)


BISECT_TOL = 1e-12
BATCH = 1024


def _bisect(evolve_fn, dset: ImpulseSet, X: np.ndarray, lo: np.ndarray, hi: np.ndarray,
            f_lo: np.ndarray) -> np.ndarray:
    """Vectorized bisection of ``crossing(phi_t(X[i]))`` on ``[lo[i], hi[i]]``."""
    lo, hi, f_lo = lo.copy(), hi.copy(), f_lo.copy()
    while True:
        open_ = hi - lo > BISECT_TOL
        if not open_.any():
            return 0.5 * (lo + hi)
        idx = np.nonzero(open_)[0]
        mid = 0.5 * (lo[idx] + hi[idx])
        f_mid = dset.crossing(evolve_fn(mid, X[idx]))
        same = np.sign(f_mid) == np.sign(f_lo[idx])
        exact = f_mid == 0
        lo[idx] = np.where(same, mid, lo[idx])
        f_lo[idx] = np.where(same, f_mid, f_lo[idx])
        hi[idx] = np.where(same, hi[idx], mid)
        lo[idx[exact]] = hi[idx[exact]] = mid[exact]


def _first_hits(evolve_fn, dset: ImpulseSet, X: np.ndarray, horizons: np.ndarray,
                step: float) -> np.ndarray:
    """First crossing of ``dset`` in (0, horizon] for each row of ``X``; NaN if none.

    All orbits are scanned on a common grid; sign-change cells are refined by
    vectorized bisection and kept only if the root is a member of the set.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    horizons = np.broadcast_to(np.asarray(horizons, dtype=float), (len(X),))
    out = np.full(len(X), np.nan)
    for start in range(0, len(X), BATCH):
        sl = slice(start, start + BATCH)
        out[sl] = _first_hits_chunk(evolve_fn, dset, X[sl], horizons[sl], step)
    return out


def _first_hits_chunk(evolve_fn, dset, X, horizons, step):
    H = float(horizons.max())
    out = np.full(len(X), np.nan)
    if H <= 0:
        return out
    m = max(2, int(math.ceil(H / step)))
    times = np.linspace(0.0, H, m + 1)
    pts = evolve_fn(times[None, :], X[:, None, :])
    g = dset.crossing(pts)
    sg = np.sign(g)
    h = horizons[:, None]

    # sign changes in cells starting before the horizon
    rows, cells = np.nonzero((sg[:, :-1] * sg[:, 1:] < 0) & (times[None, :-1] < h))
    roots = _bisect(evolve_fn, dset, X[rows], times[cells], times[cells + 1], g[rows, cells])
    keep = roots <= horizons[rows]
    rows, roots = rows[keep], roots[keep]
    member = dset.contains(evolve_fn(roots, X[rows]))
    cand_rows, cand_t = list(rows[member]), list(roots[member])

    # exact zeros on the grid
    zr, zj = np.nonzero((sg[:, 1:] == 0) & (times[None, 1:] <= h))
    zj = zj + 1
    if zr.size:
        zmember = dset.contains(pts[zr, zj])
        for i, j, mem in zip(zr, zj, zmember):
            if not mem:
                continue
            after = sg[i, j + 1] if j < m else -sg[i, j - 1]
            if sg[i, j - 1] * after < 0:
                cand_rows.append(i)
                cand_t.append(times[j])
            else:
                raise GrazingError(f"{dset.name} touched without crossing at t={times[j]:.12g}",
                                   float(times[j]), _pt(pts[i, j]))
    if cand_rows:
        cand_rows, cand_t = np.asarray(cand_rows), np.asarray(cand_t)
        order = np.lexsort((cand_t, cand_rows))
        cand_rows, cand_t = cand_rows[order], cand_t[order]
        first = np.ones(len(cand_rows), dtype=bool)
        first[1:] = cand_rows[1:] != cand_rows[:-1]
        out[cand_rows[first]] = cand_t[first]

    # near-tangencies before the first hit
    ag = np.abs(g)
    inner = slice(1, m)
    is_min = ((ag[:, inner] < ag[:, :-2]) & (ag[:, inner] <= ag[:, 2:])
              & (sg[:, :-2] == sg[:, inner]) & (sg[:, inner] == sg[:, 2:]) & (sg[:, inner] != 0))
    limit = np.where(np.isnan(out), horizons, out)[:, None]
    mr, mj = np.nonzero(is_min & (times[None, 1:m] < limit))
    for i, j in zip(mr, mj + 1):
        x = X[i]
        res = minimize_scalar(lambda t: abs(float(dset.crossing(evolve_fn(np.float64(t), x)))),
                              bounds=(times[j - 1], times[j + 1]), method="bounded",
                              options={"xatol": HIT_XTOL})
        if res.fun <= GRAZE_TOL:
            pt = evolve_fn(np.float64(res.x), x)
            if dset.contains(pt, tol=max(MEMBERSHIP_TOL, 10 * GRAZE_TOL)):
                raise GrazingError(f"{dset.name} touched without crossing at t={res.x:.12g}",
                                   float(res.x), _pt(pt))
    return out


def _first_hit(sys: ImpulsiveSystem, coords: np.ndarray, horizon: float,
               dset: ImpulseSet | None = None) -> float | None:
    dset = dset if dset is not None else sys.d_set
    if dset is None or horizon <= 0:
        return None
    hit = _first_hits(sys.flow.evolve_array, dset, coords, horizon, sys.scan_step)[0]
    return None if np.isnan(hit) else float(hit)


def first_hit_time(sys: ImpulsiveSystem, x: Point, horizon: float) -> float | None:
    """Smallest t in (0, horizon] with phi_t(x) in D, or None."""
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    return _first_hit(sys, _coords(sys.space, x), horizon)


def crossing_times(sys: ImpulsiveSystem, dset: ImpulseSet, x, horizon: float) -> list[float]:
    """All t in (0, horizon] at which the flow orbit of ``x`` crosses ``dset``."""
    if horizon <= 0:
        return []
    return _scan_hits(sys.flow.evolve_array, dset, _coords(sys.space, x), horizon,
                      sys.scan_step, False)


def in_tube(sys: ImpulsiveSystem, x, length: float) -> bool:
    """Membership in ``{phi_t(d): d in D, 0 < t < length}`` via the backward flow."""
    c = _coords(sys.space, x)
    if sys.d_set is None or sys.in_d(c):
        return False
    hits = _scan_hits(sys.flow.reverse_array, sys.d_set, c, length, sys.scan_step, True)
    return bool(hits) and hits[0] < length


def in_x_xi(sys: ImpulsiveSystem, x) -> bool:
    c = _coords(sys.space, x)
    return bool(sys.space.contains(c)) and not sys.in_d(c) and not in_tube(sys, c, sys.xi)


def tau_star(sys: ImpulsiveSystem, x: Point, horizon: float = TAU_STAR_HORIZON) -> float:
    c = _coords(sys.space, x)
    if sys.in_d(c):
        return 0.0
    if in_tube(sys, c, sys.xi):
        raise DomainError(f"{tuple(c)} lies in the open tube D_xi")
    hit = _first_hit(sys, c, horizon)
    return math.inf if hit is None else hit


def impulsive_orbit(sys: ImpulsiveSystem, x: Point, T: float) -> ImpulsiveOrbit:
    return impulsive_orbits(sys, _coords(sys.space, x)[None, :], T)[0]


def impulsive_orbits(sys: ImpulsiveSystem, X: np.ndarray, T: float) -> list[ImpulsiveOrbit]:
    """Impulsive orbits of every row of ``X`` up to ``T``, advanced in lockstep."""
    if T <= 0:
        raise DomainError("T must be positive")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = len(X)
    max_impulses = math.ceil(T / sys.eta) + 1
    t = np.zeros(n)
    Y = X.copy()
    segments: list[list[Segment]] = [[] for _ in range(n)]
    impulses: list[list[float]] = [[] for _ in range(n)]
    active = np.arange(n)
    while active.size:
        if sys.d_set is None:
            h = np.full(active.size, np.nan)
        else:
            h = _first_hits(sys.flow.evolve_array, sys.d_set, Y[active],
                            T - t[active] + TIME_TOL, sys.scan_step)
        hit = ~np.isnan(h)
        for i, hi, ok in zip(active, h, hit):
            segments[i].append(Segment(float(t[i]), _pt(Y[i]),
                                       float(hi) if ok else max(T - t[i], 0.0)))
        active, h = active[hit], h[hit]
        if not active.size:
            break
        Y[active] = sys.i_map(sys.flow.evolve_array(h, Y[active]))
        t[active] += h
        for i in active:
            imp = impulses[i]
            if imp and t[i] - imp[-1] < sys.eta - GAP_TOL:
                raise ConsistencyError(
                    f"impulse gap {t[i] - imp[-1]:.3g} below eta={sys.eta}",
                    witness=(_pt(X[i]), imp[-1], float(t[i])))
            imp.append(float(t[i]))
            if len(imp) > max_impulses:
                raise ConsistencyError(f"more than {max_impulses} impulses before T={T}",
                                       witness=(_pt(X[i]), tuple(imp)))
    return [ImpulsiveOrbit(tuple(segments[i]), tuple(impulses[i]), float(T), sys.flow)
            for i in range(n)]


def psi(sys: ImpulsiveSystem, t: float, x: Point) -> Point:
    """The impulsive semiflow evaluated at time ``t``."""
    if t < 0:
        raise DomainError(f"negative time {t}")
    if t == 0:
        return Point(tuple(map(float, _coords(sys.space, x))), sys.space.space_id)
    value = impulsive_orbit(sys, x, t).evaluate(t)
    return Point(tuple(map(float, value)), sys.space.space_id)


def impulse_times(sys: ImpulsiveSystem, x: Point, T: float) -> tuple[tuple[float, ...], int]:
    """Impulse times up to ``T`` and ``n_T = max{n: tau_n <= T}`` (0 if none)."""
    times = impulsive_orbit(sys, x, T).impulse_times
    return times, len(times)


# -- hypothesis checks ---------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    status: str  # "pass", "fail" or "assumed"
    value: float | None = None
    witness: object = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status != "fail"


@dataclass
class ConditionReport:
    checks: dict[str, CheckResult]
    seed: int
    n_samples: int

    @property
    def passed(self) -> bool:
        return all(c.ok for c in self.checks.values())

    @property
    def a(self) -> float | None:
        return self.checks["gap"].value

    @property
    def lipschitz(self) -> float | None:
        return self.checks["lipschitz"].value

    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks.values() if not c.ok]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "seed": self.seed,
            "n_samples": self.n_samples,
            "checks": {
                k: {"status": c.status, "value": c.value, "witness": _jsonable(c.witness),
                    "detail": c.detail}
                for k, c in self.checks.items()
            },
        }


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (tuple, list)):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _pt(x) -> tuple[float, ...]:
    return tuple(float(v) for v in np.asarray(x).ravel())


def _sample_params(dset: ImpulseSet, n: int, rng) -> np.ndarray:
    lo, hi = dset.param_interval
    return np.sort(np.concatenate([[lo, hi], rng.uniform(lo, hi, max(n - 2, 0))]))


def _tube_separation(sys: ImpulsiveSystem, bases: np.ndarray, length: float, m: int = 40):
    """Refined minimum distance between flow tubes of distinct base points."""
    ts = length * (np.arange(m) + 0.5) / m
    tubes = sys.flow.evolve_array(ts[None, :], bases[:, None, :])
    space = sys.space
    best = (math.inf, None)
    n = len(bases)
    for i in range(n):
        for j in range(i + 1, n):
            if space.distance(bases[i], bases[j]) <= MEMBERSHIP_TOL:
                continue
            d = space.distance(tubes[i][:, None, :], tubes[j][None, :, :])
            k1, k2 = np.unravel_index(np.argmin(d), d.shape)
            if d[k1, k2] < best[0] + length / m * 4:
                def obj(v, i=i, j=j):
                    p = sys.flow.evolve_array(v[0], bases[i])
                    q = sys.flow.evolve_array(v[1], bases[j])
                    return float(space.distance(p, q))
                res = minimize(obj, [ts[k1], ts[k2]], method="L-BFGS-B",
                               bounds=[(1e-12, length), (1e-12, length)])
                val = min(float(res.fun), float(d[k1, k2]))
                if val < best[0]:
                    best = (val, (_pt(bases[i]), _pt(bases[j])))
    return best


def check_conditions(sys: ImpulsiveSystem, n_samples: int = 24, seed: int = 0) -> ConditionReport:
    """Sampling-based falsification of the standing hypotheses.

    A passing check means no counterexample was found among the samples.
    Openness of the tubes cannot be decided from samples and is reported as
    ``assumed``.
    """
    if n_samples < 2:
        raise DomainError("n_samples must be at least 2")
    rng = np.random.default_rng(seed)
    checks: dict[str, CheckResult] = {}
    space = sys.space
    if sys.d_set is None:
        for name in ("gap", "half_tube_entry", "half_tube_disjoint", "transverse_disjoint",
                     "return_gap", "lipschitz", "tau_star_continuity", "image_in_x_xi"):
            checks[name] = CheckResult(name, "pass", detail="no impulse set")
        checks["gap"].value = math.inf
        checks["lipschitz"].value = 0.0
        return ConditionReport(checks, seed, n_samples)

    params = _sample_params(sys.d_set, n_samples, rng)
    d_pts = sys.d_set.parametrize(params)
    img = sys.i_map(d_pts)

    # (i) I(D) and D disjoint; measured gap equals the declared a
    dd = space.distance(d_pts[:, None, :], img[None, :, :])
    i, j = np.unravel_index(np.argmin(dd), dd.shape)
    gap = float(dd[i, j])
    in_d = [bool(sys.d_set.contains(p)) for p in img]
    ok = gap > MEMBERSHIP_TOL and not any(in_d) and abs(gap - sys.a) <= 1e-6
    checks["gap"] = CheckResult(
        "gap", "pass" if ok else "fail", gap, (_pt(d_pts[i]), _pt(img[j])),
        f"min dist(D, I(D)) = {gap:.12g}; declared a = {sys.a}")

    checks["tube_open"] = CheckResult("tube_open", "assumed",
                                      detail="openness of D_xi is not decidable from samples")

    # (ii) entering D_xi0 requires a prior D-crossing
    if sys.flow.reverse_fn is None:
        checks["half_tube_entry"] = CheckResult("half_tube_entry", "assumed",
                                                detail="flow is not invertible")
    else:
        bad = None
        tried = 0
        for k in range(n_samples):
            s = rng.uniform(0, sys.xi0)
            back = rng.uniform(0, 2 * sys.eta)
            z = sys.flow.evolve_array(s, d_pts[k % len(d_pts)])
            x = sys.flow.reverse_array(s + back, z)
            if not space.contains(x) or sys.in_d(x) or in_tube(sys, x, sys.xi0):
                continue
            tried += 1
            hit = _first_hit(sys, x, s + back)
            if hit is None or hit >= s + back:
                bad = (_pt(x), s + back)
                break
        checks["half_tube_entry"] = CheckResult(
            "half_tube_entry", "fail" if bad else "pass", float(tried), bad,
            "entries into D_xi0 preceded by a D-crossing" if not bad else "entry without crossing")

    # (iii) tubes over D (and over I(D)) are injectively fibered
    sep, wit = _tube_separation(sys, d_pts, sys.xi0)
    checks["half_tube_disjoint"] = CheckResult(
        "half_tube_disjoint", "pass" if sep > MEMBERSHIP_TOL else "fail", sep, wit,
        "min separation of tubes over distinct points of D")
    sep, wit = _tube_separation(sys, img, sys.xi0)
    checks["transverse_disjoint"] = CheckResult(
        "transverse_disjoint", "pass" if sep > MEMBERSHIP_TOL else "fail", sep, wit,
        "min separation of tubes over distinct points of I(D)")

    # (iv) orbits leave I(D) for at least s0
    if sys.image_set is None:
        checks["return_gap"] = CheckResult("return_gap", "assumed", detail="no I(D) crossing set")
    else:
        worst = (math.inf, None)
        for p in img:
            hit = _first_hit(sys, p, sys.s0, dset=sys.image_set)
            if hit is not None and hit < worst[0]:
                worst = (hit, _pt(p))
        ok = worst[0] >= sys.s0 - GAP_TOL
        checks["return_gap"] = CheckResult(
            "return_gap", "pass" if ok else "fail",
            None if math.isinf(worst[0]) else worst[0], worst[1],
            f"no return to I(D) before s0={sys.s0:.12g}" if ok else "early return to I(D)")

    # (v) 1-Lipschitz reset map
    num = space.distance(img[:, None, :], img[None, :, :])
    den = space.distance(d_pts[:, None, :], d_pts[None, :, :])
    mask = den > MEMBERSHIP_TOL
    ratios = np.where(mask, num / np.where(mask, den, 1.0), 0.0)
    i, j = np.unravel_index(np.argmax(ratios), ratios.shape)
    lip = float(ratios[i, j])
    checks["lipschitz"] = CheckResult(
        "lipschitz", "pass" if lip <= 1 + 1e-9 else "fail", lip,
        (_pt(d_pts[i]), _pt(d_pts[j])), "max dist(Ip, Iq) / dist(p, q)")

    # (vi) continuity probe of tau* on X_xi u D
    radii = (1e-2, 1e-3, 1e-4)
    base = space.sample(n_samples, seed + 1)
    base = np.concatenate([base, d_pts[: max(2, n_samples // 4)]])
    osc = []
    witness = None
    for r in radii:
        worst = 0.0
        for x in base:
            if not (sys.in_d(x) or in_x_xi(sys, x)):
                continue
            v = rng.normal(size=space.dimension)
            y = x + r * v / np.linalg.norm(v)
            if not space.contains(y) or not (sys.in_d(y) or in_x_xi(sys, y)):
                continue
            diff = abs(tau_star(sys, x) - tau_star(sys, y))
            if diff > worst:
                worst, witness = diff, (_pt(x), _pt(y))
        osc.append(worst)
    monotone = all(b <= a_ + 1e-12 for a_, b in zip(osc, osc[1:]))
    ok = monotone and osc[-1] < 1e-2
    checks["tau_star_continuity"] = CheckResult(
        "tau_star_continuity", "pass" if ok else "fail", osc[-1], witness,
        "oscillation at radii " + ", ".join(f"{r:g}: {o:.3g}" for r, o in zip(radii, osc)))

    # I(D) must land in X_xi so orbits continue from outside the tube
    bad = None
    for p in img:
        if not in_x_xi(sys, p):
            bad = _pt(p)
            break
    checks["image_in_x_xi"] = CheckResult(
        "image_in_x_xi", "fail" if bad else "pass", None, bad,
        "I(D) avoids D and D_xi" if not bad else "I(D) meets D or D_xi")
    return ConditionReport(checks, seed, n_samples)


def advance(system: ImpulsiveSystem | SemiflowSpec, t: float, coords) -> np.ndarray:
    """State at time ``t`` for either a plain semiflow or an impulsive system."""
    if t < 0:
        raise DomainError(f"negative time {t}")
    if isinstance(system, SemiflowSpec):
        return system.evolve_array(t, np.asarray(coords, dtype=float))
    if t == 0:
        return np.asarray(coords, dtype=float).copy()
    return impulsive_orbit(system, coords, t).evaluate(t)
