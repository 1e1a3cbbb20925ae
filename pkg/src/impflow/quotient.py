"""Quotient of an impulsive system that glues each point of D to its image.

Two points are related when they coincide, one is the image of the other, or
both lie in D with the same image.  On the quotient the impulsive semiflow
becomes continuous; this module computes equivalence classes, the
representative-pair distance, a chain-sum oracle for it, the induced
semiflow and a numerical check of the semiconjugacy.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .impulsive import ImpulsiveSystem, impulsive_orbit, in_x_xi, psi
from .spaces import Point, _coords

EQUIV_TOL = 1e-9
PREIMAGE_GRID = 10_000
MAX_CLASS_SIZE = 16
LIPSCHITZ_SLACK = 1e-12


@dataclass(frozen=True)
class EquivClass:
    """Finite list of representatives of one class.

    ``closure_grew`` is set when the transitive closure added members beyond
    ``{x, I(x)}`` and the preimages of the common image.
    """

    representatives: tuple[Point, ...]
    closure_grew: bool = False

    def __len__(self) -> int:
        return len(self.representatives)

    def array(self) -> np.ndarray:
        return np.array([p.coords for p in self.representatives], dtype=float)


@dataclass(frozen=True)
class QuotientPoint:
    cls: EquivClass
    canonical: Point

    @property
    def representatives(self) -> tuple[Point, ...]:
        return self.cls.representatives


def _close(space, a, b, tol=EQUIV_TOL) -> bool:
    return bool(space.distance(a, b) <= tol)


def are_equivalent(sys: ImpulsiveSystem, x, y, tol: float = EQUIV_TOL) -> bool:
    space = sys.space
    a, b = _coords(space, x), _coords(space, y)
    if _close(space, a, b, tol):
        return True
    a_in, b_in = sys.in_d(a), sys.in_d(b)
    Ia = sys.i_map(a) if a_in else None
    Ib = sys.i_map(b) if b_in else None
    if a_in and _close(space, Ia, b, tol):
        return True
    if b_in and _close(space, a, Ib, tol):
        return True
    return a_in and b_in and _close(space, Ia, Ib, tol)


def _relation_matrix(sys: ImpulsiveSystem, P: np.ndarray, Q: np.ndarray,
                     tol: float = EQUIV_TOL) -> np.ndarray:
    """Vectorized relation between the rows of ``P`` and of ``Q``."""
    dist = sys.space.distance
    rel = dist(P[:, None], Q[None, :]) <= tol
    if sys.d_set is None:
        return rel
    p_in = np.asarray(sys.d_set.contains(P), dtype=bool)
    q_in = np.asarray(sys.d_set.contains(Q), dtype=bool)
    IP = np.where(p_in[:, None], sys.i_map(P), np.nan)
    IQ = np.where(q_in[:, None], sys.i_map(Q), np.nan)
    with np.errstate(invalid="ignore"):
        rel |= p_in[:, None] & (dist(IP[:, None], Q[None, :]) <= tol)
        rel |= q_in[None, :] & (dist(P[:, None], IQ[None, :]) <= tol)
        rel |= p_in[:, None] & q_in[None, :] & (dist(IP[:, None], IQ[None, :]) <= tol)
    return rel


def _golden_min(f, lo: float, hi: float, xtol: float = 1e-15) -> float:
    """Minimizer of a unimodal function on [lo, hi] by golden-section search."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol * max(1.0, abs(a)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
        if c >= d:
            break
    return c if fc <= fd else d


def preimages(sys: ImpulsiveSystem, target, n_grid: int = PREIMAGE_GRID,
              tol: float = EQUIV_TOL) -> list[np.ndarray]:
    """Points d of D with I(d) = target: grid scan over D, then local refinement."""
    if sys.d_set is None:
        return []
    c = np.asarray(target, dtype=float)
    dset, space = sys.d_set, sys.space
    grid = dset.param_grid(n_grid)

    def gap(s):
        return space.distance(sys.i_map(dset.parametrize(s)), c)

    f = gap(grid)
    h = grid[1] - grid[0]
    left = np.concatenate([[np.inf], f[:-1]])
    right = np.concatenate([f[1:], [np.inf]])
    # only local minima that could plausibly reach zero are refined
    cand = np.flatnonzero((f <= left) & (f <= right)
                          & (f <= 2 * h * max(sys.i_map.lipschitz_bound, 1.0) + tol))
    found: list[np.ndarray] = []
    lo_all, hi_all = dset.param_interval
    for k in cand:
        lo, hi = max(lo_all, grid[k] - h), min(hi_all, grid[k] + h)
        s = grid[k] if f[k] <= tol / 10 else _golden_min(gap, lo, hi)
        if gap(s) > tol:
            continue
        d = dset.parametrize(s)
        if not any(_close(space, d, e, tol) for e in found):
            found.append(d)
            if len(found) > MAX_CLASS_SIZE:
                raise DomainError(f"more than {MAX_CLASS_SIZE} preimages of {tuple(c)}")
    return found


def class_of(sys: ImpulsiveSystem, x, tol: float = EQUIV_TOL) -> EquivClass:
    """Representatives of the class of ``x``, closed under the relation."""
    space = sys.space
    x = _coords(space, x)
    members = [x]
    queue = [x]
    first_step = 1
    step = 0
    while queue:
        m = queue.pop(0)
        new = []
        if sys.in_d(m):
            img = sys.i_map(m)
            new.append(img)
            new.extend(preimages(sys, img, tol=tol))
        new.extend(preimages(sys, m, tol=tol))
        for c in new:
            if not any(_close(space, c, e, tol) for e in members):
                members.append(c)
                queue.append(c)
        if step == 0:
            first_step = len(members)
        step += 1
        if len(members) > MAX_CLASS_SIZE:
            raise DomainError(f"class of {tuple(x)} exceeds {MAX_CLASS_SIZE} members")
    pts = tuple(Point(tuple(map(float, c)), space.space_id) for c in members)
    return EquivClass(pts, closure_grew=len(members) > first_step)


def project(sys: ImpulsiveSystem, x) -> QuotientPoint:
    cls = class_of(sys, x)
    return QuotientPoint(cls, min(cls.representatives, key=lambda p: p.coords))


def _require_contraction(sys: ImpulsiveSystem) -> None:
    if sys.i_map is not None and sys.i_map.lipschitz_bound > 1 + LIPSCHITZ_SLACK:
        raise DomainError(
            f"impulse map has Lipschitz bound {sys.i_map.lipschitz_bound} > 1; the "
            "representative-pair formula is invalid, use quotient_dist_chain")


def quotient_dist(sys: ImpulsiveSystem, a: QuotientPoint, b: QuotientPoint) -> float:
    """Minimum distance over pairs of representatives (1-Lipschitz impulse maps only)."""
    _require_contraction(sys)
    A, B = a.cls.array(), b.cls.array()
    return float(np.min(sys.space.distance(A[:, None], B[None, :])))


def chain_nodes(sys: ImpulsiveSystem, pool) -> np.ndarray:
    """Pool points together with every member of their classes."""
    rows = []
    for c in np.asarray(pool, dtype=float).reshape(-1, sys.space.dimension):
        rows.extend(p.coords for p in class_of(sys, c).representatives)
    if not rows:
        return np.empty((0, sys.space.dimension))
    return np.unique(np.array(rows, dtype=float), axis=0)


def quotient_dist_chain(sys: ImpulsiveSystem, a: QuotientPoint, b: QuotientPoint,
                        max_chain: int, candidate_pool=None,
                        nodes: np.ndarray | None = None) -> float:
    """Least chain sum d(p1,q1) + ... + d(pn,qn) with n <= ``max_chain``.

    Chains start at a point related to ``a``, may jump between related points
    and end at a point related to ``b``.  Points are drawn from the candidate
    pool, the classes of its points and the representatives of ``a`` and
    ``b``.  Pass ``nodes`` (from :func:`chain_nodes`) to reuse a pool.
    """
    if max_chain < 1:
        raise DomainError("max_chain must be at least 1")
    if nodes is None:
        nodes = chain_nodes(sys, [] if candidate_pool is None else candidate_pool)
    A, B = a.cls.array(), b.cls.array()
    V = np.concatenate([A, B, nodes]) if len(nodes) else np.concatenate([A, B])
    dist = sys.space.distance
    D = dist(V[:, None], V[None, :])
    R = _relation_matrix(sys, V, V)
    start = _relation_matrix(sys, A, V).any(axis=0)
    end = _relation_matrix(sys, B, V).any(axis=0)
    s = np.where(start, 0.0, np.inf)
    best = math.inf
    for _ in range(max_chain):
        c = np.min(s[:, None] + D, axis=0)
        best = min(best, float(np.min(c[end])))
        s = np.min(np.where(R, c[:, None], np.inf), axis=0)
    return best


def induced_psi(sys: ImpulsiveSystem, t: float, a: QuotientPoint) -> QuotientPoint:
    """Image of a class under the semiflow, through its representative in X_xi."""
    if t < 0:
        raise DomainError(f"negative time {t}")
    reps = [p for p in a.representatives if in_x_xi(sys, p)]
    if not reps:
        raise DomainError(f"class of {a.canonical.coords} has no representative in X_xi")
    images = [project(sys, psi(sys, t, p)) for p in reps]
    for other in images[1:]:
        if quotient_dist(sys, images[0], other) > EQUIV_TOL:
            raise DomainError("induced semiflow depends on the representative")
    return images[0]


@dataclass
class SemiconjugacyReport:
    passed: bool
    max_deviation: float
    tol: float
    jump_max: float
    n_samples: int
    n_times: int
    n_jumps: int
    witness: tuple | None = None
    jump_witness: tuple | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def semiconjugacy_check(sys: ImpulsiveSystem, samples, times, tol: float = 1e-6,
                        quotient_sys: ImpulsiveSystem | None = None,
                        jump_tol: float = EQUIV_TOL) -> SemiconjugacyReport:
    """Compare the induced semiflow with projection of the impulsive semiflow.

    The dynamics come from ``sys``; the gluing from ``quotient_sys`` (default
    ``sys``), so a perturbed impulse map can be injected.  Besides the
    pointwise deviation, each impulse on the sampled orbits is probed: the
    pre-jump limit and the post-jump value must project to the same class.
    """
    q = quotient_sys or sys
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    times = [float(t) for t in times]
    for x in X:
        if not in_x_xi(sys, x):
            raise DomainError(f"sample {tuple(x)} is not in X_xi")
    worst, witness = 0.0, None
    jump_worst, jump_witness, n_jumps = 0.0, None, 0
    horizon = max(times) if times else 0.0
    for x in X:
        px = project(q, x)
        for t in times:
            dev = quotient_dist(q, induced_psi(q, t, px), project(q, psi(sys, t, x)))
            if dev > worst or witness is None:
                worst, witness = max(worst, dev), (tuple(map(float, x)), t)
        if horizon > 0:
            orbit = impulsive_orbit(sys, x, horizon)
            for tk in orbit.impulse_times:
                n_jumps += 1
                gap = quotient_dist(q, project(q, orbit.left_limit(tk)),
                                    project(q, orbit.evaluate(tk)))
                if gap > jump_worst or jump_witness is None:
                    jump_worst, jump_witness = max(jump_worst, gap), (tuple(map(float, x)), tk)
    passed = worst <= tol and jump_worst <= jump_tol
    return SemiconjugacyReport(passed, worst, tol, jump_worst, len(X), len(times), n_jumps,
                               witness, jump_witness)


@dataclass
class ContinuityProbe:
    radii: tuple[float, ...]
    oscillations: tuple[float, ...]
    threshold: float
    metric: str

    @property
    def monotone(self) -> bool:
        o = self.oscillations
        return all(b <= a for a, b in zip(o, o[1:]))

    @property
    def passed(self) -> bool:
        return self.monotone and self.oscillations[-1] < self.threshold


def continuity_probe(sys: ImpulsiveSystem, x, t: float,
                     radii=(1e-2, 1e-3, 1e-4, 1e-5), n: int = 8, seed: int = 0,
                     threshold: float = 1e-4, metric: str = "pair",
                     max_chain: int = 3, pool=None) -> ContinuityProbe:
    """Oscillation of the induced semiflow over shrinking neighborhoods of (t, x).

    A falsification probe: neighbors are drawn in X_xi within ``r`` of ``x``
    with times within ``r`` of ``t``.  ``metric`` is ``pair`` (representative
    pairs) or ``chain`` (chain oracle through ``pool``).
    """
    if metric not in ("pair", "chain"):
        raise DomainError(f"unknown metric {metric!r}")
    rng = np.random.default_rng(seed)
    c = _coords(sys.space, x)
    base = induced_psi(sys, t, project(sys, c))
    nodes = chain_nodes(sys, pool) if metric == "chain" and pool is not None else None

    def qd(u, v):
        if metric == "pair":
            return quotient_dist(sys, u, v)
        return quotient_dist_chain(sys, u, v, max_chain, nodes=nodes)

    osc = []
    for r in radii:
        worst, got, tries = 0.0, 0, 0
        while got < n and tries < 50 * n:
            tries += 1
            u = rng.normal(size=c.shape)
            y = c + r * rng.uniform() * u / np.linalg.norm(u)
            if not in_x_xi(sys, y):
                continue
            s = max(0.0, t + r * rng.uniform(-1, 1))
            worst = max(worst, qd(induced_psi(sys, s, project(sys, y)), base))
            got += 1
        osc.append(worst)
    return ContinuityProbe(tuple(radii), tuple(osc), threshold, metric)


DIST_HEADER = ("pair_id", "x", "y", "d", "d_quotient", "d_chain")


def distance_table(sys: ImpulsiveSystem, pairs, max_chain: int = 3, pool=None) -> list[dict]:
    """Rows with the original, representative-pair and chain distances of each pair."""
    nodes = chain_nodes(sys, [] if pool is None else pool)
    rows = []
    for k, (x, y) in enumerate(pairs):
        x, y = _coords(sys.space, x), _coords(sys.space, y)
        px, py = project(sys, x), project(sys, y)
        rows.append({
            "pair_id": k,
            "x": tuple(map(float, x)),
            "y": tuple(map(float, y)),
            "d": float(sys.space.distance(x, y)),
            "d_quotient": quotient_dist(sys, px, py),
            "d_chain": quotient_dist_chain(sys, px, py, max_chain, nodes=nodes),
        })
    return rows


def _g(v: float) -> str:
    return format(v, ".12g")


def distance_table_csv(rows: list[dict], preamble: list[str] | None = None) -> str:
    buf = io.StringIO()
    for line in preamble or []:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIST_HEADER)
    for r in rows:
        w.writerow([r["pair_id"], " ".join(map(_g, r["x"])), " ".join(map(_g, r["y"])),
                    _g(r["d"]), _g(r["d_quotient"]), _g(r["d_chain"])])
    return buf.getvalue()
