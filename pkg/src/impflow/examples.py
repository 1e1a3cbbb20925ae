"""Built-in systems with analytically known behavior.

``annulus``
    Rotation of the closed annulus 1 <= r <= 2 with impulses on the
    positive horizontal segment D, sent to I(r, 0) = (-(1 + r) / 2, 0).
``rotation``
    The same rotation without impulses, with the segment D kept only as a
    marked cross-section whose hit times form an admissible time function.
``doubling_suspension``
    Unit-roof suspension of theta -> 2 theta mod 1, whose entropy is log 2;
    the roof section h = 0 supplies the admissible time function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .impulsive import ImpulseMap, ImpulseSet, ImpulsiveSystem
from .spaces import (
    MetricSpaceSpec,
    SemiflowSpec,
    annulus_space,
    doubling_suspension_flow,
    rotation_flow,
    suspension_roof_times,
)
from .timefns import (
    TimeFunction,
    TimeSequence,
    impulse_sequence,
    impulse_sequences,
    merged_sequence,
    merged_sequences,
    section_times,
    visit_sequences,
    visit_times_ID,
)

TWO_PI = 2 * math.pi


PROVENANCES = ("REFERENCE", "DERIVED", "TRIVIAL")


@dataclass(frozen=True)
class AnalyticFact:
    value: float | str
    provenance: str
    tolerance: float
    description: str = ""

    def __post_init__(self):
        if self.provenance not in PROVENANCES or not self.tolerance >= 0:
            raise ValueError(f"fact needs a provenance in {PROVENANCES} and a tolerance >= 0")


@dataclass(frozen=True, eq=False)
class ExampleSpec:
    """A system together with reference values it must reproduce.

    Args:
        name: registry key.
        system: an impulsive system or a plain semiflow.
        analytic_facts: named reference values with provenance and tolerance.
        time_functions: named admissible time functions; the first entry is
            the default for tau-mode entropy.
        grid: deterministic sample of ``n`` points for entropy estimates.
    """

    name: str
    system: ImpulsiveSystem | SemiflowSpec
    analytic_facts: dict[str, AnalyticFact]
    time_functions: dict[str, TimeFunction]
    grid: Callable[[int], np.ndarray]
    description: str = ""
    section: ImpulseSet | None = None
    defaults: dict = field(default_factory=dict)

    @property
    def flow(self) -> SemiflowSpec:
        return self.system if isinstance(self.system, SemiflowSpec) else self.system.flow

    @property
    def space(self) -> MetricSpaceSpec:
        return self.flow.space

    @property
    def default_time_function(self) -> str:
        return next(iter(self.time_functions))

    def describe(self) -> dict:
        return {
            "name": self.name,
            "description": self.description,
            "space": self.space.description,
            "flow": self.flow.description,
            "time_functions": list(self.time_functions),
            "analytic_facts": {
                k: {"value": f.value, "provenance": f.provenance, "tolerance": f.tolerance,
                    "description": f.description}
                for k, f in self.analytic_facts.items()
            },
        }


# -- annulus -------------------------------------------------------------------


def _segment_set(x_lo: float, x_hi: float, name: str) -> ImpulseSet:
    """Horizontal segment {(x, 0): x_lo <= x <= x_hi}, crossed by the sign of y."""

    def member(c, tol):
        return (np.abs(c[..., 1]) <= tol) & (c[..., 0] >= x_lo - tol) & (c[..., 0] <= x_hi + tol)

    def param(s):
        s = np.asarray(s, dtype=float)
        return np.stack([s, np.zeros_like(s)], axis=-1)

    return ImpulseSet(member, lambda c: c[..., 1], param, (x_lo, x_hi), 1, name)


def annulus_reset(c: np.ndarray) -> np.ndarray:
    r = np.clip(np.hypot(c[..., 0], c[..., 1]), 1.0, 2.0)
    return np.stack([-0.5 - 0.5 * r, np.zeros_like(r)], axis=-1)


def polar_angle(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.mod(np.arctan2(c[..., 1], c[..., 0]), TWO_PI)


def annulus_tau_star(c) -> np.ndarray:
    """Closed form of tau* on X_xi union D: 2 pi - theta off D, 0 on D."""
    th = polar_angle(c)
    return np.where(th == 0, 0.0, TWO_PI - th)


def distance_to_lower_semicircle(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    th = polar_angle(c)
    r = np.hypot(c[..., 0], c[..., 1])
    on_arc = (th >= math.pi) | (th == 0)
    ends = np.minimum(np.hypot(c[..., 0] - 1, c[..., 1]), np.hypot(c[..., 0] + 1, c[..., 1]))
    return np.where(on_arc, np.abs(r - 1), ends)


def polar_grid(n: int, r_in: float = 1.0, r_out: float = 2.0) -> np.ndarray:
    """About ``n`` points on a polar grid with spacing balanced in arc length."""
    n_r = max(1, int(round(math.sqrt(n * (r_out - r_in) / (math.pi * (r_in + r_out))))))
    n_th = max(1, int(math.ceil(n / n_r)))
    r = r_in + (r_out - r_in) * (np.arange(n_r) + 0.5) / n_r
    th = TWO_PI * (np.arange(n_th) + 0.5) / n_th
    rr, tt = np.meshgrid(r, th, indexing="ij")
    return np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1).reshape(-1, 2)


def annulus_system(i_map: ImpulseMap | None = None, a: float = 2.0,
                   name: str = "annulus") -> ImpulsiveSystem:
    space = annulus_space()
    return ImpulsiveSystem(
        space=space,
        flow=rotation_flow(space),
        d_set=_segment_set(1.0, 2.0, "D"),
        i_map=i_map or ImpulseMap(annulus_reset, 0.5),
        xi0=0.5,
        eta=math.pi,
        a=a,
        s0=math.pi,
        xi=0.2,
        image_set=_segment_set(-1.5, -1.0, "I(D)"),
        name=name,
    )


def build_annulus() -> ExampleSpec:
    sys = annulus_system()
    facts = {
        "lipschitz": AnalyticFact(0.5, "REFERENCE", 1e-9, "Lipschitz constant of I"),
        "a": AnalyticFact(2.0, "DERIVED", 1e-6, "dist(D, I(D)) = dist((1,0), (-1,0))"),
        "eta": AnalyticFact(math.pi, "DERIVED", 1e-9, "return time from angle pi to D"),
        "s0": AnalyticFact(math.pi, "DERIVED", 1e-9, "return time to I(D)"),
        "xi0": AnalyticFact(0.5, "REFERENCE", 0.0, "half-tube length"),
        "xi": AnalyticFact(0.2, "DERIVED", 0.0, "tube width, below min(eta/4, xi0/2, a/2)"),
        "tau_star": AnalyticFact("2*pi - theta off D, 0 on D", "REFERENCE", 1e-9,
                                 "first hit time on X_xi union D"),
        "omega": AnalyticFact("{(cos t, sin t): pi <= t <= 2 pi}", "REFERENCE", 1e-6,
                              "non-wandering set"),
        "h_top_tau": AnalyticFact(0.0, "REFERENCE", 0.05, "tau-entropy of the impulsive semiflow"),
    }
    return ExampleSpec(
        name="annulus",
        system=sys,
        analytic_facts=facts,
        time_functions={
            "impulse": TimeFunction("impulse", lambda x, T: impulse_sequence(sys, x, T),
                                    lambda X, T: impulse_sequences(sys, X, T)),
            "visit": TimeFunction("visit", lambda x, T: visit_times_ID(sys, x, T),
                                  lambda X, T: visit_sequences(sys, X, T)),
            "merged": TimeFunction("merged", lambda x, T: merged_sequence(sys, x, T),
                                   lambda X, T: merged_sequences(sys, X, T)),
        },
        grid=polar_grid,
        description="rotation of 1 <= r <= 2 with impulses on {(r,0)} sent to (-(1+r)/2, 0)",
        section=sys.d_set,
        defaults={"epsilon": 0.05, "delta": 0.2, "T_grid": [5.0, 10.0, 15.0, 20.0],
                  "samples": 8000},
    )


# -- rotation with a marked section -------------------------------------------


def rotation_section_times(c, T: float) -> np.ndarray:
    """Hit times of the ray theta = 0 by the rotation: 2 pi n - theta."""
    th = float(polar_angle(c))
    first = TWO_PI - th
    if first > T:
        return np.empty(0)
    return first + TWO_PI * np.arange(int(math.floor((T - first) / TWO_PI + 1e-12)) + 1)


def build_rotation() -> ExampleSpec:
    flow = rotation_flow()
    section = _segment_set(1.0, 2.0, "section")
    facts = {
        "h_top": AnalyticFact(0.0, "TRIVIAL", 0.02, "isometry keeps dist_T = dist"),
        "eta": AnalyticFact(TWO_PI, "TRIVIAL", 1e-9, "gap between section hits"),
    }
    return ExampleSpec(
        name="rotation",
        system=flow,
        analytic_facts=facts,
        time_functions={
            "section": TimeFunction("section", lambda x, T: TimeSequence(
                tuple(rotation_section_times(x, T)), TWO_PI, "section")),
            "section_scan": TimeFunction("section_scan",
                                         lambda x, T: section_times(flow, section, x, T, TWO_PI)),
        },
        grid=polar_grid,
        description="rigid rotation of the annulus, section hits on the ray theta = 0",
        section=section,
        defaults={"epsilon": 0.1, "delta": 0.3, "T_grid": [float(t) for t in range(2, 11)],
                  "samples": 3000},
    )


# -- doubling suspension --------------------------------------------------------


def _roof_section() -> ImpulseSet:
    def member(c, tol):
        h = np.mod(c[..., 1], 1.0)
        return np.minimum(h, 1.0 - h) <= tol

    def param(s):
        s = np.asarray(s, dtype=float)
        return np.stack([s, np.zeros_like(s)], axis=-1)

    return ImpulseSet(member, lambda c: np.sin(TWO_PI * c[..., 1]), param, (0.0, 1.0), 1, "roof")


def base_grid(n: int) -> np.ndarray:
    """``n`` equally spaced base angles at height 0."""
    th = np.arange(n, dtype=float) / n
    return np.stack([th, np.zeros(n)], axis=-1)


def build_doubling_suspension() -> ExampleSpec:
    flow = doubling_suspension_flow()
    section = _roof_section()
    facts = {
        "h_top": AnalyticFact(math.log(2), "DERIVED", 0.14,
                              "2^floor(T) distinguishable T-blocks for epsilon < 1/4"),
        "eta": AnalyticFact(1.0, "TRIVIAL", 1e-9, "unit roof"),
    }
    return ExampleSpec(
        name="doubling_suspension",
        system=flow,
        analytic_facts=facts,
        time_functions={
            "roof": TimeFunction("roof", lambda x, T: TimeSequence(
                tuple(suspension_roof_times(x, T)), 1.0, "section")),
            "roof_scan": TimeFunction("roof_scan",
                                      lambda x, T: section_times(flow, section, x, T, 1.0)),
        },
        grid=base_grid,
        description="suspension of theta -> 2 theta mod 1 under the constant roof 1",
        section=section,
        defaults={"epsilon": 0.05, "delta": 0.1, "T_grid": [float(t) for t in range(3, 9)],
                  "samples": 2**15},
    )


REGISTRY: dict[str, Callable[[], ExampleSpec]] = {
    "annulus": build_annulus,
    "rotation": build_rotation,
    "doubling_suspension": build_doubling_suspension,
}


def get_example(name: str) -> ExampleSpec:
    from .errors import DomainError

    if name not in REGISTRY:
        raise DomainError(f"unknown example {name!r}; choose from {sorted(REGISTRY)}")
    return REGISTRY[name]()


def list_examples() -> list[str]:
    return sorted(REGISTRY)
