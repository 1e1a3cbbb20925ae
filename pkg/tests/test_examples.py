import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from impflow.errors import DomainError
from impflow.examples import (
    PROVENANCES,
    distance_to_lower_semicircle,
    get_example,
    list_examples,
)
from impflow.impulsive import check_conditions, impulsive_orbit, tau_star
from impflow.timefns import check_admissible

from conftest import polar

PI = math.pi


def test_registry():
    assert list_examples() == ["annulus", "doubling_suspension", "rotation"]
    with pytest.raises(DomainError):
        get_example("torus")


@pytest.mark.parametrize("name", ["annulus", "doubling_suspension", "rotation"])
def test_facts_carry_provenance_and_tolerance(name):
    ex = get_example(name)
    assert ex.analytic_facts
    for fact in ex.analytic_facts.values():
        assert fact.provenance in PROVENANCES and fact.tolerance >= 0
    d = ex.describe()
    assert d["name"] == name and d["time_functions"] == list(ex.time_functions)


def test_annulus_constants_reproduced(annulus):
    rep = check_conditions(annulus.system, 24, 0)
    facts = annulus.analytic_facts
    assert rep.passed
    assert abs(rep.a - facts["a"].value) <= facts["a"].tolerance
    assert abs(rep.lipschitz - facts["lipschitz"].value) <= facts["lipschitz"].tolerance


def test_annulus_examples(annulus):
    assert tau_star(annulus.system, polar(1.7, 3 * PI / 2)) == pytest.approx(PI / 2, abs=1e-9)
    orbit = impulsive_orbit(annulus.system, (0.0, 2.0), 6.0)
    assert orbit.impulse_times[0] == pytest.approx(3 * PI / 2, abs=1e-9)
    assert np.allclose(orbit.evaluate(3 * PI / 2), (-1.5, 0.0), atol=1e-9)


@pytest.mark.parametrize("name, fn", [("annulus", "impulse"), ("rotation", "section"),
                                      ("doubling_suspension", "roof")])
def test_gap_fact_matches_time_function(name, fn):
    ex = get_example(name)
    eta = ex.analytic_facts["eta"]
    rep = check_admissible(ex.system, ex.time_functions[fn], [], ex.space.sample(30, 2),
                           eta.value - eta.tolerance, 20.0)
    assert rep.passed, rep.failures
    assert rep.min_gap >= eta.value - eta.tolerance


@given(st.floats(1, 2), st.floats(0.01, 2 * PI - 0.01))
def test_closed_form_section_times_match_scan(r, th):
    rot = get_example("rotation")
    x = polar(r, th)
    exact = rot.time_functions["section"](x, 20.0).array
    scan = rot.time_functions["section_scan"](x, 20.0).array
    assert np.allclose(exact, scan, atol=1e-9)


@given(st.floats(0, 1, exclude_max=True), st.floats(0.001, 0.999))
def test_roof_times_match_scan(th, h):
    sus = get_example("doubling_suspension")
    x = np.array([th, h])
    assert np.allclose(sus.time_functions["roof"](x, 7.5).array,
                       sus.time_functions["roof_scan"](x, 7.5).array, atol=1e-9)


@given(st.floats(1, 2), st.floats(0, 2 * PI))
def test_rotation_full_turn(r, th):
    flow = get_example("rotation").flow
    x = polar(r, th)
    assert np.allclose(flow.evolve_array(2 * PI, x), x, atol=1e-12)


@given(st.floats(0, 1, exclude_max=True))
def test_suspension_return_map(th):
    flow = get_example("doubling_suspension").flow
    y = flow.evolve_array(1.0, np.array([th, 0.0]))
    assert y[0] == (2 * th) % 1.0 and y[1] == 0.0


def test_suspension_separation_by_t6():
    ex = get_example("doubling_suspension")
    x, y = np.array([0.3, 0.0]), np.array([0.3 + 2.0**-8, 0.0])
    t = np.linspace(0, 6, 601)
    d = ex.space.distance(ex.flow.evolve_array(t, x[None]), ex.flow.evolve_array(t, y[None]))
    assert d[-1] >= 0.25 and d.max() >= 0.25
    # 2^6 2^-8 = 1/4 of a turn: fiber distance 0.25 |e(0) - e(1/4)| = 0.25 sqrt 2
    assert d[-1] == pytest.approx(0.25 * math.sqrt(2), abs=1e-9)


@given(st.floats(1.0, 2.0), st.floats(0.01, 2 * PI - 0.01))
def test_radius_excess_halves_per_jump(r, th):
    ex = get_example("annulus")
    orbit = impulsive_orbit(ex.system, polar(r, th), 40.0)
    excess = r - 1
    for tk in orbit.impulse_times:
        excess /= 2
        after = orbit.evaluate(min(tk + 1.0, 40.0))
        assert float(np.hypot(*after)) - 1 == pytest.approx(excess, abs=1e-12)
        assert float(distance_to_lower_semicircle(after)) == pytest.approx(excess, abs=1e-12)
