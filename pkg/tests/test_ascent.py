import csv
import math

import numpy as np
import pytest

from conftest import random_member
from hypsurf import ascent as asc
from hypsurf import catalog
from hypsurf import developer as dv
from hypsurf import hypgeom as hg
from hypsurf.errors import FlowError
from hypsurf.surface import angle_sum, residual

S_STAR = catalog.S_STAR


# --- constraint coefficients ---------------------------------------------------

def test_coefficient_between_horocyclic_faces(torus):
    coef = asc.constraint_coefficients(torus, ("a", "b"))
    for e in "ab":
        assert coef[e] == pytest.approx(2 / math.cosh(torus.lengths[e] / 2), abs=1e-15)


def test_coefficient_genus2(g2):
    coef = asc.constraint_coefficients(g2, g2.edges)
    J = hg.circumradius((S_STAR,) * 3)
    want = 2 * math.sqrt(1 / math.cosh(S_STAR / 2) ** 2 - 1 / math.cosh(J) ** 2)
    for e in g2.edges:
        assert coef[e] == pytest.approx(want, abs=1e-13)
    h = 1e-6
    fd = -(angle_sum(g2.with_lengths({"a": S_STAR + h})) - angle_sum(g2.with_lengths({"a": S_STAR - h}))) / (2 * h)
    assert fd == pytest.approx(want, abs=1e-7)


def test_diameter_diagonal_contributes_zero(squares):
    coef = asc.constraint_coefficients(squares, check=False)
    for q in range(3):
        assert coef[f"d{q}"] == 0.0


def test_coefficient_positivity_randomized():
    rng = np.random.default_rng(21)
    bases = [catalog.genus2_equilateral(), catalog.punctured_torus_square(), catalog.genus2_octagon()]
    for i in range(100):
        S = random_member(bases[i % 3], rng, scale=0.2)
        tess = dv.delaunay(S)
        coef = asc.constraint_coefficients(tess.surface, tess.delaunay_edges())
        assert all(coef[e] > 0 for e in tess.delaunay_edges())


def test_positivity_violation_raises(squares):
    with pytest.raises(FlowError):
        asc.constraint_coefficients(squares, ("d0",))


# --- flow A -----------------------------------------------------------------

def test_flow_A_signs(g2):
    S = catalog.lengthened(g2, "a", 0.3)
    tess = dv.delaunay(S)
    plan = asc.flow_A_direction(tess.surface, tess)
    assert plan.mode == "A"
    assert plan.dependent == ("a",)
    assert plan.dependent_rate < 0
    assert set(plan.rates) == set(S.edges) - {"a"}
    assert all(r == 1.0 for r in plan.rates.values())
    assert abs(plan.constraint_residual()) <= 1e-12


def test_flow_A_single_shortest_edge(g2):
    S = catalog.lengthened(g2, "p5", -0.05)
    tess = dv.delaunay(S)
    plan = asc.flow_A_direction(tess.surface, tess)
    assert list(plan.rates) == ["p5"]
    c = plan.coefficients
    assert plan.dependent_rate == pytest.approx(-c["p5"] / c[plan.dependent[0]], rel=1e-14)


def test_flow_A_needs_longer_edge(g2):
    with pytest.raises(FlowError):
        asc.flow_A_direction(g2, dv.delaunay(g2))


def test_flow_A_rate_one_half(g2_perturbed):
    S = g2_perturbed
    tess = dv.delaunay(S)
    plan = asc.flow_A_direction(tess.surface, tess)
    r0 = dv.injectivity_radius(tess.surface).radius
    state = asc.FlowState(tess.surface, 0.0, "A", plan, r0)
    for h in (1e-3, 5e-4, 1e-4):
        new, taken, _, event = asc.step(state, h)
        assert event == ""
        assert (new.injrad - r0) / taken == pytest.approx(0.5, abs=0.025)


def test_zero_rates_leave_state(g2):
    tess = dv.delaunay(g2)
    coef = asc.constraint_coefficients(g2)
    plan = asc.FlowPlan("A", g2, {"a": 0.0}, ("b",), 0.0, "b", tess.delaunay_edges(), coef)
    state = asc.FlowState(g2, 0.0, "A", plan, S_STAR / 2)
    new, taken, _, event = asc.step(state, 1e-3)
    assert new is state and taken == 0.0


# --- flow B -----------------------------------------------------------------

def test_flow_B_setup_torus(torus):
    setup = asc.flow_B_setup(torus)
    a = torus.lengths["a"]
    g0 = setup.surface.lengths[setup.gamma0]
    assert g0 == pytest.approx(math.acosh(1 + 8 * math.sinh(a / 2) ** 2), abs=1e-12)
    assert g0 == pytest.approx(hg.cusp_chord_length(2 * 2 * math.sinh(a / 2), 1, 1), abs=1e-12)
    assert setup.surface.triangulation.validate() == (1, 1)
    assert abs(residual(setup.surface)) < 1e-12
    # the new diagonal cuts a compact triangle off the horocyclic cell
    assert not setup.surface.faces[setup.t1].is_cusp()


def test_flow_B_setup_square(squares):
    setup = asc.flow_B_setup(squares)
    _, radius = catalog.regular_polygon(4, math.pi / 6)
    assert setup.surface.lengths[setup.gamma0] == pytest.approx(2 * radius, abs=1e-9)


def test_flow_B_setup_octagon(octagon):
    setup = asc.flow_B_setup(octagon)
    side, _ = catalog.regular_polygon(8, math.pi / 4)
    # the diagonal skips one vertex of the regular octagon
    _, radius = catalog.regular_polygon(8, math.pi / 4)
    assert setup.surface.lengths[setup.gamma0] == pytest.approx(catalog.chord(radius, 8, 2), abs=1e-9)
    assert abs(residual(setup.surface)) < 1e-10


def test_flow_B_no_offending_cell(g2):
    with pytest.raises(FlowError, match="no offending cell"):
        asc.flow_B_setup(g2)


@pytest.mark.parametrize("name", ["punctured-torus-square", "genus2-squares"])
def test_flow_B_starts_flat_then_grows(name):
    S = catalog.REFERENCE[name]()
    setup = asc.flow_B_setup(S)
    plan = asc.flow_B_direction(setup)
    assert abs(plan.dependent_rate) < 1e-8
    assert plan.rates == {setup.gamma0: -1.0}
    assert abs(plan.constraint_residual()) <= 1e-12
    moved = asc._advance(plan, 1e-3)
    later = asc.flow_B_direction(asc.BSetup(moved, setup.gamma0, setup.t0, setup.t1,
                                            setup.cell, setup.delaunay_edges))
    assert later.dependent_rate > 0


def test_delaunay_event_detected(g2):
    # lengthen p3 through the point where it stops being locally Delaunay
    S = catalog.lengthened(g2, "p3", 0.5)
    others = tuple(e for e in S.edges if e != "p3")
    coef = asc.constraint_coefficients(S)
    plan = asc.FlowPlan("A", S, {"p3": 1.0}, others, -coef["p3"] / sum(coef[e] for e in others),
                        "p3", S.edges, coef, ("p3",))
    new, h, _, event = asc.attempt(plan, 0.5, 0.0)
    assert event == "delaunay:p3"
    margin = dv.edge_test(new, "p3").margin
    # landed just short of the crossing, within the bisection resolution
    assert -dv.COCIRCULAR_TOL <= margin < 1e-6
    assert 0 < h < 0.3


# --- the driver ---------------------------------------------------------------

def check_trace(result):
    rows = result.trace
    for prev, row in zip(rows, rows[1:]):
        assert row.injrad >= prev.injrad - 1e-10
        assert abs(row.constraint_residual) <= 1e-12


def test_ascend_equilateral_stops(g2):
    res = asc.ascend(g2)
    assert res.status == "criterion met"
    assert res.state.steps == 0


def test_ascend_perturbed_genus2(g2_perturbed):
    states = []
    res = asc.ascend(g2_perturbed, on_step=lambda st: states.append(st.surface))
    assert res.status == "criterion met"
    for e, v in res.surface.lengths.items():
        assert v == pytest.approx(S_STAR, abs=1e-6)
    assert res.state.injrad == pytest.approx(S_STAR / 2, abs=1e-6)
    check_trace(res)
    for S in states:
        assert abs(residual(S)) <= 1e-12 and S.in_domain()


def test_ascend_torus():
    res = asc.ascend(catalog.punctured_torus_square())
    rows = res.trace
    assert res.status == "criterion met"
    assert rows[0].mode == "B"
    r = [row.injrad for row in rows]
    assert all(b > a for a, b in zip(r, r[1:]))
    assert len(r) - 1 >= 10
    check_trace(res)
    assert all(c.is_triangle() or c.is_monogon() for c in res.verdict.tessellation.cells)


def test_budget_zero_reports_initial_state(g2_perturbed):
    res = asc.ascend(g2_perturbed, budget=0)
    assert res.status == "budget exhausted"
    assert res.state.steps == 0 and res.surface is g2_perturbed


def test_trace_csv(tmp_path, g2_perturbed):
    res = asc.ascend(g2_perturbed)
    out = tmp_path / "trace.csv"
    asc.write_trace(res.trace, out)
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == asc.TRACE_COLUMNS
    assert len(rows) == len(res.trace) + 1
    assert float(rows[-1][2]) == res.state.injrad
