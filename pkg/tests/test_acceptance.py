"""Acceptance criteria, one test per criterion.

Each test records a ``PASS``/``FAIL`` line; the lines are printed in the
terminal summary and, with ``-s``, as each criterion finishes.
"""

import math

import numpy as np

from conftest import ACCEPTANCE, random_member, star_edges
from hypsurf import ascent as asc
from hypsurf import catalog
from hypsurf import derivcheck as dc
from hypsurf import developer as dv
from hypsurf import hypgeom as hg
from hypsurf.surface import SlotPath, angle_sum, arc_length_in_class, residual

S_STAR = math.acosh(math.cos(math.pi / 9) / (1 - math.cos(math.pi / 9)))


def verdict(label, checks):
    """Record one line for the criterion and fail with the broken checks."""
    bad = [name for name, ok, _ in checks if not ok]
    detail = "; ".join(f"{name}={value}" for name, _, value in checks)
    line = f"{'PASS' if not bad else 'FAIL'} {label}: {detail}"
    ACCEPTANCE.append(line)
    print(line)
    assert not bad, f"{label}: failed {', '.join(bad)}"


def test_criterion_1_horocyclic_partial():
    ds = np.arange(1, 401) * 0.05
    err = dc.horocyclic_check(ds)
    verdict("1 horocyclic partial", [("max_err", err < 1e-7, f"{err:.2e}")])


def test_criterion_2_area_partial():
    shapes = dc.random_shapes(np.random.default_rng(2024), 1000, "mixed")
    rep = dc.check(shapes)
    kinds = {k.value for k in hg.CircumKind}
    verdict("2 area partial vs finite differences", [
        ("max_err", rep.max_abs_error < 1e-6, f"{rep.max_abs_error:.2e}"),
        ("branches", set(rep.counts) == kinds, ",".join(sorted(rep.counts))),
        ("sign_flips", rep.sign_flips > 0, rep.sign_flips),
        ("diameter_partial", rep.diameter_zero < 1e-6, f"{rep.diameter_zero:.1e}"),
    ])


def test_criterion_3a_equilateral_circumradius():
    J = hg.circumradius((2.0, 2.0, 2.0))
    want = math.asinh(math.sinh(1) / math.sin(math.pi / 3))
    verdict("3a J(2,2,2)", [("err", abs(J - want) < 1e-9, f"{abs(J - want):.1e}")])


def test_criterion_3b_right_triangle_circumradius():
    # legs 1 and 1 at a right angle; hypotenuse by the hyperbolic Pythagoras law
    c = math.acosh(math.cosh(1) ** 2)
    J = hg.circumradius((1.0, 1.0, c))
    verdict("3b J(right triangle) = hypotenuse/2",
            [("err", abs(J - c / 2) < 1e-9, f"{abs(J - c / 2):.3e}")])


def test_criterion_4_genus2_equilateral():
    S = catalog.genus2_equilateral()
    A = angle_sum(S)
    r = dv.injectivity_radius(S).radius
    v = dv.criterion_check(S)
    res = asc.ascend(S)
    verdict("4 genus-2 equilateral", [
        ("faces/edges", (len(S.faces), len(S.edges)) == (6, 9), (len(S.faces), len(S.edges))),
        ("s*", all(abs(x - S_STAR) < 1e-12 for x in S.lengths.values()), f"{S_STAR:.10f}"),
        ("A_x", abs(A - 2 * math.pi) < 1e-10, f"{abs(A - 2 * math.pi):.1e}"),
        ("injrad", abs(r - S_STAR / 2) < 1e-8, f"{abs(r - S_STAR / 2):.1e}"),
        ("criterion", v.ok, v.ok),
        ("ascend_steps", res.status == "criterion met" and res.state.steps == 0, res.state.steps),
    ])


def test_criterion_5a_stated_torus_side_in_domain():
    a = 2 * math.acosh(1 / math.sin(math.pi / 8))
    S = catalog.punctured_torus_square(a, a)
    res = residual(S)
    verdict("5a punctured torus at a=2 acosh(1/sin(pi/8)) in D",
            [("A_x-2pi", abs(res) < 1e-10, f"{res:.6f}")])


def test_criterion_5b_punctured_torus_flow():
    S = catalog.punctured_torus_square()
    res0 = residual(S)
    v = dv.criterion_check(S)
    setup = asc.flow_B_setup(S)
    plan = asc.flow_B_direction(setup)
    d0 = plan.dependent_rate
    r0 = dv.injectivity_radius(setup.surface).radius
    state = asc.FlowState(setup.surface, 0.0, "B", plan, r0)
    new, h, _, _ = asc.step(state, asc.H0)
    d1 = asc.flow_B_direction(asc.BSetup(new.surface, setup.gamma0, setup.t0, setup.t1,
                                         setup.cell, setup.delaunay_edges)).dependent_rate
    run = asc.ascend(S)
    r = [row.injrad for row in run.trace]
    increasing = all(b > a for a, b in zip(r, r[1:]))
    verdict("5b punctured torus (a=2 acosh(sqrt 2)) flow B", [
        ("in_D", abs(res0) < 1e-10, f"{res0:.1e}"),
        ("criterion_false", not v.ok, f"ok={v.ok}"),
        ("|d'(0)|", abs(d0) < 1e-6, f"{abs(d0):.1e}"),
        ("d'(h)", h > 0 and d1 > 0, f"{d1:.2e}"),
        ("steps", len(r) - 1 >= 10, len(r) - 1),
        ("strictly_increasing", increasing, increasing),
    ])


def test_criterion_6_flow_A_rate(g2_perturbed):
    tess = dv.delaunay(g2_perturbed)
    plan = asc.flow_A_direction(tess.surface, tess)
    r0 = dv.injectivity_radius(tess.surface).radius
    state = asc.FlowState(tess.surface, 0.0, "A", plan, r0)
    rates = []
    for h in (1e-3, 5e-4, 2e-4, 1e-4):
        new, taken, _, _ = asc.step(state, h)
        rates.append((new.injrad - r0) / taken)
    ok = all(0.45 <= x <= 0.55 for x in rates)
    verdict("6 flow A rate", [("rates", ok, ",".join(f"{x:.6f}" for x in rates))])


def test_criterion_7_shortest_arcs_are_delaunay():
    rng = np.random.default_rng(77)
    bases = [catalog.genus2_equilateral(), catalog.punctured_torus_square()]
    bad, arcs = 0, 0
    for i in range(50):
        S = random_member(bases[i % 2], rng, scale=0.15)
        tess = dv.delaunay(S)
        T = tess.surface
        r = dv.injectivity_radius(T)
        for w in r.witnesses:
            names = star_edges(r.neighborhood, T, w)
            arcs += 1
            if not names or not all(tess.is_delaunay[e] for e in names):
                bad += 1
    verdict("7 shortest arcs are Delaunay edges", [("violations", bad == 0, f"{bad}/{arcs}")])


def test_criterion_8_flips():
    rng = np.random.default_rng(88)
    surfaces = [f() for f in catalog.REFERENCE.values()]
    surfaces.append(catalog.lengthened(catalog.genus2_equilateral(), "a", 0.05))
    surfaces.append(catalog.lengthened(catalog.genus2_equilateral(), "p3", 1.0))
    for i in range(8):
        surfaces.append(random_member(surfaces[i % 4], rng, scale=0.15))
    worst_margin, worst_drift, refl = math.inf, 0.0, 0
    for S in surfaces:
        tess = dv.delaunay(S)
        worst_margin = min([worst_margin] + [tess.tests[e].margin for e in tess.surface.edges
                                             if tess.is_delaunay[e]])
        refl = max(refl, dv.delaunay(tess.surface).flips)
        drift = abs(dv.injectivity_radius(S).radius - dv.injectivity_radius(tess.surface).radius)
        worst_drift = max(worst_drift, drift)
    verdict("8 flips", [
        ("surfaces", True, len(surfaces)),
        ("reflips", refl == 0, refl),
        ("min_margin", worst_margin >= -1e-9, f"{worst_margin:.1e}"),
        ("injrad_drift", worst_drift <= 1e-9, f"{worst_drift:.1e}"),
    ])


def test_criterion_9_arc_length_continuity():
    S = catalog.genus2_equilateral()
    path = SlotPath(0, 0, ((0, 2), (1, 1)), 2)
    base = arc_length_in_class(S, path)
    v = np.random.default_rng(9).normal(size=len(S.edges))
    v /= np.linalg.norm(v)
    eps = (1e-2, 1e-3, 1e-4)
    diffs = []
    for e in eps:
        T = S.with_lengths({k: S.lengths[k] + e * v[i] for i, k in enumerate(S.edges)})
        diffs.append(abs(arc_length_in_class(T, path) - base))
    ratios = [d / e for d, e in zip(diffs, eps)]
    C = max(ratios)
    bounded = all(d <= C * e for d, e in zip(diffs, eps))
    linear = min(ratios) >= 0.5 * C and all(b < a for a, b in zip(diffs, diffs[1:]))
    verdict("9 arc length continuity", [
        ("C", bounded, f"{C:.4f}"),
        ("linear", linear, ",".join(f"{x:.4f}" for x in ratios)),
    ])
