import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hypsurf import catalog
from hypsurf import hypgeom as hg
from hypsurf.errors import CoefficientDegenerate, DomainError, ValidationError
from hypsurf.surface import (
    CombTriangulation,
    MarkedSurface,
    PathError,
    SlotPath,
    angle_sum,
    arc_length_in_class,
    compact,
    cusp,
    edge_coefficients,
    residual,
    solve_dependent_length,
)

TWO_PI = 2 * math.pi


def test_validate_reference_complexes(g2, torus, octagon, squares):
    assert g2.triangulation.validate() == (2, 0)
    assert len(g2.faces) == 6 and len(g2.edges) == 9
    assert torus.triangulation.validate() == (1, 1)
    assert octagon.triangulation.validate() == (2, 0)
    assert squares.triangulation.validate() == (2, 0)


def test_compact_slot_glued_to_ideal_slot_rejected():
    # cusp face listed in no cycle: its ideal slots have no partner
    T = CombTriangulation((cusp("a"), cusp("b"), cusp("a"), cusp("b")), ((0, 1, 2),))
    with pytest.raises(ValidationError):
        T.validate()
    # compact face named in a cusp cycle
    T = CombTriangulation((compact("a", "b", "c"), compact("c", "b", "a")), ((0,),))
    with pytest.raises(ValidationError, match="compact slot glued to an ideal slot"):
        T.validate()


def test_edge_used_once_rejected():
    T = CombTriangulation((compact("a", "b", "c"), compact("c", "b", "d")))
    with pytest.raises(ValidationError, match="expected 2"):
        T.validate()


def test_two_vertex_complex_rejected():
    # a sphere from two triangles glued along their boundary has three vertices
    T = CombTriangulation((compact("a", "b", "c"), compact("c", "b", "a")))
    with pytest.raises(ValidationError):
        T.validate()


@given(st.integers(0, 17), st.sampled_from(["x", "a", "b", "p2"]))
def test_corrupted_genus2_never_validates(slot, new):
    # relabel one slot of the valid complex; any change breaks an invariant
    S = catalog.genus2_equilateral()
    faces = [list(f.edges) for f in S.faces]
    f, k = divmod(slot, 3)
    if faces[f][k] == new:
        return
    faces[f][k] = new
    T = CombTriangulation(tuple(compact(*e) for e in faces))
    with pytest.raises(ValidationError):
        T.validate()


def test_angle_sum_examples(g2, torus):
    assert angle_sum(g2) == pytest.approx(TWO_PI, abs=1e-10)
    assert angle_sum(torus) == pytest.approx(TWO_PI, abs=1e-12)
    scaled = g2.with_lengths({e: 1.1 * v for e, v in g2.lengths.items()})
    assert angle_sum(scaled) < TWO_PI


def test_stated_torus_side_has_angle_sum_pi():
    a = 2 * math.acosh(1 / math.sin(math.pi / 8))
    S = catalog.punctured_torus_square(a, a)
    assert angle_sum(S) == pytest.approx(math.pi, abs=1e-12)
    assert not S.is_member()


def test_angle_sum_counts_corners():
    # genus two: 18 corners of pi/9
    S = catalog.genus2_equilateral()
    total = sum(hg.angles(S.slot_lengths(f))[i] for f in range(6) for i in range(3))
    assert total == pytest.approx(18 * math.pi / 9, abs=1e-12)


def test_angle_sum_off_domain():
    S = catalog.genus2_equilateral()
    bad = S.with_lengths({"a": 3 * catalog.S_STAR})
    with pytest.raises(DomainError):
        angle_sum(bad)


def test_solve_dependent_unchanged(g2):
    assert solve_dependent_length(g2, "b") is g2


def test_solve_dependent_after_push(g2):
    S = g2.with_lengths({"a": catalog.S_STAR + 0.2})
    out = solve_dependent_length(S, "c")
    assert abs(residual(out)) <= 1e-12
    assert out.lengths["a"] == S.lengths["a"]
    assert out.lengths["c"] < catalog.S_STAR
    assert out.is_member()
    again = solve_dependent_length(out, "c")
    assert again.lengths == out.lengths


def test_solve_dependent_group(g2):
    out = catalog.lengthened(g2, "a", 0.3)
    others = {out.lengths[e] for e in out.edges if e != "a"}
    assert len(others) == 1
    assert abs(residual(out)) <= 1e-12


def test_solve_dependent_degenerate(squares):
    # d1 is a diameter of both halves of an untouched square: zero coefficient
    S = squares.with_lengths({"s0": squares.lengths["s0"] + 0.01})
    assert edge_coefficients(S)["d1"] == 0.0
    with pytest.raises(CoefficientDegenerate):
        solve_dependent_length(S, "d1")


def test_edge_coefficients_match_finite_differences(g2_perturbed):
    coef = edge_coefficients(g2_perturbed)
    h = 1e-6
    for e in g2_perturbed.edges:
        x = g2_perturbed.lengths[e]
        up = angle_sum(g2_perturbed.with_lengths({e: x + h}))
        dn = angle_sum(g2_perturbed.with_lengths({e: x - h}))
        assert -(up - dn) / (2 * h) == pytest.approx(coef[e], abs=1e-7)


def test_arc_length_of_edge(g2):
    # corner 0 of T0 to corner 1 of T0 runs along edge a
    assert arc_length_in_class(g2, SlotPath(0, 0, (), 1)) == pytest.approx(catalog.S_STAR, abs=1e-10)
    # crossing p2 into T1 and ending at the far corner gives the diagonal there
    L = arc_length_in_class(g2, SlotPath(0, 0, ((0, 2),), 1))
    assert L > catalog.S_STAR


def test_arc_length_disconnected_path(g2):
    with pytest.raises(PathError):
        arc_length_in_class(g2, SlotPath(0, 0, ((3, 1),), 0))


def test_arc_length_continuity(g2):
    path = SlotPath(0, 0, ((0, 2), (1, 1)), 2)
    base = arc_length_in_class(g2, path)
    rng = np.random.default_rng(3)
    v = rng.normal(size=len(g2.edges))
    diffs = []
    for eps in (1e-2, 1e-3, 1e-4, 1e-5):
        S = g2.with_lengths({e: g2.lengths[e] + eps * v[i] for i, e in enumerate(g2.edges)})
        diffs.append(abs(arc_length_in_class(S, path) - base))
    assert diffs[-1] < 1e-3
    assert all(b < a for a, b in zip(diffs, diffs[1:]))


def test_marked_surface_requires_lengths():
    T = CombTriangulation((compact("a", "b", "c"),))
    with pytest.raises(DomainError):
        MarkedSurface(T, {"a": 1.0})
