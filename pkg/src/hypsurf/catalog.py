"""Reference surfaces used by the tests, the CLI and the documentation."""

from __future__ import annotations

import math

from .surface import CombTriangulation, MarkedSurface, compact, cusp, solve_dependent_length


def equilateral_side(angle: float) -> float:
    """Side of the equilateral triangle with the given interior angle."""
    c = math.cos(angle)
    return math.acosh(c / (1.0 - c))


S_STAR = equilateral_side(math.pi / 9)


def regular_polygon(n: int, interior: float) -> tuple:
    """Side length and circumradius of a regular ``n``-gon."""
    side = 2.0 * math.acosh(math.cos(math.pi / n) / math.sin(0.5 * interior))
    radius = math.asinh(math.sinh(0.5 * side) / math.sin(math.pi / n))
    return side, radius


def chord(radius: float, n: int, k: int) -> float:
    """Distance between vertices ``k`` apart on a regular ``n``-gon."""
    return 2.0 * math.asinh(math.sinh(radius) * math.sin(k * math.pi / n))


def _octagon_fan(side_labels, diag_lengths, side_length, name):
    # fan from vertex 0 of an octagon whose boundary reads side_labels
    diags = [f"p{k}" for k in range(2, 7)]
    faces = [compact(side_labels[0], side_labels[1], diags[0])]
    for i in range(1, 5):
        faces.append(compact(diags[i - 1], side_labels[i + 1], diags[i]))
    faces.append(compact(diags[4], side_labels[6], side_labels[7]))
    T = CombTriangulation(faces, face_names=tuple(f"T{i}" for i in range(6)))
    lengths = {e: side_length for e in dict.fromkeys(side_labels)}
    lengths.update(zip(diags, diag_lengths))
    return MarkedSurface(T, lengths, name)


GENUS2_WORD = ("a", "b", "a", "b", "c", "d", "c", "d")


def genus2_equilateral() -> MarkedSurface:
    """Genus two, one vertex, six equilateral triangles with angles pi/9."""
    return _octagon_fan(GENUS2_WORD, [S_STAR] * 5, S_STAR, "genus2-equilateral")


def genus2_octagon() -> MarkedSurface:
    """The regular octagon with angles pi/4, fan-triangulated from one vertex."""
    side, radius = regular_polygon(8, math.pi / 4)
    diag = [chord(radius, 8, k) for k in (2, 3, 4, 3, 2)]
    return _octagon_fan(GENUS2_WORD, diag, side, "genus2-octagon")


def genus2_squares() -> MarkedSurface:
    """Three regular quadrilaterals with angles pi/6, each cut by a diameter."""
    side, radius = regular_polygon(4, math.pi / 6)
    sides = (("s5", "s3", "s0", "s1"), ("s1", "s4", "s5", "s2"), ("s0", "s4", "s2", "s3"))
    faces = []
    for q, (w, x, y, z) in enumerate(sides):
        faces += [compact(w, x, f"d{q}"), compact(f"d{q}", y, z)]
    T = CombTriangulation(faces, face_names=tuple(f"Q{i // 2}{'ab'[i % 2]}" for i in range(6)))
    lengths = {f"s{i}": side for i in range(6)}
    lengths.update({f"d{q}": 2.0 * radius for q in range(3)})
    return MarkedSurface(T, lengths, "genus2-squares")


PUNCTURED_TORUS_SIDE = 2.0 * math.acosh(1.0 / math.sin(math.pi / 4))


def punctured_torus_square(a: float = PUNCTURED_TORUS_SIDE, b: float = None) -> MarkedSurface:
    """Once-punctured torus: four horocyclic triangles around one cusp.

    With ``a == b`` every finite corner has angle ``pi/4``.  For ``a != b``
    the second length is solved from the angle-sum constraint.
    """
    faces = (cusp("a"), cusp("b"), cusp("a"), cusp("b"))
    T = CombTriangulation(faces, ((0, 1, 2, 3),), face_names=("C0", "C1", "C2", "C3"))
    if b is None:
        b = a
        S = MarkedSurface(T, {"a": a, "b": b}, "punctured-torus-square")
        if a != PUNCTURED_TORUS_SIDE:
            S = solve_dependent_length(S, "b")
        return S
    return MarkedSurface(T, {"a": a, "b": b}, "punctured-torus-square")


def lengthened(S: MarkedSurface, edge: str, delta: float) -> MarkedSurface:
    """Lengthen one edge and restore the angle sum by moving all other edges together."""
    others = tuple(e for e in S.edges if e != edge)
    return solve_dependent_length(S.with_lengths({edge: S.lengths[edge] + delta}), others)


REFERENCE = {
    "genus2-equilateral": genus2_equilateral,
    "genus2-octagon": genus2_octagon,
    "genus2-squares": genus2_squares,
    "punctured-torus-square": punctured_torus_square,
}
