"""Finite-difference audit of the closed-form area partials."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import hypgeom as hg

FAMILIES = ("mixed", "semicyclic", "horocyclic", "degenerate")


def semicyclic_shape(radius: float, theta: float) -> hg.TriangleShape:
    """Triangle inscribed in a circle with its longest side a diameter.

    ``theta`` is the half-angle subtended by the first short side; the
    two half-angles of the short sides add to ``pi/2``.
    """
    sh = math.sinh(radius)
    l1 = 2 * math.asinh(sh * math.sin(theta))
    l2 = 2 * math.asinh(sh * math.cos(theta))
    return hg.TriangleShape(l1, l2, 2 * radius)


def horocyclic_shape(l1: float, l2: float) -> hg.TriangleShape:
    l3 = 2 * math.asinh(math.sinh(0.5 * l1) + math.sinh(0.5 * l2))
    return hg.TriangleShape(l1, l2, l3)


def random_shapes(rng: np.random.Generator, n: int, family: str = "mixed") -> list:
    """Seeded triangle shapes; ``mixed`` covers every circumscribed-curve class."""
    out = []
    while len(out) < n:
        pick = family
        if family == "mixed":
            pick = rng.choice(["generic", "generic", "generic", "semicyclic", "horocyclic", "long"])
        if pick in ("generic", "long"):
            hi = 8.0 if pick == "long" else 4.0
            a, b = rng.uniform(0.05, hi, size=2)
            c = rng.uniform(abs(a - b), a + b)
            shape = (a, b, c)
        elif pick == "semicyclic":
            shape = semicyclic_shape(rng.uniform(0.1, 3.0), rng.uniform(0.1, 0.5 * math.pi - 0.1)).sides
        elif pick == "horocyclic":
            shape = horocyclic_shape(*rng.uniform(0.1, 3.0, size=2)).sides
        elif pick == "degenerate":
            a, b = rng.uniform(0.5, 4.0, size=2)
            shape = _thin(a, b, 1e-4)
        else:
            raise ValueError(f"unknown family {family!r}")
        try:
            out.append(hg.TriangleShape(*map(float, shape)))
        except hg.DomainError:
            continue
    return out


def _thin(b: float, c: float, angle: float) -> tuple:
    # side opposite a tiny angle between sides b and c
    a = math.acosh(math.cosh(b) * math.cosh(c) - math.sinh(b) * math.sinh(c) * math.cos(angle))
    return (a, b, c)


@dataclass
class DerivReport:
    """Worst disagreements found by :func:`check`.

    ``max_scaled_error`` divides each error by ``max(1, |rate|)``; near
    flat triangles the rate itself grows like the inverse smallest angle,
    and the scaled figure is the meaningful one there.
    """

    samples: int
    max_abs_error: float
    max_scaled_error: float
    by_kind: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)
    worst: tuple = ()
    diameter_zero: float = 0.0
    sign_flips: int = 0


FD_DPS = 40
FD_STEP = 1e-15


def _mp_area(sides) -> mpmath.mpf:
    a, b, c = sides
    if not (a < b + c and b < a + c and c < a + b):
        raise hg.DomainError(f"triangle inequality violated by {sides}")
    s = (a + b + c) / 2
    total = mpmath.mpf(0)
    for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
        num = mpmath.sinh(s - y) * mpmath.sinh(s - z)
        den = mpmath.sinh(s) * mpmath.sinh(s - x)
        total += 2 * mpmath.atan(mpmath.sqrt(num / den))
    return mpmath.pi - total


def fd_area_partial(shape: hg.TriangleShape, side: int, h: float = FD_STEP) -> float:
    """Central difference of the angle defect, evaluated in extended precision.

    Working at ``FD_DPS`` digits lets the step shrink far below the
    distance to the degenerate locus, so truncation error is negligible
    even for nearly flat triangles.
    """
    with mpmath.workdps(FD_DPS):
        sides = [mpmath.mpf(x) for x in shape.sides]
        step = mpmath.mpf(h)
        hi, lo = list(sides), list(sides)
        hi[side] += step
        lo[side] -= step
        return float((_mp_area(hi) - _mp_area(lo)) / (2 * step))


def check(shapes, h: float = FD_STEP) -> DerivReport:
    """Compare ``area_partial`` with central differences on every side of every shape."""
    worst_err, worst_scaled, worst = 0.0, 0.0, ()
    by_kind, counts = {}, {}
    diameter_zero, flips, n = 0.0, 0, 0
    for shape in shapes:
        data = hg.circumdata(shape)
        k = data.kind.value
        counts[k] = counts.get(k, 0) + 1
        for side in range(3):
            try:
                fd = fd_area_partial(shape, side, h)
            except hg.DomainError:
                continue
            cf = hg.area_partial(shape, side, data)
            err = abs(cf - fd)
            n += 1
            by_kind[k] = max(by_kind.get(k, 0.0), err)
            worst_scaled = max(worst_scaled, err / max(1.0, abs(fd)))
            if side == data.longest:
                if data.kind is hg.CircumKind.SEMICYCLIC:
                    diameter_zero = max(diameter_zero, abs(cf))
                elif data.kind is hg.CircumKind.NON_CENTERED and cf < 0 and fd < 0:
                    flips += 1
            if err > worst_err:
                worst_err = err
                worst = (tuple(float(x) for x in shape.sides), side, k, cf, fd)
    return DerivReport(n, worst_err, worst_scaled, by_kind, counts, worst, diameter_zero, flips)


def horocyclic_check(ds=None, h: float = 1e-6) -> float:
    """Largest error of the horocyclic partial against differences of the area."""
    if ds is None:
        ds = np.arange(1, 401) * 0.05
    worst = 0.0
    for d in ds:
        def area(x):
            return math.pi - 2 * math.asin(1 / math.cosh(0.5 * x))
        fd = (area(d + h) - area(d - h)) / (2 * h)
        worst = max(worst, abs(fd - hg.horocyclic_area_partial(d)))
    return worst
