"""Hyperbolic trigonometry kernel.

Triangle angles, areas and circumradii, the derivative of area with
respect to a side length, and hyperboloid-model primitives used to
develop triangulated surfaces into the hyperbolic plane.

Points of the hyperbolic plane are numpy arrays ``(x0, x1, x2)`` on the
upper sheet of ``-x0**2 + x1**2 + x2**2 = -1``.  Ideal points are
future-pointing light-like vectors; their scale is meaningful, it fixes
the horocycle ``{x : -<u, x> = 1}`` attached to the ideal point.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import mpmath
import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError, PlacementError

SEMICYCLIC_TOL = 1e-9
HOROCYCLIC_TOL = 1e-9
J_BRACKET = 50.0
J_XTOL = 1e-14

MINKOWSKI = np.diag([-1.0, 1.0, 1.0])
ORIGIN = np.array([1.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# triangles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TriangleShape:
    """Side lengths of a compact hyperbolic triangle.

    Side ``i`` is opposite vertex ``i``.  Construction enforces positivity
    and the strict triangle inequality.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        a, b, c = self.a, self.b, self.c
        if not (a > 0 and b > 0 and c > 0):
            raise DomainError(f"side lengths must be positive, got {self.sides}")
        if not (a < b + c and b < a + c and c < a + b):
            raise DomainError(f"triangle inequality violated by {self.sides}")

    @property
    def sides(self):
        return (self.a, self.b, self.c)

    def longest(self) -> int:
        s = self.sides
        return max(range(3), key=lambda i: (s[i], -i))


def _shape(shape) -> TriangleShape:
    if isinstance(shape, TriangleShape):
        return shape
    return TriangleShape(*map(float, shape))


def interior_angle(shape, opposite: int) -> float:
    """Angle of the triangle at the vertex opposite side ``opposite``.

    Evaluates the law of cosines through the half-angle form, which is
    well conditioned for small and near-straight angles.
    """
    shape = _shape(shape)
    sides = shape.sides
    a = sides[opposite]
    b, c = sides[(opposite + 1) % 3], sides[(opposite + 2) % 3]
    s = 0.5 * (a + b + c)
    num = math.sinh(s - b) * math.sinh(s - c)
    den = math.sinh(s) * math.sinh(s - a)
    return 2.0 * math.atan2(math.sqrt(num), math.sqrt(den))


def angles(shape) -> tuple[float, float, float]:
    shape = _shape(shape)
    return tuple(interior_angle(shape, i) for i in range(3))


def horocyclic_angle(d: float) -> float:
    """Angle at either finite vertex of a horocyclic ideal triangle."""
    if not d > 0:
        raise DomainError(f"finite side must be positive, got {d}")
    return math.asin(1.0 / math.cosh(0.5 * d))


def triangle_area(shape) -> float:
    return math.pi - sum(angles(shape))


def horocyclic_triangle_area(d: float) -> float:
    return math.pi - 2.0 * horocyclic_angle(d)


# ---------------------------------------------------------------------------
# circumscribed curves
# ---------------------------------------------------------------------------


class CircumKind(enum.Enum):
    CENTERED = "centered"
    SEMICYCLIC = "semicyclic"
    NON_CENTERED = "non_centered_cyclic"
    HOROCYCLIC = "horocyclic_boundary"
    EQUIDISTANT = "equidistant"

    @property
    def cyclic(self) -> bool:
        return self in (CircumKind.CENTERED, CircumKind.SEMICYCLIC, CircumKind.NON_CENTERED)


@dataclass(frozen=True)
class CircumData:
    kind: CircumKind
    radius: Optional[float]
    longest: int


def circumdata(shape) -> CircumData:
    """Classify the circumscribed curve of a triangle and find its radius.

    A chord of length ``l`` in a circle of radius ``J`` subtends a central
    angle ``2*theta`` with ``sinh(l/2) = sinh(J) sin(theta)``.  The
    circumcenter lies inside the triangle when the three half-angles sum
    to ``pi``; otherwise the longest side's half-angle is the sum of the
    other two.  With no finite solution the vertices lie on a horocycle
    (``sinh(l_max/2) = sinh(l_1/2) + sinh(l_2/2)``) or an equidistant curve.
    """
    shape = _shape(shape)
    k = shape.longest()
    sh = [math.sinh(0.5 * x) for x in shape.sides]
    s_max = sh[k]
    s1, s2 = sh[(k + 1) % 3], sh[(k + 2) % 3]
    j0 = 0.5 * shape.sides[k]

    crossover = math.asin(min(1.0, s1 / s_max)) + math.asin(min(1.0, s2 / s_max)) - 0.5 * math.pi
    if abs(crossover) <= SEMICYCLIC_TOL:
        return CircumData(CircumKind.SEMICYCLIC, j0, k)

    def half_angles(j):
        r = 1.0 / math.sinh(j)
        return [math.asin(min(1.0, x * r)) for x in (s_max, s1, s2)]

    if crossover > 0:
        def f(j):
            t = half_angles(j)
            return t[0] + t[1] + t[2] - math.pi
        kind = CircumKind.CENTERED
    else:
        gap = (s_max - s1 - s2) / s_max
        if abs(gap) <= HOROCYCLIC_TOL:
            return CircumData(CircumKind.HOROCYCLIC, None, k)
        if gap > 0:
            return CircumData(CircumKind.EQUIDISTANT, None, k)

        def f(j):
            t = half_angles(j)
            return t[0] - t[1] - t[2]
        kind = CircumKind.NON_CENTERED

    lo, hi = j0, j0 + J_BRACKET
    f_lo, f_hi = f(lo), f(hi)
    if f_lo * f_hi > 0:
        if kind is CircumKind.NON_CENTERED:
            # root beyond the bracket: numerically on the horocyclic locus
            return CircumData(CircumKind.HOROCYCLIC, None, k)
        raise ConvergenceError(f"circumradius not bracketed for {shape.sides}")
    j = brentq(f, lo, hi, xtol=J_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    return CircumData(kind, j, k)


def circumradius(shape) -> Optional[float]:
    return circumdata(shape).radius


# ---------------------------------------------------------------------------
# derivatives of area
# ---------------------------------------------------------------------------


def defect_partial(shape, side: int) -> float:
    """Derivative of the angle defect in one side, from the law of cosines."""
    shape = _shape(shape)
    sides = shape.sides
    a = sides[side]
    b, c = sides[(side + 1) % 3], sides[(side + 2) % 3]
    alpha = interior_angle(shape, side)
    beta = interior_angle(shape, (side + 1) % 3)
    gamma = interior_angle(shape, (side + 2) % 3)
    sa, sb, sc = math.sinh(a), math.sinh(b), math.sinh(c)
    # law of sines ratio, evaluated from the best conditioned angle
    ratio = max(((sa, alpha), (sb, beta), (sc, gamma)), key=lambda t: math.sin(t[1]))
    k = ratio[0] / math.sin(ratio[1])
    return -k * (sa - math.cos(gamma) * sb - math.cos(beta) * sc) / (sa * sb * sc)


def area_partial(shape, side: int, data: Optional[CircumData] = None) -> float:
    """Rate of change of triangle area as one side length varies.

    For cyclic shapes this is ``+-sqrt(1/cosh^2(l/2) - 1/cosh^2 J)``, with
    the negative sign exactly when the circumcenter lies beyond the
    selected side, i.e. the shape is non-centered and the side is its
    longest.  Horocyclic and equidistant shapes fall back to
    differentiating the angle defect.
    """
    shape = _shape(shape)
    if data is None:
        data = circumdata(shape)
    if not data.kind.cyclic:
        return defect_partial(shape, side)
    length = shape.sides[side]
    if data.kind is CircumKind.SEMICYCLIC and side == data.longest:
        return 0.0
    val = 1.0 / math.cosh(0.5 * length) ** 2 - 1.0 / math.cosh(data.radius) ** 2
    val = math.sqrt(max(val, 0.0))
    if data.kind is CircumKind.NON_CENTERED and side == data.longest:
        return -val
    return val


def horocyclic_area_partial(d: float) -> float:
    if not d > 0:
        raise DomainError(f"finite side must be positive, got {d}")
    return 1.0 / math.cosh(0.5 * d)


def cusp_chord_length(theta: float, y0: float, y1: float) -> float:
    """Distance between ``i*y0`` and ``theta + i*y1`` in the upper half-plane."""
    if y0 < 1 or y1 < 1 or theta < 0:
        raise DomainError("need y0, y1 >= 1 and theta >= 0")
    if theta == 0 and y0 == y1:
        raise DomainError("coincident points")
    return math.acosh((theta * theta + y0 * y0 + y1 * y1) / (2.0 * y0 * y1))


# ---------------------------------------------------------------------------
# hyperboloid model
# ---------------------------------------------------------------------------


def mdot(x, y) -> float:
    return -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


def mcross(x, y) -> np.ndarray:
    """Minkowski cross product; Minkowski-orthogonal to both arguments."""
    return MINKOWSKI @ np.cross(x, y)


def is_ideal(p) -> bool:
    # finite points are kept normalized to <p, p> = -1
    return abs(mdot(p, p)) < 0.5


def normalize(p) -> np.ndarray:
    """Project a time-like vector back onto the upper sheet."""
    q = -mdot(p, p)
    if q <= 0:
        raise PlacementError("vector is not time-like")
    p = np.asarray(p, dtype=float) / math.sqrt(q)
    return p if p[0] > 0 else -p


def point(r: float, phi: float) -> np.ndarray:
    """Point at distance ``r`` from the origin in direction ``phi``."""
    sh = math.sinh(r)
    return np.array([math.cosh(r), sh * math.cos(phi), sh * math.sin(phi)])


def distance(p, q) -> float:
    diff = np.asarray(p) - np.asarray(q)
    n = mdot(diff, diff)
    return 2.0 * math.asinh(0.5 * math.sqrt(max(n, 0.0)))


def tangent_toward(p, q) -> np.ndarray:
    """Unit tangent at ``p`` pointing at ``q`` (finite or ideal)."""
    w = np.asarray(q, dtype=float) + mdot(p, q) * np.asarray(p)
    n = mdot(w, w)
    if n <= 0:
        raise PlacementError("degenerate direction")
    return w / math.sqrt(n)


def frame(p, q) -> np.ndarray:
    """Positively oriented Minkowski-orthonormal frame at ``p`` facing ``q``."""
    p = normalize(p)
    w = tangent_toward(p, q)
    n = mcross(p, w)
    n = n / math.sqrt(mdot(n, n))
    return np.column_stack([p, w, n])


def frame_inverse(f) -> np.ndarray:
    return lorentz_inverse(f)


def segment_isometry(src_a, src_b, dst_a, dst_b) -> np.ndarray:
    """Orientation-preserving isometry taking ray ``src_a -> src_b`` onto ``dst_a -> dst_b``."""
    return frame(dst_a, dst_b) @ frame_inverse(frame(src_a, src_b))


def reorthonormalize(m) -> np.ndarray:
    """Nearest-by-Gram-Schmidt Lorentz matrix, to stop drift in long products."""
    p = normalize(m[:, 0])
    w = m[:, 1] + mdot(m[:, 1], p) * p
    w = w / math.sqrt(mdot(w, w))
    n = mcross(p, w)
    n = n / math.sqrt(mdot(n, n))
    if mdot(n, m[:, 2]) < 0:
        n = -n
    return np.column_stack([p, w, n])


def orientation(p, q, r) -> float:
    """Positive when ``p, q, r`` run counter-clockwise."""
    return float(np.linalg.det(np.column_stack([p, q, r])))


def to_poincare(p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if is_ideal(p):
        return p[1:] / p[0]
    return p[1:] / (1.0 + p[0])


def circumplane(p1, p2, p3) -> np.ndarray:
    """Minkowski normal ``m`` of the affine plane through three points.

    Ideal arguments are treated as directions, so a face with an ideal
    vertex gets the plane of its horocycle.  The circumscribed curve is
    ``{x : <m, x> = <m, p1>}``; it is a circle when ``m`` is time-like,
    a horocycle when light-like and an equidistant curve when space-like.
    """
    finite = [np.asarray(p, float) for p in (p1, p2, p3) if not is_ideal(p)]
    ideal = [np.asarray(p, float) for p in (p1, p2, p3) if is_ideal(p)]
    if len(finite) == 3:
        n = np.cross(finite[1] - finite[0], finite[2] - finite[0])
    elif len(finite) == 2 and len(ideal) == 1:
        n = np.cross(finite[1] - finite[0], ideal[0])
    else:
        raise PlacementError("circumplane needs at least two finite points")
    return MINKOWSKI @ n


def incircle_margin(m, ref, q) -> float:
    """Signed position of ``q`` relative to the generalized disk of plane ``m``.

    Positive outside the disk, zero on its boundary, negative inside.
    For a circle of radius ``J`` about ``c`` the value is
    ``cosh d(c, q) / cosh J - 1``.  An ideal ``q`` returns ``<m, q> / <m, ref>``,
    whose sign is the limit of the finite case.
    """
    base = mdot(m, ref)
    val = mdot(m, q)
    if is_ideal(q):
        return val / base
    return val / base - 1.0


def point_segment_distance(p, q1, q2) -> float:
    """Distance from ``p`` to the closed geodesic segment (or ray, if ``q2`` is ideal).

    When the foot of the perpendicular is interior, ``sinh h = |<p, n>|``
    with ``n`` the unit normal of the geodesic; this is the law of sines
    ``sinh h = sinh l sin theta`` read in the hyperboloid.
    """
    p = np.asarray(p, float)
    q1 = np.asarray(q1, float)
    q2 = np.asarray(q2, float)
    if is_ideal(q1):
        q1, q2 = q2, q1
    if is_ideal(q1):
        raise PlacementError("segment needs a finite endpoint")
    ideal_end = is_ideal(q2)
    n = mcross(q1, q2)
    nn = mdot(n, n)
    if nn <= 0:
        raise PlacementError("degenerate segment")
    n = n / math.sqrt(nn)
    s = mdot(p, n)
    foot = p - s * n
    g11, g12, g22 = mdot(q1, q1), mdot(q1, q2), mdot(q2, q2)
    r1, r2 = mdot(foot, q1), mdot(foot, q2)
    det = g11 * g22 - g12 * g12
    alpha = (r1 * g22 - r2 * g12) / det
    beta = (g11 * r2 - g12 * r1) / det
    if alpha >= 0 and beta >= 0:
        return math.asinh(abs(s))
    if ideal_end:
        return distance(p, q1)
    return min(distance(p, q1), distance(p, q2))


# ---------------------------------------------------------------------------
# canonical placements
# ---------------------------------------------------------------------------


def boost(length: float) -> np.ndarray:
    """Translation by ``length`` along the ``x1`` axis."""
    ch, sh = math.cosh(length), math.sinh(length)
    return np.array([[ch, sh, 0.0], [sh, ch, 0.0], [0.0, 0.0, 1.0]])


def rotation(theta: float) -> np.ndarray:
    """Counter-clockwise rotation about the origin."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def lorentz_inverse(m) -> np.ndarray:
    return MINKOWSKI @ m.T @ MINKOWSKI


def compact_face_vertices(l0: float, l1: float, l2: float) -> np.ndarray:
    """Place a triangle with slot lengths ``l0 = |v0 v1|, l1 = |v1 v2|, l2 = |v2 v0|``.

    ``v0`` sits at the origin, ``v1`` on the positive ``x1`` axis and the
    vertices run counter-clockwise.  Rows are vertices.
    """
    alpha0 = interior_angle((l1, l2, l0), 0)
    return np.array([ORIGIN, point(l0, 0.0), point(l2, alpha0)])


def cusp_face_vertices(d: float) -> np.ndarray:
    """Place a horocyclic ideal triangle with finite side ``d``.

    The ideal vertex is scaled so both finite vertices lie on its level-1
    horocycle.
    """
    delta = horocyclic_angle(d)
    u = np.array([1.0, math.cos(delta), math.sin(delta)])
    return np.array([ORIGIN, point(d, 0.0), u])


FRAME_DPS = 30


@dataclass(frozen=True)
class FaceFrames:
    """Face-centered placement data of one face.

    ``center`` carries the canonical placement (first corner at the origin)
    to the centered one.  ``slots[k]`` takes the ray from the origin along
    ``x1`` onto slot ``k`` in centered coordinates; for ideal slots the ray
    starts at the finite end.  All three are computed in extended
    precision and rounded once.
    """

    vertices: np.ndarray
    slots: tuple
    center: np.ndarray
    cusp: bool


def _mp_boost(l):
    return mpmath.matrix([[mpmath.cosh(l), mpmath.sinh(l), 0], [mpmath.sinh(l), mpmath.cosh(l), 0], [0, 0, 1]])


def _mp_rotation(t):
    return mpmath.matrix([[1, 0, 0], [0, mpmath.cos(t), -mpmath.sin(t)], [0, mpmath.sin(t), mpmath.cos(t)]])


def _mp_angle(a, b, c):
    # angle opposite a, half-angle form
    s = (a + b + c) / 2
    return 2 * mpmath.atan2(mpmath.sqrt(mpmath.sinh(s - b) * mpmath.sinh(s - c)),
                            mpmath.sqrt(mpmath.sinh(s) * mpmath.sinh(s - a)))


def _mp_lorentz_inverse(m):
    j = mpmath.diag([-1, 1, 1])
    return j * m.T * j


def _mp_center_frame(c, toward):
    # isometry taking the timelike point c to the origin, toward -> positive x1 side
    def dot(x, y):
        return -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
    w = toward + dot(c, toward) * c
    w = w / mpmath.sqrt(dot(w, w))
    n = mpmath.matrix([-(c[1] * w[2] - c[2] * w[1]), c[2] * w[0] - c[0] * w[2], c[0] * w[1] - c[1] * w[0]])
    n = n / mpmath.sqrt(dot(n, n))
    f = mpmath.matrix(3, 3)
    for i in range(3):
        f[i, 0], f[i, 1], f[i, 2] = c[i], w[i], n[i]
    if mpmath.det(f) < 0:
        for i in range(3):
            f[i, 2] = -f[i, 2]
    return _mp_lorentz_inverse(f)


def _to_float(m) -> np.ndarray:
    return np.array(m.tolist(), dtype=float)


def face_frames(lengths: Sequence[float], cusp: bool = False) -> FaceFrames:
    """Centered vertices and slot frames for a compact or horocyclic face."""
    with mpmath.workdps(FRAME_DPS):
        origin = mpmath.matrix([1, 0, 0])
        if cusp:
            d = mpmath.mpf(lengths[0])
            delta = mpmath.asin(1 / mpmath.cosh(d / 2))
            canon = [_mp_boost(0), _mp_boost(d) * _mp_rotation(mpmath.pi - delta), _mp_rotation(delta)]
            ideal = mpmath.matrix([1, mpmath.cos(delta), mpmath.sin(delta)])
            finite = [origin, canon[1] * origin]
        else:
            l0, l1, l2 = (mpmath.mpf(x) for x in lengths)
            a1 = _mp_angle(l2, l0, l1)
            a2 = _mp_angle(l0, l1, l2)
            e1 = _mp_boost(l0) * _mp_rotation(mpmath.pi - a1)
            e2 = e1 * _mp_boost(l1) * _mp_rotation(mpmath.pi - a2)
            canon = [_mp_boost(0), e1, e2]
            finite = [f * origin for f in canon]
        total = finite[0]
        for v in finite[1:]:
            total = total + v
        c = total / mpmath.sqrt(-(-total[0] ** 2 + total[1] ** 2 + total[2] ** 2))
        center = _mp_center_frame(c, finite[0])
        slots = tuple(_to_float(center * f) for f in canon)
        verts = [center * v for v in finite]
        if cusp:
            verts.append(center * ideal)
        vertices = np.array([[float(x) for x in v] for v in verts])
        return FaceFrames(vertices, slots, _to_float(center), cusp)


def slot_gluing(ff: FaceFrames, k: int, k_len, fg: FaceFrames, j: int) -> np.ndarray:
    """Isometry carrying centered face ``g`` onto the far side of slot ``k`` of ``f``.

    Compact slots are glued end to start; ideal slots match their rays.
    """
    if ff.cusp and k > 0:
        return ff.slots[k] @ lorentz_inverse(fg.slots[j])
    flip = boost(k_len) @ rotation(math.pi)
    return ff.slots[k] @ flip @ lorentz_inverse(fg.slots[j])


def place_adjacent(placed: np.ndarray, slot: int, lengths: Sequence[float], new_slot: int):
    """Place a neighboring face copy across ``slot`` of an already placed face.

    Parameters
    ----------
    placed : (3, 3) array
        Vertices of the placed face, rows in counter-clockwise order; row 2
        of a horocyclic triangle is its ideal vertex.
    slot : int
        Slot ``k`` of the placed face, the edge from vertex ``k`` to ``k+1``.
    lengths : sequence of float
        Slot lengths of the new face: three for a compact face, one for a
        horocyclic triangle.
    new_slot : int
        Slot of the new face glued to ``slot``.

    Returns
    -------
    vertices : (3, 3) array
    isometry : (3, 3) array
        Lorentz matrix carrying the canonical placement to ``vertices``.
    """
    canonical = (compact_face_vertices(*lengths) if len(lengths) == 3
                 else cusp_face_vertices(lengths[0]))
    a, b = placed[slot], placed[(slot + 1) % 3]
    c, d = canonical[new_slot], canonical[(new_slot + 1) % 3]
    if not (is_ideal(a) or is_ideal(b) or is_ideal(c) or is_ideal(d)):
        mismatch = abs(distance(a, b) - distance(c, d))
        if mismatch > 1e-9 * max(1.0, distance(a, b)):
            raise PlacementError(f"shared edge lengths differ by {mismatch:.3e}")
    # glue orientation-reversingly: c -> b, d -> a
    if not is_ideal(a) and not is_ideal(d):
        iso = segment_isometry(d, c, a, b)
    elif not is_ideal(b) and not is_ideal(c):
        iso = segment_isometry(c, d, b, a)
    else:
        raise PlacementError("ideal slots must be glued finite end to finite end")
    verts = canonical @ iso.T
    for i in range(3):
        if not is_ideal(canonical[i]):
            verts[i] = normalize(verts[i])
    return verts, iso
