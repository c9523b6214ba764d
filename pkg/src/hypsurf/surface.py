"""Triangulated surfaces with a single finite vertex and edge-length coordinates.

A surface is glued from compact triangles and horocyclic ideal triangles
("cusp faces").  Slot ``k`` of a face is its edge from corner ``k`` to
corner ``k + 1``; corners run counter-clockwise.  A cusp face has its
compact edge in slot 0 and its ideal vertex at corner 2, so slots 1 and 2
are its two infinite edges.

Compact slots are glued by sharing an edge id.  Infinite edges are glued
along the cusp cycles: within a cycle ``(f_0, ..., f_{k-1})`` slot 1 of
``f_i`` meets slot 2 of ``f_{i+1}``.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from . import hypgeom as hg
from .errors import CoefficientDegenerate, DomainError, PlacementError, ValidationError

TWO_PI = 2.0 * math.pi
MEMBERSHIP_TOL = 1e-10
PROJECTION_TOL = 1e-12
COEFFICIENT_TOL = 1e-10

COMPACT = "compact"
CUSP = "cusp"


@dataclass(frozen=True)
class Face:
    kind: str
    edges: tuple

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def nslots(self) -> int:
        return 3

    def is_cusp(self) -> bool:
        return self.kind == CUSP

    def slot_edge(self, slot: int) -> Optional[str]:
        """Compact edge id in ``slot``, or None for an infinite edge."""
        if self.kind == CUSP:
            return self.edges[0] if slot == 0 else None
        return self.edges[slot]

    def finite_corners(self) -> tuple:
        return (0, 1) if self.kind == CUSP else (0, 1, 2)


def compact(*edges) -> Face:
    return Face(COMPACT, edges)


def cusp(edge) -> Face:
    return Face(CUSP, (edge,))


@dataclass(frozen=True)
class CombTriangulation:
    """Combinatorial triangulation: faces, compact edge ids and cusp cycles."""

    faces: tuple
    cusp_cycles: tuple = ()
    face_names: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "faces", tuple(self.faces))
        object.__setattr__(self, "cusp_cycles", tuple(tuple(c) for c in self.cusp_cycles))
        if self.face_names is not None:
            object.__setattr__(self, "face_names", tuple(self.face_names))

    # -- construction -----------------------------------------------------

    @classmethod
    def from_gluing(cls, kinds: Sequence[str], gluing: Mapping) -> "CombTriangulation":
        """Build from face kinds and an explicit slot involution ``{(f, s): (g, t)}``."""
        def slot_kind(f, s):
            return "ideal" if kinds[f] == CUSP and s != 0 else "compact"

        slots = [(f, s) for f in range(len(kinds)) for s in range(3)]
        for fs in slots:
            if fs not in gluing:
                raise ValidationError("slot is not glued", fs)
            partner = gluing[fs]
            if partner == fs:
                raise ValidationError("slot glued to itself", fs)
            if gluing.get(partner) != fs:
                raise ValidationError("gluing is not an involution", fs)
            if slot_kind(*fs) != slot_kind(*partner):
                raise ValidationError("compact slot glued to an ideal slot", (fs, partner))
            if slot_kind(*fs) == "ideal" and fs[1] == partner[1]:
                raise ValidationError("ideal slots must pair slot 1 with slot 2", (fs, partner))

        # edge ids in order of first appearance
        names, count = {}, 0
        for fs in slots:
            if slot_kind(*fs) != "compact" or fs in names:
                continue
            names[fs] = names[gluing[fs]] = f"e{count}"
            count += 1
        faces = []
        for f, kind in enumerate(kinds):
            if kind == CUSP:
                faces.append(cusp(names[(f, 0)]))
            elif kind == COMPACT:
                faces.append(compact(*(names[(f, s)] for s in range(3))))
            else:
                raise ValidationError(f"unknown face kind {kind!r}", f)
        cycles, seen = [], set()
        for f, kind in enumerate(kinds):
            if kind != CUSP or f in seen:
                continue
            cyc, g = [], f
            while g not in seen:
                seen.add(g)
                cyc.append(g)
                g = gluing[(g, 1)][0]
            cycles.append(tuple(cyc))
        return cls(tuple(faces), tuple(cycles))

    # -- derived data -----------------------------------------------------

    @cached_property
    def edge_slots(self) -> dict:
        """Compact edge id -> list of ``(face, slot)`` occurrences."""
        occ = {}
        for f, face in enumerate(self.faces):
            for s in range(3):
                e = face.slot_edge(s)
                if e is not None:
                    occ.setdefault(e, []).append((f, s))
        return occ

    @cached_property
    def gluing(self) -> dict:
        """Slot involution; slots that cannot be paired are left out."""
        glue = {}
        for e, occ in self.edge_slots.items():
            if len(occ) == 2:
                glue[occ[0]] = occ[1]
                glue[occ[1]] = occ[0]
        for cyc in self.cusp_cycles:
            k = len(cyc)
            for i, f in enumerate(cyc):
                g = cyc[(i + 1) % k]
                glue[(f, 1)] = (g, 2)
                glue[(g, 2)] = (f, 1)
        return glue

    @property
    def compact_edges(self) -> tuple:
        return tuple(self.edge_slots)

    def n_cusp_faces(self) -> int:
        return sum(1 for f in self.faces if f.is_cusp())

    def face_label(self, f: int) -> str:
        return self.face_names[f] if self.face_names else f"F{f}"

    def corner_rotation(self) -> dict:
        """Successor map on finite corners ``(face, corner)`` around the vertex."""
        glue = self.gluing
        rot = {}
        for f, face in enumerate(self.faces):
            for k in face.finite_corners():
                partner = glue.get((f, k))
                if partner is not None:
                    g, j = partner
                    rot[(f, k)] = (g, (j + 1) % 3)
        return rot

    # -- checks -----------------------------------------------------------

    def validate(self) -> tuple:
        """Check every invariant; return ``(genus, cusps)``."""
        if not self.faces:
            raise ValidationError("triangulation has no faces")
        for f, face in enumerate(self.faces):
            want = {COMPACT: 3, CUSP: 1}.get(face.kind)
            if want is None:
                raise ValidationError(f"unknown face kind {face.kind!r}", self.face_label(f))
            if len(face.edges) != want:
                raise ValidationError(f"{face.kind} face needs {want} edge ids", self.face_label(f))
        for e, occ in self.edge_slots.items():
            if len(occ) != 2:
                where = ", ".join(f"{self.face_label(f)}:{s}" for f, s in occ)
                raise ValidationError(f"edge {e!r} used in {len(occ)} slot(s), expected 2", where)
        in_cycles = Counter(f for c in self.cusp_cycles for f in c)
        for f, count in in_cycles.items():
            if not 0 <= f < len(self.faces):
                raise ValidationError("cusp cycle refers to a missing face", f)
            if not self.faces[f].is_cusp():
                raise ValidationError("compact slot glued to an ideal slot", self.face_label(f))
            if count != 1:
                raise ValidationError("cusp face appears in several cusp cycles", self.face_label(f))
        for f, face in enumerate(self.faces):
            if face.is_cusp() and f not in in_cycles:
                raise ValidationError("cusp face missing from the cusp cycles", self.face_label(f))
        if any(len(c) == 0 for c in self.cusp_cycles):
            raise ValidationError("empty cusp cycle")

        rot = self.corner_rotation()
        start = next(iter(rot))
        orbit, c = 1, rot[start]
        while c != start:
            orbit += 1
            c = rot[c]
        if orbit != len(rot):
            raise ValidationError(
                f"corners form more than one vertex ({orbit} of {len(rot)} corners around the first)")

        n = len(self.cusp_cycles)
        e_compact = len(self.edge_slots)
        e_ideal = self.n_cusp_faces()
        chi = 1 + n - (e_compact + e_ideal) + len(self.faces)
        if chi % 2:
            raise ValidationError(f"odd Euler characteristic {chi}")
        g = (2 - chi) // 2
        if g < 0 or 2 - 2 * g - n >= 0:
            raise ValidationError(f"(g, n) = ({g}, {n}) is not hyperbolic")
        return g, n


def validate(T: CombTriangulation) -> tuple:
    return T.validate()


# ---------------------------------------------------------------------------
# surfaces with lengths
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MarkedSurface:
    """A triangulation together with a positive length for every compact edge."""

    triangulation: CombTriangulation
    lengths: Mapping = field(default_factory=dict)
    name: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "lengths", {k: float(v) for k, v in self.lengths.items()})
        missing = set(self.triangulation.edge_slots) - set(self.lengths)
        if missing:
            raise DomainError(f"no length for edge(s) {sorted(missing)}")

    @property
    def faces(self):
        return self.triangulation.faces

    @property
    def edges(self) -> tuple:
        return tuple(e for e in self.lengths if e in self.triangulation.edge_slots)

    def with_lengths(self, updates: Mapping) -> "MarkedSurface":
        new = dict(self.lengths)
        new.update(updates)
        return MarkedSurface(self.triangulation, new, self.name)

    def slot_lengths(self, f: int) -> tuple:
        face = self.faces[f]
        return tuple(self.lengths[e] for e in face.edges)

    def check_domain(self) -> None:
        for e in self.edges:
            if not self.lengths[e] > 0:
                raise DomainError(f"edge {e!r} has non-positive length {self.lengths[e]}")
        for f, face in enumerate(self.faces):
            if face.kind == COMPACT:
                a, b, c = self.slot_lengths(f)
                if not (a < b + c and b < a + c and c < a + b):
                    raise DomainError(
                        f"face {self.triangulation.face_label(f)} violates the triangle inequality: "
                        f"{(a, b, c)}")

    def in_domain(self) -> bool:
        try:
            self.check_domain()
        except DomainError:
            return False
        return True

    def shape(self, f: int) -> hg.TriangleShape:
        return hg.TriangleShape(*self.slot_lengths(f))

    @cached_property
    def canonical(self) -> tuple:
        """Canonical vertex placement of every face (rows are corners)."""
        out = []
        for f, face in enumerate(self.faces):
            lens = self.slot_lengths(f)
            if face.kind == CUSP:
                out.append(hg.cusp_face_vertices(lens[0]))
            else:
                out.append(hg.compact_face_vertices(*lens))
        return tuple(out)

    def place_across(self, f: int, verts: np.ndarray, slot: int):
        """Place the neighbor of face ``f`` (at ``verts``) across ``slot``.

        Returns ``(g, j, verts_g)``, where ``j`` is the neighbor's slot.
        """
        g, j = self.triangulation.gluing[(f, slot)]
        if verts is self.canonical[f]:
            fr = self.frames
            iso = hg.lorentz_inverse(fr[f].center) @ self.gluing_maps[(f, slot)][2]
            new = fr[g].vertices @ iso.T
            for i in self.faces[g].finite_corners():
                new[i] = hg.normalize(new[i])
            return g, j, new
        canon = self.canonical[g]
        a, b = verts[slot], verts[(slot + 1) % 3]
        c, d = canon[j], canon[(j + 1) % 3]
        if not hg.is_ideal(a) and not hg.is_ideal(d):
            iso = hg.segment_isometry(d, c, a, b)
        elif not hg.is_ideal(b) and not hg.is_ideal(c):
            iso = hg.segment_isometry(c, d, b, a)
        else:
            raise PlacementError("ideal slots must be glued finite end to finite end")
        new = canon @ iso.T
        for i in self.faces[g].finite_corners():
            new[i] = hg.normalize(new[i])
        return g, j, new

    @cached_property
    def frames(self) -> tuple:
        """Face-centered placement data, one :class:`FaceFrames` per face."""
        return tuple(hg.face_frames(self.slot_lengths(f), face.kind == CUSP)
                     for f, face in enumerate(self.faces))

    @cached_property
    def gluing_maps(self) -> dict:
        """``(f, slot) -> (g, j, M)`` with ``M`` carrying the centered copy of
        ``g`` onto its position next to the centered copy of ``f``."""
        out = {}
        fr = self.frames
        for (f, slot), (g, j) in self.triangulation.gluing.items():
            e = self.faces[f].slot_edge(slot)
            length = self.lengths[e] if e is not None else None
            out[(f, slot)] = (g, j, hg.slot_gluing(fr[f], slot, length, fr[g], j))
        return out

    def placed_vertices(self, f: int, iso: np.ndarray) -> np.ndarray:
        """Vertices of the copy of face ``f`` obtained by applying ``iso`` to its centered copy."""
        out = self.frames[f].vertices @ iso.T
        for i in self.faces[f].finite_corners():
            out[i] = hg.normalize(out[i])
        return out

    def corner_isometry(self, f: int, corner: int) -> np.ndarray:
        """Isometry placing face ``f`` with the given finite corner at the origin."""
        if corner not in self.faces[f].finite_corners():
            raise PlacementError(f"corner {corner} of face {f} is ideal")
        return hg.lorentz_inverse(self.frames[f].slots[corner])

    def is_member(self, tol: float = MEMBERSHIP_TOL) -> bool:
        return self.in_domain() and abs(angle_sum(self) - TWO_PI) <= tol


# ---------------------------------------------------------------------------
# angle sum and its gradient
# ---------------------------------------------------------------------------


def corner_angle(S: MarkedSurface, f: int, k: int) -> float:
    face = S.faces[f]
    if face.kind == CUSP:
        return hg.horocyclic_angle(S.slot_lengths(f)[0])
    return hg.interior_angle(S.slot_lengths(f), (k + 1) % 3)


def angle_sum(S: MarkedSurface) -> float:
    """Total corner angle at the marked vertex."""
    S.check_domain()
    by_corner = 0.0
    by_area = 0.0
    for f, face in enumerate(S.faces):
        if face.kind == CUSP:
            d = S.slot_lengths(f)[0]
            by_corner += 2.0 * hg.horocyclic_angle(d)
            by_area += math.pi - hg.horocyclic_triangle_area(d)
        else:
            lens = S.slot_lengths(f)
            by_corner += sum(hg.angles(lens))
            by_area += math.pi - hg.triangle_area(lens)
    assert abs(by_corner - by_area) <= 1e-12, (by_corner, by_area)
    return by_corner


def residual(S: MarkedSurface) -> float:
    return angle_sum(S) - TWO_PI


def edge_coefficients(S: MarkedSurface) -> dict:
    """Derivative of total face area in each compact edge length.

    The angle sum decreases at exactly this rate, so a positive
    coefficient means lengthening the edge lowers the angle sum.
    """
    S.check_domain()
    coef = {e: 0.0 for e in S.edges}
    for f, face in enumerate(S.faces):
        if face.kind == CUSP:
            e = face.edges[0]
            coef[e] += hg.horocyclic_area_partial(S.lengths[e])
            continue
        shape = S.shape(f)
        data = hg.circumdata(shape)
        for s, e in enumerate(face.edges):
            coef[e] += hg.area_partial(shape, s, data)
    return coef


def _feasible_interval(S: MarkedSurface, group: tuple) -> tuple:
    """Open interval of common values for ``group`` keeping every face in U."""
    lo, hi = 0.0, math.inf
    gset = set(group)
    for f, face in enumerate(S.faces):
        if face.kind == CUSP or not gset.intersection(face.edges):
            continue
        lens = S.slot_lengths(f)
        for i in range(3):
            # l_i - l_j - l_k < 0, linear in the shared value x
            a, const = 0, 0.0
            for idx, sign in ((i, 1), ((i + 1) % 3, -1), ((i + 2) % 3, -1)):
                if face.edges[idx] in gset:
                    a += sign
                else:
                    const += sign * lens[idx]
            if a > 0:
                hi = min(hi, -const / a)
            elif a < 0:
                lo = max(lo, -const / a)
            elif const >= 0:
                return (math.nan, math.nan)
    return lo, hi


def solve_dependent_length(S: MarkedSurface, edge: Union[str, Iterable[str]],
                           target: float = TWO_PI) -> MarkedSurface:
    """Adjust one edge (or a group sharing one value) so the angle sum hits ``target``.

    The root closest to the current value is found by expanding a bracket
    from it in the Newton direction and refining with Brent's method.
    """
    group = (edge,) if isinstance(edge, str) else tuple(edge)
    x0 = S.lengths[group[0]]
    if any(abs(S.lengths[e] - x0) > 1e-9 * x0 for e in group):
        S = S.with_lengths({e: x0 for e in group})

    def f(x):
        return angle_sum(S.with_lengths({e: x for e in group})) - target

    f0 = f(x0)
    if abs(f0) <= PROJECTION_TOL:
        return S
    coef = edge_coefficients(S)
    slope = -sum(coef[e] for e in group)
    if abs(slope) <= COEFFICIENT_TOL:
        raise CoefficientDegenerate(
            f"angle sum is stationary in {', '.join(group)} (slope {slope:.3e})")
    lo, hi = _feasible_interval(S, group)
    if not lo < x0 < hi:
        raise DomainError(f"current value of {group} lies outside U")

    direction = 1.0 if -f0 / slope > 0 else -1.0
    step = max(abs(f0 / slope), 1e-12)
    a, fa = x0, f0
    for _ in range(200):
        b = a + direction * step
        if direction > 0 and b >= hi:
            b = a + 0.5 * (hi - a) if math.isfinite(hi) else a + step
        if direction < 0 and b <= lo:
            b = a - 0.5 * (a - lo)
        if b == a:
            break
        try:
            fb = f(b)
        except DomainError:
            # rounding put b on the boundary of U; tighten and retry
            if direction > 0:
                hi = b
            else:
                lo = b
            continue
        if fa * fb <= 0:
            lo_b, hi_b = (a, b) if a < b else (b, a)
            x = brentq(f, lo_b, hi_b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
            out = S.with_lengths({e: x for e in group})
            if abs(residual(out)) > PROJECTION_TOL:
                raise DomainError(f"projection residual {residual(out):.3e} too large")
            return out
        a, fa = b, fb
        step *= 2.0
    raise DomainError(f"no root for {group} inside U")


# ---------------------------------------------------------------------------
# arcs in based homotopy classes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SlotPath:
    """A path in the dual graph from one corner of the marked vertex to another.

    ``crossings`` lists ``(face, slot)`` pairs, each naming the slot of the
    current face that is crossed next.
    """

    start_face: int
    start_corner: int
    crossings: tuple = ()
    end_corner: int = 0

    def __post_init__(self):
        object.__setattr__(self, "crossings", tuple(tuple(c) for c in self.crossings))


class PathError(DomainError):
    pass


def develop_path(S: MarkedSurface, path: SlotPath):
    """Place the faces along ``path``; return the list of ``(face, vertices)``.

    The start corner is placed at the origin.
    """
    f = path.start_face
    if path.start_corner not in S.faces[f].finite_corners():
        raise PathError("start corner is not the marked vertex")
    iso = S.corner_isometry(f, path.start_corner)
    placed = [(f, S.placed_vertices(f, iso))]
    for face, slot in path.crossings:
        if face != f:
            raise PathError(f"path is disconnected: expected face {f}, got {face}")
        f, _, m = S.gluing_maps[(f, slot)]
        iso = hg.reorthonormalize(iso @ m)
        placed.append((f, S.placed_vertices(f, iso)))
    return placed


def arc_length_in_class(S: MarkedSurface, path: SlotPath) -> float:
    """Length of the geodesic arc at the marked vertex in the class of ``path``."""
    placed = develop_path(S, path)
    f_end, verts = placed[-1]
    if path.end_corner not in S.faces[f_end].finite_corners():
        raise PathError("end corner is not the marked vertex")
    start = placed[0][1][path.start_corner]
    return hg.distance(start, verts[path.end_corner])
