"""Development of the universal cover, injectivity radius and Delaunay tessellations.

Everything here works at the marked vertex.  A lift of the vertex is
a vertex of some placed face copy; the development grows breadth-first
across every slot whose segment comes within the certification radius
of the base lift, so the lifts it reports within that radius are
complete.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import hypgeom as hg
from .errors import BudgetExceeded, PlacementError
from .surface import CombTriangulation, MarkedSurface, SlotPath, compact, cusp

log = logging.getLogger(__name__)

DEFAULT_MAX_FACES = 50_000
COCIRCULAR_TOL = 1e-9
RELATIVE_TIE = 1e-9


# ---------------------------------------------------------------------------
# development
# ---------------------------------------------------------------------------


@dataclass
class Placement:
    face: int
    isometry: np.ndarray
    vertices: np.ndarray
    parent: Optional[int]
    via_slot: Optional[int]


@dataclass(frozen=True)
class Lift:
    position: np.ndarray = field(compare=False)
    distance: float
    path: SlotPath


class _PointIndex:
    """Deduplicates developed points by hyperbolic distance.

    Distinct lifts of one vertex are at least twice the injectivity
    radius apart, so a loose tolerance is safe and absorbs the rounding
    drift of long isometry products.
    """

    def __init__(self, tol=1e-6):
        self.tol = tol
        self.points = {}

    def find(self, p, tag=None):
        pts = self.points.get(tag)
        if not pts:
            return None
        diff = np.abs(np.asarray(pts[0]) - p).max(axis=1)
        hit = np.flatnonzero(diff < self.tol * p[0])
        return pts[1][hit[0]] if hit.size else None

    def add(self, p, val, tag=None):
        pts = self.points.setdefault(tag, ([], []))
        pts[0].append(p)
        pts[1].append(val)


@dataclass
class DevelopedNeighborhood:
    surface: MarkedSurface
    radius: float
    root: tuple
    base: np.ndarray
    placements: list
    frontier: list
    lifts: list

    def path_to(self, index: int) -> tuple:
        crossings = []
        while self.placements[index].parent is not None:
            pl = self.placements[index]
            parent = self.placements[pl.parent]
            crossings.append((parent.face, pl.via_slot))
            index = pl.parent
        return tuple(reversed(crossings))

    def frontier_bound(self) -> float:
        return min((b for _, _, b in self.frontier), default=math.inf)


def _apply(S: MarkedSurface, f: int, iso: np.ndarray) -> np.ndarray:
    return S.placed_vertices(f, iso)


def develop(S: MarkedSurface, R: float, root: tuple = (0, 0),
            max_faces: int = DEFAULT_MAX_FACES) -> DevelopedNeighborhood:
    """Place every face copy meeting the closed ball of radius ``R`` about the base lift."""
    S.check_domain()
    maps = S.gluing_maps
    root_iso = S.corner_isometry(*root)
    base_verts = _apply(S, root[0], root_iso)
    base = base_verts[root[1]]
    placements = [Placement(root[0], root_iso, base_verts, None, None)]
    faces_seen = _PointIndex()
    faces_seen.add(base_verts[0], 0, tag=root[0])
    frontier = []
    queue = [0]
    head = 0
    while head < len(queue):
        idx = queue[head]
        head += 1
        pl = placements[idx]
        for slot in range(3):
            a, b = pl.vertices[slot], pl.vertices[(slot + 1) % 3]
            dist = hg.point_segment_distance(base, a, b)
            if dist > R:
                frontier.append((idx, slot, dist))
                continue
            g, _, m = maps[(pl.face, slot)]
            iso = hg.reorthonormalize(pl.isometry @ m)
            verts = _apply(S, g, iso)
            if faces_seen.find(verts[0], tag=g) is not None:
                continue
            if len(placements) >= max_faces:
                raise BudgetExceeded(f"development exceeded {max_faces} faces at R={R:.4g}")
            placements.append(Placement(g, iso, verts, idx, slot))
            faces_seen.add(verts[0], len(placements) - 1, tag=g)
            queue.append(len(placements) - 1)

    nb = DevelopedNeighborhood(S, R, root, base, placements, frontier, [])
    seen = _PointIndex()
    for i, pl in enumerate(placements):
        for corner in S.faces[pl.face].finite_corners():
            p = pl.vertices[corner]
            if seen.find(p) is not None:
                continue
            d = hg.distance(base, p)
            path = SlotPath(root[0], root[1], nb.path_to(i), corner)
            seen.add(p, len(nb.lifts))
            nb.lifts.append(Lift(p, d, path))
    nb.lifts.sort(key=lambda l: l.distance)
    return nb


# ---------------------------------------------------------------------------
# injectivity radius
# ---------------------------------------------------------------------------


@dataclass
class InjradResult:
    radius: float
    witnesses: list
    neighborhood: DevelopedNeighborhood

    @property
    def n_arcs(self) -> int:
        # every arc has two lifts at the base, one per orientation
        return len(self.witnesses) // 2


def injectivity_radius(S: MarkedSurface, root: tuple = (0, 0), tol: float = 1e-9,
                       max_faces: int = DEFAULT_MAX_FACES) -> InjradResult:
    """Half the distance from the base lift to the nearest other lift.

    Every compact edge is an arc at the vertex, so a ball of radius equal
    to the shortest edge already contains a non-trivial lift; the
    development at that radius certifies the minimum.
    """
    shortest = min(S.lengths[e] for e in S.edges)
    R = shortest * (1 + 1e-9) + 1e-9
    while True:
        nb = develop(S, R, root, max_faces)
        others = [l for l in nb.lifts if l.distance > 1e-9]
        if others:
            break
        R *= 2.0
    r = 0.5 * others[0].distance
    cutoff = 2 * r + max(tol, tol * 2 * r)
    witnesses = [l for l in others if l.distance <= cutoff]
    return InjradResult(r, witnesses, nb)


# ---------------------------------------------------------------------------
# local Delaunay test
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeTest:
    edge: str
    margin: float
    flippable: bool
    kind: str          # "compact-compact", "compact-cusp", "cusp-cusp"
    new_length: Optional[float] = None


def _quad(S: MarkedSurface, edge: str):
    """Both faces of ``edge`` with the midpoint of the edge at the origin."""
    (f, k), _ = S.triangulation.edge_slots[edge]
    g, j, m = S.gluing_maps[(f, k)]
    mid = hg.lorentz_inverse(S.frames[f].slots[k] @ hg.boost(0.5 * S.lengths[edge]))
    return f, k, _apply(S, f, mid), g, j, _apply(S, g, mid @ m)


def edge_test(S: MarkedSurface, edge: str) -> EdgeTest:
    f, k, vf, g, j, vg = _quad(S, edge)
    a, b = vf[k], vf[(k + 1) % 3]
    of, og = vf[(k + 2) % 3], vg[(j + 2) % 3]
    cusp_f, cusp_g = S.faces[f].is_cusp(), S.faces[g].is_cusp()
    if cusp_f and cusp_g:
        m = hg.circumplane(*vf)
        return EdgeTest(edge, hg.incircle_margin(m, a, og), False, "cusp-cusp")
    if cusp_f or cusp_g:
        horo, other = (vf, og) if cusp_f else (vg, of)
        m = hg.circumplane(*horo)
        margin = hg.incircle_margin(m, a, other)
        return EdgeTest(edge, margin, f != g, "compact-cusp")
    m1 = hg.incircle_margin(hg.circumplane(*vf), a, og)
    m2 = hg.incircle_margin(hg.circumplane(*vg), a, of)
    margin = min(m1, m2)
    convex = (hg.orientation(of, og, a) > 0) != (hg.orientation(of, og, b) > 0)
    return EdgeTest(edge, margin, convex and f != g, "compact-compact", hg.distance(of, og))


def is_locally_delaunay(S: MarkedSurface, edge: str, tol: float = COCIRCULAR_TOL):
    """``(passes, margin)`` for the empty-circumdisk test across ``edge``."""
    t = edge_test(S, edge)
    return t.margin >= -tol, t.margin


# ---------------------------------------------------------------------------
# flips
# ---------------------------------------------------------------------------


def _fresh_edge(S: MarkedSurface, stem="g") -> str:
    n = 0
    while f"{stem}{n}" in S.lengths:
        n += 1
    return f"{stem}{n}"


def _replace_in_cycles(cycles, old: tuple, new: tuple):
    """Replace the consecutive run ``old`` in one cusp cycle by ``new``."""
    out = []
    done = False
    for cyc in cycles:
        if done or old[0] not in cyc:
            out.append(cyc)
            continue
        i = cyc.index(old[0])
        rotated = cyc[i:] + cyc[:i]
        if tuple(rotated[:len(old)]) != tuple(old):
            raise PlacementError(f"faces {old} are not consecutive in cusp cycle {cyc}")
        out.append(tuple(new) + tuple(rotated[len(old):]))
        done = True
    if not done:
        raise PlacementError(f"face {old[0]} is in no cusp cycle")
    return tuple(out)


def _rebuild(S: MarkedSurface, faces, cycles, lengths) -> MarkedSurface:
    T = CombTriangulation(tuple(faces), cycles, S.triangulation.face_names)
    used = set(T.edge_slots)
    return MarkedSurface(T, {e: v for e, v in lengths.items() if e in used}, S.name)


def flip(S: MarkedSurface, edge: str) -> MarkedSurface:
    """Replace a compact edge by the other diagonal of its developed quadrilateral.

    Between two compact faces the new diagonal is compact.  Between a
    compact face and a cusp face the new diagonal runs to the ideal point
    and both new faces are cusp faces.
    """
    f, k, vf, g, j, vg = _quad(S, edge)
    if f == g:
        raise PlacementError(f"edge {edge!r} borders the same face twice")
    F, G = S.faces[f], S.faces[g]
    faces = list(S.faces)
    lengths = dict(S.lengths)
    cycles = S.triangulation.cusp_cycles
    if F.is_cusp() and G.is_cusp():
        raise PlacementError(f"edge {edge!r} joins two cusp faces and cannot flip")
    if not F.is_cusp() and not G.is_cusp():
        # F = (a, b, c), G = (b, a, d) -> (a, d, c), (d, b, c)
        fe, ge = F.edges, G.edges
        faces[f] = compact(ge[(j + 1) % 3], edge, fe[(k + 2) % 3])
        faces[g] = compact(ge[(j + 2) % 3], fe[(k + 1) % 3], edge)
        lengths[edge] = hg.distance(vf[(k + 2) % 3], vg[(j + 2) % 3])
        return _rebuild(S, faces, cycles, lengths)
    if F.is_cusp():
        f, k, g, j = g, j, f, k
        F, G = G, F
    # F = (a, b, c) compact, G = (b, a, inf) cusp -> (b, c, inf), (c, a, inf)
    fe = F.edges
    faces[f] = cusp(fe[(k + 1) % 3])
    faces[g] = cusp(fe[(k + 2) % 3])
    cycles = _replace_in_cycles(cycles, (g,), (f, g))
    del lengths[edge]
    return _rebuild(S, faces, cycles, lengths)


def merge_cusp_faces(S: MarkedSurface, p: int, q: int, name: Optional[str] = None) -> MarkedSurface:
    """Replace the infinite edge between consecutive cusp faces ``p -> q`` by a compact chord.

    ``p = (b, c, inf)`` and ``q = (c, a, inf)`` become the compact face
    ``(a, b, c)`` (at index ``p``) and the cusp face ``(b, a, inf)`` (at ``q``).
    """
    T = S.triangulation
    if T.gluing.get((p, 1)) != (q, 2):
        raise PlacementError(f"cusp faces {p} and {q} are not consecutive")
    vp = S.canonical[p]
    _, _, vq = S.place_across(p, vp, 1)
    new_len = hg.distance(vq[1], vp[0])
    name = name or _fresh_edge(S)
    faces = list(S.faces)
    pe, qe = S.faces[p].edges[0], S.faces[q].edges[0]
    faces[p] = compact(name, pe, qe)
    faces[q] = cusp(name)
    if p == q:
        raise PlacementError("a monogon has no infinite edge to remove")
    cycles = _replace_in_cycles(T.cusp_cycles, (p, q), (q,))
    lengths = dict(S.lengths)
    lengths[name] = new_len
    return _rebuild(S, faces, cycles, lengths)


# ---------------------------------------------------------------------------
# Delaunay tessellation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cell:
    faces: tuple
    kind: str           # "compact" or "horocyclic"
    sides: int          # boundary edges (per period for horocyclic cells)
    boundary: tuple     # (face, slot) of each Delaunay edge slot on the boundary

    @property
    def label(self) -> str:
        if self.kind == "horocyclic":
            return "monogon" if self.sides == 1 else f"horocyclic({self.sides})"
        return f"polygon({self.sides})"

    def is_triangle(self) -> bool:
        return self.kind == "compact" and self.sides == 3

    def is_monogon(self) -> bool:
        return self.kind == "horocyclic" and self.sides == 1


@dataclass
class DelaunayTessellation:
    surface: MarkedSurface
    tests: dict
    is_delaunay: dict
    cells: list
    flips: int = 0
    unresolved: tuple = ()

    def delaunay_edges(self) -> tuple:
        return tuple(e for e in self.surface.edges if self.is_delaunay[e])

    def min_margin(self) -> float:
        return min((self.tests[e].margin for e in self.delaunay_edges()), default=math.inf)

    def cell_of(self, face: int) -> Cell:
        for c in self.cells:
            if face in c.faces:
                return c
        raise KeyError(face)


def edge_tests(S: MarkedSurface) -> dict:
    return {e: edge_test(S, e) for e in S.edges}


def group_cells(S: MarkedSurface, tests: dict, tol: float = COCIRCULAR_TOL):
    T = S.triangulation
    parent = list(range(len(S.faces)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    is_del = {e: tests[e].margin > tol for e in S.edges}
    for e, occ in T.edge_slots.items():
        if not is_del[e]:
            union(occ[0][0], occ[1][0])
    for cyc in T.cusp_cycles:
        for f in cyc:
            union(cyc[0], f)
    groups = {}
    for f in range(len(S.faces)):
        groups.setdefault(find(f), []).append(f)
    cells = []
    for root in sorted(groups):
        fs = tuple(sorted(groups[root]))
        boundary = tuple((f, s) for f in fs for s in range(3)
                         if (e := S.faces[f].slot_edge(s)) is not None and is_del[e])
        kind = "horocyclic" if any(S.faces[f].is_cusp() for f in fs) else "compact"
        cells.append(Cell(fs, kind, len(boundary), boundary))
    return is_del, cells


def delaunay(S: MarkedSurface, tol: float = COCIRCULAR_TOL, max_flips: Optional[int] = None) -> DelaunayTessellation:
    """Flip until every compact edge passes the empty-circumdisk test, then group cells."""
    n_edges = len(S.edges) + S.triangulation.n_cusp_faces()
    cap = max_flips if max_flips is not None else 10 * n_edges * n_edges
    flips = 0
    history = []
    while True:
        tests = edge_tests(S)
        bad = [e for e in S.edges if tests[e].margin < -tol and tests[e].flippable]
        if not bad:
            break
        order = {e: i for i, e in enumerate(S.edges)}
        worst = min(bad, key=lambda e: (tests[e].margin, order[e]))
        if flips >= cap:
            raise BudgetExceeded(f"flip cap {cap} exceeded; last flips: {history[-10:]}")
        history.append((worst, tests[worst].margin))
        S = flip(S, worst)
        flips += 1
    unresolved = tuple(e for e in S.edges if tests[e].margin < -tol)
    if unresolved:
        log.warning("edges failing the Delaunay test cannot be flipped: %s", unresolved)
    is_del, cells = group_cells(S, tests, tol)
    return DelaunayTessellation(S, tests, is_del, cells, flips, unresolved)


# ---------------------------------------------------------------------------
# the local-maximum criterion
# ---------------------------------------------------------------------------


@dataclass
class Verdict:
    ok: bool
    injrad: float
    offending_edges: tuple
    offending_cells: tuple
    tessellation: DelaunayTessellation

    def reason(self) -> str:
        if self.ok:
            return "criterion met"
        parts = []
        if self.offending_edges:
            parts.append("edges longer than 2*injrad: " + ", ".join(self.offending_edges))
        if self.offending_cells:
            parts.append("cells: " + ", ".join(c.label for c in self.offending_cells))
        return "; ".join(parts)


def criterion_check(S: MarkedSurface, tess: Optional[DelaunayTessellation] = None,
                    rel_tol: float = RELATIVE_TIE, injrad: Optional[float] = None) -> Verdict:
    """Every Delaunay edge has length twice the injectivity radius and every
    cell is a triangle or a monogon."""
    if tess is None:
        tess = delaunay(S)
    S = tess.surface
    r = injrad if injrad is not None else injectivity_radius(S).radius
    target = 2.0 * r
    bad_edges = tuple(e for e in tess.delaunay_edges()
                      if abs(S.lengths[e] - target) > rel_tol * target)
    bad_cells = tuple(c for c in tess.cells if not (c.is_triangle() or c.is_monogon()))
    return Verdict(not bad_edges and not bad_cells, r, bad_edges, bad_cells, tess)
