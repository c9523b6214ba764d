"""Injectivity-radius increasing deformations and the ascent driver.

Two flows are used.  Flow A applies when some Delaunay edge is longer
than twice the injectivity radius: every shortest edge grows at unit
rate while one longer Delaunay edge absorbs the angle-sum constraint.
Flow B applies when all Delaunay edges already have length ``2r`` but
some cell is neither a triangle nor a monogon: a diagonal of that cell
shrinks at unit rate and every Delaunay edge grows at a common rate.

The constraint is maintained by projection: after each explicit update
the dependent length is re-solved so the angle sum is exactly ``2*pi``.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import hypgeom as hg
from .developer import (
    COCIRCULAR_TOL,
    RELATIVE_TIE,
    Cell,
    DelaunayTessellation,
    criterion_check,
    delaunay,
    edge_tests,
    flip,
    injectivity_radius,
    merge_cusp_faces,
)
from .errors import (
    CoefficientDegenerate,
    ConvergenceError,
    DomainError,
    FlowError,
    FlowStalled,
    PlacementError,
)
from .surface import (
    COEFFICIENT_TOL,
    CombTriangulation,
    MarkedSurface,
    compact,
    edge_coefficients,
    residual,
    solve_dependent_length,
)

log = logging.getLogger(__name__)

H0 = 1e-3
H_MAX = 0.1
H_MIN = 1e-12
GROWTH = 1.5
MAX_HALVINGS = 12
RESIDUAL_TOL = 1e-12
INJRAD_SLACK = 1e-10
# a dependent edge whose rate would exceed this is treated as degenerate
MAX_DEPENDENT_RATE = 1e6
TRACE_COLUMNS = ("step", "t", "injrad", "min_delaunay_len", "max_delaunay_len",
                 "constraint_residual", "mode", "event")


# ---------------------------------------------------------------------------
# plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FlowPlan:
    """A first-order direction in length space together with its constraint edge(s).

    ``rates`` holds the explicitly driven edges.  ``dependent`` is the edge
    (flow A) or common-valued group (flow B) re-solved after each update;
    its predicted rate is ``dependent_rate``.
    """

    mode: str
    surface: MarkedSurface
    rates: dict
    dependent: tuple
    dependent_rate: float
    special: str
    delaunay_edges: tuple
    coefficients: dict
    watched: tuple = ()

    def velocity(self) -> dict:
        v = {e: 0.0 for e in self.surface.edges}
        v.update(self.rates)
        for e in self.dependent:
            v[e] = self.dependent_rate
        return v

    def constraint_residual(self) -> float:
        """``sum c_j * rate_j``, zero for a direction tangent to the constraint."""
        v = self.velocity()
        return sum(self.coefficients[e] * v[e] for e in v)


def constraint_coefficients(S: MarkedSurface, delaunay_edges=(), check: bool = True) -> dict:
    """Per-edge coefficient ``c_j``; ``dA/dd_j = -c_j``.

    Every Delaunay edge of a Delaunay-compatible triangulation has a
    positive coefficient.  A violation points at a flip or classification
    bug and raises :class:`FlowError` when ``check`` is set.
    """
    coef = edge_coefficients(S)
    if check:
        bad = [e for e in delaunay_edges if not coef[e] > 0.0]
        if bad:
            raise FlowError("non-positive constraint coefficient on Delaunay edge(s) "
                            + ", ".join(f"{e}={coef[e]:.3e}" for e in bad))
    return coef


def _shortest_and_longer(S: MarkedSurface, edges, rel_tol=RELATIVE_TIE):
    lengths = {e: S.lengths[e] for e in edges}
    lo = min(lengths.values())
    shortest = tuple(e for e in edges if lengths[e] <= lo * (1 + rel_tol))
    longer = tuple(e for e in edges if lengths[e] > lo * (1 + rel_tol))
    return lo, shortest, longer


def flow_A_direction(S: MarkedSurface, tess: DelaunayTessellation) -> FlowPlan:
    """Grow every shortest Delaunay edge at unit rate; a longer one compensates."""
    if tess.surface is not S:
        S = tess.surface
    del_edges = tess.delaunay_edges()
    _, shortest, longer = _shortest_and_longer(S, del_edges)
    if not longer:
        raise FlowError("no Delaunay edge is longer than the shortest; use flow B")
    coef = constraint_coefficients(S, del_edges)
    index = {e: i for i, e in enumerate(S.edges)}
    # best-conditioned first: near a diameter the coefficient vanishes and
    # the compensating rate blows up
    candidates = sorted(longer, key=lambda e: (-coef[e], -S.lengths[e], index[e]))
    drive = sum(coef[s] for s in shortest)
    for e in candidates:
        if coef[e] > max(COEFFICIENT_TOL, drive / MAX_DEPENDENT_RATE):
            rate = -drive / coef[e]
            return FlowPlan("A", S, {s: 1.0 for s in shortest}, (e,), rate, e,
                            del_edges, coef, _watched(tess))
    raise CoefficientDegenerate("every longer Delaunay edge has a vanishing coefficient")


def _watched(tess: DelaunayTessellation) -> tuple:
    # edges whose empty-disk test must keep holding during a step
    return tuple(e for e in tess.delaunay_edges() if tess.tests[e].margin > COCIRCULAR_TOL)


# ---------------------------------------------------------------------------
# flow B setup
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BSetup:
    surface: MarkedSurface
    gamma0: str
    t0: int
    t1: int
    cell: Cell
    delaunay_edges: tuple


def _offending_cell(tess: DelaunayTessellation) -> Cell:
    bad = [c for c in tess.cells if not (c.is_triangle() or c.is_monogon())]
    if not bad:
        raise FlowError("no offending cell: every cell is a triangle or a monogon")
    return min(bad, key=lambda c: min(c.faces))


def _fresh_name(S: MarkedSurface, stem: str = "g") -> str:
    n = 0
    while f"{stem}{n}" in S.lengths:
        n += 1
    return f"{stem}{n}"


def _setup_horocyclic(S: MarkedSurface, tess: DelaunayTessellation, cell: Cell) -> BSetup:
    del_edges = tess.delaunay_edges()
    members = set(cell.faces)
    # turn every compact face of the cell into cusp faces
    for _ in range(4 * len(S.faces)):
        target = None
        for e in S.edges:
            if e in del_edges:
                continue
            (f, _), (g, _) = S.triangulation.edge_slots[e]
            if f in members and g in members and S.faces[f].is_cusp() != S.faces[g].is_cusp():
                target = e
                break
        if target is None:
            break
        S = flip(S, target)
    if any(not S.faces[f].is_cusp() for f in members):
        raise FlowError("could not clear compact faces from the horocyclic cell")
    cycle = next(c for c in S.triangulation.cusp_cycles if cell.faces[0] in c)
    if len(cycle) < 2:
        raise FlowError("a monogon has no diagonal to shrink")
    i = cycle.index(min(cycle))
    p, q = cycle[i], cycle[(i + 1) % len(cycle)]
    name = _fresh_name(S)
    S = merge_cusp_faces(S, p, q, name)
    return BSetup(S, name, q, p, cell, del_edges)


def _develop_cell(S: MarkedSurface, cell: Cell, is_del: dict):
    """Boundary polygon of a compact cell, counter-clockwise, in one developed copy."""
    start = cell.faces[0]
    placed = {start: np.eye(3)}
    order = [start]
    for f in order:
        for slot in range(3):
            e = S.faces[f].slot_edge(slot)
            if is_del[e]:
                continue
            g, _, m = S.gluing_maps[(f, slot)]
            if g in placed:
                continue
            placed[g] = hg.reorthonormalize(placed[f] @ m)
            order.append(g)
    sides = []
    for f in order:
        verts = S.placed_vertices(f, placed[f])
        for slot in range(3):
            e = S.faces[f].slot_edge(slot)
            if is_del[e]:
                sides.append((e, verts[slot], verts[(slot + 1) % 3]))
    chain = [sides.pop(0)]
    while sides:
        end = chain[-1][2]
        k = min(range(len(sides)), key=lambda i: np.abs(sides[i][1] - end).max())
        if np.abs(sides[k][1] - end).max() > 1e-6 * max(1.0, abs(end[0])):
            raise PlacementError("cell boundary does not close up")
        chain.append(sides.pop(k))
    return chain, order


def _setup_compact(S: MarkedSurface, tess: DelaunayTessellation, cell: Cell) -> BSetup:
    chain, order = _develop_cell(S, cell, tess.is_delaunay)
    k = len(chain)
    verts = [c[1] for c in chain]
    center = hg.normalize(hg.circumplane(verts[0], verts[1], verts[2]))
    if center[0] < 0:
        center = -center

    def ear_ok(s):
        a, b, c = verts[s], verts[(s + 1) % k], verts[(s + 2) % k]
        side_b = hg.orientation(a, c, b)
        side_o = hg.orientation(a, c, center)
        scale = max(1.0, abs(a[0]) * abs(c[0]) * abs(center[0]))
        return side_b * side_o < 0 or abs(side_o) <= 1e-9 * scale

    s = next((s for s in range(k) if ear_ok(s)), None)
    if s is None:
        raise FlowError("no diagonal separates an ear from the circumcenter")
    chain = chain[s:] + chain[:s]
    verts = verts[s:] + verts[:s]
    sides = [c[0] for c in chain]

    interior = sorted({S.faces[f].slot_edge(j) for f in cell.faces for j in range(3)}
                      - set(sides), key=S.edges.index)
    if len(interior) != k - 3:
        raise FlowError(f"cell with {k} sides has {len(interior)} interior edges")
    diag = {m: interior[m - 2] for m in range(2, k - 1)}
    lengths = dict(S.lengths)
    for m, e in diag.items():
        lengths[e] = hg.distance(verts[0], verts[m])

    def spoke(m):
        # edge from v0 to v_m, oriented either way
        if m == 1:
            return sides[0]
        if m == k - 1:
            return sides[k - 1]
        return diag[m]

    faces = list(S.faces)
    slots = sorted(cell.faces)
    for i in range(1, k - 1):
        faces[slots[i - 1]] = compact(spoke(i), sides[i], spoke(i + 1))
    T = CombTriangulation(tuple(faces), S.triangulation.cusp_cycles, S.triangulation.face_names)
    out = MarkedSurface(T, lengths, S.name)
    return BSetup(out, diag[2], slots[1], slots[0], cell, tess.delaunay_edges())


def flow_B_setup(S: MarkedSurface, tess: Optional[DelaunayTessellation] = None) -> BSetup:
    """Retriangulate the offending cell so a diagonal cuts off a compact triangle.

    In a horocyclic cell the diagonal joins two vertices separated by one
    other vertex.  In a compact cell it cuts off an ear lying on the far
    side of the diagonal from the circumcenter.  In a quadrilateral every
    diagonal is a diameter, so any choice works.
    """
    if tess is None:
        tess = delaunay(S)
    cell = _offending_cell(tess)
    S = tess.surface
    if cell.kind == "horocyclic":
        return _setup_horocyclic(S, tess, cell)
    return _setup_compact(S, tess, cell)


def flow_B_direction(setup: BSetup, watched: tuple = ()) -> FlowPlan:
    """Shrink the diagonal at unit rate; all Delaunay edges share the compensating rate."""
    S = setup.surface
    coef = constraint_coefficients(S, setup.delaunay_edges)
    denom = sum(coef[e] for e in setup.delaunay_edges)
    if not denom > COEFFICIENT_TOL:
        raise FlowError(f"flow B denominator {denom:.3e} is not positive")
    rate = coef[setup.gamma0] / denom
    return FlowPlan("B", S, {setup.gamma0: -1.0}, tuple(setup.delaunay_edges), rate,
                    setup.gamma0, tuple(setup.delaunay_edges), coef, watched)


# ---------------------------------------------------------------------------
# state and stepping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TraceRow:
    step: int
    t: float
    injrad: float
    min_delaunay_len: float
    max_delaunay_len: float
    constraint_residual: float
    mode: str
    event: str

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in TRACE_COLUMNS)


@dataclass
class FlowState:
    surface: MarkedSurface
    t: float = 0.0
    mode: str = ""
    plan: Optional[FlowPlan] = None
    injrad: float = math.nan
    trace: list = field(default_factory=list)
    steps: int = 0


class _Rejected(Exception):
    pass


class _MarginEvent(_Rejected):
    def __init__(self, edges):
        super().__init__("Delaunay event on " + ", ".join(edges))
        self.edges = edges


def _advance(plan: FlowPlan, h: float) -> MarkedSurface:
    """Explicit update by ``h`` followed by projection onto the constraint."""
    S = plan.surface
    upd = {e: S.lengths[e] + h * r for e, r in plan.rates.items()}
    guess = S.lengths[plan.dependent[0]] + h * plan.dependent_rate
    trial = S.with_lengths(upd)
    seeded = trial.with_lengths({e: guess for e in plan.dependent})
    base = seeded if seeded.in_domain() else trial
    try:
        out = solve_dependent_length(base, plan.dependent)
    except (DomainError, ConvergenceError, CoefficientDegenerate) as exc:
        raise _Rejected(f"projection failed: {exc}") from None
    if not out.in_domain():
        raise _Rejected("left the triangle-inequality domain")
    if abs(residual(out)) > RESIDUAL_TOL:
        raise _Rejected(f"angle-sum residual {residual(out):.2e}")
    return out


def _min_margin(plan: FlowPlan, S: MarkedSurface) -> tuple:
    tests = edge_tests(S)
    if not plan.watched:
        return math.inf, None
    e = min(plan.watched, key=lambda e: tests[e].margin)
    return tests[e].margin, e


def _check_margins(plan: FlowPlan, S: MarkedSurface, tol: float):
    tests = edge_tests(S)
    crossed = [e for e in plan.watched if tests[e].margin < -tol]
    if crossed:
        raise _MarginEvent(crossed)


def _land_on_event(plan: FlowPlan, h_bad: float, tol: float):
    """Largest step keeping every watched margin above ``-tol/2``, by bisection."""
    def phi(h):
        return _min_margin(plan, _advance(plan, h))[0] + 0.5 * tol

    lo, hi = 0.0, h_bad
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        try:
            ok = phi(mid) >= 0
        except _Rejected:
            ok = False
        if ok:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-6 * hi and lo > 0:
            break
    if not lo > 0:
        raise _Rejected("could not locate the Delaunay event")
    S = _advance(plan, lo)
    return S, lo, _min_margin(plan, S)[1]


def _tie_horizon(plan: FlowPlan) -> tuple:
    """Step at which a driven edge first catches up with a longer Delaunay edge (flow A)."""
    if plan.mode != "A":
        return math.inf, None
    S = plan.surface
    lo = min(S.lengths[e] for e in plan.rates)
    best, who = math.inf, None
    for e in plan.delaunay_edges:
        if e in plan.rates:
            continue
        rate = plan.dependent_rate if e in plan.dependent else 0.0
        gap = S.lengths[e] - lo
        if gap > 0 and 1.0 - rate > 0:
            h = gap / (1.0 - rate)
            if h < best:
                best, who = h, e
    return best, who


def _gap(plan: FlowPlan, S: MarkedSurface, edge: str) -> float:
    return S.lengths[edge] - min(S.lengths[e] for e in plan.rates)


def _hit_tie(plan: FlowPlan, edge: str, h_guess: float):
    """Secant iteration on the step size so ``edge`` meets the driven length."""
    g0 = _gap(plan, plan.surface, edge)
    h_prev, g_prev = 0.0, g0
    h = h_guess
    S = None
    for _ in range(40):
        S = _advance(plan, h)
        g = _gap(plan, S, edge)
        scale = S.lengths[edge]
        if abs(g) <= 0.1 * RELATIVE_TIE * scale:
            return S, h
        if g == g_prev:
            break
        h, h_prev, g_prev = h - g * (h - h_prev) / (g - g_prev), h, g
        if not h > 0:
            break
    raise _Rejected(f"could not land on the tie with {edge}")


def attempt(plan: FlowPlan, h: float, r_old: float, tol: float = COCIRCULAR_TOL):
    """One trial step; returns ``(surface, h_taken, injrad, event)`` or raises."""
    horizon, tie_edge = _tie_horizon(plan)
    event = ""
    if tie_edge is not None and horizon <= h:
        S, h = _hit_tie(plan, tie_edge, horizon)
        event = f"tie:{tie_edge}"
    else:
        S = _advance(plan, h)
        if tie_edge is not None and _gap(plan, S, tie_edge) < 0:
            raise _Rejected(f"overshot the tie with {tie_edge}")
    try:
        _check_margins(plan, S, tol)
    except _MarginEvent:
        S, h, edge = _land_on_event(plan, h, tol)
        event = f"delaunay:{edge}"
    r_new = injectivity_radius(S).radius
    if r_new < r_old - INJRAD_SLACK:
        raise _Rejected(f"injectivity radius would drop by {r_old - r_new:.2e}")
    return S, h, r_new, event


def step(state: FlowState, h: float, tol: float = COCIRCULAR_TOL):
    """Advance ``state`` along its plan, halving ``h`` on rejection.

    Returns ``(new_state, h_taken, h_trial, event)``; ``h_trial`` is the
    accepted trial size before any clamping to a tie.
    """
    plan = state.plan
    if plan is None:
        raise FlowError("state has no plan")
    if all(r == 0 for r in plan.rates.values()):
        return state, 0.0, h, "zero rates"
    reasons = []
    for _ in range(MAX_HALVINGS + 1):
        if h < H_MIN:
            break
        try:
            S, taken, r_new, event = attempt(plan, h, state.injrad, tol)
        except _Rejected as exc:
            reasons.append(str(exc))
            h *= 0.5
            continue
        if reasons:
            event = event or "halved:" + reasons[-1].split(" ")[0]
        new = FlowState(S, state.t + taken, plan.mode, plan, r_new, state.trace, state.steps + 1)
        return new, taken, h, event
    raise FlowStalled(f"step control stalled at t={state.t:.6g} (h={h:.2e}); "
                      f"last rejections: {reasons[-3:]}")


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


@dataclass
class AscentResult:
    status: str
    state: FlowState
    verdict: object

    @property
    def trace(self) -> list:
        return self.state.trace

    @property
    def surface(self) -> MarkedSurface:
        return self.state.surface


def plan_for(S: MarkedSurface, tess: Optional[DelaunayTessellation] = None, injrad: Optional[float] = None):
    """Choose the flow for ``S``; returns ``(plan or None, verdict, tessellation)``."""
    tess = tess or delaunay(S)
    verdict = criterion_check(S, tess, injrad=injrad)
    if verdict.ok:
        return None, verdict, tess
    _, _, longer = _shortest_and_longer(tess.surface, tess.delaunay_edges())
    if longer:
        return flow_A_direction(tess.surface, tess), verdict, tess
    setup = flow_B_setup(tess.surface, tess)
    return flow_B_direction(setup, _watched(tess)), verdict, tess


def _row(state: FlowState, plan: Optional[FlowPlan], tess: DelaunayTessellation, event: str) -> TraceRow:
    S = state.surface
    del_edges = tess.delaunay_edges()
    lens = [S.lengths[e] for e in del_edges if e in S.lengths] or [math.nan]
    res = plan.constraint_residual() if plan is not None else 0.0
    return TraceRow(state.steps, state.t, state.injrad, min(lens), max(lens), res,
                    plan.mode if plan is not None else "-", event)


def ascend(S: MarkedSurface, h0: float = H0, budget: int = 1000, h_max: float = H_MAX,
           tol: float = COCIRCULAR_TOL,
           on_step: Optional[Callable[[FlowState], None]] = None) -> AscentResult:
    """Deform ``S`` until the local-maximum criterion holds at the marked vertex.

    ``budget`` caps the number of accepted steps.  The status is one of
    ``"criterion met"``, ``"budget exhausted"`` or ``"stalled"``.
    """
    S.check_domain()
    r0 = injectivity_radius(S).radius
    state = FlowState(S, 0.0, "", None, r0, [], 0)
    h = h0
    event = "start"
    while True:
        tess = delaunay(state.surface, tol)
        if tess.flips:
            event = (event + ";" if event else "") + f"flips:{tess.flips}"
        try:
            plan, verdict, tess = plan_for(state.surface, tess, state.injrad)
        except (FlowError, CoefficientDegenerate) as exc:
            state.trace.append(_row(state, None, tess, f"error:{exc}"))
            raise
        if plan is not None and plan.mode != state.mode and state.mode:
            event = (event + ";" if event else "") + f"mode:{plan.mode}"
        state.plan = plan
        state.mode = plan.mode if plan is not None else state.mode
        state.trace.append(_row(state, plan, tess, event))
        if on_step is not None:
            on_step(state)
        if plan is None:
            return AscentResult("criterion met", state, verdict)
        if state.steps >= budget:
            return AscentResult("budget exhausted", state, verdict)
        try:
            new, taken, h_ok, event = step(state, h, tol)
        except FlowStalled as exc:
            log.warning("%s", exc)
            state.trace[-1] = _row(state, plan, tess, f"stalled:{exc}")
            return AscentResult("stalled", state, verdict)
        state = new
        h = min(GROWTH * h_ok, h_max)


def write_trace(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r.as_tuple()])
