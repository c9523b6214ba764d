
import mpmath
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hypsurf import catalog

settings.register_profile(
    "repro",
    derandomize=True,
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repro")


@pytest.fixture(scope="session")
def g2():
    return catalog.genus2_equilateral()


@pytest.fixture(scope="session")
def torus():
    return catalog.punctured_torus_square()


@pytest.fixture(scope="session")
def octagon():
    return catalog.genus2_octagon()


@pytest.fixture(scope="session")
def squares():
    return catalog.genus2_squares()


@pytest.fixture(scope="session")
def g2_perturbed(g2):
    return catalog.lengthened(g2, "a", 0.05)


# --- independent high-precision oracles -------------------------------------

def mp_angle(a, b, c):
    """Angle opposite ``a`` from the plain law of cosines, 40 digits."""
    with mpmath.workdps(40):
        a, b, c = (mpmath.mpf(x) for x in (a, b, c))
        return mpmath.acos((mpmath.cosh(b) * mpmath.cosh(c) - mpmath.cosh(a))
                           / (mpmath.sinh(b) * mpmath.sinh(c)))


def mp_triangle(a, b, c):
    """Vertices on the hyperboloid: side ``i`` opposite vertex ``i``."""
    with mpmath.workdps(40):
        alpha = mp_angle(a, b, c)
        p0 = mpmath.matrix([1, 0, 0])
        p1 = mpmath.matrix([mpmath.cosh(c), mpmath.sinh(c), 0])
        p2 = mpmath.matrix([mpmath.cosh(b), mpmath.sinh(b) * mpmath.cos(alpha),
                            mpmath.sinh(b) * mpmath.sin(alpha)])
        return p0, p1, p2


def _mdot(x, y):
    return -x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


def mp_circumcircle(a, b, c):
    """Classify the circumscribed curve by the causal type of its plane normal.

    Returns ``(kind, J, inside)``: kind is "circle", "horocycle" or
    "equidistant"; ``inside`` is the signed barycentric minimum of the
    center (positive when the center lies inside the triangle).
    """
    with mpmath.workdps(40):
        p0, p1, p2 = mp_triangle(a, b, c)
        u, v = p1 - p0, p2 - p0
        cross = mpmath.matrix([u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2],
                               u[0] * v[1] - u[1] * v[0]])
        n = mpmath.matrix([-cross[0], cross[1], cross[2]])
        q = _mdot(n, n)
        scale = _mdot(n, n) / (abs(n[0]) ** 2 + abs(n[1]) ** 2 + abs(n[2]) ** 2)
        if abs(scale) < mpmath.mpf(10) ** -25:
            return "horocycle", None, None
        if q > 0:
            return "equidistant", None, None
        center = n / mpmath.sqrt(-q)
        if center[0] < 0:
            center = -center
        J = mpmath.acosh(-_mdot(center, p0))
        M = mpmath.matrix([[p0[i], p1[i], p2[i]] for i in range(3)])
        bary = mpmath.lu_solve(M, center)
        return "circle", float(J), float(min(bary) / sum(bary))


def random_shape(rng, lo=0.1, hi=4.0, slack=0.0):
    while True:
        s = rng.uniform(lo, hi, 3)
        a, b, c = s
        if min(b + c - a, a + c - b, a + b - c) > slack:
            return tuple(float(x) for x in s)


def random_member(S, rng, scale=0.1, dependent=None):
    """Random point of the deformation space near ``S``: jitter, then project."""
    from hypsurf.errors import DomainError
    from hypsurf.surface import solve_dependent_length

    edges = S.edges
    dependent = dependent or edges[0]
    for _ in range(100):
        jitter = {e: S.lengths[e] * (1 + scale * rng.uniform(-1, 1)) for e in edges if e != dependent}
        T = S.with_lengths(jitter)
        if not T.in_domain():
            continue
        try:
            return solve_dependent_length(T, dependent)
        except DomainError:
            continue
    raise RuntimeError("no admissible perturbation found")


def star_edges(nb, S, lift, tol=1e-7):
    """Edges from the base lift to ``lift`` inside the developed star of the base."""
    found = set()
    for pl in nb.placements:
        face = S.faces[pl.face]
        for k in face.finite_corners():
            if np.abs(pl.vertices[k] - nb.base).max() > tol * nb.base[0]:
                continue
            for slot, other in ((k, (k + 1) % 3), ((k - 1) % 3, (k - 1) % 3)):
                e = face.slot_edge(slot)
                if e is None or other not in face.finite_corners():
                    continue
                if np.abs(pl.vertices[other] - lift.position).max() < tol * lift.position[0]:
                    found.add(e)
    return found


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
