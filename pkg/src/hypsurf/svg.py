"""SVG pictures of developed neighborhoods in the Poincaré disk."""

from __future__ import annotations

import math

import numpy as np

from . import hypgeom as hg

COLLINEAR_TOL = 1e-9


def disk_point(p) -> np.ndarray:
    """Poincaré disk image of a hyperboloid point or a light-like ideal vector."""
    p = np.asarray(p, dtype=float)
    if hg.is_ideal(p):
        return p[1:] / p[0]
    return p[1:] / (1.0 + p[0])


def _geodesic_path(p, q, scale: float) -> str:
    # circle through p and q orthogonal to the unit circle: 2 c.x = |x|^2 + 1
    def sv(z):
        return f"{scale * z[0]:.4f},{-scale * z[1]:.4f}"
    cross = p[0] * q[1] - p[1] * q[0]
    if abs(cross) < COLLINEAR_TOL:
        return f"M{sv(p)} L{sv(q)}"
    rhs = 0.5 * np.array([p @ p + 1.0, q @ q + 1.0])
    c = np.linalg.solve(np.array([p, q]), rhs)
    r = math.sqrt(max(c @ c - 1.0, 0.0))
    sweep = 1 if (p[0] - c[0]) * (q[1] - c[1]) - (p[1] - c[1]) * (q[0] - c[0]) > 0 else 0
    return f"M{sv(p)} A{scale * r:.4f},{scale * r:.4f} 0 0 {sweep} {sv(q)}"


def render(nbhd, size: int = 600, title: str = "") -> str:
    """SVG document showing every placed face copy of ``nbhd``.

    Faces are outlined with geodesic arcs, the base lift is drawn in red
    and the other lifts of the marked point along the shortest arcs in blue.
    """
    scale = 0.5 * size - 4
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{-size / 2} {-size / 2} {size} {size}">',
    ]
    if title:
        parts.append(f"<title>{_escape(title)}</title>")
    parts.append(f'<circle cx="0" cy="0" r="{scale:.4f}" fill="#f8f8f8" stroke="black" stroke-width="1"/>')
    drawn = set()
    parts.append('<g fill="none" stroke="#335" stroke-width="0.6">')
    for pl in nbhd.placements:
        pts = [disk_point(v) for v in pl.vertices]
        for k in range(3):
            a, b = pts[k], pts[(k + 1) % 3]
            key = tuple(sorted((tuple(np.round(a, 6)), tuple(np.round(b, 6)))))
            if key in drawn:
                continue
            drawn.add(key)
            parts.append(f'<path d="{_geodesic_path(a, b, scale)}"/>')
    parts.append("</g>")
    base = disk_point(nbhd.base)
    for lift in nbhd.lifts:
        z = disk_point(lift.position)
        parts.append(f'<circle cx="{scale * z[0]:.4f}" cy="{-scale * z[1]:.4f}" r="3" fill="#27c"/>')
    parts.append(f'<circle cx="{scale * base[0]:.4f}" cy="{-scale * base[1]:.4f}" r="4" fill="#c22"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write(nbhd, path, **kw) -> None:
    with open(path, "w") as fh:
        fh.write(render(nbhd, **kw))
