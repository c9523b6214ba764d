import xml.dom.minidom

import numpy as np
import pytest

from hypsurf import developer as dv
from hypsurf import svg


def test_disk_point_of_origin_and_ideal():
    assert np.allclose(svg.disk_point(np.array([1.0, 0, 0])), 0)
    p = np.array([1.0, 0.6, 0.8])
    assert np.allclose(svg.disk_point(p), [0.6, 0.8])


def test_disk_point_inside_unit_disk():
    for d in (0.1, 1.0, 5.0):
        p = np.array([np.cosh(d), np.sinh(d), 0.0])
        x = svg.disk_point(p)
        assert np.hypot(*x) == pytest.approx(np.tanh(d / 2), abs=1e-12)


def test_render_is_well_formed(g2, torus):
    for S in (g2, torus):
        nb = dv.injectivity_radius(S).neighborhood
        text = svg.render(nb, title="a < b & c")
        doc = xml.dom.minidom.parseString(text)
        assert doc.documentElement.tagName == "svg"
        assert doc.getElementsByTagName("path") or doc.getElementsByTagName("line")


def test_write(tmp_path, g2):
    out = tmp_path / "nb.svg"
    svg.write(dv.develop(g2, 1.0), out)
    xml.dom.minidom.parse(str(out))
