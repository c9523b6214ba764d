"""Plain-text surface files.

One directive per line; ``#`` starts a comment::

    name genus2-equilateral
    expect 2 0
    edge a 3.4382142412301038
    compact T0 a b p2
    cusp C0 a
    cycle C0 C1 C2 C3

Faces are numbered in order of appearance.  A compact face lists its
three edges counter-clockwise, a cusp face its one compact edge, and a
cycle the cusp faces around one cusp in order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import ValidationError
from .surface import COMPACT, CUSP, CombTriangulation, Face, MarkedSurface


class ParseError(ValidationError):
    def __init__(self, message, line: Optional[int] = None, text: str = ""):
        where = None if line is None else f"line {line}: {text.strip()}"
        super().__init__(message, where)
        self.line = line


@dataclass
class SurfaceFile:
    name: str = ""
    expect: Optional[tuple] = None
    edges: dict = field(default_factory=dict)
    faces: list = field(default_factory=list)    # (name, kind, edges)
    cycles: list = field(default_factory=list)   # tuples of face names

    def to_surface(self) -> MarkedSurface:
        index = {name: i for i, (name, _, _) in enumerate(self.faces)}
        faces = tuple(Face(kind, tuple(edges)) for _, kind, edges in self.faces)
        cycles = tuple(tuple(index[n] for n in cyc) for cyc in self.cycles)
        T = CombTriangulation(faces, cycles, tuple(n for n, _, _ in self.faces))
        return MarkedSurface(T, dict(self.edges), self.name)

    @classmethod
    def from_surface(cls, S: MarkedSurface, expect: Optional[tuple] = None) -> "SurfaceFile":
        T = S.triangulation
        names = [T.face_label(f) for f in range(len(T.faces))]
        faces = [(names[f], face.kind, tuple(face.edges)) for f, face in enumerate(T.faces)]
        cycles = [tuple(names[f] for f in cyc) for cyc in T.cusp_cycles]
        return cls(S.name, expect, {e: S.lengths[e] for e in S.edges}, faces, cycles)


def parse(text: str) -> SurfaceFile:
    doc = SurfaceFile()
    edge_line = {}
    face_names = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *args = line.split()

        def fail(msg):
            raise ParseError(msg, lineno, raw)

        if word == "name":
            doc.name = " ".join(args)
        elif word == "expect":
            if len(args) != 2:
                fail("expect takes genus and cusp count")
            try:
                doc.expect = (int(args[0]), int(args[1]))
            except ValueError:
                fail("expect values must be integers")
        elif word == "edge":
            if len(args) != 2:
                fail("edge takes an id and a length")
            eid, val = args
            if eid in doc.edges:
                fail(f"edge {eid!r} declared twice")
            try:
                length = float(val)
            except ValueError:
                fail(f"bad length {val!r}")
            if not length > 0:
                fail(f"edge {eid!r} must have positive length")
            doc.edges[eid] = length
            edge_line[eid] = (lineno, raw)
        elif word in (COMPACT, CUSP):
            want = 4 if word == COMPACT else 2
            if len(args) != want:
                fail(f"{word} face takes a name and {want - 1} edge id(s)")
            fname, *edges = args
            if fname in face_names:
                fail(f"face {fname!r} declared twice")
            face_names[fname] = lineno
            doc.faces.append((fname, word, tuple(edges)))
        elif word == "cycle":
            if not args:
                fail("empty cusp cycle")
            doc.cycles.append(tuple(args))
        else:
            fail(f"unknown directive {word!r}")

    use = {e: 0 for e in doc.edges}
    for fname, kind, edges in doc.faces:
        for e in edges:
            if e not in use:
                lineno = face_names[fname]
                raise ParseError(f"face {fname!r} uses undeclared edge {e!r}", lineno,
                                 text.splitlines()[lineno - 1])
            use[e] += 1
    for e, n in use.items():
        if n != 2:
            lineno, raw = edge_line[e]
            raise ParseError(f"edge {e!r} appears in {n} face slot(s), expected 2", lineno, raw)
    kinds = {fname: kind for fname, kind, _ in doc.faces}
    seen = set()
    for cyc in doc.cycles:
        for fname in cyc:
            if kinds.get(fname) != CUSP:
                raise ParseError(f"cycle member {fname!r} is not a cusp face")
            if fname in seen:
                raise ParseError(f"cusp face {fname!r} appears in two cycles")
            seen.add(fname)
    missing = [n for n, k in kinds.items() if k == CUSP and n not in seen]
    if missing:
        raise ParseError("cusp faces missing from every cycle: " + ", ".join(missing))
    return doc


def serialize(doc: SurfaceFile) -> str:
    lines = []
    if doc.name:
        lines.append(f"name {doc.name}")
    if doc.expect is not None:
        lines.append(f"expect {doc.expect[0]} {doc.expect[1]}")
    for e, v in doc.edges.items():
        lines.append(f"edge {e} {float(v)!r}")
    for fname, kind, edges in doc.faces:
        lines.append(" ".join([kind, fname, *edges]))
    for cyc in doc.cycles:
        lines.append(" ".join(["cycle", *cyc]))
    return "\n".join(lines) + "\n"


def load(path) -> SurfaceFile:
    with open(path) as fh:
        return parse(fh.read())


def dump(doc: SurfaceFile, path) -> None:
    with open(path, "w") as fh:
        fh.write(serialize(doc))
