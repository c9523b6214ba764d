"""Command-line front end.

Every command prints one report.  With ``--json`` the report is a JSON
document with sorted keys, so repeated runs on the same input are
byte-identical.  Exit codes: 0 success, 2 invalid input or lengths
outside the deformation space, 3 numerical failure, 4 budget or stall.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import ascent, catalog, derivcheck, developer, sfile, surface, svg
from .errors import (
    BudgetExceeded,
    CoefficientDegenerate,
    ConvergenceError,
    DomainError,
    FlowError,
    FlowStalled,
    HypSurfError,
    PlacementError,
    ValidationError,
)

SCHEMA = "hypsurf.report/1"
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_BUDGET = 0, 2, 3, 4
DERIV_TOL = 1e-6
DEGENERATE_TOL = 1e-4

log = logging.getLogger("hypsurf")


def _clean(x):
    """Make a value JSON friendly: tuples to lists, numpy scalars to floats, inf to strings."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, (BudgetExceeded, FlowStalled)):
        return EXIT_BUDGET
    if isinstance(exc, (ValidationError, DomainError)):
        return EXIT_INVALID
    if isinstance(exc, (ConvergenceError, PlacementError, CoefficientDegenerate, FlowError)):
        return EXIT_NUMERIC
    if isinstance(exc, (OSError, UnicodeDecodeError)):
        return EXIT_INVALID
    return EXIT_NUMERIC


def _load(path) -> tuple:
    doc = sfile.load(path)
    S = doc.to_surface()
    return doc, S


def _topology(doc, S) -> dict:
    g, n = S.triangulation.validate()
    out = {"genus": g, "cusps": n, "faces": len(S.faces), "edges": len(S.edges)}
    if doc.expect is not None and tuple(doc.expect) != (g, n):
        raise ValidationError(f"expected (g, n) = {tuple(doc.expect)}, found ({g}, {n})")
    return out


def _require_member(S, tol) -> None:
    S.check_domain()
    res = surface.residual(S)
    if abs(res) > tol:
        raise DomainError(f"angle sum off 2*pi by {res:.3e}")


def _tess_report(tess: developer.DelaunayTessellation) -> dict:
    S = tess.surface
    return {
        "flips": tess.flips,
        "edges": {e: {"length": S.lengths[e], "delaunay": bool(tess.is_delaunay[e]),
                      "margin": tess.tests[e].margin}
                  for e in S.edges},
        "cells": [{"kind": c.label, "faces": [S.triangulation.face_label(f) for f in c.faces]}
                  for c in tess.cells],
        "min_margin": tess.min_margin(),
    }


def _verdict_report(v: developer.Verdict) -> dict:
    S = v.tessellation.surface
    return {
        "ok": v.ok,
        "injrad": v.injrad,
        "reason": v.reason(),
        "offending_edges": list(v.offending_edges),
        "offending_cells": [{"kind": c.label, "faces": [S.triangulation.face_label(f) for f in c.faces]}
                            for c in v.offending_cells],
    }


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> tuple:
    doc, S = _load(args.file)
    rep = {"validation": _topology(doc, S)}
    S.check_domain()
    res = surface.residual(S)
    rep["angle_sum"] = surface.angle_sum(S)
    rep["angle_sum_residual"] = res
    rep["in_domain"] = abs(res) <= args.tol_member
    return rep, EXIT_OK if rep["in_domain"] else EXIT_INVALID


def cmd_injrad(args) -> tuple:
    doc, S = _load(args.file)
    rep = {"validation": _topology(doc, S)}
    _require_member(S, args.tol_member)
    r = developer.injectivity_radius(S)
    rep["injrad"] = r.radius
    rep["shortest_arcs"] = r.n_arcs
    rep["witnesses"] = [{"length": w.distance, "crossings": len(w.path.crossings)} for w in r.witnesses]
    rep["placements"] = len(r.neighborhood.placements)
    return rep, EXIT_OK


def cmd_delaunay(args) -> tuple:
    doc, S = _load(args.file)
    rep = {"validation": _topology(doc, S)}
    _require_member(S, args.tol_member)
    tess = developer.delaunay(S, args.tol)
    rep["delaunay"] = _tess_report(tess)
    if args.out:
        sfile.dump(sfile.SurfaceFile.from_surface(tess.surface, doc.expect), args.out)
        rep["written"] = str(args.out)
    return rep, EXIT_OK


def cmd_criterion(args) -> tuple:
    doc, S = _load(args.file)
    rep = {"validation": _topology(doc, S)}
    _require_member(S, args.tol_member)
    tess = developer.delaunay(S, args.tol)
    v = developer.criterion_check(S, tess)
    rep["delaunay"] = _tess_report(tess)
    rep["criterion"] = _verdict_report(v)
    return rep, EXIT_OK


def cmd_ascend(args) -> tuple:
    doc, S = _load(args.file)
    rep = {"validation": _topology(doc, S)}
    _require_member(S, args.tol_member)
    snapshots = []
    on_step = None
    if args.snapshot_every:
        snap_dir = Path(args.snapshot_dir or (Path(args.file).stem + "_snapshots"))
        snap_dir.mkdir(parents=True, exist_ok=True)
        done = set()

        def on_step(state):
            if state.steps % args.snapshot_every or state.steps in done:
                return
            done.add(state.steps)
            nb = developer.injectivity_radius(state.surface).neighborhood
            out = snap_dir / f"step{state.steps:05d}.svg"
            svg.write(nb, out, title=f"step {state.steps} t={state.t:.6g} injrad={state.injrad:.10g}")
            snapshots.append(str(out))

    result = ascent.ascend(S, h0=args.h0, budget=args.budget, tol=args.tol, on_step=on_step)
    if args.trace:
        ascent.write_trace(result.trace, args.trace)
        rep["trace"] = str(args.trace)
    st = result.state
    rep["ascent"] = {
        "status": result.status,
        "steps": st.steps,
        "t": st.t,
        "injrad_initial": result.trace[0].injrad,
        "injrad_final": st.injrad,
        "lengths": dict(st.surface.lengths),
        "angle_sum_residual": surface.residual(st.surface),
    }
    rep["criterion"] = _verdict_report(result.verdict)
    if snapshots:
        rep["snapshots"] = snapshots
    if args.out:
        sfile.dump(sfile.SurfaceFile.from_surface(st.surface, doc.expect), args.out)
        rep["written"] = str(args.out)
    code = EXIT_OK if result.status == "criterion met" else EXIT_BUDGET
    return rep, code


def cmd_deriv_check(args) -> tuple:
    rng = np.random.default_rng(args.seed)
    shapes = derivcheck.random_shapes(rng, args.samples, args.family)
    r = derivcheck.check(shapes)
    rep = {
        "family": args.family,
        "seed": args.seed,
        "samples": args.samples,
        "partials": r.samples,
        "max_abs_error": r.max_abs_error,
        "max_scaled_error": r.max_scaled_error,
        "max_error_by_kind": r.by_kind,
        "shapes_by_kind": r.counts,
        "diameter_partial_max": r.diameter_zero,
        "longest_side_sign_flips": r.sign_flips,
        "worst": {"sides": r.worst[0], "side": r.worst[1], "kind": r.worst[2],
                  "closed_form": r.worst[3], "finite_difference": r.worst[4]} if r.worst else None,
        "horocyclic_max_error": derivcheck.horocyclic_check(),
    }
    if args.family == "degenerate":
        ok = r.max_scaled_error < DEGENERATE_TOL
        rep["tolerance"] = {"scaled": DEGENERATE_TOL}
    else:
        ok = r.max_abs_error < DERIV_TOL
        rep["tolerance"] = {"absolute": DERIV_TOL}
    rep["ok"] = ok
    return rep, EXIT_OK if ok else EXIT_NUMERIC


def cmd_catalog(args) -> tuple:
    if args.name is None:
        return {"surfaces": sorted(catalog.REFERENCE)}, EXIT_OK
    if args.name not in catalog.REFERENCE:
        raise ValidationError(f"unknown reference surface {args.name!r}")
    S = catalog.REFERENCE[args.name]()
    g, n = S.triangulation.validate()
    text = sfile.serialize(sfile.SurfaceFile.from_surface(S, (g, n)))
    if args.out:
        Path(args.out).write_text(text)
        return {"name": args.name, "written": str(args.out)}, EXIT_OK
    return {"name": args.name, "surface_file": text}, EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "injrad": cmd_injrad,
    "delaunay": cmd_delaunay,
    "criterion": cmd_criterion,
    "ascend": cmd_ascend,
    "deriv-check": cmd_deriv_check,
    "catalog": cmd_catalog,
}
FILE_COMMANDS = ("validate", "injrad", "delaunay", "criterion", "ascend")


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def run(args) -> tuple:
    """Execute one command; return ``(report, exit code)`` without raising."""
    rep = {"schema": SCHEMA, "command": args.command}
    if getattr(args, "file", None) is not None:
        rep["input"] = str(args.file)
    try:
        body, code = COMMANDS[args.command](args)
        rep.update(body)
    except (HypSurfError, OSError, UnicodeDecodeError) as exc:
        code = _exit_code(exc)
        err = {"type": type(exc).__name__, "message": str(exc)}
        line = getattr(exc, "line", None)
        if line is not None:
            err["line"] = line
        rep["error"] = err
    rep["exit_code"] = code
    return _clean(rep), code


def _run_file(args, path) -> tuple:
    ns = argparse.Namespace(**vars(args))
    ns.file = str(path)
    ns.batch = None
    stem = Path(path).stem
    if getattr(ns, "trace", None):
        ns.trace = str(Path(ns.trace) / f"{stem}.csv")
    if getattr(ns, "snapshot_every", 0):
        ns.snapshot_dir = str(Path(ns.snapshot_dir or "snapshots") / stem)
    if getattr(ns, "out", None):
        ns.out = str(Path(ns.out) / f"{stem}.surf")
    return run(ns)


def run_batch(args) -> tuple:
    files = sorted(Path(args.batch).glob("*.surf"))
    for opt in ("trace", "out"):
        if getattr(args, opt, None):
            Path(getattr(args, opt)).mkdir(parents=True, exist_ok=True)
    workers = args.jobs or min(len(files), os.cpu_count() or 1) or 1
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {p.name: pool.submit(_run_file, args, p) for p in files}
        results = {name: fut.result() for name, fut in futures.items()}
    code = max((c for _, c in results.values()), default=EXIT_OK)
    rep = {"schema": SCHEMA, "command": args.command, "batch": str(args.batch),
           "results": {name: r for name, (r, _) in results.items()}, "exit_code": code}
    return rep, code


def _format_text(rep, indent=0) -> str:
    lines = []
    pad = "  " * indent
    for k, v in rep.items():
        if isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(_format_text(v, indent + 1))
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            lines.append(f"{pad}{k}:")
            for item in v:
                lines.append(f"{pad}  - " + ", ".join(f"{a}={b}" for a, b in item.items()))
        elif isinstance(v, str) and "\n" in v:
            lines.append(f"{pad}{k}:")
            lines.extend(f"{pad}  {ln}" for ln in v.rstrip("\n").splitlines())
        else:
            lines.append(f"{pad}{k}: {v}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the report as JSON")
    common.add_argument("--tol", type=float, default=developer.COCIRCULAR_TOL,
                        help="empty-circle tolerance for Delaunay tests (default %(default)g)")
    common.add_argument("--tol-member", type=float, default=1e-10,
                        help="allowed |angle sum - 2 pi| for membership (default %(default)g)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default %(default)s)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hypsurf", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def file_cmd(name, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("file", nargs="?", help="surface file")
        sp.add_argument("--batch", metavar="DIR", help="run on every *.surf file in DIR concurrently")
        sp.add_argument("--jobs", type=int, default=0, help="worker processes for --batch")
        return sp

    file_cmd("validate", "check a surface file and its angle sum")
    file_cmd("injrad", "injectivity radius at the marked vertex")
    sp = file_cmd("delaunay", "flip to the Delaunay triangulation and list its cells")
    sp.add_argument("--out", help="write the Delaunay triangulation as a surface file")
    file_cmd("criterion", "check the local-maximum criterion")
    sp = file_cmd("ascend", "deform until the criterion holds")
    sp.add_argument("--h0", type=float, default=ascent.H0, help="initial step (default %(default)g)")
    sp.add_argument("--budget", type=int, default=1000, help="maximum accepted steps (default %(default)s)")
    sp.add_argument("--trace", help="write the trace CSV here")
    sp.add_argument("--snapshot-every", type=int, default=0, metavar="K",
                    help="write an SVG of the developed neighborhood every K steps")
    sp.add_argument("--snapshot-dir", help="directory for SVG snapshots")
    sp.add_argument("--out", help="write the terminal surface as a surface file")

    sp = sub.add_parser("deriv-check", parents=[common], help="audit area partials by finite differences")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--family", choices=derivcheck.FAMILIES, default="mixed")

    sp = sub.add_parser("catalog", parents=[common], help="list or export reference surfaces")
    sp.add_argument("name", nargs="?")
    sp.add_argument("--out", help="write the surface file here")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command in FILE_COMMANDS:
        if args.batch and args.file:
            parser.error("give either a file or --batch, not both")
        if not args.batch and not args.file:
            parser.error("a surface file or --batch DIR is required")
    if getattr(args, "batch", None):
        rep, code = run_batch(args)
    else:
        rep, code = run(args)
    if args.json:
        print(json.dumps(rep, sort_keys=True, indent=2))
    else:
        print(_format_text(rep))
    if "error" in rep:
        print(f"hypsurf: {rep['error']['message']}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
