"""Command-line interface.

Exit codes: 0 when the verdict is true or the query feasible, 1 when it is
false or infeasible, 2 when the solver could not decide, 3 on input errors
(including checks whose preconditions the input does not meet).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor

from . import checks, obstruct, pencil, relax
from .documents import DocumentError, load_document, parse_ideal, parse_pencil, parse_point, parse_poly_entry, parse_set
from .poly import PolynomialError
from .sdp import SolverInaccurate

EXIT_TRUE, EXIT_FALSE, EXIT_INACCURATE, EXIT_INPUT = 0, 1, 2, 3


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        # let coordinate lists such as "-1/2,0" pass as values
        self._negative_number_matcher = re.compile(r"^-[\d.]")

    def error(self, message):
        raise InputError(message)


# ---------------------------------------------------------------------------
# helpers


def _need(args, name):
    value = getattr(args, name, None)
    if value is None:
        raise InputError(f"--{name.replace('_', '-')} is required for {args.command}")
    return value


def _set(args):
    return parse_set(load_document(_need(args, "set")), args.mode)


def _ideal(args):
    return parse_ideal(load_document(_need(args, "ideal")), args.mode)


def _pencil(args):
    return parse_pencil(load_document(_need(args, "pencil")))


def _point(args, name="point"):
    return parse_point(_need(args, name), args.mode)


def _dir(args):
    return parse_point(_need(args, "dir"), args.mode)


def _poly(args, vars):
    mode = "float" if args.command.startswith(("polar", "pencil-qm")) else args.mode
    return parse_poly_entry(_need(args, "poly"), vars, mode)


def _degree(args):
    d = _need(args, "degree")
    if d < 0:
        raise InputError("--degree must be nonnegative")
    return d


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "numerator") and not isinstance(v, (int, float)):
        return str(v)
    return v


def _write_out(args, doc):
    if args.out and doc is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(_jsonable(doc), fh, indent=2)
            fh.write("\n")


def _emit(args, report: dict):
    if args.format == "json":
        print(json.dumps(_jsonable(report), indent=2))
        return
    for key, value in report.items():
        if isinstance(value, (dict, list)) and key != "separator_coeffs":
            value = json.dumps(_jsonable(value))
        print(f"{key}: {value}")


def _verdict_exit(kind) -> int:
    return {
        relax.VerdictKind.IN: EXIT_TRUE,
        relax.VerdictKind.OUT: EXIT_FALSE,
        relax.VerdictKind.INACCURATE: EXIT_INACCURATE,
        relax.VerdictKind.NOT_APPLICABLE: EXIT_INPUT,
    }[kind]


def _verdict(args, v: relax.Verdict) -> int:
    doc = v.to_document()
    _emit(args, {"command": args.command, **{k: x for k, x in doc.items() if k != "certificate"}})
    _write_out(args, doc.get("certificate"))
    return _verdict_exit(v.kind)


def _certificate(args, cert, what) -> int:
    if cert is None:
        _emit(args, {"command": args.command, "result": "Infeasible", "message": f"{what} not certified"})
        return EXIT_FALSE
    doc = cert.to_document()
    report = {"command": args.command, "result": "Feasible"}
    if "residual" in doc:
        report["residual"] = doc["residual"]
    if args.out:
        report["certificate"] = args.out
    _emit(args, report)
    _write_out(args, doc)
    return EXIT_TRUE


def _support(args, value) -> int:
    _emit(args, {"command": args.command, "support": value})
    return EXIT_TRUE


def _obstruction(args, report: obstruct.ObstructionReport) -> int:
    doc = report.to_document()
    _emit(args, {"command": args.command, **doc})
    _write_out(args, doc)
    return {
        obstruct.ObstructionVerdict.OBSTRUCTED: EXIT_TRUE,
        obstruct.ObstructionVerdict.NOT_OBSTRUCTED: EXIT_FALSE,
        obstruct.ObstructionVerdict.WITNESS_INVALID: EXIT_FALSE,
        obstruct.ObstructionVerdict.NOT_APPLICABLE: EXIT_INPUT,
    }[report.verdict]


# ---------------------------------------------------------------------------
# commands


def cmd_qm_member(args):
    S = _set(args)
    return _certificate(args, relax.qm_member(S, _degree(args), _poly(args, S.vars)), "membership")


def cmd_lasserre_member(args):
    return _verdict(args, relax.lasserre_point_member(_set(args), _degree(args), _point(args), args.tol))


def cmd_lasserre_support(args):
    return _support(args, relax.lasserre_support(_set(args), _degree(args), _dir(args)))


def cmd_theta_member(args):
    return _verdict(args, relax.theta_point_member(_ideal(args), _degree(args), _point(args), args.tol))


def cmd_theta_support(args):
    return _support(args, relax.theta_support(_ideal(args), _degree(args), _dir(args)))


def cmd_pushforward_support(args):
    S = _set(args)
    parts = [s for s in _need(args, "map").split(";") if s.strip()]
    f = [parse_poly_entry(s, S.vars, args.mode) for s in parts]
    return _support(args, relax.pushforward_support(S, _degree(args), f, _dir(args)))


def cmd_pencil_member(args):
    P = _pencil(args)
    pt = _point(args)
    if len(pt) != P.nx + P.ny:
        raise InputError(f"--point needs {P.nx + P.ny} coordinates (x then y)")
    ok, lam = pencil.pencil_member(P, pt[:P.nx], pt[P.nx:])
    _emit(args, {"command": args.command, "member": bool(ok), "eigmin": float(lam)})
    return EXIT_TRUE if ok else EXIT_FALSE


def cmd_projection_member(args):
    return _verdict(args, pencil.projection_member(_pencil(args), _point(args), args.tol, R=args.box))


def cmd_polar_member(args):
    P = _pencil(args)
    return _certificate(args, pencil.polar_member(P, _poly(args, P.xvars), R=args.box), "polar membership")


def cmd_closure_member(args):
    return _verdict(args, pencil.closure_member(_pencil(args), _point(args), args.tol, R=args.box))


def cmd_pencil_qm_member(args):
    P = _pencil(args)
    cert = pencil.pencil_qm_member(P, _degree(args), _poly(args, P.xvars), R=args.box)
    return _certificate(args, cert, "membership")


def cmd_obstruct_line(args):
    return _obstruction(args, obstruct.line_obstruction(_set(args), _point(args), _dir(args),
                                                        box=args.box if args.box_given else obstruct.DEFAULT_LINE_BOX))


def cmd_obstruct_singular(args):
    return _obstruction(args, obstruct.singular_point_obstruction(_set(args), _point(args)))


def cmd_obstruct_nonexposed(args):
    return _obstruction(args, obstruct.nonexposed_face_check(_set(args), _point(args), _point(args, "second_point")))


def cmd_convex_singular(args):
    report = obstruct.convex_singular_check(_ideal(args), _point(args), _point(args, "witness"),
                                            real_radical=args.real_radical)
    return _obstruction(args, report)


def sample_boundary(support, n_dirs: int, jobs: int = 1) -> str:
    """CSV text with one ``theta,ux,uy,support`` row per equally spaced direction."""
    angles = [2 * math.pi * i / n_dirs for i in range(n_dirs)]
    dirs = [(math.cos(t), math.sin(t)) for t in angles]
    if jobs > 1 and n_dirs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            values = list(pool.map(support, dirs))
    else:
        values = [support(u) for u in dirs]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["theta", "ux", "uy", "support"])
    for t, (ux, uy), h in zip(angles, dirs, values):
        writer.writerow([_g12(t), _g12(ux), _g12(uy), _g12(h)])
    return buf.getvalue()


def _g12(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.12g}"


def cmd_sample_boundary(args):
    d = _degree(args)
    if (args.set is None) == (args.ideal is None):
        raise InputError("sample-boundary needs exactly one of --set or --ideal")
    if args.n_dirs < 0:
        raise InputError("--n-dirs must be nonnegative")
    if args.set is not None:
        S = _set(args)
        n, fn = S.nvars, (lambda u: relax.lasserre_support(S, d, u))
    else:
        I = _ideal(args)
        n, fn = I.nvars, (lambda u: relax.theta_support(I, d, u))
    if n != 2:
        raise InputError(f"sample-boundary needs a planar problem, got {n} variables")
    text = sample_boundary(fn, args.n_dirs, args.jobs)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_TRUE


def cmd_verify_paper(args):
    results = checks.run_all()
    if args.format == "json":
        print(json.dumps({"checks": [r.to_document() for r in results],
                          "passed": all(r.passed for r in results)}, indent=2))
    else:
        for r in results:
            print(r.line())
    return EXIT_TRUE if all(r.passed for r in results) else EXIT_FALSE


COMMANDS = {
    "qm-member": (cmd_qm_member, "certify f in the truncated quadratic module"),
    "lasserre-member": (cmd_lasserre_member, "decide point membership in a Lasserre relaxation"),
    "lasserre-support": (cmd_lasserre_support, "support value of a Lasserre relaxation"),
    "theta-member": (cmd_theta_member, "decide point membership in a theta body"),
    "theta-support": (cmd_theta_support, "support value of a theta body"),
    "pushforward-support": (cmd_pushforward_support, "support value of the relaxed image of a map"),
    "pencil-member": (cmd_pencil_member, "test A(x, y) PSD"),
    "projection-member": (cmd_projection_member, "decide membership in the projected spectrahedron"),
    "polar-member": (cmd_polar_member, "certify a linear polynomial nonnegative on the projection"),
    "closure-member": (cmd_closure_member, "decide membership in the closure of the projection"),
    "pencil-qm-member": (cmd_pencil_qm_member, "certify p in the pencil quadratic module"),
    "obstruct-line": (cmd_obstruct_line, "line-gradient obstruction"),
    "obstruct-singular": (cmd_obstruct_singular, "singular active constraints"),
    "obstruct-nonexposed": (cmd_obstruct_nonexposed, "non-exposed face through two points"),
    "convex-singular": (cmd_convex_singular, "verify a convex-singular point with a witness"),
    "sample-boundary": (cmd_sample_boundary, "CSV of support values over planar directions"),
    "verify-paper": (cmd_verify_paper, "run the exact identity and regression checks"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="shadowrelax", description="Relaxations and certificates for semialgebraic sets.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        src = p.add_argument_group("problem")
        src.add_argument("--set", help="set document (path or bundled name)")
        src.add_argument("--ideal", help="ideal document (path or bundled name)")
        src.add_argument("--pencil", help="pencil document (path or bundled name)")
        p.add_argument("--degree", type=int)
        p.add_argument("--point")
        p.add_argument("--second-point", help="second face point for obstruct-nonexposed")
        p.add_argument("--witness", help="relative-interior witness for convex-singular")
        p.add_argument("--dir")
        p.add_argument("--poly")
        p.add_argument("--map", help="semicolon-separated map components for pushforward-support")
        p.add_argument("--tol", type=float, default=relax.DEFAULT_MEMBER_TOL)
        p.add_argument("--box", type=float, default=None)
        p.add_argument("--n-dirs", type=int, default=360)
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--real-radical", action="store_true")
        p.add_argument("--out")
        p.add_argument("--format", choices=("json", "text"), default="text")
        p.add_argument("--mode", choices=("exact", "float"), default="exact")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise InputError("no command given")
        sources = [s for s in (args.set, args.ideal, args.pencil) if s is not None]
        if len(sources) > 1:
            raise InputError("give exactly one of --set, --ideal, --pencil")
        args.box_given = args.box is not None
        if args.box is None:
            args.box = pencil.DEFAULT_BOX
        if not args.box > 0:
            raise InputError("--box must be positive")
        return COMMANDS[args.command][0](args)
    except (InputError, DocumentError, PolynomialError, pencil.NotApplicable, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverInaccurate as exc:
        print(f"inaccurate: {exc}", file=sys.stderr)
        return EXIT_INACCURATE


if __name__ == "__main__":
    sys.exit(main())
