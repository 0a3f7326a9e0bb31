"""Command-line front end: ``polymorph <verb> ...``.

Every verb loads its inputs, calls one or two library functions and writes
the result; no numerics live here. Exit codes: 0 success, 2 usage,
3 validation failure, 4 composition (space mismatch), 5 domain (strip or
parameter range), 6 parse error, 7 file access.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

import numpy as np

from . import io, mellin, poly, pwl
from .errors import CompositionError, DomainError, ParseError, PolymorphError, ValidationError
from .invert import log_grid, recover_measure, recover_polymorphism
from .markov import BistochasticKernel, compose_kernels
from .measure import AtomicMeasure
from .measure import star as measure_star

__all__ = ["main", "build_parser", "parse_grid", "EXIT_USAGE", "EXIT_IO"]

EXIT_USAGE = 2
EXIT_IO = 7
_GRID_FLAGS = ("--w-grid", "--grid")


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step``, inclusive of ``stop`` when ``step`` divides the range."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ParseError(f"grid {text!r}: expected start:stop:step")
    try:
        a, b, s = (float(p) for p in parts)
    except ValueError:
        raise ParseError(f"grid {text!r}: expected three numbers") from None
    if b < a:
        raise DomainError(f"grid {text!r}: stop is below start")
    return log_grid(a, b, s)


def _pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected i,j, got {text!r}") from None
    return i, j


def _emit(obj: dict):
    print(json.dumps(obj, indent=1))


def _as_poly(obj, path):
    if isinstance(obj, BistochasticKernel):
        return poly.from_markov(obj)
    if not isinstance(obj, poly.Polymorphism):
        raise ParseError(f"{path}: expected a polymorphism or kernel record")
    return obj


def _load_poly_like(path):
    return _as_poly(io.load(path), path)


def cmd_validate(args) -> int:
    obj = io.load(args.file)
    if isinstance(obj, poly.Polymorphism):
        rep = poly.validate(obj, tol=args.tol)
        _emit({"kind": "polymorphism", **rep.summary()})
        if not rep.passed:
            for m in rep.messages():
                print(m, file=sys.stderr)
            return ValidationError.exit_code
        return 0
    # other kinds validate on load
    _emit({"kind": type(obj).__name__, "passed": True})
    return 0


def cmd_compose(args) -> int:
    a, b = io.load(args.P), io.load(args.Q)
    if isinstance(a, BistochasticKernel) and isinstance(b, BistochasticKernel):
        io.save(compose_kernels(a, b), args.output)
        return 0
    P, Q = _as_poly(a, args.P), _as_poly(b, args.Q)
    if not P.target.same_as(Q.source):
        raise CompositionError(f"target of {args.P} differs from source of {args.Q}")
    for name, X in (("P", P), ("Q", Q)):
        rep = poly.validate(X, tol=args.tol)
        if not rep.passed:
            raise ValidationError(f"{name}: " + "; ".join(rep.messages()))
    R = poly.compose(P, Q, prune_eps=args.prune)
    io.save(R, args.output)
    if args.prune is not None:
        _emit({"dropped_mass": R.dropped})
    return 0


def cmd_star(args) -> int:
    obj = io.load(args.P)
    if isinstance(obj, AtomicMeasure):
        out = measure_star(obj)
    elif isinstance(obj, (poly.Polymorphism, BistochasticKernel)):
        out = obj.star
    else:
        raise ParseError(f"{args.P}: star needs a measure, kernel or polymorphism")
    io.save(out, args.output)
    return 0


def cmd_mellin(args) -> int:
    P = _load_poly_like(args.P)
    ws = parse_grid(args.w_grid)
    n = mellin.write_matrix_element_csv(args.csv, P, args.v, ws, pairs=args.entry or None)
    if args.operators:
        recs = [mellin.transform_matrix(P, args.v + 1j * w).to_record() for w in ws]
        with open(args.operators, "w") as fh:
            json.dump({"operators": recs}, fh, indent=1)
            fh.write("\n")
    _emit({"rows": n})
    return 0


def cmd_invert(args) -> int:
    samples = io.read_samples_csv(args.samples)
    grid = parse_grid(args.grid)
    if isinstance(samples, dict):
        if not (args.source and args.target):
            raise ParseError("keyed samples need --source and --target space files")
        src, tgt = io.load(args.source, "space"), io.load(args.target, "space")
        rec = recover_polymorphism(samples, src, tgt, grid, args.reg)
        io.save(rec.polymorphism, args.output)
        report = rec.summary()
        status = 0 if rec.valid else ValidationError.exit_code
        if not rec.valid:
            for m in rec.validation.messages():
                print(m, file=sys.stderr)
    else:
        rec = recover_measure(samples, grid, args.reg)
        io.save(rec.measure, args.output)
        report = rec.summary()
        status = 0
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=1)
            fh.write("\n")
    _emit(report)
    return status


def cmd_discretize(args) -> int:
    g = io.load(args.map, "map")
    tl = args.level if args.target_level is None else args.target_level
    io.save(pwl.discretize(g, args.level, tl), args.output)
    return 0


def cmd_synthesize(args) -> int:
    P = _load_poly_like(args.poly)
    io.save(pwl.gms_dense_construct(P, args.level), args.output)
    return 0


def cmd_converge(args) -> int:
    if args.n_max < args.n_min:
        raise DomainError("n-max must be at least n-min")
    study = pwl.convergence_study(args.t1, args.t2, args.lam, args.level,
                                  range(args.n_min, args.n_max + 1))
    io.write_study_csv(args.csv, study.rows)
    out = {"rows": len(study.rows)}
    if sum(r.distance > pwl.ALIGNED_TOL for r in study.rows) >= 2:
        out["decay_slope"] = study.slope()
    _emit(out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polymorph", description="Polymorphisms over finite spaces.")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("validate", help="check a record; polymorphisms get the marginal identities")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=poly.POLY_TOL)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("compose", help="R = Q o P (apply P first)")
    p.add_argument("P")
    p.add_argument("Q")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--prune", type=float, default=None, help="drop atoms lighter than this")
    p.add_argument("--tol", type=float, default=poly.POLY_TOL)
    p.set_defaults(fn=cmd_compose)

    p = sub.add_parser("star", help="involution of a measure, kernel or polymorphism")
    p.add_argument("P")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_star)

    p = sub.add_parser("mellin", help="matrix elements S_{v+iw}(P; 1_i, 1_j) as CSV")
    p.add_argument("P")
    p.add_argument("--v", type=float, required=True)
    p.add_argument("--w-grid", required=True, metavar="A:B:S")
    p.add_argument("--csv", required=True)
    p.add_argument("--entry", type=_pair, action="append", metavar="I,J")
    p.add_argument("--operators", metavar="JSON", help="also write T_u(P) for every grid point")
    p.set_defaults(fn=cmd_mellin)

    p = sub.add_parser("invert", help="recover a measure or polymorphism from Mellin samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--grid", required=True, metavar="A:B:S", help="candidate ln t grid")
    p.add_argument("--reg", type=float, default=0.0)
    p.add_argument("--source", help="space file (keyed samples only)")
    p.add_argument("--target", help="space file (keyed samples only)")
    p.add_argument("--report", help="write the residual report here as well")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_invert)

    p = sub.add_parser("discretize", help="map -> polymorphism between dyadic cell spaces")
    p.add_argument("map")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--target-level", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_discretize)

    p = sub.add_parser("synthesize-map", help="polymorphism between cell spaces -> map")
    p.add_argument("poly")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_synthesize)

    p = sub.add_parser("converge", help="oscillating-family convergence study as CSV")
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--n-min", type=int, default=1)
    p.add_argument("--csv", required=True)
    p.set_defaults(fn=cmd_converge)
    return ap


def _join_grid_flags(argv: Sequence[str]) -> list[str]:
    # "--w-grid -10:10:0.5" would otherwise be read as an unknown option
    out, it = [], iter(argv)
    for tok in it:
        if tok in _GRID_FLAGS:
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_grid_flags(argv))
    try:
        return args.fn(args)
    except PolymorphError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
