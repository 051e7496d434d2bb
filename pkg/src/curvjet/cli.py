"""``curvjet`` command line: gen | check | realize | solve.

Exit codes (stable for scripting): 0 every verdict passed, 1 some verdict
failed or a pipeline step failed, 2 usage or parse error.  With several input
files the exit code is the maximum over files.

Reports go to stdout as one compact JSON line per input file (suppressed by
``--quiet``) and, with ``--report PATH``, to a file in the same line-delimited
form.
"""
from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import documents as docs
from .ck_solver import constant_scalar_conformal, constant_tau_taustar, constant_tau_taustar_hyper
from .errors import CurvjetError
from .geometry_engine import StructureField, point_model
from .realization import realize, realize_conformally_flat
from .tensor_core import HYPER_KINDS, KINDS, check_signature, random_model
from .verify import check_model, structure_field_verdicts, verify_deformation, verify_realization

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(CurvjetError):
    """Input is well-formed but the request does not make sense for it."""


# -- helpers ---------------------------------------------------------------------------

def _parse_signature(text: str) -> tuple[int, int]:
    try:
        p, q = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"signature must look like 'p,q', got {text!r}") from None
    return p, q


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(text)


def _output_path(out: str | None, src: str, suffix: str, many: bool) -> str | None:
    """``--out`` names a file for one input, a directory for several."""
    if out is None:
        return None
    if not many:
        return out
    return str(Path(out) / f"{Path(src).stem}.{suffix}.json")


def _read(path: str) -> tuple[str, str]:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise docs.DocumentError(path, f"cannot read file ({exc.strerror})") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise docs.DocumentError(path, "file is not UTF-8 text") from None
    return text, docs.digest(data)


# -- per-file operations ----------------------------------------------------------------
# Each returns (exit code, report dict); they run in worker processes under --jobs.

def op_check(path: str, opts: dict) -> tuple[int, dict]:
    text, dig = _read(path)
    t0 = time.perf_counter()
    loaded = docs.load_any(text, path)
    if isinstance(loaded, docs.ModelDocument):
        verdicts, diags = check_model(loaded.model, loaded.conflicts)
        orders = {}
    else:
        P = point_model(loaded.g, loaded.structure) if loaded.g.order >= 2 else None
        verdicts, diags = ({}, {}) if P is None else check_model(P)
        v, d = structure_field_verdicts(loaded.g, loaded.structure)
        verdicts.update(v)
        diags.update(d)
        orders = {"jet": loaded.g.order}
    rep = docs.make_report("check", dig, path, verdicts, orders, diags, {"check": time.perf_counter() - t0})
    return (EXIT_OK if rep["ok"] else EXIT_FAIL), rep


def _valid_model(path: str) -> tuple[docs.ModelDocument, str, dict | None]:
    text, dig = _read(path)
    md = docs.load_model(text, path)
    verdicts, diags = check_model(md.model, md.conflicts)
    if not all(verdicts.values()):
        return md, dig, docs.make_report("check", dig, path, verdicts, {}, diags,
                                         error="input model fails validation")
    return md, dig, None


def op_realize(path: str, opts: dict) -> tuple[int, dict]:
    N, mode = opts["order"], opts["mode"]
    if N < 2:
        raise UsageError("realization needs --order >= 2")
    md, dig, bad = _valid_model(path)
    if bad is not None:
        return EXIT_FAIL, bad
    M = md.model
    t0 = time.perf_counter()
    if mode == "conformally-flat":
        G = realize_conformally_flat(M, N)
    else:
        G = realize(M, N)
    t1 = time.perf_counter()
    verdicts, diags = verify_realization(M, G.g, G.structure, mode)
    t2 = time.perf_counter()
    meta = {"provenance": G.provenance, "source_digest": dig}
    jet = docs.JetDocument(G.g, G.structure, M.kind, {}, meta)
    out = _output_path(opts.get("out"), path, "jet", opts["many"])
    if out is not None:
        _write(out, docs.dump_jet(jet))
    rep = docs.make_report(f"realize:{mode}", dig, path, verdicts, {"requested": N, "jet": G.g.order},
                           diags, {"realize": t1 - t0, "verify": t2 - t1})
    if out is not None:
        rep["output"] = out
    return (EXIT_OK if rep["ok"] else EXIT_FAIL), rep


def op_solve(path: str, opts: dict) -> tuple[int, dict]:
    N, target = opts["order"], opts["target"]
    if N < 2:
        raise UsageError("solving needs --order >= 2")
    text, dig = _read(path)
    loaded = docs.load_any(text, path)
    if isinstance(loaded, docs.ModelDocument):
        verdicts, diags = check_model(loaded.model, loaded.conflicts)
        if not all(verdicts.values()):
            return EXIT_FAIL, docs.make_report("check", dig, path, verdicts, {}, diags,
                                               error="input model fails validation")
        kind = loaded.model.kind
        G = realize(loaded.model, N)
        g, structure = G.g, G.structure
    else:
        kind, g, structure = loaded.kind, loaded.g, loaded.structure
        if g.order < N:
            raise UsageError(f"jet has order {g.order} < requested --order {N}")
        g = g.truncate(N)
        if isinstance(structure, StructureField):
            structure = structure.truncate(N)
        elif structure is not None:
            structure = tuple(S.truncate(N) for S in structure)
    if target == "tau-taustar" and kind == "plain":
        raise UsageError("target tau-taustar needs a hermitian, para or hyper model")
    t0 = time.perf_counter()
    if target == "tau":
        res = constant_scalar_conformal(g, N)
        h_structure = structure
    elif kind in HYPER_KINDS:
        res = constant_tau_taustar_hyper(g, structure, N)
        h_structure = res.structure
    else:
        res = constant_tau_taustar(g, structure, N)
        h_structure = res.structure
    t1 = time.perf_counter()
    verdicts, orders, diags = verify_deformation(g, structure, res.h, h_structure, res.unknowns, N,
                                                 target, res.frame)
    t2 = time.perf_counter()
    diags["step_determinants"] = [docs.rl.fmt(s.determinant) for s in res.solution.steps]
    diags["residual_evaluations"] = res.solution.evaluations
    diags["targets"] = {k: docs.rl.fmt(v) for k, v in res.targets.items()}
    meta = {"provenance": f"constant-{target}", "source_digest": dig}
    jet = docs.JetDocument(res.h, h_structure, kind, dict(res.unknowns), meta)
    out = _output_path(opts.get("out"), path, "solved", opts["many"])
    if out is not None:
        _write(out, docs.dump_jet(jet))
    rep = docs.make_report(f"solve:{target}", dig, path, verdicts, orders, diags,
                           {"solve": t1 - t0, "verify": t2 - t1})
    if out is not None:
        rep["output"] = out
    return (EXIT_OK if rep["ok"] else EXIT_FAIL), rep


OPERATIONS = {"check": op_check, "realize": op_realize, "solve": op_solve}


def run_one(command: str, path: str, opts: dict) -> tuple[int, dict | None, str | None]:
    """Run one file in isolation; errors become exit codes, never exceptions."""
    try:
        code, rep = OPERATIONS[command](path, opts)
        return code, rep, None
    except (docs.DocumentError, UsageError) as exc:
        return EXIT_USAGE, None, f"{command}: {exc}"
    except CurvjetError as exc:
        rep = docs.make_report(command, None, path, {}, error=f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL, rep, f"{command}: {path}: {type(exc).__name__}: {exc}"


# -- commands ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    dim = args.dim
    sig = args.signature if args.signature is not None else (0, dim)
    try:
        check_signature(dim, sig, args.kind)
        M = random_model(dim, sig, args.seed, args.kind, weyl_part=not args.conformally_flat)
    except CurvjetError as exc:
        print(f"gen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    meta = {"seed": args.seed, "signature": f"{sig[0]},{sig[1]}",
            "provenance": "kulkarni-nomizu" if args.conformally_flat else "random"}
    try:
        _write(args.out, docs.dump_model(M, meta))
    except OSError as exc:
        print(f"gen: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def _run_batch(command: str, args, opts: dict) -> int:
    files = args.files
    opts = dict(opts, many=len(files) > 1, out=getattr(args, "out", None))
    if args.jobs > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, [command] * len(files), files, [opts] * len(files)))
    else:
        results = [run_one(command, f, opts) for f in files]
    code = EXIT_OK
    lines = []
    for rc, rep, err in results:
        code = max(code, rc)
        if err:
            print(err, file=sys.stderr)
        if rep is not None:
            lines.append(docs.compact_json(rep) + "\n")
    if not args.quiet:
        sys.stdout.write("".join(lines))
    if args.report:
        try:
            _write(args.report, "".join(lines))
        except OSError as exc:
            print(f"{command}: cannot write report {args.report}: {exc.strerror}", file=sys.stderr)
            code = max(code, EXIT_USAGE)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvjet", description="Exact curvature-model realization and CK deformation.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded random model document")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--signature", type=_parse_signature, help="p,q (p negative directions); default 0,dim")
    g.add_argument("--kind", choices=KINDS, default="plain")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--conformally-flat", action="store_true",
                   help="Kulkarni-Nomizu model (vanishing Weyl tensor)")
    g.add_argument("--out", help="output file (default stdout)")

    def batch(p):
        p.add_argument("files", nargs="+")
        p.add_argument("--report", help="also write the report lines to this file")
        p.add_argument("--jobs", type=int, default=1, help="process files concurrently")
        p.add_argument("--quiet", action="store_true", help="no reports on stdout")

    c = sub.add_parser("check", help="validate model or jet documents")
    batch(c)

    r = sub.add_parser("realize", help="realize models as metric jets")
    batch(r)
    r.add_argument("--order", type=int, required=True)
    r.add_argument("--mode", choices=("plain", "conformally-flat"), default="plain")
    r.add_argument("--out", help="output file (a directory when several inputs are given)")

    s = sub.add_parser("solve", help="deform to constant tau (and tau-star)")
    batch(s)
    s.add_argument("--order", type=int, required=True)
    s.add_argument("--target", choices=("tau", "tau-taustar"), default="tau")
    s.add_argument("--out", help="output file (a directory when several inputs are given)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "gen":
        return cmd_gen(args)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    opts = {}
    if args.command == "realize":
        opts = {"order": args.order, "mode": args.mode}
    elif args.command == "solve":
        opts = {"order": args.order, "target": args.target}
    return _run_batch(args.command, args, opts)


if __name__ == "__main__":
    sys.exit(main())
