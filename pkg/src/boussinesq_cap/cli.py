"""Command-line front end: ``solve``, ``continue``, ``prove``, ``render``, ``verify-cert``.

Options may come from a JSON config file (``--config``); flags given on the
command line override it. Unknown config keys are a usage error.

Exit codes: 0 success, 1 numerical failure (Newton, continuation),
2 bounds computed but no negative radius, 3 failed precondition
(truncation condition, injectivity, tail sign), 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .certify import (
    MuSignError,
    NoNegativeRadius,
    PreconditionFailed,
    prove,
    read_certificate,
    verify_certificate,
    write_certificate,
)
from .solver import (
    PINS,
    SingularJacobian,
    SolverError,
    StepUnderflow,
    continue_branch,
    ensure_resolved,
    seed_branch,
    solve_point,
)
from .space import Params, evaluate_field, read_solution, solution_digest, write_solution

log = logging.getLogger("boussinesq_cap")

EXIT_OK = 0
EXIT_NUMERIC = 1
EXIT_NO_RADIUS = 2
EXIT_PRECONDITION = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _mode(text: str) -> tuple[int, int]:
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"mode must look like K1,K2, got {text!r}") from None
    return a, b


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _add_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lam", type=float, help="dispersion coefficient lambda (default 0.1446)")
    p.add_argument("--L", dest="L", type=float, help="time frequency L (default 2*pi)")
    p.add_argument("--nu", type=float, help="decay rate of the weighted norm (default 1.01)")
    p.add_argument("--m1", type=_positive_int, help="truncation in k1")
    p.add_argument("--m2", type=_positive_int, help="truncation in k2")


def _add_newton(p: argparse.ArgumentParser) -> None:
    p.add_argument("--newton-tol", type=float, help="residual tolerance (default 1e-13)")
    p.add_argument("--max-iter", type=_positive_int, help="Newton iteration cap (default 30)")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="boussinesq-cap", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    ap.add_argument("--threads", type=_positive_int, help="BLAS thread count")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="seed a branch and converge one solution")
    s.add_argument("--config", type=Path, help="JSON file with option values")
    _add_params(s)
    _add_newton(s)
    s.add_argument("--mode", type=_mode, help="seed mode K1,K2 (default 0,1)")
    s.add_argument("--amplitude", type=float, help="seed amplitude (default 0.05)")
    s.add_argument("--pin", choices=PINS, help="pin the energy or the mean (default energy)")
    s.add_argument("--resolve", action=argparse.BooleanOptionalAction, default=None, help="grow m while the tail is not negligible")
    s.add_argument("-o", "--output", type=Path, help="solution file to write")

    c = sub.add_parser("continue", help="follow a branch in lambda")
    c.add_argument("--config", type=Path, help="JSON file with option values")
    c.add_argument("--start", type=Path, help="converged solution file to start from")
    _add_params(c)
    _add_newton(c)
    c.add_argument("--mode", type=_mode, help="seed mode when no --start is given")
    c.add_argument("--amplitude", type=float, help="seed amplitude when no --start is given")
    c.add_argument("--lam-end", type=float, help="final lambda")
    c.add_argument("--dlam", type=float, help="nominal step (default 0.01)")
    c.add_argument("--dlam-min", type=float, help="smallest step before giving up")
    c.add_argument("--pin", choices=PINS, help="hold energy or mean fixed (default mean)")
    c.add_argument("--save", type=float, nargs="*", help="lambda values to save (default: every point)")
    c.add_argument("--outdir", type=Path, help="directory for solution files and manifest")

    p = sub.add_parser("prove", help="certify a solution file")
    p.add_argument("solution", type=Path)
    p.add_argument("--config", type=Path, help="JSON file with option values")
    p.add_argument("--m1", type=_positive_int, help="raise m1 (zero padding)")
    p.add_argument("--m2", type=_positive_int, help="raise m2 (zero padding)")
    p.add_argument("-o", "--output", type=Path, help="certificate file (default SOLUTION.cert.json)")

    r = sub.add_parser("render", help="sample u(t, y) on a grid as CSV")
    r.add_argument("solution", type=Path)
    r.add_argument("--nt", type=int, default=64, help="samples in t over one period")
    r.add_argument("--ny", type=int, default=64, help="samples in y over [0, 1]")
    r.add_argument("-o", "--output", type=Path, help="CSV file (default stdout)")

    v = sub.add_parser("verify-cert", help="re-check a certificate against its solution file")
    v.add_argument("certificate", type=Path)
    v.add_argument("--solution", type=Path, help="solution file the certificate refers to")
    v.add_argument("--recompute", action="store_true", help="rebuild all bounds from the solution")
    return ap


DEFAULTS = {
    "solve": dict(
        lam=0.1446, L=2 * math.pi, nu=1.01, m1=35, m2=35, newton_tol=1e-13, max_iter=30,
        mode=(0, 1), amplitude=0.05, pin="energy", resolve=False, output=Path("solution.json"),
    ),
    "continue": dict(
        start=None, lam=0.1446, L=2 * math.pi, nu=1.01, m1=35, m2=35, newton_tol=1e-13, max_iter=30,
        mode=(1, 1), amplitude=0.3, lam_end=None, dlam=0.01, dlam_min=None, pin="mean", save=None,
        outdir=Path("branch"),
    ),
    "prove": dict(m1=None, m2=None, output=None),
}

_PATH_KEYS = {"output", "outdir", "start"}


def effective_config(args: argparse.Namespace) -> dict:
    """Defaults, then config file, then explicit flags."""
    cmd = args.command
    cfg = dict(DEFAULTS.get(cmd, {}))
    path = getattr(args, "config", None)
    if path is not None:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
        for key, val in doc.items():
            k = key.replace("-", "_")
            if k not in cfg:
                raise UsageError(f"unknown config key {key!r} for {cmd}")
            if k == "mode":
                val = tuple(val)
            elif k in _PATH_KEYS and val is not None:
                val = Path(val)
            cfg[k] = val
    for k in cfg:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _params(cfg: dict) -> Params:
    try:
        return Params(lam=cfg["lam"], L=cfg["L"], nu=cfg["nu"], m=(cfg["m1"], cfg["m2"]))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _jsonable(cfg: dict) -> dict:
    out = {}
    for k, v in cfg.items():
        if isinstance(v, Path):
            v = str(v)
        elif isinstance(v, tuple):
            v = list(v)
        out[k] = v
    return out


def cmd_solve(cfg: dict) -> int:
    p = _params(cfg)
    guess = seed_branch(tuple(cfg["mode"]), p, cfg["amplitude"])
    pt = solve_point(guess, p, pin=cfg["pin"], tol=cfg["newton_tol"], max_iter=cfg["max_iter"])
    if cfg["resolve"]:
        pt = ensure_resolved(pt, pin=cfg["pin"])
    write_solution(cfg["output"], pt.x, pt.params, extra={"diagnostics": pt.diagnostics, "config": _jsonable(cfg)})
    log.info("wrote %s (norm %.6g, %d iterations)", cfg["output"], pt.diagnostics["norm_nu"], pt.diagnostics["newton_iterations"])
    return EXIT_OK


def _manifest_entry(path: Path, pt) -> dict:
    d = pt.diagnostics
    return {"path": path.name, "lambda": pt.params.lam, "energy": d["energy"], "norm_nu": d["norm_nu"], "c00": d["c00"]}


def cmd_continue(cfg: dict) -> int:
    if cfg["lam_end"] is None:
        raise UsageError("continue needs --lam-end")
    outdir = Path(cfg["outdir"])
    outdir.mkdir(parents=True, exist_ok=True)
    if cfg["start"] is not None:
        x, p = read_solution(cfg["start"])
    else:
        p = _params(cfg)
        x = seed_branch(tuple(cfg["mode"]), p, cfg["amplitude"])
    start = solve_point(x, p, pin=cfg["pin"], tol=cfg["newton_tol"], max_iter=cfg["max_iter"])
    save = cfg["save"]
    entries = []
    manifest = outdir / "manifest.json"

    def keep(pt) -> None:
        lam = pt.params.lam
        if save and not any(abs(lam - s) < 1e-12 for s in save):
            return
        path = outdir / f"solution_lambda_{lam:.6f}.json"
        write_solution(path, pt.x, pt.params, extra={"diagnostics": pt.diagnostics})
        entries.append(_manifest_entry(path, pt))
        _write_manifest(manifest, entries, cfg, complete=False)

    keep(start)
    code = EXIT_OK
    try:
        branch = continue_branch(
            start, cfg["dlam"], cfg["lam_end"], dlam_min=cfg["dlam_min"], tol=cfg["newton_tol"],
            max_iter=cfg["max_iter"], pin=cfg["pin"], callback=keep,
        )
        log.info("branch of %d points written to %s", len(branch), outdir)
    except StepUnderflow as exc:
        log.error("continuation stopped: %s", exc)
        code = EXIT_NUMERIC
    _write_manifest(manifest, entries, cfg, complete=code == EXIT_OK)
    return code


def _write_manifest(path: Path, entries: list, cfg: dict, complete: bool) -> None:
    doc = {"format": "boussinesq-branch/1", "complete": complete, "config": _jsonable(cfg), "points": entries}
    path.write_text(json.dumps(doc, indent=1) + "\n")


def cmd_prove(cfg: dict, solution: Path) -> int:
    x, p = read_solution(solution)
    m = (max(p.m[0], cfg["m1"] or 0), max(p.m[1], cfg["m2"] or 0))
    if m != p.m:
        x = x.resized(m)
        p = p.with_(m=m)
    out = cfg["output"] or solution.with_suffix(".cert.json")
    cfg = dict(cfg, output=out, solution=solution)
    try:
        cert = prove(x, p, solution_sha256=solution_digest(solution), config=_jsonable(cfg), log=log.info)
    except (PreconditionFailed, MuSignError) as exc:
        log.error("precondition failed: %s", exc)
        return EXIT_PRECONDITION
    except NoNegativeRadius as exc:
        log.error("no validated radius: %s", exc)
        return EXIT_NO_RADIUS
    write_certificate(out, cert)
    b = cert.bounds
    log.info(
        "certified: Y=%.3e Z0=%.3e Z1=%.3e Z2=%.3e r=%.5e (%.1fs) -> %s",
        b.Y.hi, b.Z0.hi, b.Z1.hi, b.Z2.hi, cert.r_star, cert.wall_time, out,
    )
    print(f"r_star {cert.r_star:.6e}  C0/L2 error bound {cert.c0_error:.6e}")
    return EXIT_OK


def cmd_render(solution: Path, nt: int, ny: int, output: Path | None) -> int:
    if nt < 2 or ny < 2:
        raise UsageError("--nt and --ny must be at least 2")
    x, p = read_solution(solution)
    t = np.linspace(0.0, 2.0 * math.pi / p.L, nt)
    y = np.linspace(0.0, 1.0, ny)
    u = evaluate_field(x, p, t, y)
    fh = open(output, "w", newline="") if output else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["t\\y"] + [repr(float(v)) for v in y])
        for ti, row in zip(t, u):
            w.writerow([repr(float(ti))] + [repr(float(v)) for v in row])
    finally:
        if output:
            fh.close()
    return EXIT_OK


def cmd_verify(cert_path: Path, solution: Path | None, recompute: bool) -> int:
    doc = read_certificate(cert_path)
    problems = verify_certificate(doc, solution, recompute=recompute)
    if problems:
        for msg in problems:
            print(f"FAIL {msg}")
        return EXIT_NO_RADIUS
    print(f"OK r_star={doc['r_star']} C0/L2 error bound={doc['c0_error']}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose + 1, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    limiter = None
    if args.threads:
        from threadpoolctl import threadpool_limits

        limiter = threadpool_limits(limits=args.threads)
    t0 = time.perf_counter()
    try:
        if args.command == "render":
            return cmd_render(args.solution, args.nt, args.ny, args.output)
        if args.command == "verify-cert":
            return cmd_verify(args.certificate, args.solution, args.recompute)
        cfg = effective_config(args)
        if args.threads:
            cfg["threads"] = args.threads
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "continue":
            return cmd_continue(cfg)
        return cmd_prove(cfg, args.solution)
    except UsageError as exc:
        print(f"boussinesq-cap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, SingularJacobian) as exc:
        log.error("%s failed: %s", args.command, exc)
        return EXIT_NUMERIC
    except (OSError, ValueError) as exc:
        print(f"boussinesq-cap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        log.debug("%s finished in %.2fs", args.command, time.perf_counter() - t0)
        if limiter is not None:
            limiter.restore_original_limits()


if __name__ == "__main__":
    sys.exit(main())
