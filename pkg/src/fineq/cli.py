"""Command-line front end.

Exit codes: 0 when every verdict passes (or condition (C) holds), 1 when
something fails, 2 for usage, configuration or input errors.
"""

from __future__ import annotations

import argparse
import configparser
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, FineqError, InputError

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="fineq", description="Fine Berezin-Toeplitz quantization on the sphere: rate experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run the experiment suite from a config file")
    p.add_argument("config", help="INI config file, or 'default' for the packaged one")
    p.add_argument("--output", help="override [run] output_dir")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("--threads", type=int, help="worker threads (FINEQ_THREADS caps this)")
    p.add_argument("--only", help="comma-separated subset of the configured experiments")
    p.add_argument("-q", "--quiet", action="store_true")

    p = sub.add_parser("condition-c", help="decide condition (C) for integral cohomology data")
    p.add_argument("--omega", help="values of [omega]/2pi on a basis, e.g. 3,1 or 1/2,3")
    p.add_argument("--c1", help="values of c1 on the same basis, e.g. 3,-1")
    p.add_argument("--config", help="INI file with a [cohomology] section (basis_rank, omega, c1)")

    p = sub.add_parser("quantize", help="summarise Q_k(f)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--f", required=True, help="function name, e.g. u, xy, lincomb(2*u, x)")
    p.add_argument("--scheme", choices=("toeplitz", "fine"), default="toeplitz")
    p.add_argument("--dump", help="also write the matrix to this file")
    p.add_argument("--format", choices=("csv", "raw"), default="csv")

    p = sub.add_parser("propagate", help="summarise the time-one propagator of a path")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--path", required=True, help="path name, e.g. rot_x(pi), prod(kick(u2), rot_u(1))")
    p.add_argument("--scheme", choices=("toeplitz", "fine"), default="fine")
    p.add_argument("--method", choices=("magnus4", "midpoint"), default="magnus4")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--dump", help="also write the matrix to this file")
    p.add_argument("--format", choices=("csv", "raw"), default="csv")

    p = sub.add_parser("dump-operator", help="write Q_k(f) or a propagator as CSV or raw complex128")
    p.add_argument("--k", type=int, required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--f", help="function name")
    src.add_argument("--path", help="path name (dumps the time-one propagator)")
    p.add_argument("--scheme", choices=("toeplitz", "fine"), default="fine")
    p.add_argument("--format", choices=("csv", "raw"), default="csv")
    p.add_argument("-o", "--output", help="output file (default: stdout for csv)")

    p = sub.add_parser("plot", help="render SVG figures from a defects.csv")
    p.add_argument("csv")
    p.add_argument("--output", help="directory for the SVG files (default: <csv dir>/plots)")

    sub.add_parser("list", help="list experiments, functions and path forms")
    return ap


# ---------------------------------------------------------------- commands


def cmd_run(args) -> int:
    from . import config as cfgmod
    from .experiments import run_suite, suite_passed
    from .report import write_reports

    cfg = cfgmod.default_config() if args.config == "default" else cfgmod.load(args.config)
    if args.output:
        cfg.output_dir = Path(args.output)
    if args.only:
        wanted = _int_list(args.only)
        missing = [w for w in wanted if w not in cfg.experiments]
        if missing:
            raise ConfigError(f"--only names experiments not in the config: {', '.join(missing)}")
        cfg.experiments = tuple(e for e in cfg.experiments if e in wanted)
    start = time.perf_counter()

    def progress(name, reports):
        if not args.quiet:
            bad = sum(r.verdict != "pass" for r in reports)
            print(f"  {name}: {len(reports)} report(s), {bad} not passing "
                  f"[{time.perf_counter() - start:.1f}s]", file=sys.stderr)

    reports = run_suite(cfg, threads=args.threads, progress=progress)
    paths = write_reports(reports, cfg.output_dir, cfg, plots=cfg.emit_plots and not args.no_plots)
    width = max(len(r.name) for r in reports)
    for r in reports:
        slope = "" if r.slope is None else f"slope {r.slope:+.3f}  r2 {r.r_squared:.4f}"
        note = f"  ({r.note})" if r.note else ""
        print(f"{r.verdict:8s} {r.name:{width}s}  {slope}{note}")
    counts = {v: sum(r.verdict == v for r in reports) for v in ("pass", "fail", "invalid")}
    print(f"{counts['pass']} pass, {counts['fail']} fail, {counts['invalid']} invalid; "
          f"results in {paths['defects'].parent}")
    return EXIT_OK if suite_passed(reports) else EXIT_FAIL


def _cohomology_from_file(path):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        if not cp.read(path):
            raise ConfigError(f"cannot read {path}")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not cp.has_section("cohomology"):
        raise ConfigError(f"{path}: missing [cohomology] section")
    sec = cp["cohomology"]
    omega = _int_list(sec.get("omega", ""))
    c1 = _int_list(sec.get("c1", ""))
    if "basis_rank" in sec:
        try:
            rank = int(sec["basis_rank"])
        except ValueError:
            raise ConfigError(f"{path}: basis_rank must be an integer") from None
        if rank != len(omega) or rank != len(c1):
            raise ConfigError(f"{path}: basis_rank {rank} does not match omega/c1 lengths")
    return omega, c1


def cmd_condition_c(args) -> int:
    from .lattice import CohomologyData, odd_witness

    if args.config:
        if args.omega or args.c1:
            raise ConfigError("give either --config or --omega/--c1, not both")
        omega, c1 = _cohomology_from_file(args.config)
    else:
        if args.omega is None or args.c1 is None:
            raise ConfigError("--omega and --c1 are required without --config")
        omega, c1 = _int_list(args.omega), _int_list(args.c1)
    data = CohomologyData(len(omega), tuple(omega), tuple(c1))
    witness = odd_witness(data)
    if witness is None:
        print("satisfied")
        return EXIT_OK
    value = sum(a * b for a, b in zip(data.c1, witness))
    print(f"violated: kernel vector ({', '.join(map(str, witness))}) has c1 value {value}")
    return EXIT_FAIL


def _dump(matrix: np.ndarray, fmt: str, out):
    """Row-major; csv rows hold re,im pairs, raw is little-endian complex128."""
    M = np.ascontiguousarray(matrix, dtype=np.complex128)
    if fmt == "raw":
        data = M.astype("<c16").tobytes()
        if out is None:
            sys.stdout.buffer.write(data)
        else:
            Path(out).write_bytes(data)
        return
    lines = [",".join(f"{z.real:.17g},{z.imag:.17g}" for z in row) for row in M]
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _check_k(k):
    if not 1 <= k <= 512:
        raise InputError("k must lie in [1, 512]")


def cmd_quantize(args) -> int:
    from .linalg import op_norm, trace
    from .quantization import QuantizationLevel, quantize
    from .sphere import named_function

    _check_k(args.k)
    level = QuantizationLevel(args.k)
    f = named_function(args.f)
    A = quantize(level, f, args.scheme)
    w = np.linalg.eigvalsh(A)
    print(f"f = {args.f}  scheme = {args.scheme}")
    print(f"dim = {level.dim}")
    print(f"op-norm = {op_norm(A):.17g}")
    print(f"trace = {trace(A).real:.17g}")
    print(f"spectrum = [{w[0]:.17g}, {w[-1]:.17g}]")
    print(f"hermitian defect = {np.max(np.abs(A - A.conj().T)):.3g}")
    if args.dump:
        _dump(A, args.format, args.dump)
    return EXIT_OK


def _propagator(args):
    from .dynamics import IntegratorSettings, named_path, propagate

    _check_k(args.k)
    path = named_path(args.path)
    settings = IntegratorSettings(method=getattr(args, "method", "magnus4"), tol=getattr(args, "tol", 1e-10))
    return path, propagate(args.k, path, args.scheme, settings)


def cmd_propagate(args) -> int:
    from .linalg import op_norm, projective_distance

    path, U = _propagator(args)
    I = np.eye(args.k)
    phases = np.angle(np.linalg.eigvals(U.matrix))
    print(f"path = {path.label}  k = {args.k}  scheme = {args.scheme}")
    print(f"dim = {args.k}")
    print(f"unitarity defect = {U.unitarity_defect():.3g}")
    print(f"steps = {U.meta['steps']}  integrator estimate = {U.meta['defect_estimate']:.3g}")
    print(f"||U - 1||_op = {op_norm(U.matrix - I):.17g}")
    print(f"delta_inf(U, 1) = {projective_distance(U.matrix, I):.17g}")
    print(f"eigenphases in [{phases.min():.6f}, {phases.max():.6f}]")
    if args.dump:
        _dump(U.matrix, args.format, args.dump)
    return EXIT_OK


def cmd_dump(args) -> int:
    if args.format == "raw" and args.output is None and sys.stdout.isatty():
        raise InputError("refusing to write binary data to a terminal; pass --output")
    if args.f is not None:
        from .quantization import quantize
        from .sphere import named_function

        _check_k(args.k)
        M = quantize(args.k, named_function(args.f), args.scheme)
    else:
        M = _propagator(args)[1].matrix
    _dump(M, args.format, args.output)
    return EXIT_OK


def cmd_plot(args) -> int:
    from .report import plot_csv

    written = plot_csv(args.csv, args.output)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_list(args) -> int:
    from .dynamics import PATH_NAMES
    from .experiments import EXPERIMENTS
    from .sphere import FUNCTION_NAMES

    print("experiments: " + ", ".join(EXPERIMENTS))
    print("functions:   " + ", ".join(FUNCTION_NAMES))
    print("paths:       " + ", ".join(PATH_NAMES))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "condition-c": cmd_condition_c,
    "quantize": cmd_quantize,
    "propagate": cmd_propagate,
    "dump-operator": cmd_dump,
    "plot": cmd_plot,
    "list": cmd_list,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InputError) as exc:
        print(f"fineq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FineqError as exc:
        print(f"fineq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
