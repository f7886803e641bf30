"""Command-line interface: ``l1galerkin <command> [flags]``.

Commands: ``solve``, ``study-temporal``, ``study-spatial``,
``study-zfk-tables``, ``blowup``, ``validate``.  Any flag may also be given
in a ``--config`` file of ``key = value`` lines; explicit flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

from .analysis import (
    derivative_blowup_series,
    global_error,
    run_request,
    RunRequest,
    spatial_study,
    temporal_study,
    write_csv,
    write_error_series,
    write_orders,
    write_snapshot,
    zfk_tables,
)
from .errors import L1GalerkinError
from .problems import PRESETS, ZFK_SHORT_M, ZFK_SHORT_N, make_preset, validate
from .stepper import SolverOptions

log = logging.getLogger("l1galerkin")

COMMANDS = ("solve", "study-temporal", "study-spatial", "study-zfk-tables", "blowup", "validate")


def _alphas(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    if not vals or not all(0.0 < v < 1.0 for v in vals):
        raise argparse.ArgumentTypeError(f"alpha values must lie in (0, 1): {text!r}")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {v}")
    return v


def _mesh_nodes(text: str) -> int:
    v = _positive_int(text)
    if v < 3:
        raise argparse.ArgumentTypeError(f"a mesh needs at least 3 nodes: {v}")
    return v


def _power_of_two(text: str) -> int:
    v = _positive_int(text)
    if v & (v - 1):
        raise argparse.ArgumentTypeError(f"must be a power of two: {v}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="l1galerkin", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, preset="engineered", alpha="0.5", n=None, m=None, n_type=_positive_int):
        p.add_argument("--config", type=Path, help="key = value file with default flags")
        p.add_argument("--preset", choices=sorted(PRESETS), default=preset)
        p.add_argument("--alpha", type=_alphas, default=_alphas(alpha))
        p.add_argument("--n", type=n_type, default=n, help="time steps (base value for studies)")
        p.add_argument("--m", type=_mesh_nodes, default=m, help="mesh nodes (base value for studies)")
        p.add_argument("--t-final", type=float, default=None)
        p.add_argument("--jobs", type=_positive_int, default=1)
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--first-step-tol", type=float, default=1e-12)
        p.add_argument("--snapshot-stride", type=_positive_int, default=None)
        return p

    common(sub.add_parser("solve", help="single run, writes x,u snapshots"), n=1024, m=64)
    p = common(
        sub.add_parser("study-temporal", help="global error over an N sweep"),
        alpha="0.3333333333333333,0.5,0.6666666666666666", n=32, m=64, n_type=_power_of_two,
    )
    p.add_argument("--levels", type=_positive_int, default=6)
    p = common(
        sub.add_parser("study-spatial", help="error at T over an M sweep"),
        alpha="0.3333333333333333,0.5,0.6666666666666666", n=1024, m=8,
    )
    p.add_argument("--levels", type=_positive_int, default=4)
    p = common(
        sub.add_parser("study-zfk-tables", help="Aitken order tables for ZFK"),
        preset="zfk", alpha="0.3333333333333333,0.5,0.6666666666666666", n=64, m=512,
        n_type=_power_of_two,
    )
    p.add_argument("--space-n", type=_positive_int, default=2**11)
    p.add_argument("--space-m", type=_mesh_nodes, default=2**4)
    p = common(
        sub.add_parser("blowup", help="time difference quotients at a probe point"),
        preset="zfk-short", alpha="0.75", n=ZFK_SHORT_N, m=ZFK_SHORT_M,
    )
    p.add_argument("--x-probe", type=float, default=0.5)
    common(sub.add_parser("validate", help="check a preset's structural assumptions"), preset="zfk")
    return parser


def read_config(path: Path) -> list[str]:
    """Turn ``key = value`` lines into ``--key value`` tokens."""
    tokens = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        tokens += ["--" + key.replace("_", "-"), value]
    return tokens


def _expand_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        return argv
    cmd = next((k for k, a in enumerate(argv) if a in COMMANDS), None)
    if cmd is None:
        return argv
    file_tokens = read_config(Path(argv[i + 1]))
    rest = argv[:i] + argv[i + 2 :]
    cmd = rest.index(argv[cmd])
    return rest[: cmd + 1] + file_tokens + rest[cmd + 1 :]


def _options(args) -> SolverOptions:
    return SolverOptions(
        first_step_tol=args.first_step_tol,
        snapshot_stride=args.snapshot_stride or 1,
        check_residual=True,
    )


def cmd_solve(args) -> int:
    opts = _options(args)
    for alpha in args.alpha:
        req = RunRequest(args.preset, alpha, args.m, args.n, args.t_final, opts)
        tr = run_request(req)
        stride = args.snapshot_stride or max(1, args.n // 8)
        outdir = args.out / f"{args.preset}_alpha{alpha:.6g}_N{args.n}_M{args.m}"
        outdir.mkdir(parents=True, exist_ok=True)
        levels = sorted(set(range(0, args.n + 1, stride)) | {args.n})
        for n in levels:
            write_snapshot(outdir / f"snapshot_{n:06d}.csv", tr.at(n))
        print(f"alpha={alpha:.6g} N={args.n} M={args.m}: wrote {len(levels)} snapshots to {outdir}")
        print(f"  max scheme residual: {tr.residuals.max():.3e}")
        if tr.spec.exact is not None:
            print(f"  global L2 error: {global_error(tr):.6e}")
    return 0


def cmd_study_temporal(args) -> int:
    Ns = [args.n * 2**k for k in range(args.levels)]
    series = [
        temporal_study(args.preset, a, args.m, Ns, _options(args), args.jobs) for a in args.alpha
    ]
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"temporal_{args.preset}_M{args.m}.csv"
    write_error_series(path, series)
    for s in series:
        print(f"alpha={s.alpha:.6g}: slope of log error vs log N = {s.slope():.4f}")
    print(f"wrote {path}")
    return 0


def cmd_study_spatial(args) -> int:
    Ms = [args.m * 2**k for k in range(args.levels)]
    series = [
        spatial_study(args.preset, a, args.n, Ms, _options(args), args.jobs) for a in args.alpha
    ]
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"spatial_{args.preset}_N{args.n}.csv"
    write_error_series(path, series)
    for s in series:
        print(f"alpha={s.alpha:.6g}: slope of log error vs log M = {s.slope():.4f}")
    print(f"wrote {path}")
    return 0


def cmd_study_zfk_tables(args) -> int:
    report = zfk_tables(
        args.alpha, M=args.m, N=args.n, space_N=args.space_n, space_M=args.space_m,
        preset=args.preset, options=_options(args), jobs=args.jobs,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"orders_{args.preset}.csv"
    write_orders(path, report)
    print(report.table())
    print(f"wrote {path}")
    return 0


def cmd_blowup(args) -> int:
    opts = _options(args)
    args.out.mkdir(parents=True, exist_ok=True)
    for alpha in args.alpha:
        tr = run_request(RunRequest(args.preset, alpha, args.m, args.n, args.t_final, opts))
        bs = derivative_blowup_series(tr, args.x_probe)
        path = args.out / f"blowup_{args.preset}_alpha{alpha:.6g}.csv"
        write_csv(path, ("t", "dudt"), zip(bs.times, bs.quotients))
        print(f"alpha={alpha:.6g}: log-log slope of du/dt at x={args.x_probe:g} is {bs.slope:.4f}")
        print(f"wrote {path}")
    return 0


def cmd_validate(args) -> int:
    status = 0
    for alpha in args.alpha:
        spec = make_preset(args.preset, alpha, args.t_final)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = validate(spec)
        print(f"alpha = {alpha:.6g}")
        for line in report.lines():
            print("  " + line)
        if not report.ok:
            status = 1
    return status


HANDLERS = {
    "solve": cmd_solve,
    "study-temporal": cmd_study_temporal,
    "study-spatial": cmd_study_spatial,
    "study-zfk-tables": cmd_study_zfk_tables,
    "blowup": cmd_blowup,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _expand_config(argv)
    except (OSError, ValueError) as exc:
        parser.error(str(exc))
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return HANDLERS[args.command](args)
    except L1GalerkinError as exc:
        step = getattr(exc, "step", None)
        where = f" (step {step})" if step is not None else ""
        print(f"error{where}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
