"""Command-line front end.

Machine output (JSON reports, CSV tables) goes to stdout unless a path is
given; diagnostics go to stderr.  Exit codes: 0 success, 1 usage or I/O
error, 2 bound not attainable (TP phase 1, unreachable target CR).
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import sys
from pathlib import Path

from . import baselines as B
from . import io as fio
from .cameo import ERROR_BOUND, TARGET_CR, CompressorConfig, compress, decompress, reconstruction_report
from .core import AcfGuardError, AggKind, QualityMeasure, StatKind, TimeSeries
from .parallel import DEFAULT_BUDGET_FRACTION, compress_coarse, compress_fine, default_threads
from .synthetic import FAMILIES, SyntheticSpec, generate

EXIT_OK, EXIT_ERROR, EXIT_UNSAT = 0, 1, 2
_UNSAT = ("constraint_unsatisfiable", "target_unreachable")


class UsageError(Exception):
    pass


def _hops(text: str):
    text = text.strip().lower()
    return int(text) if text.isdigit() else text


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _kv(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), float(v)


def _add_stat_flags(p):
    p.add_argument("--lags", type=int, required=True)
    p.add_argument("--stat", choices=[s.value for s in StatKind], default="acf")
    p.add_argument("--metric", choices=[q.value for q in QualityMeasure], default="mae")
    p.add_argument("--window", type=int, default=1)
    p.add_argument("--agg", choices=[a.value for a in AggKind], default=None)


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="CSV file with one value per row")
    p.add_argument("--column", default="0", help="column index (0-based) or header name")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="acfguard", description="ACF-preserving lossy time-series compression")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="compress a CSV series")
    _add_input(c)
    c.add_argument("--output", help="compressed file (kept points) or model CSV for pmc/swing/dft")
    c.add_argument("--method", choices=("cameo",) + B.METHODS, default="cameo")
    _add_stat_flags(c)
    c.add_argument("--epsilon", type=float, default=0.01)
    c.add_argument("--mode", choices=("error-bound", "target-cr"), default="error-bound")
    c.add_argument("--target-cr", type=float)
    c.add_argument("--hops", type=_hops)
    c.add_argument("--threads-fine", type=int)
    c.add_argument("--threads-coarse", type=int, default=1)
    c.add_argument("--budget-fraction", type=float, default=DEFAULT_BUDGET_FRACTION)
    c.add_argument("--param", type=float, help="max_dev for pmc/swing, kept coefficients for dft")
    c.add_argument("--verify-every", type=int)
    c.add_argument("--report")
    c.add_argument("--plot")
    c.add_argument("--no-timing", action="store_true", help="omit runtimes so reruns are byte-identical")

    d = sub.add_parser("decompress", help="reconstruct a series from a compressed file")
    d.add_argument("--input", required=True)
    d.add_argument("--output")

    e = sub.add_parser("evaluate", help="deviation of a reconstruction from the original")
    _add_input(e)
    src = e.add_mutually_exclusive_group(required=True)
    src.add_argument("--reconstruction", help="CSV of the reconstructed series")
    src.add_argument("--compressed", help="compressed file")
    _add_stat_flags(e)
    e.add_argument("--epsilon", type=float)
    e.add_argument("--report")
    e.add_argument("--plot")

    s = sub.add_parser("sweep", help="CR against ACF deviation over a parameter ladder")
    _add_input(s)
    s.add_argument("--method", choices=("cameo",) + B.METHODS, required=True)
    s.add_argument("--sweep", type=_floats, required=True,
                   help="error bounds (cameo, vw, tp, pip), max_dev (pmc, swing) or kept coefficients (dft)")
    _add_stat_flags(s)
    s.add_argument("--hops", type=_hops)
    s.add_argument("--output", help="CSV frontier table (default stdout)")
    s.add_argument("--report")
    s.add_argument("--plot")
    s.add_argument("--no-timing", action="store_true")

    b = sub.add_parser("bench", help="time serial, fine and coarse runs")
    _add_input(b, required=False)
    b.add_argument("--family", choices=FAMILIES, default="sinusoid")
    b.add_argument("--n", type=int, default=20000)
    b.add_argument("--seed", type=int, default=0)
    _add_stat_flags(b)
    b.add_argument("--epsilon", type=float, default=0.01)
    b.add_argument("--hops", type=_hops)
    b.add_argument("--threads-fine", type=int)
    b.add_argument("--threads-coarse", type=int, default=1)
    b.add_argument("--budget-fraction", type=float, default=DEFAULT_BUDGET_FRACTION)
    b.add_argument("--output")

    g = sub.add_parser("generate", help="write a seeded synthetic series as CSV")
    g.add_argument("--family", choices=FAMILIES, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--param", type=_kv, action="append", default=[], metavar="KEY=VALUE")
    g.add_argument("--output")
    return ap


# ------------------------------------------------------------------ helpers

def _column(text: str):
    return int(text) if text.lstrip("-").isdigit() else text


def _load(args) -> TimeSeries:
    return fio.load_csv(args.input, _column(args.column))


def _agg(args) -> AggKind:
    if args.agg is None:
        return AggKind.NONE if args.window == 1 else AggKind.MEAN
    return AggKind(args.agg)


def _config(args, epsilon=None) -> CompressorConfig:
    mode = TARGET_CR if getattr(args, "mode", "error-bound") == "target-cr" else ERROR_BOUND
    return CompressorConfig(
        lags=args.lags,
        epsilon=args.epsilon if epsilon is None else epsilon,
        stat=args.stat,
        metric=args.metric,
        window=args.window,
        agg=_agg(args),
        hops=getattr(args, "hops", None),
        mode=mode,
        target_cr=getattr(args, "target_cr", None) if mode == TARGET_CR else None,
        verify_every=getattr(args, "verify_every", None),
    )


def _write_text(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _csv_text(rows, fields) -> str:
    buf = _io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in fields})
    return buf.getvalue()


def _strip_timing(rep) -> None:
    rep.runtime_ms = None
    for k in ("local_ms", "global_ms"):
        rep.extra.pop(k, None)


def _cameo(series, cfg, fine, coarse, p):
    if coarse > 1:
        return compress_coarse(series, cfg, coarse, p)
    if fine > 1:
        return compress_fine(series, cfg, fine)
    return compress(series, cfg)


# ------------------------------------------------------------------ commands

def cmd_compress(args) -> int:
    if args.mode == "target-cr" and args.target_cr is None:
        raise UsageError("--mode target-cr needs --target-cr")
    if args.mode == "error-bound" and args.target_cr is not None:
        raise UsageError("--target-cr needs --mode target-cr")
    if args.method in B.SEGMENTERS and args.param is None:
        raise UsageError(f"--method {args.method} needs --param")
    fine = args.threads_fine if args.threads_fine is not None else default_threads()
    series = _load(args)
    cfg = _config(args)
    model = None
    if args.method == "cameo":
        cs, rep = _cameo(series, cfg, fine, args.threads_coarse, args.budget_fraction)
        recon = decompress(cs).values
    elif args.method in B.SIMPLIFIERS:
        cs, rep = B.run_simplifier(series, args.method, cfg)
        recon = decompress(cs).values
    else:
        param = int(args.param) if args.method == "dft" else args.param
        runner = {"pmc": B.compress_pmc, "swing": B.compress_swing, "dft": B.compress_dft}[args.method]
        model, rep = runner(series, param, cfg)
        cs, recon = None, model.reconstruct()
    if args.no_timing:
        _strip_timing(rep)
    if args.output:
        if cs is not None:
            fio.write_compressed(args.output, cs)
        elif args.method == "dft":
            fio.write_coefficients(args.output, model)
        else:
            fio.write_segments(args.output, model)
    text = fio.write_report(rep)
    _write_text(args.report, text)
    if args.plot:
        from .plotting import plot_overlay

        plot_overlay(series.values, recon, args.plot, kept=None if cs is None else cs.indices,
                     title=f"{rep.method}  CR={rep.cr:.2f}")
    if rep.status in _UNSAT:
        print(f"acfguard: {rep.message}", file=sys.stderr)
        return EXIT_UNSAT
    if not rep.passed:
        print("acfguard: scratch verification failed", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK


def cmd_decompress(args) -> int:
    cs = fio.read_compressed(args.input)
    y = decompress(cs).values
    if args.output:
        fio.write_csv(args.output, y, header="value")
    else:
        fio.write_csv(sys.stdout, y, header="value")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    series = _load(args)
    cfg = _config(args, epsilon=args.epsilon if args.epsilon is not None else 0.0)
    if args.compressed:
        cs = fio.read_compressed(args.compressed)
        if cs.n != len(series):
            raise UsageError(f"compressed length {cs.n} does not match input length {len(series)}")
        y = decompress(cs).values
        n_kept = cs.n_kept
    else:
        y = fio.load_csv(args.reconstruction).values
        if y.shape[0] != len(series):
            raise UsageError("reconstruction length does not match input length")
        n_kept = int(y.shape[0])

    rep = reconstruction_report(
        "evaluate", series.values, y, n_kept=n_kept, bits=64.0 * n_kept, lags=cfg.lags, stat=cfg.stat,
        metric=cfg.metric, window=cfg.window, agg=cfg.agg, config=cfg.echo(), epsilon=args.epsilon,
    )
    rep.cr = len(series) / n_kept
    _write_text(args.report, fio.write_report(rep))
    if args.plot:
        from .plotting import plot_overlay

        plot_overlay(series.values, y, args.plot, title="reconstruction")
    return EXIT_OK if rep.passed else EXIT_UNSAT


def cmd_sweep(args) -> int:
    series = _load(args)
    reports = []
    if args.method in B.SEGMENTERS:
        bcfg = B.BaselineConfig(args.method, args.lags, sweep=args.sweep, stat=args.stat, metric=args.metric,
                                window=args.window, agg=_agg(args))
        rows, reports = B.sweep(series, bcfg)
    else:
        rows = []
        for eps in args.sweep:
            cfg = _config(args, epsilon=eps)
            if args.method == "cameo":
                _, rep = compress(series, cfg)
            else:
                _, rep = B.run_simplifier(series, args.method, cfg)
            rows.append({"param": eps, "cr": rep.cr, "acf_dev": rep.verification["scratch_acf_dev"],
                         "nrmse": rep.nrmse, "passed": rep.passed})
            reports.append(rep)
    if args.no_timing:
        for r in reports:
            _strip_timing(r)
    fields = ["param", "cr", "acf_dev", "nrmse"] + (["passed"] if args.method not in B.SEGMENTERS else [])
    _write_text(args.output, _csv_text(rows, fields))
    if args.report:
        fio.write_report({"method": args.method, "frontier": rows, "reports": [fio.report_dict(r) for r in reports]},
                         args.report)
    if args.plot:
        from .plotting import plot_frontier

        plot_frontier({args.method: rows}, args.plot, title=f"{args.method} frontier")
    return EXIT_OK


def cmd_bench(args) -> int:
    series = _load(args) if args.input else generate(SyntheticSpec(args.family, args.n, args.seed))
    cfg = _config(args)
    fine = args.threads_fine if args.threads_fine is not None else default_threads()
    runs = [("serial", 1, lambda: compress(series, cfg))]
    if fine > 1:
        runs.append(("fine", fine, lambda: compress_fine(series, cfg, fine)))
    if args.threads_coarse > 1:
        runs.append(("coarse", args.threads_coarse,
                     lambda: compress_coarse(series, cfg, args.threads_coarse, args.budget_fraction)))
    rows = []
    for name, t, fn in runs:
        cs, rep = fn()
        rows.append({"variant": name, "threads": t, "n": rep.n, "cr": rep.cr,
                     "acf_dev": rep.verification["scratch_acf_dev"], "runtime_ms": rep.runtime_ms,
                     "passed": rep.passed})
    _write_text(args.output, _csv_text(rows, list(rows[0])))
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_ERROR


def cmd_generate(args) -> int:
    ts = generate(SyntheticSpec(args.family, args.n, args.seed, dict(args.param)))
    if args.output:
        fio.write_csv(args.output, ts.values, header="value")
    else:
        fio.write_csv(sys.stdout, ts.values, header="value")
    return EXIT_OK


COMMANDS = {
    "compress": cmd_compress,
    "decompress": cmd_decompress,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "bench": cmd_bench,
    "generate": cmd_generate,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"acfguard: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (AcfGuardError, OSError, ValueError) as exc:
        print(f"acfguard: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
