"""Command-line interface: ``machtensor <subcommand> ...``.

Exit codes: 0 success, 2 usage error, 3 data error (parse, shape, I/O),
4 convergence error. ``MACHTENSOR_THREADS`` caps BLAS threads.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import dataio
from .decomp import HooiConfig, accuracy, check_ranks, hooi, hosvd
from .errors import ArgumentError, ConvergenceError, ParseError, ShapeError
from .mach import SparsifyConfig, mach_hooi, mach_hosvd, sparsify, theorem1_bound
from .metrics import UndefinedCorrelation, compare
from .tensor import densify

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4

REFERENCE_SPEEDUP = 7.52


class UsageError(Exception):
    pass


def _ranks(text):
    try:
        ranks = tuple(int(tok) for tok in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"ranks must be comma-separated integers: {text!r}")
    if not ranks or any(r < 1 for r in ranks):
        raise argparse.ArgumentTypeError("ranks must be positive")
    return ranks


def _probability(text):
    p = float(text)
    if not 0 < p <= 1:
        raise argparse.ArgumentTypeError(f"p must lie in (0, 1], got {text}")
    return p


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _fraction(text):
    value = float(text)
    if not 0 <= value < 1:
        raise argparse.ArgumentTypeError(f"expected a fraction in [0, 1), got {text}")
    return value


def _nonnegative(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError("expected a nonnegative number")
    return value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="machtensor",
        description="Tucker decompositions with MACH sparsification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_ranks(p):
        p.add_argument("--ranks", type=_ranks, required=True, help="e.g. 4,4,4")

    def add_sampling(p):
        p.add_argument("--p", type=_probability, required=True, help="keep probability")
        p.add_argument("--seed", type=_seed, default=0)

    def add_hooi(p):
        p.add_argument("--max-iters", type=_positive_int, default=50)
        p.add_argument("--fit-tol", type=_nonnegative, default=1e-4)

    p = sub.add_parser("synth", help="generate a synthetic tensor or measurement stream")
    p.add_argument("--n", type=_positive_int, help="size of the 1/(i+j+k) tensor")
    p.add_argument("--stream", action="store_true", help="write a monitoring CSV instead")
    p.add_argument("--machines", type=_positive_int, default=30)
    p.add_argument("--buckets", type=_positive_int, default=288)
    p.add_argument("--gaps", type=_fraction, default=0.0, help="fraction of records dropped")
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--output", required=True)

    p = sub.add_parser("ingest", help="measurement CSV to machine x metric x time tensor")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--bucket", type=_positive_int, default=60, help="seconds per time bucket")
    p.add_argument("--missing", choices=dataio.MISSING_POLICIES, default="zero")
    p.add_argument("--labels", help="write axis labels here")

    p = sub.add_parser("sparsify", help="MACH entrywise sampling")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    add_sampling(p)

    for name in ("hosvd", "hooi", "mach-hosvd", "mach-hooi"):
        p = sub.add_parser(name, help=f"{name} Tucker decomposition")
        p.add_argument("--input", required=True)
        p.add_argument("--output", required=True, help="model directory")
        add_ranks(p)
        if name.startswith("mach"):
            add_sampling(p)
            p.add_argument("--sparse-output", help="also write the sampled tensor")
        if name.endswith("hooi"):
            add_hooi(p)

    p = sub.add_parser("compare", help="compare an approximate model with an exact one")
    p.add_argument("--exact", required=True)
    p.add_argument("--approx", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--output", help="key-value report path")

    p = sub.add_parser("bound", help="evaluate the MACH-HOSVD error bound")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--n", type=_positive_int, help="use the synthetic 1/(i+j+k) tensor")
    p.add_argument("--sparse", help="sampled tensor; drawn with --seed when absent")
    add_ranks(p)
    add_sampling(p)
    p.add_argument("--output", help="key-value report path")

    p = sub.add_parser("bench", help="exact vs MACH timing and accuracy")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input")
    src.add_argument("--n", type=_positive_int, help="use the synthetic 1/(i+j+k) tensor")
    add_ranks(p)
    add_sampling(p)
    add_hooi(p)
    p.add_argument("--method", choices=("hooi", "hosvd"), default="hooi")
    p.add_argument("--trials", type=_positive_int, default=1, help="seeds seed..seed+trials-1")
    p.add_argument("--repeats", type=_positive_int, default=3, help="timing repetitions")
    p.add_argument("--output", required=True, help="report CSV")
    p.add_argument("--timing-output", help="timing CSV (default: <output>.timing.csv)")
    return parser


def _write(text, path):
    if path:
        Path(path).write_text(text)
    sys.stdout.write(text)


def _load_dense(path):
    return densify(dataio.read_tensor(path))


def _cmd_synth(args):
    if args.stream:
        records = dataio.synth_monitoring_stream(
            n_machines=args.machines,
            n_buckets=args.buckets,
            gap_fraction=args.gaps,
            seed=args.seed,
        )
        dataio.write_measurements_csv(records, args.output)
        return
    if args.n is None:
        raise UsageError("synth needs --n or --stream")
    dataio.write_tensor(dataio.synth_cauchy_tensor(args.n), args.output)


def _cmd_ingest(args):
    spec = dataio.TensorBuildSpec(
        time_bucket_seconds=args.bucket, missing_policy=args.missing
    )
    tensor, labels = dataio.ingest(dataio.read_measurements_csv(args.input), spec)
    dataio.write_tensor(tensor, args.output)
    if args.labels:
        lines = [
            "machines = " + " ".join(labels.machines),
            "metrics = " + " ".join(labels.metrics),
            "bucket_starts = " + " ".join(str(int(b)) for b in labels.bucket_starts),
        ]
        Path(args.labels).write_text("\n".join(lines) + "\n")


def _cmd_sparsify(args):
    t = dataio.read_tensor(args.input)
    dataio.write_tensor(sparsify(t, SparsifyConfig(args.p, args.seed)), args.output)


def _cmd_decompose(args):
    t = _load_dense(args.input)
    check_ranks(t.dims, args.ranks)
    if args.command.endswith("hooi"):
        hcfg = HooiConfig(args.max_iters, args.fit_tol)
    if args.command == "hosvd":
        model = hosvd(t, args.ranks)
    elif args.command == "hooi":
        model = hooi(t, args.ranks, hcfg)
    else:
        scfg = SparsifyConfig(args.p, args.seed)
        if args.command == "mach-hosvd":
            model, xhat = mach_hosvd(t, args.ranks, scfg)
        else:
            model, xhat = mach_hooi(t, args.ranks, scfg, hcfg)
        if args.sparse_output:
            dataio.write_tensor(xhat, args.sparse_output)
    dataio.save_model(model, args.output)


def _cmd_compare(args):
    exact = dataio.load_model(args.exact)
    approx = dataio.load_model(args.approx)
    report = compare(exact, approx, _load_dense(args.reference))
    if args.output:
        Path(args.output).write_text(report.to_text())
    sys.stdout.write(report.to_table())


def _source(args):
    return dataio.synth_cauchy_tensor(args.n) if args.n else _load_dense(args.input)


def _cmd_bound(args):
    x = _source(args)
    check_ranks(x.dims, args.ranks)
    if args.sparse:
        xhat = dataio.read_tensor(args.sparse)
    else:
        xhat = sparsify(x, SparsifyConfig(args.p, args.seed))
    _write(theorem1_bound(x, xhat, args.ranks, args.p).to_text(), args.output)


def _timed(fn, repeats):
    times, result = [], None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times), result


def _cmd_bench(args):
    t = _source(args)
    check_ranks(t.dims, args.ranks)
    hcfg = HooiConfig(args.max_iters, args.fit_tol)
    if args.method == "hooi":
        exact_fn = lambda: hooi(t, args.ranks, hcfg)  # noqa: E731
        mach_fn = lambda cfg: mach_hooi(t, args.ranks, cfg, hcfg)[0]  # noqa: E731
    else:
        exact_fn = lambda: hosvd(t, args.ranks)  # noqa: E731
        mach_fn = lambda cfg: mach_hosvd(t, args.ranks, cfg)[0]  # noqa: E731

    exact_sec, exact = _timed(exact_fn, args.repeats)
    modes = range(1, t.ndim + 1)
    header = (
        ["seed", "p"]
        + [f"rho_{m}" for m in modes]
        + ["accuracy_exact", "accuracy_mach", "core_exact", "core_mach"]
    )
    rows, timing_rows, accs, rhos = [], [], [], []
    for trial in range(args.trials):
        seed = args.seed + trial
        cfg = SparsifyConfig(args.p, seed)
        mach_sec, model = _timed(lambda: mach_fn(cfg), args.repeats)
        report = compare(exact, model, t)
        accs.append(report.accuracy_mach)
        rhos.append(report.per_mode_rho)
        rows.append(
            [str(seed), repr(args.p)]
            + [repr(r) for r in report.per_mode_rho]
            + [repr(v) for v in (report.accuracy_exact, report.accuracy_mach)]
            + [repr(v) for v in report.core_interaction]
        )
        timing_rows.append([str(seed), f"{exact_sec:.6f}", f"{mach_sec:.6f}",
                            f"{exact_sec / mach_sec:.4f}", repr(REFERENCE_SPEEDUP)])
    if args.trials > 1:
        rows.append(
            ["median", repr(args.p)]
            + [repr(float(v)) for v in np.median(np.array(rhos), axis=0)]
            + [repr(float(accuracy(t, exact))), repr(float(np.median(accs))), "", ""]
        )
    report_text = "\n".join(",".join(r) for r in [header] + rows) + "\n"
    timing_header = ["seed", "exact_sec", "mach_sec", "speedup", "reference_speedup"]
    timing_text = "\n".join(",".join(r) for r in [timing_header] + timing_rows) + "\n"
    Path(args.output).write_text(report_text)
    Path(args.timing_output or f"{args.output}.timing.csv").write_text(timing_text)
    sys.stdout.write(report_text)
    sys.stdout.write(timing_text)


COMMANDS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "sparsify": _cmd_sparsify,
    "hosvd": _cmd_decompose,
    "hooi": _cmd_decompose,
    "mach-hosvd": _cmd_decompose,
    "mach-hooi": _cmd_decompose,
    "compare": _cmd_compare,
    "bound": _cmd_bound,
    "bench": _cmd_bench,
}


def _thread_limit():
    threads = os.environ.get("MACHTENSOR_THREADS")
    if not threads:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(threads))


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            COMMANDS[args.command](args)
    except UndefinedCorrelation as exc:
        print(f"machtensor: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (UsageError, ArgumentError) as exc:
        print(f"machtensor: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"machtensor: parse error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ShapeError as exc:
        print(f"machtensor: shape error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"machtensor: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ConvergenceError as exc:
        print(f"machtensor: convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    return 0


if __name__ == "__main__":
    sys.exit(main())
