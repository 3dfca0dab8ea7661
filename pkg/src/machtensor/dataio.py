"""Synthetic tensors, monitoring-stream ingestion and text file formats.

Tensor text format::

    dims: I1 I2 ... Id
    <prod(I) values, one per line, mode-1 index fastest>

Sparse files share the header and list one ``i1 ... id value`` line per
stored entry with 1-based indices. Values are written with Python's
shortest round-trip ``repr`` so reading back is exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .decomp import TuckerModel
from .errors import ArgumentError, ParseError
from .tensor import DenseTensor, SparseTensor

MISSING_POLICIES = ("zero", "carry_forward")


# ---------------------------------------------------------------- synthetic


def synth_cauchy_tensor(n):
    """``n x n x n`` tensor with entry ``1 / (i + j + k)`` (1-based)."""
    if n < 1:
        raise ArgumentError("n must be positive")
    i = np.arange(1, n + 1, dtype=np.float64)
    return DenseTensor(1.0 / (i[:, None, None] + i[None, :, None] + i[None, None, :]))


@dataclass(frozen=True)
class MeasurementRecord:
    machine_id: str
    metric: str
    timestamp: int
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ArgumentError(f"non-finite measurement for {self.machine_id}/{self.metric}")


@dataclass(frozen=True)
class TensorBuildSpec:
    time_bucket_seconds: int = 60
    missing_policy: str = "zero"
    machine_order: Optional[Sequence[str]] = None
    metric_order: Optional[Sequence[str]] = None

    def __post_init__(self):
        if self.time_bucket_seconds <= 0:
            raise ArgumentError("time bucket must be positive")
        if self.missing_policy not in MISSING_POLICIES:
            raise ArgumentError(f"missing_policy must be one of {MISSING_POLICIES}")


class AxisLabels(NamedTuple):
    machines: tuple
    metrics: tuple
    bucket_starts: tuple


def synth_monitoring_stream(
    n_machines=30,
    metrics=("cpu", "mem", "net_in", "net_out", "disk", "procs"),
    n_buckets=288,
    bucket_seconds=300,
    gap_fraction=0.0,
    anomaly_machine=None,
    start=1_700_000_000,
    seed=0,
):
    """Seeded stand-in for a monitoring database dump.

    Each machine reports every metric once per bucket: a machine load
    level times a metric scale times a daily sinusoid, plus noise. One
    machine (``anomaly_machine``) runs hot during the last quarter of the
    window. ``gap_fraction`` of the records are dropped at random.
    """
    rng = np.random.default_rng(seed)
    load = rng.uniform(0.5, 1.5, n_machines)
    scale = rng.uniform(1.0, 10.0, len(metrics))
    phase = 2 * np.pi * np.arange(n_buckets) * bucket_seconds / 86_400
    daily = 1.0 + 0.5 * np.sin(phase)
    if anomaly_machine is None:
        anomaly_machine = n_machines - 1
    width = len(str(n_machines - 1))
    records = []
    for m in range(n_machines):
        for j, metric in enumerate(metrics):
            base = load[m] * scale[j] * daily
            noisy = base + 0.05 * scale[j] * rng.standard_normal(n_buckets)
            if m == anomaly_machine:
                noisy[3 * n_buckets // 4:] *= 1.8
            keep = rng.random(n_buckets) >= gap_fraction
            for k in np.flatnonzero(keep):
                records.append(
                    MeasurementRecord(
                        machine_id=f"m{m:0{width}d}",
                        metric=metric,
                        timestamp=int(start + k * bucket_seconds),
                        value=float(noisy[k]),
                    )
                )
    return records


# ---------------------------------------------------------------- ingestion


def _axis(names, explicit, kind):
    if explicit is None:
        return tuple(sorted(names))
    explicit = tuple(explicit)
    unknown = sorted(set(names) - set(explicit))
    if unknown:
        raise ArgumentError(f"unknown {kind} {unknown[0]!r} not in the given ordering")
    return explicit


def ingest(records, spec=None):
    """Build a machine x metric x time-bucket tensor from measurements.

    Records falling in the same cell are averaged. Empty cells are zero or,
    with ``missing_policy="carry_forward"``, repeat the last earlier value
    of the same machine and metric. Returns ``(tensor, AxisLabels)``.
    """
    spec = spec or TensorBuildSpec()
    records = list(records)
    if not records:
        raise ArgumentError("no measurements to ingest")
    machines = _axis({r.machine_id for r in records}, spec.machine_order, "machine")
    metrics = _axis({r.metric for r in records}, spec.metric_order, "metric")
    m_pos = {name: i for i, name in enumerate(machines)}
    k_pos = {name: i for i, name in enumerate(metrics)}

    width = spec.time_bucket_seconds
    buckets = np.array([r.timestamp // width for r in records], dtype=np.int64)
    first = int(buckets.min())
    n_buckets = int(buckets.max()) - first + 1
    dims = (len(machines), len(metrics), n_buckets)

    rows = np.array([m_pos[r.machine_id] for r in records])
    cols = np.array([k_pos[r.metric] for r in records])
    values = np.array([r.value for r in records], dtype=np.float64)
    total = np.zeros(dims)
    count = np.zeros(dims)
    np.add.at(total, (rows, cols, buckets - first), values)
    np.add.at(count, (rows, cols, buckets - first), 1.0)
    seen = count > 0
    data = np.divide(total, count, out=np.zeros(dims), where=seen)

    if spec.missing_policy == "carry_forward":
        # index of the latest observed bucket at or before each position
        idx = np.where(seen, np.arange(n_buckets), -1)
        idx = np.maximum.accumulate(idx, axis=2)
        filled = np.take_along_axis(data, np.maximum(idx, 0), axis=2)
        data = np.where(idx >= 0, filled, 0.0)

    labels = AxisLabels(
        machines=machines,
        metrics=metrics,
        bucket_starts=tuple((first + np.arange(n_buckets)) * width),
    )
    return DenseTensor(data), labels


def read_measurements_csv(path):
    """Read ``machine_id,metric,timestamp,value`` rows (header required)."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != [
            "machine_id",
            "metric",
            "timestamp",
            "value",
        ]:
            raise ParseError("expected header machine_id,metric,timestamp,value", 1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, found {len(row)}", lineno)
            try:
                value = float(row[3])
                records.append(MeasurementRecord(row[0], row[1], int(row[2]), value))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    return records


def write_measurements_csv(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["machine_id", "metric", "timestamp", "value"])
        for r in records:
            writer.writerow([r.machine_id, r.metric, r.timestamp, repr(float(r.value))])


# ---------------------------------------------------------------- tensor text


def format_tensor(t):
    """Serialise a dense or sparse tensor to the text format."""
    header = "dims: " + " ".join(str(i) for i in t.dims)
    if isinstance(t, SparseTensor):
        body = [
            " ".join(str(i + 1) for i in idx) + " " + repr(v)
            for idx, v in zip(t.indices.tolist(), t.values.tolist())
        ]
    else:
        body = [repr(v) for v in t.values.tolist()]
    return "\n".join([header, *body]) + "\n"


def write_tensor(t, path):
    Path(path).write_text(format_tensor(t))


def write_matrix(m, path):
    write_tensor(DenseTensor(np.asarray(m, dtype=np.float64)), path)


def _parse_header(line):
    if not line.startswith("dims:"):
        raise ParseError("header must start with 'dims:'", 1)
    try:
        dims = tuple(int(tok) for tok in line[5:].split())
    except ValueError:
        raise ParseError("dimensions must be integers", 1) from None
    if not dims or any(i < 1 for i in dims):
        raise ParseError("dimensions must be positive", 1)
    return dims


def _locate_bad_value(lines):
    for lineno, line in enumerate(lines, start=2):
        for tok in line.split():
            try:
                value = float(tok)
            except ValueError:
                raise ParseError(f"not a number: {tok!r}", lineno) from None
            if not math.isfinite(value):
                raise ParseError(f"non-finite value {tok!r}", lineno)
    raise ParseError("unreadable value")


def _looks_sparse(lines, d):
    for line in lines:
        toks = line.split()
        if toks:
            return len(toks) == d + 1 and all(tok.isdigit() for tok in toks[:d])
    return True  # header only: a sparse tensor with no entries


def parse_tensor(text, kind=None):
    """Parse the text format. ``kind`` forces ``"dense"`` or ``"sparse"``.

    Auto-detection treats a file as sparse when its first data line holds
    ``d`` integers followed by one value.
    """
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty tensor file", 1)
    dims = _parse_header(lines[0].strip())
    body = lines[1:]
    d = len(dims)
    if kind is None:
        kind = "sparse" if _looks_sparse(body, d) else "dense"

    if kind == "dense":
        tokens = " ".join(body).split()
        expected = math.prod(dims)
        if len(tokens) != expected:
            raise ParseError(
                f"value count: expected {expected} values, found {len(tokens)}",
                len(lines),
            )
        try:
            values = np.array(tokens, dtype=np.float64)
        except ValueError:
            _locate_bad_value(body)
        if not np.all(np.isfinite(values)):
            _locate_bad_value(body)
        return DenseTensor(values, dims)

    if kind != "sparse":
        raise ArgumentError(f"unknown tensor kind {kind!r}")
    idx, vals = [], []
    for lineno, line in enumerate(body, start=2):
        toks = line.split()
        if not toks:
            continue
        if len(toks) != d + 1:
            raise ParseError(f"expected {d} indices and a value", lineno)
        try:
            index = [int(tok) - 1 for tok in toks[:d]]
            value = float(toks[d])
        except ValueError:
            raise ParseError("malformed sparse entry", lineno) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {toks[d]!r}", lineno)
        if any(not 0 <= i < n for i, n in zip(index, dims)):
            raise ParseError(f"index outside dims {dims}", lineno)
        idx.append(index)
        vals.append(value)
    return SparseTensor(dims, np.array(idx, dtype=np.int64).reshape(-1, d), vals)


def read_tensor(path, kind=None):
    return parse_tensor(Path(path).read_text(), kind=kind)


def read_matrix(path):
    t = read_tensor(path, kind="dense")
    if t.ndim != 2:
        raise ParseError(f"expected a matrix, found {t.ndim} modes", 1)
    return np.array(t.data)


# ---------------------------------------------------------------- models


def _floats(values):
    return " ".join(repr(float(v)) for v in values)


def save_model(model, directory):
    """Write ``core.txt``, ``factor_<m>.txt`` (1-based) and ``meta.txt``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_tensor(model.core, directory / "core.txt")
    for m, factor in enumerate(model.factors, start=1):
        write_matrix(factor, directory / f"factor_{m}.txt")
    meta = [
        "ranks = " + " ".join(str(r) for r in model.ranks),
        f"iterations = {model.iterations}",
        f"fit = {float(model.fit)!r}",
        "fit_history = " + _floats(model.fit_history),
    ]
    for m, s in enumerate(model.singular_values, start=1):
        meta.append(f"singular_values.mode_{m} = " + _floats(s))
    for w in model.warnings:
        meta.append(f"warning = {w}")
    (directory / "meta.txt").write_text("\n".join(meta) + "\n")


def load_model(directory):
    directory = Path(directory)
    meta_path = directory / "meta.txt"
    if not meta_path.exists():
        raise ParseError(f"{meta_path} not found")
    fields, warnings, spectra = {}, [], {}
    for lineno, line in enumerate(meta_path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition(" = ")
        if not sep:
            raise ParseError("expected 'key = value'", lineno)
        if key == "warning":
            warnings.append(value)
        elif key.startswith("singular_values.mode_"):
            spectra[int(key.rsplit("_", 1)[1])] = np.array(value.split(), dtype=float)
        else:
            fields[key] = value
    try:
        ranks = tuple(int(r) for r in fields["ranks"].split())
        iterations = int(fields["iterations"])
        fit = float(fields["fit"])
        history = tuple(float(v) for v in fields.get("fit_history", "").split())
    except (KeyError, ValueError) as exc:
        raise ParseError(f"bad model metadata: {exc}") from None
    core = read_tensor(directory / "core.txt", kind="dense")
    if core.dims != ranks:
        raise ParseError(f"core dims {core.dims} do not match ranks {ranks}")
    factors = tuple(
        read_matrix(directory / f"factor_{m}.txt") for m in range(1, len(ranks) + 1)
    )
    return TuckerModel(
        core=core,
        factors=factors,
        iterations=iterations,
        fit=fit,
        fit_history=history,
        singular_values=tuple(spectra[m] for m in sorted(spectra)),
        warnings=tuple(warnings),
    )
