"""Dataset loading, evaluation statistics, linear-model oracles, reports.

The evaluation mirrors the usual robustness protocol: attack every sample,
count already-misclassified ones as zero-distance successes, then summarize
per attack with success rates at fixed thresholds, mean/variance of the
distances, nearest-rank quantiles, and a cumulative defense curve.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifier import Sample
from .errors import InvalidInput, IoError, ParseError, UnsupportedModel, ValidationError

WORKERS_ENV = "LOGBARRIER_WORKERS"


def _worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def load_dataset(path):
    """Read samples from CSV: M pixel columns in [0,1] then an integer label.

    A header row is skipped when its first cell is not numeric. Out-of-range
    pixels are rejected with the offending row index, not clamped.
    """
    samples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    if not rows:
        return samples
    start = 0
    try:
        float(rows[0][0])
    except ValueError:
        start = 1
    width = None
    for idx in range(start, len(rows)):
        row = rows[idx]
        if width is None:
            width = len(row)
            if width < 2:
                raise ParseError("row %d: need at least one pixel and a label" % idx)
        elif len(row) != width:
            raise ParseError(
                "row %d: expected %d columns, got %d" % (idx, width, len(row))
            )
        try:
            pixels = np.array([float(v) for v in row[:-1]])
            label = int(row[-1])
        except ValueError as exc:
            raise ParseError("row %d: %s" % (idx, exc)) from exc
        if pixels.size and (pixels.min() < 0.0 or pixels.max() > 1.0):
            raise ValidationError("row %d: pixel outside [0, 1]" % idx)
        if label < 0:
            raise ValidationError("row %d: negative label" % idx)
        samples.append(Sample(pixels, label))
    return samples


def save_dataset(samples, path):
    """Write samples in the format load_dataset reads."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for s in samples:
            writer.writerow([repr(float(v)) for v in s.pixels] + [s.label])


@dataclass
class PerSampleRecord:
    sample_id: int
    attack: str
    success: bool
    distance_l2: float
    distance_linf: float
    iterations: int


@dataclass
class AttackSummary:
    attack: str
    num_samples: int
    num_failed: int
    success_rate_at: dict
    mean_distance: dict
    variance_distance: dict
    quantile: dict
    curve: list


@dataclass
class EvaluationReport:
    norm: str
    per_sample: list = field(default_factory=list)
    summaries: dict = field(default_factory=dict)


def nearest_rank_quantile(values, q):
    """Smallest value v with at least a q fraction of the data <= v."""
    if not 0.0 < q <= 1.0:
        raise InvalidInput("quantile must lie in (0, 1]")
    ordered = sorted(values)
    if not ordered:
        return math.inf
    rank = math.ceil(q * len(ordered))
    return ordered[rank - 1]


def _distance(record, norm):
    return record.distance_linf if norm == "linf" else record.distance_l2


def _summarize(name, records, thresholds, quantiles, norm):
    n = len(records)
    finite = sorted(
        _distance(r, norm) for r in records if r.success and math.isfinite(_distance(r, norm))
    )
    failed = n - len(finite)
    rates = {}
    for t in thresholds:
        hits = sum(1 for d in finite if d <= t)
        rates[t] = 100.0 * hits / n if n else 0.0
    means = {}
    variances = {}
    for label, p in (("l2", 2), ("linf", "inf")):
        ds = [
            (r.distance_l2 if p == 2 else r.distance_linf)
            for r in records
            if r.success and math.isfinite(_distance(r, norm))
        ]
        means[label] = float(np.mean(ds)) if ds else math.inf
        variances[label] = float(np.var(ds)) if ds else math.inf
    quants = {q: nearest_rank_quantile(finite, q) for q in quantiles}
    curve = []
    for i, d in enumerate(finite):
        if curve and curve[-1][0] == d:
            curve[-1] = (d, (i + 1) / n)
        else:
            curve.append((d, (i + 1) / n))
    return AttackSummary(
        attack=name,
        num_samples=n,
        num_failed=failed,
        success_rate_at=rates,
        mean_distance=means,
        variance_distance=variances,
        quantile=quants,
        curve=curve,
    )


def evaluate(model, samples, attacks, thresholds=(), quantiles=(0.9,), norm="l2"):
    """Run each named attack over the dataset and aggregate statistics.

    ``attacks`` is a list of (name, runner) pairs where runner(model, sample,
    sample_index) returns an AttackResult. Samples the model already gets
    wrong are recorded as zero-distance successes without running the attack.
    """
    if norm not in ("l2", "linf"):
        raise InvalidInput("norm must be l2 or linf")
    thresholds = sorted(thresholds)
    report = EvaluationReport(norm=norm)
    workers = _worker_count()

    def run_one(task):
        name, runner, idx, sample = task
        if model.predict(sample.pixels) != sample.label:
            return PerSampleRecord(idx, name, True, 0.0, 0.0, 0)
        result = runner(model, sample, idx)
        return PerSampleRecord(
            idx,
            name,
            bool(result.success),
            float(result.distance_l2),
            float(result.distance_linf),
            int(result.total_inner_steps),
        )

    tasks = [
        (name, runner, idx, sample)
        for name, runner in attacks
        for idx, sample in enumerate(samples)
    ]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_one, tasks))
    else:
        records = [run_one(t) for t in tasks]
    report.per_sample = records
    for name, _ in attacks:
        own = [r for r in records if r.attack == name]
        report.summaries[name] = _summarize(name, own, thresholds, quantiles, norm)
    return report


def linear_oracle(model, sample, norm):
    """Exact boundary distance for a single-affine-layer model.

    Minimum over rival classes of the logit gap divided by the dual norm of
    the weight difference. Ignores the box; a true lower bound whenever the
    unconstrained projection stays inside it. Returns 0 for samples the model
    already misclassifies.
    """
    if len(model.layers) != 1:
        raise UnsupportedModel("oracle needs exactly one affine layer")
    if norm not in (2, "inf"):
        raise InvalidInput("norm must be 2 or inf")
    layer = model.layers[0]
    x = np.asarray(sample.pixels, dtype=float)
    c = sample.label
    best = math.inf
    for j in range(model.num_classes):
        if j == c:
            continue
        dw = layer.weights[c] - layer.weights[j]
        gap = float(dw @ x + layer.bias[c] - layer.bias[j])
        dual = float(np.abs(dw).sum()) if norm == "inf" else float(np.linalg.norm(dw))
        if dual == 0.0:
            continue
        best = min(best, gap / dual)
    return max(best, 0.0)


def oracle_projection(model, sample, norm):
    """Unconstrained nearest boundary point behind linear_oracle's bound."""
    if len(model.layers) != 1:
        raise UnsupportedModel("oracle needs exactly one affine layer")
    layer = model.layers[0]
    x = np.asarray(sample.pixels, dtype=float)
    c = sample.label
    best = None
    best_dist = math.inf
    for j in range(model.num_classes):
        if j == c:
            continue
        dw = layer.weights[c] - layer.weights[j]
        gap = float(dw @ x + layer.bias[c] - layer.bias[j])
        dual = float(np.abs(dw).sum()) if norm == "inf" else float(np.linalg.norm(dw))
        if dual == 0.0:
            continue
        dist = gap / dual
        if dist < best_dist:
            best_dist = dist
            if norm == "inf":
                best = x - dist * np.sign(dw)
            else:
                best = x - gap * dw / float(dw @ dw)
    if best is None:
        raise UnsupportedModel("no rival class with distinct weights")
    return best


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return "%.9g" % value
    return str(value)


def write_report(report, path, fmt="csv"):
    """Write per-sample rows as CSV or an aggregate text summary."""
    if fmt not in ("csv", "text"):
        raise InvalidInput("format must be csv or text")
    try:
        with open(path, "w", newline="") as fh:
            if fmt == "csv":
                writer = csv.writer(fh)
                writer.writerow(["id", "attack", "success", "l2", "linf", "iters"])
                for r in report.per_sample:
                    writer.writerow(
                        [
                            r.sample_id,
                            r.attack,
                            _fmt(r.success),
                            _fmt(r.distance_l2),
                            _fmt(r.distance_linf),
                            r.iterations,
                        ]
                    )
            else:
                for name in sorted(report.summaries):
                    s = report.summaries[name]
                    fh.write("attack %s\n" % name)
                    fh.write("  samples %d failed %d\n" % (s.num_samples, s.num_failed))
                    for t in sorted(s.success_rate_at):
                        fh.write(
                            "  success@%s %s%%\n"
                            % (_fmt(float(t)), _fmt(s.success_rate_at[t]))
                        )
                    for label in ("l2", "linf"):
                        fh.write(
                            "  mean_%s %s var_%s %s\n"
                            % (
                                label,
                                _fmt(s.mean_distance[label]),
                                label,
                                _fmt(s.variance_distance[label]),
                            )
                        )
                    for q in sorted(s.quantile):
                        fh.write(
                            "  q(%s) %s\n" % (_fmt(float(q)), _fmt(float(s.quantile[q])))
                        )
    except OSError as exc:
        raise IoError("cannot write %s: %s" % (path, exc)) from exc


def emit_curve(report, attack, path):
    """Write the cumulative (distance, fraction perturbed) curve for an attack."""
    if attack not in report.summaries:
        raise InvalidInput("no summary for attack %r" % (attack,))
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["distance", "fraction"])
            for d, frac in report.summaries[attack].curve:
                writer.writerow([_fmt(float(d)), _fmt(float(frac))])
    except OSError as exc:
        raise IoError("cannot write %s: %s" % (path, exc)) from exc


def read_report_csv(path):
    """Parse a per-sample CSV written by write_report back into records."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["id", "attack", "success", "l2", "linf", "iters"]:
            raise ParseError("%s: unexpected header %r" % (path, header))
        for row in reader:
            records.append(
                PerSampleRecord(
                    int(row[0]),
                    row[1],
                    row[2] == "1",
                    float(row[3]),
                    float(row[4]),
                    int(row[5]),
                )
            )
    return records
