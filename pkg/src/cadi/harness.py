"""Metric registry, benchmark runs and rank reports."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import baseline
from .angular import adi_sampled, cadi_sampled
from .data import Dataset, MetricResult, Projection, load_dataset, load_labels, load_projection
from .errors import DegenerateMetricError, ValidationError
from .sampling import DEFAULT_ADI_MULTIPLIER, DEFAULT_CADI_MULTIPLIER, TripletBudget

#: metric name -> True if higher is better
HIGHER_IS_BETTER = {
    "cadi": False,
    "adi": False,
    "cds": False,
    "dbi": False,
    "silhouette": True,
    "nmi": True,
    "ari": True,
}
METRICS = tuple(HIGHER_IS_BETTER)
NEEDS_LABELING = ("nmi", "ari")


def evaluate_metric(name: str, ds: Dataset, proj: Projection, *, seed: int = 0,
                    k_mult: float | None = None, k_abs: int | None = None,
                    exact: bool = False, predicted=None) -> MetricResult:
    """Compute one registered metric on ``(ds, proj)``.

    Sentinel outcomes (coincident DBI centroids, constant Spearman input) come
    back with ``value=None`` and ``params["status"]`` set. Degenerate inputs
    (CDS with fewer than 3 classes) raise :class:`DegenerateMetricError`.
    """
    if name not in HIGHER_IS_BETTER:
        raise ValidationError(f"unknown metric {name!r}; choose from {', '.join(METRICS)}")
    proj.check_aligned(ds)
    t0 = time.perf_counter()
    params: dict = {}
    if name in ("cadi", "adi"):
        default = DEFAULT_CADI_MULTIPLIER if name == "cadi" else DEFAULT_ADI_MULTIPLIER
        if exact:
            budget = TripletBudget.exhaustive()
        elif k_abs is not None:
            budget = TripletBudget.fixed(k_abs, seed)
        else:
            budget = TripletBudget.times_n(default if k_mult is None else k_mult, seed)
        score = (cadi_sampled(ds, proj, budget=budget) if name == "cadi"
                 else adi_sampled(ds, proj, budget=budget))
        res = score.to_result()
        if budget.mode == "multiplier":
            res.params["k_mult"] = budget.multiplier
        res.elapsed_seconds = time.perf_counter() - t0
        return res
    if name == "silhouette":
        value = baseline.silhouette(proj.points, ds.labels)
    elif name == "dbi":
        value = baseline.davies_bouldin(proj.points, ds.labels)
        if math.isinf(value):
            params["status"] = "coincident_centroids"
            value = None
    elif name == "cds":
        value = baseline.cluster_distance_score(ds, proj)
    else:
        if predicted is None:
            raise ValidationError(f"{name} needs a predicted labeling of the projection")
        if len(predicted) != ds.n:
            raise ValidationError(f"predicted labeling has {len(predicted)} entries, dataset {ds.n}")
        fn = baseline.nmi if name == "nmi" else baseline.ari
        value = fn(ds.labels, predicted)
        if name == "nmi":
            params["nmi_norm"] = "arithmetic"
    return MetricResult(name, value, params, time.perf_counter() - t0)


# -- benchmark ----------------------------------------------------------------

@dataclass
class BenchmarkSpec:
    dataset: Path
    projections: dict[str, Path]
    metrics: list[str] = field(default_factory=lambda: ["cadi", "silhouette", "dbi", "cds"])
    out_dir: Path = Path("bench")
    seed: int = 0
    k_mult: float | None = None
    k_abs: int | None = None
    predicted: dict[str, Path] = field(default_factory=dict)
    name: str | None = None

    def validate(self) -> None:
        unknown = [m for m in self.metrics if m not in HIGHER_IS_BETTER]
        if unknown:
            raise ValidationError(f"unknown metrics: {', '.join(unknown)}")
        if not self.projections:
            raise ValidationError("benchmark needs at least one projection")


@dataclass
class BenchRow:
    dataset: str
    technique: str
    metric: str
    value: float | None
    status: str
    elapsed_seconds: float = 0.0


def run_benchmark(spec: BenchmarkSpec) -> list[BenchRow]:
    """Evaluate every (technique, metric) pair; per-metric failures become status rows."""
    spec.validate()
    ds = load_dataset(spec.dataset)
    name = spec.name or Path(spec.dataset).stem
    rows = []
    for tech, path in spec.projections.items():
        proj = load_projection(path, ds)
        pred = load_labels(spec.predicted[tech]) if tech in spec.predicted else None
        for metric in spec.metrics:
            if metric in NEEDS_LABELING and pred is None:
                rows.append(BenchRow(name, tech, metric, None, "missing_labeling"))
                continue
            try:
                res = evaluate_metric(metric, ds, proj, seed=spec.seed, k_mult=spec.k_mult,
                                      k_abs=spec.k_abs, predicted=pred)
            except DegenerateMetricError as exc:
                rows.append(BenchRow(name, tech, metric, None, f"degenerate: {exc}"))
                continue
            status = res.params.get("status", "ok")
            rows.append(BenchRow(name, tech, metric, res.value, status, res.elapsed_seconds))
    return rows


# -- rank report --------------------------------------------------------------

@dataclass
class RankReport:
    """Per (dataset, metric) technique ordering, best first, plus metric-metric Spearman."""

    rankings: dict[tuple[str, str], list[tuple[str, float, int]]]
    metrics: list[str]
    spearman: np.ndarray


def oriented(metric: str, value: float, higher_is_better: bool | None = None) -> float:
    """Map a metric value so that larger always means better."""
    hib = HIGHER_IS_BETTER[metric] if higher_is_better is None else higher_is_better
    return value if hib else -value


def rank_values(values: dict[str, float], higher_is_better: bool) -> list[tuple[str, float, int]]:
    """Order techniques best first; ties share the better rank."""
    items = sorted(values.items(), key=lambda kv: (-(kv[1] if higher_is_better else -kv[1]), kv[0]))
    out, prev, rank = [], None, 0
    for pos, (tech, val) in enumerate(items, start=1):
        if val != prev:
            rank = pos
        out.append((tech, val, rank))
        prev = val
    return out


def build_report(rows: list[BenchRow], directions: dict[str, bool] | None = None) -> RankReport:
    directions = {**HIGHER_IS_BETTER, **(directions or {})}
    good = [r for r in rows if r.value is not None and math.isfinite(r.value)]
    metrics = sorted({r.metric for r in rows}, key=lambda m: (METRICS + (m,)).index(m))
    table: dict[tuple[str, str], dict[str, float]] = {}
    for r in good:
        table.setdefault((r.dataset, r.metric), {})[r.technique] = r.value
    rankings = {key: rank_values(vals, directions[key[1]]) for key, vals in sorted(table.items())}

    # pooled over every (dataset, technique) where both metrics are valid
    by_entry: dict[tuple[str, str], dict[str, float]] = {}
    for r in good:
        by_entry.setdefault((r.dataset, r.technique), {})[r.metric] = oriented(
            r.metric, r.value, directions[r.metric])
    mcount = len(metrics)
    S = np.eye(mcount)
    for a in range(mcount):
        for b in range(a + 1, mcount):
            pairs = [(v[metrics[a]], v[metrics[b]]) for v in by_entry.values()
                     if metrics[a] in v and metrics[b] in v]
            rho = math.nan
            if len(pairs) >= 2:
                xs, ys = zip(*pairs)
                rho = baseline.spearman(xs, ys)
            S[a, b] = S[b, a] = rho
    return RankReport(rankings, metrics, S)


# -- CSV output ---------------------------------------------------------------

def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    return "%.17g" % v


def write_results(rows: list[BenchRow], out_dir: Path) -> None:
    """``results.csv`` (deterministic) and ``timings.csv`` (wall clock)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "results.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "technique", "metric", "value", "status", "higher_is_better"])
        for r in rows:
            w.writerow([r.dataset, r.technique, r.metric, _fmt(r.value), r.status,
                        int(HIGHER_IS_BETTER[r.metric])])
    with open(out_dir / "timings.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "technique", "metric", "elapsed_seconds"])
        for r in rows:
            w.writerow([r.dataset, r.technique, r.metric, "%.6f" % r.elapsed_seconds])


def read_results(path) -> list[BenchRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            if rec["metric"] not in HIGHER_IS_BETTER:
                raise ValidationError(f"{path}: unknown metric {rec['metric']!r}")
            val = float(rec["value"]) if rec["value"] else None
            rows.append(BenchRow(rec["dataset"], rec["technique"], rec["metric"], val, rec["status"]))
    return rows


def write_report(report: RankReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "ranks.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dataset", "metric", "rank", "technique", "value", "higher_is_better"])
        for (ds, metric), ranking in report.rankings.items():
            for tech, val, rank in ranking:
                w.writerow([ds, metric, rank, tech, _fmt(val), int(HIGHER_IS_BETTER[metric])])
    with open(out_dir / "spearman.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric"] + report.metrics)
        for name, row in zip(report.metrics, report.spearman):
            w.writerow([name] + ["%.6f" % v if math.isfinite(v) else "" for v in row])


def benchmark(spec: BenchmarkSpec) -> RankReport:
    rows = run_benchmark(spec)
    write_results(rows, Path(spec.out_dir))
    report = build_report(rows)
    write_report(report, Path(spec.out_dir))
    return report

