"""Command-line interface: ``cadi {generate,metric,embed,stability,benchmark,report}``.

Exit codes: 0 success, 2 usage error, 3 validation error, 4 numerical or
degeneracy abort.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import synthetic
from .angular import cadi_exact, stability_study
from .data import load_dataset, load_labels, load_projection, save_dataset, save_projection
from .embed import TrainConfig, angle_embedding, pca_project, random_project
from .errors import DegenerateError, ValidationError
from .harness import (METRICS, NEEDS_LABELING, BenchmarkSpec, benchmark, build_report,
                      evaluate_metric, read_results, write_report)

EXIT_USAGE, EXIT_VALIDATION, EXIT_NUMERIC = 2, 3, 4

log = logging.getLogger("cadi")


class UsageError(Exception):
    pass


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def _named_path(text: str) -> tuple[str, Path]:
    if "=" in text:
        name, path = text.split("=", 1)
    else:
        path = text
        name = Path(text).stem
    return name, Path(path)


def _write_text(path: str | None, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# -- subcommands -----------------------------------------------------------------

def cmd_generate(args) -> None:
    ds = synthetic.generate(args.name, seed=args.seed, size_factor=args.size_factor)
    out = args.out or f"{args.name}.csv"
    save_dataset(ds, out)
    log.info("wrote %s (n=%d, d=%d, classes=%d)", out, ds.n, ds.d, ds.m)


def cmd_metric(args) -> None:
    ds = load_dataset(args.inp)
    proj = load_projection(args.proj, ds)
    if args.metric in NEEDS_LABELING and not args.labels:
        raise UsageError(f"--metric {args.metric} needs --labels (clustering of the projection)")
    predicted = load_labels(args.labels) if args.labels else None
    res = evaluate_metric(args.metric, ds, proj, seed=args.seed, k_mult=args.k_mult,
                          k_abs=args.k_abs, exact=args.exact, predicted=predicted)
    _write_text(args.out, res.to_json(indent=2) + "\n")


def cmd_embed(args) -> None:
    ds = load_dataset(args.inp)
    if args.method == "pca":
        proj, trace = pca_project(ds, args.dim), []
    elif args.method == "random":
        proj, trace = random_project(ds.n, args.dim, args.seed), []
    else:
        cfg = TrainConfig(epochs=args.epochs, triplet_multiplier=args.k_mult,
                          batch_size=args.batch_size, seed=args.seed, mode=args.mode,
                          lr=args.lr, t=args.dim)
        res = angle_embedding(ds, cfg=cfg)
        proj, trace = res.projection, res.loss_trace
    save_projection(proj, args.out)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "loss"])
            for epoch, loss in enumerate(trace):
                w.writerow([epoch, "%.17g" % loss])


def cmd_stability(args) -> None:
    ds = load_dataset(args.inp)
    proj = load_projection(args.proj, ds)
    rows = stability_study(ds, proj, multipliers=args.mults, repetitions=args.reps,
                           base_seed=args.seed)
    exact = cadi_exact(ds, proj).value if args.exact else None
    out = args.out or "-"
    fh = sys.stdout if out == "-" else open(out, "w", newline="")
    try:
        w = csv.writer(fh, lineterminator="\n")
        header = ["multiplier", "k", "repetitions", "min", "q1", "median", "q3", "max", "std", "iqr"]
        w.writerow(header + (["exact"] if exact is not None else []))
        for r in rows:
            vals = [r.min, r.q1, r.median, r.q3, r.max, r.std, r.iqr]
            line = ["%g" % r.multiplier, r.k, r.repetitions] + ["%.17g" % v for v in vals]
            w.writerow(line + (["%.17g" % exact] if exact is not None else []))
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.values_out:
        with open(args.values_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["multiplier", "seed", "value"])
            for r in rows:
                for rep, v in enumerate(r.values):
                    w.writerow(["%g" % r.multiplier, args.seed + rep, "%.17g" % v])


def cmd_benchmark(args) -> None:
    projections = dict(_named_path(p) for p in args.proj)
    if args.proj_dir:
        for path in sorted(Path(args.proj_dir).glob("*.csv")):
            projections.setdefault(path.stem, path)
    spec = BenchmarkSpec(dataset=Path(args.inp), projections=projections,
                         metrics=[m.strip() for m in args.metrics.split(",") if m.strip()],
                         out_dir=Path(args.out), seed=args.seed, k_mult=args.k_mult,
                         k_abs=args.k_abs, predicted=dict(_named_path(p) for p in args.labels),
                         name=args.name)
    report = benchmark(spec)
    for (ds, metric), ranking in report.rankings.items():
        order = " > ".join(t for t, _, _ in ranking)
        log.info("%s / %s: %s", ds, metric, order)


def cmd_report(args) -> None:
    rows = []
    for path in args.results:
        rows.extend(read_results(path))
    write_report(build_report(rows), Path(args.out))


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cadi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic dataset CSV")
    g.add_argument("--name", required=True, choices=synthetic.GENERATORS)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--size-factor", type=float, default=1.0,
                   help="scale per-class point counts (1.0 = default sizes)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("metric", help="evaluate one metric, print MetricResult JSON")
    m.add_argument("--in", dest="inp", required=True)
    m.add_argument("--proj", required=True)
    m.add_argument("--metric", required=True, choices=METRICS)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--k-mult", type=float, help="triplets per point (default 40 CADI, 100 ADI)")
    m.add_argument("--k-abs", type=int, help="absolute triplet count")
    m.add_argument("--exact", action="store_true", help="enumerate every triplet")
    m.add_argument("--labels", help="CSV with a 'label' column: clustering of the projection")
    m.add_argument("--out")
    m.set_defaults(func=cmd_metric)

    e = sub.add_parser("embed", help="project a dataset (AngleEmbedding, PCA or random)")
    e.add_argument("--in", dest="inp", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--method", choices=("angle", "pca", "random"), default="angle")
    e.add_argument("--mode", choices=("parametric", "nonparametric"), default="parametric")
    e.add_argument("--dim", type=int, default=2, choices=(2, 3))
    e.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    e.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    e.add_argument("--k-mult", type=float, default=TrainConfig.triplet_multiplier,
                   help="training triplets per point per epoch")
    e.add_argument("--lr", type=float, default=TrainConfig.lr)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--trace", help="write the per-epoch loss trace CSV here")
    e.set_defaults(func=cmd_embed)

    s = sub.add_parser("stability", help="spread of sampled CADI across seeds")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--proj", required=True)
    s.add_argument("--mults", type=_float_list, default=[1, 2, 5, 10, 20, 40])
    s.add_argument("--reps", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--exact", action="store_true", help="add the exact CADI column (small n)")
    s.add_argument("--values-out", help="long-format CSV of every sampled value")
    s.add_argument("--out")
    s.set_defaults(func=cmd_stability)

    b = sub.add_parser("benchmark", help="all metrics over several projections, with ranks")
    b.add_argument("--in", dest="inp", required=True)
    b.add_argument("--proj", action="append", default=[], metavar="[NAME=]PATH")
    b.add_argument("--proj-dir", help="use every *.csv in this directory as a projection")
    b.add_argument("--labels", action="append", default=[], metavar="NAME=PATH",
                   help="clustering of projection NAME, for nmi/ari")
    b.add_argument("--metrics", default="cadi,adi,silhouette,dbi,cds,nmi,ari")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--k-mult", type=float)
    b.add_argument("--k-abs", type=int)
    b.add_argument("--name", help="dataset name in reports (default: file stem)")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_benchmark)

    r = sub.add_parser("report", help="rank and Spearman tables from results CSVs")
    r.add_argument("results", nargs="+")
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cadi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValidationError, OSError) as exc:
        print(f"cadi: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except DegenerateError as exc:
        print(f"cadi: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
