"""Command-line entry point: synth, rank, train, evaluate, detect, report.

Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import classifiers as clf
from . import ranking
from .errors import MibError, UsageError
from .evaluation import cross_validate, emit_report, format_rate, load_report
from .schema import INTERFACE_8, Dataset, TrafficClass, emit_csv, ingest_csv
from .synth import SynthConfig, generate, load_config

log = logging.getLogger("mibids")

GRID_CLASSIFIERS = ("ibk", "random-committee", "random-forest")
GRID_TOPS = ("5", "3", "all")
GRID_COLUMNS = ["evaluator", "top", "attributes", "classifier", "accuracy", "rate"]


def _top_arg(text: str):
    if text.lower() == "all":
        return "all"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--top must be an integer or 'all', got {text!r}") from None


def _name_help(names, weka):
    return ", ".join(f"{n} ({weka[n]})" for n in names)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mibids", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def data_opts(sp):
        sp.add_argument("--input", "-i", required=True, help="labeled CSV dataset")
        sp.add_argument("--schema", choices=("interface8", "full34"), default="interface8")
        sp.add_argument("--out", default="out", help="artifact directory")
        sp.add_argument("--seed", type=int, default=1)

    def evaluator_opts(sp, required=False):
        sp.add_argument("--evaluator", choices=ranking.EVALUATORS, required=required,
                        help=_name_help(ranking.EVALUATORS, ranking.WEKA_NAMES))
        sp.add_argument("--bins", type=int, default=10, help="InfoGain equal-width bins")
        sp.add_argument("--neighbours", type=int, default=10, help="ReliefF k")
        sp.add_argument("--samples", type=int, default=None, help="ReliefF m (default: all)")
        sp.add_argument("--wrapper-folds", type=int, default=10)

    def classifier_opts(sp, required=True):
        sp.add_argument("--classifier", choices=clf.CLASSIFIERS, required=required,
                        help=_name_help(clf.CLASSIFIERS, clf.WEKA_NAMES))
        sp.add_argument("--k", type=int, default=None, help="IBk neighbours (default 1)")
        sp.add_argument("--trees", type=int, default=None, help="forest size (default 100)")
        sp.add_argument("--members", type=int, default=None, help="committee size (default 10)")
        sp.add_argument("--attrs-per-split", default=None, help="random-tree attributes per split (default auto)")
        sp.add_argument("--top", type=_top_arg, default="all", help="keep the evaluator's top-N features")

    sp = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    sp.add_argument("--config", help="INI signature/count overrides")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--noise-scale", type=float, default=None)
    sp.add_argument("--out", default="out")
    sp.add_argument("--name", default="synthetic.csv")

    sp = sub.add_parser("rank", help="rank features with one attribute evaluator")
    data_opts(sp)
    evaluator_opts(sp, required=True)

    sp = sub.add_parser("train", help="train a classifier and write a model file")
    data_opts(sp)
    classifier_opts(sp)
    evaluator_opts(sp)

    sp = sub.add_parser("evaluate", help="stratified cross-validation report")
    data_opts(sp)
    classifier_opts(sp, required=False)
    evaluator_opts(sp)
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--format", default="json,markdown",
                    help="comma-separated subset of json,csv,markdown")
    sp.add_argument("--all", action="store_true",
                    help="run the classifiers x evaluators x {top 5, top 3, all} grid")
    sp.add_argument("--jobs", type=int, default=1, help="grid worker processes")

    sp = sub.add_parser("detect", help="classify records from a CSV or a live SNMP agent")
    sp.add_argument("--model", required=True)
    sp.add_argument("--input", "-i", help="CSV of records (labels ignored)")
    sp.add_argument("--schema", choices=("interface8", "full34"), default="interface8")
    sp.add_argument("--agent", help="host[:port] of an SNMPv2c agent")
    sp.add_argument("--community", default=None, help="default: $MIBIDS_COMMUNITY or 'public'")
    sp.add_argument("--if-index", type=int, default=1)
    sp.add_argument("--interval", type=float, default=15.0)
    sp.add_argument("--timeout", type=float, default=2.0)
    sp.add_argument("--count", type=int, default=None, help="stop after N live records")

    sp = sub.add_parser("report", help="re-render a stored JSON evaluation report")
    sp.add_argument("--report", required=True)
    sp.add_argument("--format", choices=("json", "csv", "markdown"), default="markdown")
    return p


def _load(args) -> Dataset:
    with open(args.input, "rb") as fh:
        return ingest_csv(fh, args.schema)


def _classifier_spec(args, name=None) -> clf.ClassifierSpec:
    name = name or args.classifier
    params = {"k": args.k} if name == "ibk" else {"attrs_per_split": args.attrs_per_split}
    if name == "random-forest":
        params["trees"] = args.trees
    if name == "random-committee":
        params["members"] = args.members
    return clf.ClassifierSpec(name, params)


def _rank(args, ds, evaluator=None) -> ranking.RankingResult:
    return ranking.run_evaluator(
        evaluator or args.evaluator, ds, bins=args.bins, k=args.neighbours, m=args.samples,
        seed=args.seed, folds=args.wrapper_folds,
    )


def _features(args, ds, evaluator=None, top=None):
    evaluator = evaluator or args.evaluator
    top = args.top if top is None else top
    if top != "all" and not 1 <= int(top) <= ds.n_features:
        raise ranking.OutOfRange(f"--top must lie in 1..{ds.n_features}, got {top}")
    if evaluator is None or top == "all":
        return list(range(1, ds.n_features + 1))
    return ranking.top_n(_rank(args, ds, evaluator), int(top))


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args) -> int:
    cfg = load_config(args.config) if args.config else SynthConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.noise_scale is not None:
        cfg.noise_scale = args.noise_scale
    ds = generate(cfg)
    path = _outdir(args) / args.name
    path.write_text(emit_csv(ds), encoding="utf-8")
    log.info("wrote %d records to %s", len(ds), path)
    print(path)
    return 0


def cmd_rank(args) -> int:
    ds = _load(args)
    r = _rank(args, ds)
    path = _outdir(args) / f"ranking_{r.evaluator}.json"
    path.write_text(r.to_json() + "\n", encoding="utf-8")
    weka = ranking.WEKA_NAMES[r.evaluator]
    print(f"{'Attr':>4}  {'Name':<16} {'Score':>10}")
    for a in r.order:
        print(f"{a:>4}  {ds.names[a - 1]:<16} {r.scores[a - 1]:>10.6f}")
    n5 = min(5, ds.n_features)
    n3 = min(3, ds.n_features)
    print(f"{weka} top {n5}: {','.join(map(str, ranking.top_n(r, n5)))}")
    print(f"{weka} top {n3}: {','.join(map(str, ranking.top_n(r, n3)))}")
    if "selected" in r.params:
        print(f"{weka} selected subset: {','.join(map(str, r.params['selected']))}")
    return 0


def cmd_train(args) -> int:
    ds = _load(args)
    feats = _features(args, ds)
    model = clf.train(_classifier_spec(args), ds, feats, seed=args.seed)
    path = _outdir(args) / f"model_{model.kind}.json"
    model.save(path)
    log.info("trained %s on features %s", model.kind, feats)
    print(path)
    return 0


def _grid_cell(job):
    args, ds, evaluator, top, classifier, features = job
    rep = cross_validate(ds, _classifier_spec(args, classifier), features, folds=args.folds,
                         seed=args.seed, evaluator=evaluator)
    return [evaluator, top, ",".join(map(str, features)), classifier, repr(rep.accuracy),
            format_rate(rep.accuracy)]


def run_grid(args, ds) -> list[list[str]]:
    jobs = []
    for ev in ranking.EVALUATORS:
        r = _rank(args, ds, ev)
        for top in GRID_TOPS:
            feats = list(range(1, ds.n_features + 1)) if top == "all" else ranking.top_n(
                r, min(int(top), ds.n_features))
            for c in GRID_CLASSIFIERS:
                jobs.append((args, ds, ev, top, c, feats))
    # identical (classifier, features) cells are computed once
    unique = {}
    for j in jobs:
        unique.setdefault((j[4], tuple(j[5])), j)
    keys = list(unique)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_grid_cell, [unique[k] for k in keys]))
    else:
        results = [_grid_cell(unique[k]) for k in keys]
    acc = {k: r[4:] for k, r in zip(keys, results)}
    rows = [[j[2], j[3], ",".join(map(str, j[5])), j[4], *acc[(j[4], tuple(j[5]))]] for j in jobs]
    ev_pos = {e: i for i, e in enumerate(ranking.EVALUATORS)}
    rows.sort(key=lambda r: (ev_pos[r[0]], GRID_TOPS.index(r[1]), GRID_CLASSIFIERS.index(r[3])))
    return rows


def cmd_evaluate(args) -> int:
    ds = _load(args)
    out = _outdir(args)
    if args.all:
        rows = run_grid(args, ds)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        w.writerows(rows)
        (out / "grid.csv").write_text(buf.getvalue(), encoding="utf-8")
        for r in rows:
            print(f"{r[0]:<12} top {r[1]:<4} [{r[2]}] {r[3]:<17} {r[5]}")
        return 0
    if not args.classifier:
        raise UsageError("--classifier is required unless --all is given")
    formats = [f.strip() for f in args.format.split(",") if f.strip()]
    for f in formats:
        if f not in ("json", "csv", "markdown"):
            raise UsageError(f"unknown report format {f!r}")
    feats = _features(args, ds)
    rep = cross_validate(ds, _classifier_spec(args), feats, folds=args.folds, seed=args.seed,
                         evaluator=args.evaluator if args.top != "all" else None)
    stem = f"report_{rep.classifier}" + (f"_{rep.evaluator}_top{args.top}" if rep.evaluator else "")
    ext = {"json": "json", "csv": "csv", "markdown": "md"}
    for f in formats:
        (out / f"{stem}.{ext[f]}").write_bytes(emit_report(rep, f))
    print(emit_report(rep, "markdown").decode(), end="")
    return 0


def _detect_line(ts, cls: TrafficClass, dist) -> str:
    flag = "" if cls is TrafficClass.Normal else "  ALERT"
    probs = " ".join(f"{p:.4f}" for p in dist)
    return f"{ts}\t{cls.label}\t{float(max(dist)):.4f}\t[{probs}]{flag}"


def cmd_detect(args) -> int:
    from .snmp.collector import community_from_env, stream

    model = clf.TrainedModel.load(args.model)
    if bool(args.input) == bool(args.agent):
        raise UsageError("give exactly one of --input or --agent")
    if args.input:
        ds = _load(args)
        classes, P = clf.predict_many(model, ds)
        for i, (c, dist) in enumerate(zip(classes, P)):
            print(_detect_line(i, c, dist))
        return 0
    if tuple(model.schema_names) != tuple(v.name for v in INTERFACE_8):
        raise clf.SchemaMismatch("live detection needs a model trained on the interface8 schema")
    community = args.community or community_from_env("public")
    for rec in stream(args.agent, community, args.if_index, args.interval, timeout=args.timeout,
                      max_records=args.count):
        c, dist = clf.predict(model, rec)
        print(_detect_line(f"{time.time():.3f}", c, dist), flush=True)
    return 0


def cmd_report(args) -> int:
    rep = load_report(Path(args.report).read_bytes())
    sys.stdout.write(emit_report(rep, args.format).decode())
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "rank": cmd_rank,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "detect": cmd_detect,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"mibids {args.command}: error: {e}", file=sys.stderr)
        return 2
    except (MibError, OSError, ValueError) as e:
        print(f"mibids {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
