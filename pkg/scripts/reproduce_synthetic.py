#!/usr/bin/env python3
"""Classifier and ranking experiment on the default synthetic dataset.

Prints 10-fold CV accuracy for the three ensemble/lazy classifiers on all
eight interface features, then the top-5 of each attribute evaluator and the
IBk accuracy on each evaluator's top-3.
"""
import argparse
import time

from mibids import classifiers as clf
from mibids.evaluation import cross_validate, format_rate
from mibids.ranking import EVALUATORS, WEKA_NAMES, run_evaluator, top_n
from mibids.synth import SynthConfig, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--folds", type=int, default=10)
    args = ap.parse_args()

    ds = generate(SynthConfig(seed=args.seed))
    print(f"dataset: {len(ds)} records, counts {[ds.class_counts[c] for c in ds.class_counts]}")
    for name in ("ibk", "random-forest", "random-committee"):
        t0 = time.perf_counter()
        rep = cross_validate(ds, clf.ClassifierSpec(name), folds=args.folds, seed=args.seed)
        print(f"{clf.WEKA_NAMES[name]:<20} all-8 {format_rate(rep.accuracy):>8}  ({time.perf_counter() - t0:.1f}s)")
    for ev in EVALUATORS:
        r = run_evaluator(ev, ds, seed=args.seed)
        top3 = top_n(r, 3)
        acc = cross_validate(ds, clf.ClassifierSpec("ibk"), top3, folds=args.folds, seed=args.seed).accuracy
        print(f"{WEKA_NAMES[ev]:<28} top5 {','.join(map(str, top_n(r, 5))):<10} "
              f"top3 {','.join(map(str, top3)):<6} IBk {format_rate(acc)}")


if __name__ == "__main__":
    main()
