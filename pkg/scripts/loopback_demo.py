#!/usr/bin/env python3
"""Live-detection demo against a local scripted SNMP agent.

Trains IBk on the synthetic data, starts a loopback agent whose counters grow
at the rate of a chosen class signature, and classifies the polled stream.
"""
import argparse

from mibids import classifiers as clf
from mibids.schema import TrafficClass
from mibids.snmp.agent import LoopbackAgent
from mibids.snmp.collector import stream
from mibids.synth import default_signatures, generate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--replay", default="UDP-FLOOD", help="class signature to replay")
    ap.add_argument("--interval", type=float, default=1.0)
    ap.add_argument("--count", type=int, default=5)
    args = ap.parse_args()

    cls = TrafficClass.parse(args.replay)
    rate = default_signatures()[cls].class_means
    model = clf.train_ibk(generate())
    script = lambda n: tuple(int(round(v * args.interval * n)) % 2**32 for v in rate)  # noqa: E731
    with LoopbackAgent(script) as agent:
        for rec in stream(agent.address, "public", 1, args.interval, max_records=args.count):
            pred, dist = clf.predict(model, rec)
            flag = "" if pred is TrafficClass.Normal else "  ALERT"
            print(f"{pred.label:<12} conf {max(dist):.2f}{flag}")


if __name__ == "__main__":
    main()
