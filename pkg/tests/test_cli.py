import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from mibids import classifiers as clf
from mibids.cli import main
from mibids.schema import CLASSES, emit_csv, ingest_csv
from mibids.synth import SynthConfig, generate


def run(argv):
    """main() with argparse's SystemExit folded into the return code."""
    try:
        return main(argv)
    except SystemExit as e:
        return e.code


@pytest.fixture(scope="module")
def small_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    ds = generate(SynthConfig(seed=3, per_class_counts={c: 25 for c in CLASSES}))
    p = d / "small.csv"
    p.write_text(emit_csv(ds))
    return p


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_synth_twice_identical(tmp_path):
    assert run(["synth", "--seed", "1", "--out", str(tmp_path / "a")]) == 0
    assert run(["synth", "--seed", "1", "--out", str(tmp_path / "b")]) == 0
    assert digest(tmp_path / "a" / "synthetic.csv") == digest(tmp_path / "b" / "synthetic.csv")
    assert len(ingest_csv(tmp_path / "a" / "synthetic.csv")) == 4998


def test_unknown_evaluator_exit_2(small_csv, tmp_path, capsys):
    assert run(["rank", "-i", str(small_csv), "--evaluator", "gainratio", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    for name in ("infogain", "correlation", "relieff", "cfs", "wrapper"):
        assert name in err


def test_top_out_of_range_exit_2(small_csv, tmp_path):
    code = run(["evaluate", "-i", str(small_csv), "--classifier", "ibk", "--evaluator", "correlation",
                "--top", "9", "--out", str(tmp_path)])
    assert code == 2


def test_missing_input_exit_1(tmp_path):
    assert run(["rank", "-i", str(tmp_path / "nope.csv"), "--evaluator", "infogain", "--out", str(tmp_path)]) == 1


def test_bad_cell_exit_1(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("ifInOctets,class\nabc,Normal\n")
    assert run(["rank", "-i", str(p), "--evaluator", "infogain", "--out", str(tmp_path)]) == 1


def test_rank_writes_json(small_csv, tmp_path, capsys):
    before = digest(small_csv)
    assert run(["rank", "-i", str(small_csv), "--evaluator", "infogain", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "top 5" in out and "top 3" in out
    doc = json.loads((tmp_path / "ranking_infogain.json").read_text())
    assert set(doc["order"][:5]) == {2, 4, 5, 7, 8}
    assert digest(small_csv) == before


def test_train_round_trip(small_csv, tmp_path):
    assert run(["train", "-i", str(small_csv), "--classifier", "random-forest", "--trees", "7",
                "--seed", "1", "--out", str(tmp_path)]) == 0
    path = tmp_path / "model_random-forest.json"
    m1 = clf.TrainedModel.load(path)
    m2 = clf.TrainedModel.from_json(m1.to_json())
    ds = ingest_csv(small_csv)
    _, p1 = clf.predict_many(m1, ds)
    _, p2 = clf.predict_many(m2, ds)
    assert np.array_equal(p1, p2)
    assert run(["train", "-i", str(small_csv), "--classifier", "random-forest", "--trees", "7",
                "--seed", "1", "--out", str(tmp_path / "again")]) == 0
    assert digest(path) == digest(tmp_path / "again" / "model_random-forest.json")


def test_detect_ten_lines(small_csv, tmp_path, capsys):
    assert run(["train", "-i", str(small_csv), "--classifier", "ibk", "--out", str(tmp_path)]) == 0
    ds = ingest_csv(small_csv)
    ten = tmp_path / "ten.csv"
    ten.write_text(emit_csv(ds.subset(np.arange(10))))
    capsys.readouterr()
    assert run(["detect", "--model", str(tmp_path / "model_ibk.json"), "-i", str(ten)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 10
    for line, lab in zip(lines, ds.y[:10]):
        ts, label, conf, _ = line.split("\t")
        assert label == CLASSES[lab - 1].label and float(conf) == 1.0
        assert line.endswith("ALERT") == (lab != 1)


def test_detect_needs_one_source(small_csv, tmp_path):
    run(["train", "-i", str(small_csv), "--classifier", "ibk", "--out", str(tmp_path)])
    assert run(["detect", "--model", str(tmp_path / "model_ibk.json")]) == 2


def test_evaluate_and_report(small_csv, tmp_path, capsys):
    assert run(["evaluate", "-i", str(small_csv), "--classifier", "ibk", "--evaluator", "correlation",
                "--top", "3", "--format", "json,markdown,csv", "--out", str(tmp_path)]) == 0
    stem = tmp_path / "report_ibk_correlation_top3"
    for ext in ("json", "md", "csv"):
        assert (stem.with_suffix("." + ext)).exists()
    capsys.readouterr()
    assert run(["report", "--report", str(stem.with_suffix(".json")), "--format", "markdown"]) == 0
    md = capsys.readouterr().out
    rows = [l.split("|")[1].strip() for l in md.splitlines() if l.startswith("| ") and "Class" not in l]
    assert rows[:8] == [c.label for c in CLASSES]


def test_bad_format_exit_2(small_csv, tmp_path):
    assert run(["evaluate", "-i", str(small_csv), "--classifier", "ibk", "--format", "xml",
                "--out", str(tmp_path)]) == 2


def test_grid_deterministic(small_csv, tmp_path):
    argv = ["evaluate", "--all", "-i", str(small_csv), "--trees", "5", "--members", "3",
            "--folds", "3", "--wrapper-folds", "3"]
    assert run(argv + ["--out", str(tmp_path / "a")]) == 0
    assert run(argv + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
    a = (tmp_path / "a" / "grid.csv").read_text()
    assert a == (tmp_path / "b" / "grid.csv").read_text()
    lines = a.splitlines()
    assert lines[0] == "evaluator,top,attributes,classifier,accuracy,rate"
    assert len(lines) == 1 + 5 * 3 * 3


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "mibids.cli", "rank", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "ReliefFAttributeEval" in r.stdout
