import numpy as np
import pytest

from mibids.errors import EmptyConfig
from mibids.schema import CLASSES, INTERFACE_8, TrafficClass, emit_csv
from mibids.synth import (
    DEFAULT_COUNTS,
    NOISE_VARIABLES,
    SIGNAL_VARIABLES,
    SynthConfig,
    default_signatures,
    generate,
    load_config,
)


def test_default_counts(synth_default):
    assert len(synth_default) == 4998
    assert synth_default.class_counts == DEFAULT_COUNTS
    assert synth_default.schema == INTERFACE_8


def test_zero_noise_records_identical():
    ds = generate(SynthConfig(noise_scale=0.0))
    sigs = default_signatures()
    for c in CLASSES:
        rows = ds.X[ds.y == c.ordinal]
        assert np.all(rows == rows[0])
        assert np.allclose(rows[0], sigs[c].class_means)


def test_same_seed_same_bytes():
    assert emit_csv(generate(SynthConfig(seed=5))) == emit_csv(generate(SynthConfig(seed=5)))
    assert emit_csv(generate(SynthConfig(seed=5))) != emit_csv(generate(SynthConfig(seed=6)))


def test_signature_shape():
    sigs = default_signatures()
    normal = sigs[TrafficClass.Normal]
    assert normal.factors == (1.0,) * 8
    assert sigs[TrafficClass.UdpFlood].class_means[3] > 10 * normal.class_means[3]
    for v in NOISE_VARIABLES:
        assert len({sigs[c].class_means[v - 1] for c in CLASSES}) == 1
    for c in CLASSES:
        if c is not TrafficClass.Normal:
            assert any(sigs[c].factors[v - 1] != 1.0 for v in SIGNAL_VARIABLES)
    # every signal variable alone separates the eight classes
    for v in SIGNAL_VARIABLES:
        assert len({sigs[c].class_means[v - 1] for c in CLASSES}) == 8


def test_sample_means_converge(synth_default):
    sigs = default_signatures()
    for c in CLASSES:
        rows = synth_default.X[synth_default.y == c.ordinal]
        n = len(rows)
        mu, sd = sigs[c].class_means, sigs[c].class_stds
        assert np.all(np.abs(rows.mean(axis=0) - mu) <= 3 * sd / np.sqrt(n) + 1e-4)


def test_empty_config():
    with pytest.raises(EmptyConfig):
        generate(SynthConfig(per_class_counts={c: 0 for c in CLASSES}))


def test_config_file(tmp_path):
    p = tmp_path / "synth.ini"
    p.write_text(
        "[general]\nseed = 11\nnoise_scale = 0\n\n"
        "[counts]\nNormal = 3\nUDP-FLOOD = 2\nTCP-SYN = 0\nICMP-ECHO = 0\nHTTP-FLOOD = 0\n"
        "SLOWLORIS = 0\nSLOWPOST = 0\nBRUTE-FORCE = 0\n\n"
        "[baseline]\nifInUcastPkts = 200, 5   ; mean, std\n\n"
        "[UDP-FLOOD]\nifInUcastPkts = 20\n"
    )
    cfg = load_config(p)
    assert cfg.seed == 11
    ds = generate(cfg)
    assert len(ds) == 5
    assert sorted(ds.X[:, 3].tolist()) == [200.0] * 3 + [4000.0] * 2
