"""Seeded generator of labeled interface-group records.

The class signatures below are invented: no distributional facts about real
SNMP-MIB captures are published, so the numbers were calibrated only to give
the qualitative structure a detector should see (floods blow up packet
rates, slow attacks sit just above normal, signal on interface variables
2, 4, 5, 7, 8 and none on 1, 3, 6). They are not ground truth.

Config files are INI, one section per class plus ``[baseline]`` and
``[general]``::

    [general]
    seed = 7
    noise_scale = 1.0

    [counts]
    Normal = 600
    TCP-SYN = 960

    [baseline]
    ifInUcastPkts = 120, 3.6        ; mean, std

    [UDP-FLOOD]
    ifInUcastPkts = 10.5            ; multiplicative factor
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyConfig, UsageError
from .schema import CLASSES, INTERFACE_8, Dataset, TrafficClass, variable

# Record counts of the reference capture.
DEFAULT_COUNTS = {
    TrafficClass.Normal: 600,
    TrafficClass.IcmpEcho: 632,
    TrafficClass.TcpSyn: 960,
    TrafficClass.UdpFlood: 773,
    TrafficClass.HttpFlood: 573,
    TrafficClass.Slowloris: 780,
    TrafficClass.Slowpost: 480,
    TrafficClass.BruteForce: 200,
}

# Normal-traffic (mean, std) per interface variable, in rate/s.
BASELINE = (
    (50000.0, 8000.0),  # ifInOctets        noise only
    (40000.0, 1200.0),  # ifOutOctets
    (2.0, 0.6),  # ifOutDiscards     noise only
    (120.0, 3.6),  # ifInUcastPkts
    (6.0, 0.18),  # ifInNUcastPkts
    (1.5, 0.45),  # ifInDiscards      noise only
    (100.0, 3.0),  # ifOutUcastPkts
    (4.0, 0.12),  # ifOutNUcastPkts
)

# Multiplicative factors on variables 2, 4, 5, 7, 8. Every variable uses the
# same eight levels in a different class permutation, so each one alone
# separates all classes.
_FACTORS = {
    #                     ifOutOct  ifInUc  ifInNUc  ifOutUc  ifOutNUc
    TrafficClass.Normal: (1.0, 1.0, 1.0, 1.0, 1.0),
    TrafficClass.IcmpEcho: (8.6, 7.0, 10.5, 7.0, 10.5),  # echo replies, broadcast reflection
    TrafficClass.TcpSyn: (5.5, 8.6, 4.2, 10.5, 3.0),  # SYN-ACK per spoofed SYN
    TrafficClass.UdpFlood: (10.5, 10.5, 7.0, 8.6, 8.6),  # ICMP unreachable per datagram
    TrafficClass.HttpFlood: (7.0, 5.5, 2.0, 5.5, 4.2),
    TrafficClass.Slowloris: (2.0, 3.0, 5.5, 3.0, 2.0),  # many long-lived small segments
    TrafficClass.Slowpost: (3.0, 2.0, 8.6, 2.0, 5.5),
    TrafficClass.BruteForce: (4.2, 4.2, 3.0, 4.2, 7.0),  # symmetric login exchanges
}
SIGNAL_VARIABLES = (2, 4, 5, 7, 8)
NOISE_VARIABLES = (1, 3, 6)


@dataclass(frozen=True)
class ClassSignature:
    means: tuple  # baseline means, one per interface variable
    stds: tuple
    factors: tuple  # multiplicative per-variable factors for this class

    def __post_init__(self):
        if any(m < 0 for m in self.means) or any(s < 0 for s in self.stds):
            raise UsageError("signature means and stds must be non-negative")
        if any(f <= 0 for f in self.factors):
            raise UsageError("signature factors must be positive")

    @property
    def class_means(self) -> np.ndarray:
        return np.array(self.means) * np.array(self.factors)

    @property
    def class_stds(self) -> np.ndarray:
        return np.array(self.stds) * np.array(self.factors)


def default_signatures() -> dict:
    means = tuple(m for m, _ in BASELINE)
    stds = tuple(s for _, s in BASELINE)
    sigs = {}
    for c in CLASSES:
        factors = [1.0] * 8
        for var, f in zip(SIGNAL_VARIABLES, _FACTORS[c]):
            factors[var - 1] = f
        sigs[c] = ClassSignature(means, stds, tuple(factors))
    return sigs


@dataclass
class SynthConfig:
    seed: int = 1
    per_class_counts: dict = field(default_factory=lambda: dict(DEFAULT_COUNTS))
    signatures: dict = field(default_factory=default_signatures)
    noise_scale: float = 1.0
    decimals: int = 4

    def validate(self):
        if self.noise_scale < 0:
            raise UsageError("noise_scale must be >= 0")
        if any(v < 0 for v in self.per_class_counts.values()):
            raise UsageError("class counts must be >= 0")
        if sum(self.per_class_counts.values()) <= 0:
            raise EmptyConfig("configuration requests zero records")
        missing = [c for c, n in self.per_class_counts.items() if n > 0 and c not in self.signatures]
        if missing:
            raise UsageError(f"no signature for {', '.join(c.label for c in missing)}")


def _truncated_normal(rng, mean, std, size):
    """Normal draws with negatives resampled; std=0 returns the mean exactly."""
    out = rng.normal(mean, std, size) if std > 0 else np.full(size, float(mean))
    bad = out < 0
    while bad.any():
        out[bad] = rng.normal(mean, std, int(bad.sum()))
        bad = out < 0
    return out


def generate(cfg: SynthConfig | None = None) -> Dataset:
    cfg = cfg or SynthConfig()
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    blocks, labels = [], []
    for c in CLASSES:
        n = int(cfg.per_class_counts.get(c, 0))
        if n == 0:
            continue
        sig = cfg.signatures[c]
        mu, sd = sig.class_means, sig.class_stds * cfg.noise_scale
        cols = [_truncated_normal(rng, mu[j], sd[j], n) for j in range(len(mu))]
        blocks.append(np.column_stack(cols))
        labels.extend([c.ordinal] * n)
    X = np.round(np.vstack(blocks), cfg.decimals)
    y = np.array(labels)
    order = rng.permutation(len(y))
    return Dataset(INTERFACE_8, X[order], y[order])


def load_config(path) -> SynthConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    if not cp.read(path, encoding="utf-8"):
        raise UsageError(f"cannot read synth config {path}")
    cfg = SynthConfig()
    if cp.has_section("general"):
        g = cp["general"]
        cfg.seed = g.getint("seed", cfg.seed)
        cfg.noise_scale = g.getfloat("noise_scale", cfg.noise_scale)
        cfg.decimals = g.getint("decimals", cfg.decimals)
    if cp.has_section("counts"):
        for key, val in cp["counts"].items():
            cfg.per_class_counts[TrafficClass.parse(key)] = int(val)
    sigs = dict(cfg.signatures)
    if cp.has_section("baseline"):
        means = list(sigs[TrafficClass.Normal].means)
        stds = list(sigs[TrafficClass.Normal].stds)
        for key, val in cp["baseline"].items():
            j = variable(key).id - 1
            parts = [float(p) for p in val.split(",")]
            means[j] = parts[0]
            if len(parts) > 1:
                stds[j] = parts[1]
        sigs = {c: ClassSignature(tuple(means), tuple(stds), s.factors) for c, s in sigs.items()}
    for section in cp.sections():
        if section in ("general", "counts", "baseline"):
            continue
        c = TrafficClass.parse(section)
        factors = list(sigs[c].factors)
        for key, val in cp[section].items():
            factors[variable(key).id - 1] = float(val)
        sigs[c] = ClassSignature(sigs[c].means, sigs[c].stds, tuple(factors))
    cfg.signatures = sigs
    return cfg
