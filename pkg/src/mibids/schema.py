"""MIB variable schema, traffic classes, datasets and CSV I/O.

Feature values are counter-delta rates (per second). The same transform
(:func:`delta_rate`) turns live Counter32 readings into records, so files and
the collector produce comparable vectors.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    EmptyDataset,
    EmptyGroup,
    MismatchedInterface,
    NonNumericCell,
    NonPositiveInterval,
    UnknownClassLabel,
    UnknownVariableName,
    UsageError,
)

COUNTER32_MOD = 2**32
CLASS_COLUMN = "class"


class TrafficClass(enum.Enum):
    Normal = 1
    IcmpEcho = 2
    TcpSyn = 3
    UdpFlood = 4
    HttpFlood = 5
    Slowloris = 6
    Slowpost = 7
    BruteForce = 8

    @property
    def ordinal(self) -> int:
        return self.value

    @property
    def label(self) -> str:
        return _WIRE_LABELS[self]

    def __str__(self) -> str:
        return self.label

    @classmethod
    def from_ordinal(cls, n: int) -> "TrafficClass":
        return cls(int(n))

    @classmethod
    def parse(cls, text: str) -> "TrafficClass":
        """Parse a label; case, dashes, underscores and spaces are ignored."""
        key = _squash(text)
        try:
            return _PARSE_TABLE[key]
        except KeyError:
            raise UnknownClassLabel(f"unknown class label {text!r}") from None


_WIRE_LABELS = {
    TrafficClass.Normal: "Normal",
    TrafficClass.IcmpEcho: "ICMP-ECHO",
    TrafficClass.TcpSyn: "TCP-SYN",
    TrafficClass.UdpFlood: "UDP-FLOOD",
    TrafficClass.HttpFlood: "HTTP-FLOOD",
    TrafficClass.Slowloris: "SLOWLORIS",
    TrafficClass.Slowpost: "SLOWPOST",
    TrafficClass.BruteForce: "BRUTE-FORCE",
}


def _squash(text: str) -> str:
    return re.sub(r"[\s_\-]+", "", text).lower()


_PARSE_TABLE = {}
for _c in TrafficClass:
    _PARSE_TABLE[_squash(_c.label)] = _c
    _PARSE_TABLE[_squash(_c.name)] = _c
_PARSE_TABLE.update({"udp": TrafficClass.UdpFlood, "http": TrafficClass.HttpFlood,
                     "icmp": TrafficClass.IcmpEcho, "tcp": TrafficClass.TcpSyn,
                     "syn": TrafficClass.TcpSyn})

CLASSES: tuple[TrafficClass, ...] = tuple(TrafficClass)
N_CLASSES = len(CLASSES)


class Group(str, enum.Enum):
    Interface = "Interface"
    IP = "IP"
    ICMP = "ICMP"
    TCP = "TCP"
    UDP = "UDP"

    @classmethod
    def parse(cls, text: str) -> "Group":
        for g in cls:
            if g.value.lower() == text.strip().lower():
                return g
        raise UsageError(f"unknown variable group {text!r}")


@dataclass(frozen=True)
class MibVariable:
    id: int
    name: str
    group: Group
    description: str = ""


_VARIABLES = [
    # Interface group, in IF-MIB label order 1-8.
    ("ifInOctets", Group.Interface, "The total number of octets received on the interface."),
    ("ifOutOctets", Group.Interface, "The total number of octets transmitted out of the interface."),
    ("ifOutDiscards", Group.Interface, "Outbound packets discarded even though no errors were detected."),
    ("ifInUcastPkts", Group.Interface, "Unicast packets delivered to a higher layer."),
    ("ifInNUcastPkts", Group.Interface, "Multicast/broadcast packets delivered to a higher layer."),
    ("ifInDiscards", Group.Interface, "Inbound packets discarded even though no errors were detected."),
    ("ifOutUcastPkts", Group.Interface, "Unicast packets higher layers requested be transmitted."),
    ("ifOutNUcastPkts", Group.Interface, "Multicast/broadcast packets higher layers requested be transmitted."),
    ("ipInReceives", Group.IP, "Input datagrams received from interfaces."),
    ("ipInDelivers", Group.IP, "Input datagrams delivered to IP user protocols."),
    ("ipOutRequests", Group.IP, "IP datagrams supplied by local user protocols for transmission."),
    ("ipOutDiscards", Group.IP, "Output IP datagrams discarded without error."),
    ("ipInDiscards", Group.IP, "Input IP datagrams discarded without error."),
    ("ipForwDatagrams", Group.IP, "Input datagrams forwarded."),
    ("ipOutNoRoutes", Group.IP, "IP datagrams discarded because no route could be found."),
    ("ipInAddrErrors", Group.IP, "Input datagrams discarded due to an invalid destination address."),
    ("icmpInMsgs", Group.ICMP, "ICMP messages received."),
    ("icmpInDestUnreachs", Group.ICMP, "ICMP Destination Unreachable messages received."),
    ("icmpOutMsgs", Group.ICMP, "ICMP messages sent."),
    ("icmpOutDestUnreachs", Group.ICMP, "ICMP Destination Unreachable messages sent."),
    ("icmpInEchos", Group.ICMP, "ICMP Echo request messages received."),
    ("icmpOutEchoReps", Group.ICMP, "ICMP Echo Reply messages sent."),
    ("tcpOutRsts", Group.TCP, "TCP segments sent containing the RST flag."),
    ("tcpInSegs", Group.TCP, "TCP segments received."),
    ("tcpOutSegs", Group.TCP, "TCP segments sent."),
    ("tcpPassiveOpens", Group.TCP, "Transitions LISTEN -> SYN-RCVD."),
    ("tcpRetransSegs", Group.TCP, "TCP segments retransmitted."),
    ("tcpCurrEstab", Group.TCP, "TCP connections in ESTABLISHED or CLOSE-WAIT."),
    ("tcpEstabResets", Group.TCP, "Transitions ESTABLISHED/CLOSE-WAIT -> CLOSED."),
    ("tcpActiveOpens", Group.TCP, "Transitions CLOSED -> SYN-SENT."),
    ("udpInDatagrams", Group.UDP, "UDP datagrams delivered to UDP users."),
    ("udpOutDatagrams", Group.UDP, "UDP datagrams sent."),
    ("udpInErrors", Group.UDP, "Received UDP datagrams that could not be delivered (not for lack of port)."),
    ("udpNoPorts", Group.UDP, "Received UDP datagrams with no application at the destination port."),
]

SCHEMA_34: tuple[MibVariable, ...] = tuple(
    MibVariable(i + 1, name, group, desc) for i, (name, group, desc) in enumerate(_VARIABLES)
)
INTERFACE_8: tuple[MibVariable, ...] = SCHEMA_34[:8]

# Spellings seen in published tables and dataset headers.
_ALIASES = {
    "icmpinmssgs": "icmpInMsgs",
    "icmpoutmssgs": "icmpOutMsgs",
    "icmpindestunreaches": "icmpInDestUnreachs",
    "icmpoutdestunreaches": "icmpOutDestUnreachs",
    "icmpinechoes": "icmpInEchos",
    "tcpestablished": "tcpEstabResets",
}
_BY_NAME = {v.name.lower(): v for v in SCHEMA_34}
_BY_NAME.update({alias: _BY_NAME[target.lower()] for alias, target in _ALIASES.items()})


def variable(name: str) -> MibVariable:
    try:
        return _BY_NAME[name.strip().lower()]
    except KeyError:
        raise UnknownVariableName(f"unknown MIB variable {name!r}") from None


@dataclass(frozen=True)
class MibRecord:
    values: tuple[float, ...]
    label: TrafficClass | None = None

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        for v in vals:
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"record values must be finite and non-negative, got {v!r}")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of records over an ordered schema.

    ``X`` holds one row per record; ``y`` holds class ordinals (1-8) or is
    ``None`` for unlabeled data.
    """

    schema: tuple[MibVariable, ...]
    X: np.ndarray
    y: np.ndarray | None = None
    class_counts: dict = field(init=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(self.schema))
        if X.ndim != 2 or X.shape[1] != len(self.schema):
            raise ArityMismatch(f"values have shape {X.shape}, schema has {len(self.schema)} variables")
        if not np.all(np.isfinite(X)) or np.any(X < 0):
            raise ValueError("dataset values must be finite and non-negative")
        X.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "schema", tuple(self.schema))
        if self.y is not None:
            y = np.array(self.y, dtype=np.int64, copy=True)
            if y.shape != (X.shape[0],):
                raise ArityMismatch("label vector length differs from record count")
            if y.size and (y.min() < 1 or y.max() > N_CLASSES):
                raise UnknownClassLabel("class ordinals must lie in 1..8")
            y.setflags(write=False)
            object.__setattr__(self, "y", y)
            counts = Counter(int(v) for v in y)
            cc = {c: counts.get(c.ordinal, 0) for c in CLASSES}
        else:
            cc = {}
        object.__setattr__(self, "class_counts", cc)

    @classmethod
    def from_records(cls, schema: Sequence[MibVariable], records: Iterable[MibRecord]) -> "Dataset":
        records = list(records)
        labeled = [r.label is not None for r in records]
        if any(labeled) and not all(labeled):
            raise UnknownClassLabel("mixed labeled and unlabeled records")
        X = np.array([r.values for r in records], dtype=float).reshape(len(records), len(schema))
        y = [r.label.ordinal for r in records] if records and all(labeled) else None
        return cls(tuple(schema), X, y)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        if self.schema != other.schema or not np.array_equal(self.X, other.X):
            return False
        if (self.y is None) != (other.y is None):
            return False
        return self.y is None or np.array_equal(self.y, other.y)

    __hash__ = None

    @property
    def labeled(self) -> bool:
        return self.y is not None

    @property
    def n_features(self) -> int:
        return len(self.schema)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.schema]

    @property
    def records(self) -> list[MibRecord]:
        if self.y is None:
            return [MibRecord(tuple(row)) for row in self.X]
        return [MibRecord(tuple(row), TrafficClass(int(c))) for row, c in zip(self.X, self.y)]

    def labels(self) -> list[TrafficClass]:
        if self.y is None:
            return []
        return [TrafficClass(int(c)) for c in self.y]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.schema, self.X[idx], None if self.y is None else self.y[idx])

    def select(self, features: Sequence[int]) -> "Dataset":
        """Keep only the given 1-based attribute positions, in the given order."""
        cols = [f - 1 for f in features]
        return Dataset(tuple(self.schema[c] for c in cols), self.X[:, cols], self.y)

    def canonical(self) -> "Dataset":
        """Records sorted by (label, values); makes CV independent of file order."""
        keys = [self.X[:, j] for j in reversed(range(self.n_features))]
        if self.y is not None:
            keys.append(self.y)
        order = np.lexsort(keys) if keys else np.arange(len(self))
        return self.subset(order)


def _parse_header(tokens: list[str]) -> tuple[list[MibVariable], bool]:
    tokens = [t.strip() for t in tokens]
    has_class = bool(tokens) and tokens[-1].lower() == CLASS_COLUMN
    names = tokens[:-1] if has_class else tokens
    schema = [variable(t) for t in names]
    seen = set()
    for v in schema:
        if v.id in seen:
            raise UnknownVariableName(f"duplicate column {v.name!r}")
        seen.add(v.id)
    return schema, has_class


def ingest_csv(source: IO | str | bytes, schema_mode: str = "interface8") -> Dataset:
    """Read a headered CSV into a :class:`Dataset`.

    ``source`` is a binary or text stream, a path, or raw bytes. With
    ``schema_mode="interface8"`` non-interface columns are validated and then
    dropped, and the interface columns are reordered to labels 1-8;
    ``"full34"`` keeps every column in header order.
    """
    if schema_mode not in ("interface8", "full34"):
        raise UsageError(f"unknown schema mode {schema_mode!r}")
    if isinstance(source, (bytes, bytearray)):
        text = bytes(source).decode("utf-8")
    elif isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8", newline="") as fh:
            text = fh.read()
    else:
        raw = source.read()
        text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
    if text.startswith("﻿"):
        text = text[1:]

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataset("CSV has no header line") from None
    schema, has_class = _parse_header(header)
    width = len(header)

    rows, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != width:
            raise ArityMismatch(f"line {lineno}: expected {width} fields, got {len(row)}")
        vals = []
        for var, cell in zip(schema, row):
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericCell(lineno, var.name, cell) from None
            if not math.isfinite(v) or v < 0:
                raise NonNumericCell(lineno, var.name, cell)
            vals.append(v)
        rows.append(vals)
        if has_class:
            labels.append(TrafficClass.parse(row[-1]).ordinal)

    X = np.array(rows, dtype=float).reshape(len(rows), len(schema))
    ds = Dataset(tuple(schema), X, labels if has_class else None)
    if schema_mode == "interface8":
        # canonical label order, so attribute index == IF-MIB label
        ds = project_group(ds, Group.Interface)
    return ds


def emit_csv(ds: Dataset, out: IO[str] | None = None) -> str:
    """Render ``ds`` in the canonical CSV format; floats use shortest round-trip repr."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ds.names + ([CLASS_COLUMN] if ds.labeled else []))
    for i, row in enumerate(ds.X):
        cells = [_fmt(v) for v in row]
        if ds.labeled:
            cells.append(TrafficClass(int(ds.y[i])).label)
        w.writerow(cells)
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def _fmt(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def project_group(ds: Dataset, group: Group | str) -> Dataset:
    group = Group.parse(group) if isinstance(group, str) else group
    positions = sorted(
        (v.id, i + 1) for i, v in enumerate(ds.schema) if v.group is group
    )
    if not positions:
        raise EmptyGroup(f"dataset has no {group.value} variables")
    return ds.select([p for _, p in positions])


def min_max_bounds(ds: Dataset) -> np.ndarray:
    """Column-wise ``(min, max)`` as an ``(F, 2)`` array."""
    if len(ds) == 0:
        raise EmptyDataset("cannot compute bounds of an empty dataset")
    return np.column_stack([ds.X.min(axis=0), ds.X.max(axis=0)])


@dataclass(frozen=True)
class CounterSnapshot:
    timestamp: float
    if_index: int
    counters: tuple[int, ...]

    def __post_init__(self):
        counters = tuple(int(c) for c in self.counters)
        if len(counters) != len(INTERFACE_8):
            raise ArityMismatch(f"expected {len(INTERFACE_8)} counters, got {len(counters)}")
        for c in counters:
            if not 0 <= c < COUNTER32_MOD:
                raise ValueError(f"Counter32 value out of range: {c}")
        object.__setattr__(self, "counters", counters)


def delta_rate(prev: CounterSnapshot, nxt: CounterSnapshot) -> MibRecord:
    """Per-second rates between two snapshots, assuming at most one Counter32 wrap."""
    if prev.if_index != nxt.if_index:
        raise MismatchedInterface(f"ifIndex {prev.if_index} vs {nxt.if_index}")
    dt = nxt.timestamp - prev.timestamp
    if not dt > 0:
        raise NonPositiveInterval(f"interval must be positive, got {dt}")
    return MibRecord(tuple(((b - a) % COUNTER32_MOD) / dt for a, b in zip(prev.counters, nxt.counters)))
