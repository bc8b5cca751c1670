"""SNMPv2c poller for the eight IF-MIB counters of one interface."""
from __future__ import annotations

import logging
import os
import random
import socket
import time
from typing import Callable, Iterator

from ..errors import AgentError, BadLabel, MalformedBer, NoSuchObject, SnmpTimeout, StreamTerminated
from ..schema import CounterSnapshot, MibRecord, delta_rate
from .ber import (
    PDU_RESPONSE,
    TAG_COUNTER32,
    TAG_GAUGE32,
    AppValue,
    ObjectIdentifier,
    VarbindException,
    decode,
    encode,
    get_request,
)

log = logging.getLogger(__name__)

IF_ENTRY = (1, 3, 6, 1, 2, 1, 2, 2, 1)
# IF-MIB ifTable column per interface-variable label 1-8.
IF_COLUMNS = {1: 10, 2: 16, 3: 19, 4: 11, 5: 12, 6: 13, 7: 17, 8: 18}

SNMP_PORT = 161
COMMUNITY_ENV = "MIBIDS_COMMUNITY"
MAX_CONSECUTIVE_TIMEOUTS = 5


def oid_for(label: int, if_index: int) -> ObjectIdentifier:
    if label not in IF_COLUMNS:
        raise BadLabel(f"interface variable label must be 1..8, got {label}")
    if if_index < 1:
        raise BadLabel(f"ifIndex must be >= 1, got {if_index}")
    return ObjectIdentifier(IF_ENTRY + (IF_COLUMNS[label], if_index))


def interface_oids(if_index: int) -> list[ObjectIdentifier]:
    return [oid_for(label, if_index) for label in range(1, 9)]


def parse_address(agent) -> tuple[str, int]:
    if isinstance(agent, tuple):
        return agent[0], int(agent[1])
    host, _, port = str(agent).rpartition(":")
    if not host:
        return str(agent), SNMP_PORT
    return host.strip("[]"), int(port)


def community_from_env(default: str | None = None) -> str | None:
    return os.environ.get(COMMUNITY_ENV, default)


def _counters_from_response(resp, oids) -> tuple[int, ...]:
    if len(resp.varbinds) != len(oids):
        raise MalformedBer(f"response has {len(resp.varbinds)} varbinds, expected {len(oids)}", 0)
    counters = []
    for (oid, value), want in zip(resp.varbinds, oids):
        if oid != want:
            raise MalformedBer(f"response varbind {oid} does not match requested {want}", 0)
        if isinstance(value, VarbindException):
            raise NoSuchObject(f"{oid}: agent returned exception tag 0x{value.tag:02x}")
        if isinstance(value, AppValue) and value.tag in (TAG_COUNTER32, TAG_GAUGE32):
            counters.append(value.value)
        elif isinstance(value, int) and not isinstance(value, bool) and 0 <= value < 2**32:
            counters.append(value)
        else:
            raise MalformedBer(f"{oid}: expected Counter32, got {value!r}", 0)
    return tuple(counters)


def poll(agent, community: str, if_index: int, timeout: float = 2.0, retries: int = 2,
         clock: Callable[[], float] = time.monotonic, rng: random.Random | None = None) -> CounterSnapshot:
    """One GET carrying all eight counters; stamped with the send time of the answered attempt."""
    if timeout <= 0:
        raise ValueError("timeout must be positive")
    host, port = parse_address(agent)
    oids = interface_oids(if_index)
    rng = rng or random.Random()
    request_id = rng.randrange(1, 2**31 - 1)
    packet = encode(get_request(community, request_id, oids))
    family = socket.AF_INET6 if ":" in host else socket.AF_INET
    with socket.socket(family, socket.SOCK_DGRAM) as sock:
        for attempt in range(retries + 1):
            sent_at = clock()
            sock.sendto(packet, (host, port))
            deadline = time.monotonic() + timeout
            while True:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    break
                sock.settimeout(remaining)
                try:
                    data, _ = sock.recvfrom(65535)
                except socket.timeout:
                    break
                resp = decode(data)
                if resp.pdu_type != PDU_RESPONSE or resp.request_id != request_id:
                    log.debug("ignoring unrelated datagram (request id %s)", resp.request_id)
                    continue
                if resp.error_status != 0:
                    raise AgentError(resp.error_status, resp.error_index)
                return CounterSnapshot(sent_at, if_index, _counters_from_response(resp, oids))
            log.debug("poll attempt %d to %s:%d timed out", attempt + 1, host, port)
    raise SnmpTimeout(f"no response from {host}:{port} after {retries + 1} attempts")


def stream(agent, community: str, if_index: int, interval: float = 15.0, *, timeout: float = 2.0,
           max_records: int | None = None, poller=None, sleep=time.sleep,
           clock: Callable[[], float] = time.monotonic) -> Iterator[MibRecord]:
    """Yield one delta-rate record per interval after the first successful poll.

    A timed-out poll drops the pending snapshot, so no record spans a gap.
    Five consecutive timeouts end the stream with :class:`StreamTerminated`.
    """
    if interval < 1:
        raise ValueError("interval must be >= 1 second")
    poller = poller or (lambda: poll(agent, community, if_index, timeout, clock=clock))
    prev = None
    misses = 0
    emitted = 0
    next_due = clock()
    while max_records is None or emitted < max_records:
        try:
            snap = poller()
        except SnmpTimeout:
            misses += 1
            prev = None
            log.warning("poll timed out (%d consecutive)", misses)
            if misses >= MAX_CONSECUTIVE_TIMEOUTS:
                raise StreamTerminated(f"{misses} consecutive timeouts") from None
        else:
            misses = 0
            if prev is not None:
                yield delta_rate(prev, snap)
                emitted += 1
                if max_records is not None and emitted >= max_records:
                    return
            prev = snap
        next_due += interval
        delay = next_due - clock()
        if delay > 0:
            sleep(delay)
