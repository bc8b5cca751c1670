"""Loopback SNMP responder with scripted counter values, for tests and demos."""
from __future__ import annotations

import socket
import threading
from typing import Callable, Sequence

from ..errors import MalformedBer
from .ber import PDU_GET, Counter32, decode, encode, get_response
from .collector import IF_COLUMNS, IF_ENTRY

_COLUMN_TO_LABEL = {col: label for label, col in IF_COLUMNS.items()}


class LoopbackAgent:
    """Answers GETs for ifTable counters on 127.0.0.1.

    ``script(n)`` returns the eight counters for the ``n``-th answered request
    (0-based). ``drop`` lists request numbers to ignore, ``error_status``
    maps request numbers to ``(status, index)`` error replies, and ``override``
    maps request numbers to a replacement varbind value for every OID.
    """

    def __init__(self, script: Callable[[int], Sequence[int]] | Sequence[Sequence[int]],
                 community: str = "public", drop=(), error_status=None, override=None):
        if not callable(script):
            rows = [tuple(r) for r in script]
            script = lambda n: rows[min(n, len(rows) - 1)]  # noqa: E731
        self.script = script
        self.community = community.encode()
        self.drop = set(drop)
        self.error_status = dict(error_status or {})
        self.override = dict(override or {})
        self.requests = 0
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind(("127.0.0.1", 0))
        self.sock.settimeout(0.05)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._serve, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self.sock.getsockname()

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        self.sock.close()

    def _serve(self):
        answered = 0
        while not self._stop.is_set():
            try:
                data, peer = self.sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                return
            n = self.requests
            self.requests += 1
            try:
                req = decode(data)
            except MalformedBer:
                continue
            if req.pdu_type != PDU_GET or req.community != self.community or n in self.drop:
                continue
            if n in self.error_status:
                status, index = self.error_status[n]
                reply = get_response(req, req.varbinds, status, index)
            else:
                counters = self.script(answered)
                answered += 1
                vbs = []
                for oid, _ in req.varbinds:
                    if n in self.override:
                        vbs.append((oid, self.override[n]))
                        continue
                    arcs = oid.arcs
                    label = _COLUMN_TO_LABEL.get(arcs[-2]) if arcs[:-2] == IF_ENTRY else None
                    vbs.append((oid, Counter32(counters[label - 1] % 2**32) if label else None))
                reply = get_response(req, vbs)
            self.sock.sendto(encode(reply), peer)
