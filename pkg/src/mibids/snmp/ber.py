"""Definite-length BER codec for SNMPv2c GetRequest / GetResponse messages.

Only the subset SNMP needs: INTEGER, OCTET STRING, NULL, OBJECT IDENTIFIER,
SEQUENCE, the SMIv2 application types, the v2 varbind exceptions and the
PDU context tags.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..errors import MalformedBer, TruncatedMessage, UnsupportedVersion

SNMP_V2C = 1

TAG_INTEGER = 0x02
TAG_OCTET_STRING = 0x04
TAG_NULL = 0x05
TAG_OID = 0x06
TAG_SEQUENCE = 0x30
TAG_IPADDRESS = 0x40
TAG_COUNTER32 = 0x41
TAG_GAUGE32 = 0x42
TAG_TIMETICKS = 0x43
TAG_COUNTER64 = 0x46
TAG_NO_SUCH_OBJECT = 0x80
TAG_NO_SUCH_INSTANCE = 0x81
TAG_END_OF_MIB_VIEW = 0x82

PDU_GET = 0xA0
PDU_GETNEXT = 0xA1
PDU_RESPONSE = 0xA2
PDU_TYPES = (PDU_GET, PDU_GETNEXT, PDU_RESPONSE)


@dataclass(frozen=True)
class ObjectIdentifier:
    arcs: tuple

    def __post_init__(self):
        arcs = tuple(int(a) for a in self.arcs)
        if len(arcs) < 2:
            raise ValueError("an OID needs at least two arcs")
        if any(a < 0 for a in arcs):
            raise ValueError("OID arcs must be non-negative")
        if arcs[0] > 2 or (arcs[0] < 2 and arcs[1] >= 40):
            raise ValueError(f"invalid leading arcs {arcs[:2]}")
        object.__setattr__(self, "arcs", arcs)

    @classmethod
    def parse(cls, text: str) -> "ObjectIdentifier":
        return cls(tuple(int(p) for p in text.strip().strip(".").split(".")))

    def __str__(self) -> str:
        return ".".join(map(str, self.arcs))


@dataclass(frozen=True)
class AppValue:
    """SMIv2 application-tagged unsigned value (Counter32, Gauge32, ...)."""

    tag: int
    value: int

    _LIMITS = {TAG_COUNTER32: 32, TAG_GAUGE32: 32, TAG_TIMETICKS: 32, TAG_COUNTER64: 64}

    def __post_init__(self):
        bits = self._LIMITS.get(self.tag)
        if bits is None:
            raise ValueError(f"unsupported application tag 0x{self.tag:02x}")
        if not 0 <= self.value < 2**bits:
            raise ValueError(f"value {self.value} out of range for tag 0x{self.tag:02x}")


def Counter32(v: int) -> AppValue:
    return AppValue(TAG_COUNTER32, v)


def Gauge32(v: int) -> AppValue:
    return AppValue(TAG_GAUGE32, v)


@dataclass(frozen=True)
class IpAddress:
    octets: bytes


@dataclass(frozen=True)
class VarbindException:
    """noSuchObject / noSuchInstance / endOfMibView."""

    tag: int


NO_SUCH_OBJECT = VarbindException(TAG_NO_SUCH_OBJECT)
NO_SUCH_INSTANCE = VarbindException(TAG_NO_SUCH_INSTANCE)
END_OF_MIB_VIEW = VarbindException(TAG_END_OF_MIB_VIEW)

Value = Union[None, int, bytes, ObjectIdentifier, AppValue, IpAddress, VarbindException]


@dataclass(frozen=True)
class SnmpMessage:
    community: bytes
    request_id: int
    varbinds: tuple  # of (ObjectIdentifier, Value)
    pdu_type: int = PDU_GET
    error_status: int = 0
    error_index: int = 0
    version: int = SNMP_V2C

    def __post_init__(self):
        if isinstance(self.community, str):
            object.__setattr__(self, "community", self.community.encode())
        object.__setattr__(self, "varbinds", tuple((o, v) for o, v in self.varbinds))


def get_request(community, request_id: int, oids) -> SnmpMessage:
    return SnmpMessage(community, request_id, tuple((o, None) for o in oids), PDU_GET)


def get_response(request: SnmpMessage, varbinds, error_status: int = 0, error_index: int = 0) -> SnmpMessage:
    return SnmpMessage(request.community, request.request_id, tuple(varbinds), PDU_RESPONSE,
                       error_status, error_index, request.version)


# ---------------------------------------------------------------- encoding


def encode_length(n: int) -> bytes:
    if n < 0x80:
        return bytes([n])
    body = n.to_bytes((n.bit_length() + 7) // 8, "big")
    return bytes([0x80 | len(body)]) + body


def tlv(tag: int, content: bytes) -> bytes:
    return bytes([tag]) + encode_length(len(content)) + content


def encode_integer(v: int, tag: int = TAG_INTEGER) -> bytes:
    n = 1
    while not -(1 << (8 * n - 1)) <= v < (1 << (8 * n - 1)):
        n += 1
    return tlv(tag, v.to_bytes(n, "big", signed=True))


def _encode_unsigned(tag: int, v: int) -> bytes:
    # unsigned values get a leading 0x00 when the high bit is set
    n = max(1, (v.bit_length() + 8) // 8)
    return tlv(tag, v.to_bytes(n, "big"))


def encode_base128(v: int) -> bytes:
    out = [v & 0x7F]
    v >>= 7
    while v:
        out.append(0x80 | (v & 0x7F))
        v >>= 7
    return bytes(reversed(out))


def encode_oid(oid: ObjectIdentifier) -> bytes:
    a = oid.arcs
    body = encode_base128(40 * a[0] + a[1]) + b"".join(encode_base128(x) for x in a[2:])
    return tlv(TAG_OID, body)


def encode_value(v: Value) -> bytes:
    if v is None:
        return tlv(TAG_NULL, b"")
    if isinstance(v, bool):
        raise TypeError("booleans are not SNMP values")
    if isinstance(v, int):
        return encode_integer(v)
    if isinstance(v, (bytes, bytearray)):
        return tlv(TAG_OCTET_STRING, bytes(v))
    if isinstance(v, ObjectIdentifier):
        return encode_oid(v)
    if isinstance(v, AppValue):
        return _encode_unsigned(v.tag, v.value)
    if isinstance(v, IpAddress):
        return tlv(TAG_IPADDRESS, v.octets)
    if isinstance(v, VarbindException):
        return tlv(v.tag, b"")
    raise TypeError(f"cannot encode {type(v).__name__}")


def encode(msg: SnmpMessage) -> bytes:
    if msg.pdu_type not in PDU_TYPES:
        raise ValueError(f"unsupported PDU type 0x{msg.pdu_type:02x}")
    vbs = b"".join(tlv(TAG_SEQUENCE, encode_oid(o) + encode_value(v)) for o, v in msg.varbinds)
    pdu = tlv(msg.pdu_type, encode_integer(msg.request_id) + encode_integer(msg.error_status)
              + encode_integer(msg.error_index) + tlv(TAG_SEQUENCE, vbs))
    return tlv(TAG_SEQUENCE, encode_integer(msg.version) + tlv(TAG_OCTET_STRING, msg.community) + pdu)


# ---------------------------------------------------------------- decoding


class _Reader:
    def __init__(self, data: bytes, start: int = 0, end: int | None = None):
        self.data = data
        self.pos = start
        self.end = len(data) if end is None else end

    def done(self) -> bool:
        return self.pos >= self.end

    def header(self) -> tuple[int, int, int]:
        """Read tag and length; returns (tag, content_start, content_end)."""
        at = self.pos
        if self.pos >= self.end:
            raise TruncatedMessage("expected a tag", at)
        tag = self.data[self.pos]
        if tag & 0x1F == 0x1F:
            raise MalformedBer("multi-byte tags are not supported", at)
        self.pos += 1
        if self.pos >= self.end:
            raise TruncatedMessage("expected a length", self.pos)
        first = self.data[self.pos]
        self.pos += 1
        if first < 0x80:
            length = first
        elif first == 0x80:
            raise MalformedBer("indefinite length is not allowed", self.pos - 1)
        else:
            nbytes = first & 0x7F
            if nbytes > 4:
                raise MalformedBer("length field too long", self.pos - 1)
            if self.pos + nbytes > self.end:
                raise TruncatedMessage("length field runs past the end", self.pos)
            length = int.from_bytes(self.data[self.pos:self.pos + nbytes], "big")
            self.pos += nbytes
        start = self.pos
        if start + length > self.end:
            raise TruncatedMessage(f"content of {length} bytes runs past the end", start)
        self.pos = start + length
        return tag, start, start + length

    def expect(self, tag: int) -> tuple[int, int]:
        at = self.pos
        got, s, e = self.header()
        if got != tag:
            raise MalformedBer(f"expected tag 0x{tag:02x}, found 0x{got:02x}", at)
        return s, e


def _decode_integer(data: bytes, s: int, e: int) -> int:
    if e == s:
        raise MalformedBer("zero-length INTEGER", s)
    return int.from_bytes(data[s:e], "big", signed=True)


def _decode_oid(data: bytes, s: int, e: int) -> ObjectIdentifier:
    if e == s:
        raise MalformedBer("zero-length OBJECT IDENTIFIER", s)
    vals, cur = [], 0
    for i in range(s, e):
        b = data[i]
        if cur == 0 and b == 0x80:
            raise MalformedBer("non-minimal OID arc encoding", i)
        cur = (cur << 7) | (b & 0x7F)
        if not b & 0x80:
            vals.append(cur)
            cur = 0
    if data[e - 1] & 0x80:
        raise MalformedBer("OID ends inside an arc", e - 1)
    first = vals[0]
    if first < 40:
        head = (0, first)
    elif first < 80:
        head = (1, first - 40)
    else:
        head = (2, first - 80)
    return ObjectIdentifier(head + tuple(vals[1:]))


def _decode_value(r: _Reader):
    at = r.pos
    tag, s, e = r.header()
    d = r.data
    if tag == TAG_NULL:
        if e != s:
            raise MalformedBer("NULL with content", at)
        return None
    if tag == TAG_INTEGER:
        return _decode_integer(d, s, e)
    if tag == TAG_OCTET_STRING:
        return bytes(d[s:e])
    if tag == TAG_OID:
        return _decode_oid(d, s, e)
    if tag == TAG_IPADDRESS:
        return IpAddress(bytes(d[s:e]))
    if tag in (TAG_COUNTER32, TAG_GAUGE32, TAG_TIMETICKS, TAG_COUNTER64):
        if e == s:
            raise MalformedBer("zero-length unsigned value", at)
        try:
            return AppValue(tag, int.from_bytes(d[s:e], "big"))
        except ValueError as exc:
            raise MalformedBer(str(exc), at) from None
    if tag in (TAG_NO_SUCH_OBJECT, TAG_NO_SUCH_INSTANCE, TAG_END_OF_MIB_VIEW):
        return VarbindException(tag)
    raise MalformedBer(f"unsupported value tag 0x{tag:02x}", at)


def decode(data: bytes) -> SnmpMessage:
    data = bytes(data)
    top = _Reader(data)
    s, e = top.expect(TAG_SEQUENCE)
    if not top.done():
        raise MalformedBer("trailing bytes after message", top.pos)
    r = _Reader(data, s, e)
    vs, ve = r.expect(TAG_INTEGER)
    version = _decode_integer(data, vs, ve)
    if version != SNMP_V2C:
        raise UnsupportedVersion(f"SNMP version field {version} (only v2c=1 is supported)")
    cs, ce = r.expect(TAG_OCTET_STRING)
    community = data[cs:ce]
    at = r.pos
    pdu_type, ps, pe = r.header()
    if pdu_type not in PDU_TYPES:
        raise MalformedBer(f"unsupported PDU tag 0x{pdu_type:02x}", at)
    if not r.done():
        raise MalformedBer("trailing bytes after PDU", r.pos)
    p = _Reader(data, ps, pe)
    fields = []
    for _ in range(3):
        a, b = p.expect(TAG_INTEGER)
        fields.append(_decode_integer(data, a, b))
    ls, le = p.expect(TAG_SEQUENCE)
    if not p.done():
        raise MalformedBer("trailing bytes after varbind list", p.pos)
    vl = _Reader(data, ls, le)
    varbinds = []
    while not vl.done():
        bs, be = vl.expect(TAG_SEQUENCE)
        vb = _Reader(data, bs, be)
        os_, oe = vb.expect(TAG_OID)
        oid = _decode_oid(data, os_, oe)
        value = _decode_value(vb)
        if not vb.done():
            raise MalformedBer("trailing bytes inside varbind", vb.pos)
        varbinds.append((oid, value))
    return SnmpMessage(community, fields[0], tuple(varbinds), pdu_type, fields[1], fields[2], version)


def declared_lengths_consistent(data: bytes) -> bool:
    """Walk every constructed TLV and check children exactly fill the declared length."""

    def walk(s, e):
        r = _Reader(data, s, e)
        while not r.done():
            tag, cs, ce = r.header()
            if tag & 0x20 and not walk(cs, ce):
                return False
        return r.pos == e

    try:
        top = _Reader(data)
        tag, s, e = top.header()
        return top.pos == len(data) and walk(s, e)
    except MalformedBer:
        return False
