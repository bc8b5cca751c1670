from .ber import ObjectIdentifier, SnmpMessage, decode, encode, get_request, get_response
from .collector import oid_for, poll, stream

__all__ = ["ObjectIdentifier", "SnmpMessage", "decode", "encode", "get_request", "get_response",
           "oid_for", "poll", "stream"]
