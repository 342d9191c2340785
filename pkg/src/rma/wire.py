"""
Binary framing for the sockets backend. All integers are little-endian.

request  = u8 opcode | u64 offset | u32 length | payload
response = u8 status | payload

GET answers with `length` bytes, CAS and FAA with the prior u64, PUT, BARRIER and
GATHER with nothing. HELLO and every non-OK status answer with u32 length | bytes.
"""
import json
import struct
from enum import IntEnum

from src.core.errors import (
    DhtError,
    HandleClosedError,
    InvalidConfigError,
    MisalignedError,
    OutOfBoundsError,
    TransportError,
)

REQUEST_HEADER = struct.Struct('<BQI')
STATUS = struct.Struct('<B')
U32 = struct.Struct('<I')
U64 = struct.Struct('<Q')
I64 = struct.Struct('<q')
CAS_PAYLOAD = struct.Struct('<QQ')

AUTO_RANK = 0xFFFFFFFFFFFFFFFF


class Opcode(IntEnum):
    GET = 1
    PUT = 2
    CAS = 3
    FAA = 4
    BARRIER = 5
    HELLO = 6
    GATHER = 7


class Status(IntEnum):
    OK = 0
    OUT_OF_BOUNDS = 1
    MISALIGNED = 2
    BAD_REQUEST = 3
    CLOSED = 4
    FAILED = 5


_STATUS_ERRORS = {
    Status.OUT_OF_BOUNDS: OutOfBoundsError,
    Status.MISALIGNED: MisalignedError,
    Status.BAD_REQUEST: InvalidConfigError,
    Status.CLOSED: HandleClosedError,
    Status.FAILED: TransportError,
}


def status_for(exc):
    """Map a library exception raised while serving a request to a wire status."""
    for status, error_class in _STATUS_ERRORS.items():
        if type(exc) is error_class:
            return status
    return Status.FAILED


def recv_exact(sock, length):
    """
    Read exactly length bytes.

    Raises:
        TransportError: If the peer closes the connection first
    """
    buf = bytearray(length)
    view = memoryview(buf)
    received = 0
    while received < length:
        n = sock.recv_into(view[received:], length - received)
        if n == 0:
            raise TransportError("Connection closed by peer", f"expected {length} bytes, got {received}")
        received += n
    return bytes(buf)


def encode_request(opcode, offset=0, length=0, payload=b''):
    return REQUEST_HEADER.pack(opcode, offset, length) + payload


def read_request(sock):
    """Read one request; returns (opcode, offset, length, payload) or None on a clean EOF."""
    first = sock.recv(1)
    if not first:
        return None
    opcode, offset, length = REQUEST_HEADER.unpack(first + recv_exact(sock, REQUEST_HEADER.size - 1))
    payload_size = request_payload_size(opcode, length)
    payload = recv_exact(sock, payload_size) if payload_size else b''
    return opcode, offset, length, payload


def request_payload_size(opcode, length):
    if opcode == Opcode.GET or opcode == Opcode.BARRIER:
        return 0
    if opcode == Opcode.CAS:
        return CAS_PAYLOAD.size
    if opcode == Opcode.FAA:
        return I64.size
    return length


def encode_blob(status, blob):
    return STATUS.pack(status) + U32.pack(len(blob)) + blob


def encode_error(exc):
    message = exc.error_message if isinstance(exc, DhtError) else str(exc)
    return encode_blob(status_for(exc), message.encode('utf-8'))


def read_status(sock):
    """Read the status byte; raise the mapped library error for a non-OK status."""
    (status,) = STATUS.unpack(recv_exact(sock, STATUS.size))
    if status != Status.OK:
        message = read_blob(sock).decode('utf-8', 'replace')
        error_class = _STATUS_ERRORS.get(Status(status), TransportError)
        raise error_class(message, "reported by remote window owner")


def read_blob(sock):
    (length,) = U32.unpack(recv_exact(sock, U32.size))
    return recv_exact(sock, length)


def encode_json(obj):
    return json.dumps(obj, separators=(',', ':')).encode('utf-8')


def decode_json(blob):
    return json.loads(blob.decode('utf-8'))
