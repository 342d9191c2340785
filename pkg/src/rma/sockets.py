"""
Socket backend: one process per participant, each serving its own window over TCP.

Rank 0 doubles as the rendezvous point (HELLO), the barrier coordinator (BARRIER)
and the gather root (GATHER). Initiators keep one connection per target and issue
requests on it in order; the owner serializes all atomics on its window through a
single lock, so word-level atomicity holds regardless of which connection an
atomic arrives on.
"""
import socket
import socketserver
import threading
from contextlib import contextmanager
from typing import Dict, List, Optional, Tuple

from src.config import settings
from src.core.errors import DhtError, HandleClosedError, InvalidConfigError, MisalignedError, TransportError
from src.utils.logging_utils import get_logger
from . import wire
from .base import WORD, Backend, OpKind, Universe, apply_cas, apply_faa, store_bytes
from .wire import Opcode, Status

logger = get_logger('rma.sockets')


class _WindowRequestHandler(socketserver.BaseRequestHandler):
    """Serve requests from one initiator connection until it closes."""

    def setup(self):
        self.request.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)

    def handle(self):
        owner = self.server.owner
        while True:
            try:
                request = wire.read_request(self.request)
            except (OSError, DhtError):
                request = None
            if request is None:
                owner._peer_lost(self.client_address)
                return
            try:
                response = owner._serve(*request)
            except DhtError as e:
                response = wire.encode_error(e)
            except Exception as e:
                logger.error(f"Unexpected error serving opcode {request[0]}: {e}", exc_info=True)
                response = wire.encode_error(e)
            try:
                self.request.sendall(response)
            except OSError:
                owner._peer_lost(self.client_address)
                return


class _WindowServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, owner):
        self.owner = owner
        super().__init__(address, _WindowRequestHandler)


class SocketUniverse(Universe):
    """The local participant's view of a universe spread over processes or hosts."""

    backend = Backend.SOCKETS

    def __init__(
        self,
        participants,
        window_size,
        bind_address,
        rank=None,
        put_granularity=None,
        loopback_local=False,
        socket_timeout=None,
        barrier_timeout=None,
        backoff_min_us=None,
        backoff_max_us=None,
    ):
        if put_granularity is None:
            put_granularity = settings.PUT_GRANULARITY
        # A failed lock attempt already costs a round trip; back off on the same scale
        super().__init__(
            participants,
            window_size,
            put_granularity,
            settings.SOCKET_BACKOFF_MIN_US if backoff_min_us is None else backoff_min_us,
            settings.SOCKET_BACKOFF_MAX_US if backoff_max_us is None else backoff_max_us,
        )
        self.rank: Optional[int] = rank
        self._loopback_local = loopback_local
        self._socket_timeout = socket_timeout or settings.SOCKET_TIMEOUT
        self._barrier_timeout = barrier_timeout or settings.BARRIER_TIMEOUT
        self._window = bytearray(window_size)
        self._atomic_lock = threading.Lock()
        self._closing = False
        self._aborted = False

        self._peers: List[Tuple[str, int]] = []
        self._connections: Dict[int, socket.socket] = {}
        self._connection_locks = [threading.Lock() for _ in range(participants)]

        # Coordinator state, used on rank 0 only
        self._barrier = threading.Barrier(participants, timeout=self._barrier_timeout)
        self._mailbox: List[Optional[bytes]] = [None] * participants
        self._joined: Dict[int, Tuple[str, int]] = {}
        self._join_condition = threading.Condition()

        try:
            self._server = _WindowServer(tuple(bind_address), self)
        except OSError as e:
            raise TransportError("Cannot bind window server", f"{bind_address}: {e}") from e
        self.address = self._server.server_address[:2]
        self._server_thread = threading.Thread(
            target=self._server.serve_forever, name=f"dht-window-{self.address[1]}", daemon=True
        )
        self._server_thread.start()

    # Construction

    @classmethod
    def listen(cls, address, participants, window_size, rendezvous_timeout=None, on_listening=None, **kwargs):
        """
        Create rank 0, serving its window on address, and wait for the other participants.

        Args:
            address (tuple): (host, port) to bind; port 0 picks a free port
            participants (int): Participant count P
            window_size (int): Bytes per window, identical on every participant
            on_listening (callable, optional): Called with the bound (host, port) before waiting for peers

        Returns:
            SocketUniverse: Rank 0 of a fully connected universe
        """
        universe = cls(participants, window_size, address, rank=0, **kwargs)
        with universe._join_condition:
            universe._joined[0] = universe.address
            universe._join_condition.notify_all()
        if on_listening is not None:
            on_listening(universe.address)
        try:
            universe._await_peers(rendezvous_timeout or settings.RENDEZVOUS_TIMEOUT)
        except DhtError:
            universe._shutdown_server()
            raise
        universe._peers = [universe._joined[r] for r in range(participants)]
        logger.info(f"Rank 0 listening on {universe.address[0]}:{universe.address[1]} with {participants} participants")
        return universe

    @classmethod
    def connect(cls, address, participants, window_size, rank=None, bind_host=None, **kwargs):
        """
        Join the universe whose rank 0 listens on address.

        Args:
            address (tuple): (host, port) of rank 0
            participants (int): Participant count P
            window_size (int): Bytes per window
            rank (int, optional): Requested rank; assigned by rank 0 if omitted
            bind_host (str, optional): Interface for this participant's window server

        Returns:
            SocketUniverse: This participant's view
        """
        universe = cls(participants, window_size, (bind_host or settings.SOCKET_HOST, 0), **kwargs)
        try:
            sock = universe._open(tuple(address), settings.RENDEZVOUS_TIMEOUT)
            hello = wire.encode_json({
                "host": universe.address[0],
                "port": universe.address[1],
                "participants": participants,
                "window_size": window_size,
            })
            requested = wire.AUTO_RANK if rank is None else rank
            sock.sendall(wire.encode_request(Opcode.HELLO, requested, len(hello), hello))
            wire.read_status(sock)
            table = wire.decode_json(wire.read_blob(sock))
        except OSError as e:
            universe._shutdown_server()
            raise TransportError("Cannot reach rank 0", f"{address}: {e}") from e
        except DhtError:
            universe._shutdown_server()
            raise
        sock.settimeout(universe._socket_timeout)
        universe.rank = table["rank"]
        universe._peers = [tuple(peer) for peer in table["peers"]]
        universe._connections[0] = sock
        logger.info(f"Joined as rank {universe.rank} of {participants}")
        return universe

    # Contract operations

    def remote_get(self, rank, offset, length):
        self._check_range(rank, offset, length)
        if self._is_local(rank):
            return bytes(self._window[offset:offset + length])
        with self._exchange(rank, Opcode.GET, offset, length) as sock:
            return wire.recv_exact(sock, length)

    def remote_put(self, rank, offset, data):
        self._check_range(rank, offset, len(data))
        if self._is_local(rank):
            store_bytes(self._window, offset, data, self._put_granularity)
            return
        with self._exchange(rank, Opcode.PUT, offset, len(data), bytes(data)):
            pass

    def remote_cas64(self, rank, offset, expected, desired):
        self._check_word(rank, offset)
        if self._is_local(rank):
            with self._atomic_lock:
                return apply_cas(self._window, offset, expected, desired)
        payload = wire.CAS_PAYLOAD.pack(expected & 0xFFFFFFFFFFFFFFFF, desired & 0xFFFFFFFFFFFFFFFF)
        with self._exchange(rank, Opcode.CAS, offset, len(payload), payload) as sock:
            return WORD.unpack(wire.recv_exact(sock, WORD.size))[0]

    def remote_faa64(self, rank, offset, delta):
        self._check_word(rank, offset)
        if self._is_local(rank):
            with self._atomic_lock:
                return apply_faa(self._window, offset, delta)
        payload = wire.I64.pack(_to_signed(delta))
        with self._exchange(rank, Opcode.FAA, offset, len(payload), payload) as sock:
            return WORD.unpack(wire.recv_exact(sock, WORD.size))[0]

    def remote_batch(self, rank, ops):
        """Send every op on the connection before reading the first reply; one round trip per batch."""
        for op in ops:
            self._check_op(rank, op)
        if self._is_local(rank):
            with self._atomic_lock:
                return [_apply_local(self._window, op, self._put_granularity) for op in ops]
        if not ops:
            return []
        frames = b''.join(_encode_op(op) for op in ops)
        with self._connection_locks[rank]:
            try:
                sock = self._connection(rank)
                sock.sendall(frames)
                results = []
                for op in ops:
                    wire.read_status(sock)
                    results.append(_read_result(sock, op))
                return results
            except OSError as e:
                self._drop_connection(rank)
                raise TransportError(f"Batch of {len(ops)} to rank {rank} failed", str(e)) from e
            except DhtError:
                # Replies for the rest of the batch are still in flight
                self._drop_connection(rank)
                raise

    def barrier(self):
        self._check_open()
        if self._is_local(0):
            self._barrier_wait()
            return
        with self._exchange(0, Opcode.BARRIER, timeout=self._barrier_timeout):
            pass

    def gather(self, rank, payload):
        self._check_open()
        payload = bytes(payload)
        if self._is_local(0):
            self._mailbox[0] = payload
        else:
            with self._exchange(0, Opcode.GATHER, self.rank, len(payload), payload):
                pass
        self.barrier()
        collected = None
        if self.rank == 0:
            collected = list(self._mailbox)
            self._mailbox = [None] * self.participants
        self.barrier()
        return collected

    def abort(self):
        self._aborted = True
        self._barrier.abort()
        for target in list(self._connections):
            self._drop_connection(target)

    def close(self):
        if self._closed:
            return
        self._closing = True
        try:
            if not self._aborted:
                self.barrier()
        except DhtError as e:
            logger.warning(f"Closing rank {self.rank} without final barrier: {e}")
        finally:
            self._closed = True
            for target in list(self._connections):
                self._drop_connection(target)
            self._shutdown_server()

    # Serving side

    def _serve(self, opcode, offset, length, payload):
        if self._closed:
            raise HandleClosedError("Window owner is closed")
        if opcode == Opcode.GET:
            self._check_bounds(offset, length)
            return wire.STATUS.pack(Status.OK) + bytes(self._window[offset:offset + length])
        if opcode == Opcode.PUT:
            self._check_bounds(offset, length)
            store_bytes(self._window, offset, payload, self._put_granularity)
            return wire.STATUS.pack(Status.OK)
        if opcode == Opcode.CAS:
            self._check_served_word(offset)
            expected, desired = wire.CAS_PAYLOAD.unpack(payload)
            with self._atomic_lock:
                prior = apply_cas(self._window, offset, expected, desired)
            return wire.STATUS.pack(Status.OK) + WORD.pack(prior)
        if opcode == Opcode.FAA:
            self._check_served_word(offset)
            (delta,) = wire.I64.unpack(payload)
            with self._atomic_lock:
                prior = apply_faa(self._window, offset, delta)
            return wire.STATUS.pack(Status.OK) + WORD.pack(prior)
        if opcode == Opcode.BARRIER:
            self._require_coordinator("BARRIER")
            self._barrier_wait()
            return wire.STATUS.pack(Status.OK)
        if opcode == Opcode.GATHER:
            self._require_coordinator("GATHER")
            if not 0 <= offset < self.participants:
                raise InvalidConfigError("GATHER from unknown rank", f"rank {offset}")
            self._mailbox[offset] = payload
            return wire.STATUS.pack(Status.OK)
        if opcode == Opcode.HELLO:
            self._require_coordinator("HELLO")
            return wire.encode_blob(Status.OK, wire.encode_json(self._register_peer(offset, payload)))
        raise InvalidConfigError("Unknown opcode", str(opcode))

    def _check_served_word(self, offset):
        if offset % WORD.size:
            raise MisalignedError("Atomic word must be 8-byte aligned", f"offset {offset}")
        self._check_bounds(offset, WORD.size)

    def _require_coordinator(self, what):
        if self.rank != 0:
            raise InvalidConfigError(f"{what} must be sent to rank 0", f"this is rank {self.rank}")

    def _register_peer(self, requested, payload):
        hello = wire.decode_json(payload)
        if hello["participants"] != self.participants or hello["window_size"] != self.window_size:
            raise InvalidConfigError(
                "Participant disagrees on universe shape",
                f"P={hello['participants']} window={hello['window_size']}, "
                f"expected P={self.participants} window={self.window_size}",
            )
        with self._join_condition:
            if requested == wire.AUTO_RANK:
                free = [r for r in range(1, self.participants) if r not in self._joined]
                if not free:
                    raise InvalidConfigError("Universe is already full")
                rank = free[0]
            else:
                rank = int(requested)
                if not 0 < rank < self.participants or rank in self._joined:
                    raise InvalidConfigError("Requested rank is unavailable", f"rank {rank}")
            self._joined[rank] = (hello["host"], hello["port"])
            logger.debug(f"Rank {rank} joined from {hello['host']}:{hello['port']}")
            self._join_condition.notify_all()
        self._await_peers(settings.RENDEZVOUS_TIMEOUT)
        return {"rank": rank, "peers": [list(self._joined[r]) for r in range(self.participants)]}

    def _await_peers(self, timeout):
        with self._join_condition:
            complete = self._join_condition.wait_for(
                lambda: len(self._joined) == self.participants, timeout=timeout
            )
        if not complete:
            raise TransportError(
                "Rendezvous timed out", f"{len(self._joined)} of {self.participants} participants joined"
            )

    def _barrier_wait(self):
        try:
            self._barrier.wait()
        except threading.BrokenBarrierError as e:
            raise TransportError("Barrier broken", "a participant failed or timed out") from e

    def _peer_lost(self, client_address):
        # A peer vanishing outside close() means it failed: release everyone blocked on it
        if self.rank == 0 and not self._closing and not self._closed:
            logger.warning(f"Lost connection from {client_address}; aborting barrier")
            self._barrier.abort()

    # Initiator side

    def _is_local(self, rank):
        return rank == self.rank and not self._loopback_local

    def _open(self, address, timeout):
        sock = socket.create_connection(address, timeout=timeout)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return sock

    def _connection(self, rank):
        sock = self._connections.get(rank)
        if sock is None:
            sock = self._open(self._peers[rank], self._socket_timeout)
            self._connections[rank] = sock
        return sock

    @contextmanager
    def _exchange(self, rank, opcode, offset=0, length=0, payload=b'', timeout=None):
        with self._connection_locks[rank]:
            try:
                sock = self._connection(rank)
                if timeout is not None:
                    sock.settimeout(timeout)
                sock.sendall(wire.encode_request(opcode, offset, length, payload))
                wire.read_status(sock)
                yield sock
                if timeout is not None:
                    sock.settimeout(self._socket_timeout)
            except OSError as e:
                self._drop_connection(rank)
                raise TransportError(f"Request {Opcode(opcode).name} to rank {rank} failed", str(e)) from e
            except TransportError:
                self._drop_connection(rank)
                raise

    def _drop_connection(self, rank):
        sock = self._connections.pop(rank, None)
        if sock is not None:
            try:
                sock.close()
            except OSError:
                pass

    def _shutdown_server(self):
        self._server.shutdown()
        self._server.server_close()


def _encode_op(op):
    if op.kind is OpKind.GET:
        return wire.encode_request(Opcode.GET, op.offset, op.length)
    if op.kind is OpKind.PUT:
        return wire.encode_request(Opcode.PUT, op.offset, op.length, op.data)
    if op.kind is OpKind.CAS:
        payload = wire.CAS_PAYLOAD.pack(op.expected & 0xFFFFFFFFFFFFFFFF, op.operand & 0xFFFFFFFFFFFFFFFF)
        return wire.encode_request(Opcode.CAS, op.offset, len(payload), payload)
    payload = wire.I64.pack(_to_signed(op.operand))
    return wire.encode_request(Opcode.FAA, op.offset, len(payload), payload)


def _read_result(sock, op):
    if op.kind is OpKind.GET:
        return wire.recv_exact(sock, op.length)
    if op.kind is OpKind.PUT:
        return None
    return WORD.unpack(wire.recv_exact(sock, WORD.size))[0]


def _apply_local(window, op, put_granularity):
    if op.kind is OpKind.GET:
        return bytes(window[op.offset:op.offset + op.length])
    if op.kind is OpKind.PUT:
        store_bytes(window, op.offset, op.data, put_granularity)
        return None
    if op.kind is OpKind.CAS:
        return apply_cas(window, op.offset, op.expected, op.operand)
    return apply_faa(window, op.offset, op.operand)


def _to_signed(delta):
    delta &= 0xFFFFFFFFFFFFFFFF
    return delta - (1 << 64) if delta >= (1 << 63) else delta
