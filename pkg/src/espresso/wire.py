"""Framing, transports and session driving.

Every message travels as one frame: 4-byte magic "ESPR", version byte,
message-type byte, 4-byte big-endian payload length, payload. The same
frame codec runs over an in-memory queue pair, an append-only file pair,
or a TCP socket, so protocol outputs are transport-independent.
"""

from __future__ import annotations

import queue
import random
import socket
import struct
import threading
import time

from .errors import DecodeError, ProtocolAbort, TransportError

MAGIC = b"ESPR"
VERSION = 1
MAX_PAYLOAD = 64 * 1024 * 1024

MSG_HELLO = 0x01
MSG_HELLO_ACK = 0x02
MSG_ROUND1 = 0x03
MSG_ROUND2 = 0x04
MSG_NONCE = 0x05
MSG_ABORT = 0xFF

_HEADER = struct.Struct(">4sBBI")
HEADER_SIZE = _HEADER.size

DEFAULT_TIMEOUT = 30.0


def encode_frame(msg_type: int, payload: bytes) -> bytes:
    if len(payload) > MAX_PAYLOAD:
        raise DecodeError("payload exceeds 64 MiB bound", "length-overflow")
    return _HEADER.pack(MAGIC, VERSION, msg_type, len(payload)) + payload


def decode_frame(data: bytes) -> tuple[int, bytes]:
    if len(data) < HEADER_SIZE:
        raise DecodeError("frame shorter than header", "truncated")
    magic, version, msg_type, length = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise DecodeError("bad frame magic", "bad-magic")
    if version != VERSION:
        raise DecodeError(f"unsupported version {version}", "version-mismatch")
    if length > MAX_PAYLOAD:
        raise DecodeError("declared length exceeds 64 MiB bound", "length-overflow")
    if len(data) != HEADER_SIZE + length:
        raise DecodeError("frame length does not match payload", "truncated")
    return msg_type, data[HEADER_SIZE:]


class Channel:
    """Bidirectional framed byte stream with per-read deadline and accounting."""

    def __init__(self, timeout: float = DEFAULT_TIMEOUT):
        self.timeout = timeout
        self.bytes_sent = 0
        self.bytes_received = 0

    # raw primitives supplied by subclasses
    def _write(self, data: bytes) -> None:
        raise NotImplementedError

    def _read(self, n: int, deadline: float) -> bytes:
        raise NotImplementedError

    def send(self, msg_type: int, payload: bytes = b"") -> None:
        frame = encode_frame(msg_type, payload)
        self._write(frame)
        self.bytes_sent += len(frame)

    def recv(self) -> tuple[int, bytes]:
        deadline = time.monotonic() + self.timeout
        header = self._read(HEADER_SIZE, deadline)
        magic, version, msg_type, length = _HEADER.unpack(header)
        if magic != MAGIC:
            raise DecodeError("bad frame magic", "bad-magic")
        if version != VERSION:
            raise DecodeError(f"unsupported version {version}", "version-mismatch")
        if length > MAX_PAYLOAD:
            raise DecodeError("declared length exceeds 64 MiB bound", "length-overflow")
        payload = self._read(length, deadline) if length else b""
        self.bytes_received += HEADER_SIZE + length
        return msg_type, payload

    def expect(self, msg_type: int) -> bytes:
        got, payload = self.recv()
        if got == MSG_ABORT:
            raise ProtocolAbort(
                f"peer aborted: {payload.decode('utf-8', 'replace')}", "peer-abort"
            )
        if got != msg_type:
            raise ProtocolAbort(
                f"expected message type {msg_type}, got {got}", "unexpected-message"
            )
        return payload

    def abort(self, reason: str) -> None:
        try:
            self.send(MSG_ABORT, reason.encode("utf-8"))
        except Exception:
            pass

    def close(self) -> None:
        pass


class MemoryChannel(Channel):
    """One end of an in-process queue-backed duplex pipe."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, timeout: float = DEFAULT_TIMEOUT):
        super().__init__(timeout)
        self._inbox = inbox
        self._outbox = outbox
        self._buf = bytearray()

    @classmethod
    def pair(cls, timeout: float = DEFAULT_TIMEOUT) -> tuple["MemoryChannel", "MemoryChannel"]:
        q_ab, q_ba = queue.Queue(), queue.Queue()
        return cls(q_ba, q_ab, timeout), cls(q_ab, q_ba, timeout)

    def _write(self, data: bytes) -> None:
        self._outbox.put(data)

    def _read(self, n: int, deadline: float) -> bytes:
        while len(self._buf) < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TransportError("timed out waiting for peer")
            try:
                self._buf += self._inbox.get(timeout=remaining)
            except queue.Empty:
                raise TransportError("timed out waiting for peer") from None
        out = bytes(self._buf[:n])
        del self._buf[:n]
        return out


class SocketChannel(Channel):
    def __init__(self, sock: socket.socket, timeout: float = DEFAULT_TIMEOUT):
        super().__init__(timeout)
        self._sock = sock

    def _write(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise TransportError(f"socket write failed: {exc}") from exc

    def _read(self, n: int, deadline: float) -> bytes:
        chunks = bytearray()
        while len(chunks) < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TransportError("timed out waiting for peer")
            self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(n - len(chunks))
            except socket.timeout:
                raise TransportError("timed out waiting for peer") from None
            except OSError as exc:
                raise TransportError(f"socket read failed: {exc}") from exc
            if not chunk:
                raise TransportError("peer closed the connection")
            chunks += chunk
        return bytes(chunks)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class FilePairChannel(Channel):
    """Duplex channel over two append-only files (request/response).

    Enables offline two-step execution: each side appends frames to its
    write file and polls the read file. Works across processes.
    """

    POLL_INTERVAL = 0.005

    def __init__(self, read_path, write_path, timeout: float = DEFAULT_TIMEOUT):
        super().__init__(timeout)
        self._read_path = read_path
        self._write_path = write_path
        self._offset = 0
        open(write_path, "ab").close()

    def _write(self, data: bytes) -> None:
        with open(self._write_path, "ab") as fh:
            fh.write(data)
            fh.flush()

    def _read(self, n: int, deadline: float) -> bytes:
        while True:
            try:
                with open(self._read_path, "rb") as fh:
                    fh.seek(self._offset)
                    data = fh.read(n)
            except FileNotFoundError:
                data = b""
            if len(data) >= n:
                self._offset += n
                return data
            if time.monotonic() >= deadline:
                raise TransportError("timed out waiting for peer file")
            time.sleep(self.POLL_INTERVAL)


# protocol registry: name -> (client_fn, server_fn); each fn takes
# (channel, inputs, rng) and returns the protocol output.
PROTOCOLS: dict[str, tuple] = {}


def register_protocol(name: str, client_fn, server_fn) -> None:
    PROTOCOLS[name] = (client_fn, server_fn)


def run_session(
    role: str,
    protocol: str,
    inputs: dict,
    channel: Channel,
    rng: random.Random | None = None,
):
    """Drive one protocol role to completion over the given channel."""
    try:
        client_fn, server_fn = PROTOCOLS[protocol]
    except KeyError:
        raise ValueError(f"unknown protocol {protocol!r}") from None
    if role == "client":
        return client_fn(channel, inputs, rng)
    if role == "server":
        try:
            return server_fn(channel, inputs, rng)
        except (ProtocolAbort, DecodeError, ValueError) as exc:
            channel.abort(str(exc))
            raise
    raise ValueError(f"unknown role {role!r}")


class _ServerThread(threading.Thread):
    def __init__(self, protocol, inputs, channel, rng):
        super().__init__(daemon=True)
        self.protocol = protocol
        self.inputs = inputs
        self.channel = channel
        self.rng = rng
        self.result = None
        self.error = None

    def run(self):
        try:
            self.result = run_session("server", self.protocol, self.inputs, self.channel, self.rng)
        except Exception as exc:  # surfaced by loopback()
            self.error = exc


def loopback(
    protocol: str,
    client_inputs: dict,
    server_inputs: dict,
    channels: tuple[Channel, Channel] | None = None,
    client_rng: random.Random | None = None,
    server_rng: random.Random | None = None,
):
    """Run both roles in one process; returns (client_output, server_output)."""
    if channels is None:
        channels = MemoryChannel.pair()
    client_chan, server_chan = channels
    server = _ServerThread(protocol, server_inputs, server_chan, server_rng)
    server.start()
    try:
        client_out = run_session("client", protocol, client_inputs, client_chan, client_rng)
    finally:
        server.join(timeout=client_chan.timeout)
    if server.error is not None and not isinstance(server.error, (ProtocolAbort, TransportError)):
        raise server.error
    return client_out, server.result


def serve_forever(
    host: str,
    port: int,
    protocol: str,
    inputs: dict,
    rng_factory=None,
    max_sessions: int | None = None,
    ready_event: threading.Event | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> int:
    """Accept TCP connections and run the server role once per connection."""
    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    listener.bind((host, port))
    listener.listen()
    bound_port = listener.getsockname()[1]
    if ready_event is not None:
        ready_event.port = bound_port  # type: ignore[attr-defined]
        ready_event.set()
    sessions = 0
    try:
        while max_sessions is None or sessions < max_sessions:
            conn, _ = listener.accept()
            channel = SocketChannel(conn, timeout)
            rng = rng_factory() if rng_factory is not None else None

            def handle(chan=channel, r=rng):
                try:
                    run_session("server", protocol, inputs, chan, r)
                finally:
                    chan.close()

            threading.Thread(target=handle, daemon=True).start()
            sessions += 1
    finally:
        listener.close()
    return sessions


def connect(host: str, port: int, timeout: float = DEFAULT_TIMEOUT) -> SocketChannel:
    try:
        sock = socket.create_connection((host, port), timeout=timeout)
    except OSError as exc:
        raise TransportError(f"connect failed: {exc}") from exc
    return SocketChannel(sock, timeout)
