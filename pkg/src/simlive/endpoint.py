"""Embedded WAMP endpoint: each simulation is its own router.

The server side accepts WebSocket sessions, tracks subscriptions, and
dispatches CALLs against an in-process procedure table; there is no
external broker or dealer.  The client side is the matching caller and
subscriber peer used by the CLI, the browser widgets, and the tests.

Slow subscribers never stall the simulation: every session has a bounded
outbound event queue (drop-oldest on overflow) drained by its own writer
thread, while RPC replies and handshake frames are written directly.
"""

from __future__ import annotations

import errno
import itertools
import logging
import random
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

from websockets.exceptions import ConnectionClosed, InvalidHandshake
from websockets.sync.client import connect as ws_connect
from websockets.sync.server import Server, ServerConnection, serve as ws_serve

from . import wire
from .wire import (
    Abort, Call, CloseTransport, DeliverToRouter, Error, Event, Goodbye,
    Hello, Result, SendAbort, SendGoodbye, SendWelcome, SessionState,
    Subscribe, Subscribed, Unsubscribe, Unsubscribed, Welcome, WampMessage,
)

log = logging.getLogger(__name__)

EVENT_QUEUE_LIMIT = 256
DEFAULT_CALL_TIMEOUT = 5.0
DEFAULT_REALM = "simlive"

NO_SUCH_PROCEDURE = "wamp.error.no_such_procedure"
NO_SUCH_SUBSCRIPTION = "wamp.error.no_such_subscription"
INTERNAL_ERROR = "sim.error.internal"
CLOSE_SHUTDOWN = "wamp.close.system_shutdown"

Handler = Callable[[list[Any], dict[str, Any]], Any]


class EndpointError(Exception):
    pass


class PortInUse(EndpointError):
    pass


class BindFailure(EndpointError):
    pass


class DuplicateRegistration(EndpointError):
    pass


class ConnectFailed(EndpointError):
    pass


class CallTimeout(EndpointError):
    pass


class RemoteError(EndpointError):
    """An ERROR reply from the peer, carrying its error URI."""

    def __init__(self, uri: str, args: list | None = None, kwargs: dict | None = None):
        super().__init__(uri)
        self.uri = uri
        # BaseException.args is a tuple with its own meaning; keep payloads apart.
        self.payload_args = args or []
        self.payload_kwargs = kwargs or {}


class DomainError(Exception):
    """Raised by procedure handlers to reject a call with a specific URI."""

    def __init__(self, uri: str, message: str = ""):
        super().__init__(message or uri)
        self.uri = uri
        self.detail = message


@dataclass(frozen=True)
class ProcedureEntry:
    uri: str
    handler: Handler


def _normalise_result(value: Any) -> tuple[list[Any], dict[str, Any]]:
    if value is None:
        return [], {}
    if isinstance(value, tuple) and len(value) == 2:
        return list(value[0] or []), dict(value[1] or {})
    if isinstance(value, list):
        return value, {}
    return [value], {}


class _Session:
    """Server-side per-connection state plus the outbound event queue."""

    def __init__(self, conn: ServerConnection):
        self.conn = conn
        self.state = SessionState()
        self.subscriptions: dict[int, str] = {}   # subscription-id -> topic
        self.events: deque[str] = deque()
        self.events_dropped = 0
        self.closing = False
        self._cond = threading.Condition()
        self._writer = threading.Thread(target=self._drain, daemon=True)
        self._writer.start()

    @property
    def session_id(self) -> int | None:
        return self.state.session_id

    def send_now(self, msg: WampMessage) -> None:
        try:
            self.conn.send(wire.encode(msg))
        except (ConnectionClosed, OSError):
            pass

    def enqueue_event(self, frame: str) -> None:
        with self._cond:
            if self.closing:
                return
            if len(self.events) >= EVENT_QUEUE_LIMIT:
                self.events.popleft()
                self.events_dropped += 1
            self.events.append(frame)
            self._cond.notify()

    def _drain(self) -> None:
        while True:
            with self._cond:
                while not self.events and not self.closing:
                    self._cond.wait()
                if self.closing and not self.events:
                    return
                frame = self.events.popleft()
            try:
                self.conn.send(frame)
            except (ConnectionClosed, OSError):
                return

    def stop_writer(self) -> None:
        with self._cond:
            self.closing = True
            self._cond.notify_all()


class Endpoint:
    """WebSocket server hosting the router for one simulation instance."""

    def __init__(self, port: int, host: str = "127.0.0.1", id_seed: int | None = None):
        self._host = host
        self._requested_port = port
        self._id_rng = random.Random(id_seed)
        self._id_lock = threading.Lock()
        self._lock = threading.RLock()
        self._sessions: dict[int, _Session] = {}          # session-id -> session
        self._procedures: dict[str, Handler] = {}
        # (topic, session-id) -> subscription-id, plus the reverse fan-out map
        self._subs_by_key: dict[tuple[str, int], int] = {}
        self._topic_sessions: dict[str, dict[int, int]] = {}  # topic -> {session-id: sub-id}
        self._server: Server | None = None
        self._serve_thread: threading.Thread | None = None
        self.on_subscription_change: Callable[[str], None] | None = None

    # -- lifecycle -------------------------------------------------------------

    def start(self) -> "Endpoint":
        try:
            self._server = ws_serve(self._handle_connection, self._host,
                                    self._requested_port,
                                    subprotocols=[wire.WAMP_SUBPROTOCOL])
        except OSError as exc:
            if exc.errno in (errno.EADDRINUSE, errno.EACCES):
                raise PortInUse(f"port {self._requested_port} unavailable: {exc}") from exc
            raise BindFailure(str(exc)) from exc
        self._serve_thread = threading.Thread(target=self._server.serve_forever,
                                              name=f"endpoint:{self.port}", daemon=True)
        self._serve_thread.start()
        log.info("endpoint listening on ws://%s:%d", self._host, self.port)
        return self

    @property
    def port(self) -> int:
        if self._server is None:
            return self._requested_port
        return self._server.socket.getsockname()[1]

    @property
    def url(self) -> str:
        return f"ws://{self._host}:{self.port}"

    def shutdown(self) -> None:
        """Send GOODBYE to every open session and release the port."""
        with self._lock:
            sessions = list(self._sessions.values())
        for sess in sessions:
            sess.send_now(Goodbye({}, CLOSE_SHUTDOWN))
        for sess in sessions:
            sess.stop_writer()
            try:
                sess.conn.close()
            except OSError:
                pass
        if self._server is not None:
            self._server.shutdown()
            if self._serve_thread is not None:
                self._serve_thread.join(timeout=5)
            self._server = None

    # -- procedure table ---------------------------------------------------------

    def register(self, uri: str, handler: Handler) -> None:
        """Add a procedure; modules may register at any time after start."""
        with self._lock:
            if uri in self._procedures:
                raise DuplicateRegistration(uri)
            self._procedures[uri] = handler

    def register_all(self, procedures: list[ProcedureEntry]) -> None:
        for entry in procedures:
            self.register(entry.uri, entry.handler)

    # -- pub/sub -----------------------------------------------------------------

    def subscriber_count(self, topic: str) -> int:
        with self._lock:
            return len(self._topic_sessions.get(topic, ()))

    def publish(self, topic: str, args: list | None = None,
                kwargs: dict | None = None) -> int:
        """Fan one EVENT out to every subscriber; returns sessions reached."""
        with self._lock:
            per_session = list(self._topic_sessions.get(topic, {}).items())
            targets = [(self._sessions[sid], sub_id)
                       for sid, sub_id in per_session if sid in self._sessions]
        if not targets:
            return 0
        publication = self._new_id()
        delivered = 0
        for sess, sub_id in targets:
            frame = wire.encode(Event(sub_id, publication, {}, args, kwargs))
            sess.enqueue_event(frame)
            delivered += 1
        return delivered

    # -- internals ----------------------------------------------------------------

    def _new_id(self) -> int:
        with self._id_lock:
            return wire.new_id(self._id_rng)

    def _handle_connection(self, conn: ServerConnection) -> None:
        sess = _Session(conn)
        try:
            while True:
                try:
                    raw = conn.recv()
                except (ConnectionClosed, OSError):
                    return
                if isinstance(raw, bytes):
                    sess.send_now(Abort({"message": "binary frames not supported"},
                                        wire.PROTOCOL_VIOLATION))
                    return
                try:
                    msg = wire.decode(raw)
                except wire.WireError as exc:
                    log.debug("session %s: bad frame: %s", sess.session_id, exc)
                    sess.send_now(Abort({"message": str(exc)}, wire.PROTOCOL_VIOLATION))
                    return
                fresh = self._new_id() if sess.state.phase is wire.Phase.AWAITING_HELLO else None
                sess.state, actions = wire.session_step(sess.state, msg, fresh_id=fresh)
                for action in actions:
                    if isinstance(action, SendWelcome):
                        with self._lock:
                            self._sessions[action.session_id] = sess
                        sess.send_now(Welcome(action.session_id, action.details))
                    elif isinstance(action, SendAbort):
                        sess.send_now(Abort({}, action.reason))
                    elif isinstance(action, SendGoodbye):
                        sess.send_now(Goodbye({}, action.reason))
                    elif isinstance(action, DeliverToRouter):
                        self._route(sess, action.message)
                    elif isinstance(action, CloseTransport):
                        return
        finally:
            self._teardown(sess)
            sess.stop_writer()
            try:
                conn.close()
            except OSError:
                pass

    def _teardown(self, sess: _Session) -> None:
        sid = sess.session_id
        if sid is None:
            return
        changed: list[str] = []
        with self._lock:
            self._sessions.pop(sid, None)
            for sub_id, topic in list(sess.subscriptions.items()):
                self._subs_by_key.pop((topic, sid), None)
                by_session = self._topic_sessions.get(topic)
                if by_session is not None:
                    by_session.pop(sid, None)
                    if not by_session:
                        del self._topic_sessions[topic]
                changed.append(topic)
            sess.subscriptions.clear()
        for topic in changed:
            self._notify_subscription_change(topic)

    def _notify_subscription_change(self, topic: str) -> None:
        hook = self.on_subscription_change
        if hook is not None:
            try:
                hook(topic)
            except Exception:
                log.exception("subscription-change hook failed for %s", topic)

    def _route(self, sess: _Session, msg: WampMessage) -> None:
        sid = sess.session_id
        assert sid is not None
        if isinstance(msg, Subscribe):
            with self._lock:
                existing = self._subs_by_key.get((msg.topic, sid))
                if existing is not None:
                    sub_id = existing   # duplicate subscribe is idempotent
                else:
                    sub_id = self._new_id()
                    self._subs_by_key[(msg.topic, sid)] = sub_id
                    self._topic_sessions.setdefault(msg.topic, {})[sid] = sub_id
                    sess.subscriptions[sub_id] = msg.topic
            sess.send_now(Subscribed(msg.request, sub_id))
            if existing is None:
                self._notify_subscription_change(msg.topic)
        elif isinstance(msg, Unsubscribe):
            with self._lock:
                topic = sess.subscriptions.pop(msg.subscription, None)
                if topic is not None:
                    self._subs_by_key.pop((topic, sid), None)
                    by_session = self._topic_sessions.get(topic)
                    if by_session is not None:
                        by_session.pop(sid, None)
                        if not by_session:
                            del self._topic_sessions[topic]
            if topic is None:
                sess.send_now(Error(wire.CODES[Unsubscribe], msg.request, {},
                                    NO_SUCH_SUBSCRIPTION))
            else:
                sess.send_now(Unsubscribed(msg.request))
                self._notify_subscription_change(topic)
        elif isinstance(msg, Call):
            self._dispatch_call(sess, msg)

    def _dispatch_call(self, sess: _Session, call: Call) -> None:
        with self._lock:
            handler = self._procedures.get(call.procedure)
        code = wire.CODES[Call]
        if handler is None:
            sess.send_now(Error(code, call.request, {}, NO_SUCH_PROCEDURE))
            return
        try:
            value = handler(list(call.args or []), dict(call.kwargs or {}))
        except DomainError as exc:
            args = [exc.detail] if exc.detail else None
            sess.send_now(Error(code, call.request, {}, exc.uri, args))
            return
        except Exception:
            log.exception("handler for %s raised", call.procedure)
            sess.send_now(Error(code, call.request, {}, INTERNAL_ERROR))
            return
        args, kwargs = _normalise_result(value)
        sess.send_now(Result(call.request, {}, args or None, kwargs or None))


def start(port: int, procedures: list[ProcedureEntry] | None = None,
          host: str = "127.0.0.1", id_seed: int | None = None) -> Endpoint:
    """Bind and launch an endpoint, optionally pre-registering procedures."""
    ep = Endpoint(port, host, id_seed)
    if procedures:
        ep.register_all(procedures)
    return ep.start()


# --- client peer ---------------------------------------------------------------

@dataclass
class Subscription:
    id: int
    topic: str
    sink: Callable[[list[Any], dict[str, Any]], None]


@dataclass
class _Pending:
    done: threading.Event = field(default_factory=threading.Event)
    reply: WampMessage | None = None


class Client:
    """Synchronous caller/subscriber session against one endpoint.

    Drive it from a single thread; EVENT sinks run on the internal receive
    thread in arrival order.
    """

    def __init__(self, url: str, realm: str = DEFAULT_REALM,
                 connect_timeout: float = 5.0,
                 call_timeout: float = DEFAULT_CALL_TIMEOUT):
        self.url = url
        self.call_timeout = call_timeout
        self._requests = itertools.count(1)
        self._pending: dict[int, _Pending] = {}
        self._subs: dict[int, Subscription] = {}
        self._lock = threading.Lock()
        self._closed = threading.Event()
        self.session_id: int | None = None
        try:
            self._conn = ws_connect(url, subprotocols=[wire.WAMP_SUBPROTOCOL],
                                    open_timeout=connect_timeout)
        except (OSError, InvalidHandshake, TimeoutError) as exc:
            raise ConnectFailed(f"{url}: {exc}") from exc
        try:
            self._conn.send(wire.encode(Hello(realm, wire.CLIENT_ROLES)))
            welcome = wire.decode(self._conn.recv(timeout=connect_timeout))
        except (ConnectionClosed, OSError, TimeoutError, wire.WireError) as exc:
            self._conn.close()
            raise ConnectFailed(f"{url}: handshake failed: {exc}") from exc
        if not isinstance(welcome, Welcome):
            self._conn.close()
            raise ConnectFailed(f"{url}: expected WELCOME, got {type(welcome).__name__}")
        self.session_id = welcome.session
        self._recv_thread = threading.Thread(target=self._recv_loop, daemon=True)
        self._recv_thread.start()

    # -- wire pump ---------------------------------------------------------------

    def _recv_loop(self) -> None:
        while not self._closed.is_set():
            try:
                raw = self._conn.recv()
            except (ConnectionClosed, OSError):
                break
            try:
                msg = wire.decode(raw)
            except wire.WireError:
                log.warning("client: undecodable frame from %s", self.url)
                continue
            if isinstance(msg, (Result, Subscribed, Unsubscribed)):
                self._resolve(msg.request, msg)
            elif isinstance(msg, Error):
                self._resolve(msg.request, msg)
            elif isinstance(msg, Event):
                with self._lock:
                    sub = self._subs.get(msg.subscription)
                if sub is not None:
                    try:
                        sub.sink(list(msg.args or []), dict(msg.kwargs or {}))
                    except Exception:
                        log.exception("subscription sink for %s raised", sub.topic)
            elif isinstance(msg, Goodbye):
                try:
                    self._conn.send(wire.encode(Goodbye({}, wire.CLOSE_GOODBYE_AND_OUT)))
                except (ConnectionClosed, OSError):
                    pass
                break
            elif isinstance(msg, Abort):
                log.warning("client: session aborted by peer: %s", msg.reason)
                break
        self._closed.set()
        with self._lock:
            pending = list(self._pending.values())
        for p in pending:
            p.done.set()

    def _resolve(self, request: int, msg: WampMessage) -> None:
        with self._lock:
            pending = self._pending.pop(request, None)
        if pending is not None:
            pending.reply = msg
            pending.done.set()

    def _roundtrip(self, request: int, msg: WampMessage,
                   timeout: float | None) -> WampMessage:
        pending = _Pending()
        with self._lock:
            self._pending[request] = pending
        try:
            self._conn.send(wire.encode(msg))
        except (ConnectionClosed, OSError) as exc:
            with self._lock:
                self._pending.pop(request, None)
            raise ConnectFailed(f"send failed: {exc}") from exc
        if not pending.done.wait(timeout if timeout is not None else self.call_timeout):
            with self._lock:
                self._pending.pop(request, None)
            raise CallTimeout(f"no reply to request {request} within timeout")
        if pending.reply is None:
            raise ConnectFailed("connection closed while waiting for reply")
        if isinstance(pending.reply, Error):
            err = pending.reply
            raise RemoteError(err.error, err.args, err.kwargs)
        return pending.reply

    # -- public API -----------------------------------------------------------------

    def call(self, procedure: str, args: list | None = None, kwargs: dict | None = None,
             timeout: float | None = None) -> tuple[list[Any], dict[str, Any]]:
        """Invoke a remote procedure, blocking for its RESULT or ERROR."""
        request = next(self._requests)
        reply = self._roundtrip(request, Call(request, {}, procedure, args, kwargs),
                                timeout)
        assert isinstance(reply, Result)
        return list(reply.args or []), dict(reply.kwargs or {})

    def subscribe(self, topic: str,
                  sink: Callable[[list[Any], dict[str, Any]], None],
                  timeout: float | None = None) -> Subscription:
        request = next(self._requests)
        reply = self._roundtrip(request, Subscribe(request, {}, topic), timeout)
        assert isinstance(reply, Subscribed)
        sub = Subscription(reply.subscription, topic, sink)
        with self._lock:
            self._subs[sub.id] = sub
        return sub

    def unsubscribe(self, sub: Subscription, timeout: float | None = None) -> None:
        request = next(self._requests)
        self._roundtrip(request, Unsubscribe(request, sub.id), timeout)
        with self._lock:
            self._subs.pop(sub.id, None)

    def close(self) -> None:
        if not self._closed.is_set():
            try:
                self._conn.send(wire.encode(Goodbye({}, CLOSE_SHUTDOWN)))
            except (ConnectionClosed, OSError):
                pass
        self._closed.set()
        try:
            self._conn.close()
        except OSError:
            pass

    def __enter__(self) -> "Client":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def client_connect(url: str, **kwargs) -> Client:
    return Client(url, **kwargs)
