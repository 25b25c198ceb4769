"""WAMP basic-profile subset spoken between simulations and frontends.

Twelve message kinds are supported, serialised as JSON arrays over
WebSocket text frames (subprotocol "wamp.2.json"):

    code  message       layout
       1  HELLO         [1, realm, details]
       2  WELCOME       [2, session, details]
       3  ABORT         [3, details, reason]
       6  GOODBYE       [6, details, reason]
       8  ERROR         [8, request_type, request, details, error, args?, kwargs?]
      32  SUBSCRIBE     [32, request, options, topic]
      33  SUBSCRIBED    [33, request, subscription]
      34  UNSUBSCRIBE   [34, request, subscription]
      35  UNSUBSCRIBED  [35, request]
      36  EVENT         [36, subscription, publication, details, args?, kwargs?]
      48  CALL          [48, request, options, procedure, args?, kwargs?]
      50  RESULT        [50, request, details, args?, kwargs?]

Ids are integers in [1, 2**53].  URIs are nonempty dot-joined lowercase
components (``[a-z0-9_]+(\\.[a-z0-9_]+)*``).  Trailing argument fields are
omitted when absent, never emitted as null; a frame is capped at 1 MiB.

Everything here is pure and value-level: no I/O, no shared state.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Union

MAX_FRAME_BYTES = 1 << 20
MIN_ID = 1
MAX_ID = 1 << 53

_URI_RE = re.compile(r"[a-z0-9_]+(\.[a-z0-9_]+)*\Z")

WAMP_SUBPROTOCOL = "wamp.2.json"

# Minimal role maps; peers' announced roles are accepted but not inspected.
ROUTER_ROLES: dict[str, Any] = {"roles": {"broker": {}, "dealer": {}}}
CLIENT_ROLES: dict[str, Any] = {"roles": {"subscriber": {}, "caller": {}}}


class WireError(Exception):
    """Base class for wire-level failures."""


class InvalidMessage(WireError):
    """A message violates its own invariants (a local caller bug)."""


class MalformedFrame(WireError):
    """Frame is not a JSON array of the expected shape."""


class UnsupportedMessageType(WireError):
    """Integer message code outside the supported twelve-message subset."""

    def __init__(self, code: int):
        super().__init__(f"unsupported message code {code}")
        self.code = code


def _is_id(value: Any) -> bool:
    return type(value) is int and MIN_ID <= value <= MAX_ID


def _is_uri(value: Any) -> bool:
    return isinstance(value, str) and bool(_URI_RE.match(value))


@dataclass(frozen=True)
class _ArgsMixin:
    """Shared normalisation for the four messages carrying payload args.

    Empty trailing collections are canonicalised to "absent" so that
    encode/decode round-trips are stable: kwargs == {} becomes None, and
    args == [] becomes None unless kwargs survive (the wire then needs the
    positional placeholder).
    """

    def __post_init__(self):
        if self.kwargs is not None and len(self.kwargs) == 0:
            object.__setattr__(self, "kwargs", None)
        if self.kwargs is None:
            if self.args is not None and len(self.args) == 0:
                object.__setattr__(self, "args", None)
        elif self.args is None:
            object.__setattr__(self, "args", [])


@dataclass(frozen=True)
class Hello:
    realm: str
    details: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Welcome:
    session: int
    details: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Abort:
    details: dict[str, Any]
    reason: str


@dataclass(frozen=True)
class Goodbye:
    details: dict[str, Any]
    reason: str


@dataclass(frozen=True)
class Error(_ArgsMixin):
    request_type: int
    request: int
    details: dict[str, Any]
    error: str
    args: list[Any] | None = None
    kwargs: dict[str, Any] | None = None


@dataclass(frozen=True)
class Subscribe:
    request: int
    options: dict[str, Any]
    topic: str


@dataclass(frozen=True)
class Subscribed:
    request: int
    subscription: int


@dataclass(frozen=True)
class Unsubscribe:
    request: int
    subscription: int


@dataclass(frozen=True)
class Unsubscribed:
    request: int


@dataclass(frozen=True)
class Event(_ArgsMixin):
    subscription: int
    publication: int
    details: dict[str, Any] = field(default_factory=dict)
    args: list[Any] | None = None
    kwargs: dict[str, Any] | None = None


@dataclass(frozen=True)
class Call(_ArgsMixin):
    request: int
    options: dict[str, Any]
    procedure: str
    args: list[Any] | None = None
    kwargs: dict[str, Any] | None = None


@dataclass(frozen=True)
class Result(_ArgsMixin):
    request: int
    details: dict[str, Any] = field(default_factory=dict)
    args: list[Any] | None = None
    kwargs: dict[str, Any] | None = None


WampMessage = Union[
    Hello, Welcome, Abort, Goodbye, Error,
    Subscribe, Subscribed, Unsubscribe, Unsubscribed,
    Event, Call, Result,
]

CODES: dict[type, int] = {
    Hello: 1, Welcome: 2, Abort: 3, Goodbye: 6, Error: 8,
    Subscribe: 32, Subscribed: 33, Unsubscribe: 34, Unsubscribed: 35,
    Event: 36, Call: 48, Result: 50,
}
_TYPES_BY_CODE = {code: cls for cls, code in CODES.items()}


def _check(cond: bool, what: str) -> None:
    if not cond:
        raise InvalidMessage(what)


def _check_map(value: Any, what: str) -> None:
    _check(isinstance(value, dict) and all(isinstance(k, str) for k in value), what)


def _validate(msg: WampMessage) -> None:
    if isinstance(msg, Hello):
        _check(_is_uri(msg.realm), "realm must be a URI")
        _check_map(msg.details, "details must be a string-keyed map")
    elif isinstance(msg, Welcome):
        _check(_is_id(msg.session), "session id out of range")
        _check_map(msg.details, "details must be a string-keyed map")
    elif isinstance(msg, (Abort, Goodbye)):
        _check_map(msg.details, "details must be a string-keyed map")
        _check(_is_uri(msg.reason), "reason must be a URI")
    elif isinstance(msg, Error):
        _check(type(msg.request_type) is int and msg.request_type in _TYPES_BY_CODE,
               "request_type must be a supported message code")
        _check(_is_id(msg.request), "request id out of range")
        _check_map(msg.details, "details must be a string-keyed map")
        _check(_is_uri(msg.error), "error must be a URI")
    elif isinstance(msg, Subscribe):
        _check(_is_id(msg.request), "request id out of range")
        _check_map(msg.options, "options must be a string-keyed map")
        _check(_is_uri(msg.topic), "topic must be a URI")
    elif isinstance(msg, (Subscribed, Unsubscribe)):
        _check(_is_id(msg.request), "request id out of range")
        _check(_is_id(msg.subscription), "subscription id out of range")
    elif isinstance(msg, Unsubscribed):
        _check(_is_id(msg.request), "request id out of range")
    elif isinstance(msg, Event):
        _check(_is_id(msg.subscription), "subscription id out of range")
        _check(_is_id(msg.publication), "publication id out of range")
        _check_map(msg.details, "details must be a string-keyed map")
    elif isinstance(msg, Call):
        _check(_is_id(msg.request), "request id out of range")
        _check_map(msg.options, "options must be a string-keyed map")
        _check(_is_uri(msg.procedure), "procedure must be a URI")
    elif isinstance(msg, Result):
        _check(_is_id(msg.request), "request id out of range")
        _check_map(msg.details, "details must be a string-keyed map")
    else:
        raise InvalidMessage(f"not a wire message: {type(msg).__name__}")

    args = getattr(msg, "args", None)
    kwargs = getattr(msg, "kwargs", None)
    if args is not None:
        _check(isinstance(args, list), "args must be a list")
    if kwargs is not None:
        _check_map(kwargs, "kwargs must be a string-keyed map")


def _payload_tail(msg: Any) -> list[Any]:
    # kwargs require the positional placeholder; bare empty args are omitted.
    if msg.kwargs is not None:
        return [msg.args if msg.args is not None else [], msg.kwargs]
    if msg.args is not None and len(msg.args) > 0:
        return [msg.args]
    return []


def encode(msg: WampMessage) -> str:
    """Serialise a message to its canonical single-frame JSON text."""
    _validate(msg)
    code = CODES[type(msg)]
    if isinstance(msg, Hello):
        fields: list[Any] = [msg.realm, msg.details]
    elif isinstance(msg, Welcome):
        fields = [msg.session, msg.details]
    elif isinstance(msg, (Abort, Goodbye)):
        fields = [msg.details, msg.reason]
    elif isinstance(msg, Error):
        fields = [msg.request_type, msg.request, msg.details, msg.error] + _payload_tail(msg)
    elif isinstance(msg, Subscribe):
        fields = [msg.request, msg.options, msg.topic]
    elif isinstance(msg, Subscribed):
        fields = [msg.request, msg.subscription]
    elif isinstance(msg, Unsubscribe):
        fields = [msg.request, msg.subscription]
    elif isinstance(msg, Unsubscribed):
        fields = [msg.request]
    elif isinstance(msg, Event):
        fields = [msg.subscription, msg.publication, msg.details] + _payload_tail(msg)
    elif isinstance(msg, Call):
        fields = [msg.request, msg.options, msg.procedure] + _payload_tail(msg)
    else:  # Result
        fields = [msg.request, msg.details] + _payload_tail(msg)
    try:
        return json.dumps([code] + fields, separators=(",", ":"), ensure_ascii=False,
                          allow_nan=False)
    except (TypeError, ValueError) as exc:
        raise InvalidMessage(f"payload not JSON-serialisable: {exc}") from exc


def _need_id(value: Any, what: str) -> int:
    if not _is_id(value):
        raise MalformedFrame(f"{what} must be an integer in [1, 2**53]")
    return value


def _need_uri(value: Any, what: str) -> str:
    if not _is_uri(value):
        raise MalformedFrame(f"{what} must be a URI")
    return value


def _need_map(value: Any, what: str) -> dict[str, Any]:
    if not isinstance(value, dict):
        raise MalformedFrame(f"{what} must be a map")
    return value


def _need_arity(frame: list[Any], low: int, high: int, name: str) -> None:
    if not (low <= len(frame) <= high):
        raise MalformedFrame(f"{name} frame has wrong arity {len(frame)}")


def _decode_tail(frame: list[Any], at: int) -> tuple[list[Any] | None, dict[str, Any] | None]:
    args: list[Any] | None = None
    kwargs: dict[str, Any] | None = None
    if len(frame) > at:
        if not isinstance(frame[at], list):
            raise MalformedFrame("args must be a list")
        args = frame[at]
    if len(frame) > at + 1:
        kwargs = _need_map(frame[at + 1], "kwargs")
    return args, kwargs


def decode(text: str | bytes) -> WampMessage:
    """Parse one WebSocket text-frame payload into a message.

    Raises MalformedFrame for anything that is not a well-formed frame of a
    supported layout, and UnsupportedMessageType for valid-looking frames
    whose integer code falls outside the subset.  Never raises anything
    else, whatever the input.
    """
    if isinstance(text, bytes):
        if len(text) > MAX_FRAME_BYTES:
            raise MalformedFrame("frame exceeds 1 MiB")
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedFrame("frame is not UTF-8") from exc
    elif len(text.encode("utf-8", errors="replace")) > MAX_FRAME_BYTES:
        raise MalformedFrame("frame exceeds 1 MiB")
    try:
        frame = json.loads(text)
    except (json.JSONDecodeError, RecursionError) as exc:
        raise MalformedFrame(f"not JSON: {exc}") from exc
    if not isinstance(frame, list) or not frame:
        raise MalformedFrame("frame must be a nonempty JSON array")
    code = frame[0]
    if type(code) is not int:
        raise MalformedFrame("message code must be an integer")
    cls = _TYPES_BY_CODE.get(code)
    if cls is None:
        raise UnsupportedMessageType(code)

    if cls is Hello:
        _need_arity(frame, 3, 3, "HELLO")
        return Hello(_need_uri(frame[1], "realm"), _need_map(frame[2], "details"))
    if cls is Welcome:
        _need_arity(frame, 3, 3, "WELCOME")
        return Welcome(_need_id(frame[1], "session"), _need_map(frame[2], "details"))
    if cls is Abort:
        _need_arity(frame, 3, 3, "ABORT")
        return Abort(_need_map(frame[1], "details"), _need_uri(frame[2], "reason"))
    if cls is Goodbye:
        _need_arity(frame, 3, 3, "GOODBYE")
        return Goodbye(_need_map(frame[1], "details"), _need_uri(frame[2], "reason"))
    if cls is Error:
        _need_arity(frame, 5, 7, "ERROR")
        if type(frame[1]) is not int or frame[1] not in _TYPES_BY_CODE:
            raise MalformedFrame("ERROR request_type must be a supported code")
        args, kwargs = _decode_tail(frame, 5)
        return Error(frame[1], _need_id(frame[2], "request"),
                     _need_map(frame[3], "details"), _need_uri(frame[4], "error"),
                     args, kwargs)
    if cls is Subscribe:
        _need_arity(frame, 4, 4, "SUBSCRIBE")
        return Subscribe(_need_id(frame[1], "request"), _need_map(frame[2], "options"),
                         _need_uri(frame[3], "topic"))
    if cls is Subscribed:
        _need_arity(frame, 3, 3, "SUBSCRIBED")
        return Subscribed(_need_id(frame[1], "request"), _need_id(frame[2], "subscription"))
    if cls is Unsubscribe:
        _need_arity(frame, 3, 3, "UNSUBSCRIBE")
        return Unsubscribe(_need_id(frame[1], "request"), _need_id(frame[2], "subscription"))
    if cls is Unsubscribed:
        _need_arity(frame, 2, 2, "UNSUBSCRIBED")
        return Unsubscribed(_need_id(frame[1], "request"))
    if cls is Event:
        _need_arity(frame, 4, 6, "EVENT")
        args, kwargs = _decode_tail(frame, 4)
        return Event(_need_id(frame[1], "subscription"), _need_id(frame[2], "publication"),
                     _need_map(frame[3], "details"), args, kwargs)
    if cls is Call:
        _need_arity(frame, 4, 6, "CALL")
        args, kwargs = _decode_tail(frame, 4)
        return Call(_need_id(frame[1], "request"), _need_map(frame[2], "options"),
                    _need_uri(frame[3], "procedure"), args, kwargs)
    # Result
    _need_arity(frame, 3, 5, "RESULT")
    args, kwargs = _decode_tail(frame, 3)
    return Result(_need_id(frame[1], "request"), _need_map(frame[2], "details"),
                  args, kwargs)


def new_id(rng: random.Random) -> int:
    """Draw a fresh WAMP id, uniform over [1, 2**53]."""
    return rng.randint(MIN_ID, MAX_ID)


# --- router-side session lifecycle ------------------------------------------

class Phase(Enum):
    AWAITING_HELLO = "awaiting_hello"
    ESTABLISHED = "established"
    CLOSING = "closing"
    CLOSED = "closed"


@dataclass(frozen=True)
class SessionState:
    phase: Phase = Phase.AWAITING_HELLO
    session_id: int | None = None
    realm: str | None = None


@dataclass(frozen=True)
class SendWelcome:
    session_id: int
    details: dict[str, Any]


@dataclass(frozen=True)
class SendAbort:
    reason: str


@dataclass(frozen=True)
class SendGoodbye:
    reason: str


@dataclass(frozen=True)
class DeliverToRouter:
    message: WampMessage


@dataclass(frozen=True)
class CloseTransport:
    pass


Action = Union[SendWelcome, SendAbort, SendGoodbye, DeliverToRouter, CloseTransport]

PROTOCOL_VIOLATION = "wamp.error.protocol_violation"
CLOSE_GOODBYE_AND_OUT = "wamp.close.goodbye_and_out"

_VIOLATION = (SessionState(Phase.CLOSED),
              [SendAbort(PROTOCOL_VIOLATION), CloseTransport()])


def session_step(state: SessionState, incoming: WampMessage,
                 fresh_id: int | None = None) -> tuple[SessionState, list[Action]]:
    """Advance the router-side handshake/teardown machine by one message.

    Pure: the same (state, message, fresh_id) always yields the same
    transition.  ``fresh_id`` is consumed only by the HELLO transition and
    must be supplied by the caller (drawn via new_id) while awaiting one.
    """
    if state.phase is Phase.CLOSED:
        raise ValueError("session already closed")

    if state.phase is Phase.AWAITING_HELLO:
        if isinstance(incoming, Hello):
            if fresh_id is None:
                raise ValueError("fresh_id required for the HELLO transition")
            established = SessionState(Phase.ESTABLISHED, fresh_id, incoming.realm)
            return established, [SendWelcome(fresh_id, ROUTER_ROLES)]
        if isinstance(incoming, Abort):
            return SessionState(Phase.CLOSED), [CloseTransport()]
        return _VIOLATION

    if state.phase is Phase.ESTABLISHED:
        if isinstance(incoming, (Subscribe, Unsubscribe, Call)):
            return state, [DeliverToRouter(incoming)]
        if isinstance(incoming, Goodbye):
            closing = SessionState(Phase.CLOSING, state.session_id, state.realm)
            return closing, [SendGoodbye(CLOSE_GOODBYE_AND_OUT), CloseTransport()]
        if isinstance(incoming, Abort):
            return SessionState(Phase.CLOSED, state.session_id, state.realm), [CloseTransport()]
        return _VIOLATION

    # CLOSING: only the GOODBYE reply matters; anything else is dropped.
    if isinstance(incoming, Goodbye):
        return SessionState(Phase.CLOSED, state.session_id, state.realm), [CloseTransport()]
    return state, []
