"""In-process publish/subscribe blackboard.

Delivery is synchronous by default: ``publish`` returns after every matching
handler has run, which keeps end-to-end runs deterministic.  The queued mode
hands delivery to a worker thread but keeps per-topic FIFO order.

Topic registry used by the pipeline:

==============================  ==============================================
``perception/state``            extracted facts of the current world
``grounding/goal``              goal derived from an utterance or demo frames
``planner/plan``                plan listing (or ``no-plan``)
``runtime/trace``               one event per executed skill, then the terminal
``runtime/assistance-request``  runtime cannot continue without a human
``human/assistance-response``   scripted human fix applied by the runtime
``bus/errors``                  handler and sink failures
==============================  ==============================================
"""

from __future__ import annotations

import json
import queue
import threading
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Callable, TextIO

from .errors import BusClosed, BusError, InvalidPattern

ERRORS_TOPIC = "bus/errors"
MAX_DEPTH = 16


@dataclass(frozen=True)
class Message:
    topic: str
    seq: int
    payload: Any
    origin: str = ""

    def to_line(self) -> str:
        doc = {"payload": self.payload, "seq": self.seq, "topic": self.topic}
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


Handler = Callable[[Message], None]


def check_topic(topic: str) -> str:
    if not topic or any(seg == "" for seg in topic.split("/")):
        raise BusError(f"invalid topic {topic!r}")
    return topic


def check_pattern(pattern: str) -> str:
    if not pattern:
        raise InvalidPattern("empty pattern")
    segments = pattern.split("/")
    if any(seg == "" for seg in segments):
        raise InvalidPattern(f"empty segment in {pattern!r}")
    if any("*" in seg for seg in segments[:-1]) or ("*" in segments[-1] and segments[-1] != "*"):
        raise InvalidPattern(f"wildcard allowed only as the whole final segment: {pattern!r}")
    return pattern


def topic_matches(pattern: str, topic: str) -> bool:
    if pattern.endswith("*"):
        prefix = pattern[:-1]
        return topic.startswith(prefix) and len(topic) > len(prefix)
    return pattern == topic


@dataclass(eq=False)
class Subscription:
    pattern: str
    handler: Handler
    agent: str = ""
    active: bool = True


class Blackboard:
    def __init__(self, asynchronous: bool = False):
        self._subs: list[Subscription] = []
        self._seq: dict[str, int] = defaultdict(int)
        self._depth: dict[str, int] = defaultdict(int)
        self._lock = threading.RLock()
        self._closed = False
        self._queue: queue.Queue | None = None
        self._worker: threading.Thread | None = None
        if asynchronous:
            self._queue = queue.Queue()
            self._worker = threading.Thread(target=self._drain, daemon=True)
            self._worker.start()

    @property
    def closed(self) -> bool:
        return self._closed

    def subscribe(self, pattern: str, handler: Handler, agent: str = "") -> Subscription:
        check_pattern(pattern)
        sub = Subscription(pattern, handler, agent)
        with self._lock:
            self._subs.append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            sub.active = False
            if sub in self._subs:
                self._subs.remove(sub)

    def publish(self, topic: str, payload: Any = None, origin: str = "") -> int:
        check_topic(topic)
        with self._lock:
            if self._closed:
                raise BusClosed(f"cannot publish {topic}: bus closed")
            self._seq[topic] += 1
            msg = Message(topic, self._seq[topic], payload, origin)
            if self._queue is not None:
                self._queue.put(msg)
            else:
                self._deliver(msg)
            return msg.seq

    def _deliver(self, msg: Message) -> None:
        if self._depth[msg.topic] >= MAX_DEPTH:
            raise BusError(f"re-entrant publish depth exceeded on {msg.topic}")
        self._depth[msg.topic] += 1
        try:
            for sub in list(self._subs):
                if not sub.active or not topic_matches(sub.pattern, msg.topic):
                    continue
                try:
                    sub.handler(msg)
                except Exception as exc:  # handler isolation
                    if msg.topic != ERRORS_TOPIC:
                        self._report(msg, sub, exc)
        finally:
            self._depth[msg.topic] -= 1

    def _report(self, msg: Message, sub: Subscription, exc: Exception) -> None:
        self._seq[ERRORS_TOPIC] += 1
        notice = {
            "agent": sub.agent,
            "error": f"{type(exc).__name__}: {exc}",
            "pattern": sub.pattern,
            "seq": msg.seq,
            "topic": msg.topic,
        }
        self._deliver(Message(ERRORS_TOPIC, self._seq[ERRORS_TOPIC], notice, "bus"))

    def _drain(self) -> None:
        assert self._queue is not None
        while True:
            msg = self._queue.get()
            try:
                if msg is None:
                    return
                with self._lock:
                    self._deliver(msg)
            finally:
                self._queue.task_done()

    def flush(self) -> None:
        if self._queue is not None:
            self._queue.join()

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
        if self._queue is not None:
            self._queue.put(None)
            self._worker.join()


def bridge_export(bus: Blackboard, pattern: str, sink: TextIO) -> Subscription:
    """Serialize matching messages one per line; a failing sink unsubscribes
    itself and leaves a notice on ``bus/errors``."""
    sub: Subscription | None = None

    def forward(msg: Message) -> None:
        try:
            sink.write(msg.to_line() + "\n")
        except (OSError, ValueError) as exc:
            bus.unsubscribe(sub)
            bus.publish(ERRORS_TOPIC, {"error": f"sink failed: {exc}", "pattern": pattern, "topic": msg.topic}, "bridge")

    sub = bus.subscribe(pattern, forward, agent="bridge")
    return sub


class Recorder:
    """Collects every message matching ``pattern``; handy for tests and demos."""

    def __init__(self, bus: Blackboard, pattern: str = "*"):
        self.messages: list[Message] = []
        self.subscription = bus.subscribe(pattern, self.messages.append, agent="recorder")

    def topics(self) -> list[str]:
        return [m.topic for m in self.messages]
