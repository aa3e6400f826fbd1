"""
Publish/subscribe bus carrying the machine-visible values of a run.

Intrinsics publish their operands and result, the AES code publishes the
bytes and words it reads or writes, and phase markers split a run into
segments. Subscribers are context-local, so two runs in different threads
(or asyncio tasks) never see each other's events.
"""

from collections.abc import Callable, Iterator
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
import functools
from typing import Any, ParamSpec, TypeVar


@dataclass(frozen=True, slots=True)
class IntrinsicEvent:
    op: str
    operands: tuple[Any, ...]
    result: Any


@dataclass(frozen=True, slots=True)
class WordEvent:
    value: int
    width: int
    label: str


@dataclass(frozen=True, slots=True)
class PhaseEvent:
    segment: int


Event = IntrinsicEvent | WordEvent | PhaseEvent
Handler = Callable[[Event], None]


class EventBus:
    def __init__(self) -> None:
        self._subscribers: ContextVar[tuple[Handler, ...]] = ContextVar(
            f"hoacs-subscribers-{id(self)}", default=()
        )

    @property
    def subscribers(self) -> tuple[Handler, ...]:
        return self._subscribers.get()

    def subscribe(self, handler: Handler) -> Handler:
        self._subscribers.set(self._subscribers.get() + (handler,))
        return handler

    def publish(self, event: Event) -> None:
        for handler in self._subscribers.get():
            handler(event)

    def unsubscribe(self, handler: Handler) -> None:
        current = self._subscribers.get()
        if handler in current:
            self._subscribers.set(tuple(h for h in current if h != handler))

    @contextmanager
    def listening(self, handler: Handler) -> Iterator[Handler]:
        self.subscribe(handler)
        try:
            yield handler
        finally:
            self.unsubscribe(handler)

    @contextmanager
    def suspended(self) -> Iterator[None]:
        """Silence every subscriber; used while building compile-time tables."""
        token = self._subscribers.set(())
        try:
            yield
        finally:
            self._subscribers.reset(token)


event_bus = EventBus()

P = ParamSpec("P")
R = TypeVar("R")

_SKIPPED_KWARGS = frozenset({"checked"})


def intrinsic(op: str) -> Callable[[Callable[P, R]], Callable[P, R]]:
    """Publish operands and result of every call to the decorated function."""

    def decorate(fn: Callable[P, R]) -> Callable[P, R]:
        @functools.wraps(fn)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
            result = fn(*args, **kwargs)
            if event_bus.subscribers:
                operands = tuple(a for a in args if _is_operand(a)) + tuple(
                    v for k, v in kwargs.items() if k not in _SKIPPED_KWARGS and _is_operand(v)
                )
                event_bus.publish(IntrinsicEvent(op, operands, result))
            return result

        return wrapper

    return decorate


def _is_operand(value: object) -> bool:
    # Moduli sets and random sources are configuration, not register contents.
    return isinstance(value, int) or hasattr(value, "components") or hasattr(value, "digits")


def emit_word(value: int, width: int, label: str) -> None:
    if event_bus.subscribers:
        event_bus.publish(WordEvent(value, width, label))


def emit_phase(segment: int) -> None:
    if event_bus.subscribers:
        event_bus.publish(PhaseEvent(segment))
