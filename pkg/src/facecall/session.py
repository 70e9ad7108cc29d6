"""Per-call lifecycle: timers, abuse strikes, and strict memorylessness.

A session is created fresh for every call, carries its own transcript, and
is discarded afterwards; nothing survives into the next session. The time
source is injected so timer behavior is testable with a simulated clock.

State machine: Created -> Active -> (Warned) -> Closed(reason). Closed is
terminal. The 8-minute warning fires exactly once; the 10-minute limit and
the abuse-strike limit both close the call.
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass
from enum import Enum
from typing import Protocol, Sequence

from .dialogue import Transcript, Turn, append_turn
from .persona import (
    DEFAULT_SUPPORTED_LANGUAGES,
    GuardrailPolicy,
    PersonaSpec,
    assemble_system_prompt,
    validate_persona,
)

WARN_AFTER_S = 480.0
CLOSE_AFTER_S = 600.0


class Clock(Protocol):
    def now(self) -> float: ...


class MonotonicClock:
    def now(self) -> float:
        return time.monotonic()


class SimulatedClock:
    """Manually advanced time source for deterministic timer tests."""

    def __init__(self, start: float = 0.0):
        self._now = start

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> None:
        if seconds < 0:
            raise ValueError("cannot advance time backwards")
        self._now += seconds


class SessionState(Enum):
    CREATED = "created"
    ACTIVE = "active"
    WARNED = "warned"
    CLOSED = "closed"


class CloseReason(str, Enum):
    USER_ENDED = "user_ended"
    TIME_LIMIT = "time_limit"
    ABUSE_LIMIT = "abuse_limit"
    TRANSPORT_LOST = "transport_lost"
    SERVER_SHUTDOWN = "server_shutdown"


class TickEvent(Enum):
    WARNING_DUE = "warning_due"
    CLOSE_DUE = "close_due"


class ModerationOutcome(Enum):
    CONTINUE = "continue"
    CLOSE_DUE_ABUSE = "close_due_abuse"


class SessionError(Exception):
    pass


class AlreadyClosed(SessionError):
    pass


class IllegalTransition(SessionError):
    pass


@dataclass(frozen=True)
class SessionClock:
    """Timer configuration; warn strictly precedes close."""

    warn_after_s: float = WARN_AFTER_S
    close_after_s: float = CLOSE_AFTER_S

    def __post_init__(self) -> None:
        if not 0 < self.warn_after_s < self.close_after_s:
            raise ValueError("warn_after must be positive and precede close_after")


@dataclass
class AbuseCounter:
    limit: int
    strikes: int = 0


class Session:
    """One live call. Owns its transcript; mutations are caller-serialized."""

    def __init__(
        self,
        spec: PersonaSpec,
        policy: GuardrailPolicy,
        goal: str,
        clock: Clock,
        timers: SessionClock = SessionClock(),
        session_id: str | None = None,
    ):
        self.session_id = session_id or uuid.uuid4().hex
        self.spec = spec
        self.policy = policy
        self.goal = goal
        self.clock = clock
        self.timers = timers
        self.system_prompt = assemble_system_prompt(spec, policy, goal)
        self.state = SessionState.CREATED
        self.close_reason: CloseReason | None = None
        self.counter = AbuseCounter(limit=policy.abuse_strike_limit)
        self.transcript: Transcript | None = Transcript(session_id=self.session_id)
        self.started_at: float | None = None
        self.turn_in_flight = False
        self._warning_emitted = False
        self._close_due_emitted = False

    # -- lifecycle -----------------------------------------------------------

    def activate(self, now: float | None = None) -> None:
        if self.state is not SessionState.CREATED:
            raise IllegalTransition(f"cannot activate from {self.state.name}")
        self.started_at = self.clock.now() if now is None else now
        self.state = SessionState.ACTIVE

    @property
    def is_open(self) -> bool:
        return self.state in (SessionState.ACTIVE, SessionState.WARNED)

    def elapsed_s(self, now: float | None = None) -> float:
        if self.started_at is None:
            return 0.0
        return (self.clock.now() if now is None else now) - self.started_at

    def elapsed_ms(self, now: float | None = None) -> int:
        return int(self.elapsed_s(now) * 1000)

    def remaining_ms(self, now: float | None = None) -> int:
        return max(0, int((self.timers.close_after_s - self.elapsed_s(now)) * 1000))

    def tick(self, now: float | None = None) -> list[TickEvent]:
        """Report due timer events, each at most once per session."""
        if not self.is_open:
            return []
        elapsed = self.elapsed_s(now)
        events: list[TickEvent] = []
        if elapsed >= self.timers.warn_after_s and not self._warning_emitted:
            self._warning_emitted = True
            if self.state is SessionState.ACTIVE:
                self.state = SessionState.WARNED
            events.append(TickEvent.WARNING_DUE)
        if elapsed >= self.timers.close_after_s and not self._close_due_emitted:
            self._close_due_emitted = True
            events.append(TickEvent.CLOSE_DUE)
        return events

    def record_moderation_result(self, flagged: bool) -> ModerationOutcome:
        """Count a strike for a flagged utterance; hitting the limit closes."""
        if not self.is_open:
            raise AlreadyClosed("session is not open")
        if not flagged:
            return ModerationOutcome.CONTINUE
        self.counter.strikes += 1
        if self.counter.strikes >= self.counter.limit:
            return ModerationOutcome.CLOSE_DUE_ABUSE
        return ModerationOutcome.CONTINUE

    def close(self, reason: CloseReason) -> Transcript:
        """Freeze and return the final transcript; Closed is terminal."""
        if self.state is SessionState.CLOSED:
            raise AlreadyClosed(f"session already closed ({self.close_reason})")
        if self.state is SessionState.CREATED:
            raise IllegalTransition("cannot close a session that never activated")
        self.state = SessionState.CLOSED
        self.close_reason = reason
        self.turn_in_flight = False
        assert self.transcript is not None
        return self.transcript

    def discard_transcript(self) -> None:
        """Drop the transcript after feedback delivery or transport loss."""
        self.transcript = None

    # -- transcript ----------------------------------------------------------

    def append_turns(self, *turns: Turn) -> None:
        if self.transcript is None:
            raise SessionError("transcript already discarded")
        updated = self.transcript
        for turn in turns:
            updated = append_turn(updated, turn)
        self.transcript = updated


def create_session(
    spec: PersonaSpec,
    policy: GuardrailPolicy,
    goal: str,
    clock: Clock,
    timers: SessionClock = SessionClock(),
    supported_languages: Sequence[str] = DEFAULT_SUPPORTED_LANGUAGES,
    session_id: str | None = None,
) -> Session:
    """Build a fresh Created session; rejects invalid persona specs.

    No data from any earlier session is reachable from the result.
    """
    validate_persona(spec, supported_languages)
    return Session(
        spec=spec,
        policy=policy,
        goal=goal,
        clock=clock,
        timers=timers,
        session_id=session_id,
    )
