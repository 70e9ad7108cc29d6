"""Conversation history and the emotion-tagged reply grammar.

The LLM speaks a tiny line protocol: the first line of a reply may be
``EMOTION: <label>`` (case-insensitive), the rest is the reply text.
Everything here is an immutable value; appending to a transcript returns
a new transcript.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum


class EmotionLabel(str, Enum):
    """The seven emotions an agent reply can carry. Closed set."""

    NEUTRAL = "Neutral"
    HAPPY = "Happy"
    SAD = "Sad"
    ANGRY = "Angry"
    SURPRISED = "Surprised"
    AFRAID = "Afraid"
    DISGUSTED = "Disgusted"

    @classmethod
    def from_text(cls, text: str) -> "EmotionLabel | None":
        """Case-insensitive lookup; None for unknown labels."""
        return _EMOTIONS_BY_LOWER.get(text.strip().lower())


_EMOTIONS_BY_LOWER = {label.value.lower(): label for label in EmotionLabel}

EMOTION_HEADER_RE = re.compile(r"^\s*EMOTION:\s*([A-Za-z]+)\s*$", re.IGNORECASE)


class Speaker(str, Enum):
    USER = "user"
    AGENT = "agent"


class DialogueError(Exception):
    """Base for dialogue-level contract violations."""


class EmptyUtteranceError(DialogueError):
    pass


class EmptyReplyTextError(DialogueError):
    pass


class AlternationViolationError(DialogueError):
    pass


class TimestampRegressionError(DialogueError):
    pass


@dataclass(frozen=True)
class Turn:
    """One utterance in a transcript.

    Agent turns always carry an emotion; user turns never do.
    ``moderation_flagged`` is meaningful on user turns only.
    """

    speaker: Speaker
    text: str
    started_at_ms: int
    emotion: EmotionLabel | None = None
    moderation_flagged: bool = False

    def __post_init__(self) -> None:
        if self.speaker is Speaker.AGENT and self.emotion is None:
            raise ValueError("agent turns must carry an emotion")
        if self.speaker is Speaker.USER and self.emotion is not None:
            raise ValueError("user turns must not carry an emotion")
        if self.speaker is Speaker.AGENT and self.moderation_flagged:
            raise ValueError("moderation_flagged applies to user turns only")
        if self.started_at_ms < 0:
            raise ValueError("started_at_ms must be non-negative")


@dataclass(frozen=True)
class Transcript:
    """Ordered, strictly alternating conversation history."""

    session_id: str
    turns: tuple[Turn, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "turns", tuple(self.turns))

    def user_turn_indices(self) -> list[int]:
        return [i for i, t in enumerate(self.turns) if t.speaker is Speaker.USER]


@dataclass(frozen=True)
class AgentReply:
    """A parsed LLM reply: one of the seven emotions plus the spoken text."""

    emotion: EmotionLabel
    text: str
    parse_fallback: bool = False


@dataclass(frozen=True)
class ChatMessage:
    role: str  # "user" | "assistant"
    text: str


@dataclass(frozen=True)
class LlmRequest:
    system: str
    messages: tuple[ChatMessage, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))

    @property
    def last_user_text(self) -> str:
        for msg in reversed(self.messages):
            if msg.role == "user":
                return msg.text
        return ""


def build_llm_request(system_prompt: str, transcript: Transcript, user_utterance: str) -> LlmRequest:
    """Assemble the provider request: full history in order, then the new utterance.

    Raises EmptyUtteranceError when the utterance is blank. The transcript
    is never mutated or reordered.
    """
    if not user_utterance.strip():
        raise EmptyUtteranceError("user utterance is empty")
    messages = [
        ChatMessage(role="user" if t.speaker is Speaker.USER else "assistant", text=t.text)
        for t in transcript.turns
    ]
    messages.append(ChatMessage(role="user", text=user_utterance))
    return LlmRequest(system=system_prompt, messages=tuple(messages))


def parse_emotion_tagged_reply(raw: str) -> AgentReply:
    """Split a raw LLM reply into (emotion, text).

    First line matching ``EMOTION: <label>`` (any case) selects the label.
    Unknown label or missing header degrades to Neutral with
    ``parse_fallback=True``; a matched-but-unknown header line is still
    stripped from the text. A reply with no text left raises
    EmptyReplyTextError.
    """
    if not raw:
        raise EmptyReplyTextError("raw reply is empty")

    first_line, sep, rest = raw.partition("\n")
    match = EMOTION_HEADER_RE.match(first_line)
    if match:
        label = EmotionLabel.from_text(match.group(1))
        body = rest if sep else ""
        if label is not None:
            reply = AgentReply(emotion=label, text=body.strip(), parse_fallback=False)
        else:
            # Header present but label unknown: drop the header, keep the body.
            reply = AgentReply(emotion=EmotionLabel.NEUTRAL, text=body.strip(), parse_fallback=True)
    else:
        reply = AgentReply(emotion=EmotionLabel.NEUTRAL, text=raw.strip(), parse_fallback=True)

    if not reply.text:
        raise EmptyReplyTextError("reply text is empty after header removal")
    return reply


def append_turn(transcript: Transcript, turn: Turn) -> Transcript:
    """Return a new transcript with the turn appended.

    Enforces alternation (no two consecutive turns by the same speaker)
    and non-decreasing timestamps.
    """
    if transcript.turns:
        last = transcript.turns[-1]
        if last.speaker is turn.speaker:
            raise AlternationViolationError(
                f"consecutive {turn.speaker.value} turns are not allowed"
            )
        if turn.started_at_ms < last.started_at_ms:
            raise TimestampRegressionError(
                f"turn at {turn.started_at_ms}ms precedes previous turn at {last.started_at_ms}ms"
            )
    return replace(transcript, turns=transcript.turns + (turn,))
