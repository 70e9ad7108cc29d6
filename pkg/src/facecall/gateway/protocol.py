"""Browser-facing wire protocol.

Control messages are UTF-8 JSON objects with a "type" discriminator. Audio
travels in binary frames: a 1-byte direction tag, a 4-byte big-endian
sequence number, a 1-byte final flag, then raw PCM16 little-endian samples.
The tag fixes the sample rate (client utterance audio is 16 kHz, agent
audio 24 kHz), so the header stays at six bytes.

decode_message(encode_message(m)) == m for every message type.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Any, Callable, Union

from ..dialogue import EmotionLabel
from ..feedback import FeedbackReport
from ..persona import PersonaSpec
from ..providers.base import STT_SAMPLE_RATE, TTS_SAMPLE_RATE, AudioChunk
from ..session import CloseReason

TAG_UTTERANCE_AUDIO = 0xA1
TAG_AGENT_AUDIO = 0xA2
_BINARY_HEADER = struct.Struct(">BIB")

# Animation rides in JSON control messages, capped so no single frame balloons.
MAX_ANIMATION_FRAMES_PER_CHUNK = 30


class DecodeError(Exception):
    def __init__(self, offset: int, reason: str):
        super().__init__(f"at byte {offset}: {reason}")
        self.offset = offset
        self.reason = reason


# -- client -> server ---------------------------------------------------------


@dataclass(frozen=True)
class Hello:
    """Opens a session: inline persona or a server-known persona_id, plus goal."""

    goal: str = ""
    persona: PersonaSpec | None = None
    persona_id: str | None = None

    def __post_init__(self) -> None:
        if (self.persona is None) == (self.persona_id is None):
            raise ValueError("exactly one of persona or persona_id is required")


@dataclass(frozen=True)
class UtteranceText:
    text: str


@dataclass(frozen=True)
class UtteranceAudioChunk:
    chunk: AudioChunk

    def __post_init__(self) -> None:
        if self.chunk.sample_rate != STT_SAMPLE_RATE:
            raise ValueError("utterance audio must be 16 kHz")


@dataclass(frozen=True)
class UtteranceEnd:
    pass


@dataclass(frozen=True)
class EndCall:
    pass


@dataclass(frozen=True)
class RequestFeedback:
    pass


# -- server -> client ---------------------------------------------------------


@dataclass(frozen=True)
class SessionReady:
    session_id: str
    channels: tuple[str, ...]
    fps: int


@dataclass(frozen=True)
class UserTranscript:
    text: str


@dataclass(frozen=True)
class AgentReplyStart:
    emotion: EmotionLabel
    duration_ms: int


@dataclass(frozen=True)
class AgentAudioChunk:
    chunk: AudioChunk

    def __post_init__(self) -> None:
        if self.chunk.sample_rate != TTS_SAMPLE_RATE:
            raise ValueError("agent audio must be 24 kHz")


@dataclass(frozen=True)
class AgentAnimationChunk:
    first_frame_index: int
    frames: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class AgentReplyEnd:
    pass


@dataclass(frozen=True)
class TimeWarning:
    remaining_ms: int


@dataclass(frozen=True)
class SessionClosed:
    reason: CloseReason


@dataclass(frozen=True)
class FeedbackReportMessage:
    report: FeedbackReport


@dataclass(frozen=True)
class ErrorMessage:
    code: str
    message: str


ClientMessage = Union[
    Hello, UtteranceText, UtteranceAudioChunk, UtteranceEnd, EndCall, RequestFeedback
]
ServerMessage = Union[
    SessionReady,
    UserTranscript,
    AgentReplyStart,
    AgentAudioChunk,
    AgentAnimationChunk,
    AgentReplyEnd,
    TimeWarning,
    SessionClosed,
    FeedbackReportMessage,
    ErrorMessage,
]
Message = Union[ClientMessage, ServerMessage]


# -- encoding -----------------------------------------------------------------


def _json_bytes(payload: dict[str, Any]) -> bytes:
    return json.dumps(payload, separators=(",", ":")).encode("utf-8")


def _encode_audio(tag: int, chunk: AudioChunk) -> bytes:
    return _BINARY_HEADER.pack(tag, chunk.seq, 1 if chunk.final else 0) + chunk.samples


def encode_message(msg: Message) -> bytes:
    if isinstance(msg, UtteranceAudioChunk):
        return _encode_audio(TAG_UTTERANCE_AUDIO, msg.chunk)
    if isinstance(msg, AgentAudioChunk):
        return _encode_audio(TAG_AGENT_AUDIO, msg.chunk)

    payload: dict[str, Any]
    if isinstance(msg, Hello):
        payload = {"type": "hello", "goal": msg.goal}
        if msg.persona is not None:
            payload["persona"] = msg.persona.to_json_dict()
        else:
            payload["persona_id"] = msg.persona_id
    elif isinstance(msg, UtteranceText):
        payload = {"type": "utterance_text", "text": msg.text}
    elif isinstance(msg, UtteranceEnd):
        payload = {"type": "utterance_end"}
    elif isinstance(msg, EndCall):
        payload = {"type": "end_call"}
    elif isinstance(msg, RequestFeedback):
        payload = {"type": "request_feedback"}
    elif isinstance(msg, SessionReady):
        payload = {
            "type": "session_ready",
            "session_id": msg.session_id,
            "channels": list(msg.channels),
            "fps": msg.fps,
        }
    elif isinstance(msg, UserTranscript):
        payload = {"type": "user_transcript", "text": msg.text}
    elif isinstance(msg, AgentReplyStart):
        payload = {
            "type": "agent_reply_start",
            "emotion": msg.emotion.value,
            "duration_ms": msg.duration_ms,
        }
    elif isinstance(msg, AgentAnimationChunk):
        payload = {
            "type": "agent_animation_chunk",
            "first_frame_index": msg.first_frame_index,
            "frames": [list(frame) for frame in msg.frames],
        }
    elif isinstance(msg, AgentReplyEnd):
        payload = {"type": "agent_reply_end"}
    elif isinstance(msg, TimeWarning):
        payload = {"type": "time_warning", "remaining_ms": msg.remaining_ms}
    elif isinstance(msg, SessionClosed):
        payload = {"type": "session_closed", "reason": msg.reason.value}
    elif isinstance(msg, FeedbackReportMessage):
        payload = {"type": "feedback_report", "report": msg.report.to_json_dict()}
    elif isinstance(msg, ErrorMessage):
        payload = {"type": "error", "code": msg.code, "message": msg.message}
    else:
        raise TypeError(f"not a wire message: {type(msg).__name__}")
    return _json_bytes(payload)


# -- decoding -----------------------------------------------------------------


def _decode_hello(obj: dict[str, Any]) -> Hello:
    persona = obj.get("persona")
    return Hello(
        goal=str(obj.get("goal", "")),
        persona=PersonaSpec.from_json_dict(persona) if persona is not None else None,
        persona_id=obj.get("persona_id"),
    )


def _decode_animation(obj: dict[str, Any]) -> AgentAnimationChunk:
    frames = tuple(
        tuple(float(w) for w in frame) for frame in obj["frames"]
    )
    return AgentAnimationChunk(
        first_frame_index=int(obj["first_frame_index"]), frames=frames
    )


_JSON_DECODERS: dict[str, Callable[[dict[str, Any]], Message]] = {
    "hello": _decode_hello,
    "utterance_text": lambda o: UtteranceText(text=str(o["text"])),
    "utterance_end": lambda o: UtteranceEnd(),
    "end_call": lambda o: EndCall(),
    "request_feedback": lambda o: RequestFeedback(),
    "session_ready": lambda o: SessionReady(
        session_id=str(o["session_id"]),
        channels=tuple(str(c) for c in o["channels"]),
        fps=int(o["fps"]),
    ),
    "user_transcript": lambda o: UserTranscript(text=str(o["text"])),
    "agent_reply_start": lambda o: AgentReplyStart(
        emotion=EmotionLabel(o["emotion"]), duration_ms=int(o["duration_ms"])
    ),
    "agent_animation_chunk": _decode_animation,
    "agent_reply_end": lambda o: AgentReplyEnd(),
    "time_warning": lambda o: TimeWarning(remaining_ms=int(o["remaining_ms"])),
    "session_closed": lambda o: SessionClosed(reason=CloseReason(o["reason"])),
    "feedback_report": lambda o: FeedbackReportMessage(
        report=FeedbackReport.from_json_dict(o["report"])
    ),
    "error": lambda o: ErrorMessage(code=str(o["code"]), message=str(o["message"])),
}


def _decode_json(data: bytes) -> Message:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DecodeError(0, f"invalid JSON frame: {exc}") from exc
    if not isinstance(obj, dict):
        raise DecodeError(0, "JSON frame is not an object")
    kind = obj.get("type")
    decoder = _JSON_DECODERS.get(kind)
    if decoder is None:
        raise DecodeError(0, f"unknown message type {kind!r}")
    try:
        return decoder(obj)
    except DecodeError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DecodeError(0, f"bad {kind} payload: {exc}") from exc


def _decode_audio(data: bytes) -> Message:
    if len(data) < _BINARY_HEADER.size:
        raise DecodeError(len(data), "truncated binary header")
    tag, seq, final = _BINARY_HEADER.unpack_from(data)
    samples = data[_BINARY_HEADER.size :]
    if len(samples) % 2:
        raise DecodeError(len(data), "odd PCM16 payload length")
    if final not in (0, 1):
        raise DecodeError(5, f"final flag must be 0 or 1, got {final}")
    try:
        if tag == TAG_UTTERANCE_AUDIO:
            return UtteranceAudioChunk(
                AudioChunk(seq, samples, STT_SAMPLE_RATE, final=bool(final))
            )
        return AgentAudioChunk(
            AudioChunk(seq, samples, TTS_SAMPLE_RATE, final=bool(final))
        )
    except ValueError as exc:
        raise DecodeError(0, str(exc)) from exc


def decode_message(data: bytes) -> Message:
    if isinstance(data, str):
        data = data.encode("utf-8")
    if not data:
        raise DecodeError(0, "empty frame")
    first = data[0]
    if first == 0x7B:  # '{'
        return _decode_json(data)
    if first in (TAG_UTTERANCE_AUDIO, TAG_AGENT_AUDIO):
        return _decode_audio(data)
    raise DecodeError(0, f"unknown frame tag 0x{first:02x}")


def wire_payload(msg: Message) -> "str | bytes":
    """Transport form: text for JSON control messages, bytes for audio."""
    raw = encode_message(msg)
    if raw[:1] == b"{":
        return raw.decode("utf-8")
    return raw
