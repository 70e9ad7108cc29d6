"""One conversation turn: utterance in, ordered reply stream out.

Pipeline: transcribe (audio input only) -> moderate -> strike accounting ->
LLM completion -> emotion header parse -> speech synthesis in parallel with
clip selection -> animation track build -> streamed output. The reply stream
is strictly ordered: UserTranscript, AgentReplyStart, audio/animation chunks
merged by start time, AgentReplyEnd.

Provider failures abort the turn and surface as an Error message; the
session stays open and the transcript is untouched. An abuse-limit strike
closes the session instead of producing a reply; the flagged user turn is
still recorded so the final transcript shows why the call ended.
"""

from __future__ import annotations

import asyncio
from typing import AsyncIterator, Sequence, Union

from ..dialogue import (
    EmptyReplyTextError,
    Speaker,
    Turn,
    build_llm_request,
    parse_emotion_tagged_reply,
)
from ..expression import (
    ClipLibrary,
    build_animation_track,
    select_clip,
)
from ..providers import base as providers
from ..providers.base import (
    AudioChunk,
    ProviderError,
    ProviderSet,
    ProviderTimeout,
    ProviderUnavailable,
    StreamCorrupt,
    SynthesisRequest,
    TTS_SAMPLE_RATE,
)
from ..session import CloseReason, ModerationOutcome, Session
from .protocol import (
    MAX_ANIMATION_FRAMES_PER_CHUNK,
    AgentAnimationChunk,
    AgentAudioChunk,
    AgentReplyEnd,
    AgentReplyStart,
    ErrorMessage,
    ServerMessage,
    SessionClosed,
    UserTranscript,
)

UtteranceInput = Union[str, Sequence[AudioChunk]]


class TurnInFlight(Exception):
    """A second turn was started while one is still streaming."""


class SessionNotOpen(Exception):
    pass


def _interleave_output(
    audio_chunks: Sequence[AudioChunk],
    frames: Sequence[tuple[float, ...]],
    fps: int,
) -> list[ServerMessage]:
    """Merge audio and animation chunks by media start time, audio first on ties."""
    entries: list[tuple[float, int, ServerMessage]] = []
    sample_pos = 0
    for chunk in audio_chunks:
        start_ms = sample_pos * 1000.0 / TTS_SAMPLE_RATE
        entries.append((start_ms, 0, AgentAudioChunk(chunk)))
        sample_pos += chunk.sample_count
    for first in range(0, len(frames), MAX_ANIMATION_FRAMES_PER_CHUNK):
        window = tuple(frames[first : first + MAX_ANIMATION_FRAMES_PER_CHUNK])
        start_ms = first * 1000.0 / fps
        entries.append((start_ms, 1, AgentAnimationChunk(first, window)))
    entries.sort(key=lambda e: (e[0], e[1]))
    return [message for _, _, message in entries]


async def run_turn(
    session: Session,
    provider_set: ProviderSet,
    library: ClipLibrary,
    utterance: UtteranceInput,
    rng_seed: int = 0,
) -> AsyncIterator[ServerMessage]:
    if not session.is_open:
        raise SessionNotOpen(f"session is {session.state.name}")
    if session.turn_in_flight:
        raise TurnInFlight("previous turn still streaming")
    session.turn_in_flight = True
    try:
        async for message in _run_turn_body(session, provider_set, library, utterance, rng_seed):
            yield message
    finally:
        session.turn_in_flight = False


async def _run_turn_body(
    session: Session,
    provider_set: ProviderSet,
    library: ClipLibrary,
    utterance: UtteranceInput,
    rng_seed: int,
) -> AsyncIterator[ServerMessage]:
    user_ts = session.elapsed_ms()

    try:
        if isinstance(utterance, str):
            text = utterance
        else:
            text = await providers.transcribe(
                provider_set.stt,
                list(utterance),
                session.spec.language,
                provider_set.budgets.stt,
            )
    except ProviderError as exc:
        yield _provider_error(exc)
        return

    if not text.strip():
        yield ErrorMessage("empty_utterance", "nothing to respond to")
        return

    yield UserTranscript(text)

    try:
        score = await providers.moderate(
            provider_set.moderation, text, provider_set.budgets.moderation
        )
    except ProviderError as exc:
        yield _provider_error(exc)
        return
    flagged = score >= session.policy.moderation_threshold

    outcome = session.record_moderation_result(flagged)
    if outcome is ModerationOutcome.CLOSE_DUE_ABUSE:
        session.append_turns(
            Turn(Speaker.USER, text, user_ts, moderation_flagged=True)
        )
        session.close(CloseReason.ABUSE_LIMIT)
        yield SessionClosed(CloseReason.ABUSE_LIMIT)
        return

    assert session.transcript is not None
    request = build_llm_request(session.system_prompt, session.transcript, text)
    try:
        raw_reply = await providers.complete(
            provider_set.llm, request, provider_set.budgets.llm
        )
        reply = parse_emotion_tagged_reply(raw_reply)

        synthesis = SynthesisRequest(
            text=reply.text,
            emotion=reply.emotion,
            voice_id=session.spec.voice_id,
            language=session.spec.language,
        )
        tts_task = asyncio.ensure_future(
            providers.synthesize(provider_set.tts, synthesis, provider_set.budgets.tts)
        )
        try:
            clip = select_clip(library, reply.emotion, rng_seed)
        except Exception:
            tts_task.cancel()
            raise
        audio_chunks, duration_ms = await tts_task
    except EmptyReplyTextError:
        yield ErrorMessage("empty_reply", "language model returned no reply text")
        return
    except ProviderError as exc:
        yield _provider_error(exc)
        return

    track = build_animation_track(clip, duration_ms)

    yield AgentReplyStart(reply.emotion, duration_ms)
    for message in _interleave_output(audio_chunks, track.frames, track.fps):
        yield message

    agent_ts = max(user_ts, session.elapsed_ms())
    session.append_turns(
        Turn(Speaker.USER, text, user_ts, moderation_flagged=flagged),
        Turn(Speaker.AGENT, reply.text, agent_ts, emotion=reply.emotion),
    )
    yield AgentReplyEnd()


def _provider_error(exc: ProviderError) -> ErrorMessage:
    if isinstance(exc, ProviderTimeout):
        code = "provider_timeout"
    elif isinstance(exc, StreamCorrupt):
        code = "stream_corrupt"
    elif isinstance(exc, ProviderUnavailable):
        code = "provider_unavailable"
    else:
        code = "provider_error"
    return ErrorMessage(code, str(exc))
