"""Provider contracts for STT, LLM, TTS, and moderation.

Every external capability sits behind one of four small async contracts so
mocks and real-service adapters are indistinguishable to callers. The
module-level ops (transcribe/complete/synthesize/moderate) add the shared
plumbing: input validation, timeout budgets, and output checks.
"""

from __future__ import annotations

import asyncio
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

from ..dialogue import EmotionLabel, LlmRequest

# One canonical audio format per direction keeps the wire protocol bit-exact;
# resampling is an adapter concern.
STT_SAMPLE_RATE = 16_000
TTS_SAMPLE_RATE = 24_000
BYTES_PER_SAMPLE = 2  # PCM 16-bit signed, mono, little-endian


class ProviderError(Exception):
    """Base for provider-call failures. Ends the turn, not the session."""


class ProviderUnavailable(ProviderError):
    pass


class ProviderTimeout(ProviderError):
    pass


class StreamCorrupt(ProviderError):
    def __init__(self, message: str, seq: int | None = None):
        super().__init__(message)
        self.seq = seq


@dataclass(frozen=True)
class AudioChunk:
    """A run of PCM16 mono samples. ``samples`` is raw little-endian bytes."""

    seq: int
    samples: bytes
    sample_rate: int
    final: bool = False

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise ValueError("seq must be non-negative")
        if len(self.samples) % BYTES_PER_SAMPLE != 0:
            raise ValueError("samples must be whole 16-bit frames")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    @property
    def sample_count(self) -> int:
        return len(self.samples) // BYTES_PER_SAMPLE


@dataclass(frozen=True)
class SynthesisRequest:
    text: str
    emotion: EmotionLabel
    voice_id: str = "default"
    language: str = "en-US"

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("synthesis text must be non-empty")


@runtime_checkable
class SttProvider(Protocol):
    async def transcribe(self, chunks: Sequence[AudioChunk], language: str) -> str: ...


@runtime_checkable
class LlmProvider(Protocol):
    async def complete(self, request: LlmRequest) -> str: ...


@runtime_checkable
class TtsProvider(Protocol):
    async def synthesize(self, request: SynthesisRequest) -> tuple[list[AudioChunk], int]: ...


@runtime_checkable
class ModerationProvider(Protocol):
    async def moderate(self, utterance: str) -> float: ...


@dataclass(frozen=True)
class TimeoutBudgets:
    """Per-provider wait bounds in seconds. Near real-time demands them."""

    stt: float = 10.0
    llm: float = 10.0
    tts: float = 10.0
    moderation: float = 10.0


@dataclass
class ProviderSet:
    """The four capabilities a running server needs."""

    stt: SttProvider
    llm: LlmProvider
    tts: TtsProvider
    moderation: ModerationProvider
    budgets: TimeoutBudgets = TimeoutBudgets()


def validate_chunk_stream(chunks: Sequence[AudioChunk]) -> None:
    """Check seq continuity and final-flag placement; empty streams pass."""
    for i, chunk in enumerate(chunks):
        if chunk.seq != i:
            raise StreamCorrupt(f"expected seq {i}, got {chunk.seq}", seq=chunk.seq)
        if chunk.final and i != len(chunks) - 1:
            raise StreamCorrupt(f"final chunk at seq {chunk.seq} is not last", seq=chunk.seq)


async def _bounded(coro, budget: float, what: str):
    try:
        return await asyncio.wait_for(coro, timeout=budget)
    except asyncio.TimeoutError:
        raise ProviderTimeout(f"{what} exceeded {budget:.1f}s budget")


async def transcribe(
    provider: SttProvider,
    chunks: Sequence[AudioChunk],
    language: str,
    budget: float = TimeoutBudgets.stt,
) -> str:
    """Run STT over a complete utterance stream.

    Empty streams yield empty text (handled upstream as an empty utterance).
    """
    validate_chunk_stream(chunks)
    if not chunks or all(c.sample_count == 0 for c in chunks):
        return ""
    return await _bounded(provider.transcribe(chunks, language), budget, "STT")


async def complete(
    provider: LlmProvider, request: LlmRequest, budget: float = TimeoutBudgets.llm
) -> str:
    if not request.messages:
        raise ValueError("LLM request must contain at least one message")
    raw = await _bounded(provider.complete(request), budget, "LLM")
    if not raw:
        raise ProviderUnavailable("LLM returned empty output")
    return raw


async def synthesize(
    provider: TtsProvider, request: SynthesisRequest, budget: float = TimeoutBudgets.tts
) -> tuple[list[AudioChunk], int]:
    """Run TTS to completion; returns (chunk stream, duration in ms).

    The sample-count/duration consistency contract (±1 sample) is asserted
    here for every provider, mock or real.
    """
    chunks, duration_ms = await _bounded(provider.synthesize(request), budget, "TTS")
    if duration_ms <= 0:
        raise ProviderUnavailable(f"TTS reported non-positive duration {duration_ms}")
    validate_chunk_stream(chunks)
    if not chunks or not chunks[-1].final:
        raise StreamCorrupt("TTS stream must end with a final chunk")
    total = sum(c.sample_count for c in chunks)
    expected = round(duration_ms * TTS_SAMPLE_RATE / 1000)
    if abs(total - expected) > 1:
        raise StreamCorrupt(
            f"TTS sample count {total} does not match duration {duration_ms}ms (expected {expected})"
        )
    return chunks, duration_ms


async def moderate(
    provider: ModerationProvider, utterance: str, budget: float = TimeoutBudgets.moderation
) -> float:
    if not utterance.strip():
        raise ValueError("moderation input must be non-empty")
    score = await _bounded(provider.moderate(utterance), budget, "moderation")
    if not 0.0 <= score <= 1.0:
        raise ProviderUnavailable(f"moderation score {score} outside [0, 1]")
    return score
