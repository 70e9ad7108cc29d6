"""Deterministic provider mocks.

Every mock's output is a pure function of (request, static config), which
makes full-pipeline runs golden-testable. Optional seeded latency jitter
exercises ordering under scheduling noise without touching outputs.

Mock audio carries its "speech" as a sidecar payload embedded in the PCM
samples (magic + length + UTF-8), so test utterances survive the real
binary wire format and the mock STT can transcribe them back out.
"""

from __future__ import annotations

import asyncio
import random
import re
import struct
from typing import Mapping, Sequence

from ..dialogue import LlmRequest
from ..feedback import FEEDBACK_REQUEST_MARKER
from .base import (
    AudioChunk,
    STT_SAMPLE_RATE,
    SynthesisRequest,
    TTS_SAMPLE_RATE,
)

MOCK_TTS_MS_PER_WORD = 60
MOCK_TTS_CHUNK_MS = 250

_SIDECAR_MAGIC = b"\xfa\xce\xca\x11"

_USER_LINE_RE = re.compile(r"^\[(\d+)\] User: ", re.MULTILINE)

DEFAULT_BLOCKLIST: tuple[str, ...] = (
    "stupid",
    "idiot",
    "shut up",
    "hate you",
    "worthless",
    "ugly",
)


def encode_sidecar_text(text: str) -> bytes:
    """Pack text into sample-aligned PCM16 bytes: magic + u32 length + UTF-8."""
    payload = text.encode("utf-8")
    blob = _SIDECAR_MAGIC + struct.pack("<I", len(payload)) + payload
    if len(blob) % 2:
        blob += b"\x00"
    return blob


def decode_sidecar_text(samples: bytes) -> str:
    """Recover sidecar text from concatenated samples; '' when absent."""
    pos = samples.find(_SIDECAR_MAGIC)
    if pos < 0:
        return ""
    length_off = pos + len(_SIDECAR_MAGIC)
    if length_off + 4 > len(samples):
        return ""
    (length,) = struct.unpack_from("<I", samples, length_off)
    start = length_off + 4
    if start + length > len(samples):
        return ""
    try:
        return samples[start : start + length].decode("utf-8")
    except UnicodeDecodeError:
        return ""


def make_utterance_chunks(
    text: str,
    chunk_samples: int = 1600,
    sample_rate: int = STT_SAMPLE_RATE,
) -> list[AudioChunk]:
    """Build a valid client utterance stream whose mock transcription is ``text``."""
    data = encode_sidecar_text(text)
    # Pad with silence so even short texts span at least one full chunk.
    if len(data) < chunk_samples * 2:
        data += bytes(chunk_samples * 2 - len(data))
    chunks = []
    step = chunk_samples * 2
    pieces = [data[i : i + step] for i in range(0, len(data), step)]
    for seq, piece in enumerate(pieces):
        chunks.append(
            AudioChunk(
                seq=seq,
                samples=piece,
                sample_rate=sample_rate,
                final=seq == len(pieces) - 1,
            )
        )
    return chunks


class _Latency:
    """Optional per-call delay; seeded jitter stays deterministic."""

    def __init__(self, delay: float = 0.0, jitter: tuple[float, float] | None = None, seed: int = 0):
        self._delay = delay
        self._jitter = jitter
        self._rng = random.Random(seed)

    async def wait(self) -> None:
        delay = self._delay
        if self._jitter is not None:
            delay += self._rng.uniform(*self._jitter)
        if delay > 0:
            await asyncio.sleep(delay)


class MockSttProvider:
    """Echoes the sidecar text carried by the audio stream."""

    def __init__(self, delay: float = 0.0, jitter: tuple[float, float] | None = None, seed: int = 0):
        self._latency = _Latency(delay, jitter, seed)

    async def transcribe(self, chunks: Sequence[AudioChunk], language: str) -> str:
        await self._latency.wait()
        return decode_sidecar_text(b"".join(c.samples for c in chunks))


class MockLlmProvider:
    """Scripted replies from a cue table keyed by the last user utterance.

    Without a cue hit: feedback-analysis requests get a minimal well-formed
    report citing real user turns from the prompt; everything else gets
    ``EMOTION: Neutral`` plus an echo of the utterance. Requests are recorded
    for test inspection.
    """

    def __init__(
        self,
        cues: Mapping[str, str] | None = None,
        delay: float = 0.0,
        jitter: tuple[float, float] | None = None,
        seed: int = 0,
    ):
        self.cues = dict(cues or {})
        self.requests: list[LlmRequest] = []
        self._latency = _Latency(delay, jitter, seed)

    async def complete(self, request: LlmRequest) -> str:
        self.requests.append(request)
        await self._latency.wait()
        last = request.last_user_text
        if last in self.cues:
            return self.cues[last]
        if FEEDBACK_REQUEST_MARKER in request.system:
            return self._feedback_reply(last)
        return f"EMOTION: Neutral\n{last}"

    @staticmethod
    def _feedback_reply(prompt_body: str) -> str:
        user_indices = [int(m.group(1)) for m in _USER_LINE_RE.finditer(prompt_body)]
        if not user_indices:
            return "ACTION: Say something next time."
        first, last = user_indices[0], user_indices[-1]
        return "\n".join(
            [
                f"STRENGTH {first}: You opened the conversation clearly.",
                f"WEAKNESS {last}: You could ask more follow-up questions.",
                "ACTION: Summarize the other side's view before answering.",
            ]
        )


class MockTtsProvider:
    """Synthesizes silence at 60 ms per word, chunked for streaming."""

    def __init__(self, delay: float = 0.0, jitter: tuple[float, float] | None = None, seed: int = 0):
        self._latency = _Latency(delay, jitter, seed)

    async def synthesize(self, request: SynthesisRequest) -> tuple[list[AudioChunk], int]:
        await self._latency.wait()
        words = len(request.text.split())
        duration_ms = MOCK_TTS_MS_PER_WORD * words
        total_samples = duration_ms * TTS_SAMPLE_RATE // 1000
        chunk_samples = MOCK_TTS_CHUNK_MS * TTS_SAMPLE_RATE // 1000
        chunks: list[AudioChunk] = []
        offset = 0
        seq = 0
        while offset < total_samples:
            count = min(chunk_samples, total_samples - offset)
            offset += count
            chunks.append(
                AudioChunk(
                    seq=seq,
                    samples=bytes(count * 2),
                    sample_rate=TTS_SAMPLE_RATE,
                    final=offset >= total_samples,
                )
            )
            seq += 1
        return chunks, duration_ms


class MockModerationProvider:
    """Scores 1.0 when the utterance contains any blocklisted term, else 0.0."""

    def __init__(
        self,
        blocklist: Sequence[str] = DEFAULT_BLOCKLIST,
        delay: float = 0.0,
        jitter: tuple[float, float] | None = None,
        seed: int = 0,
    ):
        self.blocklist = tuple(term.lower() for term in blocklist)
        self._latency = _Latency(delay, jitter, seed)

    async def moderate(self, utterance: str) -> float:
        await self._latency.wait()
        lowered = utterance.lower()
        return 1.0 if any(term in lowered for term in self.blocklist) else 0.0
