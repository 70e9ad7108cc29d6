"""Pluggable STT/LLM/TTS/moderation capabilities.

``base`` holds the contracts, ``mocks`` the deterministic desk-scale
implementations, ``http`` the generic real-service adapters.
"""

from .base import (
    AudioChunk,
    LlmProvider,
    ModerationProvider,
    ProviderError,
    ProviderSet,
    ProviderTimeout,
    ProviderUnavailable,
    STT_SAMPLE_RATE,
    SttProvider,
    StreamCorrupt,
    SynthesisRequest,
    TimeoutBudgets,
    TTS_SAMPLE_RATE,
    TtsProvider,
    complete,
    moderate,
    synthesize,
    transcribe,
    validate_chunk_stream,
)

__all__ = [
    "AudioChunk",
    "LlmProvider",
    "ModerationProvider",
    "ProviderError",
    "ProviderSet",
    "ProviderTimeout",
    "ProviderUnavailable",
    "STT_SAMPLE_RATE",
    "SttProvider",
    "StreamCorrupt",
    "SynthesisRequest",
    "TimeoutBudgets",
    "TTS_SAMPLE_RATE",
    "TtsProvider",
    "complete",
    "moderate",
    "synthesize",
    "transcribe",
    "validate_chunk_stream",
]
