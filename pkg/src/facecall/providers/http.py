"""Generic HTTP adapters for real STT/LLM/TTS/moderation services.

Each adapter POSTs JSON to a single endpoint configured via environment
variables (``FACECALL_<ROLE>_URL`` / ``FACECALL_<ROLE>_API_KEY``) and maps
transport failures to ProviderUnavailable. The payload shapes are plain and
service-agnostic; wrap a thin proxy in front of your vendor of choice.
"""

from __future__ import annotations

import base64
import os
from typing import Sequence

import httpx

from ..dialogue import LlmRequest
from .base import (
    AudioChunk,
    ProviderUnavailable,
    SynthesisRequest,
    TTS_SAMPLE_RATE,
)

_ENV_PREFIX = "FACECALL"


def _endpoint(role: str) -> tuple[str, dict[str, str]]:
    url = os.environ.get(f"{_ENV_PREFIX}_{role}_URL", "")
    if not url:
        raise ProviderUnavailable(f"{_ENV_PREFIX}_{role}_URL is not configured")
    headers = {}
    api_key = os.environ.get(f"{_ENV_PREFIX}_{role}_API_KEY", "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    return url, headers


async def _post_json(role: str, payload: dict, client: httpx.AsyncClient | None) -> dict:
    url, headers = _endpoint(role)
    try:
        if client is None:
            async with httpx.AsyncClient() as own:
                response = await own.post(url, json=payload, headers=headers)
        else:
            response = await client.post(url, json=payload, headers=headers)
    except httpx.HTTPError as exc:
        raise ProviderUnavailable(f"{role} request failed: {exc}") from exc
    if response.status_code != 200:
        raise ProviderUnavailable(f"{role} returned HTTP {response.status_code}")
    try:
        return response.json()
    except ValueError as exc:
        raise ProviderUnavailable(f"{role} returned non-JSON body") from exc


class HttpSttProvider:
    def __init__(self, client: httpx.AsyncClient | None = None):
        self._client = client

    async def transcribe(self, chunks: Sequence[AudioChunk], language: str) -> str:
        pcm = b"".join(c.samples for c in chunks)
        data = await _post_json(
            "STT",
            {
                "language": language,
                "sample_rate": chunks[0].sample_rate if chunks else 16000,
                "pcm16": base64.b64encode(pcm).decode("ascii"),
            },
            self._client,
        )
        return str(data.get("text", ""))


class HttpLlmProvider:
    def __init__(self, client: httpx.AsyncClient | None = None):
        self._client = client

    async def complete(self, request: LlmRequest) -> str:
        data = await _post_json(
            "LLM",
            {
                "system": request.system,
                "messages": [{"role": m.role, "content": m.text} for m in request.messages],
            },
            self._client,
        )
        return str(data.get("text", ""))


class HttpTtsProvider:
    def __init__(self, client: httpx.AsyncClient | None = None):
        self._client = client

    async def synthesize(self, request: SynthesisRequest) -> tuple[list[AudioChunk], int]:
        data = await _post_json(
            "TTS",
            {
                "text": request.text,
                "emotion": request.emotion.value,
                "voice_id": request.voice_id,
                "language": request.language,
                "sample_rate": TTS_SAMPLE_RATE,
            },
            self._client,
        )
        try:
            pcm = base64.b64decode(data["pcm16"])
            duration_ms = int(data["duration_ms"])
        except (KeyError, ValueError) as exc:
            raise ProviderUnavailable(f"TTS reply missing pcm16/duration_ms: {exc}") from exc
        return (
            [AudioChunk(seq=0, samples=pcm, sample_rate=TTS_SAMPLE_RATE, final=True)],
            duration_ms,
        )


class HttpModerationProvider:
    def __init__(self, client: httpx.AsyncClient | None = None):
        self._client = client

    async def moderate(self, utterance: str) -> float:
        data = await _post_json("MODERATION", {"text": utterance}, self._client)
        try:
            return float(data["score"])
        except (KeyError, ValueError) as exc:
            raise ProviderUnavailable(f"moderation reply missing score: {exc}") from exc
