"""Server configuration: JSON file plus FACECALL_* environment overrides.

Every operational knob lives here: bind address, clip library path, timer
durations, strike limit, provider selection. Paths in the file resolve
relative to the file's own directory so configs are relocatable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .persona import (
    DEFAULT_GUARDRAIL_DIRECTIVES,
    DEFAULT_SUPPORTED_LANGUAGES,
    GuardrailPolicy,
)
from .providers import base as providers
from .providers.mocks import (
    DEFAULT_BLOCKLIST,
    MockLlmProvider,
    MockModerationProvider,
    MockSttProvider,
    MockTtsProvider,
)
from .session import SessionClock


class ConfigError(Exception):
    pass


def bundled_asset_path(name: str) -> Path:
    return Path(str(resources.files("facecall") / "assets" / name))


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    clip_library: str = ""
    guardrails_file: str = ""
    blocklist_file: str = ""
    cue_table_file: str = ""
    persona_dir: str = ""
    providers: str = "mock"
    supported_languages: tuple[str, ...] = DEFAULT_SUPPORTED_LANGUAGES
    warn_after_s: float = 480.0
    close_after_s: float = 600.0
    tick_interval_s: float = 1.0
    abuse_strike_limit: int = 3
    moderation_threshold: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.providers not in ("mock", "http"):
            raise ConfigError(f"unknown provider kind {self.providers!r}")
        if not 0 < self.warn_after_s < self.close_after_s:
            raise ConfigError("warn_after_s must be positive and below close_after_s")
        if self.tick_interval_s <= 0:
            raise ConfigError("tick_interval_s must be positive")

    def clip_library_path(self) -> Path:
        if self.clip_library:
            return Path(self.clip_library)
        return bundled_asset_path("sample_clips.json")

    def persona_dir_path(self) -> Path:
        if self.persona_dir:
            return Path(self.persona_dir)
        return bundled_asset_path("personas")

    def session_clock(self) -> SessionClock:
        return SessionClock(self.warn_after_s, self.close_after_s)


_ENV_FIELDS = {
    "FACECALL_HOST": ("host", str),
    "FACECALL_PORT": ("port", int),
    "FACECALL_CLIP_LIBRARY": ("clip_library", str),
    "FACECALL_GUARDRAILS": ("guardrails_file", str),
    "FACECALL_BLOCKLIST": ("blocklist_file", str),
    "FACECALL_CUE_TABLE": ("cue_table_file", str),
    "FACECALL_PERSONA_DIR": ("persona_dir", str),
    "FACECALL_PROVIDERS": ("providers", str),
    "FACECALL_WARN_AFTER_S": ("warn_after_s", float),
    "FACECALL_CLOSE_AFTER_S": ("close_after_s", float),
    "FACECALL_TICK_INTERVAL_S": ("tick_interval_s", float),
    "FACECALL_STRIKE_LIMIT": ("abuse_strike_limit", int),
    "FACECALL_MODERATION_THRESHOLD": ("moderation_threshold", float),
    "FACECALL_SEED": ("seed", int),
}

_PATH_FIELDS = (
    "clip_library",
    "guardrails_file",
    "blocklist_file",
    "cue_table_file",
    "persona_dir",
)


def load_config(path: "str | Path | None" = None) -> ServerConfig:
    """Read a JSON config file, then apply FACECALL_* environment overrides."""
    values: dict[str, object] = {}
    base_dir = Path.cwd()
    if path is not None:
        path = Path(path)
        try:
            raw = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        base_dir = path.parent
        known = set(ServerConfig.__dataclass_fields__)
        for key, value in doc.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r} in {path}")
            values[key] = value

    for env_name, (field_name, cast) in _ENV_FIELDS.items():
        raw_env = os.environ.get(env_name)
        if raw_env is None:
            continue
        try:
            values[field_name] = cast(raw_env)
        except ValueError as exc:
            raise ConfigError(f"bad value for {env_name}: {raw_env!r}") from exc

    if "supported_languages" in values:
        values["supported_languages"] = tuple(values["supported_languages"])  # type: ignore[arg-type]

    for name in _PATH_FIELDS:
        value = values.get(name)
        if value:
            resolved = Path(value)  # type: ignore[arg-type]
            if not resolved.is_absolute():
                resolved = base_dir / resolved
            if not resolved.exists():
                raise ConfigError(f"{name} path does not exist: {resolved}")
            values[name] = str(resolved)

    try:
        return ServerConfig(**values)  # type: ignore[arg-type]
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _load_json_file(path: str, what: str) -> object:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {what} file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from exc


def build_guardrail_policy(config: ServerConfig) -> GuardrailPolicy:
    directives = DEFAULT_GUARDRAIL_DIRECTIVES
    if config.guardrails_file:
        doc = _load_json_file(config.guardrails_file, "guardrails")
        if isinstance(doc, dict):
            doc = doc.get("directives")
        if not isinstance(doc, list) or not all(isinstance(d, str) for d in doc):
            raise ConfigError("guardrails file must hold a list of directive strings")
        directives = tuple(doc)
    return GuardrailPolicy(
        directives=directives,
        abuse_strike_limit=config.abuse_strike_limit,
        moderation_threshold=config.moderation_threshold,
    )


def build_provider_set(config: ServerConfig) -> providers.ProviderSet:
    if config.providers == "http":
        from .providers import http

        return providers.ProviderSet(
            stt=http.HttpSttProvider(),
            llm=http.HttpLlmProvider(),
            tts=http.HttpTtsProvider(),
            moderation=http.HttpModerationProvider(),
        )

    cues: dict[str, str] = {}
    if config.cue_table_file:
        doc = _load_json_file(config.cue_table_file, "cue table")
        if not isinstance(doc, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in doc.items()
        ):
            raise ConfigError("cue table file must map utterance strings to replies")
        cues = doc

    blocklist = DEFAULT_BLOCKLIST
    if config.blocklist_file:
        doc = _load_json_file(config.blocklist_file, "blocklist")
        if not isinstance(doc, list) or not all(isinstance(t, str) for t in doc):
            raise ConfigError("blocklist file must hold a list of terms")
        blocklist = tuple(doc)

    return providers.ProviderSet(
        stt=MockSttProvider(),
        llm=MockLlmProvider(cues=cues),
        tts=MockTtsProvider(),
        moderation=MockModerationProvider(blocklist=blocklist),
    )
