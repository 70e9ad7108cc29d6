"""Headless scripted calls: a full in-process session with mock providers.

A replay script is a JSON document holding a persona, a practice goal, and
an ordered list of user utterances. Each step advances a simulated clock
before speaking, so scripts can cross the warning and close thresholds.
Output is plain text and byte-identical across runs for a fixed seed.
"""

from __future__ import annotations

import asyncio
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping

from .config import ServerConfig, build_guardrail_policy, build_provider_set
from .expression import load_clip_library
from .feedback import (
    EmptyTranscriptError,
    UnparseableFeedbackError,
    generate_feedback,
    render_feedback_text,
)
from .gateway import protocol
from .gateway.turn import run_turn
from .persona import PersonaFileError, PersonaSpec
from .providers.base import ProviderError
from .providers.mocks import MockLlmProvider
from .session import CloseReason, SimulatedClock, TickEvent, create_session

DEFAULT_STEP_ADVANCE_S = 5.0


class ScriptParseError(Exception):
    pass


@dataclass(frozen=True)
class ReplayStep:
    text: str
    advance_s: float = DEFAULT_STEP_ADVANCE_S

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ScriptParseError("utterance text must be non-empty")
        if self.advance_s < 0:
            raise ScriptParseError("advance_s must be non-negative")


@dataclass(frozen=True)
class ReplayScript:
    """Scripts may carry their own LLM cue table to stage specific replies."""

    persona: PersonaSpec
    goal: str
    steps: tuple[ReplayStep, ...]
    cues: Mapping[str, str] = field(default_factory=dict)


def _parse_step(entry: object, index: int) -> ReplayStep:
    if isinstance(entry, str):
        return ReplayStep(text=entry)
    if isinstance(entry, dict):
        try:
            return ReplayStep(
                text=str(entry["text"]),
                advance_s=float(entry.get("advance_s", DEFAULT_STEP_ADVANCE_S)),
            )
        except KeyError as exc:
            raise ScriptParseError(
                f"utterance {index} is missing field {exc.args[0]!r}"
            ) from exc
    raise ScriptParseError(f"utterance {index} must be a string or an object")


def load_script(path: "str | Path") -> ReplayScript:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ScriptParseError(f"cannot read script {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScriptParseError(f"script {p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScriptParseError("script must be a JSON object")
    if "persona" not in doc:
        raise ScriptParseError("script is missing 'persona'")
    utterances = doc.get("utterances")
    if not isinstance(utterances, list) or not utterances:
        raise ScriptParseError("script needs a non-empty 'utterances' list")
    try:
        persona = PersonaSpec.from_json_dict(doc["persona"])
    except (TypeError, ValueError, PersonaFileError) as exc:
        raise ScriptParseError(f"bad persona in script: {exc}") from exc
    cues = doc.get("cues", {})
    if not isinstance(cues, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in cues.items()
    ):
        raise ScriptParseError("script 'cues' must map utterance strings to replies")
    return ReplayScript(
        persona=persona,
        goal=str(doc.get("goal", "")),
        steps=tuple(_parse_step(u, i) for i, u in enumerate(utterances)),
        cues=cues,
    )


async def _replay_async(
    script: ReplayScript, config: ServerConfig, seed: int, emit: Callable[[str], None]
) -> None:
    provider_set = build_provider_set(config)
    if script.cues:
        provider_set = replace(provider_set, llm=MockLlmProvider(cues=dict(script.cues)))
    policy = build_guardrail_policy(config)
    library = load_clip_library(config.clip_library_path())
    clock = SimulatedClock()
    session = create_session(
        spec=script.persona,
        policy=policy,
        goal=script.goal,
        clock=clock,
        timers=config.session_clock(),
        supported_languages=config.supported_languages,
        session_id="replay",
    )
    session.activate()

    emit(f"persona: {script.persona.agent_name}")
    emit(f"goal: {script.goal or '(none)'}")
    emit(f"language: {script.persona.language}")
    emit("")

    turn_index = 0
    for step in script.steps:
        clock.advance(step.advance_s)
        for event in session.tick():
            if event is TickEvent.WARNING_DUE:
                emit(f"-- time warning: {session.remaining_ms()} ms remaining")
            elif event is TickEvent.CLOSE_DUE:
                session.close(CloseReason.TIME_LIMIT)
                emit("-- session closed: time_limit")
        if not session.is_open:
            break

        base = len(session.transcript.turns) if session.transcript else 0
        async for message in run_turn(
            session, provider_set, library, step.text, rng_seed=seed + turn_index
        ):
            if isinstance(message, protocol.UserTranscript):
                emit(f"[{base}] User: {message.text}")
            elif isinstance(message, protocol.AgentReplyStart):
                pass
            elif isinstance(message, protocol.AgentReplyEnd):
                assert session.transcript is not None
                agent = session.transcript.turns[-1]
                emit(f"[{base + 1}] Agent ({agent.emotion.value}): {agent.text}")
            elif isinstance(message, protocol.SessionClosed):
                emit(f"-- session closed: {message.reason.value}")
            elif isinstance(message, protocol.ErrorMessage):
                emit(f"-- error {message.code}: {message.message}")
        turn_index += 1
        if not session.is_open:
            break

    if session.is_open:
        session.close(CloseReason.USER_ENDED)
    emit("")
    assert session.close_reason is not None
    emit(f"close reason: {session.close_reason.value}")

    transcript = session.transcript
    if transcript is None or not script.goal.strip():
        emit("feedback: skipped (no goal)")
        return
    emit("")
    try:
        report = await generate_feedback(
            provider_set.llm, transcript, script.goal, provider_set.budgets.llm
        )
    except EmptyTranscriptError:
        emit("feedback: unavailable (no user turns)")
        return
    except (UnparseableFeedbackError, ProviderError) as exc:
        emit(f"feedback: unavailable ({exc})")
        return
    emit(render_feedback_text(report))


def run_replay(
    script_path: "str | Path",
    config: ServerConfig,
    seed: "int | None" = None,
    emit: Callable[[str], None] = print,
) -> None:
    """Drive a scripted session to completion; deterministic given seed."""
    script = load_script(script_path)
    asyncio.run(
        _replay_async(script, config, config.seed if seed is None else seed, emit)
    )
