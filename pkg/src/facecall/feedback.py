"""Post-call analysis: goal-conditioned feedback over the final transcript.

The analyzer LLM answers in a line-oriented grammar (STRENGTH/WEAKNESS with
a citing turn number, plain ACTION lines) so any text-only provider can be
used. Evidence indices are validated against the transcript; the report
carries the quoted user utterances so it renders standalone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .dialogue import ChatMessage, LlmRequest, Speaker, Transcript
from .providers import base as providers

# Included verbatim in every feedback request's system prompt; deterministic
# mocks key off it to answer in the feedback grammar.
FEEDBACK_REQUEST_MARKER = "Respond with one finding per line"

FEEDBACK_SYSTEM_PROMPT = (
    "You are a communication coach reviewing a finished practice conversation. "
    "Judge how well the user advanced their stated goal.\n"
    f"{FEEDBACK_REQUEST_MARKER}, using exactly these formats and nothing else:\n"
    "STRENGTH <turn>: <specific thing the user did well>\n"
    "WEAKNESS <turn>: <specific thing the user should improve>\n"
    "ACTION: <one imperative next step for the user>\n"
    "<turn> must be the number of a [n] User line from the transcript. "
    "Give at least one STRENGTH, one WEAKNESS, and one ACTION."
)

_STRENGTH_RE = re.compile(r"^STRENGTH\s+(\d+)\s*:\s*(.+)$", re.IGNORECASE)
_WEAKNESS_RE = re.compile(r"^WEAKNESS\s+(\d+)\s*:\s*(.+)$", re.IGNORECASE)
_ACTION_RE = re.compile(r"^ACTION\s*:\s*(.+)$", re.IGNORECASE)


class FeedbackError(Exception):
    pass


class EmptyTranscriptError(FeedbackError):
    pass


class UnparseableFeedbackError(FeedbackError):
    pass


@dataclass(frozen=True)
class FeedbackItem:
    claim: str
    turn_index: int
    quote: str


@dataclass(frozen=True)
class FeedbackReport:
    goal: str
    strengths: tuple[FeedbackItem, ...]
    weaknesses: tuple[FeedbackItem, ...]
    actions: tuple[str, ...]

    def to_json_dict(self) -> dict:
        def items(seq: tuple[FeedbackItem, ...]) -> list[dict]:
            return [{"claim": i.claim, "turn": i.turn_index, "quote": i.quote} for i in seq]

        return {
            "goal": self.goal,
            "strengths": items(self.strengths),
            "weaknesses": items(self.weaknesses),
            "actions": list(self.actions),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "FeedbackReport":
        def items(raw: list) -> tuple[FeedbackItem, ...]:
            return tuple(
                FeedbackItem(claim=str(i["claim"]), turn_index=int(i["turn"]), quote=str(i["quote"]))
                for i in raw
            )

        return cls(
            goal=str(data["goal"]),
            strengths=items(data["strengths"]),
            weaknesses=items(data["weaknesses"]),
            actions=tuple(str(a) for a in data["actions"]),
        )


def format_transcript_lines(transcript: Transcript) -> list[str]:
    lines = []
    for i, turn in enumerate(transcript.turns):
        if turn.speaker is Speaker.USER:
            lines.append(f"[{i}] User: {turn.text}")
        else:
            emotion = turn.emotion.value if turn.emotion else "Neutral"
            lines.append(f"[{i}] Agent ({emotion}): {turn.text}")
    return lines


def build_feedback_request(transcript: Transcript, goal: str) -> LlmRequest:
    """Feedback prompt = goal + numbered transcript + fixed template, nothing else."""
    body = "Goal: " + goal + "\n\nTranscript:\n" + "\n".join(format_transcript_lines(transcript))
    return LlmRequest(
        system=FEEDBACK_SYSTEM_PROMPT,
        messages=(ChatMessage(role="user", text=body),),
    )


def parse_feedback_reply(
    raw: str, transcript: Transcript
) -> tuple[list[FeedbackItem], list[FeedbackItem], list[str]]:
    """Parse grammar lines, dropping findings whose turn index is not a user turn."""
    strengths: list[FeedbackItem] = []
    weaknesses: list[FeedbackItem] = []
    actions: list[str] = []
    turns = transcript.turns

    def valid_user_index(idx: int) -> bool:
        return 0 <= idx < len(turns) and turns[idx].speaker is Speaker.USER

    for line in raw.splitlines():
        line = line.strip()
        if m := _STRENGTH_RE.match(line):
            idx = int(m.group(1))
            if valid_user_index(idx):
                strengths.append(FeedbackItem(m.group(2).strip(), idx, turns[idx].text))
        elif m := _WEAKNESS_RE.match(line):
            idx = int(m.group(1))
            if valid_user_index(idx):
                weaknesses.append(FeedbackItem(m.group(2).strip(), idx, turns[idx].text))
        elif m := _ACTION_RE.match(line):
            actions.append(m.group(1).strip())
    return strengths, weaknesses, actions


async def generate_feedback(
    provider: providers.LlmProvider,
    transcript: Transcript,
    goal: str,
    budget: float = providers.TimeoutBudgets.llm,
) -> FeedbackReport:
    """Analyze a closed session's transcript against the user's goal.

    Invalid evidence indices are dropped; if any section comes back empty
    the provider is retried once before UnparseableFeedbackError.
    """
    if not goal.strip():
        raise ValueError("feedback goal must be non-empty")
    if not transcript.user_turn_indices():
        raise EmptyTranscriptError("transcript contains no user turns")

    request = build_feedback_request(transcript, goal)
    last_raw = ""
    for _attempt in range(2):
        last_raw = await providers.complete(provider, request, budget)
        strengths, weaknesses, actions = parse_feedback_reply(last_raw, transcript)
        if strengths and weaknesses and actions:
            return FeedbackReport(
                goal=goal,
                strengths=tuple(strengths),
                weaknesses=tuple(weaknesses),
                actions=tuple(actions),
            )
    raise UnparseableFeedbackError(f"provider reply not parseable after retry: {last_raw[:200]!r}")


def render_feedback_text(report: FeedbackReport) -> str:
    """Deterministic human-readable rendering with quoted evidence."""
    lines = ["Goal: " + report.goal, ""]
    lines.append("Strengths:")
    for item in report.strengths:
        lines.append(f"- {item.claim}")
        lines.append(f'  (turn {item.turn_index}: "{item.quote}")')
    lines.append("")
    lines.append("Weaknesses:")
    for item in report.weaknesses:
        lines.append(f"- {item.claim}")
        lines.append(f'  (turn {item.turn_index}: "{item.quote}")')
    lines.append("")
    lines.append("Next steps:")
    for action in report.actions:
        lines.append(f"- {action}")
    return "\n".join(lines)
