import asyncio

import pytest

from facecall.dialogue import EmotionLabel, Speaker, Transcript, Turn
from facecall.feedback import (
    FEEDBACK_REQUEST_MARKER,
    EmptyTranscriptError,
    FeedbackItem,
    FeedbackReport,
    UnparseableFeedbackError,
    build_feedback_request,
    format_transcript_lines,
    generate_feedback,
    parse_feedback_reply,
    render_feedback_text,
)
from conftest import make_mock_providers


def sample_transcript() -> Transcript:
    turns = (
        Turn(Speaker.USER, "I led the migration project", 0),
        Turn(Speaker.AGENT, "Tell me more", 1000, emotion=EmotionLabel.HAPPY),
        Turn(Speaker.USER, "We shipped two weeks early", 2000),
        Turn(Speaker.AGENT, "Impressive", 3000, emotion=EmotionLabel.SURPRISED),
    )
    return Transcript(session_id="t", turns=turns)


def test_format_transcript_lines():
    lines = format_transcript_lines(sample_transcript())
    assert lines == [
        "[0] User: I led the migration project",
        "[1] Agent (Happy): Tell me more",
        "[2] User: We shipped two weeks early",
        "[3] Agent (Surprised): Impressive",
    ]


def test_request_carries_marker_goal_and_transcript():
    request = build_feedback_request(sample_transcript(), "sound confident")
    assert FEEDBACK_REQUEST_MARKER in request.system
    assert len(request.messages) == 1
    body = request.messages[0].text
    assert body.startswith("Goal: sound confident\n")
    assert "[2] User: We shipped two weeks early" in body


def test_parse_keeps_only_user_turn_indices():
    raw = "\n".join(
        [
            "STRENGTH 0: clear opener",
            "STRENGTH 1: cites an agent turn",  # agent turn, dropped
            "WEAKNESS 2: vague timeline",
            "WEAKNESS 9: out of range",  # dropped
            "ACTION: quantify the outcome",
            "some chatter the model added",  # ignored
        ]
    )
    strengths, weaknesses, actions = parse_feedback_reply(raw, sample_transcript())
    assert [s.turn_index for s in strengths] == [0]
    assert strengths[0].quote == "I led the migration project"
    assert [w.turn_index for w in weaknesses] == [2]
    assert actions == ["quantify the outcome"]


def test_parse_is_case_insensitive_and_tolerant_of_spacing():
    raw = "strength 0 : good\nWeakness 2:bad\naction:   do it"
    strengths, weaknesses, actions = parse_feedback_reply(raw, sample_transcript())
    assert strengths[0].claim == "good"
    assert weaknesses[0].claim == "bad"
    assert actions == ["do it"]


def test_generate_feedback_with_mock():
    providers = make_mock_providers()

    async def run():
        return await generate_feedback(providers.llm, sample_transcript(), "sound confident")

    report = asyncio.run(run())
    assert report.goal == "sound confident"
    assert report.strengths and report.weaknesses and report.actions
    assert report.strengths[0].turn_index == 0
    assert report.weaknesses[0].turn_index == 2


def test_generate_feedback_rejects_empty_goal():
    providers = make_mock_providers()
    with pytest.raises(ValueError):
        asyncio.run(generate_feedback(providers.llm, sample_transcript(), "   "))


def test_generate_feedback_needs_user_turns():
    providers = make_mock_providers()
    empty = Transcript(session_id="t")
    with pytest.raises(EmptyTranscriptError):
        asyncio.run(generate_feedback(providers.llm, empty, "goal"))


class CountingLlm:
    """Returns garbage, counting calls, to prove the single retry."""

    def __init__(self):
        self.calls = 0

    async def complete(self, request):
        self.calls += 1
        return "no grammar lines here"


class FlakyLlm:
    """Unparseable once, then a valid reply."""

    def __init__(self):
        self.calls = 0

    async def complete(self, request):
        self.calls += 1
        if self.calls == 1:
            return "hmm"
        return "STRENGTH 0: fine\nWEAKNESS 2: rushed\nACTION: slow down"


def test_generate_feedback_retries_once_then_fails():
    llm = CountingLlm()
    with pytest.raises(UnparseableFeedbackError):
        asyncio.run(generate_feedback(llm, sample_transcript(), "goal"))
    assert llm.calls == 2


def test_generate_feedback_recovers_on_retry():
    llm = FlakyLlm()
    report = asyncio.run(generate_feedback(llm, sample_transcript(), "goal"))
    assert llm.calls == 2
    assert report.actions == ("slow down",)


def test_render_feedback_text_layout():
    report = FeedbackReport(
        goal="negotiate",
        strengths=(FeedbackItem("direct ask", 0, "can you lower it"),),
        weaknesses=(FeedbackItem("no numbers", 2, "maybe less"),),
        actions=("name a target price",),
    )
    text = render_feedback_text(report)
    assert text.splitlines() == [
        "Goal: negotiate",
        "",
        "Strengths:",
        "- direct ask",
        '  (turn 0: "can you lower it")',
        "",
        "Weaknesses:",
        "- no numbers",
        '  (turn 2: "maybe less")',
        "",
        "Next steps:",
        "- name a target price",
    ]


def test_report_json_round_trip():
    report = FeedbackReport(
        goal="g",
        strengths=(FeedbackItem("a", 0, "q1"), FeedbackItem("b", 2, "q2")),
        weaknesses=(FeedbackItem("c", 2, "q2"),),
        actions=("do x", "do y"),
    )
    assert FeedbackReport.from_json_dict(report.to_json_dict()) == report
