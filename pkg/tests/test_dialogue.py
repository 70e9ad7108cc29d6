import pytest

from facecall.dialogue import (
    AlternationViolationError,
    EmotionLabel,
    EmptyReplyTextError,
    EmptyUtteranceError,
    Speaker,
    TimestampRegressionError,
    Transcript,
    Turn,
    append_turn,
    build_llm_request,
    parse_emotion_tagged_reply,
)

SEVEN = ["Neutral", "Happy", "Sad", "Angry", "Surprised", "Afraid", "Disgusted"]


def test_emotion_label_set_is_exactly_seven():
    assert [label.value for label in EmotionLabel] == SEVEN


def test_emotion_from_text_case_insensitive():
    assert EmotionLabel.from_text("happy") is EmotionLabel.HAPPY
    assert EmotionLabel.from_text("  ANGRY ") is EmotionLabel.ANGRY
    assert EmotionLabel.from_text("joyful") is None
    assert EmotionLabel.from_text("") is None


def test_parse_reply_with_header():
    reply = parse_emotion_tagged_reply("EMOTION: Happy\nGreat to see you!")
    assert reply.emotion is EmotionLabel.HAPPY
    assert reply.text == "Great to see you!"
    assert reply.parse_fallback is False


def test_parse_reply_header_any_case_and_padding():
    reply = parse_emotion_tagged_reply("  emotion:  sad  \nthat is rough")
    assert reply.emotion is EmotionLabel.SAD
    assert reply.text == "that is rough"
    assert not reply.parse_fallback


def test_parse_reply_multiline_body_preserved():
    reply = parse_emotion_tagged_reply("EMOTION: Neutral\nline one\nline two")
    assert reply.text == "line one\nline two"


def test_parse_reply_missing_header_falls_back_to_neutral():
    reply = parse_emotion_tagged_reply("just some text without a tag")
    assert reply.emotion is EmotionLabel.NEUTRAL
    assert reply.text == "just some text without a tag"
    assert reply.parse_fallback is True


def test_parse_reply_unknown_label_strips_header_and_falls_back():
    reply = parse_emotion_tagged_reply("EMOTION: Ecstatic\nwell then")
    assert reply.emotion is EmotionLabel.NEUTRAL
    assert reply.text == "well then"
    assert reply.parse_fallback is True


def test_parse_reply_empty_body_raises():
    with pytest.raises(EmptyReplyTextError):
        parse_emotion_tagged_reply("EMOTION: Happy\n")
    with pytest.raises(EmptyReplyTextError):
        parse_emotion_tagged_reply("EMOTION: Happy")
    with pytest.raises(EmptyReplyTextError):
        parse_emotion_tagged_reply("")


def test_turn_invariants():
    with pytest.raises(ValueError):
        Turn(Speaker.AGENT, "hi", 0)  # agent turns need an emotion
    with pytest.raises(ValueError):
        Turn(Speaker.USER, "hi", 0, emotion=EmotionLabel.HAPPY)
    with pytest.raises(ValueError):
        Turn(Speaker.AGENT, "hi", 0, emotion=EmotionLabel.HAPPY, moderation_flagged=True)
    with pytest.raises(ValueError):
        Turn(Speaker.USER, "hi", -1)


def test_build_llm_request_orders_history_then_new_utterance():
    t = Transcript("s")
    t = append_turn(t, Turn(Speaker.USER, "hello", 0))
    t = append_turn(t, Turn(Speaker.AGENT, "hi there", 10, emotion=EmotionLabel.NEUTRAL))
    request = build_llm_request("SYSTEM", t, "how are you")
    assert request.system == "SYSTEM"
    assert [(m.role, m.text) for m in request.messages] == [
        ("user", "hello"),
        ("assistant", "hi there"),
        ("user", "how are you"),
    ]
    assert request.last_user_text == "how are you"


def test_build_llm_request_rejects_blank_utterance():
    with pytest.raises(EmptyUtteranceError):
        build_llm_request("SYSTEM", Transcript("s"), "   ")


def test_append_turn_enforces_alternation():
    t = Transcript("s")
    t = append_turn(t, Turn(Speaker.USER, "one", 0))
    with pytest.raises(AlternationViolationError):
        append_turn(t, Turn(Speaker.USER, "two", 5))
    t = append_turn(t, Turn(Speaker.AGENT, "reply", 5, emotion=EmotionLabel.NEUTRAL))
    with pytest.raises(AlternationViolationError):
        append_turn(t, Turn(Speaker.AGENT, "again", 9, emotion=EmotionLabel.SAD))


def test_append_turn_rejects_timestamp_regression():
    t = append_turn(Transcript("s"), Turn(Speaker.USER, "one", 100))
    with pytest.raises(TimestampRegressionError):
        append_turn(t, Turn(Speaker.AGENT, "r", 99, emotion=EmotionLabel.NEUTRAL))
    # equal timestamps are fine
    t2 = append_turn(t, Turn(Speaker.AGENT, "r", 100, emotion=EmotionLabel.NEUTRAL))
    assert len(t2.turns) == 2


def test_append_turn_does_not_mutate_original():
    t0 = Transcript("s")
    t1 = append_turn(t0, Turn(Speaker.USER, "one", 0))
    assert t0.turns == ()
    assert len(t1.turns) == 1


def test_user_turn_indices():
    t = Transcript("s")
    t = append_turn(t, Turn(Speaker.USER, "a", 0))
    t = append_turn(t, Turn(Speaker.AGENT, "b", 1, emotion=EmotionLabel.NEUTRAL))
    t = append_turn(t, Turn(Speaker.USER, "c", 2))
    assert t.user_turn_indices() == [0, 2]
