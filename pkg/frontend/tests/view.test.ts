import { describe, expect, it } from "vitest";

import type { FeedbackReport, ServerMessage } from "../src/protocol.js";
import { CallView, feedbackPanelLines, formatRemaining } from "../src/view.js";

function activeView(): CallView {
  const view = new CallView();
  view.apply({ type: "session_ready", session_id: "s", channels: ["jawOpen"], fps: 30 });
  return view;
}

describe("time warning banner", () => {
  it("appears on receipt of the warning", () => {
    const view = activeView();
    expect(view.banner).toBeNull();
    view.apply({ type: "time_warning", remaining_ms: 120000 });
    expect(view.banner).toBe("2:00 remaining");
  });

  it("formats other remainders as m:ss", () => {
    expect(formatRemaining(119000)).toBe("1:59 remaining");
    expect(formatRemaining(60500)).toBe("1:01 remaining");
    expect(formatRemaining(0)).toBe("0:00 remaining");
  });
});

describe("transcript", () => {
  it("keeps entries in arrival order with emotion badges only on agent turns", () => {
    const view = activeView();
    const events: ServerMessage[] = [
      { type: "user_transcript", text: "hi there" },
      { type: "agent_reply_start", emotion: "Happy", duration_ms: 900 },
      { type: "agent_reply_end" },
      { type: "user_transcript", text: "tell me more" },
      { type: "agent_reply_start", emotion: "Surprised", duration_ms: 1200 },
      { type: "agent_reply_end" },
    ];
    events.forEach((e) => view.apply(e));

    expect(view.transcript.map((t) => t.speaker)).toEqual(["user", "agent", "user", "agent"]);
    expect(view.transcript[0].text).toBe("hi there");
    expect(view.transcript[0].emotion).toBeUndefined();
    expect(view.transcript[1].emotion).toBe("Happy");
    expect(view.transcript[3].emotion).toBe("Surprised");
  });
});

describe("input gating", () => {
  it("disables input while a turn is in flight and re-enables at reply end", () => {
    const view = activeView();
    expect(view.inputEnabled).toBe(true);
    view.noteTurnSent();
    expect(view.inputEnabled).toBe(false);
    view.apply({ type: "agent_reply_start", emotion: "Neutral", duration_ms: 60 });
    expect(view.inputEnabled).toBe(false);
    view.apply({ type: "agent_reply_end" });
    expect(view.inputEnabled).toBe(true);
  });

  it("re-enables input after a turn-level error", () => {
    const view = activeView();
    view.noteTurnSent();
    view.apply({ type: "error", code: "empty_utterance", message: "nothing to respond to" });
    expect(view.inputEnabled).toBe(true);
    expect(view.notices).toEqual([{ code: "empty_utterance", message: "nothing to respond to" }]);
  });

  it("disables input for good once the session closes", () => {
    const view = activeView();
    view.apply({ type: "session_closed", reason: "abuse_limit" });
    expect(view.status).toBe("closed");
    expect(view.inputEnabled).toBe(false);
    expect(view.closeText).toMatch(/abusive/);
  });
});

describe("notices", () => {
  it("stacks and dismisses error notices", () => {
    const view = activeView();
    view.apply({ type: "error", code: "a", message: "first" });
    view.apply({ type: "error", code: "b", message: "second" });
    expect(view.notices).toHaveLength(2);
    view.dismissNotice(0);
    expect(view.notices).toEqual([{ code: "b", message: "second" }]);
  });
});

describe("feedback panel", () => {
  const report: FeedbackReport = {
    goal: "negotiate calmly",
    strengths: [
      { claim: "stated the ask early", turn: 0, quote: "I would like to talk about my rate" },
      { claim: "stayed factual", turn: 2, quote: "my last three reviews were strong" },
    ],
    weaknesses: [
      { claim: "conceded too fast", turn: 4, quote: "fine, forget it" },
      { claim: "closed abruptly", turn: 6, quote: "whatever works for you" },
    ],
    actions: ["hold the first offer longer", "end with a concrete next step"],
  };

  it("becomes requestable only after the call closes", () => {
    const view = activeView();
    expect(view.feedbackAvailable).toBe(false);
    view.apply({ type: "session_closed", reason: "user_ended" });
    expect(view.feedbackAvailable).toBe(true);
    view.apply({ type: "feedback_report", report });
    expect(view.feedbackAvailable).toBe(false);
    expect(view.feedback).toEqual(report);
  });

  it("reproduces every evidence quote", () => {
    const lines = feedbackPanelLines(report);
    const joined = lines.join("\n");
    const quotes = [...report.strengths, ...report.weaknesses].map((i) => i.quote);
    expect(quotes).toHaveLength(4);
    for (const quote of quotes) {
      expect(joined).toContain(`"${quote}"`);
    }
    for (const item of [...report.strengths, ...report.weaknesses]) {
      expect(joined).toContain(`turn ${item.turn}`);
      expect(joined).toContain(item.claim);
    }
    for (const action of report.actions) {
      expect(joined).toContain(action);
    }
    expect(lines[0]).toBe("Goal: negotiate calmly");
  });
});
