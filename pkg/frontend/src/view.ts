// Call screen state, kept apart from the DOM so it can be exercised headlessly.
// apply() folds every server message into the state; the DOM layer just
// re-renders whatever is here after each event.

import type {
  CloseReason,
  EmotionLabel,
  FeedbackReport,
  ServerMessage,
} from "./protocol.js";

export type CallStatus = "connecting" | "active" | "closed";

export interface TranscriptEntry {
  speaker: "user" | "agent";
  text: string;
  // Emotion badges belong to agent turns only.
  emotion?: EmotionLabel;
  durationMs?: number;
}

export interface Notice {
  code: string;
  message: string;
}

const CLOSE_REASON_TEXT: Record<CloseReason, string> = {
  user_ended: "You ended the call.",
  time_limit: "The call reached its time limit.",
  abuse_limit: "The call was ended after repeated abusive messages.",
  transport_lost: "The connection was lost.",
  server_shutdown: "The server shut down.",
};

export function formatRemaining(remainingMs: number): string {
  const totalSeconds = Math.max(0, Math.round(remainingMs / 1000));
  const minutes = Math.floor(totalSeconds / 60);
  const seconds = totalSeconds % 60;
  return `${minutes}:${String(seconds).padStart(2, "0")} remaining`;
}

export class CallView {
  status: CallStatus = "connecting";
  transcript: TranscriptEntry[] = [];
  banner: string | null = null;
  notices: Notice[] = [];
  feedback: FeedbackReport | null = null;
  closeReason: CloseReason | null = null;
  closeText: string | null = null;
  turnInFlight = false;

  get inputEnabled(): boolean {
    return this.status === "active" && !this.turnInFlight;
  }

  get feedbackAvailable(): boolean {
    return this.status === "closed" && this.feedback === null;
  }

  noteTurnSent(): void {
    this.turnInFlight = true;
  }

  dismissNotice(index: number): void {
    this.notices.splice(index, 1);
  }

  apply(msg: ServerMessage): void {
    switch (msg.type) {
      case "session_ready":
        this.status = "active";
        break;
      case "user_transcript":
        this.transcript.push({ speaker: "user", text: msg.text });
        break;
      case "agent_reply_start":
        this.transcript.push({
          speaker: "agent",
          text: "",
          emotion: msg.emotion,
          durationMs: msg.duration_ms,
        });
        break;
      case "agent_audio":
      case "agent_animation_chunk":
        break;
      case "agent_reply_end":
        this.turnInFlight = false;
        break;
      case "time_warning":
        this.banner = formatRemaining(msg.remaining_ms);
        break;
      case "session_closed":
        this.status = "closed";
        this.turnInFlight = false;
        this.closeReason = msg.reason;
        this.closeText = CLOSE_REASON_TEXT[msg.reason];
        break;
      case "feedback_report":
        this.feedback = msg.report;
        break;
      case "error":
        this.turnInFlight = false;
        this.notices.push({ code: msg.code, message: msg.message });
        break;
    }
  }
}

// Text form of the feedback panel: one line per heading, claim, or quote.
// Every evidence quote from the report appears verbatim.
export function feedbackPanelLines(report: FeedbackReport): string[] {
  const lines: string[] = [`Goal: ${report.goal}`];
  lines.push("Strengths:");
  for (const item of report.strengths) {
    lines.push(`- ${item.claim}`);
    lines.push(`  (turn ${item.turn}: "${item.quote}")`);
  }
  lines.push("Weaknesses:");
  for (const item of report.weaknesses) {
    lines.push(`- ${item.claim}`);
    lines.push(`  (turn ${item.turn}: "${item.quote}")`);
  }
  lines.push("Next steps:");
  for (const action of report.actions) {
    lines.push(`- ${action}`);
  }
  return lines;
}
