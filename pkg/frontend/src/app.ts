// DOM wiring for the call page. All protocol, sync, and state logic lives in
// the other modules; this file only moves values between them and the page.

import { MicCapture, PcmPlayback } from "./audio.js";
import { CallConnection, TurnInFlightError } from "./connection.js";
import { FaceRenderer } from "./face.js";
import { checkPersonaForm, SUPPORTED_LANGUAGES } from "./persona.js";
import { ReplyPlayer } from "./player.js";
import type { PersonaPayload, ServerMessage } from "./protocol.js";
import { CallView, feedbackPanelLines } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function defaultServerUrl(): string {
  const proto = location.protocol === "https:" ? "wss" : "ws";
  const host = location.hostname || "127.0.0.1";
  return `${proto}://${host}:8765`;
}

class App {
  private view = new CallView();
  private conn: CallConnection | null = null;
  private player: ReplyPlayer | null = null;
  private mic: MicCapture | null = null;
  private micSeq = 0;
  private face: FaceRenderer;
  private channels: string[] = [];

  private form = el<HTMLFormElement>("connect-form");
  private urlInput = el<HTMLInputElement>("server-url");
  private personaSelect = el<HTMLSelectElement>("persona-select");
  private customFields = el<HTMLDivElement>("custom-persona");
  private goalInput = el<HTMLInputElement>("goal");
  private formErrors = el<HTMLDivElement>("form-errors");
  private connectPane = el<HTMLDivElement>("connect-pane");
  private callPane = el<HTMLDivElement>("call-pane");
  private banner = el<HTMLDivElement>("banner");
  private noticesBox = el<HTMLDivElement>("notices");
  private transcriptBox = el<HTMLDivElement>("transcript");
  private textInput = el<HTMLInputElement>("turn-text");
  private sendButton = el<HTMLButtonElement>("send");
  private micButton = el<HTMLButtonElement>("mic");
  private endButton = el<HTMLButtonElement>("end-call");
  private feedbackButton = el<HTMLButtonElement>("request-feedback");
  private feedbackBox = el<HTMLDivElement>("feedback");
  private statusLine = el<HTMLDivElement>("status-line");

  constructor() {
    const canvas = el<HTMLCanvasElement>("face");
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.face = new FaceRenderer(ctx, canvas.width, canvas.height);

    this.urlInput.value = defaultServerUrl();
    for (const tag of SUPPORTED_LANGUAGES) {
      const option = document.createElement("option");
      option.value = tag;
      option.textContent = tag;
      el<HTMLSelectElement>("p-language").appendChild(option);
    }

    this.personaSelect.onchange = () => {
      this.customFields.hidden = this.personaSelect.value !== "custom";
    };
    this.form.onsubmit = (ev) => {
      ev.preventDefault();
      void this.connect();
    };
    this.sendButton.onclick = () => this.sendText();
    this.textInput.onkeydown = (ev) => {
      if (ev.key === "Enter") this.sendText();
    };
    this.micButton.onclick = () => void this.toggleMic();
    this.endButton.onclick = () => this.conn?.endCall();
    this.feedbackButton.onclick = () => this.conn?.requestFeedback();

    const loop = () => {
      this.player?.tick();
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
    this.render();
  }

  private customPersona(): PersonaPayload {
    const traits = el<HTMLInputElement>("p-traits")
      .value.split(",")
      .map((t) => t.trim())
      .filter((t) => t !== "");
    return {
      agent_name: el<HTMLInputElement>("p-name").value,
      personality_traits: traits,
      background: el<HTMLInputElement>("p-background").value,
      premise: el<HTMLInputElement>("p-premise").value,
      user_info: {},
      language: el<HTMLSelectElement>("p-language").value,
      avatar_id: "default",
      voice_id: "default",
    };
  }

  private async connect(): Promise<void> {
    this.formErrors.textContent = "";
    const choice = this.personaSelect.value;
    let hello: { goal: string; personaId?: string; persona?: PersonaPayload };
    if (choice === "custom") {
      const persona = this.customPersona();
      const errors = checkPersonaForm(persona);
      if (errors.length > 0) {
        this.formErrors.textContent = errors.join("; ");
        return;
      }
      hello = { goal: this.goalInput.value, persona };
    } else {
      hello = { goal: this.goalInput.value, personaId: choice };
    }

    let conn: CallConnection;
    try {
      conn = CallConnection.open(this.urlInput.value);
    } catch (err) {
      this.formErrors.textContent = `cannot connect: ${err}`;
      return;
    }
    conn.onEvent = (msg) => this.handle(msg);
    conn.onClose = () => {
      if (this.view.status !== "closed") {
        this.view.apply({ type: "session_closed", reason: "transport_lost" });
      }
      this.render();
    };

    const audioCtx = new AudioContext();
    const player = new ReplyPlayer(new PcmPlayback(audioCtx));
    player.onFrame = (_index, weights) => this.face.render(this.channels, weights);

    try {
      const ready = await conn.hello(hello);
      this.channels = ready.channels;
      player.setFps(ready.fps);
    } catch (err) {
      this.formErrors.textContent = `connection failed: ${err}`;
      conn.close();
      return;
    }

    this.conn = conn;
    this.player = player;
    this.connectPane.hidden = true;
    this.callPane.hidden = false;
    this.render();
  }

  private handle(msg: ServerMessage): void {
    this.view.apply(msg);
    switch (msg.type) {
      case "agent_reply_start":
        this.player?.beginReply(msg.duration_ms);
        break;
      case "agent_audio":
        this.player?.addAudio(msg.samples, msg.sample_rate);
        break;
      case "agent_animation_chunk":
        this.player?.addFrames(msg.first_frame_index, msg.frames);
        break;
      case "agent_reply_end":
        this.player?.endReplyStream();
        break;
      case "session_closed":
        this.stopMic();
        break;
      default:
        break;
    }
    this.render();
  }

  private sendText(): void {
    const text = this.textInput.value.trim();
    if (text === "" || !this.conn || !this.view.inputEnabled) return;
    try {
      this.conn.sendTurnText(text);
    } catch (err) {
      if (err instanceof TurnInFlightError) return;
      throw err;
    }
    this.view.noteTurnSent();
    this.textInput.value = "";
    this.render();
  }

  private async toggleMic(): Promise<void> {
    if (this.mic?.running) {
      this.stopMic();
      if (this.conn && this.view.inputEnabled) {
        this.conn.endUtterance();
        this.view.noteTurnSent();
      }
      this.render();
      return;
    }
    if (!this.conn || !this.view.inputEnabled) return;
    this.micSeq = 0;
    this.mic = new MicCapture((samples) => {
      if (this.conn && !this.conn.turnInFlight) {
        this.conn.sendUtteranceAudio(samples, this.micSeq++, false);
      }
    });
    try {
      await this.mic.start();
      this.micButton.textContent = "Stop & send";
    } catch (err) {
      this.view.notices.push({ code: "mic", message: `microphone unavailable: ${err}` });
      this.mic = null;
      this.render();
    }
  }

  private stopMic(): void {
    this.mic?.stop();
    this.mic = null;
    this.micButton.textContent = "Speak";
  }

  private render(): void {
    const view = this.view;

    this.banner.hidden = view.banner === null;
    this.banner.textContent = view.banner ?? "";

    this.statusLine.textContent =
      view.status === "closed" ? (view.closeText ?? "Call ended.") : "";

    this.noticesBox.replaceChildren(
      ...view.notices.map((notice, i) => {
        const row = document.createElement("div");
        row.className = "notice";
        row.textContent = `${notice.code}: ${notice.message}`;
        const dismiss = document.createElement("button");
        dismiss.textContent = "dismiss";
        dismiss.onclick = () => {
          view.dismissNotice(i);
          this.render();
        };
        row.appendChild(dismiss);
        return row;
      }),
    );

    this.transcriptBox.replaceChildren(
      ...view.transcript.map((entry) => {
        const row = document.createElement("div");
        row.className = `turn ${entry.speaker}`;
        if (entry.speaker === "user") {
          row.textContent = `You: ${entry.text}`;
        } else {
          row.textContent = `Agent spoke (${((entry.durationMs ?? 0) / 1000).toFixed(1)} s)`;
          const badge = document.createElement("span");
          badge.className = "emotion";
          badge.textContent = entry.emotion ?? "";
          row.appendChild(badge);
        }
        return row;
      }),
    );

    const enabled = view.inputEnabled;
    this.textInput.disabled = !enabled;
    this.sendButton.disabled = !enabled;
    this.micButton.disabled = !enabled && !this.mic?.running;
    this.endButton.disabled = view.status !== "active";
    this.feedbackButton.hidden = !view.feedbackAvailable;

    if (view.feedback) {
      this.feedbackBox.hidden = false;
      this.feedbackBox.replaceChildren(
        ...feedbackPanelLines(view.feedback).map((line) => {
          const row = document.createElement("div");
          row.textContent = line;
          return row;
        }),
      );
    } else {
      this.feedbackBox.hidden = true;
    }
  }
}

new App();
