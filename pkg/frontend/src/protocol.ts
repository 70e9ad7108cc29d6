// Wire protocol for the call server. Control messages are compact JSON with a
// "type" discriminator; audio travels as binary frames: 1-byte direction tag,
// 4-byte big-endian sequence number, 1-byte final flag, then PCM16 LE samples.
// The tag fixes the sample rate (client mic audio 16 kHz, agent audio 24 kHz).
// Field names here match the JSON on the wire exactly.

export const TAG_UTTERANCE_AUDIO = 0xa1;
export const TAG_AGENT_AUDIO = 0xa2;
export const BINARY_HEADER_BYTES = 6;

export const STT_SAMPLE_RATE = 16000;
export const TTS_SAMPLE_RATE = 24000;

export const EMOTION_LABELS = [
  "Neutral",
  "Happy",
  "Sad",
  "Angry",
  "Surprised",
  "Afraid",
  "Disgusted",
] as const;
export type EmotionLabel = (typeof EMOTION_LABELS)[number];

export const CLOSE_REASONS = [
  "user_ended",
  "time_limit",
  "abuse_limit",
  "transport_lost",
  "server_shutdown",
] as const;
export type CloseReason = (typeof CLOSE_REASONS)[number];

export interface PersonaPayload {
  agent_name: string;
  personality_traits: string[];
  background: string;
  premise: string;
  user_info: Record<string, string>;
  language: string;
  avatar_id: string;
  voice_id: string;
}

export interface FeedbackItem {
  claim: string;
  turn: number;
  quote: string;
}

export interface FeedbackReport {
  goal: string;
  strengths: FeedbackItem[];
  weaknesses: FeedbackItem[];
  actions: string[];
}

// client -> server
export type HelloMsg = {
  type: "hello";
  goal: string;
  persona?: PersonaPayload;
  persona_id?: string;
};
export type UtteranceTextMsg = { type: "utterance_text"; text: string };
export type UtteranceEndMsg = { type: "utterance_end" };
export type EndCallMsg = { type: "end_call" };
export type RequestFeedbackMsg = { type: "request_feedback" };

// server -> client
export type SessionReadyMsg = {
  type: "session_ready";
  session_id: string;
  channels: string[];
  fps: number;
};
export type UserTranscriptMsg = { type: "user_transcript"; text: string };
export type AgentReplyStartMsg = {
  type: "agent_reply_start";
  emotion: EmotionLabel;
  duration_ms: number;
};
export type AgentAnimationChunkMsg = {
  type: "agent_animation_chunk";
  first_frame_index: number;
  frames: number[][];
};
export type AgentReplyEndMsg = { type: "agent_reply_end" };
export type TimeWarningMsg = { type: "time_warning"; remaining_ms: number };
export type SessionClosedMsg = { type: "session_closed"; reason: CloseReason };
export type FeedbackReportMsg = { type: "feedback_report"; report: FeedbackReport };
export type ErrorMsg = { type: "error"; code: string; message: string };

// Binary frames decode to these. The type strings are local (binary frames
// carry no JSON discriminator); they do not collide with any JSON type.
export type UtteranceAudioFrame = {
  type: "utterance_audio";
  seq: number;
  final: boolean;
  samples: Int16Array;
  sample_rate: typeof STT_SAMPLE_RATE;
};
export type AgentAudioFrame = {
  type: "agent_audio";
  seq: number;
  final: boolean;
  samples: Int16Array;
  sample_rate: typeof TTS_SAMPLE_RATE;
};

export type ClientMessage =
  | HelloMsg
  | UtteranceTextMsg
  | UtteranceAudioFrame
  | UtteranceEndMsg
  | EndCallMsg
  | RequestFeedbackMsg;
export type ServerMessage =
  | SessionReadyMsg
  | UserTranscriptMsg
  | AgentReplyStartMsg
  | AgentAudioFrame
  | AgentAnimationChunkMsg
  | AgentReplyEndMsg
  | TimeWarningMsg
  | SessionClosedMsg
  | FeedbackReportMsg
  | ErrorMsg;
export type WireMessage = ClientMessage | ServerMessage;

export class DecodeError extends Error {
  constructor(
    public readonly offset: number,
    public readonly reason: string,
  ) {
    super(`at byte ${offset}: ${reason}`);
    this.name = "DecodeError";
  }
}

// -- encoding -----------------------------------------------------------------

function encodeAudio(tag: number, msg: UtteranceAudioFrame | AgentAudioFrame): ArrayBuffer {
  const out = new ArrayBuffer(BINARY_HEADER_BYTES + msg.samples.length * 2);
  const view = new DataView(out);
  view.setUint8(0, tag);
  view.setUint32(1, msg.seq, false);
  view.setUint8(5, msg.final ? 1 : 0);
  for (let i = 0; i < msg.samples.length; i++) {
    view.setInt16(BINARY_HEADER_BYTES + i * 2, msg.samples[i], true);
  }
  return out;
}

// Payload objects are rebuilt field by field so key order (and therefore the
// serialized bytes) is fixed regardless of how the caller made the object.
export function encodeMessage(msg: WireMessage): string | ArrayBuffer {
  switch (msg.type) {
    case "utterance_audio":
      return encodeAudio(TAG_UTTERANCE_AUDIO, msg);
    case "agent_audio":
      return encodeAudio(TAG_AGENT_AUDIO, msg);
    case "hello": {
      const payload: Record<string, unknown> = { type: "hello", goal: msg.goal };
      if (msg.persona !== undefined) {
        const p = msg.persona;
        payload.persona = {
          agent_name: p.agent_name,
          personality_traits: p.personality_traits,
          background: p.background,
          premise: p.premise,
          user_info: p.user_info,
          language: p.language,
          avatar_id: p.avatar_id,
          voice_id: p.voice_id,
        };
      } else {
        payload.persona_id = msg.persona_id;
      }
      return JSON.stringify(payload);
    }
    case "utterance_text":
      return JSON.stringify({ type: "utterance_text", text: msg.text });
    case "utterance_end":
      return JSON.stringify({ type: "utterance_end" });
    case "end_call":
      return JSON.stringify({ type: "end_call" });
    case "request_feedback":
      return JSON.stringify({ type: "request_feedback" });
    case "session_ready":
      return JSON.stringify({
        type: "session_ready",
        session_id: msg.session_id,
        channels: msg.channels,
        fps: msg.fps,
      });
    case "user_transcript":
      return JSON.stringify({ type: "user_transcript", text: msg.text });
    case "agent_reply_start":
      return JSON.stringify({
        type: "agent_reply_start",
        emotion: msg.emotion,
        duration_ms: msg.duration_ms,
      });
    case "agent_animation_chunk":
      return JSON.stringify({
        type: "agent_animation_chunk",
        first_frame_index: msg.first_frame_index,
        frames: msg.frames,
      });
    case "agent_reply_end":
      return JSON.stringify({ type: "agent_reply_end" });
    case "time_warning":
      return JSON.stringify({ type: "time_warning", remaining_ms: msg.remaining_ms });
    case "session_closed":
      return JSON.stringify({ type: "session_closed", reason: msg.reason });
    case "feedback_report": {
      const r = msg.report;
      const items = (seq: FeedbackItem[]) =>
        seq.map((i) => ({ claim: i.claim, turn: i.turn, quote: i.quote }));
      return JSON.stringify({
        type: "feedback_report",
        report: {
          goal: r.goal,
          strengths: items(r.strengths),
          weaknesses: items(r.weaknesses),
          actions: r.actions,
        },
      });
    }
    case "error":
      return JSON.stringify({ type: "error", code: msg.code, message: msg.message });
  }
}

// -- decoding -----------------------------------------------------------------

type Obj = Record<string, unknown>;

function asString(obj: Obj, key: string): string {
  const v = obj[key];
  if (typeof v !== "string") throw new DecodeError(0, `field ${key} must be a string`);
  return v;
}

function asNumber(obj: Obj, key: string): number {
  const v = obj[key];
  if (typeof v !== "number" || !Number.isFinite(v)) {
    throw new DecodeError(0, `field ${key} must be a number`);
  }
  return v;
}

function decodePersona(raw: unknown): PersonaPayload {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new DecodeError(0, "persona must be an object");
  }
  const obj = raw as Obj;
  const traits = obj.personality_traits;
  if (!Array.isArray(traits)) {
    throw new DecodeError(0, "field personality_traits must be an array");
  }
  const userInfo: Record<string, string> = {};
  const rawInfo = obj.user_info ?? {};
  if (typeof rawInfo !== "object" || rawInfo === null || Array.isArray(rawInfo)) {
    throw new DecodeError(0, "field user_info must be an object");
  }
  for (const [k, v] of Object.entries(rawInfo)) userInfo[k] = String(v);
  return {
    agent_name: asString(obj, "agent_name"),
    personality_traits: traits.map(String),
    background: typeof obj.background === "string" ? obj.background : "",
    premise: asString(obj, "premise"),
    user_info: userInfo,
    language: typeof obj.language === "string" ? obj.language : "en-US",
    avatar_id: typeof obj.avatar_id === "string" ? obj.avatar_id : "default",
    voice_id: typeof obj.voice_id === "string" ? obj.voice_id : "default",
  };
}

function decodeFeedbackItems(raw: unknown, key: string): FeedbackItem[] {
  if (!Array.isArray(raw)) throw new DecodeError(0, `field ${key} must be an array`);
  return raw.map((item) => {
    const obj = item as Obj;
    return {
      claim: asString(obj, "claim"),
      turn: asNumber(obj, "turn"),
      quote: asString(obj, "quote"),
    };
  });
}

function decodeAnimationFrames(raw: unknown): number[][] {
  if (!Array.isArray(raw)) throw new DecodeError(0, "field frames must be an array");
  return raw.map((frame) => {
    if (!Array.isArray(frame)) throw new DecodeError(0, "animation frame must be an array");
    return frame.map((w) => {
      if (typeof w !== "number" || !Number.isFinite(w)) {
        throw new DecodeError(0, "animation weight must be a number");
      }
      return w;
    });
  });
}

function decodeJson(text: string): WireMessage {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch (err) {
    throw new DecodeError(0, `invalid JSON frame: ${err}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new DecodeError(0, "JSON frame is not an object");
  }
  const obj = raw as Obj;
  const kind = obj.type;
  switch (kind) {
    case "hello": {
      const hasPersona = obj.persona !== undefined && obj.persona !== null;
      const hasId = typeof obj.persona_id === "string";
      if (hasPersona === hasId) {
        throw new DecodeError(0, "hello needs exactly one of persona or persona_id");
      }
      return hasPersona
        ? { type: "hello", goal: asString(obj, "goal"), persona: decodePersona(obj.persona) }
        : { type: "hello", goal: asString(obj, "goal"), persona_id: obj.persona_id as string };
    }
    case "utterance_text":
      return { type: "utterance_text", text: asString(obj, "text") };
    case "utterance_end":
      return { type: "utterance_end" };
    case "end_call":
      return { type: "end_call" };
    case "request_feedback":
      return { type: "request_feedback" };
    case "session_ready": {
      const channels = obj.channels;
      if (!Array.isArray(channels)) throw new DecodeError(0, "field channels must be an array");
      return {
        type: "session_ready",
        session_id: asString(obj, "session_id"),
        channels: channels.map(String),
        fps: asNumber(obj, "fps"),
      };
    }
    case "user_transcript":
      return { type: "user_transcript", text: asString(obj, "text") };
    case "agent_reply_start": {
      const emotion = asString(obj, "emotion");
      if (!(EMOTION_LABELS as readonly string[]).includes(emotion)) {
        throw new DecodeError(0, `unknown emotion label ${JSON.stringify(emotion)}`);
      }
      return {
        type: "agent_reply_start",
        emotion: emotion as EmotionLabel,
        duration_ms: asNumber(obj, "duration_ms"),
      };
    }
    case "agent_animation_chunk":
      return {
        type: "agent_animation_chunk",
        first_frame_index: asNumber(obj, "first_frame_index"),
        frames: decodeAnimationFrames(obj.frames),
      };
    case "agent_reply_end":
      return { type: "agent_reply_end" };
    case "time_warning":
      return { type: "time_warning", remaining_ms: asNumber(obj, "remaining_ms") };
    case "session_closed": {
      const reason = asString(obj, "reason");
      if (!(CLOSE_REASONS as readonly string[]).includes(reason)) {
        throw new DecodeError(0, `unknown close reason ${JSON.stringify(reason)}`);
      }
      return { type: "session_closed", reason: reason as CloseReason };
    }
    case "feedback_report": {
      const raw = obj.report;
      if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
        throw new DecodeError(0, "field report must be an object");
      }
      const rep = raw as Obj;
      const actions = rep.actions;
      if (!Array.isArray(actions)) throw new DecodeError(0, "field actions must be an array");
      return {
        type: "feedback_report",
        report: {
          goal: asString(rep, "goal"),
          strengths: decodeFeedbackItems(rep.strengths, "strengths"),
          weaknesses: decodeFeedbackItems(rep.weaknesses, "weaknesses"),
          actions: actions.map(String),
        },
      };
    }
    case "error":
      return { type: "error", code: asString(obj, "code"), message: asString(obj, "message") };
    default:
      throw new DecodeError(0, `unknown message type ${JSON.stringify(kind)}`);
  }
}

function decodeAudio(bytes: Uint8Array): WireMessage {
  if (bytes.length < BINARY_HEADER_BYTES) {
    throw new DecodeError(bytes.length, "truncated binary header");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const tag = view.getUint8(0);
  const seq = view.getUint32(1, false);
  const finalByte = view.getUint8(5);
  if (finalByte !== 0 && finalByte !== 1) {
    throw new DecodeError(5, `final flag must be 0 or 1, got ${finalByte}`);
  }
  const payloadBytes = bytes.length - BINARY_HEADER_BYTES;
  if (payloadBytes % 2 !== 0) {
    throw new DecodeError(bytes.length, "odd PCM16 payload length");
  }
  const samples = new Int16Array(payloadBytes / 2);
  for (let i = 0; i < samples.length; i++) {
    samples[i] = view.getInt16(BINARY_HEADER_BYTES + i * 2, true);
  }
  const final = finalByte === 1;
  if (tag === TAG_UTTERANCE_AUDIO) {
    return { type: "utterance_audio", seq, final, samples, sample_rate: STT_SAMPLE_RATE };
  }
  return { type: "agent_audio", seq, final, samples, sample_rate: TTS_SAMPLE_RATE };
}

export function decodeMessage(data: string | ArrayBuffer | Uint8Array): WireMessage {
  if (typeof data === "string") {
    if (data.length === 0) throw new DecodeError(0, "empty frame");
    return decodeJson(data);
  }
  const bytes = data instanceof Uint8Array ? data : new Uint8Array(data);
  if (bytes.length === 0) throw new DecodeError(0, "empty frame");
  const first = bytes[0];
  if (first === 0x7b) {
    return decodeJson(new TextDecoder().decode(bytes));
  }
  if (first === TAG_UTTERANCE_AUDIO || first === TAG_AGENT_AUDIO) {
    return decodeAudio(bytes);
  }
  throw new DecodeError(0, `unknown frame tag 0x${first.toString(16).padStart(2, "0")}`);
}
