// Session connection: owns the socket, tracks the half-duplex turn state, and
// hands decoded server messages to the app in arrival order.
//
// The turn guard is strict on purpose: transmitting utterance traffic while a
// turn is in flight throws TurnInFlightError instead of silently queueing, so
// a UI bug surfaces as a crash in tests rather than as protocol garbage.

import {
  decodeMessage,
  encodeMessage,
  STT_SAMPLE_RATE,
  type ClientMessage,
  type PersonaPayload,
  type ServerMessage,
  type SessionReadyMsg,
} from "./protocol.js";

export interface SocketLike {
  readonly readyState: number;
  binaryType: string;
  onopen: ((ev: unknown) => void) | null;
  onmessage: ((ev: { data: string | ArrayBuffer | Uint8Array }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  send(data: string | ArrayBuffer): void;
  close(code?: number, reason?: string): void;
}

const SOCKET_CONNECTING = 0;
const SOCKET_OPEN = 1;

export class TurnInFlightError extends Error {
  constructor(what: string) {
    super(`cannot send ${what}: a turn is in flight`);
    this.name = "TurnInFlightError";
  }
}

export class ConnectionClosedError extends Error {
  constructor() {
    super("connection is closed");
    this.name = "ConnectionClosedError";
  }
}

export interface HelloOptions {
  goal?: string;
  personaId?: string;
  persona?: PersonaPayload;
}

export class CallConnection {
  onEvent: (msg: ServerMessage) => void = () => {};
  onClose: () => void = () => {};
  onDecodeError: (err: unknown) => void = (err) => console.error("bad server frame:", err);

  private ready: SessionReadyMsg | null = null;
  private inFlight = false;
  private socketClosed = false;
  private helloSent = false;
  private pendingOpen: Array<() => void> = [];

  constructor(private readonly socket: SocketLike) {
    socket.binaryType = "arraybuffer";
    socket.onopen = () => {
      const waiters = this.pendingOpen;
      this.pendingOpen = [];
      waiters.forEach((resolve) => resolve());
    };
    socket.onmessage = (ev) => this.handleFrame(ev.data);
    socket.onclose = () => {
      this.socketClosed = true;
      this.onClose();
    };
    socket.onerror = () => {};
  }

  static open(url: string): CallConnection {
    return new CallConnection(new WebSocket(url) as unknown as SocketLike);
  }

  get sessionInfo(): SessionReadyMsg | null {
    return this.ready;
  }

  get turnInFlight(): boolean {
    return this.inFlight;
  }

  get isClosed(): boolean {
    return this.socketClosed;
  }

  async hello(opts: HelloOptions): Promise<SessionReadyMsg> {
    if (this.helloSent) throw new Error("hello was already sent");
    this.helloSent = true;
    await this.waitForOpen();

    // Listen before sending so the reply cannot slip past the wrapper.
    const prior = this.onEvent;
    let settle!: {
      resolve: (msg: SessionReadyMsg) => void;
      reject: (err: Error) => void;
    };
    const result = new Promise<SessionReadyMsg>((resolve, reject) => {
      settle = { resolve, reject };
    });
    this.onEvent = (msg) => {
      if (msg.type === "session_ready") {
        this.onEvent = prior;
        settle.resolve(msg);
      } else if (msg.type === "error") {
        this.onEvent = prior;
        settle.reject(new Error(`${msg.code}: ${msg.message}`));
      }
      prior(msg);
    };
    try {
      this.transmit({
        type: "hello",
        goal: opts.goal ?? "",
        ...(opts.persona !== undefined
          ? { persona: opts.persona }
          : { persona_id: opts.personaId }),
      });
    } catch (err) {
      this.onEvent = prior;
      throw err;
    }
    return result;
  }

  sendTurnText(text: string): void {
    this.assertNoTurnInFlight("utterance text");
    this.transmit({ type: "utterance_text", text });
    this.inFlight = true;
  }

  sendUtteranceAudio(samples: Int16Array, seq: number, final: boolean): void {
    this.assertNoTurnInFlight("utterance audio");
    this.transmit({
      type: "utterance_audio",
      seq,
      final,
      samples,
      sample_rate: STT_SAMPLE_RATE,
    });
  }

  endUtterance(): void {
    this.assertNoTurnInFlight("utterance end");
    this.transmit({ type: "utterance_end" });
    this.inFlight = true;
  }

  endCall(): void {
    this.transmit({ type: "end_call" });
  }

  requestFeedback(): void {
    this.transmit({ type: "request_feedback" });
  }

  close(): void {
    if (!this.socketClosed) this.socket.close();
  }

  // The client-side half of the half-duplex rule.
  private assertNoTurnInFlight(what: string): void {
    if (this.inFlight) throw new TurnInFlightError(what);
  }

  private transmit(msg: ClientMessage): void {
    if (this.socketClosed || this.socket.readyState !== SOCKET_OPEN) {
      throw new ConnectionClosedError();
    }
    this.socket.send(encodeMessage(msg));
  }

  private waitForOpen(): Promise<void> {
    if (this.socket.readyState === SOCKET_OPEN) return Promise.resolve();
    if (this.socket.readyState !== SOCKET_CONNECTING) {
      return Promise.reject(new ConnectionClosedError());
    }
    return new Promise((resolve) => this.pendingOpen.push(resolve));
  }

  private handleFrame(data: string | ArrayBuffer | Uint8Array): void {
    let msg: ServerMessage;
    try {
      msg = decodeMessage(data) as ServerMessage;
    } catch (err) {
      this.onDecodeError(err);
      return;
    }
    if (msg.type === "session_ready") {
      this.ready = msg;
    } else if (msg.type === "agent_reply_end" || msg.type === "error") {
      this.inFlight = false;
    } else if (msg.type === "session_closed") {
      this.inFlight = false;
    }
    this.onEvent(msg);
  }
}
