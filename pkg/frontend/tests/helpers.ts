import type { SocketLike } from "../src/connection.js";
import type { Canvas2DLike } from "../src/face.js";
import type { AudioSink } from "../src/player.js";

// Small deterministic PRNG so property-style tests are reproducible.
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function randomInt(rng: () => number, lo: number, hi: number): number {
  return lo + Math.floor(rng() * (hi - lo + 1));
}

export class FakeSocket implements SocketLike {
  readyState = 0;
  binaryType = "blob";
  onopen: ((ev: unknown) => void) | null = null;
  onmessage: ((ev: { data: string | ArrayBuffer | Uint8Array }) => void) | null = null;
  onclose: ((ev: unknown) => void) | null = null;
  onerror: ((ev: unknown) => void) | null = null;
  sent: Array<string | ArrayBuffer> = [];
  closed = false;

  send(data: string | ArrayBuffer): void {
    if (this.readyState !== 1) throw new Error("socket not open");
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.readyState = 3;
    this.onclose?.({});
  }

  emitOpen(): void {
    this.readyState = 1;
    this.onopen?.({});
  }

  emitMessage(data: string | ArrayBuffer | Uint8Array): void {
    this.onmessage?.({ data });
  }

  emitClose(): void {
    this.readyState = 3;
    this.onclose?.({});
  }
}

// Records every drawing call; numeric arguments must stay finite.
export class StubContext implements Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern = "";
  strokeStyle: string | CanvasGradient | CanvasPattern = "";
  lineWidth = 1;
  lineCap: CanvasLineCap = "butt";
  ops: Array<[string, ...number[]]> = [];

  private record(name: string, ...args: number[]): void {
    for (const value of args) {
      if (!Number.isFinite(value)) {
        throw new Error(`${name} got a non-finite argument: ${args.join(", ")}`);
      }
    }
    this.ops.push([name, ...args]);
  }

  clearRect(x: number, y: number, w: number, h: number): void {
    this.record("clearRect", x, y, w, h);
  }
  save(): void {
    this.record("save");
  }
  restore(): void {
    this.record("restore");
  }
  beginPath(): void {
    this.record("beginPath");
  }
  ellipse(x: number, y: number, rx: number, ry: number, rot: number, s: number, e: number): void {
    this.record("ellipse", x, y, rx, ry, rot, s, e);
    if (rx < 0 || ry < 0) throw new Error("negative ellipse radius");
  }
  arc(x: number, y: number, r: number, s: number, e: number): void {
    this.record("arc", x, y, r, s, e);
    if (r < 0) throw new Error("negative arc radius");
  }
  moveTo(x: number, y: number): void {
    this.record("moveTo", x, y);
  }
  lineTo(x: number, y: number): void {
    this.record("lineTo", x, y);
  }
  quadraticCurveTo(cx: number, cy: number, x: number, y: number): void {
    this.record("quadraticCurveTo", cx, cy, x, y);
  }
  closePath(): void {
    this.record("closePath");
  }
  fill(): void {
    this.record("fill");
  }
  stroke(): void {
    this.record("stroke");
  }
}

// Audio clock under manual control. The position advances only as far as the
// audio actually enqueued, like a real output device.
export class FakeSink implements AudioSink {
  enqueuedMs = 0;
  private clockMs = 0;
  resets = 0;

  enqueue(samples: Int16Array, sampleRate: number): void {
    this.enqueuedMs += (samples.length * 1000) / sampleRate;
  }

  advance(ms: number): void {
    this.clockMs += ms;
  }

  positionMs(): number {
    return Math.min(this.clockMs, this.enqueuedMs);
  }

  reset(): void {
    this.enqueuedMs = 0;
    this.clockMs = 0;
    this.resets += 1;
  }
}
