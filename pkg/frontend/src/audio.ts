// PCM helpers plus the AudioContext-backed playback sink and mic capture.
// The conversions are pure so they can be tested off-browser.

import type { AudioSink } from "./player.js";
import { STT_SAMPLE_RATE } from "./protocol.js";

export function pcm16ToFloat32(samples: Int16Array): Float32Array<ArrayBuffer> {
  const out = new Float32Array(samples.length);
  for (let i = 0; i < samples.length; i++) {
    out[i] = samples[i] / 32768;
  }
  return out;
}

export function float32ToPcm16(samples: Float32Array): Int16Array<ArrayBuffer> {
  const out = new Int16Array(samples.length);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    out[i] = Math.round(clamped < 0 ? clamped * 32768 : clamped * 32767);
  }
  return out;
}

// Linear-interpolation resampler; good enough for speech into the recognizer.
export function resampleLinear(
  samples: Float32Array<ArrayBuffer>,
  fromRate: number,
  toRate: number,
): Float32Array<ArrayBuffer> {
  if (fromRate === toRate || samples.length === 0) return samples;
  const outLength = Math.max(1, Math.round((samples.length * toRate) / fromRate));
  const out = new Float32Array(outLength);
  const step = (samples.length - 1) / Math.max(1, outLength - 1);
  for (let i = 0; i < outLength; i++) {
    const t = i * step;
    const lo = Math.floor(t);
    const hi = Math.min(samples.length - 1, lo + 1);
    const frac = t - lo;
    out[i] = samples[lo] * (1 - frac) + samples[hi] * frac;
  }
  return out;
}

// Schedules PCM buffers back to back on an AudioContext. positionMs() is the
// context clock relative to the first buffer's start, capped at the total
// enqueued so animation never runs ahead of audio that does not exist yet.
export class PcmPlayback implements AudioSink {
  private anchorSec: number | null = null;
  private cursorSec = 0;
  private enqueuedMs = 0;
  private sources: AudioBufferSourceNode[] = [];

  constructor(private readonly ctx: AudioContext) {}

  enqueue(samples: Int16Array, sampleRate: number): void {
    if (samples.length === 0) return;
    const buffer = this.ctx.createBuffer(1, samples.length, sampleRate);
    buffer.copyToChannel(pcm16ToFloat32(samples), 0);

    const now = this.ctx.currentTime;
    const startAt = Math.max(this.cursorSec, now + 0.02);
    if (this.anchorSec === null) this.anchorSec = startAt;

    const source = this.ctx.createBufferSource();
    source.buffer = buffer;
    source.connect(this.ctx.destination);
    source.onended = () => {
      this.sources = this.sources.filter((s) => s !== source);
    };
    source.start(startAt);
    this.sources.push(source);

    this.cursorSec = startAt + buffer.duration;
    this.enqueuedMs += (samples.length * 1000) / sampleRate;
  }

  positionMs(): number {
    if (this.anchorSec === null) return 0;
    const played = (this.ctx.currentTime - this.anchorSec) * 1000;
    return Math.max(0, Math.min(played, this.enqueuedMs));
  }

  reset(): void {
    for (const source of this.sources) {
      try {
        source.stop();
      } catch {
        // already stopped
      }
    }
    this.sources = [];
    this.anchorSec = null;
    this.cursorSec = 0;
    this.enqueuedMs = 0;
  }
}

// Microphone capture: downsamples to 16 kHz PCM16 chunks for the wire.
// Optional path; the UI works without audio hardware.
export class MicCapture {
  private ctx: AudioContext | null = null;
  private stream: MediaStream | null = null;
  private processor: ScriptProcessorNode | null = null;

  constructor(private readonly onChunk: (samples: Int16Array) => void) {}

  get running(): boolean {
    return this.processor !== null;
  }

  async start(): Promise<void> {
    if (this.processor) return;
    this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    this.ctx = new AudioContext();
    const source = this.ctx.createMediaStreamSource(this.stream);
    const processor = this.ctx.createScriptProcessor(4096, 1, 1);
    const inputRate = this.ctx.sampleRate;
    processor.onaudioprocess = (ev) => {
      const mono = ev.inputBuffer.getChannelData(0);
      const resampled = resampleLinear(new Float32Array(mono), inputRate, STT_SAMPLE_RATE);
      this.onChunk(float32ToPcm16(resampled));
    };
    source.connect(processor);
    processor.connect(this.ctx.destination);
    this.processor = processor;
  }

  stop(): void {
    this.processor?.disconnect();
    this.processor = null;
    this.stream?.getTracks().forEach((track) => track.stop());
    this.stream = null;
    void this.ctx?.close();
    this.ctx = null;
  }
}
