// Plays one agent reply: audio chunks go to the sink, blendshape frames are
// shown against the sink's playback clock. Frame i belongs at
// reply start + i * (1000 / fps) ms; tick() shows every frame whose slot the
// clock has reached, in order, so a missed tick never drops a frame.

export interface AudioSink {
  enqueue(samples: Int16Array, sampleRate: number): void;
  // Milliseconds of reply audio played so far. Never exceeds what was enqueued.
  positionMs(): number;
  reset(): void;
}

export class ReplyPlayer {
  onFrame: (index: number, weights: number[]) => void = () => {};

  private fps = 30;
  private frames: Array<number[] | undefined> = [];
  private expectedFrames = 0;
  private lastShown = -1;
  private active = false;
  private streamEnded = false;

  constructor(private readonly sink: AudioSink) {}

  setFps(fps: number): void {
    if (!(fps > 0)) throw new Error(`fps must be positive, got ${fps}`);
    this.fps = fps;
  }

  get frameCount(): number {
    return this.expectedFrames;
  }

  get playing(): boolean {
    return this.active;
  }

  beginReply(durationMs: number): void {
    this.sink.reset();
    this.frames = [];
    this.expectedFrames = Math.ceil((durationMs * this.fps) / 1000);
    this.lastShown = -1;
    this.active = true;
    this.streamEnded = false;
  }

  addAudio(samples: Int16Array, sampleRate: number): void {
    if (!this.active) return;
    this.sink.enqueue(samples, sampleRate);
  }

  addFrames(firstIndex: number, frames: number[][]): void {
    if (!this.active) return;
    frames.forEach((weights, i) => {
      this.frames[firstIndex + i] = weights;
    });
  }

  endReplyStream(): void {
    this.streamEnded = true;
  }

  // Poll from the render loop. Returns the number of frames shown this call.
  tick(): number {
    if (!this.active) return 0;
    const pos = this.sink.positionMs();
    let due = Math.floor((pos * this.fps) / 1000);
    if (due > this.expectedFrames - 1) due = this.expectedFrames - 1;
    let shown = 0;
    while (this.lastShown < due) {
      const next = this.lastShown + 1;
      const weights = this.frames[next];
      if (weights === undefined) break;
      this.onFrame(next, weights);
      this.lastShown = next;
      shown += 1;
    }
    if (this.streamEnded && this.lastShown === this.expectedFrames - 1) {
      this.active = false;
    }
    return shown;
  }
}
