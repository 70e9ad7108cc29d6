// Stylized 2D face driven by named blendshape weights. Only channels with a
// mapped deformation move the drawing; everything else is accepted and
// ignored, so any weight vector in [0,1]^N renders without error.

export interface Canvas2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  lineCap: CanvasLineCap;
  clearRect(x: number, y: number, w: number, h: number): void;
  save(): void;
  restore(): void;
  beginPath(): void;
  ellipse(
    x: number,
    y: number,
    rx: number,
    ry: number,
    rotation: number,
    start: number,
    end: number,
  ): void;
  arc(x: number, y: number, r: number, start: number, end: number): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  quadraticCurveTo(cx: number, cy: number, x: number, y: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
}

const SKIN = "#f2c9a0";
const OUTLINE = "#5b4233";
const MOUTH = "#a54242";
const IRIS = "#3f6fae";

function clamp01(value: number): number {
  if (!Number.isFinite(value)) return 0;
  return Math.max(0, Math.min(1, value));
}

export class FaceRenderer {
  constructor(
    private readonly ctx: Canvas2DLike,
    private readonly width: number,
    private readonly height: number,
  ) {}

  render(channels: readonly string[], weights: ArrayLike<number>): void {
    const w = new Map<string, number>();
    for (let i = 0; i < channels.length && i < weights.length; i++) {
      w.set(channels[i], clamp01(weights[i]));
    }
    const get = (name: string) => w.get(name) ?? 0;

    const ctx = this.ctx;
    const cx = this.width / 2;
    const cy = this.height / 2;
    const headR = Math.min(this.width, this.height) * 0.38;

    ctx.clearRect(0, 0, this.width, this.height);
    ctx.save();

    const puff = get("cheekPuff");
    ctx.fillStyle = SKIN;
    ctx.strokeStyle = OUTLINE;
    ctx.lineWidth = headR * 0.04;
    ctx.beginPath();
    ctx.ellipse(cx, cy, headR * (1 + 0.08 * puff), headR * 1.08, 0, 0, Math.PI * 2);
    ctx.fill();
    ctx.stroke();

    this.drawEye(ctx, cx - headR * 0.38, cy - headR * 0.18, headR, {
      blink: get("eyeBlinkLeft"),
      wide: get("eyeWideLeft"),
      squint: get("eyeSquintLeft"),
      lookX: get("eyeLookInLeft") - get("eyeLookOutLeft"),
      lookY: get("eyeLookDownLeft") - get("eyeLookUpLeft"),
    });
    this.drawEye(ctx, cx + headR * 0.38, cy - headR * 0.18, headR, {
      blink: get("eyeBlinkRight"),
      wide: get("eyeWideRight"),
      squint: get("eyeSquintRight"),
      lookX: get("eyeLookOutRight") - get("eyeLookInRight"),
      lookY: get("eyeLookDownRight") - get("eyeLookUpRight"),
    });

    this.drawBrow(ctx, cx - headR * 0.38, cy - headR * 0.42, headR, {
      down: get("browDownLeft"),
      innerUp: get("browInnerUp"),
      outerUp: get("browOuterUpLeft"),
      innerSide: 1,
    });
    this.drawBrow(ctx, cx + headR * 0.38, cy - headR * 0.42, headR, {
      down: get("browDownRight"),
      innerUp: get("browInnerUp"),
      outerUp: get("browOuterUpRight"),
      innerSide: -1,
    });

    const sneer = Math.max(get("noseSneerLeft"), get("noseSneerRight"));
    ctx.strokeStyle = OUTLINE;
    ctx.lineWidth = headR * 0.035;
    ctx.lineCap = "round";
    ctx.beginPath();
    ctx.moveTo(cx, cy - headR * 0.05);
    ctx.quadraticCurveTo(
      cx + headR * 0.06,
      cy + headR * (0.12 - 0.04 * sneer),
      cx - headR * 0.03,
      cy + headR * (0.16 - 0.06 * sneer),
    );
    ctx.stroke();

    this.drawMouth(ctx, cx, cy + headR * 0.45, headR, {
      open: get("jawOpen"),
      smile: (get("mouthSmileLeft") + get("mouthSmileRight")) / 2,
      frown: (get("mouthFrownLeft") + get("mouthFrownRight")) / 2,
      narrow: Math.max(get("mouthPucker"), get("mouthFunnel")),
      stretch: (get("mouthStretchLeft") + get("mouthStretchRight")) / 2,
      press: (get("mouthPressLeft") + get("mouthPressRight")) / 2,
      shift: get("mouthRight") - get("mouthLeft"),
      tongue: get("tongueOut"),
    });

    ctx.restore();
  }

  private drawEye(
    ctx: Canvas2DLike,
    x: number,
    y: number,
    headR: number,
    s: { blink: number; wide: number; squint: number; lookX: number; lookY: number },
  ): void {
    // Blink wins over wide; squint narrows without fully closing.
    const openness = Math.max(0.05, (1 - s.blink) * (1 - 0.5 * s.squint) * (1 + 0.4 * s.wide));
    const rx = headR * 0.16;
    const ry = headR * 0.1 * Math.min(openness, 1.6);

    ctx.fillStyle = "#ffffff";
    ctx.strokeStyle = OUTLINE;
    ctx.lineWidth = headR * 0.03;
    ctx.beginPath();
    ctx.ellipse(x, y, rx, ry, 0, 0, Math.PI * 2);
    ctx.fill();
    ctx.stroke();

    if (openness > 0.15) {
      const px = x + rx * 0.4 * Math.max(-1, Math.min(1, s.lookX));
      const py = y + ry * 0.5 * Math.max(-1, Math.min(1, s.lookY));
      ctx.fillStyle = IRIS;
      ctx.beginPath();
      ctx.arc(px, py, Math.min(rx, ry) * 0.55, 0, Math.PI * 2);
      ctx.fill();
    }
  }

  private drawBrow(
    ctx: Canvas2DLike,
    x: number,
    y: number,
    headR: number,
    s: { down: number; innerUp: number; outerUp: number; innerSide: number },
  ): void {
    const halfW = headR * 0.18;
    const lift = headR * 0.1;
    const innerY = y + lift * (s.down - s.innerUp);
    const outerY = y + lift * (0.6 * s.down - s.outerUp);

    ctx.strokeStyle = OUTLINE;
    ctx.lineWidth = headR * 0.05;
    ctx.lineCap = "round";
    ctx.beginPath();
    ctx.moveTo(x + s.innerSide * halfW, innerY);
    ctx.quadraticCurveTo(x, Math.min(innerY, outerY) - lift * 0.3, x - s.innerSide * halfW, outerY);
    ctx.stroke();
  }

  private drawMouth(
    ctx: Canvas2DLike,
    x: number,
    y: number,
    headR: number,
    s: {
      open: number;
      smile: number;
      frown: number;
      narrow: number;
      stretch: number;
      press: number;
      shift: number;
      tongue: number;
    },
  ): void {
    const mx = x + headR * 0.1 * s.shift;
    const halfW = headR * 0.32 * (1 - 0.45 * s.narrow) * (1 + 0.25 * s.stretch);
    const cornerY = y + headR * 0.12 * (s.frown - s.smile);
    const gap = headR * (0.03 + 0.4 * s.open) * (1 - 0.7 * s.press);

    ctx.fillStyle = MOUTH;
    ctx.strokeStyle = OUTLINE;
    ctx.lineWidth = headR * 0.035;
    ctx.beginPath();
    ctx.moveTo(mx - halfW, cornerY);
    ctx.quadraticCurveTo(mx, y - gap / 2, mx + halfW, cornerY);
    ctx.quadraticCurveTo(mx, y + gap, mx - halfW, cornerY);
    ctx.closePath();
    ctx.fill();
    ctx.stroke();

    if (s.tongue > 0.05 && s.open > 0.1) {
      ctx.fillStyle = "#d9777f";
      ctx.beginPath();
      ctx.ellipse(
        mx,
        y + gap * 0.7,
        halfW * 0.35,
        headR * 0.1 * s.tongue,
        0,
        0,
        Math.PI * 2,
      );
      ctx.fill();
    }
  }
}
