"""Blendshape clips and audio-synchronized animation tracks.

A clip library maps each of the seven emotions to at least one pre-authored
keyframe clip; all clips share one channel list and frame rate. A reply's
animation track is the chosen clip tiled end-to-end to the synthesized
audio's duration, with a short linear crossfade smoothing each loop seam.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .dialogue import EmotionLabel

# Default canonical channel set: the 52 ARKit-style blendshape names, for
# interoperability with common avatar tooling. Libraries may define their own.
ARKIT_CHANNELS: tuple[str, ...] = (
    "eyeBlinkLeft", "eyeLookDownLeft", "eyeLookInLeft", "eyeLookOutLeft",
    "eyeLookUpLeft", "eyeSquintLeft", "eyeWideLeft",
    "eyeBlinkRight", "eyeLookDownRight", "eyeLookInRight", "eyeLookOutRight",
    "eyeLookUpRight", "eyeSquintRight", "eyeWideRight",
    "jawForward", "jawLeft", "jawRight", "jawOpen",
    "mouthClose", "mouthFunnel", "mouthPucker", "mouthLeft", "mouthRight",
    "mouthSmileLeft", "mouthSmileRight", "mouthFrownLeft", "mouthFrownRight",
    "mouthDimpleLeft", "mouthDimpleRight", "mouthStretchLeft", "mouthStretchRight",
    "mouthRollLower", "mouthRollUpper", "mouthShrugLower", "mouthShrugUpper",
    "mouthPressLeft", "mouthPressRight", "mouthLowerDownLeft", "mouthLowerDownRight",
    "mouthUpperUpLeft", "mouthUpperUpRight",
    "browDownLeft", "browDownRight", "browInnerUp",
    "browOuterUpLeft", "browOuterUpRight",
    "cheekPuff", "cheekSquintLeft", "cheekSquintRight",
    "noseSneerLeft", "noseSneerRight", "tongueOut",
)

DEFAULT_FPS = 30
CROSSFADE_MS = 200

# One frame of weights, index-aligned with the library's channel list.
BlendshapeFrame = tuple[float, ...]


class ClipLibraryError(Exception):
    pass


class ParseError(ClipLibraryError):
    def __init__(self, location: str, message: str):
        super().__init__(f"{location}: {message}")
        self.location = location


class MissingEmotion(ClipLibraryError):
    def __init__(self, label: EmotionLabel):
        super().__init__(f"library has no clip for emotion {label.value}")
        self.label = label


class ChannelMismatch(ClipLibraryError):
    def __init__(self, clip_id: str, detail: str):
        super().__init__(f"clip {clip_id}: {detail}")
        self.clip_id = clip_id


class WeightOutOfRange(ClipLibraryError):
    def __init__(self, clip_id: str, frame: int, channel: int, value: float):
        super().__init__(f"clip {clip_id} frame {frame} channel {channel}: weight {value} outside [0, 1]")
        self.clip_id = clip_id
        self.frame = frame
        self.channel = channel


@dataclass(frozen=True)
class BlendshapeClip:
    clip_id: str
    emotion: EmotionLabel
    fps: int
    channels: tuple[str, ...]
    frames: tuple[BlendshapeFrame, ...]

    @property
    def duration_ms(self) -> float:
        return len(self.frames) * 1000.0 / self.fps


@dataclass(frozen=True)
class ClipLibrary:
    channels: tuple[str, ...]
    fps: int
    clips: Mapping[EmotionLabel, tuple[BlendshapeClip, ...]]

    def all_clips(self) -> list[BlendshapeClip]:
        return [clip for group in self.clips.values() for clip in group]


@dataclass(frozen=True)
class AnimationTrack:
    fps: int
    frames: tuple[BlendshapeFrame, ...]
    duration_ms: int


def library_from_json_dict(data: object, source: str = "<memory>") -> ClipLibrary:
    """Validate a parsed library document; loading is all-or-nothing."""
    if not isinstance(data, dict):
        raise ParseError(source, "document must be a JSON object")

    fps = data.get("fps", DEFAULT_FPS)
    if not isinstance(fps, int) or isinstance(fps, bool) or fps <= 0:
        raise ParseError(f"{source}:fps", "fps must be a positive integer")

    channels_raw = data.get("channels", list(ARKIT_CHANNELS))
    if not isinstance(channels_raw, list) or not channels_raw or not all(
        isinstance(c, str) for c in channels_raw
    ):
        raise ParseError(f"{source}:channels", "channels must be a non-empty list of names")
    channels = tuple(channels_raw)

    clips_raw = data.get("clips")
    if not isinstance(clips_raw, list) or not clips_raw:
        raise ParseError(f"{source}:clips", "clips must be a non-empty list")

    by_emotion: dict[EmotionLabel, list[BlendshapeClip]] = {label: [] for label in EmotionLabel}
    for i, entry in enumerate(clips_raw):
        where = f"{source}:clips[{i}]"
        if not isinstance(entry, dict):
            raise ParseError(where, "clip must be an object")
        clip_id = entry.get("clip_id")
        if not isinstance(clip_id, str) or not clip_id:
            raise ParseError(f"{where}.clip_id", "clip_id must be a non-empty string")
        emotion = EmotionLabel.from_text(str(entry.get("emotion", "")))
        if emotion is None:
            raise ParseError(f"{where}.emotion", f"unknown emotion {entry.get('emotion')!r}")
        frames_raw = entry.get("frames")
        if not isinstance(frames_raw, list) or len(frames_raw) < 2:
            raise ParseError(f"{where}.frames", "a clip needs at least 2 frames")
        frames: list[BlendshapeFrame] = []
        for fi, frame in enumerate(frames_raw):
            if not isinstance(frame, list):
                raise ParseError(f"{where}.frames[{fi}]", "frame must be a list of weights")
            if len(frame) != len(channels):
                raise ChannelMismatch(
                    clip_id, f"frame {fi} has {len(frame)} weights, expected {len(channels)}"
                )
            values = []
            for ci, value in enumerate(frame):
                if not isinstance(value, (int, float)) or isinstance(value, bool):
                    raise ParseError(f"{where}.frames[{fi}][{ci}]", "weight must be a number")
                value = float(value)
                if not 0.0 <= value <= 1.0:
                    raise WeightOutOfRange(clip_id, fi, ci, value)
                values.append(value)
            frames.append(tuple(values))
        by_emotion[emotion].append(
            BlendshapeClip(
                clip_id=clip_id,
                emotion=emotion,
                fps=fps,
                channels=channels,
                frames=tuple(frames),
            )
        )

    for label in EmotionLabel:
        if not by_emotion[label]:
            raise MissingEmotion(label)

    return ClipLibrary(
        channels=channels,
        fps=fps,
        clips={label: tuple(group) for label, group in by_emotion.items()},
    )


def load_clip_library(path: str | Path) -> ClipLibrary:
    """Read and fully validate a clip library JSON file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(str(p), f"cannot read library file: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{p}:{exc.lineno}:{exc.colno}", exc.msg) from exc
    return library_from_json_dict(data, source=str(p))


def select_clip(library: ClipLibrary, emotion: EmotionLabel, rng_seed: int) -> BlendshapeClip:
    """Pick uniformly among the emotion's clips, deterministically per seed."""
    candidates = library.clips[emotion]
    if len(candidates) == 1:
        return candidates[0]
    return candidates[random.Random(rng_seed).randrange(len(candidates))]


def frame_count_for(duration_ms: int, fps: int) -> int:
    """ceil(duration_ms / 1000 * fps), computed exactly in integers."""
    return -(-duration_ms * fps // 1000)


def crossfade_window_frames(clip: BlendshapeClip) -> int:
    """Seam window length: min(200 ms, clip_duration / 2), at least one frame."""
    window_ms = min(CROSSFADE_MS, clip.duration_ms / 2)
    frames = round(window_ms * clip.fps / 1000)
    return max(1, min(frames, len(clip.frames) - 1))


def build_animation_track(clip: BlendshapeClip, audio_duration_ms: int) -> AnimationTrack:
    """Tile the clip to exactly cover the audio, crossfading each loop seam.

    Frame i shows clip frame ``i mod F``. When another tile follows, the last
    W window frames of a tile are blended toward the next tile's opening
    frame: ``(1 - a) * tail + a * head`` with ``a = (j + 1) / (W + 1)``
    ramping up through the window. The final tile is truncated at the
    target duration. Pure function; frames outside seam windows share the
    clip's frame tuples.
    """
    if audio_duration_ms <= 0:
        raise ValueError("audio_duration_ms must be positive")
    total = frame_count_for(audio_duration_ms, clip.fps)
    clip_len = len(clip.frames)
    window = crossfade_window_frames(clip)
    head = clip.frames[0]

    frames: list[BlendshapeFrame] = []
    for i in range(total):
        tile, phase = divmod(i, clip_len)
        base = clip.frames[phase]
        seam_follows = (tile + 1) * clip_len < total
        if seam_follows and phase >= clip_len - window:
            j = phase - (clip_len - window)
            alpha = (j + 1) / (window + 1)
            frames.append(
                tuple((1.0 - alpha) * t + alpha * h for t, h in zip(base, head))
            )
        else:
            frames.append(base)
    return AnimationTrack(fps=clip.fps, frames=tuple(frames), duration_ms=audio_duration_ms)
