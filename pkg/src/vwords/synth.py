"""Synthetic fixture corpus: planted-face frames, parameterized lip scenes and
scripted word clips. Shared by the test-suite and the `synth` CLI subcommand."""

from __future__ import annotations

import numpy as np

from .face import TEMPLATE_SCALE

# Kovac-rule-satisfying skin tones, light to dark.
SKIN_TONES = [
    (216, 168, 128),
    (196, 144, 108),
    (176, 124, 96),
    (150, 104, 80),
]
# Matching lip tones: redder and darker than the paired skin.
LIP_TONES = [
    (182, 74, 84),
    (170, 62, 74),
    (158, 58, 68),
    (138, 52, 60),
]
FEATURE_COLOUR = (52, 40, 34)

FACE_SIZE = 13 * TEMPLATE_SCALE  # 104

# Template cell rectangles (row0, row1, col0, col1) of the dark facial blobs.
_EYE_L = (1, 4, 1, 5)
_EYE_R = (1, 4, 8, 12)
_NOSE = (7, 9, 5, 8)
_MOUTH = (10, 12, 3, 10)


def _cells_to_px(cells):
    r0, r1, c0, c1 = cells
    s = TEMPLATE_SCALE
    return r0 * s, r1 * s, c0 * s, c1 * s


def face_patch(
    skin=SKIN_TONES[0],
    feature=FEATURE_COLOUR,
    mouth_colour=None,
    mouth_axes: tuple[float, float] | None = None,
) -> np.ndarray:
    """A 104x104 face: skin with dark eye/nose blobs at template geometry.

    By default the mouth is a dark bar like the other features; passing
    mouth_colour/mouth_axes draws a lip-coloured ellipse centred in the mouth
    area instead (used by the scripted word clips).
    """
    patch = np.empty((FACE_SIZE, FACE_SIZE, 3), dtype=np.uint8)
    patch[:] = skin
    for cells in (_EYE_L, _EYE_R, _NOSE):
        r0, r1, c0, c1 = _cells_to_px(cells)
        patch[r0:r1, c0:c1] = feature
    r0, r1, c0, c1 = _cells_to_px(_MOUTH)
    if mouth_colour is None:
        patch[r0:r1, c0:c1] = feature
    else:
        cy, cx = (r0 + r1) / 2.0, (c0 + c1) / 2.0
        a, b = mouth_axes  # semi-axes: (horizontal, vertical) in pixels
        yy, xx = np.mgrid[0:FACE_SIZE, 0:FACE_SIZE] + 0.5
        inside = ((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2 <= 1.0
        patch[inside] = mouth_colour
    return patch


def _background(rng: np.random.Generator, shape, style: str) -> np.ndarray:
    h, w = shape
    frame = np.empty((h, w, 3), dtype=np.uint8)
    if style == "flat":
        frame[:] = (92, 108, 126)
    elif style == "gradient":
        ramp = np.linspace(40, 170, h)[:, None].repeat(w, axis=1)
        frame = np.stack([ramp, ramp * 0.9, ramp * 0.8], axis=-1).astype(np.uint8)
    elif style == "speckle":
        base = rng.normal(100, 18, size=(h, w, 3))
        frame = np.clip(base, 0, 255).astype(np.uint8)
    else:
        raise ValueError(f"unknown background style {style!r}")
    return frame


def plant_face_frame(
    rng: np.random.Generator,
    shape=(240, 320),
    face_xy: tuple[int, int] | None = None,
    skin=None,
    background: str = "flat",
    noise_sigma: float = 0.0,
):
    """One frame with a planted face; returns (frame, (face_x, face_y))."""
    h, w = shape
    frame = _background(rng, shape, background)
    if face_xy is None:
        face_xy = (
            int(rng.integers(0, w - FACE_SIZE + 1)),
            int(rng.integers(0, h - FACE_SIZE + 1)),
        )
    fx, fy = face_xy
    tone = skin if skin is not None else SKIN_TONES[int(rng.integers(len(SKIN_TONES)))]
    frame[fy : fy + FACE_SIZE, fx : fx + FACE_SIZE] = face_patch(skin=tone)
    if noise_sigma > 0:
        noisy = frame.astype(np.float64) + rng.normal(0, noise_sigma, size=frame.shape)
        frame = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    return frame, face_xy


def face_fixture_suite(count: int = 100, seed: int = 7):
    """The planted-face corpus: (frame, true_xy) pairs with varied styles."""
    rng = np.random.default_rng(seed)
    styles = ("flat", "gradient", "speckle")
    out = []
    for i in range(count):
        frame, xy = plant_face_frame(
            rng,
            background=styles[i % len(styles)],
            skin=SKIN_TONES[i % len(SKIN_TONES)],
            noise_sigma=2.0 if i % 2 else 0.0,
        )
        out.append((frame, xy))
    return out


def lip_scene(
    rng: np.random.Generator,
    tone_idx: int = 0,
    shape=(34, 80),
    axes: tuple[float, float] | None = None,
    centre: tuple[float, float] | None = None,
    noise_sigma: float = 2.0,
    shading: float = 0.15,
):
    """One mouth-region scene: a lip ellipse on skin. Returns (image, truth).

    Shading applies a vertical illumination ramp; noise is per-pixel gaussian.
    The truth mask marks pixels whose centres fall inside the ellipse.
    """
    h, w = shape
    skin = np.asarray(SKIN_TONES[tone_idx], dtype=np.float64)
    lip = np.asarray(LIP_TONES[tone_idx], dtype=np.float64)
    if axes is None:
        axes = (
            float(rng.uniform(w * 0.18, w * 0.32)),
            float(rng.uniform(h * 0.16, h * 0.30)),
        )
    if centre is None:
        centre = (
            float(w / 2 + rng.uniform(-w * 0.08, w * 0.08)),
            float(h / 2 + rng.uniform(-h * 0.10, h * 0.10)),
        )
    a, b = axes
    cx, cy = centre
    yy, xx = np.mgrid[0:h, 0:w] + 0.5
    truth = ((xx - cx) / a) ** 2 + ((yy - cy) / b) ** 2 <= 1.0
    img = np.where(truth[..., None], lip, skin)
    if shading:
        ramp = 1.0 - shading * (yy / h)[..., None]
        img = img * ramp
    if noise_sigma > 0:
        img = img + rng.normal(0, noise_sigma, size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), truth.astype(np.uint8)


def lip_scene_with_confounders(
    rng: np.random.Generator,
    tone_idx: int,
    highlight: bool = False,
    beard_density: float = 0.0,
):
    """A lip scene with optional specular highlight and textured stubble.

    Stubble pixels are random dark colours, so their hue is noise-dominated
    and their texture is edge-rich, the conditions under which multi-cue
    voting degrades while joint-distance assignment stays stable.
    """
    img, truth = lip_scene(rng, tone_idx=tone_idx)
    h, w = truth.shape
    if highlight:
        ys, xs = np.nonzero(truth)
        cy, cx = int(ys.mean()) - 2, int(xs.mean())
        img[max(0, cy - 1) : cy + 1, max(0, cx - 4) : cx + 4] = (238, 205, 198)
    if beard_density > 0:
        band = np.zeros((h, w), dtype=bool)
        band[int(h * 0.85) :, :] = True
        band &= ~truth.astype(bool)
        sel = band & (rng.random((h, w)) < beard_density)
        n = int(sel.sum())
        img[sel] = np.stack(
            [
                rng.integers(30, 85, n),
                rng.integers(25, 70, n),
                rng.integers(25, 70, n),
            ],
            axis=-1,
        )
    return img, truth


def lip_fixture_suite(count: int = 50, seed: int = 9):
    """Parameterized lip scenes cycling through the four skin tones.

    Six of every ten scenes are plain, two carry a specular highlight and two
    a stubble band, so the corpus spans the conditions that separate the two
    segmenters in practice.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = i % 10
        out.append(
            lip_scene_with_confounders(
                rng,
                tone_idx=i % len(SKIN_TONES),
                highlight=kind in (6, 7),
                beard_density=0.3 if kind in (8, 9) else 0.0,
            )
        )
    return out


# ---------------------------------------------------------------- word clips

WORD_NAMES = ("word0", "word1", "word2", "word3", "word4")
WORD_GROUPS = {
    "word0": "Nu",
    "word1": "Nu",
    "word2": "LAL1",
    "word3": "LAL1",
    "word4": "Sec",
}
_REST_AXES = (17.0, 4.0)


def mouth_axes_at(word_idx: int, t: float) -> tuple[float, float]:
    """Scripted (semi_x, semi_y) mouth aperture for word word_idx at t in [0,1]."""
    s = np.sin(np.pi * t)
    if word_idx == 0:  # single open-close
        return 17.0 - 5.0 * s, 4.0 + 9.0 * s
    if word_idx == 1:  # double open-close
        s2 = abs(np.sin(2.0 * np.pi * t))
        return 17.0, 4.0 + 9.0 * s2
    if word_idx == 2:  # steady opening ramp
        return 14.0 + 4.0 * t, 4.0 + 9.0 * t
    if word_idx == 3:  # wide horizontal stretch
        return 11.0 + 13.0 * s, 5.0
    if word_idx == 4:  # fast open then hold
        r = min(1.0, 2.5 * t)
        return 17.0 + 7.0 * r, 4.0 + 9.0 * r
    raise ValueError(f"no trajectory for word index {word_idx}")


def _mouth_frame(rng, axes, face_xy, tone_idx, noise_sigma, brightness=0):
    frame = _background(rng, (240, 320), "flat")
    patch = face_patch(
        skin=SKIN_TONES[tone_idx],
        mouth_colour=LIP_TONES[tone_idx],
        mouth_axes=axes,
    )
    fx, fy = face_xy
    frame[fy : fy + FACE_SIZE, fx : fx + FACE_SIZE] = patch
    out = frame.astype(np.float64) + brightness
    if noise_sigma > 0:
        out = out + rng.normal(0, noise_sigma, size=frame.shape)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def word_clip(
    rng: np.random.Generator,
    repetition: int,
    session: int = 1,
    speaker: str = "synth01",
    base_frames: int = 12,
    gap_frames: int = 3,
    noise_sigma: float = 2.0,
    tone_idx: int = 0,
):
    """One recording: the five scripted words in sequence with rest gaps.

    Word lengths jitter by +-1 frame per repetition and aperture amplitude by
    a few percent; session 2 frames are slightly brighter. Returns
    (frames, annotations) with 0-based frame indices.
    """
    from .pipeline import Annotation  # local import to keep synth importable alone

    face_xy = (int(rng.integers(60, 140)), int(rng.integers(40, 100)))
    brightness = 6 if session == 2 else 0
    frames, annotations = [], []

    def rest(n):
        for _ in range(n):
            frames.append(
                _mouth_frame(rng, _REST_AXES, face_xy, tone_idx, noise_sigma, brightness)
            )

    rest(gap_frames)
    for wi, word in enumerate(WORD_NAMES):
        n = base_frames + int(rng.integers(-1, 2))
        amp = 1.0 + rng.uniform(-0.05, 0.05)
        start = len(frames)
        for j in range(n):
            t = j / (n - 1)
            sx, sy = mouth_axes_at(wi, t)
            sy = 4.0 + (sy - 4.0) * amp
            frames.append(
                _mouth_frame(rng, (sx, sy), face_xy, tone_idx, noise_sigma, brightness)
            )
        annotations.append(
            Annotation(
                label=word,
                start=start,
                end=len(frames) - 1,
                speaker=speaker,
                session=session,
                repetition=repetition,
                group=WORD_GROUPS[word],
            )
        )
        rest(gap_frames)
    return frames, annotations


def write_word_corpus(
    out_dir,
    reps: int = 5,
    sessions=(1,),
    seed: int = 17,
    speaker: str = "synth01",
    tone_idx: int = 0,
):
    """Write the scripted corpus to disk; returns the clip directories."""
    from pathlib import Path

    from .pipeline import write_annotations, write_ppm

    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    clip_dirs = []
    for session in sessions:
        for rep in range(1, reps + 1):
            d = out / f"{speaker}_s{session}_rep{rep}"
            d.mkdir(parents=True, exist_ok=True)
            frames, annotations = word_clip(
                rng, repetition=rep, session=session, speaker=speaker, tone_idx=tone_idx
            )
            for i, frame in enumerate(frames):
                write_ppm(frame, d / f"frame_{i:05d}.ppm")
            write_annotations(annotations, d / "annotations.txt")
            clip_dirs.append(d)
    return clip_dirs
