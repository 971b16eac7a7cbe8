"""Clip ingestion, word segmentation and end-to-end orchestration.

Clips are directories of numbered binary-PPM frames plus a line-oriented
annotation file. Each annotated word runs through deinterlacing (optional),
face localization/tracking, tri-sector lip segmentation and mouth-box
extraction into a normalized signature matrix. Also holds the pipeline
configuration and the on-disk training-set store.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import imaging
from .classify import FeatureWeights, TrainingSet, read_weights
from .face import FaceBox, FaceLocatorConfig, localize_face, track_face
from .features import FeatureMatrix, build_signature, read_feature_matrix, write_feature_matrix
from .lips import LipsNotFound, Roi, layer_fusion, mouth_from_mask, nearest_colour, roi_from_face

GROUPS = ("Nu", "LAL1", "LAL2", "LG", "Sec")


# ---------------------------------------------------------------- frame files


def write_ppm(img: np.ndarray, path) -> None:
    """Binary (P6) portable pixmap."""
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise ValueError("write_ppm needs an (H, W, 3) uint8 image")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(img.tobytes())


def read_ppm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise ValueError(f"{path}: not a binary PPM file")
    fields_found, pos = [], 2
    while len(fields_found) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields_found.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields_found
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    if len(data) - pos < w * h * 3:
        raise ValueError(f"{path}: truncated pixel data")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pixels.reshape(h, w, 3).copy()


# ---------------------------------------------------------------- annotations


@dataclass
class Annotation:
    """One spoken word: frame range plus identity labels (frames 0-based)."""

    label: str
    start: int
    end: int
    speaker: str
    session: int
    repetition: int
    group: str

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise ValueError(f"bad frame range {self.start}..{self.end}")
        if self.session not in (1, 2):
            raise ValueError(f"session must be 1 or 2, got {self.session}")
        if self.group not in GROUPS:
            raise ValueError(f"group must be one of {GROUPS}, got {self.group!r}")


def read_annotations(path) -> list[Annotation]:
    """Parse `label,start,end,speaker,session,repetition,group` lines."""
    out = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 7:
            raise ValueError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
        try:
            out.append(
                Annotation(
                    label=parts[0],
                    start=int(parts[1]),
                    end=int(parts[2]),
                    speaker=parts[3],
                    session=int(parts[4]),
                    repetition=int(parts[5]),
                    group=parts[6],
                )
            )
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return out


def write_annotations(annotations: list[Annotation], path) -> None:
    lines = [
        f"{a.label},{a.start},{a.end},{a.speaker},{a.session},{a.repetition},{a.group}"
        for a in annotations
    ]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------- clips


@dataclass
class FrameSequence:
    frames: list[np.ndarray]
    source: str = ""

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a clip needs at least one frame")
        shape = self.frames[0].shape
        for i, f in enumerate(self.frames):
            if f.shape != shape:
                raise ValueError(f"frame {i} shape {f.shape} differs from {shape}")

    def __len__(self) -> int:
        return len(self.frames)


_FRAME_RE = re.compile(r"(\d+)\.ppm$")


def load_clip(path) -> FrameSequence:
    """Read numbered `*NNNN.ppm` frames; numbering must be contiguous."""
    d = Path(path)
    numbered = []
    for p in d.iterdir() if d.is_dir() else ():
        m = _FRAME_RE.search(p.name)
        if m:
            numbered.append((int(m.group(1)), p))
    if not numbered:
        raise FileNotFoundError(f"no numbered .ppm frames in {path}")
    numbered.sort()
    numbers = [n for n, _ in numbered]
    if numbers != list(range(numbers[0], numbers[0] + len(numbers))):
        missing = sorted(set(range(numbers[0], numbers[-1] + 1)) - set(numbers))
        raise ValueError(f"{path}: missing frames {missing[:5]}")
    return FrameSequence([read_ppm(p) for _, p in numbered], source=str(d))


@dataclass
class WordSegment:
    annotation: Annotation
    frames: list[np.ndarray]
    start: int  # actual first frame index after applying the lead
    lead_applied: int


def segment(clip: FrameSequence, annotations: list[Annotation], lead: int = 3) -> list[WordSegment]:
    """Cut per-word frame runs, extending each start by up to `lead` frames."""
    out = []
    for a in annotations:
        if a.end >= len(clip):
            raise ValueError(
                f"annotation {a.label!r} ends at frame {a.end}, clip has {len(clip)}"
            )
        start = max(0, a.start - lead)
        out.append(
            WordSegment(
                annotation=a,
                frames=clip.frames[start : a.end + 1],
                start=start,
                lead_applied=a.start - start,
            )
        )
    return out


# ---------------------------------------------------------------- configuration


@dataclass
class PipelineConfig:
    """Every knob of the end-to-end run; see README for the defaults' roles."""

    deinterlace: bool = False
    segmenter: str = "nearest_colour"  # or "layer_fusion"
    top_n: int = 5
    weighted: bool = True
    margin: int = 16
    vote_threshold: int = 2
    motion_threshold: float = 5.0
    theta: float = 3.5
    lead: int = 3
    k: int = 1
    mode: str = "dtw"  # or "euclid_interp"
    rule: str = "wknn"  # or "knn"
    weights_profile: str = "sd"  # sd | si | uniform | path to a weights file
    verify_threshold: float = 2.7
    spot_threshold: float = 2.4

    def weights(self) -> FeatureWeights:
        if self.weights_profile == "sd":
            return FeatureWeights.sd()
        if self.weights_profile == "si":
            return FeatureWeights.si()
        if self.weights_profile == "uniform":
            return FeatureWeights.uniform()
        return read_weights(self.weights_profile)

    def face_config(self) -> FaceLocatorConfig:
        return FaceLocatorConfig(top_n=self.top_n, weighted=self.weighted)


def read_config(path) -> PipelineConfig:
    """key=value lines with # comments; unknown keys are rejected."""
    by_name = {f.name: f for f in fields(PipelineConfig)}
    kwargs = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in by_name:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        typ = by_name[key].type
        if typ == "bool":
            if val.lower() not in ("true", "false", "1", "0"):
                raise ValueError(f"{path}:{lineno}: bad boolean {val!r}")
            kwargs[key] = val.lower() in ("true", "1")
        elif typ == "int":
            kwargs[key] = int(val)
        elif typ == "float":
            kwargs[key] = float(val)
        else:
            kwargs[key] = val
    return PipelineConfig(**kwargs)


def write_config(cfg: PipelineConfig, path) -> None:
    lines = [f"{f.name}={getattr(cfg, f.name)}" for f in fields(PipelineConfig)]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------- orchestration


@dataclass
class FrameResult:
    index: int
    box: FaceBox
    mouth_found: bool
    mouth_frame_box: tuple[int, int, int, int] | None


def detect_faces(clip: FrameSequence, config: PipelineConfig | None = None) -> list[FaceBox]:
    """Localize the first frame, track the rest."""
    cfg = config or PipelineConfig()
    boxes: list[FaceBox] = []
    for frame in clip.frames:
        if cfg.deinterlace:
            frame = imaging.deinterlace_blend(frame)
        if boxes:
            boxes.append(track_face(boxes[-1], frame, cfg.margin, cfg.face_config()))
        else:
            boxes.append(localize_face(frame, cfg.face_config()))
    return boxes


@dataclass
class LipDetection:
    box: FaceBox
    roi: Roi
    mask: np.ndarray
    mouth: object | None  # MouthRoi when the lips were found


def detect_lips(
    clip: FrameSequence, config: PipelineConfig | None = None
) -> list[LipDetection]:
    """Per-frame face box, lip mask and mouth box over a whole clip."""
    cfg = config or PipelineConfig()
    out: list[LipDetection] = []
    box = None
    prev_roi = prev_mask = None
    for frame in clip.frames:
        if cfg.deinterlace:
            frame = imaging.deinterlace_blend(frame)
        box = (
            localize_face(frame, cfg.face_config())
            if box is None
            else track_face(box, frame, cfg.margin, cfg.face_config())
        )
        roi = roi_from_face(box, frame)
        mask = _segment_lips(roi, cfg, prev_roi, prev_mask)
        prev_roi, prev_mask = roi, mask
        try:
            mouth = mouth_from_mask(mask, roi)
        except LipsNotFound:
            mouth = None
        out.append(LipDetection(box=box, roi=roi, mask=mask, mouth=mouth))
    return out


def _segment_lips(roi: Roi, cfg: PipelineConfig, prev_roi, prev_mask) -> np.ndarray:
    if cfg.segmenter == "nearest_colour":
        return nearest_colour(roi)
    if cfg.segmenter == "layer_fusion":
        return layer_fusion(
            roi,
            vote_threshold=cfg.vote_threshold,
            prev_roi=prev_roi,
            prev_mask=prev_mask,
            motion_threshold=cfg.motion_threshold,
        )
    raise ValueError(f"unknown segmenter {cfg.segmenter!r}")


def extract_word(
    seg: WordSegment, config: PipelineConfig | None = None
) -> FeatureMatrix:
    """Run one word's frames through the full pipeline into a signature.

    Frames where the lips are not found reuse the nearest successful frame's
    mouth; a word with no successful frame at all is an error.
    """
    cfg = config or PipelineConfig()
    mouths, face_sizes = [], []
    box = None
    prev_roi = prev_mask = None
    for frame in seg.frames:
        if cfg.deinterlace:
            frame = imaging.deinterlace_blend(frame)
        box = (
            localize_face(frame, cfg.face_config())
            if box is None
            else track_face(box, frame, cfg.margin, cfg.face_config())
        )
        roi = roi_from_face(box, frame)
        mask = _segment_lips(roi, cfg, prev_roi, prev_mask)
        prev_roi, prev_mask = roi, mask
        try:
            mouths.append(mouth_from_mask(mask, roi))
        except LipsNotFound:
            mouths.append(None)
        face_sizes.append((box.width, box.height))
    if all(m is None for m in mouths):
        raise ValueError(f"lips not found in any frame of word {seg.annotation.label!r}")
    filled, last = [], None
    for m in mouths:
        last = m if m is not None else last
        filled.append(last)
    first_ok = next(m for m in filled if m is not None)
    filled = [m if m is not None else first_ok for m in filled]
    a = seg.annotation
    return build_signature(
        filled,
        face_sizes,
        label=a.label,
        speaker=a.speaker,
        session=a.session,
        repetition=a.repetition,
        group=a.group,
    )


def run_pipeline(
    clip: FrameSequence,
    annotations: list[Annotation],
    config: PipelineConfig | None = None,
) -> list[FeatureMatrix]:
    """Signatures for every annotated word of a clip."""
    cfg = config or PipelineConfig()
    return [extract_word(seg, cfg) for seg in segment(clip, annotations, cfg.lead)]


# ---------------------------------------------------------------- training store


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]", "_", name)


def save_training_set(ts: TrainingSet, directory) -> None:
    """Store: one signature file per entry plus a manifest with the labels."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, fm in enumerate(ts.entries):
        name = f"{_safe(fm.label)}_{_safe(fm.speaker)}_s{fm.session}_r{fm.repetition}_{i:04d}.csv"
        write_feature_matrix(fm, d / name)
        lines.append(f"{name},{fm.label},{fm.speaker},{fm.session},{fm.repetition},{fm.group}")
    (d / "manifest.txt").write_text("\n".join(lines) + "\n")


def load_training_set(directory) -> TrainingSet:
    d = Path(directory)
    manifest = d / "manifest.txt"
    if not manifest.exists():
        raise FileNotFoundError(f"no manifest.txt in {d}")
    entries = []
    for lineno, line in enumerate(manifest.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 6:
            raise ValueError(f"{manifest}:{lineno}: expected 6 fields")
        name, label, speaker, session, repetition, group = parts
        entries.append(
            read_feature_matrix(
                d / name,
                label=label,
                speaker=speaker,
                session=int(session),
                repetition=int(repetition),
                group=group,
            )
        )
    return TrainingSet(entries)


def merge_training_dirs(dirs, out_dir) -> TrainingSet:
    """Consolidate several feature directories into one store."""
    entries = []
    for d in dirs:
        entries.extend(load_training_set(d).entries)
    ts = TrainingSet(entries)
    save_training_set(ts, out_dir)
    return ts
