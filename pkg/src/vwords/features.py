"""Per-frame mouth features and the normalized word-signature matrix.

Eight features per frame: mouth height and width, mutual information and a
quality index against the previous frame (both averaged over the four level-1
Haar sub-bands of 50x50 crops), the vertical/horizontal wavelet-significance
ratio, the vertical/horizontal edge-energy ratio, mean red value and the
teeth-pixel count. A word's frames assemble into an (n_frames x 8) matrix
normalized into [0, 1] with fixed, session-independent scaling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imaging
from .lips import MouthRoi

COLUMNS = ("H", "W", "M", "Q", "R", "ER", "RC", "T")
MI_BINS = 32
SCALE_SIZE = 50
MI_NORMALIZER = 8.0


def _resize_nearest(gray: np.ndarray, size: int = SCALE_SIZE) -> np.ndarray:
    h, w = gray.shape
    rows = np.minimum((np.arange(size) + 0.5) * h / size, h - 1).astype(np.int64)
    cols = np.minimum((np.arange(size) + 0.5) * w / size, w - 1).astype(np.int64)
    return gray[rows][:, cols]


def _gray50(mouth: MouthRoi) -> np.ndarray:
    return _resize_nearest(imaging.luma(mouth.pixels))


def mutual_information(x: np.ndarray, y: np.ndarray, bins: int = MI_BINS) -> float:
    """Histogram mutual information in bits between two same-sized grids."""
    _, _, joint = imaging.histograms(x, y, bins=bins)
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    nz = joint > 0
    outer = np.outer(px, py)
    return float((joint[nz] * np.log2(joint[nz] / outer[nz])).sum())


def entropy_bits(x: np.ndarray, bins: int = MI_BINS) -> float:
    """Histogram entropy in bits, same binning as mutual_information."""
    pmf, _, _ = imaging.histograms(x, x, bins=bins)
    nz = pmf > 0
    return float(-(pmf[nz] * np.log2(pmf[nz])).sum())


def quality_index(x: np.ndarray, y: np.ndarray) -> float:
    """Universal quality index: correlation, luminance and contrast in one.

    Degenerate denominators (both grids constant, or both zero-mean) map to
    1 for identical grids and 0 otherwise.
    """
    xf = np.asarray(x, dtype=np.float64).ravel()
    yf = np.asarray(y, dtype=np.float64).ravel()
    if xf.size != yf.size:
        raise ValueError("quality_index needs same-sized inputs")
    mx, my = xf.mean(), yf.mean()
    if xf.size < 2:
        return 1.0 if np.array_equal(xf, yf) else 0.0
    vx = ((xf - mx) ** 2).sum() / (xf.size - 1)
    vy = ((yf - my) ** 2).sum() / (yf.size - 1)
    cov = ((xf - mx) * (yf - my)).sum() / (xf.size - 1)
    den = (vx + vy) * (mx * mx + my * my)
    if den == 0.0:
        return 1.0 if np.array_equal(xf, yf) else 0.0
    return float(4.0 * cov * mx * my / den)


def _level1_bands(mouth: MouthRoi):
    lvl = imaging.haar_pyramid(_gray50(mouth), 1).level(1)
    return lvl.ll, lvl.hl, lvl.lh, lvl.hh


def mutual_feature(curr: MouthRoi, prev: MouthRoi) -> float:
    """Mean mutual information over the four sub-band pairs."""
    bands_c = _level1_bands(curr)
    bands_p = _level1_bands(prev)
    return float(np.mean([mutual_information(c, p) for c, p in zip(bands_c, bands_p)]))


def quality_feature(curr: MouthRoi, prev: MouthRoi) -> float:
    """Mean quality index over the four sub-band pairs."""
    bands_c = _level1_bands(curr)
    bands_p = _level1_bands(prev)
    return float(np.mean([quality_index(c, p) for c, p in zip(bands_c, bands_p)]))


def wavelet_ratio(mouth: MouthRoi) -> float:
    """Ratio of significant HL (vertical) to LH (horizontal) coefficients.

    Significance: outside [median - sigma, median + sigma] of the sub-band.
    Both counts carry a +1 guard against empty bands.
    """
    _, hl, lh, _ = _level1_bands(mouth)

    def significant(band: np.ndarray) -> int:
        med = float(np.median(band))
        sd = float(band.std())
        return int(((band < med - sd) | (band > med + sd)).sum())

    return (significant(hl) + 1.0) / (significant(lh) + 1.0)


def edge_ratio(mouth: MouthRoi) -> float:
    """Vertical over horizontal Sobel |response| sums with a +1 denominator."""
    gray = imaging.luma(mouth.pixels)
    if gray.shape[0] < 3 or gray.shape[1] < 3:
        return 0.0
    v = np.abs(imaging.sobel(gray, "vertical")).sum()
    h = np.abs(imaging.sobel(gray, "horizontal")).sum()
    return float(v / (h + 1.0))


def geom_hw(mouth: MouthRoi) -> tuple[int, int]:
    return mouth.height, mouth.width


def red_colour(mouth: MouthRoi) -> float:
    """Mean red channel over the ellipse interior."""
    ell = mouth.ellipse_mask()
    return float(mouth.pixels[..., 0][ell].mean())


def teeth(mouth: MouthRoi) -> int:
    """Count ellipse pixels with unusually low a* or u* (teeth are desaturated).

    A channel with zero spread contributes nothing, so uniform crops give 0.
    """
    ell = mouth.ellipse_mask()
    _, astar, _, ustar, _ = imaging.rgb_to_lab_luv(mouth.pixels)
    a = astar[ell]
    u = ustar[ell]
    sa, su = float(a.std()), float(u.std())
    hits = np.zeros(a.shape, dtype=bool)
    if sa > 1e-9:  # fp-noise spread on achromatic crops is not signal
        hits |= a <= a.mean() - sa
    if su > 1e-9:
        hits |= u <= u.mean() - su
    return int(hits.sum())


@dataclass
class FeatureMatrix:
    """n_frames x 8 signature of one spoken word plus its labels."""

    values: np.ndarray
    label: str = ""
    speaker: str = ""
    session: int = 1
    repetition: int = 0
    group: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != len(COLUMNS):
            raise ValueError(f"feature matrix must be (n, 8), got {v.shape}")
        self.values = v

    @property
    def n_frames(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.values[:, COLUMNS.index(name)]


def build_signature(
    mouths: list[MouthRoi],
    face_sizes,
    **labels,
) -> FeatureMatrix:
    """Assemble the normalized signature of one word's mouth sequence.

    face_sizes is one (width, height) pair or one per frame; frame 1's M and Q
    compare the frame with itself. Normalizers are fixed: H and W by the face
    box, M by 8, Q mapped (Q+1)/2, R and ER squashed x/(1+x), RC by 255, T by
    the ellipse pixel count.
    """
    if len(mouths) < 2:
        raise ValueError("a word needs at least 2 frames")
    if isinstance(face_sizes, tuple):
        face_sizes = [face_sizes] * len(mouths)
    if len(face_sizes) != len(mouths):
        raise ValueError("need one face size or one per frame")
    rows = np.empty((len(mouths), len(COLUMNS)), dtype=np.float64)
    for i, mouth in enumerate(mouths):
        prev = mouths[i - 1] if i > 0 else mouth
        h, w = geom_hw(mouth)
        fw, fh = face_sizes[i]
        m = mutual_feature(mouth, prev)
        q = quality_feature(mouth, prev)
        r = wavelet_ratio(mouth)
        er = edge_ratio(mouth)
        rc = red_colour(mouth)
        t = teeth(mouth)
        n_ell = int(mouth.ellipse_mask().sum())
        rows[i] = (
            h / fh,
            w / fw,
            m / MI_NORMALIZER,
            (q + 1.0) / 2.0,
            r / (1.0 + r),
            er / (1.0 + er),
            rc / 255.0,
            t / n_ell,
        )
    return FeatureMatrix(rows, **labels)


def write_feature_matrix(fm: FeatureMatrix, path) -> None:
    """Text format: header then one 6-decimal row per frame (1-based index)."""
    lines = ["frame," + ",".join(COLUMNS)]
    for i, row in enumerate(fm.values, start=1):
        lines.append(f"{i}," + ",".join(f"{v:.6f}" for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_feature_matrix(path, **labels) -> FeatureMatrix:
    text = Path(path).read_text().splitlines()
    if not text or text[0].strip() != "frame," + ",".join(COLUMNS):
        raise ValueError(f"{path}: bad feature matrix header")
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(COLUMNS) + 1:
            raise ValueError(f"{path}:{lineno}: expected {len(COLUMNS) + 1} fields")
        rows.append([float(p) for p in parts[1:]])
    return FeatureMatrix(np.array(rows, dtype=np.float64), **labels)
