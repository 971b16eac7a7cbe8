"""Lip segmentation inside the face's lower tri-sector.

Two segmenters over the mouth region of interest: the two-prototype iterative
"nearest colour" assignment seeded by Lip-Map clustering (primary), and the
multi-cue voting "layer fusion" (alternate). Both produce a binary lip mask
from which the mouth box and its inscribed ellipse are derived.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import imaging
from .face import FaceBox


class LipsNotFound(ValueError):
    """Raised when a frame yields an empty lip mask."""


@dataclass
class Roi:
    """Crop of the face's third tri-sector; origin is its (x, y) in the frame."""

    origin: tuple[int, int]
    image: np.ndarray


@dataclass
class MouthRoi:
    """Tight mouth box (x, y, w, h) in Roi coordinates plus its pixel crop."""

    box: tuple[int, int, int, int]
    pixels: np.ndarray
    roi_origin: tuple[int, int] = (0, 0)

    @property
    def width(self) -> int:
        return self.box[2]

    @property
    def height(self) -> int:
        return self.box[3]

    @property
    def semi_axes(self) -> tuple[float, float]:
        return self.box[2] / 2.0, self.box[3] / 2.0

    def frame_box(self) -> tuple[int, int, int, int]:
        x, y, w, h = self.box
        return x + self.roi_origin[0], y + self.roi_origin[1], w, h

    def ellipse_mask(self) -> np.ndarray:
        """Boolean mask of crop pixels whose centres fall inside the ellipse."""
        _, _, w, h = self.box
        a, b = self.semi_axes
        yy, xx = np.mgrid[0:h, 0:w] + 0.5
        return ((xx - w / 2.0) / a) ** 2 + ((yy - h / 2.0) / b) ** 2 <= 1.0


def roi_from_face(face: FaceBox, frame: np.ndarray) -> Roi:
    """Bottom third of the face box, clipped to frame bounds."""
    if face.width <= 0 or face.height <= 0:
        raise ValueError("degenerate face box")
    third = face.height // 3
    if third < 1:
        raise ValueError("face box too small for a tri-sector split")
    y0 = face.y + face.height - third
    x0, x1 = max(0, face.x), min(frame.shape[1], face.x + face.width)
    y0c, y1 = max(0, y0), min(frame.shape[0], y0 + third)
    if x1 <= x0 or y1 <= y0c:
        raise ValueError("face box lies outside the frame")
    return Roi(origin=(x0, y0c), image=frame[y0c:y1, x0:x1])


def _minmax(a: np.ndarray) -> np.ndarray:
    lo, hi = float(a.min()), float(a.max())
    if hi <= lo:
        return np.zeros_like(a)
    return (a - lo) / (hi - lo)


def lip_map(roi: Roi) -> np.ndarray:
    """Chrominance lip score in [0, 1]: high where Cr is high and Cb low."""
    _, cb, cr = imaging.rgb_to_ycbcr(roi.image)
    cr2 = cr * cr
    finite = cb > 1e-9
    ratio = np.where(finite, cr, 0.0) / np.where(finite, cb, 1.0)
    if not finite.all():
        peak = ratio[finite].max() if finite.any() else 0.0
        ratio = np.where(finite, ratio, peak)
    cr2 = _minmax(cr2)
    ratio = _minmax(ratio)
    denom = ratio.sum()
    eta = 0.95 * cr2.sum() / denom if denom > 0 else 0.0
    return _minmax(cr2 * (cr2 - eta * ratio) ** 2)


def kmeans2(points, max_iters: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Two-cluster Lloyd iteration with deterministic min/max initialization.

    Centres start at the points with the smallest and largest first
    coordinate; iteration stops when assignments stabilize. Returns
    (labels in {0,1}, centres (2, d)).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 2:
        raise ValueError("kmeans2 needs at least 2 points")
    centres = np.stack([pts[int(pts[:, 0].argmin())], pts[int(pts[:, 0].argmax())]])
    labels = None
    for _ in range(max_iters):
        d0 = ((pts - centres[0]) ** 2).sum(axis=1)
        d1 = ((pts - centres[1]) ** 2).sum(axis=1)
        new = (d1 < d0).astype(np.int64)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for k in (0, 1):
            members = pts[labels == k]
            if len(members):
                centres[k] = members.mean(axis=0)
    return labels, centres


# Span of the x/y components of a pixel feature vector. Position is meant to
# push away far same-coloured pixels, not to drive the clustering: with a full
# [0,1] span the two-prototype iteration degenerates into a spatial split of
# the Roi (position variance swamps the ~0.25 lip/skin colour separation).
POSITION_SPAN = 0.25


def pixel_features(img: np.ndarray) -> np.ndarray:
    """(H, W, 8) per-pixel vector: r, g, b, warped hue, Cb, Cr, x, y in [0,1]."""
    r, g, b = imaging.trichromatic(img)
    hue = imaging.warped_hue(img) / 180.0
    _, cb, cr = imaging.rgb_to_ycbcr(img)
    cb = np.clip(cb, 0.0, 255.0) / 255.0
    cr = np.clip(cr, 0.0, 255.0) / 255.0
    h, w = img.shape[:2]
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    xs = xx * (POSITION_SPAN / (w - 1)) if w > 1 else np.zeros_like(xx)
    ys = yy * (POSITION_SPAN / (h - 1)) if h > 1 else np.zeros_like(yy)
    return np.stack([r, g, b, hue, cb, cr, xs, ys], axis=-1)


def _components_keep(mask: np.ndarray, join_neighbours: bool, gap: int = 2) -> np.ndarray:
    """Largest connected component; optionally union a second one within gap px."""
    labelled, n = ndimage.label(mask)
    if n == 0:
        return np.zeros_like(mask, dtype=np.uint8)
    sizes = ndimage.sum_labels(mask.astype(np.int64), labelled, index=np.arange(1, n + 1))
    order = np.argsort(-sizes, kind="stable") + 1
    keep = [order[0]]
    if join_neighbours and n >= 2:
        slices = ndimage.find_objects(labelled)
        a, b = slices[order[0] - 1], slices[order[1] - 1]
        gy = max(0, max(a[0].start, b[0].start) - min(a[0].stop, b[0].stop))
        gx = max(0, max(a[1].start, b[1].start) - min(a[1].stop, b[1].stop))
        if gy <= gap and gx <= gap:
            keep.append(order[1])
    return np.isin(labelled, keep).astype(np.uint8)


def nearest_colour(roi: Roi, max_iters: int = 50) -> np.ndarray:
    """Two-prototype lip segmentation seeded by Lip-Map clustering.

    The Lip-Map's high cluster seeds a lip prototype; the farthest half of the
    pixels (by 8-feature distance to that prototype) seeds the non-lip one.
    Pixels are then re-assigned to the nearer prototype until stable, the mask
    is opened, and the largest component (joined with a neighbouring second
    component within 2 px) is kept. May return an empty mask.
    """
    img = roi.image
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"roi {img.shape[:2]} smaller than 3x3")
    h, w = img.shape[:2]
    lm = lip_map(roi)
    labels, centres = kmeans2(lm.ravel())
    high = int(centres[1, 0] > centres[0, 0])
    seeds = labels == high
    if not seeds.any():
        seeds = np.ones_like(labels, dtype=bool)
    feats = pixel_features(img).reshape(-1, 8)
    lip_proto = feats[seeds].mean(axis=0)
    dist = np.linalg.norm(feats - lip_proto, axis=1)
    far = np.argsort(dist, kind="stable")[len(feats) - len(feats) // 2 :]
    protos = np.stack([lip_proto, feats[far].mean(axis=0)])
    assign = None
    for _ in range(max_iters):
        d_lip = ((feats - protos[0]) ** 2).sum(axis=1)
        d_non = ((feats - protos[1]) ** 2).sum(axis=1)
        new = d_lip <= d_non
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for k, sel in enumerate((assign, ~assign)):
            if sel.any():
                protos[k] = feats[sel].mean(axis=0)
    mask = imaging.morphology(assign.reshape(h, w).astype(np.uint8), "open")
    return _components_keep(mask, join_neighbours=True)


def _layer(points: np.ndarray, shape, prefer: str) -> np.ndarray:
    """Cluster a cue into a binary lip layer; prefer marks the lip side."""
    if points.ndim == len(shape):  # scalar cue
        pts = points.reshape(-1, 1)
    else:  # per-pixel vectors
        pts = points.reshape(-1, points.shape[-1])
    if np.all(pts == pts[0]):
        return np.zeros(shape, dtype=np.uint8)
    labels, centres = kmeans2(pts)
    key = centres[:, 0]
    if key[0] == key[1]:
        return np.zeros(shape, dtype=np.uint8)
    lip = int(key.argmax()) if prefer == "high" else int(key.argmin())
    return (labels == lip).reshape(shape).astype(np.uint8)


def layer_fusion(
    roi: Roi,
    vote_threshold: int = 2,
    prev_roi: Roi | None = None,
    prev_mask: np.ndarray | None = None,
    motion_threshold: float = 5.0,
) -> np.ndarray:
    """Multi-cue voting segmentation with region growing.

    Five layers (trichromatic, pseudo hue, warped hue, Lip-Map, Sobel edge
    magnitude) each vote per pixel; the mask grows in 4-connectivity from the
    maximum-vote pixels over everything with vote >= vote_threshold. When the
    previous Roi and mask are supplied and the mean absolute intensity change
    is below motion_threshold, the previous mask is returned unchanged.
    """
    img = roi.image
    if img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"roi {img.shape[:2]} smaller than 3x3")
    if (
        prev_roi is not None
        and prev_mask is not None
        and prev_roi.image.shape == img.shape
    ):
        diff = np.abs(imaging.luma(img) - imaging.luma(prev_roi.image)).mean()
        if diff < motion_threshold:
            return prev_mask.copy()
    h, w = img.shape[:2]
    gray = imaging.luma(img)
    r, g, b = imaging.trichromatic(img)
    rgb_pts = np.stack([r, g, b], axis=-1)
    mag = np.hypot(imaging.sobel(gray, "vertical"), imaging.sobel(gray, "horizontal"))
    votes = np.zeros((h, w), dtype=np.int64)
    votes += _layer(rgb_pts, (h, w), prefer="high")  # lip side: higher r
    votes += _layer(imaging.pseudo_hue(img), (h, w), prefer="high")
    votes += _layer(imaging.warped_hue(img), (h, w), prefer="low")
    votes += _layer(lip_map(roi), (h, w), prefer="high")
    votes += _layer(mag, (h, w), prefer="high")
    vmax = int(votes.max())
    if vmax < vote_threshold:
        return np.zeros((h, w), dtype=np.uint8)
    grown = ndimage.binary_propagation(votes == vmax, mask=votes >= vote_threshold)
    mask = imaging.morphology(grown.astype(np.uint8), "open")
    return _components_keep(mask, join_neighbours=False)


def mouth_from_mask(mask: np.ndarray, roi: Roi) -> MouthRoi:
    """Tight bounding box of the mask's 1-bits with its pixel crop."""
    ys, xs = np.nonzero(mask)
    if len(ys) == 0:
        raise LipsNotFound("lips not found in this frame")
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    return MouthRoi(
        box=(x0, y0, x1 - x0 + 1, y1 - y0 + 1),
        pixels=roi.image[y0 : y1 + 1, x0 : x1 + 1].copy(),
        roi_origin=roi.origin,
    )


def write_mask_pbm(mask: np.ndarray, path) -> None:
    """Debug output: plain-text portable bitmap (P1) of the mask."""
    h, w = mask.shape
    rows = "\n".join(" ".join(str(int(v)) for v in row) for row in mask)
    Path(path).write_text(f"P1\n{w} {h}\n{rows}\n")


def read_mask_pbm(path) -> np.ndarray:
    tokens = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0]
        tokens.extend(line.split())
    if not tokens or tokens[0] != "P1":
        raise ValueError(f"{path}: not a plain PBM file")
    w, h = int(tokens[1]), int(tokens[2])
    bits = np.array(tokens[3 : 3 + w * h], dtype=np.uint8)
    return bits.reshape(h, w)


def tint_overlay(image: np.ndarray, mask: np.ndarray, colour=(255, 0, 0)) -> np.ndarray:
    """Debug output: the input image with mask pixels blended towards colour."""
    out = image.astype(np.float64).copy()
    sel = mask.astype(bool)
    out[sel] = 0.5 * out[sel] + 0.5 * np.asarray(colour, dtype=np.float64)
    return np.rint(out).astype(np.uint8)
