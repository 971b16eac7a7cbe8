"""Face localization on the binary LL3 wavelet grid.

A fixed 13x13 template is scanned over the binarized level-3 low-pass band of
the edge-filtered frame; the best windows by (weighted) Hamming score are
re-scored with a skin-colour rule on the downsampled colour frame and fused
with a two-input fuzzy table.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import imaging

TEMPLATE_SCALE = 8  # one template cell covers 8x8 original pixels

_DEFAULT_GRID = np.array(
    [
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1],
        [1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1],
        [1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1],
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1],
        [1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1],
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
        [1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1],
        [1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1],
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    ],
    dtype=np.uint8,
)


@dataclass(frozen=True)
class FaceTemplate:
    """13x13 grid of {0: feature, 1: tissue, 2: neutral} plus the cell scale."""

    grid: np.ndarray
    scale: int = TEMPLATE_SCALE

    def __post_init__(self):
        g = np.asarray(self.grid)
        if g.shape != (13, 13):
            raise ValueError(f"template must be 13x13, got {g.shape}")
        if not np.isin(g, (0, 1, 2)).all():
            raise ValueError("template cells must be 0, 1 or 2")
        object.__setattr__(self, "grid", g.astype(np.uint8))


def default_template() -> FaceTemplate:
    return FaceTemplate(_DEFAULT_GRID.copy())


def neutral_corner_template() -> FaceTemplate:
    """Variant with the four bottom-corner cells marked neutral."""
    grid = _DEFAULT_GRID.copy()
    for y, x in ((11, 0), (12, 0), (11, 12), (12, 12)):
        grid[y, x] = 2
    return FaceTemplate(grid)


def load_template(path) -> FaceTemplate:
    """Read a template file: 13 lines of 13 space-separated integers in {0,1,2}."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rows.append([int(tok) for tok in line.split()])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return FaceTemplate(np.array(rows))


def save_template(template: FaceTemplate, path) -> None:
    lines = [" ".join(str(v) for v in row) for row in template.grid]
    Path(path).write_text("\n".join(lines) + "\n")


@dataclass
class CandidateWindow:
    """Template placement at LL3 coordinates (x, y) with its scores."""

    x: int
    y: int
    hd: float
    colour_score: float = 0.0


@dataclass(frozen=True)
class FaceBox:
    """Axis-aligned face rectangle in original-image pixels."""

    x: int
    y: int
    width: int
    height: int


@dataclass
class FaceLocatorConfig:
    top_n: int = 5
    weighted: bool = True
    template: FaceTemplate = field(default_factory=default_template)


def scan_template(
    ll3_binary: np.ndarray,
    template: FaceTemplate | None = None,
    weighted: bool = True,
    top_n: int | None = 5,
) -> list[CandidateWindow]:
    """Score every template placement; return the top_n windows.

    Plain scoring counts matching non-neutral cells. Weighted scoring counts
    B/(B+W) per white match and W/(B+W) per black match, where W and B are the
    white/black pixel counts of the current window. Ties break in raster order.
    """
    tpl = template or default_template()
    th, tw = tpl.grid.shape
    grid = np.asarray(ll3_binary)
    if grid.shape[0] < th or grid.shape[1] < tw:
        raise ValueError(f"grid {grid.shape} smaller than template {tpl.grid.shape}")
    win = np.lib.stride_tricks.sliding_window_view(grid, (th, tw))
    white = ((win == 1) & (tpl.grid == 1)).sum(axis=(-2, -1))
    black = ((win == 0) & (tpl.grid == 0)).sum(axis=(-2, -1))
    if weighted:
        ones = win.sum(axis=(-2, -1), dtype=np.float64)
        size = float(th * tw)
        scores = white * ((size - ones) / size) + black * (ones / size)
    else:
        scores = (white + black).astype(np.float64)
    n_rows, n_cols = scores.shape
    order = np.argsort(-scores.ravel(), kind="stable")
    if top_n is not None:
        order = order[:top_n]
    return [
        CandidateWindow(x=int(i % n_cols), y=int(i // n_cols), hd=float(scores.ravel()[i]))
        for i in order
    ]


def kovac_mask(frame: np.ndarray) -> np.ndarray:
    """Skin-pixel predicate: R>95, G>40, B>20, R-min(G,B)>15, R-G>15, R>B."""
    f = np.rint(frame).astype(np.int64)
    r, g, b = f[..., 0], f[..., 1], f[..., 2]
    return (
        (r > 95)
        & (g > 40)
        & (b > 20)
        & (r - np.minimum(g, b) > 15)
        & (r - g > 15)
        & (r > b)
    )


def skin_score(
    frame_resized: np.ndarray, window: CandidateWindow, template: FaceTemplate | None = None
) -> int:
    """Count skin pixels inside the window that align with tissue (1) cells."""
    tpl = template or default_template()
    th, tw = tpl.grid.shape
    sub = kovac_mask(frame_resized[window.y : window.y + th, window.x : window.x + tw])
    return int((sub & (tpl.grid == 1)).sum())


def fuzzy_fuse(candidates: list[CandidateWindow]) -> CandidateWindow:
    """Pick the first candidate rated High on either counter.

    A counter is High iff it reaches the midpoint of its (min, max) range over
    the candidate set; the fused output is the OR of the two ratings.
    """
    if not candidates:
        raise ValueError("fuzzy_fuse needs at least one candidate")
    hd = [c.hd for c in candidates]
    col = [c.colour_score for c in candidates]
    hd_mid = (max(hd) + min(hd)) / 2.0
    col_mid = (max(col) + min(col)) / 2.0
    for c in candidates:
        if c.hd >= hd_mid or c.colour_score >= col_mid:
            return c
    return candidates[0]  # unreachable: the max-hd candidate is always High


def _half(a: np.ndarray) -> np.ndarray:
    if a.shape[0] % 2:
        a = np.vstack([a, a[-1:]])
    if a.shape[1] % 2:
        a = np.hstack([a, a[:, -1:]])
    return (a[0::2, 0::2] + a[0::2, 1::2] + a[1::2, 0::2] + a[1::2, 1::2]) / 4.0


def resize_to_ll3(frame: np.ndarray) -> np.ndarray:
    """Box-average the colour frame down by 8, matching LL3 dimensions."""
    chans = []
    for c in range(3):
        a = frame[..., c].astype(np.float64)
        for _ in range(3):
            a = _half(a)
        chans.append(a)
    return np.stack(chans, axis=-1)


def localize_face(frame: np.ndarray, config: FaceLocatorConfig | None = None) -> FaceBox:
    """Run the full localization pipeline on one frame."""
    cfg = config or FaceLocatorConfig()
    tpl = cfg.template
    size = tpl.grid.shape[0] * tpl.scale
    if frame.shape[0] < size or frame.shape[1] < size:
        raise ValueError(f"frame {frame.shape[:2]} smaller than the {size}px face scale")
    resp, _ = imaging.dual_filter_edge(imaging.luma(frame))
    ll3 = imaging.binarize_local_avg(imaging.haar_pyramid(resp, 3).level(3).ll)
    candidates = scan_template(ll3, tpl, weighted=cfg.weighted, top_n=cfg.top_n)
    small = resize_to_ll3(frame)
    for c in candidates:
        c.colour_score = skin_score(small, c, tpl)
    chosen = fuzzy_fuse(candidates)
    x = min(chosen.x * tpl.scale, frame.shape[1] - size)
    y = min(chosen.y * tpl.scale, frame.shape[0] - size)
    return FaceBox(x=max(0, x), y=max(0, y), width=size, height=size)


def track_face(
    prev: FaceBox,
    frame: np.ndarray,
    margin: int = 16,
    config: FaceLocatorConfig | None = None,
) -> FaceBox:
    """Re-localize inside the previous box grown by margin; full search on clip."""
    h, w = frame.shape[:2]
    x0, y0 = prev.x - margin, prev.y - margin
    x1, y1 = prev.x + prev.width + margin, prev.y + prev.height + margin
    if x0 < 0 or y0 < 0 or x1 > w or y1 > h:
        return localize_face(frame, config)
    box = localize_face(frame[y0:y1, x0:x1], config)
    return FaceBox(box.x + x0, box.y + y0, box.width, box.height)
