"""Low-level image operations shared by every pipeline stage.

Colour-space conversions, edge filters, binary morphology, the Haar wavelet
pyramid and histogram utilities. Images are numpy arrays: RGB frames are
(H, W, 3) uint8, grayscale images (H, W) float, binary images (H, W) uint8
with values in {0, 1} (0 = feature/edge, 1 = tissue).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

# Sobel pair: the "vertical" filter responds to vertical edges (horizontal
# gradients), the "horizontal" one to horizontal edges.
SOBEL_VERTICAL = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
SOBEL_HORIZONTAL = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])

# Coarse/fine 5x5 edge filters; both favour horizontal facial features.
COARSE_FILTER = np.array(
    [
        [-1.0, -1.0, 0.0, -1.0, -1.0],
        [-2.0, -2.0, 0.0, -2.0, -2.0],
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [2.0, 2.0, 0.0, 2.0, 2.0],
        [2.0, 2.0, 0.0, 2.0, 2.0],
    ]
)
FINE_FILTER = COARSE_FILTER.copy()
FINE_FILTER[4] = [1.5, 1.7, 0.0, 1.7, 1.5]

_KERNEL3 = np.ones((3, 3), dtype=bool)

# sRGB -> XYZ (D65). The reference white is the transform of RGB white so
# that achromatic pixels map exactly onto the a*=0 / u*=0 axis.
_SRGB_TO_XYZ = np.array(
    [
        [0.4124564, 0.3575761, 0.1804375],
        [0.2126729, 0.7151522, 0.0721750],
        [0.0193339, 0.1191920, 0.9503041],
    ]
)
_XYZ_WHITE = _SRGB_TO_XYZ.sum(axis=1)


def _require_rgb(img: np.ndarray) -> np.ndarray:
    if img.ndim != 3 or img.shape[2] != 3 or img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"expected an (H, W, 3) RGB image, got shape {img.shape}")
    return img.astype(np.float64)


def luma(img: np.ndarray) -> np.ndarray:
    """ITU-601 luma of an RGB image."""
    f = _require_rgb(img)
    return 0.299 * f[..., 0] + 0.587 * f[..., 1] + 0.114 * f[..., 2]


def rgb_to_ycbcr(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel (Y, Cb, Cr). Chroma values are left unclamped."""
    f = _require_rgb(img)
    r, g, b = f[..., 0], f[..., 1], f[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return y, cb, cr


def warped_hue(img: np.ndarray) -> np.ndarray:
    """Hue in degrees folded into [0, 180] so red wraps onto one interval.

    Achromatic pixels (R=G=B) get hue 0.
    """
    f = _require_rgb(img)
    r, g, b = f[..., 0], f[..., 1], f[..., 2]
    mx = f.max(axis=-1)
    c = mx - f.min(axis=-1)
    h = np.zeros_like(mx)
    safe = np.where(c > 0, c, 1.0)
    is_r = (c > 0) & (mx == r)
    is_g = (c > 0) & (mx == g) & ~is_r
    is_b = (c > 0) & ~is_r & ~is_g
    h = np.where(is_r, (60.0 * (g - b) / safe) % 360.0, h)
    h = np.where(is_g, 60.0 * (b - r) / safe + 120.0, h)
    h = np.where(is_b, 60.0 * (r - g) / safe + 240.0, h)
    return np.where(h <= 180.0, h, 360.0 - h)


def trichromatic(img: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Chromaticity (r, g, b) with r+g+b = 1; black pixels map to (1/3, 1/3, 1/3)."""
    f = _require_rgb(img)
    total = f.sum(axis=-1)
    safe = np.where(total > 0, total, 3.0)
    r = np.where(total > 0, f[..., 0], 1.0) / safe
    g = np.where(total > 0, f[..., 1], 1.0) / safe
    b = np.where(total > 0, f[..., 2], 1.0) / safe
    return r, g, b


def pseudo_hue(img: np.ndarray) -> np.ndarray:
    """R / (R + G), 0 where R+G = 0. Separates lip from skin tones."""
    f = _require_rgb(img)
    rg = f[..., 0] + f[..., 1]
    return np.where(rg > 0, f[..., 0], 0.0) / np.where(rg > 0, rg, 1.0)


def rgb_to_lab_luv(img: np.ndarray) -> tuple[np.ndarray, ...]:
    """Per-pixel CIELAB (L*, a*, b*) and CIELUV (u*, v*), D65 reference white."""
    srgb = _require_rgb(img) / 255.0
    lin = np.where(srgb <= 0.04045, srgb / 12.92, ((srgb + 0.055) / 1.055) ** 2.4)
    xyz = lin @ _SRGB_TO_XYZ.T
    xn, yn, zn = _XYZ_WHITE
    tx, ty, tz = xyz[..., 0] / xn, xyz[..., 1] / yn, xyz[..., 2] / zn

    eps = (6.0 / 29.0) ** 3

    def _f(t: np.ndarray) -> np.ndarray:
        return np.where(t > eps, np.cbrt(t), t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)

    fx, fy, fz = _f(tx), _f(ty), _f(tz)
    lstar = 116.0 * fy - 16.0
    astar = 500.0 * (fx - fy)
    bstar = 200.0 * (fy - fz)

    den = xyz[..., 0] + 15.0 * xyz[..., 1] + 3.0 * xyz[..., 2]
    den_n = xn + 15.0 * yn + 3.0 * zn
    upn, vpn = 4.0 * xn / den_n, 9.0 * yn / den_n
    safe = np.where(den > 0, den, 1.0)
    up = np.where(den > 0, 4.0 * xyz[..., 0] / safe, upn)
    vp = np.where(den > 0, 9.0 * xyz[..., 1] / safe, vpn)
    ustar = 13.0 * lstar * (up - upn)
    vstar = 13.0 * lstar * (vp - vpn)
    return lstar, astar, bstar, ustar, vstar


def sobel(img: np.ndarray, direction: str) -> np.ndarray:
    """Signed Sobel responses with replicate border padding."""
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError(f"sobel needs a grayscale image of at least 3x3, got {img.shape}")
    kernels = {"vertical": SOBEL_VERTICAL, "horizontal": SOBEL_HORIZONTAL}
    if direction not in kernels:
        raise ValueError(f"direction must be 'vertical' or 'horizontal', got {direction!r}")
    return ndimage.correlate(img.astype(np.float64), kernels[direction], mode="nearest")


def _window_entropy5(img: np.ndarray) -> np.ndarray:
    """Shannon entropy (bits) of the exact values in each 5x5 neighbourhood."""
    padded = np.pad(img.astype(np.float64), 2, mode="edge")
    win = np.lib.stride_tricks.sliding_window_view(padded, (5, 5))
    flat = win.reshape(-1, 25)
    out = np.empty(flat.shape[0])
    chunk = 4096
    for s in range(0, flat.shape[0], chunk):
        block = flat[s : s + chunk]
        counts = (block[:, :, None] == block[:, None, :]).sum(axis=2)
        out[s : s + chunk] = -np.log2(counts / 25.0).mean(axis=1)
    return out.reshape(img.shape)


def entropy_edge(img: np.ndarray, theta: float) -> np.ndarray:
    """Classify pixels by neighbourhood entropy: 0 (edge) where H >= theta, else 1."""
    if img.ndim != 2 or img.shape[0] < 5 or img.shape[1] < 5:
        raise ValueError(f"entropy_edge needs at least 5x5, got {img.shape}")
    h = _window_entropy5(img)
    return np.where(h >= theta, 0, 1).astype(np.uint8)


def _tie_tol(f: np.ndarray) -> float:
    # "<=" comparisons against window sums must treat fp noise as a tie
    return 1e-9 * max(1.0, float(np.abs(f).max()))


def dual_filter_edge(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Adaptive coarse/fine edge filtering.

    The coarse filter applies where the local 5x5 mean is <= the global mean,
    the fine filter elsewhere. Returns (responses clamped to [0, 255], binary
    image with 1 = tissue where the clamped response saturates at 255).
    """
    if img.ndim != 2 or img.shape[0] < 5 or img.shape[1] < 5:
        raise ValueError(f"dual_filter_edge needs at least 5x5, got {img.shape}")
    f = img.astype(np.float64)
    local_sum = ndimage.correlate(f, np.ones((5, 5)), mode="nearest")
    coarse = ndimage.correlate(f, COARSE_FILTER, mode="nearest")
    fine = ndimage.correlate(f, FINE_FILTER, mode="nearest")
    raw = np.where(local_sum <= 25.0 * f.mean() + _tie_tol(f), coarse, fine)
    resp = np.clip(raw, 0.0, 255.0)
    return resp, (resp >= 255.0).astype(np.uint8)


def morphology(img: np.ndarray, op: str) -> np.ndarray:
    """Binary erosion/dilation/opening with a 3x3 square element (1 = object)."""
    b = img.astype(bool)
    if op == "erode":
        out = ndimage.binary_erosion(b, _KERNEL3)
    elif op == "dilate":
        out = ndimage.binary_dilation(b, _KERNEL3)
    elif op == "open":
        out = ndimage.binary_dilation(ndimage.binary_erosion(b, _KERNEL3), _KERNEL3)
    else:
        raise ValueError(f"op must be erode, dilate or open, got {op!r}")
    return out.astype(np.uint8)


@dataclass
class WaveletLevel:
    ll: np.ndarray
    hl: np.ndarray
    lh: np.ndarray
    hh: np.ndarray


@dataclass
class WaveletPyramid:
    """Haar decomposition; levels[k-1] holds the level-k sub-bands."""

    levels: list[WaveletLevel]

    def level(self, k: int) -> WaveletLevel:
        return self.levels[k - 1]


def _haar_step(a: np.ndarray) -> WaveletLevel:
    # Averaging convention: LL is the 2x2 block mean, detail bands are signed
    # half-differences, so intensity scale is preserved across levels.
    if a.shape[0] % 2:
        a = np.vstack([a, a[-1:]])
    if a.shape[1] % 2:
        a = np.hstack([a, a[:, -1:]])
    lo = (a[:, 0::2] + a[:, 1::2]) / 2.0
    hi = (a[:, 0::2] - a[:, 1::2]) / 2.0
    return WaveletLevel(
        ll=(lo[0::2] + lo[1::2]) / 2.0,
        hl=(hi[0::2] + hi[1::2]) / 2.0,
        lh=(lo[0::2] - lo[1::2]) / 2.0,
        hh=(hi[0::2] - hi[1::2]) / 2.0,
    )


def haar_pyramid(img: np.ndarray, levels: int) -> WaveletPyramid:
    """Recursive Haar analysis; odd dimensions are replicate-padded per level."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if img.ndim != 2:
        raise ValueError(f"haar_pyramid needs a grayscale image, got shape {img.shape}")
    if img.shape[0] < 2**levels or img.shape[1] < 2**levels:
        raise ValueError(
            f"image {img.shape} too small for a {levels}-level decomposition"
        )
    out: list[WaveletLevel] = []
    cur = img.astype(np.float64)
    for _ in range(levels):
        lvl = _haar_step(cur)
        out.append(lvl)
        cur = lvl.ll
    return WaveletPyramid(out)


def binarize_local_avg(grid: np.ndarray) -> np.ndarray:
    """0 where a coefficient is <= its local 5x5 mean, 1 otherwise."""
    if grid.ndim != 2 or grid.shape[0] < 5 or grid.shape[1] < 5:
        raise ValueError(f"binarize_local_avg needs at least 5x5, got {grid.shape}")
    f = grid.astype(np.float64)
    local_sum = ndimage.correlate(f, np.ones((5, 5)), mode="nearest")
    return (25.0 * f > local_sum + _tie_tol(f)).astype(np.uint8)


def deinterlace_blend(frame: np.ndarray) -> np.ndarray:
    """Blend the two fields: each pair of scanlines becomes their average."""
    if frame.shape[0] < 2:
        raise ValueError("deinterlace_blend needs at least 2 scanlines")
    f = frame.astype(np.float64)
    out = f.copy()
    n_pairs = frame.shape[0] // 2
    even = f[0 : 2 * n_pairs : 2]
    odd = f[1 : 2 * n_pairs : 2]
    mean = (even + odd) / 2.0
    out[0 : 2 * n_pairs : 2] = mean
    out[1 : 2 * n_pairs : 2] = mean
    return np.rint(out).astype(frame.dtype) if frame.dtype.kind == "u" else out


def histograms(
    x: np.ndarray, y: np.ndarray, bins: int = 32
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Normalized marginal and joint histograms of two same-sized images."""
    if x.shape != y.shape:
        raise ValueError(f"histograms needs equal shapes, got {x.shape} vs {y.shape}")
    xr = (float(x.min()), float(x.max()))
    yr = (float(y.min()), float(y.max()))
    n = x.size
    pmf_x = np.histogram(x.ravel(), bins=bins, range=xr)[0] / n
    pmf_y = np.histogram(y.ravel(), bins=bins, range=yr)[0] / n
    joint = np.histogram2d(x.ravel(), y.ravel(), bins=bins, range=[xr, yr])[0] / n
    return pmf_x, pmf_y, joint
