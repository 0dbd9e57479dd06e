"""Pure numpy fallback with the same signatures as the compiled kernels."""
import numpy as np

# (dy, dx, weight), clockwise from top-left
NEIGHBOURS = (
    (-1, -1, 1), (-1, 0, 2), (-1, 1, 4), (0, 1, 8),
    (1, 1, 16), (1, 0, 32), (1, -1, 64), (0, -1, 128),
)


def _codes(img: np.ndarray, y0: int, y1: int) -> np.ndarray:
    """Codes for centre rows ``y0 <= y < y1`` (image coordinates)."""
    w = img.shape[1]
    centre = img[y0:y1, 1:w - 1]
    out = np.zeros(centre.shape, dtype=np.uint8)
    for dy, dx, weight in NEIGHBOURS:
        nb = img[y0 + dy:y1 + dy, 1 + dx:w - 1 + dx]
        out |= (nb >= centre).astype(np.uint8) * np.uint8(weight)
    return out


def lbp_map(img: np.ndarray) -> np.ndarray:
    return _codes(img, 1, img.shape[0] - 1)


def hist_band(img, row0, row1, row_block, col_block, counts):
    if row1 <= row0:
        return
    codes = _codes(img, row0 + 1, row1 + 1).astype(np.intp)
    blocks = row_block[row0:row1, None] + col_block[None, :]
    flat = (blocks * 256 + codes).ravel()
    counts += np.bincount(flat, minlength=counts.size).reshape(counts.shape)
