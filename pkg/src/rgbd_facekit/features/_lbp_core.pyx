# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled 3x3 LBP kernels.

Inputs are C-contiguous uint16 images (8-bit frames are widened losslessly
by the caller).  Every routine releases the GIL so bands can run on threads.
"""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint16_t, uint8_t, int64_t, intptr_t

cnp.import_array()


cdef inline unsigned int _code(const uint16_t* up, const uint16_t* mid,
                               const uint16_t* dn, Py_ssize_t x) noexcept nogil:
    # weights clockwise from top-left; comparisons are branch-free
    cdef uint16_t c = mid[x]
    return ((up[x - 1] >= c)
            | ((up[x] >= c) << 1)
            | ((up[x + 1] >= c) << 2)
            | ((mid[x + 1] >= c) << 3)
            | ((dn[x + 1] >= c) << 4)
            | ((dn[x] >= c) << 5)
            | ((dn[x - 1] >= c) << 6)
            | ((mid[x - 1] >= c) << 7))


def lbp_map(const uint16_t[:, ::1] img):
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t y, x
    out = np.empty((h - 2, w - 2), dtype=np.uint8)
    cdef uint8_t[:, ::1] o = out
    cdef uint8_t* orow
    with nogil:
        for y in range(1, h - 1):
            orow = &o[y - 1, 0]
            for x in range(1, w - 1):
                orow[x - 1] = <uint8_t>_code(&img[y - 1, 0], &img[y, 0], &img[y + 1, 0], x)
    return out


def hist_band(const uint16_t[:, ::1] img, Py_ssize_t row0, Py_ssize_t row1,
              const intptr_t[::1] row_block, const intptr_t[::1] col_block,
              int64_t[:, ::1] counts):
    """Accumulate block histograms of code-map rows ``row0 <= r < row1``.

    ``row_block``/``col_block`` give, per code-map row/column, the block
    offset (already multiplied by Kx for rows).  ``counts`` has shape
    ``(Kx*Ky, 256)`` and is private to the caller's band.
    """
    cdef Py_ssize_t w = img.shape[1]
    cdef Py_ssize_t r, x
    cdef int64_t* base = &counts[0, 0]
    cdef int64_t* blk
    cdef const uint16_t* up
    cdef const uint16_t* mid
    cdef const uint16_t* dn
    if row1 <= row0:
        return
    with nogil:
        for r in range(row0, row1):
            up = &img[r, 0]
            mid = &img[r + 1, 0]
            dn = &img[r + 2, 0]
            blk = base + row_block[r] * 256
            for x in range(1, w - 1):
                blk[col_block[x - 1] * 256 + _code(up, mid, dn, x)] += 1
