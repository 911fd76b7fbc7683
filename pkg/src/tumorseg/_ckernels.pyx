# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled morphological level-set kernels; same contract as ``_pykernels``."""

import numpy as np


cdef void _refresh_border(unsigned char[:, ::1] p) noexcept nogil:
    # edge-replicate the one-pixel frame of a padded buffer
    cdef Py_ssize_t H = p.shape[0], W = p.shape[1], r, c
    for r in range(1, H - 1):
        p[r, 0] = p[r, 1]
        p[r, W - 1] = p[r, W - 2]
    for c in range(W):
        p[0, c] = p[1, c]
        p[H - 1, c] = p[H - 2, c]


cdef void _sup_inf_padded(unsigned char[:, ::1] src, unsigned char[:, ::1] dst) noexcept nogil:
    cdef Py_ssize_t H = src.shape[0], W = src.shape[1], r, c
    cdef unsigned char *up
    cdef unsigned char *mid
    cdef unsigned char *dn
    cdef unsigned char *o
    for r in range(1, H - 1):
        up = &src[r - 1, 0]
        mid = &src[r, 0]
        dn = &src[r + 1, 0]
        o = &dst[r, 0]
        for c in range(1, W - 1):
            o[c] = mid[c] & ((mid[c - 1] & mid[c + 1]) | (up[c] & dn[c])
                             | (up[c - 1] & dn[c + 1]) | (up[c + 1] & dn[c - 1]))
    _refresh_border(dst)


cdef void _inf_sup_padded(unsigned char[:, ::1] src, unsigned char[:, ::1] dst) noexcept nogil:
    cdef Py_ssize_t H = src.shape[0], W = src.shape[1], r, c
    cdef unsigned char *up
    cdef unsigned char *mid
    cdef unsigned char *dn
    cdef unsigned char *o
    for r in range(1, H - 1):
        up = &src[r - 1, 0]
        mid = &src[r, 0]
        dn = &src[r + 1, 0]
        o = &dst[r, 0]
        for c in range(1, W - 1):
            o[c] = mid[c] | ((mid[c - 1] | mid[c + 1]) & (up[c] | dn[c])
                             & (up[c - 1] | dn[c + 1]) & (up[c + 1] | dn[c - 1]))
    _refresh_border(dst)


def _as_mask(u):
    return np.ascontiguousarray(u, dtype=np.uint8)


def _padded(u):
    return np.pad(_as_mask(u), 1, mode="edge")


def sup_inf(u):
    cdef unsigned char[:, ::1] a = _padded(u)
    cdef unsigned char[:, ::1] b = np.empty_like(np.asarray(a))
    _sup_inf_padded(a, b)
    return np.array(np.asarray(b)[1:-1, 1:-1])


def inf_sup(u):
    cdef unsigned char[:, ::1] a = _padded(u)
    cdef unsigned char[:, ::1] b = np.empty_like(np.asarray(a))
    _inf_sup_padded(a, b)
    return np.array(np.asarray(b)[1:-1, 1:-1])


def curvature_smooth(u, int passes):
    cdef unsigned char[:, ::1] a = _padded(u)
    cdef unsigned char[:, ::1] b = np.empty_like(np.asarray(a))
    cdef int i
    with nogil:
        for i in range(passes):
            if i % 2 == 0:
                _inf_sup_padded(a, b)
                _sup_inf_padded(b, a)
            else:
                _sup_inf_padded(a, b)
                _inf_sup_padded(b, a)
    return np.array(np.asarray(a)[1:-1, 1:-1])


cdef void _band_padded(unsigned char[:, ::1] p, unsigned char[:, ::1] out) noexcept nogil:
    # out[r, c] = 1 where the 3x3 neighbourhood of padded pixel (r+1, c+1) is non-uniform
    cdef Py_ssize_t h = out.shape[0], w = out.shape[1], r, c
    cdef unsigned char *up
    cdef unsigned char *mid
    cdef unsigned char *dn
    cdef unsigned char *o
    cdef unsigned char v
    for r in range(h):
        up = &p[r, 0]
        mid = &p[r + 1, 0]
        dn = &p[r + 2, 0]
        o = &out[r, 0]
        for c in range(w):
            v = mid[c + 1]
            o[c] = ((up[c] ^ v) | (up[c + 1] ^ v) | (up[c + 2] ^ v)
                    | (mid[c] ^ v) | (mid[c + 2] ^ v)
                    | (dn[c] ^ v) | (dn[c + 1] ^ v) | (dn[c + 2] ^ v)) != 0


def boundary_band(u):
    cdef unsigned char[:, ::1] p = _padded(u)
    out = np.empty((p.shape[0] - 2, p.shape[1] - 2), dtype=np.bool_)
    cdef unsigned char[:, ::1] o = out.view(np.uint8)
    with nogil:
        _band_padded(p, o)
    return out


def band_update(img, u, double c1, double c2, double lambda1, double lambda2):
    cdef const double[:, ::1] im = np.ascontiguousarray(img, dtype=np.float64)
    cdef unsigned char[:, ::1] p = _padded(u)
    cdef Py_ssize_t h = p.shape[0] - 2, w = p.shape[1] - 2, r, c
    if im.shape[0] != h or im.shape[1] != w:
        raise ValueError("image and level set shapes differ")
    out = np.array(np.asarray(p)[1:-1, 1:-1])
    cdef unsigned char[:, ::1] o = out
    cdef unsigned char[:, ::1] band = np.empty((h, w), dtype=np.uint8)
    cdef double v, d1, d2
    with nogil:
        _band_padded(p, band)
        for r in range(h):
            for c in range(w):
                if band[r, c]:
                    v = im[r, c]
                    d1 = (v - c1) * (v - c1)
                    d2 = (v - c2) * (v - c2)
                    o[r, c] = (lambda1 * d1) < (lambda2 * d2)
    return out
