# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled tracking kernels; mirror of ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()

DEF CONVERGED = 0
DEF SINGULAR = 1
DEF EXHAUSTED = 2
DEF LOST = 3


def min_eig_response(gx, gy, Py_ssize_t half):
    cdef const double[:, ::1] X = np.ascontiguousarray(gx, dtype=np.float64)
    cdef const double[:, ::1] Y = np.ascontiguousarray(gy, dtype=np.float64)
    cdef Py_ssize_t h = X.shape[0], w = X.shape[1]
    out_arr = np.zeros((h, w))
    if h <= 2 * half or w <= 2 * half:
        return out_arr
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] sa = np.zeros((h + 1, w + 1))
    cdef double[:, ::1] sb = np.zeros((h + 1, w + 1))
    cdef double[:, ::1] sc = np.zeros((h + 1, w + 1))
    cdef Py_ssize_t r, c
    cdef double a, b, cc, tr, disc, v
    for r in range(h):
        for c in range(w):
            sa[r + 1, c + 1] = X[r, c] * X[r, c] + sa[r, c + 1] + sa[r + 1, c] - sa[r, c]
            sb[r + 1, c + 1] = X[r, c] * Y[r, c] + sb[r, c + 1] + sb[r + 1, c] - sb[r, c]
            sc[r + 1, c + 1] = Y[r, c] * Y[r, c] + sc[r, c + 1] + sc[r + 1, c] - sc[r, c]
    for r in range(half, h - half):
        for c in range(half, w - half):
            a = sa[r + half + 1, c + half + 1] - sa[r - half, c + half + 1] - sa[r + half + 1, c - half] + sa[r - half, c - half]
            b = sb[r + half + 1, c + half + 1] - sb[r - half, c + half + 1] - sb[r + half + 1, c - half] + sb[r - half, c - half]
            cc = sc[r + half + 1, c + half + 1] - sc[r - half, c + half + 1] - sc[r + half + 1, c - half] + sc[r - half, c - half]
            tr = 0.5 * (a + cc)
            disc = 0.25 * (a - cc) * (a - cc) + b * b
            if disc < 0.0:
                disc = 0.0
            v = tr - sqrt(disc)
            out[r, c] = v if v > 0.0 else 0.0
    return out_arr


cdef inline double _bilinear(const double[:, ::1] img, double x, double y) nogil:
    cdef Py_ssize_t h = img.shape[0], w = img.shape[1]
    cdef Py_ssize_t x0, y0, x1, y1
    cdef double ax, ay
    if x < 0.0:
        x = 0.0
    elif x > w - 1.0:
        x = w - 1.0
    if y < 0.0:
        y = 0.0
    elif y > h - 1.0:
        y = h - 1.0
    x0 = <Py_ssize_t>floor(x)
    y0 = <Py_ssize_t>floor(y)
    if w > 1 and x0 > w - 2:
        x0 = w - 2
    if h > 1 and y0 > h - 2:
        y0 = h - 2
    x1 = x0 + 1 if x0 + 1 < w else w - 1
    y1 = y0 + 1 if y0 + 1 < h else h - 1
    ax = x - x0
    ay = y - y0
    return ((img[y0, x0] * (1 - ax) + img[y0, x1] * ax) * (1 - ay)
            + (img[y1, x0] * (1 - ax) + img[y1, x1] * ax) * ay)


def lk_track_level(I, J, Ix, Iy, pts, guess, int half, int max_iters, double eps):
    cdef const double[:, ::1] cI = np.ascontiguousarray(I, dtype=np.float64)
    cdef const double[:, ::1] cJ = np.ascontiguousarray(J, dtype=np.float64)
    cdef const double[:, ::1] cX = np.ascontiguousarray(Ix, dtype=np.float64)
    cdef const double[:, ::1] cY = np.ascontiguousarray(Iy, dtype=np.float64)
    cdef const double[:, ::1] P = np.ascontiguousarray(pts, dtype=np.float64).reshape(-1, 2)
    cdef const double[:, ::1] G = np.ascontiguousarray(guess, dtype=np.float64).reshape(-1, 2)
    cdef Py_ssize_t n = P.shape[0]
    cdef Py_ssize_t h = cI.shape[0], w = cI.shape[1]
    cdef Py_ssize_t m = (2 * half + 1) * (2 * half + 1)
    flow_arr = np.zeros((n, 2))
    status_arr = np.full(n, EXHAUSTED, dtype=np.int8)
    cdef double[:, ::1] flow = flow_arr
    cdef cnp.int8_t[::1] status = status_arr
    cdef double[::1] tI = np.empty(m)
    cdef double[::1] tx = np.empty(m)
    cdef double[::1] ty = np.empty(m)
    cdef Py_ssize_t i, k, it
    cdef int dx, dy
    cdef double px, py, gxx, gxy, gyy, det, min_eig, vx, vy, gdx, gdy
    cdef double cx, cy, bx, by, ex, ey, diff, qx, qy
    with nogil:
        for i in range(n):
            px = P[i, 0]
            py = P[i, 1]
            gxx = 0.0
            gxy = 0.0
            gyy = 0.0
            k = 0
            for dy in range(-half, half + 1):
                for dx in range(-half, half + 1):
                    qx = px + dx
                    qy = py + dy
                    tI[k] = _bilinear(cI, qx, qy)
                    tx[k] = _bilinear(cX, qx, qy)
                    ty[k] = _bilinear(cY, qx, qy)
                    gxx += tx[k] * tx[k]
                    gxy += tx[k] * ty[k]
                    gyy += ty[k] * ty[k]
                    k += 1
            det = gxx * gyy - gxy * gxy
            min_eig = 0.25 * (gxx - gyy) * (gxx - gyy) + gxy * gxy
            if min_eig < 0.0:
                min_eig = 0.0
            min_eig = 0.5 * (gxx + gyy) - sqrt(min_eig)
            if min_eig < 1e-9:
                status[i] = SINGULAR
                continue
            vx = 0.0
            vy = 0.0
            gdx = G[i, 0]
            gdy = G[i, 1]
            for it in range(max_iters):
                cx = px + gdx + vx
                cy = py + gdy + vy
                if cx < 0.0 or cy < 0.0 or cx > w - 1.0 or cy > h - 1.0:
                    status[i] = LOST
                    break
                bx = 0.0
                by = 0.0
                k = 0
                for dy in range(-half, half + 1):
                    for dx in range(-half, half + 1):
                        diff = tI[k] - _bilinear(cJ, cx + dx, cy + dy)
                        bx += diff * tx[k]
                        by += diff * ty[k]
                        k += 1
                ex = (gyy * bx - gxy * by) / det
                ey = (gxx * by - gxy * bx) / det
                vx += ex
                vy += ey
                if ex * ex + ey * ey < eps * eps:
                    status[i] = CONVERGED
                    break
            flow[i, 0] = vx
            flow[i, 1] = vy
    return flow_arr, status_arr
