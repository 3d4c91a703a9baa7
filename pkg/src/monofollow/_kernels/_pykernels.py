"""Pure numpy implementations of the tracking kernels.

Behaviourally identical to the compiled ``_ckernels`` extension and used
whenever it is unavailable.
"""
import numpy as np

CONVERGED = 0
SINGULAR = 1
EXHAUSTED = 2
LOST = 3


def min_eig_response(gx, gy, half):
    """Minimum eigenvalue of the box-summed structure tensor.

    Cells closer than ``half`` to the border get zero response.
    """
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    h, w = gx.shape
    out = np.zeros((h, w))
    if h <= 2 * half or w <= 2 * half:
        return out

    def box(a):
        s = np.zeros((h + 1, w + 1))
        s[1:, 1:] = a.cumsum(0).cumsum(1)
        k = 2 * half + 1
        return s[k:, k:] - s[:-k, k:] - s[k:, :-k] + s[:-k, :-k]

    a = box(gx * gx)
    b = box(gx * gy)
    c = box(gy * gy)
    tr = 0.5 * (a + c)
    disc = np.sqrt(np.maximum((0.5 * (a - c)) ** 2 + b * b, 0.0))
    out[half : h - half, half : w - half] = np.maximum(tr - disc, 0.0)
    return out


def _bilinear(img, xs, ys):
    h, w = img.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.minimum(np.floor(xs).astype(np.intp), w - 2 if w > 1 else 0)
    y0 = np.minimum(np.floor(ys).astype(np.intp), h - 2 if h > 1 else 0)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    ax = xs - x0
    ay = ys - y0
    top = img[y0, x0] * (1 - ax) + img[y0, x1] * ax
    bot = img[y1, x0] * (1 - ax) + img[y1, x1] * ax
    return top * (1 - ay) + bot * ay


def lk_track_level(I, J, Ix, Iy, pts, guess, half, max_iters, eps):
    """Iterative LK refinement of every point at one pyramid level.

    ``pts`` and ``guess`` are (N, 2) arrays in array coordinates (x=col,
    y=row).  Returns ``(flow, status)`` where flow excludes the guess.
    """
    I = np.asarray(I, dtype=np.float64)
    J = np.asarray(J, dtype=np.float64)
    Ix = np.asarray(Ix, dtype=np.float64)
    Iy = np.asarray(Iy, dtype=np.float64)
    n = len(pts)
    flow = np.zeros((n, 2))
    status = np.full(n, EXHAUSTED, dtype=np.int8)
    h, w = I.shape
    offs = np.arange(-half, half + 1, dtype=np.float64)
    ox, oy = np.meshgrid(offs, offs)
    ox = ox.ravel()
    oy = oy.ravel()
    for i in range(n):
        px, py = pts[i]
        wx = px + ox
        wy = py + oy
        tI = _bilinear(I, wx, wy)
        gx = _bilinear(Ix, wx, wy)
        gy = _bilinear(Iy, wx, wy)
        gxx = np.dot(gx, gx)
        gxy = np.dot(gx, gy)
        gyy = np.dot(gy, gy)
        det = gxx * gyy - gxy * gxy
        min_eig = 0.5 * (gxx + gyy) - np.sqrt(max(0.25 * (gxx - gyy) ** 2 + gxy * gxy, 0.0))
        if min_eig < 1e-9:
            status[i] = SINGULAR
            continue
        vx = 0.0
        vy = 0.0
        gdx, gdy = guess[i]
        for _ in range(max_iters):
            cx = px + gdx + vx
            cy = py + gdy + vy
            if cx < 0.0 or cy < 0.0 or cx > w - 1.0 or cy > h - 1.0:
                status[i] = LOST
                break
            diff = tI - _bilinear(J, wx + gdx + vx, wy + gdy + vy)
            bx = np.dot(diff, gx)
            by = np.dot(diff, gy)
            ex = (gyy * bx - gxy * by) / det
            ey = (gxx * by - gxy * bx) / det
            vx += ex
            vy += ey
            if ex * ex + ey * ey < eps * eps:
                status[i] = CONVERGED
                break
        flow[i] = vx, vy
    return flow, status
