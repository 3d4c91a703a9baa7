"""Independent reference implementations used to freeze derived values.

Everything here is deliberately naive (plain loops, python floats) and
shares no code with the package.
"""
import math

import numpy as np


def raster_box_areas(a, b, res=1):
    """Intersection, union and enclosing-box areas by counting raster cells.

    Boxes are (x1, y1, x2, y2) with corners on multiples of ``1/res``.
    """
    def cells(box):
        x1, y1, x2, y2 = (int(round(v * res)) for v in box)
        return {(i, j) for i in range(x1, x2) for j in range(y1, y2)}

    ca, cb = cells(a), cells(b)
    inter = len(ca & cb)
    union = len(ca | cb)
    ex = (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))
    encl = len(cells(ex))
    return inter, union, encl


def raster_iou_giou(a, b, res=1):
    inter, union, encl = raster_box_areas(a, b, res)
    iou = inter / union
    return iou, iou - (encl - union) / encl


def brute_depth_metrics(gt, pred, valid_gt, valid_pred, threshold=1.25):
    """Element-by-element metric loop over cells valid in both maps."""
    n = 0
    s_abs = s_sq = s_rms = s_log = hits = 0.0
    for i in range(len(gt)):
        for j in range(len(gt[0])):
            if not (valid_gt[i][j] and valid_pred[i][j]):
                continue
            g, p = float(gt[i][j]), float(pred[i][j])
            n += 1
            s_abs += abs(g - p) / g
            s_sq += ((g - p) / g) ** 2
            s_rms += (g - p) ** 2
            s_log += (math.log(g) - math.log(p)) ** 2
            hits += 1.0 if max(g / p, p / g) < threshold else 0.0
    return (s_abs / n, s_sq / n, math.sqrt(s_rms / n), math.sqrt(s_log / n), hits / n)


class ScalarCVKalman:
    """One-axis constant-velocity filter written out with scalar algebra."""

    def __init__(self, p0, var_p, var_v, t0):
        self.p, self.v = float(p0), 0.0
        self.P = [[var_p, 0.0], [0.0, var_v]]
        self.t = t0

    def predict(self, t, q):
        dt = t - self.t
        (a, b), (c, d) = self.P
        # F P F^T for F = [[1, dt], [0, 1]]
        a2 = a + dt * (b + c) + dt * dt * d
        b2 = b + dt * d
        c2 = c + dt * d
        g1, g2 = 0.5 * dt * dt, dt
        self.P = [[a2 + q * g1 * g1, b2 + q * g1 * g2], [c2 + q * g1 * g2, d + q * g2 * g2]]
        self.p += self.v * dt
        self.t = t

    def update(self, z, r, t, q):
        self.predict(t, q)
        (a, b), (c, d) = self.P
        s = a + r
        k1, k2 = a / s, c / s
        y = z - self.p
        self.p += k1 * y
        self.v += k2 * y
        # Joseph form with H = [1, 0]
        i11, i21 = 1.0 - k1, -k2
        # (I - K H) P (I - K H)^T + K r K^T, with I - KH = [[i11, 0], [i21, 1]]
        m11 = i11 * a
        m12 = i11 * b
        m21 = i21 * a + c
        m22 = i21 * b + d
        n11 = m11 * i11
        n12 = m11 * i21 + m12
        n21 = m21 * i11
        n22 = m21 * i21 + m22
        self.P = [[n11 + k1 * r * k1, n12 + k1 * r * k2], [n21 + k2 * r * k1, n22 + k2 * r * k2]]


def random_rotation(rng, max_angle):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(0.0, max_angle)
    K = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * K @ K


def pnp_instance(rng, n=20, max_angle=math.radians(30), max_t=1.0, intr=(500.0, 500.0, 320.0, 240.0), noise=0.0):
    """Forward-projection oracle: points in front of the camera, known (R, t)."""
    R = random_rotation(rng, max_angle)
    d = rng.normal(size=3)
    t = d / np.linalg.norm(d) * rng.uniform(0.1, max_t)
    cam = np.column_stack((rng.uniform(-1.5, 1.5, n), rng.uniform(-1.0, 1.0, n), rng.uniform(4.0, 8.0, n)))
    world = (cam - t) @ R  # R^T (cam - t), row-wise
    fx, fy, cx, cy = intr
    uv = np.column_stack((fx * cam[:, 0] / cam[:, 2] + cx, fy * cam[:, 1] / cam[:, 2] + cy))
    if noise > 0:
        uv = uv + rng.normal(0.0, noise, uv.shape)
    return world, uv, R, t


def textured_image(h=120, w=160, shift=(0.0, 0.0)):
    """Smooth multi-frequency texture sampled at shifted integer pixels."""
    r, c = np.mgrid[0:h, 0:w].astype(float)
    x = c - shift[0]
    y = r - shift[1]
    img = 0.5 + 0.2 * np.sin(0.21 * x) * np.cos(0.17 * y) + 0.15 * np.sin(0.05 * x + 0.09 * y)
    return np.clip(img, 0.0, 1.0)
