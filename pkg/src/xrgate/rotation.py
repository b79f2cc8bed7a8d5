"""Quaternion and rotation-matrix helpers.

Quaternions are stored [x, y, z, w] everywhere, matching the wire schemas.
Functions accept any sequence of floats and return tuples (quaternions) or
float64 numpy arrays (matrices, vectors).
"""
from __future__ import annotations

import math

import numpy as np

Quat = tuple[float, float, float, float]

IDENTITY_QUAT: Quat = (0.0, 0.0, 0.0, 1.0)


def quat_norm(q) -> float:
    x, y, z, w = q
    return math.sqrt(x * x + y * y + z * z + w * w)


def quat_normalize(q) -> Quat:
    n = quat_norm(q)
    if not math.isfinite(n) or n == 0.0:
        raise ValueError(f"cannot normalize quaternion with norm {n}")
    x, y, z, w = q
    return (x / n, y / n, z / n, w / n)


def quat_conjugate(q) -> Quat:
    x, y, z, w = q
    return (-x, -y, -z, w)


def quat_multiply(a, b) -> Quat:
    """Hamilton product a*b (apply b first, then a)."""
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return (
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    )


def quat_rotate_vector(q, v) -> np.ndarray:
    return quat_to_matrix(q) @ np.asarray(v, dtype=float)


def quat_to_matrix(q) -> np.ndarray:
    x, y, z, w = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return np.array(
        [
            [1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy)],
            [2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx)],
            [2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy)],
        ]
    )


def matrix_to_quat(m) -> Quat:
    """Unit quaternion [x, y, z, w] of a proper rotation matrix."""
    m = np.asarray(m, dtype=float)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0.0:
        s = math.sqrt(trace + 1.0) * 2.0
        q = ((m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s, 0.25 * s)
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = math.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = (0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s, (m[2, 1] - m[1, 2]) / s)
    elif m[1, 1] >= m[2, 2]:
        s = math.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = ((m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s, (m[0, 2] - m[2, 0]) / s)
    else:
        s = math.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = ((m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s, (m[1, 0] - m[0, 1]) / s)
    return quat_normalize(q)


def quat_to_rotvec(q) -> np.ndarray:
    """Axis-angle vector (axis * angle, radians) of a unit quaternion."""
    x, y, z, w = quat_normalize(q)
    sin_half = math.sqrt(x * x + y * y + z * z)
    angle = 2.0 * math.atan2(sin_half, w)
    if angle > math.pi:
        angle -= 2.0 * math.pi
    if sin_half < 1e-12:
        return np.zeros(3)
    scale = angle / sin_half
    return np.array([x * scale, y * scale, z * scale])


def rotvec_between_matrices(current, target) -> np.ndarray:
    """Axis-angle of the world-frame rotation taking `current` onto `target`."""
    rel = np.asarray(target, dtype=float) @ np.asarray(current, dtype=float).T
    return quat_to_rotvec(matrix_to_quat(rel))


def axis_angle_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    ux, uy, uz = axis
    c = math.cos(angle)
    s = math.sin(angle)
    ic = 1.0 - c
    return np.array(
        [
            [c + ux * ux * ic, ux * uy * ic - uz * s, ux * uz * ic + uy * s],
            [uy * ux * ic + uz * s, c + uy * uy * ic, uy * uz * ic - ux * s],
            [uz * ux * ic - uy * s, uz * uy * ic + ux * s, c + uz * uz * ic],
        ]
    )
