"""2x2 matrix helpers: rotations, polar factors, and distance to SO(2).

All operations broadcast over leading axes; matrices live in arrays of shape
(..., 2, 2).  Singular values come from the closed-form factorization through
|F|^2 and det F, so everything is branch-free and exact to rounding.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError

ID2 = np.eye(2)

# rotation generator: J @ e1 = e2, J @ e2 = -e1; d/da rot2(a) = rot2(a) @ J2
J2 = np.array([[0.0, -1.0], [1.0, 0.0]])


def det2(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F)
    return F[..., 0, 0] * F[..., 1, 1] - F[..., 0, 1] * F[..., 1, 0]


def trans2(F: np.ndarray) -> np.ndarray:
    return np.swapaxes(np.asarray(F), -1, -2)


def sym2(F: np.ndarray) -> np.ndarray:
    return 0.5 * (F + trans2(F))


def skew2(F: np.ndarray) -> np.ndarray:
    return 0.5 * (F - trans2(F))


def trace2(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F)
    return F[..., 0, 0] + F[..., 1, 1]


def frob(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Frobenius inner product A:B summed over the trailing 2x2 axes."""
    return np.sum(np.asarray(A) * np.asarray(B), axis=(-2, -1))


def norm2(A: np.ndarray) -> np.ndarray:
    return np.sqrt(frob(A, A))


def rot2(angle) -> np.ndarray:
    """Counterclockwise rotation matrices, shape angle.shape + (2, 2)."""
    a = np.asarray(angle, dtype=float)
    c, s = np.cos(a), np.sin(a)
    out = np.empty(a.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def wrap_angle(a) -> np.ndarray:
    """Map angles to the canonical branch (-pi, pi]."""
    a = np.asarray(a, dtype=float)
    return np.pi - np.mod(np.pi - a, 2.0 * np.pi)


def polar_angle(F: np.ndarray) -> np.ndarray:
    """Angle of the rotation nearest to F.  Requires det F > 0 everywhere.

    The nearest rotation maximizes tr(R^T F); for 2x2 matrices the maximizer
    has angle atan2(F21 - F12, F11 + F22), well defined whenever det F > 0
    because (F11 + F22)^2 + (F21 - F12)^2 = |F|^2 + 2 det F.
    """
    F = np.asarray(F, dtype=float)
    d = det2(F)
    if np.any(d <= 0.0):
        raise DomainError(
            f"nearest rotation undefined: min det F = {float(np.min(d)):.6g} <= 0"
        )
    u = F[..., 0, 0] + F[..., 1, 1]
    v = F[..., 1, 0] - F[..., 0, 1]
    ang = np.arctan2(v, u)
    # arctan2 may return exactly -pi; fold onto the canonical branch
    return np.where(ang <= -np.pi, ang + 2.0 * np.pi, ang)


def polar_rotation(F: np.ndarray) -> np.ndarray:
    """Rotation factor of the polar decomposition (matrix form)."""
    return rot2(polar_angle(F))


def svd2_vals(F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Singular values (s1 >= s2 >= 0) from |F|^2 and det F, closed form."""
    F = np.asarray(F, dtype=float)
    e = frob(F, F)
    d = det2(F)
    splus = np.sqrt(np.maximum(e + 2.0 * np.abs(d), 0.0))
    sminus = np.sqrt(np.maximum(e - 2.0 * np.abs(d), 0.0))
    return 0.5 * (splus + sminus), 0.5 * (splus - sminus)


def dist_so2(F: np.ndarray) -> np.ndarray:
    """Frobenius distance from F to the rotation group.

    With singular values s1, s2: sqrt((s1-1)^2 + (s2-1)^2) when det F >= 0,
    sqrt((s1-1)^2 + (s2+1)^2) when det F < 0.  Continuous across det F = 0.
    """
    F = np.asarray(F, dtype=float)
    s1, s2 = svd2_vals(F)
    d = det2(F)
    return np.where(
        d >= 0.0,
        np.hypot(s1 - 1.0, s2 - 1.0),
        np.hypot(s1 - 1.0, s2 + 1.0),
    )
