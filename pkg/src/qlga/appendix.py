"""Hard-coded 2D and 3D reference matrices, evaluated at a numeric ``mu``.

Entries are transcribed by hand, independently of the general-``d``
construction, so they can serve as golden data.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

s2 = np.sqrt(2.0)
s3 = np.sqrt(3.0)
s6 = np.sqrt(6.0)


@dataclass(frozen=True)
class AppendixGold:
    d: int
    mu: complex
    X: np.ndarray
    D: np.ndarray
    S: np.ndarray
    B: tuple
    G: tuple


def gold_2d(mu: complex) -> AppendixGold:
    mu = complex(mu)
    u = 1.0 / (1.0 - mu)
    uc = 1.0 / (1.0 - mu.conjugate())
    X = np.array([
        [0.5, 0.5, 0.5, 0.5],
        [1 / s2, 0, -1 / s2, 0],
        [0, 1 / s2, 0, -1 / s2],
        [0.5, -0.5, 0.5, -0.5],
    ])
    D = np.diag([mu, 1, 1, -1]).astype(complex)
    p, q = mu + 1, mu - 3
    S = np.array([
        [p, p, q, p],
        [p, p, p, q],
        [q, p, p, p],
        [p, q, p, p],
    ]) / 4
    B1 = np.array([
        [0, 1 / s2, 0, 0],
        [1 / s2, 0, 0, 1 / s2],
        [0, 0, 0, 0],
        [0, 1 / s2, 0, 0],
    ], dtype=complex)
    B2 = np.array([
        [0, 0, 1 / s2, 0],
        [0, 0, 0, 0],
        [1 / s2, 0, 0, -1 / s2],
        [0, 0, -1 / s2, 0],
    ], dtype=complex)
    G1 = np.array([
        [0, -u / s2, 0, 0],
        [-uc / s2, 0, 0, -1 / (2 * s2)],
        [0, 0, 0, 0],
        [0, -1 / (2 * s2), 0, 0],
    ], dtype=complex)
    G2 = np.array([
        [0, 0, -u / s2, 0],
        [0, 0, 0, 0],
        [-uc / s2, 0, 0, 1 / (2 * s2)],
        [0, 0, 1 / (2 * s2), 0],
    ], dtype=complex)
    return AppendixGold(2, mu, X, D, S, (B1, B2), (G1, G2))


def gold_3d(mu: complex) -> AppendixGold:
    mu = complex(mu)
    u = 1.0 / (1.0 - mu)
    uc = 1.0 / (1.0 - mu.conjugate())
    X = np.array([
        [1 / s6] * 6,
        [1 / s2, 0, 0, -1 / s2, 0, 0],
        [0, 1 / s2, 0, 0, -1 / s2, 0],
        [0, 0, 1 / s2, 0, 0, -1 / s2],
        [0.5, -0.5, 0, 0.5, -0.5, 0],
        [1 / (2 * s3), 1 / (2 * s3), -1 / s3, 1 / (2 * s3), 1 / (2 * s3), -1 / s3],
    ])
    D = np.diag([mu, 1, 1, 1, -1, -1]).astype(complex)
    p, q = mu + 1, mu - 5
    S = np.array([
        [p, p, p, q, p, p],
        [p, p, p, p, q, p],
        [p, p, p, p, p, q],
        [q, p, p, p, p, p],
        [p, q, p, p, p, p],
        [p, p, q, p, p, p],
    ]) / 6

    z = np.zeros((6, 6), dtype=complex)
    B1, B2, B3 = z.copy(), z.copy(), z.copy()
    G1, G2, G3 = z.copy(), z.copy(), z.copy()

    B1[0, 1] = B1[1, 0] = 1 / s3
    B1[1, 4] = B1[4, 1] = 1 / s2
    B1[1, 5] = B1[5, 1] = 1 / s6
    G1[0, 1] = -u / s3
    G1[1, 0] = -uc / s3
    G1[1, 4] = G1[4, 1] = -1 / (2 * s2)
    G1[1, 5] = G1[5, 1] = -1 / (2 * s6)

    B2[0, 2] = B2[2, 0] = 1 / s3
    B2[2, 4] = B2[4, 2] = -1 / s2
    B2[2, 5] = B2[5, 2] = 1 / s6
    G2[0, 2] = -u / s3
    G2[2, 0] = -uc / s3
    G2[2, 4] = G2[4, 2] = 1 / (2 * s2)
    G2[2, 5] = G2[5, 2] = -1 / (2 * s6)

    B3[0, 3] = B3[3, 0] = 1 / s3
    B3[3, 5] = B3[5, 3] = -np.sqrt(2.0 / 3.0)
    G3[0, 3] = -u / s3
    G3[3, 0] = -uc / s3
    G3[3, 5] = G3[5, 3] = 1 / s6

    return AppendixGold(3, mu, X, D, S, (B1, B2, B3), (G1, G2, G3))


def gold(d: int, mu: complex) -> AppendixGold:
    if d == 2:
        return gold_2d(mu)
    if d == 3:
        return gold_3d(mu)
    raise ValueError(f"reference matrices exist only for d = 2 and d = 3, not {d}")


def zeta_display_2d(mu: complex, mass: float, tau: int = 0):
    """Coefficient matrices of d_x^2, d_y^2 and d_x d_y in the 2D display.

    The fourth row of the diagonalizer changes sign when the axes are
    swapped, so the oscillating ``[3, 0]`` entry of the ``d_y^2`` matrix is
    the negative of the ``d_x^2`` one.
    """
    c = 1j / (2 * mass)
    osc = c * (-complex(mu)) ** tau
    xx = np.zeros((4, 4), dtype=complex)
    yy = np.zeros((4, 4), dtype=complex)
    xy = np.zeros((4, 4), dtype=complex)
    xx[0, 0], xx[1, 1], xx[3, 0] = c, -c, osc
    yy[0, 0], yy[2, 2], yy[3, 0] = c, -c, -osc
    xy[1, 2] = xy[2, 1] = -c
    return xx, yy, xy
