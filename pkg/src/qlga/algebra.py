"""Model-defining matrices for the Cartesian unitary lattice-Boltzmann model.

Channel convention: with ``d`` spatial axes there are ``2d`` channels.
Channel ``a`` (0-based, ``a < d``) moves ``+1`` site along axis ``a`` and
channel ``a + d`` moves ``-1`` site along the same axis.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError

# Tolerances shared across the package.
UNIT_MODULUS_TOL = 1e-12
ALGEBRA_TOL = 1e-12
EIGEN_TOL = 1e-10
CONSISTENCY_TOL = 1e-10

# Eigenvalue of the (d-1)-fold sector; fixed.
LAMBDA = -1.0 + 0.0j


@dataclass(frozen=True)
class ModelParams:
    """Dimension, collision eigenvalue ``mu`` and lattice spacing.

    ``theta`` is the argument of ``mu`` in ``(-pi, pi]``. One time step
    corresponds to ``epsilon**2`` units of physical time.
    """

    d: int
    mu: complex
    epsilon: float = 1.0

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ParameterError(f"dimension must be a positive integer, got {self.d!r}")
        mu = complex(self.mu)
        object.__setattr__(self, "mu", mu)
        if abs(abs(mu) - 1.0) > UNIT_MODULUS_TOL:
            raise ParameterError(f"mu must have unit modulus, |mu| = {abs(mu)!r}")
        if abs(mu - 1.0) < UNIT_MODULUS_TOL:
            raise ParameterError("mass undefined at mu=1 (theta = 0)")
        if abs(mu - LAMBDA) < UNIT_MODULUS_TOL:
            raise ParameterError("mu = -1 coincides with the lambda eigenvalue; G-solve is singular")
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ParameterError(f"epsilon must be positive and finite, got {self.epsilon!r}")

    @classmethod
    def from_theta(cls, d: int, theta: float, epsilon: float = 1.0) -> "ModelParams":
        return cls(d, complex(math.cos(theta), math.sin(theta)), epsilon)

    @property
    def theta(self) -> float:
        t = cmath.phase(self.mu)
        return math.pi if t <= -math.pi else t

    @property
    def n_channels(self) -> int:
        return 2 * self.d

    @property
    def mass(self) -> float:
        return mass_from_mu(self)

    @property
    def dt(self) -> float:
        return self.epsilon**2


@dataclass(frozen=True)
class VelocityBasis:
    """Lattice velocity vectors in lattice units, one row per channel."""

    d: int
    vectors: np.ndarray = field(repr=False)

    @classmethod
    def cartesian(cls, d: int) -> "VelocityBasis":
        eye = np.eye(d, dtype=np.int64)
        vecs = np.concatenate([eye, -eye])
        vecs.setflags(write=False)
        return cls(d, vecs)

    @property
    def n_channels(self) -> int:
        return self.vectors.shape[0]

    def C(self, alpha: int) -> np.ndarray:
        """Diagonal matrix of the ``alpha`` components of every velocity."""
        return np.diag(self.vectors[:, alpha].astype(float))


@dataclass(frozen=True)
class CollisionMatrix:
    """Collision matrix ``S`` with its spectral factors, ``S = X^T D X``."""

    params: ModelParams
    S: np.ndarray = field(repr=False)
    X: np.ndarray = field(repr=False)
    D: np.ndarray = field(repr=False)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.diag(self.D).copy()

    def __array__(self, dtype=None, copy=None):
        return self.S if dtype is None else self.S.astype(dtype)


def diagonalizer(d: int) -> np.ndarray:
    """Real orthogonal ``X`` whose rows span the three symmetry sectors.

    Row 0 is the uniform vector, rows ``1..d`` the normalized axis vectors
    ``(e_a - e_{a+d})/sqrt(2)``, and rows ``d+1..2d-1`` the vectors equal on
    ``a`` and ``a+d`` summing to zero. For ``d = 1`` this is the 2x2
    Hadamard-like matrix.
    """
    n = 2 * d
    X = np.zeros((n, n))
    X[0, :] = 1.0 / math.sqrt(n)
    for a in range(d):
        X[1 + a, a] = 1.0 / math.sqrt(2)
        X[1 + a, a + d] = -1.0 / math.sqrt(2)
    for j in range(1, d):
        norm = math.sqrt(2 * j * (j + 1))
        row = d + j
        for a in range(j):
            X[row, a] = X[row, a + d] = 1.0 / norm
        X[row, j] = X[row, j + d] = -j / norm
    return X


def eigenvalue_diagonal(d: int, mu: complex) -> np.ndarray:
    return np.diag(np.array([mu] + [1.0] * d + [LAMBDA] * (d - 1), dtype=complex))


def collision_entries(d: int, mu: complex) -> np.ndarray:
    """Raw ``S`` for any ``mu``, without parameter validation."""
    n = 2 * d
    S = np.full((n, n), (1 + complex(mu)) / n, dtype=complex)
    for a in range(d):
        S[a, a + d] -= 1.0
        S[a + d, a] -= 1.0
    return S


def build_collision_matrix(params: ModelParams) -> CollisionMatrix:
    d, mu = params.d, params.mu
    S = collision_entries(d, mu)
    X = diagonalizer(d)
    D = eigenvalue_diagonal(d, mu)
    for arr in (S, X, D):
        arr.setflags(write=False)
    return CollisionMatrix(params, S, X, D)


def mass_from_mu(params: ModelParams) -> float:
    """Signed particle mass ``d (cot theta - csc theta)``.

    Evaluated as the identical ``-d tan(theta/2)``; the cotangent and
    cosecant terms cancel catastrophically as ``theta -> 0``.
    """
    theta = params.theta
    if theta == 0.0:
        raise ParameterError("mass undefined at mu=1")
    return mass_half_angle(params.d, theta)


def mass_cot_csc(d: int, theta: float) -> float:
    """Literal ``d (cot theta - csc theta)``, kept for cross-checks."""
    return d * (math.cos(theta) / math.sin(theta) - 1.0 / math.sin(theta))


def mass_half_angle(d: int, theta: float) -> float:
    """Equivalent closed form ``-d tan(theta/2)``."""
    return -d * math.tan(theta / 2)


@dataclass(frozen=True)
class UnitarityReport:
    d: int
    mu: complex
    row_norm_residual: float
    orthogonality_residual: float
    matrix_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.row_norm_residual, self.orthogonality_residual, self.matrix_residual)

    def ok(self, tol: float = ALGEBRA_TOL) -> bool:
        return self.max_residual < tol


def check_unitarity_identities(d: int, mu: complex) -> UnitarityReport:
    """Evaluate the closed-form row-norm and row-orthogonality identities.

    ``mu`` is not validated here, so off-circle values report nonzero
    residuals instead of raising.
    """
    mu = complex(mu)
    mc = mu.conjugate()
    q = 4 * d * d
    row = (2 * d - 1) * (1 + mu) * (1 + mc) / q + (1 + mu - 2 * d) * (1 + mc - 2 * d) / q
    orth = ((2 * d - 2) * (1 + mu) * (1 + mc) / q
            + (1 + mu) * (1 + mc - 2 * d) / q
            + (1 + mu - 2 * d) * (1 + mc) / q)
    S = collision_entries(d, mu)
    mat = np.abs(S @ S.conj().T - np.eye(2 * d)).max()
    return UnitarityReport(d, mu, abs(row - 1.0), abs(orth), float(mat))


def max_abs(a) -> float:
    return float(np.max(np.abs(np.asarray(a)))) if np.size(a) else 0.0


def parse_mu(text: str) -> complex:
    """Parse a complex literal such as ``0.6+0.8i`` or ``-1j``."""
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(s)
    except ValueError as exc:
        raise ParameterError(f"cannot parse complex value {text!r}") from exc
