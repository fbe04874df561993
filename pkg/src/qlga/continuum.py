"""Second-order continuum analysis of the lattice update.

All quantities are evaluated at ``tau = 0`` unless a ``tau`` argument is
given, in which case the ``D^-tau (.) D^tau`` conjugation is applied.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import appendix
from .algebra import (
    ALGEBRA_TOL,
    CONSISTENCY_TOL,
    ModelParams,
    VelocityBasis,
    build_collision_matrix,
    check_unitarity_identities,
    diagonalizer,
    eigenvalue_diagonal,
    mass_from_mu,
    max_abs,
)
from .errors import ConsistencyError, SingularSolveError

# Entries of B smaller than this are structural zeros.
STRUCTURAL_ZERO = 1e-14


def _r(a: int) -> float:
    return 1.0 / math.sqrt(a * (a + 1))


def closed_form_B(d: int, alpha: int) -> np.ndarray:
    """``B^alpha`` from the row formula, ``alpha`` 0-based.

    Only row/column ``alpha + 1`` is populated: ``1/sqrt(d)`` against the
    uniform sector and, in the ``lambda`` sector (columns ``d + j``),
    ``-sqrt(alpha/(alpha+1))`` at ``j = alpha`` and ``r(j)`` for ``j > alpha``.
    """
    n = 2 * d
    B = np.zeros((n, n), dtype=complex)
    a = alpha + 1
    row = np.zeros(n)
    row[0] = 1.0 / math.sqrt(d)
    if a >= 2:
        row[d + a - 1] = -math.sqrt(a - 1) / math.sqrt(a)
    for j in range(a, d):
        row[d + j] = _r(j)
    B[a, :] = row
    B[:, a] = row
    return B


def compute_B(basis: VelocityBasis, X: np.ndarray, closed_form_check: bool | None = None):
    """Return ``[X C^a X^-1 for each axis a]``.

    When ``closed_form_check`` is true (default: only for the Cartesian
    basis with the standard diagonalizer) each matrix is compared with
    :func:`closed_form_B` and a :class:`ConsistencyError` is raised on
    mismatch.
    """
    X = np.asarray(X)
    Xinv = np.linalg.inv(X)
    Bs = [X @ basis.C(a) @ Xinv for a in range(basis.d)]
    if closed_form_check is None:
        cart = VelocityBasis.cartesian(basis.d).vectors
        closed_form_check = (
            np.array_equal(basis.vectors, cart)
            and X.shape == (2 * basis.d,) * 2
            and np.allclose(X, diagonalizer(basis.d), atol=1e-15)
        )
    if closed_form_check:
        for a, B in enumerate(Bs):
            err = max_abs(B - closed_form_B(basis.d, a))
            if err > CONSISTENCY_TOL:
                raise ConsistencyError(f"B^{a + 1}: conjugation and row formula differ by {err:.3g}")
    return Bs


def _one_minus_phase(delta: float) -> complex:
    """``1 - exp(i delta)`` without cancellation for small ``delta``."""
    return -2j * math.sin(delta / 2) * cmath.exp(0.5j * delta)


def solve_G(B: np.ndarray, D: np.ndarray, angles=None) -> np.ndarray:
    """Solve ``G - D G D^-1 = -B`` for diagonal unitary ``D``.

    Uses ``G_ij = -B_ij / (1 - d_i conj(d_j))`` on the support of ``B``.
    If the eigenvalue arguments ``angles`` are given, the denominators are
    formed from angle differences, which keeps full relative accuracy when
    two eigenvalues are close.
    """
    B = np.asarray(B)
    evals = np.diag(np.asarray(D)).astype(complex)
    if np.any(np.abs(np.abs(evals) - 1.0) > 1e-12):
        raise ValueError("solve_G requires unit-modulus eigenvalues")
    n = len(evals)
    if angles is not None and len(angles) != n:
        raise ValueError("need one angle per eigenvalue")
    G = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            b = B[i, j]
            if abs(b) <= STRUCTURAL_ZERO:
                continue
            if angles is None:
                denom = 1.0 - evals[i] * evals[j].conjugate()
            else:
                denom = _one_minus_phase(angles[i] - angles[j])
            if abs(denom) < 1e-12:
                raise SingularSolveError(i, j, b)
            G[i, j] = -b / denom
    return G


def closed_form_G(d: int, alpha: int, mu: complex) -> np.ndarray:
    """``G^alpha`` from the row formulas (0-based ``alpha``)."""
    B = closed_form_B(d, alpha)
    a = alpha + 1
    G = -0.5 * B
    G[a, 0] = -B[a, 0] / (1 - complex(mu).conjugate())
    G[0, a] = -B[0, a] / (1 - complex(mu))
    return G


@dataclass(frozen=True)
class EffectiveOperator:
    """``M[a, b] = -B^a G^b - 1/2 X C^a C^b X^-1`` for every axis pair."""

    params: ModelParams
    B: tuple = field(repr=False)
    G: tuple = field(repr=False)
    XCCX: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    mass: float

    def conjugated(self, tau: int) -> np.ndarray:
        """``D^-tau M D^tau`` for every pair."""
        ev = np.diag(eigenvalue_diagonal(self.params.d, self.params.mu))
        phase = (ev ** -tau)[:, None] * (ev ** tau)[None, :]
        return self.M * phase

    def first_row_residual(self) -> float:
        d = self.params.d
        n = 2 * d
        target = np.zeros((d, d, n), dtype=complex)
        for a in range(d):
            target[a, a, 0] = 1j / (2 * mass_from_mu(self.params))
        return max_abs(self.M[:, :, 0, :] - target)


def effective_operator(params: ModelParams) -> EffectiveOperator:
    cm = build_collision_matrix(params)
    basis = VelocityBasis.cartesian(params.d)
    Bs = compute_B(basis, cm.X)
    angles = [params.theta] + [0.0] * params.d + [math.pi] * (params.d - 1)
    Gs = [solve_G(B, cm.D, angles) for B in Bs]
    d, n = params.d, 2 * params.d
    Xinv = np.linalg.inv(cm.X)
    XCCX = np.empty((d, d, n, n))
    M = np.empty((d, d, n, n), dtype=complex)
    for a in range(d):
        for b in range(d):
            XCCX[a, b] = cm.X @ basis.C(a) @ basis.C(b) @ Xinv
            M[a, b] = -Bs[a] @ Gs[b] - 0.5 * XCCX[a, b]
    m00 = M[0, 0, 0, 0]
    extracted = 1j / (2 * m00)
    if abs(extracted.imag) > CONSISTENCY_TOL * max(1.0, abs(extracted)):
        raise ConsistencyError(f"extracted mass is not real: {extracted}")
    mass = extracted.real
    expected = mass_from_mu(params)
    if abs(mass - expected) > CONSISTENCY_TOL * max(1.0, abs(expected)):
        raise ConsistencyError(f"extracted mass {mass} differs from {expected}")
    return EffectiveOperator(params, tuple(Bs), tuple(Gs), XCCX, M, mass)


@dataclass(frozen=True)
class AppendixComparison:
    d: int
    mu: complex
    deviations: dict

    @property
    def max_deviation(self) -> float:
        return max(self.deviations.values())

    def ok(self, tol: float = ALGEBRA_TOL) -> bool:
        return self.max_deviation < tol


def verify_appendix(d: int, mu: complex, channel_order=None) -> AppendixComparison:
    """Compare computed ``S, X, B^a, G^a`` with the hard-coded references.

    ``channel_order`` relabels the velocity channels (a permutation of
    ``range(2d)``) while keeping the standard diagonalizer, which is how a
    mismatched convention shows up.
    """
    if d not in (2, 3):
        raise ValueError("reference matrices exist only for d = 2 and d = 3")
    params = ModelParams(d, mu)
    ref = appendix.gold(d, params.mu)
    cm = build_collision_matrix(params)
    basis = VelocityBasis.cartesian(d)
    S = np.asarray(cm.S)
    if channel_order is not None:
        p = np.asarray(channel_order)
        if sorted(p.tolist()) != list(range(2 * d)):
            raise ValueError("channel_order must be a permutation")
        basis = VelocityBasis(d, basis.vectors[p])
        S = S[np.ix_(p, p)]
    Bs = compute_B(basis, cm.X, closed_form_check=False)
    dev = {"S": max_abs(S - ref.S), "X": max_abs(cm.X - ref.X), "D": max_abs(cm.D - ref.D)}
    for a in range(d):
        dev[f"B{a + 1}"] = max_abs(Bs[a] - ref.B[a])
        try:
            dev[f"G{a + 1}"] = max_abs(solve_G(Bs[a], cm.D) - ref.G[a])
        except SingularSolveError:
            dev[f"G{a + 1}"] = math.inf
    return AppendixComparison(d, params.mu, dev)


@dataclass(frozen=True)
class ZetaDynamics2D:
    xx: np.ndarray
    yy: np.ndarray
    xy: np.ndarray
    deviation: float


def zeta_full_dynamics_2d(params: ModelParams, tau: int = 0) -> ZetaDynamics2D:
    """Coefficients of ``d_x^2``, ``d_y^2`` and ``d_x d_y`` for all four components."""
    if params.d != 2:
        raise ValueError("zeta_full_dynamics_2d needs d = 2")
    op = effective_operator(params)
    M = op.conjugated(tau)
    xx, yy, xy = M[0, 0], M[1, 1], M[0, 1] + M[1, 0]
    ref = appendix.zeta_display_2d(params.mu, op.mass, tau)
    dev = max(max_abs(xx - ref[0]), max_abs(yy - ref[1]), max_abs(xy - ref[2]))
    return ZetaDynamics2D(xx, yy, xy, dev)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.value < self.tol


def verify_model(params: ModelParams) -> tuple[list[Check], dict]:
    """Run every algebraic check for ``params``.

    Returns the checks and a dict of informational values (mass etc).
    """
    d = params.d
    cm = build_collision_matrix(params)
    S, X, D = np.asarray(cm.S), cm.X, cm.D
    n = 2 * d
    rep = check_unitarity_identities(d, params.mu)
    checks = [
        Check("unitarity_row_norm", rep.row_norm_residual, ALGEBRA_TOL),
        Check("unitarity_orthogonality", rep.orthogonality_residual, ALGEBRA_TOL),
        Check("S_unitary", max_abs(S @ S.conj().T - np.eye(n)), ALGEBRA_TOL),
        Check("X_orthonormal", max_abs(X @ X.T - np.eye(n)), ALGEBRA_TOL),
        Check("S_spectral", max_abs(np.linalg.inv(X) @ D @ X - S), ALGEBRA_TOL),
    ]
    op = effective_operator(params)
    m = mass_from_mu(params)
    checks.append(Check("mass_extraction", abs(op.mass - m), CONSISTENCY_TOL))
    checks.append(Check("schrodinger_first_row", op.first_row_residual(), ALGEBRA_TOL))
    checks.append(Check("G_equation", max(
        max_abs(G - D @ G @ np.linalg.inv(D) + B) for B, G in zip(op.B, op.G)), ALGEBRA_TOL))
    if d in (2, 3):
        cmp = verify_appendix(d, params.mu)
        checks.append(Check(f"appendix_{d}d", cmp.max_deviation, ALGEBRA_TOL))
    if d == 2:
        checks.append(Check("zeta_display_2d", zeta_full_dynamics_2d(params).deviation, ALGEBRA_TOL))
    info = {"d": d, "mu": params.mu, "theta": params.theta, "mass": m, "mass_extracted": op.mass}
    return checks, info
