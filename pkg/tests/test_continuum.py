import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlga import appendix
from qlga.algebra import (ModelParams, VelocityBasis, build_collision_matrix, diagonalizer,
                          eigenvalue_diagonal, mass_from_mu)
from qlga.continuum import (closed_form_B, closed_form_G, compute_B, effective_operator, solve_G,
                            verify_appendix, verify_model, zeta_full_dynamics_2d)
from qlga.errors import SingularSolveError

angles = st.floats(min_value=-math.pi + 1e-2, max_value=math.pi - 1e-2).filter(
    lambda t: abs(t) > 1e-2)


def test_one_dim_B_and_G():
    mu = np.exp(-0.8j)
    op = effective_operator(ModelParams(1, mu))
    assert np.abs(op.B[0] - np.array([[0, 1], [1, 0]])).max() < 1e-15
    G = np.array([[0, -1 / (1 - mu)], [-1 / (1 - mu.conjugate()), 0]])
    assert np.abs(op.G[0] - G).max() < 1e-14


def test_one_dim_minus_i_operator():
    op = effective_operator(ModelParams(1, -1j))
    assert abs(op.M[0, 0, 0, 0] - 0.5j) < 1e-15
    assert abs(op.mass - 1) < 1e-14


def test_two_dim_minus_i_operator():
    op = effective_operator(ModelParams(2, -1j))
    for a in range(2):
        assert abs(op.M[a, a, 0, 0] - 0.25j) < 1e-15
    assert np.abs(op.M[0, 1, 0]).max() < 1e-15
    assert np.abs(op.M[1, 0, 0]).max() < 1e-15


def test_half_identity():
    rng = np.random.default_rng(1)
    for theta in rng.uniform(-math.pi, math.pi, 50):
        mu = complex(math.cos(theta), math.sin(theta))
        want = 0.5 + 1j * math.sin(theta) / (2 * (1 - math.cos(theta)))
        assert abs(1 / (1 - mu) - want) < 1e-12 * max(1, abs(want))


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
def test_B_closed_form_and_symmetry(d):
    X = diagonalizer(d)
    Bs = compute_B(VelocityBasis.cartesian(d), X)
    ones = np.ones(2 * d) / math.sqrt(2 * d)
    for a, B in enumerate(Bs):
        assert np.abs(B - B.T).max() < 1e-14
        assert np.abs(B - closed_form_B(d, a)).max() < 1e-12
        # the uniform vector maps onto the axis vector of its own axis
        v = B @ (X @ ones)
        assert np.abs(np.delete(v, a + 1)).max() < 1e-14


@settings(max_examples=40)
@given(st.integers(1, 5), angles)
def test_G_equation_and_support(d, theta):
    p = ModelParams.from_theta(d, theta)
    op = effective_operator(p)
    D = eigenvalue_diagonal(d, p.mu)
    for a in range(d):
        G, B = op.G[a], op.B[a]
        assert np.abs(G - D @ G @ np.linalg.inv(D) + B).max() < 1e-12
        assert np.all((np.abs(G) > 0) <= (np.abs(B) > 0))
        assert np.abs(G - closed_form_G(d, a, p.mu)).max() < 1e-12


@settings(max_examples=40)
@given(st.integers(1, 5), angles)
def test_first_row_and_mass(d, theta):
    p = ModelParams.from_theta(d, theta)
    op = effective_operator(p)
    assert op.first_row_residual() < 1e-12
    assert abs(op.mass - mass_from_mu(p)) < 1e-10 * max(1, abs(op.mass))


def test_zero_B_gives_zero_G():
    assert np.all(solve_G(np.zeros((4, 4)), eigenvalue_diagonal(2, -1j)) == 0)


def test_singular_solve_names_indices():
    B = np.zeros((4, 4))
    B[1, 2] = 1.0
    with pytest.raises(SingularSolveError) as exc:
        solve_G(B, eigenvalue_diagonal(2, -1j))
    assert exc.value.indices == (1, 2)


def test_solve_G_rejects_non_unitary():
    with pytest.raises(ValueError):
        solve_G(np.eye(2), np.diag([2.0, 1.0]))


def test_appendix_examples():
    assert verify_appendix(2, -1j).max_deviation < 1e-12
    assert verify_appendix(3, np.exp(1j * math.pi / 4)).max_deviation < 1e-12


def test_appendix_transposed_channels_flagged():
    cmp = verify_appendix(2, -1j, channel_order=[1, 0, 3, 2])
    assert cmp.max_deviation > 0.1
    assert not cmp.ok()


def test_appendix_S_matches_gold():
    for d in (2, 3):
        mu = np.exp(0.3j)
        assert np.abs(build_collision_matrix(ModelParams(d, mu)).S - appendix.gold(d, mu).S).max() < 1e-15


def test_zeta_display_examples():
    z = zeta_full_dynamics_2d(ModelParams(2, -1j))
    assert z.deviation < 1e-12
    assert abs(z.xx[0, 0] - 0.25j) < 1e-15
    assert abs(z.xx[1, 1] + 0.25j) < 1e-15
    assert abs(z.xx[2, 2]) < 1e-15
    assert abs(z.xy[1, 2] + 0.25j) < 1e-15 and abs(z.xy[2, 1] + 0.25j) < 1e-15
    for M in (z.xx, z.yy, z.xy):
        assert np.abs(M[0, 1:]).max() < 1e-15


@pytest.mark.parametrize("tau", [0, 1, 2, 3, 5])
def test_zeta_display_oscillating_entries(tau):
    p = ModelParams(2, np.exp(0.9j))
    assert zeta_full_dynamics_2d(p, tau).deviation < 1e-12


def test_axis_swap_flips_fourth_component():
    # Swapping the axes fixes rows 0 and swaps rows 1, 2 of X but negates
    # row 3, so the d_y^2 source of component 3 is minus the d_x^2 one.
    X = diagonalizer(2)
    P = np.eye(4)[[1, 0, 3, 2]]
    want = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]])
    assert np.abs(X @ P @ X.T - want).max() < 1e-15
    z = zeta_full_dynamics_2d(ModelParams(2, np.exp(-0.4j)))
    assert abs(z.yy[3, 0] + z.xx[3, 0]) < 1e-15


def test_verify_model_all_pass():
    for d in (1, 2, 3, 4):
        checks, info = verify_model(ModelParams(d, np.exp(-1.2j)))
        assert all(c.passed for c in checks), [c for c in checks if not c.passed]
        assert info["mass"] == pytest.approx(info["mass_extracted"], rel=1e-10)
