import math

import numpy as np
import pytest

from qlga import _kernels, engine
from qlga.algebra import ModelParams, build_collision_matrix
from qlga.engine import (PotentialField, WaveField, delta_field, evolve, gaussian_packet,
                         init_plane_wave, mu_power, random_field, step, total_amplitude)
from qlga.errors import NumericalError, ParameterError


def setup(d=2, mu=-1j, eps=1.0):
    p = ModelParams(d, mu, eps)
    return p, build_collision_matrix(p)


def test_delta_one_step(backend):
    p, S = setup(1)
    f = step(delta_field(p, (8,), (0,), 0), S, backend=backend)
    a = f.amplitudes
    assert abs(a[1, 0] - (1 - 1j) / 2) < 1e-15
    assert abs(a[7, 1] + (1 + 1j) / 2) < 1e-15
    assert np.count_nonzero(a) == 2
    assert f.tau == 1


def stored_frame_four_step(psi):
    r = np.roll
    c1, c2 = psi[:, 0], psi[:, 1]
    return (0.25 * (-r(c1, 4) + 3 * r(c1, 2) + c1 + r(c1, -2))
            + 0.25j * (r(c2, 4) - r(c2, 2) - c2 + r(c2, -2)))


def test_four_step_stored_frame(backend, rng):
    p, S = setup(1)
    for _ in range(20):
        f = random_field(p, (int(rng.integers(10, 30)),), rng)
        f4 = evolve(f, S, 4, backend=backend)
        assert np.abs(f4.amplitudes[:, 0] - stored_frame_four_step(f.amplitudes)).max() < 1e-13


@pytest.mark.parametrize("d,N", [(1, 64), (2, 16), (3, 6)])
def test_norm_per_step(backend, rng, d, N):
    p, S = setup(d, np.exp(0.4j))
    f = random_field(p, (N,) * d, rng)
    for _ in range(10):
        g = step(f, S, backend=backend)
        assert abs(g.norm2() - f.norm2()) < 1e-14
        f = g


def test_backends_agree(rng):
    p, S = setup(2, np.exp(-0.7j))
    f = random_field(p, (12, 10), rng)
    V = PotentialField(rng.standard_normal((12, 10)))
    outs = [evolve(f, S, 17, V, backend=b).amplitudes for b in _kernels.available_backends()]
    for o in outs[1:]:
        assert np.abs(o - outs[0]).max() < 1e-14


def test_thread_count_does_not_change_result(rng):
    if "compiled" not in _kernels.available_backends():
        pytest.skip("compiled kernels not built")
    p, S = setup(2)
    f = random_field(p, (16, 16), rng)
    before = _kernels.num_threads()
    try:
        _kernels.set_num_threads(1)
        a = evolve(f, S, 10, backend="compiled").amplitudes
        _kernels.set_num_threads(3)
        b = evolve(f, S, 10, backend="compiled").amplitudes
    finally:
        _kernels.set_num_threads(before)
    assert np.array_equal(a, b)


def test_linearity(backend, rng):
    p, S = setup(2, np.exp(0.3j))
    shape = (9, 7, 4)
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    y = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    a, b = 0.3 - 1.2j, 2.1 + 0.4j
    lhs = step(WaveField(a * x + b * y, p), S, backend=backend).amplitudes
    rhs = (a * step(WaveField(x, p), S, backend=backend).amplitudes
           + b * step(WaveField(y, p), S, backend=backend).amplitudes)
    assert np.abs(lhs - rhs).max() < 1e-13


def test_translation_covariance(backend, rng):
    p, S = setup(2)
    f = random_field(p, (8, 6), rng)
    shifted = WaveField(np.roll(f.amplitudes, (1, -2), axis=(0, 1)), p)
    a = np.roll(step(f, S, backend=backend).amplitudes, (1, -2), axis=(0, 1))
    b = step(shifted, S, backend=backend).amplitudes
    assert np.array_equal(a, b)


def test_constant_potential_is_global_phase(backend, rng):
    p, S = setup(2, -1j, 0.05)
    f = random_field(p, (10, 10), rng)
    V0 = 7.5
    a = evolve(f, S, 40, backend=backend)
    b = evolve(f, S, 40, PotentialField.constant((10, 10), V0), backend=backend)
    assert np.abs(b.amplitudes - a.amplitudes * np.exp(-1j * p.epsilon**2 * V0 * 40)).max() < 1e-12


def test_potential_from_function_uses_physical_coordinates():
    V = PotentialField.from_function((4, 2), 0.5, lambda x, y: x + 10 * y)
    assert V.values[3, 1] == pytest.approx(1.5 + 5.0)
    with pytest.raises(ParameterError):
        PotentialField(np.array([np.nan]))


def test_total_amplitude_uniform():
    p, _ = setup(2)
    c = 0.1 + 0.2j
    f = WaveField(np.full((3, 3, 4), c), p, tau=3)
    psi = total_amplitude(f)
    assert np.abs(psi - mu_power(-1j, -3) * 2 * c).max() < 1e-15
    assert mu_power(-1j, -8) == 1


def test_plane_wave_properties():
    p, S = setup(2)
    f = init_plane_wave(p, (16, 16), (0, 0))
    assert np.ptp(np.abs(f.amplitudes)) == 0
    assert abs(f.norm2() - 1) < 1e-14
    g = evolve(init_plane_wave(p, (32, 32), (3, 1)), S, 37)
    assert np.ptp(np.abs(total_amplitude(g))) < 1e-10
    plus = init_plane_wave(p, (16, 16), (2, 1))
    minus = init_plane_wave(p, (16, 16), (-2, -1))
    assert np.abs(total_amplitude(WaveField(plus.amplitudes + minus.amplitudes, p)).imag).max() < 1e-14


def test_plane_wave_rejects_aliasing():
    p, _ = setup(2)
    with pytest.raises(ParameterError):
        init_plane_wave(p, (16, 16), (8, 0))


def test_gaussian_packet():
    p, _ = setup(2, -1j, 1.0)
    f = gaussian_packet(p, (32, 32), (16.0, 16.0), 3.0)
    assert abs(f.norm2() - 1) < 1e-12
    P = np.abs(total_amplitude(f)) ** 2
    assert np.abs(P[1:, :] - P[1:, :][::-1, :]).max() < 1e-10
    with pytest.raises(ParameterError):
        gaussian_packet(p, (32, 32), (16.0, 16.0), 1.5)


def test_nan_detection():
    p, S = setup(1)
    amp = np.zeros((8, 2), dtype=complex)
    amp[2, 0] = np.nan
    with pytest.raises(NumericalError):
        evolve(WaveField(amp, p), S, 3)


def test_callback_is_read_only_and_cadenced(rng):
    p, S = setup(1)
    seen = []

    def cb(f):
        assert not f.amplitudes.flags.writeable
        seen.append(f.tau)

    evolve(random_field(p, (8,), rng), S, 10, callback=cb, every=4)
    assert seen == [0, 4, 8]


def test_update_matrix_is_unitary():
    p, S = setup(2, np.exp(0.5j))
    U = engine.update_matrix(p, (3, 4), S)
    assert np.abs(U @ U.conj().T - np.eye(U.shape[0])).max() < 1e-13


def test_validation():
    p, S = setup(1)
    with pytest.raises(ParameterError):
        WaveField(np.zeros((4, 3)), p)
    with pytest.raises(ParameterError):
        evolve(WaveField(np.zeros((1, 2)), p), S, 1)
    with pytest.raises(ParameterError):
        evolve(WaveField(np.zeros((4, 2)), p), S, -1)
    with pytest.raises(ParameterError):
        evolve(WaveField(np.zeros((4, 2)), p), S, 1, potential=np.zeros(5))


def test_position_moments_of_packet():
    p, _ = setup(1, -1j, 1.0)
    f = gaussian_packet(p, (256,), (100.0,), 6.0)
    mean, var = engine.position_moments(f, (100.0,))
    assert abs(mean[0]) < 1e-10
    assert var[0] == pytest.approx(36.0, rel=1e-10)
    assert math.isfinite(var[0])
