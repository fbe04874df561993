"""Single-particle stream-collide evolution on a periodic Cartesian lattice.

A :class:`WaveField` stores the amplitudes ``psi[x..., k]`` *after*
advection, i.e. one step maps ``psi -> advect(exp(-i eps^2 V) S psi)``.
Sites are indexed by integers ``n``; physical coordinates are ``n * eps``
and one step lasts ``eps**2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .algebra import CollisionMatrix, ModelParams, VelocityBasis
from .errors import NumericalError, ParameterError

NAN_CHECK_EVERY = 256


def mu_power(mu: complex, n: int) -> complex:
    """``mu**n`` by repeated squaring (exact for powers of ``1j``)."""
    if n < 0:
        mu, n = 1 / complex(mu), -n
    result, base = 1 + 0j, complex(mu)
    while n:
        if n & 1:
            result *= base
        base *= base
        n >>= 1
    return result


@dataclass
class WaveField:
    """Channel amplitudes over a periodic lattice.

    ``amplitudes`` has shape ``extents + (n_channels,)``. ``velocities``
    defaults to the Cartesian set of ``params.d``.
    """

    amplitudes: np.ndarray
    params: ModelParams
    tau: int = 0
    velocities: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if self.velocities is None:
            self.velocities = VelocityBasis.cartesian(self.params.d).vectors
        self.velocities = np.asarray(self.velocities, dtype=np.int64)
        nch, dim = self.velocities.shape
        if self.amplitudes.ndim != dim + 1 or self.amplitudes.shape[-1] != nch:
            raise ParameterError(
                f"amplitudes of shape {self.amplitudes.shape} do not match "
                f"{dim} axes and {nch} channels")

    @property
    def extents(self) -> tuple:
        return self.amplitudes.shape[:-1]

    @property
    def n_channels(self) -> int:
        return self.amplitudes.shape[-1]

    @property
    def time(self) -> float:
        return self.tau * self.params.dt

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def copy(self) -> "WaveField":
        return replace(self, amplitudes=self.amplitudes.copy())


@dataclass(frozen=True)
class PotentialField:
    """Real potential sampled at the lattice sites."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(v)):
            raise ParameterError("potential contains non-finite values")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, extents, value: float) -> "PotentialField":
        return cls(np.full(tuple(extents), float(value)))

    @classmethod
    def from_function(cls, extents, epsilon: float, fn) -> "PotentialField":
        """Sample ``fn(*coords)`` at physical coordinates ``n * epsilon``."""
        coords = np.meshgrid(*[np.arange(n) * epsilon for n in extents], indexing="ij")
        return cls(np.broadcast_to(fn(*coords), tuple(extents)).astype(float))

    def phase(self, epsilon: float) -> np.ndarray:
        return np.exp(-1j * epsilon**2 * self.values)


@lru_cache(maxsize=32)
def _stream_table(extents: tuple, velocities: tuple) -> np.ndarray:
    vel = np.array(velocities, dtype=np.int64)
    grids = np.indices(extents).reshape(len(extents), -1)
    dest = np.empty((grids.shape[1], len(vel)), dtype=np.intp)
    for k, v in enumerate(vel):
        moved = (grids + v[:, None]) % np.array(extents)[:, None]
        dest[:, k] = np.ravel_multi_index(tuple(moved), extents)
    dest.setflags(write=False)
    return dest


def stream_table(extents, velocities) -> np.ndarray:
    """Flat destination index of every ``(site, channel)`` after advection."""
    return _stream_table(tuple(int(n) for n in extents),
                         tuple(tuple(int(c) for c in v) for v in np.asarray(velocities)))


def _matrix(S) -> np.ndarray:
    if isinstance(S, CollisionMatrix):
        S = S.S
    return np.ascontiguousarray(S, dtype=np.complex128)


def _phase(field: WaveField, potential) -> np.ndarray:
    if potential is None:
        return np.empty(0, dtype=np.complex128)
    if isinstance(potential, PotentialField):
        v = potential
    else:
        v = PotentialField(potential)
    if v.values.shape != field.extents:
        raise ParameterError(f"potential shape {v.values.shape} != lattice {field.extents}")
    return np.ascontiguousarray(v.phase(field.params.epsilon).ravel())


def _check_extents(field: WaveField):
    if min(field.extents) < 2:
        raise ParameterError("every lattice extent must be at least 2")


def step(field: WaveField, S, potential=None, backend: str | None = None) -> WaveField:
    """Advance one time step; returns a new field."""
    _check_extents(field)
    return evolve(field, S, 1, potential=potential, backend=backend)


def evolve(field: WaveField, S, steps: int, potential=None, backend: str | None = None,
           callback=None, every: int = 1) -> WaveField:
    """Advance ``steps`` time steps.

    ``callback(field)`` is invoked on the initial field and then every
    ``every`` steps; it receives a read-only view that is only valid for
    the duration of the call.
    """
    _check_extents(field)
    if steps < 0:
        raise ParameterError("steps must be nonnegative")
    kern = _kernels.get_backend(backend)
    threads = _kernels.num_threads()
    Smat = _matrix(S)
    if Smat.shape != (field.n_channels,) * 2:
        raise ParameterError(f"collision matrix {Smat.shape} does not match {field.n_channels} channels")
    phase = _phase(field, potential)
    dest = stream_table(field.extents, field.velocities)
    nsites = dest.shape[0]
    cur = field.amplitudes.reshape(nsites, -1).copy()
    nxt = np.empty_like(cur)
    tau = field.tau

    def emit(buf, t):
        arr = buf.reshape(field.amplitudes.shape)
        arr.flags.writeable = False
        callback(replace(field, amplitudes=arr, tau=t))

    if callback is not None:
        emit(cur, tau)
    for s in range(1, steps + 1):
        kern.stream_collide(cur, Smat, phase, dest, nxt, threads)
        cur, nxt = nxt, cur
        tau += 1
        if s % NAN_CHECK_EVERY == 0 or s == steps:
            if not np.isfinite(cur).all():
                raise NumericalError(f"non-finite amplitudes after step {tau}")
        if callback is not None and s % every == 0:
            emit(cur, tau)
    return replace(field, amplitudes=cur.reshape(field.amplitudes.shape), tau=tau)


def outgoing_amplitudes(field: WaveField, S, potential=None) -> np.ndarray:
    """Collision output at every site before advection, same shape as the field."""
    out = field.amplitudes @ _matrix(S).T
    phase = _phase(field, potential)
    if phase.size:
        out *= phase.reshape(field.extents)[..., None]
    return out


def total_amplitude(field: WaveField) -> np.ndarray:
    """``mu^-tau (n_channels)^-1/2 sum_k psi_k`` at every site."""
    pref = mu_power(field.params.mu, -field.tau) / np.sqrt(field.n_channels)
    return pref * field.amplitudes.sum(axis=-1)


def _uniform_channels(params: ModelParams, envelope: np.ndarray) -> WaveField:
    nch = 2 * params.d
    amp = np.repeat(envelope[..., None], nch, axis=-1).astype(np.complex128)
    amp /= np.sqrt(np.vdot(amp, amp).real)
    return WaveField(amp, params)


def _check_dims(params: ModelParams, extents) -> tuple:
    extents = tuple(int(n) for n in extents)
    if len(extents) != params.d:
        raise ParameterError(f"need {params.d} extents, got {extents}")
    if min(extents) < 2:
        raise ParameterError("every lattice extent must be at least 2")
    return extents


def init_plane_wave(params: ModelParams, extents, l) -> WaveField:
    """Equal-amplitude plane wave ``exp(2 pi i sum_a l_a n_a / N_a)`` in every channel."""
    extents = _check_dims(params, extents)
    l = tuple(int(v) for v in l)
    if len(l) != params.d:
        raise ParameterError(f"need {params.d} wave integers, got {l}")
    for la, n in zip(l, extents):
        if 2 * abs(la) >= n:
            raise ParameterError(f"wave integer {la} aliases on an axis of {n} sites")
    grids = np.meshgrid(*[np.arange(n) / n for n in extents], indexing="ij")
    arg = sum(2 * np.pi * la * g for la, g in zip(l, grids))
    return _uniform_channels(params, np.exp(1j * arg))


def _min_image(extents, epsilon, center):
    out = []
    for n, c, g in zip(extents, center,
                       np.meshgrid(*[np.arange(n) for n in extents], indexing="ij")):
        L = n * epsilon
        out.append(np.mod(g * epsilon - c + L / 2, L) - L / 2)
    return out


def gaussian_packet(params: ModelParams, extents, center, width: float, momentum=None) -> WaveField:
    """Gaussian envelope times plane wave, equal in all channels.

    ``width`` is the standard deviation of ``|Psi|^2`` along each axis,
    all arguments in physical units.
    """
    extents = _check_dims(params, extents)
    if width < 2 * params.epsilon:
        raise ParameterError(f"width {width} is below two lattice spacings")
    momentum = np.zeros(params.d) if momentum is None else np.asarray(momentum, dtype=float)
    disp = _min_image(extents, params.epsilon, center)
    r2 = sum(x * x for x in disp)
    arg = sum(p * x for p, x in zip(momentum, disp))
    return _uniform_channels(params, np.exp(-r2 / (4 * width**2) + 1j * arg))


def delta_field(params: ModelParams, extents, site, channel: int) -> WaveField:
    """Unit amplitude in one ``(site, channel)``; ``channel`` is 0-based."""
    extents = _check_dims(params, extents)
    amp = np.zeros(extents + (2 * params.d,), dtype=np.complex128)
    amp[tuple(site) + (channel,)] = 1.0
    return WaveField(amp, params)


def random_field(params: ModelParams, extents, rng: np.random.Generator) -> WaveField:
    extents = _check_dims(params, extents)
    shape = extents + (2 * params.d,)
    amp = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return WaveField(amp / np.sqrt(np.vdot(amp, amp).real), params)


def position_moments(field: WaveField, center) -> tuple[np.ndarray, np.ndarray]:
    """Mean and variance per axis of ``|Psi|^2`` about ``center`` (minimal image)."""
    p = np.abs(total_amplitude(field)) ** 2
    p /= p.sum()
    disp = _min_image(field.extents, field.params.epsilon, center)
    mean = np.array([(p * x).sum() for x in disp])
    var = np.array([(p * x * x).sum() for x in disp]) - mean**2
    return mean, var


def update_matrix(params: ModelParams, extents, S=None, potential=None) -> np.ndarray:
    """Dense single-step matrix on flattened ``(site, channel)`` amplitudes."""
    extents = _check_dims(params, extents)
    nch = 2 * params.d
    size = int(np.prod(extents)) * nch
    if S is None:
        from .algebra import build_collision_matrix
        S = build_collision_matrix(params)
    U = np.empty((size, size), dtype=np.complex128)
    for col in range(size):
        e = np.zeros(size, dtype=np.complex128)
        e[col] = 1.0
        f = step(WaveField(e.reshape(extents + (nch,)), params), S, potential)
        U[:, col] = f.amplitudes.ravel()
    return U
