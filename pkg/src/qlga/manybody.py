"""Many-particle dynamics.

Two models live here:

* the distinguishable two-particle lattice-Boltzmann model, with amplitudes
  ``psi[x, y, i, k]`` updated by ``S (x) S`` and advected in both
  coordinates, and
* the second-quantized lattice-gas automaton ``|psi> -> A U K |psi>`` on
  the occupation-number basis of :mod:`qlga.fock`, stored either per
  fixed particle number (default) or over the full Fock space.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .algebra import CollisionMatrix
from .errors import NumericalError, ParameterError
from .fock import DEFAULT_MAX_AMPLITUDES, FockSpace, check_budget, get_sector

UNITARY_TOL = 1e-12


def _popcount(q: int) -> int:
    return bin(q).count("1")


@dataclass(frozen=True)
class SiteCollisionT:
    """Number-conserving ``2^m x 2^m`` unitary acting on one site.

    Rows and columns are labelled by the local occupation pattern
    ``sum_k s_k 2^k``.
    """

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        T = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        size = T.shape[0]
        if T.shape != (size, size) or size & (size - 1):
            raise ParameterError("T must be square with a power-of-two size")
        if np.abs(T @ T.conj().T - np.eye(size)).max() > UNITARY_TOL:
            raise ParameterError("T is not unitary")
        pc = np.array([_popcount(q) for q in range(size)])
        if np.abs(T[pc[:, None] != pc[None, :]]).max(initial=0.0) > 0:
            raise ParameterError("T does not conserve the site particle number")
        T.setflags(write=False)
        object.__setattr__(self, "matrix", T)
        groups = [[q for q in range(size) if pc[q] == pc[p] and T[p, q] != 0] for p in range(size)]
        width = max(1, max(len(g) for g in groups))
        group = np.zeros((size, width), dtype=np.int64)
        for p, g in enumerate(groups):
            group[p, :len(g)] = g
        object.__setattr__(self, "_group", group)
        object.__setattr__(self, "_group_size", np.array([len(g) for g in groups], dtype=np.int64))

    @property
    def m(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    @property
    def single_particle_block(self) -> np.ndarray:
        idx = [1 << k for k in range(self.m)]
        return self.matrix[np.ix_(idx, idx)]

    @classmethod
    def from_collision(cls, S, block_phases=None) -> "SiteCollisionT":
        """Embed ``S`` as the one-particle block; other blocks are phases times identity.

        ``block_phases`` maps a particle number to the phase of its block
        (default 1 for every number, including the empty site).
        """
        S = np.asarray(S.S if isinstance(S, CollisionMatrix) else S, dtype=np.complex128)
        m = S.shape[0]
        phases = dict(block_phases or {})
        T = np.zeros((1 << m, 1 << m), dtype=np.complex128)
        for q in range(1 << m):
            T[q, q] = phases.get(_popcount(q), 1.0)
        idx = [1 << k for k in range(m)]
        T[np.ix_(idx, idx)] = S
        return cls(T)

    @classmethod
    def one_dimensional(cls, a: complex, b: complex, beta: complex = 1.0, alpha: complex = 1.0):
        """The 4x4 reflection-symmetric form ``diag(alpha, [[a, b], [b, a]], beta)``."""
        a, b, beta, alpha = (complex(v) for v in (a, b, beta, alpha))
        if abs(abs(alpha) - 1) > UNITARY_TOL or abs(abs(beta) - 1) > UNITARY_TOL:
            raise ParameterError("alpha and beta must have unit modulus")
        if abs(abs(a) ** 2 + abs(b) ** 2 - 1) > UNITARY_TOL:
            raise ParameterError("|a|^2 + |b|^2 must equal 1")
        if abs(a * b.conjugate() + a.conjugate() * b) > UNITARY_TOL:
            raise ParameterError("a conj(b) + conj(a) b must vanish")
        T = np.array([[alpha, 0, 0, 0], [0, a, b, 0], [0, b, a, 0], [0, 0, 0, beta]])
        return cls(T)

    def with_block_phase(self, n: int, phase: complex) -> "SiteCollisionT":
        """Copy with the ``n``-particle block replaced by ``phase`` times identity."""
        T = self.matrix.copy()
        idx = [q for q in range(T.shape[0]) if _popcount(q) == n]
        T[np.ix_(idx, idx)] = phase * np.eye(len(idx))
        return SiteCollisionT(T)


@dataclass(frozen=True)
class PairPotentialU:
    """Pair potential ``V[x, y]`` over flattened sites; phase ``exp(-i eps^2 V)`` per pair."""

    V: np.ndarray = field(repr=False)
    epsilon: float = 1.0

    def __post_init__(self):
        V = np.asarray(self.V, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1]:
            raise ParameterError("pair potential must be a square site-by-site array")
        if not np.allclose(V, V.T, atol=0, rtol=0):
            raise ParameterError("pair potential must be symmetric")
        object.__setattr__(self, "V", V)

    @classmethod
    def from_distance(cls, space: FockSpace, fn, epsilon: float = 1.0) -> "PairPotentialU":
        """``V(x, y) = fn(r)`` with ``r`` the periodic minimal-image distance in physical units."""
        coords = np.array(np.unravel_index(np.arange(space.n_sites), space.extents)).T
        diff = np.abs(coords[:, None, :] - coords[None, :, :])
        ext = np.array(space.extents)
        diff = np.minimum(diff, ext - diff) * epsilon
        r = np.sqrt((diff**2).sum(axis=-1))
        return cls(np.broadcast_to(fn(r), r.shape).astype(float), epsilon)

    @classmethod
    def contact(cls, space: FockSpace, value: float, epsilon: float = 1.0) -> "PairPotentialU":
        return cls(np.eye(space.n_sites) * value, epsilon)


@dataclass
class ManyBodyState:
    """Amplitudes over a sector (``n`` set) or the full Fock space (``n is None``)."""

    space: FockSpace
    amplitudes: np.ndarray
    n: int | None = None
    tau: int = 0
    max_amplitudes: int = DEFAULT_MAX_AMPLITUDES

    def __post_init__(self):
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        expected = self.sector.dim if self.n is not None else 1 << self.space.n_slots
        if self.amplitudes.shape != (expected,):
            raise ParameterError(f"expected {expected} amplitudes, got {self.amplitudes.shape}")

    @property
    def sector(self):
        return get_sector(self.space, self.n, self.max_amplitudes) if self.n is not None else None

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def full_indices(self) -> np.ndarray:
        """Full Fock index of every stored amplitude (as Python ints)."""
        if self.n is None:
            return np.arange(len(self.amplitudes), dtype=object)
        sec = self.sector
        return np.array([sec.full_index(i) for i in range(sec.dim)], dtype=object)

    def to_full(self) -> "ManyBodyState":
        if self.n is None:
            return self
        check_budget(1 << self.space.n_slots, self.max_amplitudes, "full Fock storage")
        out = np.zeros(1 << self.space.n_slots, dtype=np.complex128)
        weights = (1 << self.sector.slots).sum(axis=1) if self.sector.n else np.zeros(1, dtype=np.int64)
        out[weights] = self.amplitudes
        return replace(self, amplitudes=out, n=None)


def _full_budget(space: FockSpace, max_amplitudes: int):
    check_budget(1 << space.n_slots, max_amplitudes, "full Fock storage")


def vacuum(space: FockSpace, sector: bool = True, max_amplitudes=DEFAULT_MAX_AMPLITUDES):
    if sector:
        return ManyBodyState(space, np.ones(1), 0, max_amplitudes=max_amplitudes)
    _full_budget(space, max_amplitudes)
    amp = np.zeros(1 << space.n_slots, dtype=np.complex128)
    amp[0] = 1
    return ManyBodyState(space, amp, None, max_amplitudes=max_amplitudes)


def basis_state(space: FockSpace, config, sector: bool = True, max_amplitudes=DEFAULT_MAX_AMPLITUDES):
    """Occupation basis state from ket notation, a full index, or ``(site, channel)`` pairs."""
    if isinstance(config, str):
        index = space.parse_state(config)
    elif isinstance(config, (int, np.integer)):
        index = int(config)
    else:
        index = 0
        for site, ch in config:
            index |= 1 << space.position(site, ch)
    n = _popcount(index)
    if sector:
        dim = math.comb(space.n_slots, n)
        check_budget(dim, max_amplitudes, f"the {n}-particle sector")
        st = ManyBodyState(space, np.zeros(dim), n, max_amplitudes=max_amplitudes)
        st.amplitudes[st.sector.index_of(index)] = 1.0
        return st
    _full_budget(space, max_amplitudes)
    amp = np.zeros(1 << space.n_slots, dtype=np.complex128)
    amp[index] = 1.0
    return ManyBodyState(space, amp, None, max_amplitudes=max_amplitudes)


def _slot_amplitudes(space: FockSpace, wave) -> np.ndarray:
    """One-particle amplitudes indexed by bit position."""
    amp = np.asarray(getattr(wave, "amplitudes", wave)).reshape(space.n_sites, space.m)
    out = np.empty(space.n_slots, dtype=np.complex128)
    out[space.m * (space.n_sites - 1 - np.arange(space.n_sites))[:, None]
        + np.arange(space.m)[None, :]] = amp
    return out


def symmetrized_product(space: FockSpace, waves, max_amplitudes=DEFAULT_MAX_AMPLITUDES):
    """Hard-boson state ``sum_perm prod_t phi_perm(t)(slot_t)``, normalized.

    Doubly occupied slots are dropped, so the result is exact only when
    the one-particle supports are disjoint.
    """
    n = len(waves)
    dim = math.comb(space.n_slots, n)
    check_budget(dim, max_amplitudes, f"the {n}-particle sector")
    st = ManyBodyState(space, np.zeros(dim), n,
                       max_amplitudes=max_amplitudes)
    phis = [_slot_amplitudes(space, w) for w in waves]
    slots = st.sector.slots
    amp = np.zeros(st.sector.dim, dtype=np.complex128)
    for perm in itertools.permutations(range(n)):
        term = np.ones(st.sector.dim, dtype=np.complex128)
        for t, which in enumerate(perm):
            term *= phis[which][slots[:, t]]
        amp += term
    norm = np.sqrt(np.vdot(amp, amp).real)
    if norm == 0:
        raise ParameterError("symmetrized state vanishes")
    st.amplitudes[:] = amp / norm
    return st


def advect(state: ManyBodyState) -> ManyBodyState:
    """Move every occupied slot ``(x, k)`` to ``(x + c_k, k)``."""
    out = np.empty_like(state.amplitudes)
    if state.n is not None:
        out[state.sector.advect_permutation] = state.amplitudes
    else:
        out[_full_advect_permutation(state.space)] = state.amplitudes
    return replace(state, amplitudes=out)


_FULL_PERM_CACHE: dict = {}


def _full_advect_permutation(space: FockSpace) -> np.ndarray:
    if space not in _FULL_PERM_CACHE:
        idx = np.arange(1 << space.n_slots, dtype=np.uint64)
        new = np.zeros_like(idx)
        for p, q in enumerate(space.advected_position):
            new |= ((idx >> np.uint64(p)) & np.uint64(1)) << np.uint64(q)
        _FULL_PERM_CACHE[space] = new.astype(np.intp)
    return _FULL_PERM_CACHE[space]


def collide(state: ManyBodyState, T: SiteCollisionT, backend: str | None = None) -> ManyBodyState:
    """Apply ``T`` at every site, i.e. ``K = T (x) T (x) ... (x) T``."""
    if T.m != state.space.m:
        raise ParameterError(f"T acts on {T.m} channels, lattice has {state.space.m}")
    if state.n is None:
        return replace(state, amplitudes=_collide_full(state, T))
    kern = _kernels.get_backend(backend)
    threads = _kernels.num_threads()
    pat, jpos, contrib = state.sector.site_tables
    cur = state.amplitudes.copy()
    nxt = np.empty_like(cur)
    for x in range(state.space.n_sites):
        kern.collide_site(cur, T.matrix, pat[x], jpos[x], contrib[x], T._group, T._group_size,
                          nxt, threads)
        cur, nxt = nxt, cur
    return replace(state, amplitudes=cur)


def _collide_full(state: ManyBodyState, T: SiteCollisionT) -> np.ndarray:
    L, local = state.space.n_sites, 1 << state.space.m
    psi = state.amplitudes.reshape((local,) * L)
    for x in range(L):
        psi = np.moveaxis(np.tensordot(T.matrix, psi, axes=([1], [x])), 0, x)
    return np.ascontiguousarray(psi).reshape(-1)


def pair_phases(state: ManyBodyState, U: PairPotentialU) -> np.ndarray:
    """Diagonal of ``U`` on the stored basis."""
    space = state.space
    if U.V.shape != (space.n_sites,) * 2:
        raise ParameterError("pair potential does not match the lattice")
    if state.n is not None:
        sites = state.sector.slot_sites
        total = np.zeros(state.sector.dim)
        for a, b in itertools.combinations(range(state.n), 2):
            total += U.V[sites[:, a], sites[:, b]]
    else:
        idx = np.arange(1 << space.n_slots, dtype=np.uint64)
        bits = [((idx >> np.uint64(p)) & np.uint64(1)).astype(bool) for p in range(space.n_slots)]
        total = np.zeros(len(idx))
        for a, b in itertools.combinations(range(space.n_slots), 2):
            v = U.V[space.slot_site[a], space.slot_site[b]]
            if v:
                total[bits[a] & bits[b]] += v
    return np.exp(-1j * U.epsilon**2 * total)


def apply_pair_potential(state: ManyBodyState, U: PairPotentialU, phases=None) -> ManyBodyState:
    """Multiply each basis amplitude by the pair phases of its occupied slots."""
    if phases is None:
        phases = pair_phases(state, U)
    return replace(state, amplitudes=state.amplitudes * phases)


def qlga_step(state: ManyBodyState, T: SiteCollisionT, U: PairPotentialU | None = None,
              backend: str | None = None, _phases=None) -> ManyBodyState:
    """One step: collide, optional pair potential, then advect."""
    out = collide(state, T, backend)
    if U is not None:
        out = apply_pair_potential(out, U, _phases)
    out = advect(out)
    out.tau = state.tau + 1
    return out


def evolve_many(state: ManyBodyState, T: SiteCollisionT, steps: int, U=None,
                backend: str | None = None, callback=None, every: int = 1) -> ManyBodyState:
    phases = pair_phases(state, U) if U is not None else None
    if callback is not None:
        callback(state)
    for s in range(1, steps + 1):
        state = qlga_step(state, T, U, backend, phases)
        if callback is not None and s % every == 0:
            callback(state)
    if not np.isfinite(state.amplitudes).all():
        raise NumericalError(f"non-finite amplitudes after step {state.tau}")
    return state


def _region_sites(space: FockSpace, region) -> np.ndarray:
    return np.array(sorted({space.site_index(s) for s in region}), dtype=np.int64)


def occupation_probability(state: ManyBodyState, region) -> float:
    """Probability that at least one occupied slot lies on a site of ``region``."""
    sites = _region_sites(state.space, region)
    prob = np.abs(state.amplitudes) ** 2
    if state.n is not None:
        hit = np.isin(state.sector.slot_sites, sites).any(axis=1) if state.n else np.zeros(len(prob), bool)
    else:
        mask = 0
        for p in range(state.space.n_slots):
            if state.space.slot_site[p] in sites:
                mask |= 1 << p
        idx = np.arange(len(prob), dtype=np.uint64)
        hit = (idx & np.uint64(mask)) != 0
    return float(prob[hit].sum())


def density(state: ManyBodyState) -> np.ndarray:
    """Expected occupation of every slot, shape ``extents + (m,)``."""
    space = state.space
    prob = np.abs(state.amplitudes) ** 2
    by_pos = np.zeros(space.n_slots)
    if state.n is not None:
        for t in range(state.n):
            np.add.at(by_pos, state.sector.slots[:, t], prob)
    else:
        idx = np.arange(len(prob), dtype=np.uint64)
        for p in range(space.n_slots):
            by_pos[p] = prob[((idx >> np.uint64(p)) & np.uint64(1)).astype(bool)].sum()
    out = np.empty((space.n_sites, space.m))
    out[space.slot_site, space.slot_channel] = by_pos
    return out.reshape(space.extents + (space.m,))


def number_expectation(state: ManyBodyState) -> float:
    return float(density(state).sum())


# -- distinguishable two-particle model ---------------------------------------

TWO_PARTICLE_VELOCITIES = np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]])


def tensor_two_particle_step(psi: np.ndarray, S) -> np.ndarray:
    """``psi[x + c_i, y + c_k, i, k] <- S_il S_kj psi[x, y, l, j]`` on a periodic 1D lattice."""
    S = np.asarray(S.S if isinstance(S, CollisionMatrix) else S)
    if S.shape != (2, 2):
        raise ParameterError("the two-particle model takes the 2x2 one-dimensional S")
    out = np.einsum("il,kj,xylj->xyik", S, S, psi)
    for i, ci in enumerate((1, -1)):
        out[:, :, i, :] = np.roll(out[:, :, i, :], ci, axis=0)
    for k, ck in enumerate((1, -1)):
        out[:, :, :, k] = np.roll(out[:, :, :, k], ck, axis=1)
    return out


def exchange(psi: np.ndarray) -> np.ndarray:
    """Swap the particle labels ``(x, i) <-> (y, k)``."""
    return psi.transpose(1, 0, 3, 2)


def two_particle_as_field_amplitudes(psi: np.ndarray) -> np.ndarray:
    """Channel ``2 i + k`` of a 2D field moving with ``(c_i, c_k)``."""
    l = psi.shape[0]
    return psi.reshape(l, l, 4)
