"""Occupation-number basis of a periodic lattice with ``m`` channels per site.

Each ``(site, channel)`` slot is one bit of the basis index. Sites are
flattened in C order and site 0 is the most significant group; within a
site channel 0 is the least significant bit. Read left to right, a basis
index is the ket ``|(s_m..s_1)(site 0), ..., (s_m..s_1)(site L-1)>``.

A fixed-number sector lists its basis states in increasing order of the
full index; the position of a state in that list is its colex rank
``sum_t C(p_t, t + 1)`` over its sorted bit positions ``p_0 < p_1 < ...``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .algebra import VelocityBasis
from .errors import MemoryBudgetError, ParameterError

DEFAULT_MAX_AMPLITUDES = 2**26
_CLIP = 2**62


@dataclass(frozen=True)
class FockSpace:
    extents: tuple
    velocities: tuple

    @classmethod
    def cartesian(cls, extents) -> "FockSpace":
        extents = tuple(int(n) for n in extents)
        vel = VelocityBasis.cartesian(len(extents)).vectors
        return cls(extents, tuple(tuple(int(c) for c in v) for v in vel))

    @property
    def d(self) -> int:
        return len(self.extents)

    @property
    def m(self) -> int:
        return len(self.velocities)

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.extents))

    @property
    def n_slots(self) -> int:
        return self.m * self.n_sites

    def site_index(self, site) -> int:
        if isinstance(site, (int, np.integer)):
            return int(site)
        return int(np.ravel_multi_index(tuple(int(s) for s in site), self.extents))

    def position(self, site, channel: int) -> int:
        """Bit position of a slot in the full index (``channel`` 0-based)."""
        return self.m * (self.n_sites - 1 - self.site_index(site)) + channel

    @cached_property
    def slot_site(self) -> np.ndarray:
        pos = np.arange(self.n_slots)
        return self.n_sites - 1 - pos // self.m

    @cached_property
    def slot_channel(self) -> np.ndarray:
        return np.arange(self.n_slots) % self.m

    @cached_property
    def advected_position(self) -> np.ndarray:
        """Bit position each slot moves to in one advection step."""
        coords = np.array(np.unravel_index(self.slot_site, self.extents))
        vel = np.array(self.velocities)[self.slot_channel].T
        moved = (coords + vel) % np.array(self.extents)[:, None]
        new_site = np.ravel_multi_index(tuple(moved), self.extents)
        return self.m * (self.n_sites - 1 - new_site) + self.slot_channel

    def positions_of(self, index: int) -> list[int]:
        return [p for p in range(self.n_slots) if (index >> p) & 1]

    def format_state(self, index: int) -> str:
        """Ket notation, one ``(s_m,...,s_1)`` tuple per site."""
        groups = []
        for x in range(self.n_sites):
            base = self.position(x, 0)
            bits = [(index >> (base + k)) & 1 for k in reversed(range(self.m))]
            groups.append("(" + ",".join(str(b) for b in bits) + ")")
        return "|" + ",".join(groups) + "⟩"

    def parse_state(self, text: str) -> int:
        groups = re.findall(r"\(([^()]*)\)", text)
        if len(groups) != self.n_sites:
            raise ParameterError(f"expected {self.n_sites} site tuples, found {len(groups)}")
        index = 0
        for x, g in enumerate(groups):
            bits = [b.strip() for b in g.split(",")]
            if len(bits) != self.m or any(b not in ("0", "1") for b in bits):
                raise ParameterError(f"bad site tuple ({g})")
            for k, b in enumerate(reversed(bits)):
                if b == "1":
                    index |= 1 << self.position(x, k)
        return index


def _binom_table(rows: int, cols: int) -> np.ndarray:
    tab = np.zeros((rows, cols), dtype=np.int64)
    for c in range(rows):
        for t in range(cols):
            tab[c, t] = min(math.comb(c, t), _CLIP)
    return tab


def check_budget(count: int, max_amplitudes: int, what: str) -> None:
    if count > max_amplitudes:
        raise MemoryBudgetError(
            f"{what} needs {count} amplitudes, above the budget of {max_amplitudes}")


class Sector:
    """Basis and lookup tables of the ``n``-particle subspace."""

    def __init__(self, space: FockSpace, n: int, max_amplitudes: int = DEFAULT_MAX_AMPLITUDES):
        M = space.n_slots
        if not 0 <= n <= M:
            raise ParameterError(f"particle number {n} outside 0..{M}")
        dim = math.comb(M, n)
        check_budget(dim, max_amplitudes, f"the {n}-particle sector of {M} slots")
        self.space, self.n, self.dim = space, n, dim
        self.binom = _binom_table(M + 1, n + 2)
        self.slots = self._unrank(np.arange(dim, dtype=np.int64))

    def _unrank(self, ranks: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.empty((len(ranks), n), dtype=np.int64)
        r = ranks.copy()
        for t in range(n, 0, -1):
            col = self.binom[:, t]
            c = np.searchsorted(col, r, side="right") - 1
            out[:, t - 1] = c
            r -= col[c]
        return out

    def rank(self, slots: np.ndarray) -> np.ndarray:
        """Sector index of rows of sorted bit positions."""
        slots = np.atleast_2d(slots)
        if self.n == 0:
            return np.zeros(len(slots), dtype=np.int64)
        t = np.arange(1, self.n + 1)
        return self.binom[slots, t].sum(axis=1)

    def index_of(self, full_index: int) -> int:
        pos = self.space.positions_of(full_index)
        if len(pos) != self.n:
            raise ParameterError(f"state has {len(pos)} particles, sector holds {self.n}")
        return int(self.rank(np.array([pos], dtype=np.int64).reshape(1, -1))[0]) if pos else 0

    def full_index(self, i: int) -> int:
        return sum(1 << int(p) for p in self.slots[i])

    @cached_property
    def slot_sites(self) -> np.ndarray:
        return self.space.slot_site[self.slots]

    @cached_property
    def advect_permutation(self) -> np.ndarray:
        moved = np.sort(self.space.advected_position[self.slots], axis=1)
        return self.rank(moved)

    @cached_property
    def site_tables(self):
        """Per-site local patterns, leading-slot counts and rank offsets."""
        space, n = self.space, self.n
        L, m = space.n_sites, space.m
        sites = self.slot_sites
        chans = space.slot_channel[self.slots]
        pat = np.zeros((L, self.dim), dtype=np.uint8)
        jpos = np.zeros((L, self.dim), dtype=np.uint8)
        for x in range(L):
            here = sites == x
            pat[x] = (here * (1 << chans)).sum(axis=1)
            jpos[x] = (sites > x).sum(axis=1)
        contrib = np.zeros((L, 1 << m, n + 1), dtype=np.int64)
        for x in range(L):
            base = space.position(x, 0)
            for q in range(1 << m):
                bits = [k for k in range(m) if (q >> k) & 1]
                for j in range(n + 1):
                    if j + len(bits) > n:
                        continue
                    contrib[x, q, j] = sum(
                        min(math.comb(base + b, j + t + 1), _CLIP) for t, b in enumerate(bits))
        return (np.ascontiguousarray(pat), np.ascontiguousarray(jpos),
                np.ascontiguousarray(contrib))


@lru_cache(maxsize=16)
def get_sector(space: FockSpace, n: int, max_amplitudes: int = DEFAULT_MAX_AMPLITUDES) -> Sector:
    return Sector(space, n, max_amplitudes)


def full_dimension(space: FockSpace) -> int:
    return 1 << space.n_slots
