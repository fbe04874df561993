"""NumPy implementations of the hot loops."""
import numpy as np


def stream_collide(psi, S, phase, dest, out, nthreads=1):
    coll = psi @ S.T
    if phase.shape[0]:
        coll *= phase[:, None]
    out[dest, np.arange(psi.shape[1])] = coll
    return out


def collide_site(c, T, pat, jpos, contrib, group, group_size, out, nthreads=1):
    pat = pat.astype(np.intp)
    jpos = jpos.astype(np.intp)
    base = np.arange(c.shape[0]) - contrib[pat, jpos]
    out[:] = 0
    for g in range(group.shape[1]):
        live = g < group_size[pat]
        q = np.where(live, group[pat, np.minimum(g, group_size[pat] - 1)], 0)
        idx = np.where(live, base + contrib[q, jpos], 0)
        out += np.where(live, T[pat, q] * c[idx], 0)
    return out
