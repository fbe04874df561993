"""Numerical experiments: plane-wave dispersion, packet spreading, norm drift.

Dispersion runs live in a unit box: ``N`` sites per axis, ``eps = 1/N``,
``dt = 1/N**2`` and wavevector ``k = 2 pi l``. The frequency is read off
the overlap ``S(t)`` of the total amplitude with its initial value,

    omega = i / (c dt) * ln(S(t + c dt) / S(t)),

with cadence ``c`` (4 by default).
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .algebra import ModelParams, build_collision_matrix
from .engine import (PotentialField, WaveField, evolve, gaussian_packet, init_plane_wave,
                     position_moments, total_amplitude)
from .errors import ParameterError

DECAY_FLOOR = 1e-6
IMAG_TOL = 1e-8
DISPERSION_HEADER = ["N", "l_x", "l_y", "k_abs", "omega_meas", "omega_pred", "stddev"]
EXTRA_HEADER = ["d", "mu_re", "mu_im", "V0", "epochs", "cadence", "imag_max", "flagged"]


def overlap(field_t: WaveField, field_0: WaveField) -> complex:
    """``sum conj(Psi_0) Psi_t / sum |Psi_0|^2`` over all sites."""
    if field_t.extents != field_0.extents:
        raise ParameterError("fields have different extents")
    p0 = total_amplitude(field_0)
    norm = np.vdot(p0, p0).real
    if norm == 0:
        raise ParameterError("initial total amplitude vanishes")
    return complex(np.vdot(p0, total_amplitude(field_t)) / norm)


@dataclass
class DispersionRecord:
    """One plane-wave frequency measurement."""

    N: int
    l: tuple
    k_abs: float
    omega: float
    std: float
    omega_pred: float
    imag_max: float
    flagged: bool = False
    V0: float = 0.0
    d: int = 2
    mu: complex = -1j
    epochs: int = 0
    cadence: int = 4
    samples: np.ndarray = field(default=None, repr=False)

    @property
    def rel_error(self) -> float:
        return self.omega / self.omega_pred - 1 if self.omega_pred else math.nan

    @property
    def abs_error(self) -> float:
        return abs(self.omega - self.omega_pred)


def _unwrap_to(z: complex, ref: float, scale: float) -> complex:
    """Shift the real part by multiples of ``scale`` to land nearest ``ref``."""
    n = round((ref - z.real) / scale)
    return z + n * scale


def omega_samples(S_values: np.ndarray, c: int, dt: float) -> np.ndarray:
    """Per-epoch frequencies from successive overlaps, branch-continued."""
    ratios = S_values[1:] / S_values[:-1]
    raw = 1j / (c * dt) * np.log(ratios)
    period = 2 * np.pi / (c * dt)
    out = np.empty_like(raw)
    ref = None
    for i, w in enumerate(raw):
        out[i] = w if ref is None else _unwrap_to(w, ref, period)
        ref = out[i].real
    return out


def estimate_omega(N: int, d: int = 2, mu: complex = -1j, l=(3, 1), epochs: int = 256,
                   cadence: int = 4, V0: float = 0.0, backend: str | None = None) -> DispersionRecord:
    """Evolve a plane wave and measure its frequency over ``epochs`` cadence intervals."""
    l = tuple(int(v) for v in l)
    if len(l) != d:
        raise ParameterError(f"need {d} wave integers, got {l}")
    if N < 2 * max(abs(v) for v in l) + 1:
        raise ParameterError(f"N={N} too small for l={l}")
    if epochs < 1 or cadence < 1:
        raise ParameterError("epochs and cadence must be positive")
    params = ModelParams(d, mu, epsilon=1.0 / N)
    S = build_collision_matrix(params)
    extents = (N,) * d
    f0 = init_plane_wave(params, extents, l)
    potential = PotentialField.constant(extents, V0) if V0 else None
    values = []
    evolve(f0, S, cadence * epochs, potential=potential, backend=backend,
           callback=lambda f: values.append(overlap(f, f0)), every=cadence)
    values = np.array(values)
    k_abs = 2 * np.pi * math.sqrt(sum(v * v for v in l))
    pred = k_abs**2 / (2 * params.mass) + V0
    flagged = bool(np.abs(values).min() < DECAY_FLOOR)
    w = omega_samples(values, cadence, params.dt) if not flagged else np.full(epochs, np.nan + 0j)
    return DispersionRecord(
        N=N, l=l, k_abs=k_abs, omega=float(w.real.mean()), std=float(w.real.std()),
        omega_pred=pred, imag_max=float(np.abs(w.imag).max()), flagged=flagged, V0=V0,
        d=d, mu=complex(mu), epochs=epochs, cadence=cadence, samples=w)


def dispersion_sweep(Ns, ls, d: int = 2, mu: complex = -1j, epochs: int = 256, cadence: int = 4,
                     V0: float = 0.0, workers: int = 1, backend: str | None = None):
    """``estimate_omega`` over every ``(N, l)`` pair, N-major order."""
    jobs = [(N, tuple(l)) for N in Ns for l in ls]
    run = lambda job: estimate_omega(job[0], d, mu, job[1], epochs, cadence, V0, backend)
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def sweep_wavenumbers(lams) -> list:
    """``l = (3 lam, lam)`` for each ``lam``."""
    return [(3 * lam, lam) for lam in lams]


def _fmt(x) -> str:
    return format(float(x), ".17g")


def dispersion_rows(records, extra: bool = True):
    header = DISPERSION_HEADER + (EXTRA_HEADER if extra else [])
    rows = []
    for r in records:
        lx = r.l[0]
        ly = r.l[1] if len(r.l) > 1 else 0
        row = [str(r.N), str(lx), str(ly), _fmt(r.k_abs), _fmt(r.omega), _fmt(r.omega_pred),
               _fmt(r.std)]
        if extra:
            row += [str(r.d), _fmt(r.mu.real), _fmt(r.mu.imag), _fmt(r.V0), str(r.epochs),
                    str(r.cadence), _fmt(r.imag_max), str(int(r.flagged))]
        rows.append(row)
    return header, rows


def write_dispersion_csv(records, path=None, extra: bool = True) -> str:
    """Write records as CSV to ``path`` (if given) and return the text."""
    header, rows = dispersion_rows(records, extra)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def read_dispersion_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


PLOT_SCRIPT = '''\
"""Plot measured against predicted plane-wave frequencies from {csv_name}."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "{csv_name}"
rows = list(csv.DictReader(open(path)))
fig, ax = plt.subplots()
for n in sorted({{int(r["N"]) for r in rows}}):
    sel = [r for r in rows if int(r["N"]) == n]
    k = [float(r["k_abs"]) for r in sel]
    ax.errorbar(k, [float(r["omega_meas"]) for r in sel],
                yerr=[float(r["stddev"]) for r in sel], fmt="o", label=f"N={{n}}")
k = sorted(float(r["k_abs"]) for r in rows)
ax.plot(k, [float(r["omega_pred"]) for r in sorted(rows, key=lambda r: float(r["k_abs"]))],
        "k-", label="k^2/(2m)")
ax.set_xlabel("|k|")
ax.set_ylabel("omega")
ax.legend()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
'''


def write_plot_script(path, csv_name: str) -> None:
    """Emit a standalone matplotlib script that plots a dispersion CSV."""
    with open(path, "w") as fh:
        fh.write(PLOT_SCRIPT.format(csv_name=csv_name))


@dataclass
class SpreadingSample:
    tau: int
    time: float
    variance: float
    predicted: float

    @property
    def rel_error(self) -> float:
        return self.variance / self.predicted - 1


def free_variance(sigma0: float, t: float, mass: float) -> float:
    """Variance of a free Gaussian packet, ``sigma0^2 + t^2 / (4 m^2 sigma0^2)``."""
    return sigma0**2 + t**2 / (4 * mass**2 * sigma0**2)


def packet_spreading(d: int, N: int, sigma0: float, steps: int, stride: int,
                     mu: complex = -1j, backend: str | None = None, wrap_sigmas: float = 5.0):
    """Track the per-axis variance of a centred packet in lattice units (``eps = 1``).

    Sampling stops once the packet comes within ``wrap_sigmas`` widths of
    the periodic boundary.
    """
    params = ModelParams(d, mu, epsilon=1.0)
    S = build_collision_matrix(params)
    center = (N / 2,) * d
    f0 = gaussian_packet(params, (N,) * d, center, sigma0)
    samples = []

    def record(f):
        if samples and wrap_sigmas * math.sqrt(samples[-1].variance) > N / 2:
            return
        _, var = position_moments(f, center)
        s = SpreadingSample(f.tau, f.time, float(var.mean()),
                            free_variance(sigma0, f.time, params.mass))
        if wrap_sigmas * math.sqrt(s.variance) <= N / 2:
            samples.append(s)

    evolve(f0, S, steps, backend=backend, callback=record, every=stride)
    return samples


def norm_drift(d: int, N: int, steps: int, mu: complex = -1j, seed: int = 0,
               potential=None, backend: str | None = None) -> float:
    """``|1 - sum |psi|^2|`` after ``steps`` steps from a random normalized field."""
    from .engine import random_field
    params = ModelParams(d, mu)
    f = random_field(params, (N,) * d, np.random.default_rng(seed))
    f = evolve(f, build_collision_matrix(params), steps, potential=potential, backend=backend)
    return abs(1 - f.norm2())


def record_dict(r: DispersionRecord) -> dict:
    out = asdict(r)
    out.pop("samples")
    return out
