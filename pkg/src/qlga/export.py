"""Snapshot and observable export.

CSV files always carry a header; floats are written with 17 significant
digits so that files are bit-reproducible and round-trip exactly.

* field snapshot: ``x0[,x1,...],k,re,im`` (``k`` 0-based channel)
* total amplitude: ``x0[,x1,...],re,im,abs2``
* many-body density: ``x0[,x1,...],k,occupation``
* binary snapshot: NumPy ``.npz`` with ``amplitudes``, ``tau``, ``d``,
  ``mu``, ``epsilon``
"""
from __future__ import annotations

import csv

import numpy as np

from .algebra import ModelParams
from .engine import WaveField, total_amplitude
from .errors import ParameterError


def fmt(x) -> str:
    return format(float(x), ".17g")


def _coord_header(d: int) -> list[str]:
    return [f"x{a}" for a in range(d)]


def _writer(path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_field_csv(field: WaveField, path) -> None:
    d = len(field.extents)
    fh, w = _writer(path)
    with fh:
        w.writerow(_coord_header(d) + ["k", "re", "im"])
        for idx in np.ndindex(*field.amplitudes.shape):
            z = field.amplitudes[idx]
            w.writerow([str(i) for i in idx] + [fmt(z.real), fmt(z.imag)])


def read_field_csv(path, params: ModelParams, tau: int = 0) -> WaveField:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    d = len(header) - 3
    if d != params.d or header[d:] != ["k", "re", "im"]:
        raise ParameterError(f"unexpected field CSV header {header}")
    idx = np.array([[int(v) for v in r[:d + 1]] for r in body], dtype=np.int64)
    shape = tuple(idx.max(axis=0) + 1)
    amp = np.zeros(shape, dtype=np.complex128)
    amp[tuple(idx.T)] = [float(r[d + 1]) + 1j * float(r[d + 2]) for r in body]
    return WaveField(amp, params, tau)


def write_total_csv(field: WaveField, path) -> None:
    psi = total_amplitude(field)
    fh, w = _writer(path)
    with fh:
        w.writerow(_coord_header(psi.ndim) + ["re", "im", "abs2"])
        for idx in np.ndindex(*psi.shape):
            z = psi[idx]
            w.writerow([str(i) for i in idx] + [fmt(z.real), fmt(z.imag), fmt(abs(z) ** 2)])


def write_density_csv(density: np.ndarray, path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(_coord_header(density.ndim - 1) + ["k", "occupation"])
        for idx in np.ndindex(*density.shape):
            w.writerow([str(i) for i in idx] + [fmt(density[idx])])


def save_npz(field: WaveField, path) -> None:
    p = field.params
    np.savez(path, amplitudes=field.amplitudes, tau=field.tau, d=p.d, mu=p.mu, epsilon=p.epsilon)


def load_npz(path) -> WaveField:
    with np.load(path) as z:
        params = ModelParams(int(z["d"]), complex(z["mu"]), float(z["epsilon"]))
        return WaveField(z["amplitudes"], params, int(z["tau"]))


def load_field(path, params: ModelParams) -> WaveField:
    """Load an initial field from ``.npz`` or snapshot CSV."""
    if str(path).endswith(".npz"):
        f = load_npz(path)
        if f.params.d != params.d:
            raise ParameterError(f"file holds a {f.params.d}D field, expected {params.d}D")
        return WaveField(f.amplitudes, params)
    return read_field_csv(path, params)
