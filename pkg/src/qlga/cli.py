"""Command-line interface.

Subcommands ``verify``, ``run``, ``dispersion`` and ``many-body``. Exit
codes: 0 success, 1 validation failure (bad input or a failed check),
2 runtime failure (numerical breakdown, memory budget, I/O).
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import time

import numpy as np

from . import _kernels
from .algebra import build_collision_matrix, parse_mu
from .config import RunConfig, parse_range, read_mapping
from .errors import (ConsistencyError, MemoryBudgetError, NumericalError, ParameterError,
                     SingularSolveError)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

COMMAND_DEFAULTS = {
    "verify": {},
    "run": {"extents": (64,), "steps": 100, "init": "plane:1"},
    "dispersion": {},
    "many-body": {"d": 1, "extents": (8,), "steps": 100, "init": "spread", "particles": 2},
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI configuration file; flags override its values")
    p.add_argument("--d", type=int, help="spatial dimension")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--theta", type=float, help="argument of mu in radians")
    grp.add_argument("--mu", help="collision eigenvalue as a complex literal, e.g. 0.6+0.8i")
    p.add_argument("--threads", type=int, help="worker threads (default: QLGA_THREADS or 1)")
    p.add_argument("--backend", choices=sorted(_kernels.BACKENDS), help="kernel backend")


def _evolution(p: argparse.ArgumentParser) -> None:
    p.add_argument("--N", help="sites per axis, one value or one per axis (e.g. 64 or 64,32)")
    p.add_argument("--steps", type=int, help="number of time steps")
    p.add_argument("--stride", type=int, help="snapshot every this many steps (0: first and last)")
    p.add_argument("--output", help="output directory")
    p.add_argument("--seed", type=int, help="seed for randomized initial data")
    p.add_argument("--save-config", action="store_true", help="write the effective config.ini")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qlga", description="Unitary lattice-gas simulations of the "
                     "Schroedinger equation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="check the algebraic and continuum-limit identities")
    _common(p)

    p = sub.add_parser("run", help="evolve a single-particle field and write snapshots")
    _common(p)
    _evolution(p)
    p.add_argument("--init", help="plane:l1[,l2..] | gauss:width[:p1,p2..] | delta:site..;ch "
                   "| random | file:path")
    p.add_argument("--potential", help="none | const:V0 | expr:<x,y,z> | file:path")
    p.add_argument("--format", choices=("csv", "npz"), default="csv", help="field snapshot format")

    p = sub.add_parser("dispersion", help="measure plane-wave frequencies")
    _common(p)
    p.add_argument("--N", help="lattice sizes, e.g. 128,256")
    p.add_argument("--l", dest="lams", help="wave-number multipliers, e.g. 1..6")
    p.add_argument("--epochs", type=int, help="number of measurement intervals")
    p.add_argument("--cadence", type=int, help="steps per measurement interval")
    p.add_argument("--potential", help="none | const:V0")
    p.add_argument("--output", help="CSV path (default dispersion.csv)")
    p.add_argument("--plot", action="store_true", help="also write a plotting script")
    p.add_argument("--save-config", action="store_true", help="write the effective config.ini")

    p = sub.add_parser("many-body", help="evolve a many-particle lattice-gas state")
    _common(p)
    _evolution(p)
    p.add_argument("--particles", type=int, help="particle number")
    p.add_argument("--init", help="spread | ket:|(..),(..)> | slots:site.ch,... | "
                   "packets:width:c1;c2;...")
    p.add_argument("--pair", help="none | const:V0 | contact:V0 | expr:<r>")
    p.add_argument("--block-phase", help="phase of multi-particle collision blocks")
    p.add_argument("--full-fock", action="store_true", default=None,
                   help="store all particle numbers instead of one sector")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Command defaults, then the config file, then flags."""
    cfg = RunConfig(command=args.command, **COMMAND_DEFAULTS[args.command])
    if getattr(args, "config", None):
        values = cfg.to_mapping()
        values.update(read_mapping(args.config))
        values["command"] = args.command
        cfg = RunConfig.from_mapping(values)
    ch = {}
    for name in ("d", "steps", "stride", "output", "seed", "threads", "backend", "init",
                 "potential", "particles", "pair", "epochs", "cadence", "full_fock"):
        v = getattr(args, name, None)
        if v is not None:
            ch[name] = v
    if getattr(args, "plot", False):
        ch["plot"] = True
    if args.theta is not None:
        ch["mu"] = complex(math.cos(args.theta), math.sin(args.theta))
    elif args.mu is not None:
        ch["mu"] = parse_mu(args.mu)
    if getattr(args, "block_phase", None) is not None:
        ch["block_phase"] = parse_mu(args.block_phase)
    if getattr(args, "lams", None) is not None:
        ch["lams"] = parse_range(args.lams)
    N = getattr(args, "N", None)
    if N is not None:
        ch["sizes" if args.command == "dispersion" else "extents"] = parse_range(N)
    cfg = cfg.override(**ch)
    if args.command in ("run", "many-body") and len(cfg.extents) == 1 and cfg.d > 1:
        cfg = cfg.override(extents=cfg.extents * cfg.d)
    return cfg.validate()


def _apply_threads(cfg: RunConfig) -> None:
    if cfg.threads:
        _kernels.set_num_threads(cfg.threads)
    if cfg.backend:
        _kernels.set_backend(cfg.backend)


def _say(key: str, value) -> None:
    if isinstance(value, float):
        value = format(value, ".17g")
    elif isinstance(value, complex):
        value = f"{value.real:.17g}{value.imag:+.17g}i"
    print(f"{key}: {value}")


def cmd_verify(cfg: RunConfig) -> int:
    from .continuum import verify_model
    checks, info = verify_model(cfg.params)
    for k in ("d", "mu", "theta", "mass", "mass_extracted"):
        _say(k, info[k])
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(f"check {c.name}: {c.value:.3e} (tol {c.tol:.0e}) {'PASS' if c.passed else 'FAIL'}")
    _say("result", "PASS" if not failed else "FAIL " + ",".join(c.name for c in failed))
    return EXIT_OK if not failed else EXIT_INVALID


def make_initial_field(cfg: RunConfig, params, extents):
    from . import engine
    from .export import load_field
    kind, _, arg = cfg.init.partition(":")
    if kind == "plane":
        l = parse_range(arg) if arg else (0,) * params.d
        return engine.init_plane_wave(params, extents, l + (0,) * (params.d - len(l)))
    if kind == "gauss":
        parts = arg.split(":")
        width = float(parts[0]) if parts[0] else 0.1
        mom = tuple(float(v) for v in parts[1].split(",")) if len(parts) > 1 else None
        center = tuple(n * params.epsilon / 2 for n in extents)
        return engine.gaussian_packet(params, extents, center, width, mom)
    if kind == "delta":
        site_txt, _, ch = arg.partition(";")
        site = parse_range(site_txt) if site_txt else tuple(n // 2 for n in extents)
        return engine.delta_field(params, extents, site, int(ch or 0))
    if kind == "random":
        return engine.random_field(params, extents, np.random.default_rng(cfg.seed))
    if kind == "file":
        return load_field(arg, params)
    raise ParameterError(f"unknown initial condition {cfg.init!r}")


def cmd_run(cfg: RunConfig, fmt: str = "csv") -> int:
    from . import engine, export
    from .algebra import ModelParams
    from .potentials import site_potential
    extents = cfg.extents
    eps = 1.0 / extents[0]
    params = ModelParams(cfg.d, cfg.mu, eps)
    nbytes = 16 * 2 * math.prod(extents) * 2 * cfg.d
    if nbytes > 2**33:
        raise MemoryBudgetError(f"run needs about {nbytes / 2**30:.1f} GiB")
    field = make_initial_field(cfg, params, extents)
    if field.extents != tuple(extents):
        raise ParameterError(f"initial field has extents {field.extents}, expected {extents}")
    potential = site_potential(cfg.potential, extents, eps)
    S = build_collision_matrix(params)
    os.makedirs(cfg.output, exist_ok=True)
    n0 = field.norm2()
    written = []

    def snapshot(f):
        stem = os.path.join(cfg.output, f"{{}}_{f.tau:08d}")
        if fmt == "npz":
            export.save_npz(f, stem.format("field") + ".npz")
        else:
            export.write_field_csv(f, stem.format("field") + ".csv")
        export.write_total_csv(f, stem.format("total") + ".csv")
        written.append(f.tau)

    stride = cfg.stride or max(cfg.steps, 1)
    t0 = time.perf_counter()
    final = engine.evolve(field, S, cfg.steps, potential=potential, callback=snapshot, every=stride)
    if final.tau not in written:
        snapshot(final)
    _say("steps", cfg.steps)
    _say("snapshots", len(written))
    _say("mass", params.mass)
    _say("norm_drift", abs(final.norm2() - n0))
    _say("elapsed_s", time.perf_counter() - t0)
    _say("backend", cfg.backend or _kernels.backend_name())
    _say("threads", _kernels.num_threads())
    return EXIT_OK


def dispersion_ls(d: int, lams) -> list:
    """``(3 lam, lam)`` in two dimensions, padded or truncated otherwise."""
    base = (3, 1) + (0,) * max(0, d - 2)
    return [tuple(b * lam for b in base[:d]) for lam in lams]


def cmd_dispersion(cfg: RunConfig) -> int:
    from .experiments import dispersion_sweep, write_dispersion_csv, write_plot_script
    from .potentials import constant_value
    V0 = constant_value(cfg.potential)
    path = cfg.output if cfg.output != "out" else "dispersion.csv"
    ls = dispersion_ls(cfg.d, cfg.lams)
    for N in cfg.sizes:
        if any(2 * abs(v) >= N for l in ls for v in l):
            raise ParameterError(f"N={N} too small for the requested wave numbers")
    records = dispersion_sweep(cfg.sizes, ls, cfg.d, cfg.mu, cfg.epochs, cfg.cadence, V0)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_dispersion_csv(records, path)
    if cfg.plot:
        write_plot_script(os.path.splitext(path)[0] + "_plot.py", os.path.basename(path))
    _say("records", len(records))
    _say("csv", path)
    flagged = [r for r in records if r.flagged]
    _say("flagged", len(flagged))
    if records:
        kmin = min(r.k_abs for r in records)
        worst = max((abs(r.rel_error) for r in records
                     if r.k_abs == kmin and not r.flagged), default=math.nan)
        _say("smallest_k", kmin)
        _say("worst_small_k_rel_error", worst)
    return EXIT_OK


def _many_body_state(cfg: RunConfig, space):
    from . import engine, manybody as mb
    from .algebra import ModelParams
    sector = not cfg.full_fock
    kind, _, arg = cfg.init.partition(":")
    if kind == "ket":
        return mb.basis_state(space, arg, sector)
    if kind == "slots":
        pairs = [tuple(int(v) for v in s.split(".")) for s in arg.split(",") if s]
        return mb.basis_state(space, pairs, sector)
    if kind == "spread":
        n = cfg.particles
        L = space.n_sites
        if n > L * space.m:
            raise ParameterError("too many particles")
        if n <= L:
            pairs = [(i * L // n, 0) for i in range(n)]
        else:
            pairs = [(i % L, i // L) for i in range(n)]
        return mb.basis_state(space, pairs, sector)
    if kind == "packets":
        width_txt, _, centers_txt = arg.partition(":")
        params = ModelParams(cfg.d, cfg.mu)
        centers = [tuple(float(c) for c in s.split(",")) for s in centers_txt.split(";") if s]
        if len(centers) != cfg.particles:
            raise ParameterError("give one packet centre per particle")
        waves = [engine.gaussian_packet(params, space.extents, c + (0.0,) * (cfg.d - len(c)),
                                        float(width_txt)) for c in centers]
        st = mb.symmetrized_product(space, waves)
        return st.to_full() if not sector else st
    raise ParameterError(f"unknown many-body initial state {cfg.init!r}")


def cmd_many_body(cfg: RunConfig) -> int:
    from . import export, manybody as mb
    from .fock import FockSpace
    from .potentials import pair_potential
    space = FockSpace.cartesian(cfg.extents)
    state = _many_body_state(cfg, space)
    S = build_collision_matrix(cfg.params)
    T = mb.SiteCollisionT.from_collision(
        S, {n: cfg.block_phase for n in range(2, space.m + 1)})
    U = pair_potential(cfg.pair, space, 1.0)
    os.makedirs(cfg.output, exist_ok=True)
    n0 = state.norm2()
    written = []

    def snapshot(st):
        export.write_density_csv(mb.density(st),
                                 os.path.join(cfg.output, f"density_{st.tau:08d}.csv"))
        written.append(st.tau)

    stride = cfg.stride or max(cfg.steps, 1)
    t0 = time.perf_counter()
    final = mb.evolve_many(state, T, cfg.steps, U, callback=snapshot, every=stride)
    if final.tau not in written:
        snapshot(final)
    _say("dimension", len(final.amplitudes))
    _say("snapshots", len(written))
    _say("norm_drift", abs(final.norm2() - n0))
    _say("particles", mb.number_expectation(final))
    _say("elapsed_s", time.perf_counter() - t0)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        _apply_threads(cfg)
        if getattr(args, "save_config", False):
            target = cfg.output if args.command != "dispersion" else "."
            os.makedirs(target, exist_ok=True)
            cfg.save(os.path.join(target, "config.ini"))
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "run":
            return cmd_run(cfg, args.format)
        if args.command == "dispersion":
            return cmd_dispersion(cfg)
        return cmd_many_body(cfg)
    except (ParameterError, SingularSolveError, ConsistencyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NumericalError, MemoryBudgetError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
