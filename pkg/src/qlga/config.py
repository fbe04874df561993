"""Run configuration.

Files use a flat INI dialect with a single ``[qlga]`` section, e.g.::

    [qlga]
    config_version = 1
    command = run
    d = 2
    extents = 64,64
    mu = 6.123233995736766e-17-1j
    steps = 1000
    init = plane:3,1
    potential = none

Command-line flags override values read from a file. Every field
serializes to text that parses back to an identical value.
"""
from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, fields, replace

from .algebra import ModelParams, parse_mu
from .errors import ParameterError

CONFIG_VERSION = 1
SECTION = "qlga"
COMMANDS = ("verify", "run", "dispersion", "many-body")
INIT_KINDS = ("plane", "gauss", "delta", "random", "file")


def format_complex(z: complex) -> str:
    z = complex(z)
    im = repr(z.imag)
    sign = "" if im.startswith("-") else "+"
    return f"{z.real!r}{sign}{im}j"


def _ints(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(int(v) for v in text.split(","))


def parse_range(text: str) -> tuple:
    """``"1..6"``, ``"1,3,5"`` or a mix such as ``"1..3,8"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def format_range(values) -> str:
    return ",".join(str(v) for v in values)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one CLI invocation."""

    config_version: int = CONFIG_VERSION
    command: str = "run"
    d: int = 2
    extents: tuple = (64, 64)
    mu: complex = -1j
    steps: int = 100
    stride: int = 0
    potential: str = "none"
    init: str = "plane:1,0"
    output: str = "out"
    seed: int = 0
    threads: int = 0
    backend: str = ""
    # many-body
    particles: int = 2
    pair: str = "none"
    block_phase: complex = 1 + 0j
    full_fock: bool = False
    # dispersion
    sizes: tuple = (128, 256)
    lams: tuple = (1, 2, 3, 4, 5, 6)
    epochs: int = 256
    cadence: int = 4
    plot: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mu", complex(self.mu))
        object.__setattr__(self, "block_phase", complex(self.block_phase))
        object.__setattr__(self, "extents", tuple(int(v) for v in self.extents))
        object.__setattr__(self, "sizes", tuple(int(v) for v in self.sizes))
        object.__setattr__(self, "lams", tuple(int(v) for v in self.lams))

    @property
    def params(self) -> ModelParams:
        return ModelParams(self.d, self.mu)

    def validate(self) -> "RunConfig":
        """Reject inconsistent settings before any allocation."""
        if self.config_version != CONFIG_VERSION:
            raise ParameterError(f"unsupported config_version {self.config_version}")
        if self.command not in COMMANDS:
            raise ParameterError(f"unknown command {self.command!r}")
        self.params
        if self.command in ("run", "many-body"):
            if len(self.extents) != self.d:
                raise ParameterError(f"extents {self.extents} do not match d={self.d}")
            if min(self.extents) < 2:
                raise ParameterError("every extent must be at least 2")
        if self.steps < 0 or self.stride < 0:
            raise ParameterError("steps and stride must be nonnegative")
        if self.threads < 0:
            raise ParameterError("threads must be nonnegative")
        if self.command == "run" and self.init.split(":", 1)[0] not in INIT_KINDS:
            raise ParameterError(f"unknown initial condition {self.init!r}")
        if self.command == "many-body":
            nslots = 2 * self.d * math.prod(self.extents)
            if not 0 <= self.particles <= nslots:
                raise ParameterError(f"{self.particles} particles do not fit {nslots} slots")
            if abs(abs(self.block_phase) - 1) > 1e-12:
                raise ParameterError("block phase must have unit modulus")
        if self.command == "dispersion":
            if not self.sizes:
                raise ParameterError("no lattice sizes given")
            if self.epochs < 1 or self.cadence < 1:
                raise ParameterError("epochs and cadence must be positive")
        return self

    def to_mapping(self) -> dict:
        return {f.name: _dump(getattr(self, f.name)) for f in fields(self)}

    def to_text(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp[SECTION] = self.to_mapping()
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "RunConfig":
        return cls.from_mapping(parse_mapping(text))

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_mapping(read_mapping(path))

    @classmethod
    def from_mapping(cls, values: dict) -> "RunConfig":
        """Build from string values; unknown keys are rejected."""
        known = {f.name: f for f in fields(cls)}
        unknown = set(values) - set(known) - {"theta"}
        if unknown:
            raise ParameterError(f"unknown configuration keys: {sorted(unknown)}")
        if "theta" in values and "mu" in values:
            raise ParameterError("give either theta or mu, not both")
        kw = {}
        for name, text in values.items():
            if name == "theta":
                t = float(text)
                kw["mu"] = complex(math.cos(t), math.sin(t))
                continue
            try:
                kw[name] = _load(cls.__dataclass_fields__[name].default, name, text)
            except ValueError as exc:
                raise ParameterError(f"bad value for {name}: {text!r}") from exc
        return cls(**kw)

    def override(self, **changes) -> "RunConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def parse_mapping(text: str) -> dict:
    """Raw string values of the ``[qlga]`` section."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"malformed configuration: {exc}") from exc
    if SECTION not in cp:
        raise ParameterError(f"configuration lacks a [{SECTION}] section")
    values = dict(cp[SECTION])
    if "config_version" not in values:
        raise ParameterError("configuration lacks config_version")
    return values


def read_mapping(path) -> dict:
    with open(path) as fh:
        return parse_mapping(fh.read())


def _dump(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, complex):
        return format_complex(v)
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return str(v)


def _load(default, name: str, text: str):
    text = text.strip()
    if isinstance(default, bool):
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(text)
        return low in ("true", "1", "yes")
    if isinstance(default, complex):
        return parse_mu(text)
    if isinstance(default, tuple):
        return parse_range(text) if name in ("lams", "sizes") else _ints(text)
    if isinstance(default, int):
        return int(text)
    return text
