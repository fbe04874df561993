"""Text specifications for potentials.

Site potentials: ``none``, ``const:V0``, ``expr:<expression in x, y, z>``
(physical coordinates) or ``file:<path>`` (``.npy`` array or a CSV with
header ``x0[,x1,...],V``).

Pair potentials: ``none``, ``const:V0``, ``contact:V0`` (same site only)
or ``expr:<expression in r>`` with ``r`` the periodic distance.
"""
from __future__ import annotations

import ast
import csv

import numpy as np
import sympy

from .engine import PotentialField
from .errors import ParameterError

AXIS_SYMBOLS = ("x", "y", "z", "w")
FUNCTIONS = frozenset({"sin", "cos", "tan", "exp", "log", "sqrt", "Abs", "abs", "tanh",
                       "cosh", "sinh", "atan", "atan2", "Min", "Max", "sign", "Heaviside",
                       "pi", "E"})
_NODES = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Constant, ast.Name, ast.Load, ast.Call,
          ast.operator, ast.unaryop)


def _check_syntax(text: str, names) -> None:
    """Allow only arithmetic on the given names, numbers and known functions."""
    try:
        tree = ast.parse(text.replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise ParameterError(f"cannot parse expression {text!r}") from exc
    allowed = set(names) | FUNCTIONS
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ParameterError(f"disallowed syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Name) and node.id not in allowed:
            raise ParameterError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.keywords == []):
            raise ParameterError(f"disallowed call in {text!r}")


def compile_expression(text: str, names):
    """Vectorized callable for a sympy expression of the given variables."""
    _check_syntax(text, names)
    symbols = sympy.symbols(names)
    local = {n: s for n, s in zip(names, symbols)}
    try:
        expr = sympy.sympify(text, locals=local)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ParameterError(f"cannot parse expression {text!r}") from exc
    extra = expr.free_symbols - set(symbols)
    if extra:
        raise ParameterError(f"expression uses unknown symbols {sorted(map(str, extra))}")
    return sympy.lambdify(symbols, expr, "numpy")


def _split(spec: str):
    kind, _, arg = spec.strip().partition(":")
    return kind.strip().lower(), arg.strip()


def site_potential(spec: str, extents, epsilon: float) -> PotentialField | None:
    extents = tuple(extents)
    kind, arg = _split(spec)
    if kind in ("", "none"):
        return None
    if kind == "const":
        return PotentialField.constant(extents, float(arg))
    if kind == "expr":
        if len(extents) > len(AXIS_SYMBOLS):
            raise ParameterError("expressions support at most four axes")
        fn = compile_expression(arg, AXIS_SYMBOLS[:len(extents)])
        return PotentialField.from_function(extents, epsilon, fn)
    if kind == "file":
        return PotentialField(_read_site_values(arg, extents))
    raise ParameterError(f"unknown potential kind {kind!r}")


def _read_site_values(path: str, extents) -> np.ndarray:
    if path.endswith(".npy"):
        v = np.load(path)
    else:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        d = len(extents)
        v = np.zeros(extents)
        for r in rows:
            v[tuple(int(c) for c in r[:d])] = float(r[d])
    if v.shape != tuple(extents):
        raise ParameterError(f"potential file has shape {v.shape}, lattice is {tuple(extents)}")
    return v


def constant_value(spec: str) -> float:
    """``V0`` for ``const:V0`` specs, 0 for ``none``; other kinds rejected."""
    kind, arg = _split(spec)
    if kind in ("", "none"):
        return 0.0
    if kind == "const":
        return float(arg)
    raise ParameterError("the dispersion experiment accepts only none or const: potentials")


def pair_potential(spec: str, space, epsilon: float):
    from .manybody import PairPotentialU
    kind, arg = _split(spec)
    if kind in ("", "none"):
        return None
    if kind == "const":
        return PairPotentialU(np.full((space.n_sites,) * 2, float(arg)), epsilon)
    if kind == "contact":
        return PairPotentialU.contact(space, float(arg), epsilon)
    if kind == "expr":
        return PairPotentialU.from_distance(space, compile_expression(arg, ("r",)), epsilon)
    raise ParameterError(f"unknown pair potential kind {kind!r}")
