"""Node symbols: atomic functions, feature references, and constants.

A tree slot holds exactly one symbol: a :class:`FunctionSpec`, a
:class:`Feature`, or a :class:`Constant`. Features and constants have null
arity. Constants carry their value ``c`` together with a per-node step size
``sigma`` used by the self-adaptive mutation rule; ``sigma`` never drops
below :data:`SIGMA_FLOOR`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

# Floor for every constant's step size, and epsilon for protected operators.
SIGMA_FLOOR = 1e-16
DIV_GUARD = 1e-12
LOG_GUARD = 1e-12


def protected_div(a, b):
    """Division with denominators of magnitude < 1e-12 replaced by
    sign-preserving 1e-12 (positive for +0.0)."""
    b = np.asarray(b, dtype=np.float64)
    safe = np.where(np.abs(b) < DIV_GUARD, np.copysign(DIV_GUARD, b), b)
    return a / safe


def protected_log(a):
    """log(|a| + 1e-12); finite for every finite input."""
    return np.log(np.abs(a) + LOG_GUARD)


def protected_sqrt(a):
    """sqrt(|a|)."""
    return np.sqrt(np.abs(a))


@dataclass(frozen=True)
class FunctionSpec:
    """An atomic function: symbol name, arity, and its vectorized kernel."""

    id: str
    arity: int
    kernel: Callable = field(compare=False, repr=False)

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"function arity must be >= 1, got {self.arity}")


@dataclass(frozen=True)
class Feature:
    """Reference to input feature column ``index`` (0-based internally;
    printed 1-based as ``x1``, ``x2``, ...)."""

    index: int
    arity: int = field(default=0, init=False, compare=False, repr=False)


@dataclass(frozen=True)
class Constant:
    """An ephemeral random constant with value ``c`` and step size ``sigma``.

    ``sigma`` is clamped to :data:`SIGMA_FLOOR` on construction so the
    invariant sigma >= 1e-16 holds for every constant ever built.
    """

    c: float
    sigma: float = 1.0
    arity: int = field(default=0, init=False, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "sigma", max(float(self.sigma), SIGMA_FLOOR))


NodeSymbol = Union[FunctionSpec, Feature, Constant]

ADD = FunctionSpec("+", 2, np.add)
SUB = FunctionSpec("-", 2, np.subtract)
MUL = FunctionSpec("*", 2, np.multiply)
DIV = FunctionSpec("/", 2, protected_div)
LOG = FunctionSpec("log", 1, protected_log)
SQRT = FunctionSpec("sqrt", 1, protected_sqrt)
SIN = FunctionSpec("sin", 1, np.sin)
COS = FunctionSpec("cos", 1, np.cos)

# The default atomic set; maximal arity 2.
DEFAULT_FUNCTIONS: tuple[FunctionSpec, ...] = (ADD, SUB, MUL, DIV, LOG, SQRT, SIN, COS)

FUNCTIONS_BY_ID = {f.id: f for f in DEFAULT_FUNCTIONS}


def max_arity(functions) -> int:
    return max(f.arity for f in functions)


def symbols_equal(a: NodeSymbol, b: NodeSymbol) -> bool:
    """Equality as seen by the meaningful-change test.

    Functions compare by id, features by index, constants by exact value
    ``c`` alone: a sigma difference does not change predictions, so it never
    forces a re-evaluation.
    """
    if type(a) is not type(b):
        return False
    if isinstance(a, FunctionSpec):
        return a.id == b.id
    if isinstance(a, Feature):
        return a.index == b.index
    return a.c == b.c
