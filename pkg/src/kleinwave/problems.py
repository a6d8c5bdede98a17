"""Registry of closed-form functions and the built-in example problems.

Config files refer to functions by expression id, so no expression parser is
needed. Every example declares its potential, initial data, the slope f'(0)
of the particular solution used for the basis, the spectral description of
the data (when known) and the exact solution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError

_erf = np.frompyfunc(math.erf, 1, 1)
_SQRT_PI_2 = math.sqrt(math.pi) / 2
_SQRT3 = math.sqrt(3.0)
_SQRT8 = math.sqrt(8.0)
_SQRT26 = math.sqrt(26.0)


def _ex3_g(x):
    x = np.asarray(x, dtype=float)
    return np.exp(x * x / 2) * (1.0 + _SQRT_PI_2 * np.asarray(_erf(x), dtype=float))


def _ex3_h(x):
    x = np.asarray(x, dtype=float)
    return x * np.exp(x * x / 2)


def _const(c):
    return lambda x: np.full(np.shape(x), c, dtype=float)


EXPRESSIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": _const(0.0),
    "one": _const(1.0),
    "x": lambda x: np.asarray(x, dtype=float),
    "x^2": lambda x: np.asarray(x, dtype=float) ** 2,
    "ex1_q": _const(9.0),
    "ex1_g": lambda x: np.cosh(_SQRT8 * np.asarray(x, dtype=float)),
    "ex1_h": _const(1.0),
    "ex2_q": _const(-25.0),
    "ex2_g": lambda x: np.cos(_SQRT26 * np.asarray(x, dtype=float)),
    "ex2_h": _const(1.0),
    "ex3_q": lambda x: np.asarray(x, dtype=float) ** 2,
    "ex3_g": _ex3_g,
    "ex3_h": _ex3_h,
}

EXACT: dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "ex1_u": lambda x, t: np.sin(3 * t) / 3 + np.cos(t) * np.cosh(_SQRT8 * x),
    "ex2_u": lambda x, t: np.sinh(5 * t) / 5 + np.cos(t) * np.cos(_SQRT26 * x),
    # The 1/sqrt(3) factor is required for u_t(x, 0) = h(x).
    "ex3_u": lambda x, t: _ex3_g(x) * np.cosh(t) + _ex3_h(x) * np.sinh(_SQRT3 * t) / _SQRT3,
}

# (lambda, v(0), v'(0)) with v'' - q v = lambda v.
SPECTRAL: dict[str, tuple[complex, complex, complex]] = {
    "ex1_g": (-1.0, 1.0, 0.0),
    "ex1_h": (-9.0, 1.0, 0.0),
    "ex2_g": (-1.0, 1.0, 0.0),
    "ex2_h": (25.0, 1.0, 0.0),
    "ex3_g": (1.0, 1.0, 1.0),
    "ex3_h": (3.0, 0.0, 1.0),
}


@dataclass(frozen=True)
class Example:
    name: str
    b: float
    q: str
    g: str
    h: str
    f_slope: complex
    exact: str
    orders: dict[str, tuple[int, int]] = field(default_factory=dict)
    kernel_M: int = 256


EXAMPLES: dict[str, Example] = {
    "ex1": Example("ex1", 2.0, "ex1_q", "ex1_g", "ex1_h", 3.0, "ex1_u",
                   {"taylor": (20, 19), "remez": (11, 18), "lp": (11, 18)}),
    "ex2": Example("ex2", 2.0, "ex2_q", "ex2_g", "ex2_h", 5j, "ex2_u",
                   {"taylor": (50, 49), "lp": (14, 25)}),
    "ex3": Example("ex3", 1.0, "ex3_q", "ex3_g", "ex3_h", 0.0, "ex3_u",
                   {"taylor": (20, 19), "remez": (16, 19), "lp": (16, 19)}),
}


def expression(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return EXPRESSIONS[name]
    except KeyError:
        raise ConfigError(f"unknown expression id {name!r}; known: {', '.join(sorted(EXPRESSIONS))}") from None


def exact_solution(name: str) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    try:
        return EXACT[name]
    except KeyError:
        raise ConfigError(f"unknown exact solution id {name!r}") from None


def example(name: str) -> Example:
    try:
        return EXAMPLES[name]
    except KeyError:
        raise ConfigError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}") from None
