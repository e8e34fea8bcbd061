"""Smooth test functions with exact derivatives, built from sympy expressions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import sympy as sp

# derivatives of Abs and sign carry point masses on a null set; drop them
_MODULES = [{"DiracDelta": lambda *a: np.zeros_like(a[0], dtype=float),
             "Heaviside": lambda x, h0=0.5: np.heaviside(x, h0)}, "numpy"]


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Vectorized value, gradient and Hessian of a function on R^n."""

    dim: int
    value: Callable
    gradient: Callable
    hessian: Callable
    expression: str = ""

    __test__ = False  # keep pytest from collecting this class

    @classmethod
    def from_sympy(cls, expr, symbols):
        symbols = list(symbols)
        n = len(symbols)
        grad = [sp.diff(expr, s) for s in symbols]
        hess = [[sp.diff(g, s) for s in symbols] for g in grad]
        f0 = sp.lambdify(symbols, expr, _MODULES)
        f1 = [sp.lambdify(symbols, g, _MODULES) for g in grad]
        f2 = [[sp.lambdify(symbols, e, _MODULES) for e in row] for row in hess]

        def cols(x):
            x = np.asarray(x, dtype=float)
            return [x[..., i] for i in range(n)]

        def value(x):
            c = cols(x)
            return np.broadcast_to(f0(*c), np.shape(c[0])).astype(float)

        def gradient(x):
            c = cols(x)
            return np.stack([np.broadcast_to(f(*c), np.shape(c[0])) for f in f1], axis=-1).astype(float)

        def hessian(x):
            c = cols(x)
            rows = [np.stack([np.broadcast_to(f(*c), np.shape(c[0])) for f in row], axis=-1)
                    for row in f2]
            return np.stack(rows, axis=-2).astype(float)

        return cls(n, value, gradient, hessian, str(expr))

    @classmethod
    def parse(cls, text: str, dim: int):
        """Parse an expression in x1..xn (or x when dim = 1)."""
        names = ["x"] if dim == 1 else [f"x{i + 1}" for i in range(dim)]
        symbols = sp.symbols(names, real=True)
        local = dict(zip(names, symbols))
        return cls.from_sympy(sp.sympify(text, locals=local), symbols)


def symbols(dim):
    return sp.symbols(["x"] if dim == 1 else [f"x{i + 1}" for i in range(dim)], real=True)
