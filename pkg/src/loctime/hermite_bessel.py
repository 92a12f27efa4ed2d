"""Exact combinatorics behind the compensator and the Kailath-Segall expansion.

Bessel numbers of the second kind are the (signed) coefficients of the monic
probabilists' Hermite polynomials::

    a(q, k) = (-1)**k * q! / (2**k * k! * (q - 2k)!)
    H_q(x)   = sum_k a(q, k) x**(q-2k)
    H~_q(x, a) = sum_k a(q, k) a**k x**(q-2k)

Everything integer-valued is computed with Python ints; nothing here touches
floating point except the polynomial evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

__all__ = [
    "MAX_EXACT_ORDER",
    "BesselTable",
    "HermiteExpansion",
    "bessel_number",
    "bessel_table",
    "hermite_eval",
    "scaled_hermite_eval",
    "limit_constant",
    "limit_constant_squared",
    "kailath_segall_expansion",
    "compensator_coefficients",
]

MAX_EXACT_ORDER = 20
MAX_EVAL_ORDER = 30


def bessel_number(q: int, k: int) -> int:
    """Signed Bessel number of the second kind ``a(q, k)``.

    Raises ValueError unless ``0 <= 2k <= q <= MAX_EXACT_ORDER``.
    """
    q, k = int(q), int(k)
    if k < 0 or 2 * k > q:
        raise ValueError(f"bessel_number needs 0 <= 2k <= q, got q={q}, k={k}")
    if q > MAX_EXACT_ORDER:
        raise ValueError(f"order q={q} exceeds exactness bound {MAX_EXACT_ORDER}")
    magnitude = math.factorial(q) // (2**k * math.factorial(k) * math.factorial(q - 2 * k))
    return -magnitude if k % 2 else magnitude


@dataclass(frozen=True)
class BesselTable:
    max_order: int
    coefficients: dict[tuple[int, int], int]

    def row(self, q: int) -> list[int]:
        return [self.coefficients[(q, k)] for k in range(q // 2 + 1)]


def bessel_table(max_order: int) -> BesselTable:
    if max_order < 1:
        raise ValueError("max_order must be positive")
    coeffs = {
        (q, k): bessel_number(q, k)
        for q in range(max_order + 1)
        for k in range(q // 2 + 1)
    }
    return BesselTable(max_order=max_order, coefficients=coeffs)


def hermite_eval(n: int, x):
    """Monic Hermite polynomial ``H_n(x)`` via ``H_n = x H_{n-1} - (n-1) H_{n-2}``.

    Works elementwise on arrays.
    """
    return scaled_hermite_eval(n, x, 1.0)


def scaled_hermite_eval(n: int, x, a):
    """Two-variable Hermite polynomial ``H~_n(x, a)``.

    Uses the recursion ``H~_n = x H~_{n-1} - (n-1) a H~_{n-2}``, so ``a = 0``
    is well defined and gives ``x**n``.
    """
    if n < 0 or n > MAX_EVAL_ORDER:
        raise ValueError(f"order n={n} outside [0, {MAX_EVAL_ORDER}]")
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(a < 0):
        raise ValueError("scaled Hermite polynomial needs a >= 0")
    prev, cur = np.ones_like(x * a), x * np.ones_like(a)
    if n == 0:
        return _unwrap(prev)
    for m in range(2, n + 1):
        prev, cur = cur, x * cur - (m - 1) * a * prev
    return _unwrap(cur)


def _unwrap(value: np.ndarray):
    return float(value) if value.ndim == 0 else value


def limit_constant_squared(q: int) -> Fraction:
    """``c_q**2 = 2**(2q+1) q! / (q+1)`` as an exact rational."""
    if q < 2:
        raise ValueError(f"limit constant defined for q >= 2, got {q}")
    return Fraction(2 ** (2 * q + 1) * math.factorial(q), q + 1)


def limit_constant(q: int) -> float:
    return math.sqrt(limit_constant_squared(q))


@dataclass(frozen=True)
class HermiteExpansion:
    """``q! I_q = sum_k monomial_coeffs[k] * M**(q-2k) * <M>**k``."""

    order: int
    monomial_coeffs: tuple[int, ...]

    def evaluate(self, m, quad_var):
        m = np.asarray(m, dtype=float)
        quad_var = np.asarray(quad_var, dtype=float)
        total = np.zeros(np.broadcast(m, quad_var).shape)
        for k, c in enumerate(self.monomial_coeffs):
            total = total + c * m ** (self.order - 2 * k) * quad_var**k
        return _unwrap(total)


def kailath_segall_expansion(q: int) -> HermiteExpansion:
    if q < 0 or q > MAX_EXACT_ORDER:
        raise ValueError(f"order q={q} outside [0, {MAX_EXACT_ORDER}]")
    return HermiteExpansion(q, tuple(bessel_number(q, k) for k in range(q // 2 + 1)))


def compensator_coefficients(q: int) -> list[int]:
    """Integer weights ``a(q, k) * 4**k`` for k = 0..q//2.

    Entry k multiplies ``int (dL)**(q-2k) (int_x^{x+h} L du)**k dx``; for q=4
    this is ``[1, -24, 48]``.
    """
    return [bessel_number(q, k) * 4**k for k in range(q // 2 + 1)]
