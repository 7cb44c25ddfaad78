"""Scalar numerics shared by the solver and the support analysis.

Root bracketing and general adaptive quadrature are delegated to SciPy
(``brentq`` and QUADPACK's ``quad``); the vectorized Gauss-Legendre rule
and the Neville/Richardson extrapolation are small enough to live here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize
from scipy import special as _special

from .errors import ConvergenceError, DomainError

ROOT_MAX_ITER = 100
QUAD_LIMIT = 200


def sqrt_upper(w):
    """Square root with nonnegative imaginary part.

    On the positive real axis (imaginary part exactly zero) the principal
    root is returned. Works elementwise on arrays.
    """
    s = np.sqrt(np.asarray(w, dtype=complex))
    return np.where(s.imag < 0, -s, s) if np.ndim(s) else (-s if s.imag < 0 else s)


@dataclass(frozen=True)
class BracketedRoot:
    a: float
    b: float
    tol: float = 1e-12

    def __post_init__(self):
        if not (self.a < self.b):
            raise DomainError(f"bracket requires a < b, got [{self.a}, {self.b}]")
        if not self.tol > 0:
            raise DomainError("bracket tolerance must be positive")

    @classmethod
    def checked(cls, f: Callable[[float], float], a: float, b: float, tol: float = 1e-12):
        """Build a bracket after verifying that ``f`` changes sign on it."""
        fa, fb = f(a), f(b)
        if fa * fb > 0:
            raise DomainError(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
        return cls(a, b, tol)


def find_root(f: Callable[[float], float], bracket: BracketedRoot) -> float:
    """Root of ``f`` inside ``bracket`` to absolute tolerance ``bracket.tol``."""
    a, b = bracket.a, bracket.b
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise DomainError(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    try:
        root = _optimize.brentq(
            f, a, b, xtol=bracket.tol, rtol=4 * np.finfo(float).eps, maxiter=ROOT_MAX_ITER
        )
    except RuntimeError as exc:
        raise ConvergenceError(str(exc), best=0.5 * (a + b)) from exc
    return min(max(root, a), b)


def integrate(f: Callable[[float], float], a: float, b: float, tol: float = 1e-10) -> float:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    Integrable endpoint singularities of inverse-square-root type are
    handled by QUADPACK's extrapolation. Complex-valued integrands are
    supported. Raises :class:`ConvergenceError` (carrying the best estimate)
    when the requested tolerance is not met.
    """
    probe = f(0.5 * (a + b))
    is_complex = np.iscomplexobj(probe)
    with np.errstate(all="ignore"):
        out = _integrate.quad(
            f, a, b, epsabs=tol, epsrel=0.0, limit=QUAD_LIMIT,
            complex_func=is_complex, full_output=1,
        )
    if is_complex:
        value, err, info = out
        bad = any(len(part) > 3 for part in info.values())
        err = abs(complex(err[0], 0) if isinstance(err, tuple) else err)
    else:
        value, err, info = out[0], out[1], out[2]
        bad = len(out) > 3
    if bad and err > tol:
        raise ConvergenceError(
            f"quadrature did not reach tol={tol:g} on [{a}, {b}] (est. err {err:g})",
            best=value, residual=err,
        )
    return value


@lru_cache(maxsize=None)
def gauss_legendre(n: int):
    """Gauss-Legendre nodes and weights on [-1, 1] (cached)."""
    return _special.roots_legendre(n)


def gl_integrate(g: Callable[[np.ndarray], np.ndarray], a: float, b: float,
                 tol: float = 1e-13, n0: int = 48, n_max: int = 6144):
    """Integrate a vectorized smooth ``g`` over ``[a, b]`` by node doubling.

    Gauss-Legendre with ``n`` and ``2n`` nodes is compared until the two
    agree within ``tol`` (absolute, relative to the magnitude of the
    result). Falls back to :func:`integrate` when ``n_max`` is reached,
    which happens only for integrands with near-real poles.
    """
    half, mid = 0.5 * (b - a), 0.5 * (b + a)
    n = n0
    x, w = gauss_legendre(n)
    prev = half * np.dot(w, g(mid + half * x))
    while n < n_max:
        n *= 2
        x, w = gauss_legendre(n)
        cur = half * np.dot(w, g(mid + half * x))
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return integrate(lambda t: complex(g(np.array([t]))[0]) if np.iscomplexobj(prev)
                     else float(g(np.array([t]))[0]), a, b, tol=tol * max(1.0, abs(prev)))


def extrapolate_to_zero(pairs: Sequence[tuple[float, complex]]):
    """Polynomial (Neville) extrapolation of ``v(y)`` to ``y = 0``.

    ``pairs`` holds ``(y_k, v_k)`` with strictly decreasing positive
    ``y_k``. Returns ``(limit, error_estimate)``; the error estimate is the
    difference between the last two entries of the final tableau row.
    """
    if len(pairs) < 3:
        raise DomainError("extrapolation needs at least 3 points")
    ys = [float(y) for y, _ in pairs]
    if any(y <= 0 for y in ys) or any(y1 <= y2 for y1, y2 in zip(ys, ys[1:])):
        raise DomainError("extrapolation heights must be positive and strictly decreasing")
    vals = [v for _, v in pairs]
    n = len(ys)
    table = [list(vals)]
    for j in range(1, n):
        prev = table[-1]
        row = []
        for i in range(n - j):
            # Neville recurrence evaluated at y = 0.
            yi, yij = ys[i], ys[i + j]
            row.append((yij * prev[i] - yi * prev[i + 1]) / (yij - yi))
        table.append(row)
    limit = table[-1][0]
    err = abs(table[-1][0] - table[-2][-1])
    return limit, err


def central_difference(f: Callable[[float], float], x: float, step: float) -> float:
    """Five-point central difference approximation of ``f'(x)``."""
    return (-f(x + 2 * step) + 8 * f(x + step) - 8 * f(x - step) + f(x - 2 * step)) / (12 * step)


def is_finite_complex(z) -> bool:
    return math.isfinite(z.real) and math.isfinite(z.imag)
