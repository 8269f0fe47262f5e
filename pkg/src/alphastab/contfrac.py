"""Continued fractions ``[b1, b2, ...] = 1/(b1 + 1/(b2 + ...))`` with positive terms.

Evaluation runs the three-term recurrence for the convergents ``A_k/B_k``.
For positive partial denominators the even convergents increase and the odd
ones decrease, which gives a two-sided enclosure at every depth.  When the
coefficient stream can bound its own tail, the tail value is enclosed by the
periodic-fraction bounds and pushed through the same Moebius map, which
tightens the enclosure dramatically for small arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

from .lattice import Orbit, OrbitClass

DEFAULT_TOL = 1e-12
DEFAULT_MAX_DEPTH = 10_000
_RESCALE = 1e150


class ContinuedFractionError(ArithmeticError):
    pass


class NonConvergenceError(ContinuedFractionError):
    def __init__(self, msg, lower=None, upper=None, depth=None):
        super().__init__(msg)
        self.lower, self.upper, self.depth = lower, upper, depth


class UndefinedBranchError(ContinuedFractionError):
    """The requested fraction has a vanishing or negative coefficient."""


@dataclass(frozen=True)
class CoefficientStream:
    """Coefficients ``c_k`` (k >= 1) of ``G(x) = [x c_1, x c_2, ...]``.

    ``tail(k)``, if given, returns ``(lo, hi)`` with ``lo <= c_j <= hi`` for
    every ``j >= k``, or None when no such bound is known.
    """

    at: Callable[[int], float]
    tail: Callable[[int], tuple[float, float] | None] | None = None

    @classmethod
    def constant(cls, value: float = 1.0) -> "CoefficientStream":
        return cls(lambda k: value, lambda k: (value, value))


@dataclass(frozen=True)
class CFResult:
    value: float
    lower: float
    upper: float
    depth: int
    converged: bool

    def shifted(self, offset: float, sign: float = 1.0) -> "CFResult":
        """Result for ``offset + sign * self``."""
        lo, hi = offset + sign * self.lower, offset + sign * self.upper
        if sign < 0:
            lo, hi = hi, lo
        return CFResult(offset + sign * self.value, lo, hi, self.depth, self.converged)


def eval_finite(partials: Sequence[float]) -> float:
    """Backward evaluation of the finite fraction ``[a1, ..., ak]``."""
    t = 0.0
    for depth in range(len(partials), 0, -1):
        d = partials[depth - 1] + t
        if d == 0:
            raise ContinuedFractionError(f"zero denominator at depth {depth}")
        t = 1.0 / d
    return t


def F_closed(a: float, b: float) -> float:
    """Value of the periodic fraction ``[a, b, a, b, ...]``."""
    if not (a > 0 and b > 0):
        raise ValueError("F_closed needs a, b > 0")
    r = b / a
    return r / (math.sqrt(0.25 * b * b + r) + 0.5 * b)


def G_inf(x: float) -> float:
    """``[x, x, ...] = sqrt((x/2)^2 + 1) - x/2`` (written without cancellation)."""
    if x < 0:
        raise ValueError("G_inf needs x >= 0")
    return 1.0 / (math.sqrt(0.25 * x * x + 1.0) + 0.5 * x)


def bounds_between(x: float, lo: float, hi: float) -> tuple[float, float]:
    """Enclosure of ``[x c_1, x c_2, ...]`` when every ``c_k`` lies in ``[lo, hi]``."""
    return F_closed(x * hi, x * lo), F_closed(x * lo, x * hi)


def envelope(x: float, delta: float) -> tuple[float, float]:
    """Bounds on a tail whose coefficients lie in ``(1 - delta, 1 + delta)``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return bounds_between(x, 1.0 - delta, 1.0 + delta)


def G(
    x: float,
    stream: CoefficientStream,
    tol: float = DEFAULT_TOL,
    max_depth: int = DEFAULT_MAX_DEPTH,
    raise_on_failure: bool = True,
) -> CFResult:
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    a_prev, a_cur = 1.0, 0.0
    b_prev, b_cur = 0.0, 1.0
    lo, hi = 0.0, math.inf
    for k in range(1, max_depth + 1):
        ck = stream.at(k)
        if not ck > 0:
            raise UndefinedBranchError(f"coefficient c_{k} = {ck} is not positive")
        bk = x * ck
        a_prev, a_cur = a_cur, bk * a_cur + a_prev
        b_prev, b_cur = b_cur, bk * b_cur + b_prev
        s = max(abs(a_cur), abs(b_cur))
        if s > _RESCALE:
            a_prev, a_cur, b_prev, b_cur = a_prev / s, a_cur / s, b_prev / s, b_cur / s
        cur = a_cur / b_cur
        prev = a_prev / b_prev if b_prev != 0 else math.inf
        lo, hi = min(cur, prev), max(cur, prev)
        if stream.tail is not None:
            tb = stream.tail(k + 1)
            if tb is not None and tb[0] > 0:
                t_lo, t_hi = bounds_between(x, *tb)
                v1 = (a_cur + t_lo * a_prev) / (b_cur + t_lo * b_prev)
                v2 = (a_cur + t_hi * a_prev) / (b_cur + t_hi * b_prev)
                lo, hi = max(lo, min(v1, v2)), min(hi, max(v1, v2))
        if hi - lo <= tol:
            return CFResult(0.5 * (lo + hi), lo, hi, k, True)
    if raise_on_failure:
        raise NonConvergenceError(
            f"bracket [{lo!r}, {hi!r}] wider than {tol} after {max_depth} terms",
            lo, hi, max_depth,
        )
    mid = 0.5 * (lo + hi) if math.isfinite(hi) else lo
    return CFResult(mid, lo, hi, max_depth, False)


def convergents(x: float, stream: CoefficientStream, depth: int) -> list[float]:
    """Plain truncations ``G^(1), ..., G^(depth)`` (no tail information)."""
    out = []
    a_prev, a_cur, b_prev, b_cur = 1.0, 0.0, 0.0, 1.0
    for k in range(1, depth + 1):
        bk = x * stream.at(k)
        a_prev, a_cur = a_cur, bk * a_cur + a_prev
        b_prev, b_cur = b_cur, bk * b_cur + b_prev
        s = max(abs(a_cur), abs(b_cur))
        if s > _RESCALE:
            a_prev, a_cur, b_prev, b_cur = a_prev / s, a_cur / s, b_prev / s, b_cur / s
        out.append(a_cur / b_cur)
    return out


# -- fractions built from an orbit's coefficients ---------------------------

def _orbit_stream(orbit: Orbit, start: int, step: int) -> CoefficientStream:
    """Stream ``c_k = 1 / rho_{start + step*k}``.

    Past the vertex of the orbit line the norms grow monotonically, hence
    ``rho`` increases to 1 and ``c`` decreases to 1 along the tail.
    """
    t = orbit.vertex

    def at(k: int) -> float:
        r = orbit.rho(start + step * k)
        return 1.0 / r if r != 0 else math.nan  # rejected by G

    def tail(k: int):
        j = start + step * k
        if (step > 0 and j < t) or (step < 0 and j > t):
            return None
        r = orbit.rho(j)
        if not r > 0:
            return None
        return 1.0, 1.0 / r

    return CoefficientStream(at, tail)


def f_stream(orbit: Orbit, n: int = 0) -> CoefficientStream:
    return _orbit_stream(orbit, n, 1)


def g_stream(orbit: Orbit, n: int = 0) -> CoefficientStream:
    return _orbit_stream(orbit, n, -1)


def f_of_lambda(lam: float, orbit: Orbit, tol: float = DEFAULT_TOL,
                max_depth: int = DEFAULT_MAX_DEPTH) -> CFResult:
    """``f(lam) = [lam/rho_1, lam/rho_2, ...]``; undefined for type I+."""
    if orbit.klass is OrbitClass.TYPE_IPLUS:
        raise UndefinedBranchError("f is undefined for type I+ orbits (rho_1 = 0)")
    return G(lam, f_stream(orbit), tol, max_depth)


def g_of_lambda(lam: float, orbit: Orbit, tol: float = DEFAULT_TOL,
                max_depth: int = DEFAULT_MAX_DEPTH) -> CFResult:
    """``g(lam) = [lam/rho_-1, lam/rho_-2, ...]``; undefined for type I-."""
    if orbit.klass is OrbitClass.TYPE_IMINUS:
        raise UndefinedBranchError("g is undefined for type I- orbits (rho_-1 = 0)")
    return G(lam, g_stream(orbit), tol, max_depth)


def u1(n: int, lam: float, orbit: Orbit, tol: float = DEFAULT_TOL,
       max_depth: int = DEFAULT_MAX_DEPTH) -> CFResult:
    """``u_n = lam/rho_n + [lam/rho_{n+1}, ...]`` for ``n >= 0``."""
    if n < 0:
        raise ValueError("u1 is defined for n >= 0")
    r = orbit.rho(n)
    if r == 0:
        raise UndefinedBranchError(f"rho_{n} = 0")
    return G(lam, f_stream(orbit, n), tol, max_depth).shifted(lam / r)


def u2(n: int, lam: float, orbit: Orbit, tol: float = DEFAULT_TOL,
       max_depth: int = DEFAULT_MAX_DEPTH) -> CFResult:
    """``u_n = -[lam/rho_{n-1}, lam/rho_{n-2}, ...]`` for ``n <= 0``."""
    if n > 0:
        raise ValueError("u2 is defined for n <= 0")
    return G(lam, g_stream(orbit, n), tol, max_depth).shifted(0.0, -1.0)
