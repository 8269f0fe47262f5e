"""Lattice geometry of a unidirectional (single Fourier mode) steady state.

The linearization about the bar state with wave vector ``p`` splits the
Fourier lattice into lines ``{q + n p : n in Z}``.  Each line (an *orbit*)
carries a two-diagonal difference operator whose coefficients are computed
here.  All norm comparisons are done on integer squared norms so that
boundary cases (a lattice point exactly on the circle of radius ``|p|``)
are decided exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

Vec = tuple[int, int]


class ParallelOrbitError(ValueError):
    """Raised when an orbit representative is parallel to ``p``."""


class OrbitClass(str, enum.Enum):
    TYPE0 = "0"
    TYPE_I0 = "I0"
    TYPE_IPLUS = "I+"
    TYPE_IMINUS = "I-"
    TYPE_II = "II"

    @property
    def is_type_one(self) -> bool:
        return self in (OrbitClass.TYPE_I0, OrbitClass.TYPE_IPLUS, OrbitClass.TYPE_IMINUS)


@dataclass(frozen=True)
class FlowParams:
    """Bar state ``omega_p = gamma_amp / 2`` with smoothing length ``alpha``."""

    p: Vec
    alpha: float = 0.0
    gamma_amp: complex = 1.0

    def __post_init__(self):
        p = (int(self.p[0]), int(self.p[1]))
        if p == (0, 0):
            raise ValueError("wave vector p must be nonzero")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")
        object.__setattr__(self, "p", p)

    @property
    def p_norm2(self) -> int:
        return norm2(self.p)

    @property
    def p_weight(self) -> float:
        """``|p|^2 (1 + alpha^2 |p|^2)``, the inverse stream-function factor at ``p``."""
        return weight(self.p_norm2, self.alpha)


def norm2(v: Vec) -> int:
    return v[0] * v[0] + v[1] * v[1]


def weight(n2: float, alpha: float) -> float:
    return n2 * (1.0 + alpha * alpha * n2)


def wedge(p: Vec, q: Vec) -> int:
    """Determinant ``p1 q2 - q1 p2``."""
    return p[0] * q[1] - q[0] * p[1]


def beta(p: Vec, q: Vec, alpha: float) -> float:
    """Interaction coefficient of the Fourier-mode vorticity equation.

    Zero whenever one argument is the zero vector.
    """
    n2p, n2q = norm2(p), norm2(q)
    if n2p == 0 or n2q == 0:
        return 0.0
    return 0.5 * (1.0 / weight(n2q, alpha) - 1.0 / weight(n2p, alpha)) * wedge(p, q)


def _reduce(p: Vec, q: Vec) -> tuple[Vec, int]:
    # n -> |q + n p|^2 is a strictly convex quadratic, so the integer
    # minimizers sit next to the real one.
    t = -(q[0] * p[0] + q[1] * p[1]) / norm2(p)
    best = None
    for n in range(math.floor(t) - 2, math.ceil(t) + 3):
        v = (q[0] + n * p[0], q[1] + n * p[1])
        key = (norm2(v), -n)
        if best is None or key < best[0]:
            best = (key, v, n)
    return best[1], best[2]


def minimize_orbit(params: FlowParams, q: Vec) -> tuple[Vec, int]:
    """Return ``(q_hat, n_max)`` with ``q_hat = q + n_max p`` of least norm.

    Among equal-norm minimizers the largest shift ``n_max`` wins.
    """
    q = (int(q[0]), int(q[1]))
    if wedge(params.p, q) == 0:
        raise ParallelOrbitError(f"q={q} is parallel to p={params.p}")
    return _reduce(params.p, q)


def orbit_key(p: Vec, k: Vec) -> Vec:
    """Canonical representative of the line ``k + Z p`` (parallel lines allowed)."""
    return _reduce(p, k)[0]


def classify(params: FlowParams, q_hat: Vec) -> OrbitClass:
    p = params.p
    if wedge(p, q_hat) == 0:
        raise ParallelOrbitError(f"q={q_hat} is parallel to p={p}")
    r2 = params.p_norm2
    if norm2(q_hat) >= r2:
        return OrbitClass.TYPE0
    # consecutive orbit points are |p| apart, so at most two fit in the open disc
    inside = sum(
        1 for n in range(-3, 4) if norm2((q_hat[0] + n * p[0], q_hat[1] + n * p[1])) < r2
    )
    if inside == 2:
        return OrbitClass.TYPE_II
    if norm2((q_hat[0] + p[0], q_hat[1] + p[1])) == r2:
        return OrbitClass.TYPE_IPLUS
    if norm2((q_hat[0] - p[0], q_hat[1] - p[1])) == r2:
        return OrbitClass.TYPE_IMINUS
    return OrbitClass.TYPE_I0


@dataclass(frozen=True)
class Orbit:
    """A reduced orbit ``{q_hat + n p}``; index ``n`` is relative to ``q_hat``."""

    params: FlowParams
    q_hat: Vec
    n_max: int
    klass: OrbitClass
    norm_c: float
    _rho_cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    @property
    def p(self) -> Vec:
        return self.params.p

    @property
    def alpha(self) -> float:
        return self.params.alpha

    def point(self, n: int) -> Vec:
        p, q = self.p, self.q_hat
        return (q[0] + n * p[0], q[1] + n * p[1])

    def gamma(self, n: int) -> float:
        n2 = norm2(self.point(n))
        if n2 == self.params.p_norm2:
            return -1.0
        return -self.params.p_weight / weight(n2, self.alpha)

    def rho(self, n: int) -> float:
        """Normalized coefficient ``1 + gamma_n``; exactly zero on the circle ``|p|``."""
        r = self._rho_cache.get(n)
        if r is None:
            n2 = norm2(self.point(n))
            if n2 == self.params.p_norm2:
                r = 0.0
            else:
                r = 1.0 - self.params.p_weight / weight(n2, self.alpha)
            self._rho_cache[n] = r
        return r

    def rho_array(self, n_lo: int, n_hi: int) -> np.ndarray:
        return np.array([self.rho(n) for n in range(n_lo, n_hi + 1)])

    @property
    def c(self) -> complex | float:
        """Signed normalization constant; the physical operator is ``c`` times the normalized one."""
        return normalization_factor(self.params, self.q_hat)

    @property
    def vertex(self) -> float:
        """Real shift ``t*`` minimizing ``|q_hat + t p|``; norms grow monotonically away from it."""
        p, q = self.p, self.q_hat
        return -(q[0] * p[0] + q[1] * p[1]) / norm2(p)

    def to_dict(self) -> dict:
        return {
            "p": list(self.p),
            "alpha": self.alpha,
            "q_hat": list(self.q_hat),
            "class": self.klass.value,
            "norm_c": self.norm_c,
        }


def normalization_factor(params: FlowParams, q: Vec) -> complex | float:
    c = 0.5 * params.gamma_amp * wedge(q, params.p) / params.p_weight
    if isinstance(c, complex) and c.imag == 0:
        return c.real
    return c


def normalization_constant(orbit: Orbit) -> float:
    """``|c|`` for the user's (un-normalized) amplitude."""
    return abs(normalization_factor(orbit.params, orbit.q_hat))


def make_orbit(params: FlowParams, q: Vec) -> Orbit:
    q_hat, n_max = minimize_orbit(params, q)
    klass = classify(params, q_hat)
    return Orbit(params, q_hat, n_max, klass, abs(normalization_factor(params, q_hat)))


@dataclass(frozen=True)
class CoefficientWindow:
    n_lo: int
    n_hi: int
    rho: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)


def coefficients(orbit: Orbit, n_lo: int, n_hi: int) -> CoefficientWindow:
    if n_lo > n_hi:
        raise ValueError(f"empty window [{n_lo}, {n_hi}]")
    idx = range(n_lo, n_hi + 1)
    gamma = np.array([orbit.gamma(n) for n in idx])
    rho = np.array([orbit.rho(n) for n in idx])
    delta = np.where(rho >= 0, np.sqrt(np.abs(rho)) + 0j, 1j * np.sqrt(np.abs(rho)))
    return CoefficientWindow(n_lo, n_hi, rho, gamma, delta)


def lattice_disc(radius2: float) -> Iterator[Vec]:
    """Nonzero lattice points with squared norm ``< radius2``, ordered by (norm2, q1, q2)."""
    r = math.isqrt(max(int(math.ceil(radius2)), 0)) + 1
    pts = [
        (a, b)
        for a in range(-r, r + 1)
        for b in range(-r, r + 1)
        if (a, b) != (0, 0) and a * a + b * b < radius2
    ]
    pts.sort(key=lambda v: (norm2(v), v[0], v[1]))
    return iter(pts)


def enumerate_type_one(params: FlowParams) -> list[Vec]:
    """All type-I orbit representatives (each lies strictly inside the disc of radius |p|)."""
    found = []
    for q in lattice_disc(params.p_norm2):
        if wedge(params.p, q) == 0:
            continue
        q_hat, _ = minimize_orbit(params, q)
        if q_hat == q and classify(params, q).is_type_one:
            found.append(q)
    return found


def find_type_one(params: FlowParams) -> Vec | None:
    found = enumerate_type_one(params)
    return found[0] if found else None


def orbit_representatives(params: FlowParams, radius: float) -> list[Orbit]:
    """Distinct non-parallel orbits whose minimizer has norm ``<= radius``."""
    r2 = radius * radius
    seen = {}
    r = int(math.floor(radius))
    for a in range(-r, r + 1):
        for b in range(-r, r + 1):
            q = (a, b)
            if norm2(q) > r2 or wedge(params.p, q) == 0:
                continue
            q_hat, _ = minimize_orbit(params, q)
            if q_hat not in seen and norm2(q_hat) <= r2:
                seen[q_hat] = make_orbit(params, q_hat)
    return sorted(seen.values(), key=lambda o: (norm2(o.q_hat), o.q_hat))


find_typeI = find_type_one
