"""Positive eigenvalues of type-I orbit operators via the dispersion equation.

For a type-I orbit with ``rho_0 < 0`` the equation

    lam / rho_0 + f(lam) + g(lam) = 0      (I0)
    lam / rho_0 + g(lam) = 0               (I+)
    lam / rho_0 + f(lam) = 0               (I-)

has a positive root, and the root is an eigenvalue of the normalized
difference operator ``(L w)_n = rho_{n-1} w_{n-1} - rho_{n+1} w_{n+1}``.
The eigenvector is rebuilt from the ratios ``u_n = z_{n-1}/z_n`` with
``z_n = rho_n w_n``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import contfrac
from .contfrac import CFResult
from .lattice import Orbit, OrbitClass
from .oracle import residual

ROOT_LAMBDA_LO = 1e-8
SCAN_GRID = (1e-6, 1e4, 2000)
N_DEFAULT = 200
N_LIMIT = 20_000
TAIL_CUTOFF = 1e-14
ZERO_ENTRY = 1e-300


class OrbitClassError(ValueError):
    """Operation requires a different orbit class."""


class BracketError(RuntimeError):
    pass


class InconsistentRootError(ArithmeticError):
    pass


def _require_type_one(orbit: Orbit):
    if not orbit.klass.is_type_one:
        raise OrbitClassError(f"orbit {orbit.q_hat} is of type {orbit.klass.value}, not type I")
    r0 = orbit.rho(0)
    if not r0 < 0:
        raise OrbitClassError(f"type {orbit.klass.value} orbit with rho_0 = {r0} >= 0")
    for n in (-2, -1, 1, 2):
        r = orbit.rho(n)
        exempt = (orbit.klass is OrbitClass.TYPE_IPLUS and n == 1) or (
            orbit.klass is OrbitClass.TYPE_IMINUS and n == -1)
        if exempt:
            if r != 0:
                raise OrbitClassError(f"expected rho_{n} = 0 for class {orbit.klass.value}")
        elif not r > 0:
            raise OrbitClassError(f"rho_{n} = {r} breaks the {orbit.klass.value} sign pattern")


def dispersion_bracket(lam: float, orbit: Orbit, tol: float = 1e-14,
                       max_depth: int = contfrac.DEFAULT_MAX_DEPTH,
                       strict: bool = True) -> CFResult:
    """``D(lam)`` together with a rigorous enclosure.

    With ``strict=False`` an unconverged enclosure is returned instead of
    raising; it is still valid for sign decisions.
    """
    _require_type_one(orbit)
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    head = lam / orbit.rho(0)
    lo = hi = val = head
    depth, ok = 0, True
    parts = []
    if orbit.klass is not OrbitClass.TYPE_IPLUS:
        parts.append(contfrac.G(lam, contfrac.f_stream(orbit), tol, max_depth, strict))
    if orbit.klass is not OrbitClass.TYPE_IMINUS:
        parts.append(contfrac.G(lam, contfrac.g_stream(orbit), tol, max_depth, strict))
    for r in parts:
        lo, hi, val = lo + r.lower, hi + r.upper, val + r.value
        depth, ok = max(depth, r.depth), ok and r.converged
    return CFResult(val, lo, hi, depth, ok)


def dispersion_value(lam: float, orbit: Orbit, tol: float = 1e-13) -> float:
    """Class-specific dispersion function; each fraction is enclosed to ``tol/2``."""
    return dispersion_bracket(lam, orbit, 0.5 * tol).value


def _sign(lam: float, orbit: Orbit, tol: float) -> int:
    # tighten until the enclosure excludes zero
    t = max(tol, 1e-15)
    for _ in range(8):
        r = dispersion_bracket(lam, orbit, t, strict=False)
        if r.lower > 0:
            return 1
        if r.upper < 0:
            return -1
        if r.converged and r.upper - r.lower <= t:
            return 0 if r.value == 0 else (1 if r.value > 0 else -1)
        t *= 0.01
    r = dispersion_bracket(lam, orbit, 1e-15, strict=False)
    return 1 if r.value > 0 else -1


def find_root_bracket(orbit: Orbit, tol: float = 1e-12) -> tuple[float, float, float]:
    """Return ``(lam_star, lo, hi)`` with a certified sign change on ``[lo, hi]``."""
    _require_type_one(orbit)
    lo = ROOT_LAMBDA_LO
    if _sign(lo, orbit, 1e-3) <= 0:
        raise BracketError(f"D({lo}) is not positive for orbit {orbit.q_hat}")
    hi = 1.0
    for _ in range(80):
        if _sign(hi, orbit, 1e-3) < 0:
            break
        lo, hi = hi, 2.0 * hi
    else:
        raise BracketError(f"no sign change of D up to lambda={hi} for orbit {orbit.q_hat}")

    cf_tol = max(1e-3 * tol, 1e-15)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        s = _sign(mid, orbit, cf_tol)
        if s == 0:
            lo = hi = mid
            break
        if s > 0:
            lo = mid
        else:
            hi = mid

    # secant polish inside the certified bracket
    a, b = lo, hi
    da = dispersion_bracket(a, orbit, cf_tol).value
    db = dispersion_bracket(b, orbit, cf_tol).value
    x = 0.5 * (a + b)
    for _ in range(5):
        if db == da:
            break
        x_new = b - db * (b - a) / (db - da)
        if not lo <= x_new <= hi:
            break
        a, da = b, db
        b, db = x_new, dispersion_bracket(x_new, orbit, cf_tol).value
        x = x_new
    return x, lo, hi


def find_root(orbit: Orbit, tol: float = 1e-12) -> float:
    """Smallest bracketed positive root of the dispersion equation."""
    return find_root_bracket(orbit, tol)[0]


def scan_roots(orbit: Orbit, tol: float = 1e-12, grid: tuple = SCAN_GRID) -> list[float]:
    """All sign changes of ``D`` on a log grid, each refined by bisection.

    Completeness is not implied: roots closer than the grid spacing can hide.
    """
    _require_type_one(orbit)
    lams = np.geomspace(*grid)
    signs = [_sign(float(l), orbit, 1e-6) for l in lams]
    roots = []
    for i in range(len(lams) - 1):
        if signs[i] == 0:
            roots.append(float(lams[i]))
        elif signs[i] * signs[i + 1] < 0:
            lo, hi = float(lams[i]), float(lams[i + 1])
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                s = _sign(mid, orbit, max(1e-3 * tol, 1e-15))
                if s == 0:
                    lo = hi = mid
                elif s == signs[i]:
                    lo = mid
                else:
                    hi = mid
            roots.append(0.5 * (lo + hi))
    return roots


@dataclass
class Eigenpair:
    lambda_star: float
    n_lo: int
    n_hi: int
    w: np.ndarray
    z: np.ndarray
    residual: float
    decay_rate: float
    klass: OrbitClass
    decay_r2: float = math.nan
    decay_const: float = math.nan
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    def at(self, n: int) -> float:
        return float(self.w[n - self.n_lo])

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_star,
            "class": self.klass.value,
            "window": [self.n_lo, self.n_hi],
            "w": [float(v) for v in self.w],
            "residual": self.residual,
            "decay_rate": self.decay_rate,
        }


def _ratios(lam: float, orbit: Orbit, N: int, tol: float) -> tuple[dict, dict]:
    """``u_n`` for ``1 <= n <= N`` (forward fractions) and ``-N < n <= 0`` (backward)."""
    fwd, bwd = {}, {}
    k = orbit.klass
    if k is not OrbitClass.TYPE_IPLUS:
        for n in range(0, N + 1):
            fwd[n] = contfrac.u1(n, lam, orbit, tol).value
    if k is not OrbitClass.TYPE_IMINUS:
        for n in range(0, -N, -1):
            bwd[n] = contfrac.u2(n, lam, orbit, tol).value
    return fwd, bwd


def _glue_defect(lam: float, orbit: Orbit, fwd: dict, bwd: dict) -> float:
    k = orbit.klass
    if k is OrbitClass.TYPE_I0:
        return abs(fwd[0] - bwd[0])
    if k is OrbitClass.TYPE_IPLUS:
        return abs(bwd[0] - lam / orbit.rho(0))
    return abs(fwd[0])


def _window(lam: float, orbit: Orbit, N: int, tol: float):
    fwd, bwd = _ratios(lam, orbit, N, tol)
    z = np.zeros(2 * N + 1)
    w = np.zeros(2 * N + 1)
    z[N] = 1.0
    k = orbit.klass
    if k is not OrbitClass.TYPE_IPLUS:
        for n in range(1, N + 1):
            z[N + n] = z[N + n - 1] / fwd[n]
    if k is not OrbitClass.TYPE_IMINUS:
        for n in range(-1, -N - 1, -1):
            z[N + n] = z[N + n + 1] * bwd[n + 1]
    rho = orbit.rho_array(-N, N)
    nz = rho != 0
    w[nz] = z[nz] / rho[nz]
    if k is OrbitClass.TYPE_IPLUS:
        w[N + 1] = z[N] / lam
    elif k is OrbitClass.TYPE_IMINUS:
        w[N - 1] = -z[N] / lam
    return w, z, _glue_defect(lam, orbit, fwd, bwd)


def fit_decay(n: np.ndarray, w: np.ndarray) -> tuple[float, float, float]:
    """Least-squares fit ``log|w_n| ~ log C_side + |n| log q``; returns ``(C, q, r2)``.

    Both tails decay at the same asymptotic rate but with different
    prefactors, so each side of ``n = 0`` gets its own intercept while the
    slope is shared.  ``C`` is raised afterwards so that ``|w_n| <= C q^|n|``
    holds on the whole window.
    """
    mask = np.abs(w) > ZERO_ENTRY
    x = np.abs(n[mask]).astype(float)
    y = np.log(np.abs(w[mask]))
    if x.size < 3:
        return math.nan, math.nan, math.nan
    neg = (n[mask] < 0).astype(float)
    cols = [x] + [c for c in (1.0 - neg, neg) if c.any()]
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), y, rcond=None)
    slope = coef[0]
    pred = np.column_stack(cols) @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    log_c = float(np.max(y - slope * x))
    return math.exp(log_c), math.exp(slope), r2


def build_eigenvector(lambda_star: float, orbit: Orbit, N: int = N_DEFAULT,
                      tol: float = 1e-12, auto_extend: bool = True) -> Eigenpair:
    """Eigenvector on ``[-N, N]`` with ``z_0 = 1``, rescaled to ``w_1 > 0``, ``max|w| = 1``."""
    _require_type_one(orbit)
    cf_tol = max(1e-2 * tol, 1e-15)
    while True:
        w, z, defect = _window(lambda_star, orbit, N, cf_tol)
        big = np.max(np.abs(w))
        edge = max(abs(w[0]), abs(w[-1]))
        if not auto_extend or edge < TAIL_CUTOFF * big or 2 * N > N_LIMIT:
            break
        N *= 2
    if defect > 10 * tol:
        raise InconsistentRootError(
            f"glue defect {defect:.3e} exceeds 10*tol at lambda={lambda_star!r}")
    scale = big if w[N + 1] > 0 else -big
    w, z = w / scale, z / scale
    n = np.arange(-N, N + 1)
    res = residual(lambda_star, w, orbit, -N)
    C, q, r2 = fit_decay(n, w)
    return Eigenpair(lambda_star, -N, N, w, z, res, q, orbit.klass, r2, C,
                     {"glue_defect": defect})


def solve(orbit: Orbit, tol: float = 1e-12, N: int = N_DEFAULT) -> Eigenpair:
    lam = find_root(orbit, tol)
    return build_eigenvector(lam, orbit, N, tol)


def _pattern_ok(w: np.ndarray, n: np.ndarray, klass: OrbitClass) -> bool:
    def pos(v):
        return v > ZERO_ENTRY

    def neg(v):
        return v < -ZERO_ENTRY

    def zero(v):
        return abs(v) <= ZERO_ENTRY

    for ni, wi in zip(n.tolist(), w.tolist()):
        if ni > 1:
            ok = zero(wi) if klass is OrbitClass.TYPE_IPLUS else pos(wi)
        elif ni == 1:
            ok = pos(wi)
        elif ni in (0, -1):
            ok = neg(wi)
        else:
            if klass is OrbitClass.TYPE_IMINUS:
                ok = zero(wi)
            else:
                ok = pos(wi) if ni % 2 == 0 else neg(wi)
        if not ok:
            return False
    return True


def verify_sign_pattern(pair: Eigenpair) -> bool:
    """True iff ``w`` or ``-w`` has the sign pattern of its class on the window.

    Entries below 1e-300 in magnitude count as zero.  Far-tail entries that
    underflow to zero are tolerated only where the pattern has no zeros if
    they lie beyond the last resolved entry of that side.
    """
    if not pair.klass.is_type_one:
        return False
    n, w = pair.n, np.asarray(pair.w, dtype=float)
    if not np.any(np.abs(w) > ZERO_ENTRY):
        return False
    keep = _resolved(n, w, pair.klass)
    return any(_pattern_ok(s * w[keep], n[keep], pair.klass) for s in (1.0, -1.0))


def _resolved(n: np.ndarray, w: np.ndarray, klass: OrbitClass) -> np.ndarray:
    # drop trailing underflowed entries on sides that must be nonzero
    keep = np.ones(n.size, dtype=bool)
    big = np.abs(w) > ZERO_ENTRY
    if klass is not OrbitClass.TYPE_IPLUS:
        right = np.nonzero(big & (n > 0))[0]
        if right.size:
            keep[(n > 0) & (np.arange(n.size) > right[-1])] = False
    if klass is not OrbitClass.TYPE_IMINUS:
        left = np.nonzero(big & (n < 0))[0]
        if left.size:
            keep[(n < 0) & (np.arange(n.size) < left[0])] = False
    return keep
