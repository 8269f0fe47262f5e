"""Dense truncations of the orbit operators and the 2D linearization.

Everything the continued-fraction pipeline produces is checked against the
matrices assembled here.  Truncation uses zero boundary values: couplings
that leave the index window (or the ball of modes) are dropped.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import FlowParams, Orbit, Vec, beta, norm2, orbit_key

MAX_HALF_WINDOW = 2000
NONZERO_REL = 1e-8


@dataclass
class TruncatedOperator:
    kind: str  # "L", "M" or "L2D"
    matrix: np.ndarray
    n_lo: int = 0
    n_hi: int = 0
    scale: complex | float = 1.0
    modes: list[Vec] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return (self.n_hi - self.n_lo) // 2

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def to_csv(self) -> str:
        labels = ([f"{k[0]}:{k[1]}" for k in self.modes] if self.modes is not None
                  else [str(n) for n in range(self.n_lo, self.n_hi + 1)])
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["n"] + labels)
        for lab, row in zip(labels, self.matrix):
            wr.writerow([lab] + [repr(float(v)) for v in np.real(row)])
        return buf.getvalue()


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    max_real_part: float
    band_radius: float
    symmetry_defect: float

    def to_dict(self) -> dict:
        ev = np.asarray(self.eigenvalues)
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
            "max_real_part": self.max_real_part,
            "band_radius": self.band_radius,
            "symmetry_defect": self.symmetry_defect,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SpectrumReport":
        ev = np.array([complex(a, b) for a, b in d["eigenvalues"]])
        return cls(ev, d["max_real_part"], d["band_radius"], d["symmetry_defect"])


def _window(N: int | None, n_lo: int | None, n_hi: int | None) -> tuple[int, int]:
    if n_lo is None or n_hi is None:
        if N is None or N < 1:
            raise ValueError(f"half-window N must be >= 1, got {N}")
        n_lo, n_hi = -N, N
    if n_hi < n_lo:
        raise ValueError(f"empty window [{n_lo}, {n_hi}]")
    return n_lo, n_hi


def _two_diagonal(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    m = lower.size + 1
    out = np.zeros((m, m), dtype=np.result_type(lower, upper))
    idx = np.arange(m - 1)
    out[idx + 1, idx] = lower
    out[idx, idx + 1] = upper
    return out


def assemble_L(orbit: Orbit, N: int | None = None, normalized: bool = True,
               n_lo: int | None = None, n_hi: int | None = None) -> TruncatedOperator:
    """Rows ``(L w)_n = rho_{n-1} w_{n-1} - rho_{n+1} w_{n+1}`` on ``[n_lo, n_hi]``.

    With ``normalized=False`` the matrix is multiplied by the signed constant ``c``.
    """
    n_lo, n_hi = _window(N, n_lo, n_hi)
    rho = orbit.rho_array(n_lo, n_hi)
    mat = _two_diagonal(rho[:-1], -rho[1:])
    scale = 1.0 if normalized else orbit.c
    if not normalized:
        mat = scale * mat
    return TruncatedOperator("L", mat, n_lo, n_hi, scale, meta={"orbit": orbit.to_dict()})


def assemble_M(orbit: Orbit, N: int | None = None, n_lo: int | None = None,
               n_hi: int | None = None) -> TruncatedOperator:
    """Real form of the similar operator built from ``delta_n = sqrt(rho_n)``.

    With ``d = sqrt|rho|`` and ``s = sign(rho)`` the truncated ``L`` factors as
    ``A B`` with ``A = (S - S*) diag(s d)`` and ``B = diag(d)``; this returns
    ``B A``, so the two truncations share their nonzero eigenvalues exactly.
    The matrix is skew except across entries where ``rho`` is negative.
    """
    n_lo, n_hi = _window(N, n_lo, n_hi)
    rho = orbit.rho_array(n_lo, n_hi)
    d = np.sqrt(np.abs(rho))
    sd = np.sign(rho) * d
    mat = _two_diagonal(d[1:] * sd[:-1], -d[:-1] * sd[1:])
    return TruncatedOperator("M", mat, n_lo, n_hi, 1.0, meta={"orbit": orbit.to_dict()})


def apply_L(orbit: Orbit, w: np.ndarray, n_lo: int) -> np.ndarray:
    """Matrix-free ``L w`` for ``w`` indexed from ``n_lo``; zero outside the window."""
    w = np.asarray(w)
    rho = orbit.rho_array(n_lo, n_lo + w.size - 1)
    z = rho * w
    out = np.zeros_like(z)
    out[1:] += z[:-1]
    out[:-1] -= z[1:]
    return out


def residual(lam: float, w: np.ndarray, orbit: Orbit, n_lo: int) -> float:
    """Relative residual ``|L w - lam w| / |w|`` over interior rows only."""
    w = np.asarray(w, dtype=float)
    nrm = np.linalg.norm(w)
    if nrm == 0:
        raise ValueError("residual of the zero vector is undefined")
    r = apply_L(orbit, w, n_lo) - lam * w
    return float(np.linalg.norm(r[1:-1]) / nrm)


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size == 0 or b.size == 0:
        return math.inf
    dist = np.abs(a[:, None] - b[None, :])
    return float(max(dist.min(axis=1).max(), dist.min(axis=0).max()))


def symmetry_defect(eigs: np.ndarray, scale: float = 1.0) -> float:
    """Hausdorff distance from the nonzero eigenvalues to their reflections."""
    eigs = np.asarray(eigs, dtype=complex)
    nz = eigs[np.abs(eigs) > NONZERO_REL * max(scale, 1e-300)]
    return max(_hausdorff(nz, -nz), _hausdorff(nz, nz.conj()))


def essential_band(orbit: Orbit, normalized: bool = False) -> float:
    """Radius of the essential-spectrum segment on the imaginary axis."""
    return 2.0 if normalized else 2.0 * orbit.norm_c


def dense_spectrum(op: TruncatedOperator) -> SpectrumReport:
    """All eigenvalues of a truncation (LAPACK ``geev`` via numpy)."""
    if op.kind != "L2D" and op.N > MAX_HALF_WINDOW:
        raise ValueError(f"N={op.N} exceeds the dense-solve limit {MAX_HALF_WINDOW}")
    try:
        eigs = np.linalg.eigvals(op.matrix)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"eigensolver failed: {exc}") from exc
    mag = float(np.max(np.abs(op.matrix))) if op.matrix.size else 0.0
    band = math.nan if op.kind == "L2D" else 2.0 * abs(op.scale)
    return SpectrumReport(eigs, float(np.max(eigs.real)), band, symmetry_defect(eigs, mag))


def max_real_eig(orbit: Orbit, N: int = 200) -> float:
    return dense_spectrum(assemble_L(orbit, N)).max_real_part


def nonzero_spectrum_distance(a: TruncatedOperator, b: TruncatedOperator) -> float:
    ea, eb = np.linalg.eigvals(a.matrix), np.linalg.eigvals(b.matrix)
    mag = max(float(np.max(np.abs(a.matrix))), float(np.max(np.abs(b.matrix))))
    cut = NONZERO_REL * mag
    return _hausdorff(ea[np.abs(ea) > cut], eb[np.abs(eb) > cut])


def j_conjugation_check(orbit: Orbit, N: int = 50) -> float:
    """``max |J L J + L|`` with ``J = diag((-1)^n)``; vanishes exactly."""
    L = assemble_L(orbit, N).matrix
    j = np.array([(-1.0) ** (n % 2) for n in range(-N, N + 1)])
    return float(np.max(np.abs(j[:, None] * L * j[None, :] + L)))


def propagate(orbit: Orbit, w0: np.ndarray, t_final: float, dt: float,
              kind: str = "L", n_lo: int | None = None) -> tuple[float, np.ndarray]:
    """RK4 for ``w' = A w`` on the window of ``w0``; returns (growth rate, log norms).

    The state is renormalized after every step and the log factors are
    accumulated, so long runs cannot overflow.  The growth rate is the
    least-squares slope of ``log |w(t)|``.
    """
    w = np.asarray(w0, dtype=float).copy()
    if n_lo is None:
        if w.size % 2 == 0:
            raise ValueError("symmetric window needs an odd length; pass n_lo")
        n_lo = -(w.size // 2)
    if not (dt > 0 and t_final >= 10 * dt):
        raise ValueError("need dt > 0 and t_final >= 10 dt")
    n_hi = n_lo + w.size - 1
    if kind == "L":
        A = assemble_L(orbit, n_lo=n_lo, n_hi=n_hi).matrix
    elif kind == "M":
        A = assemble_M(orbit, n_lo=n_lo, n_hi=n_hi).matrix
    else:
        raise ValueError(f"unknown operator kind {kind!r}")
    steps = int(round(t_final / dt))
    log_norm = np.empty(steps + 1)
    nrm = np.linalg.norm(w)
    if nrm == 0:
        raise ValueError("zero initial data")
    acc = math.log(nrm)
    w /= nrm
    log_norm[0] = acc
    for i in range(1, steps + 1):
        k1 = A @ w
        k2 = A @ (w + 0.5 * dt * k1)
        k3 = A @ (w + 0.5 * dt * k2)
        k4 = A @ (w + dt * k3)
        w = w + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        nrm = np.linalg.norm(w)
        if not math.isfinite(nrm) or nrm == 0:
            raise ArithmeticError(f"propagation broke down at step {i}")
        acc += math.log(nrm)
        w /= nrm
        log_norm[i] = acc
    t = dt * np.arange(steps + 1)
    slope = float(np.polyfit(t, log_norm, 1)[0])
    return slope, log_norm


# -- full 2D linearization -------------------------------------------------

def ball_modes(R: float) -> list[Vec]:
    """Nonzero lattice points with ``|k| <= R``, lexicographic by (k1, k2)."""
    r = int(math.floor(R))
    r2 = R * R
    return [(a, b) for a in range(-r, r + 1) for b in range(-r, r + 1)
            if (a, b) != (0, 0) and a * a + b * b <= r2 + 1e-9]


def assemble_L2D(params: FlowParams, R: float) -> TruncatedOperator:
    """Linearization about the bar state on the modes ``0 < |k| <= R``.

    Row ``k`` couples to ``k - p`` with ``beta(p, k-p) Gamma`` and to ``k + p``
    with ``-beta(p, k+p) conj(Gamma)``.
    """
    p = params.p
    if R < math.sqrt(params.p_norm2) + 2:
        raise ValueError(f"R={R} is below |p| + 2")
    modes = ball_modes(R)
    index = {k: i for i, k in enumerate(modes)}
    g = params.gamma_amp
    gc = g.conjugate() if isinstance(g, complex) else g
    cplx = isinstance(g, complex) and g.imag != 0
    mat = np.zeros((len(modes), len(modes)), dtype=complex if cplx else float)
    for i, k in enumerate(modes):
        km = (k[0] - p[0], k[1] - p[1])
        kp = (k[0] + p[0], k[1] + p[1])
        j = index.get(km)
        if j is not None:
            mat[i, j] = beta(p, km, params.alpha) * g
        j = index.get(kp)
        if j is not None:
            mat[i, j] = -beta(p, kp, params.alpha) * gc
    return TruncatedOperator("L2D", mat, 0, len(modes) - 1, 1.0, modes,
                             meta={"p": list(p), "alpha": params.alpha, "R": R})


def orbit_blocks(op: TruncatedOperator, p: Vec) -> dict[Vec, list[int]]:
    """Row indices of a 2D truncation grouped by orbit, each ordered along the orbit."""
    blocks: dict[Vec, list[int]] = {}
    for i, k in enumerate(op.modes):
        blocks.setdefault(orbit_key(p, k), []).append(i)
    pn = norm2(p)
    for key, idx in blocks.items():
        idx.sort(key=lambda i: (op.modes[i][0] * p[0] + op.modes[i][1] * p[1]) / pn)
    return blocks


def block_permutation(op: TruncatedOperator, p: Vec) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Permutation that groups modes by orbit, and the resulting block ranges."""
    perm, ranges = [], []
    blocks = orbit_blocks(op, p)
    for key in sorted(blocks):
        start = len(perm)
        perm.extend(blocks[key])
        ranges.append((start, len(perm)))
    return np.array(perm, dtype=int), ranges


def off_block_max(op: TruncatedOperator, p: Vec) -> float:
    """Largest entry outside the orbit blocks after permutation (zero expected)."""
    perm, ranges = block_permutation(op, p)
    A = op.matrix[np.ix_(perm, perm)]
    mask = np.ones(A.shape, dtype=bool)
    for a, b in ranges:
        mask[a:b, a:b] = False
    return float(np.max(np.abs(A[mask]))) if mask.any() else 0.0


def orbit_window_in_ball(orbit: Orbit, R: float) -> tuple[int, int] | None:
    """Contiguous index range of the orbit inside ``|k| <= R`` (None if empty)."""
    r2 = R * R + 1e-9
    t = round(orbit.vertex)
    ns = [n for n in range(t - int(2 * R) - 2, t + int(2 * R) + 3)
          if norm2(orbit.point(n)) <= r2]
    return (min(ns), max(ns)) if ns else None
