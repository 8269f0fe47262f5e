"""Fourier-mode vorticity fields and the quadratic right-hand side.

Modes are stored for ``0 < |k| <= R``.  The convolution is Galerkin
truncated: only pairs with both factors stored contribute.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lattice import FlowParams, Vec, beta, norm2, weight
from .oracle import ball_modes


@dataclass
class VorticityField:
    modes: dict[Vec, complex]
    R: float
    real: bool = True

    def __post_init__(self):
        clean = {}
        for k, v in self.modes.items():
            k = (int(k[0]), int(k[1]))
            if k == (0, 0):
                raise ValueError("the zero mode is excluded (zero-mean vorticity)")
            if norm2(k) > self.R * self.R + 1e-9:
                raise ValueError(f"mode {k} lies outside the ball of radius {self.R}")
            clean[k] = complex(v)
        if self.real:
            for k, v in list(clean.items()):
                mk = (-k[0], -k[1])
                if mk not in clean:
                    clean[mk] = v.conjugate()
                elif abs(clean[mk] - v.conjugate()) > 1e-12 * max(1.0, abs(v)):
                    raise ValueError(f"reality condition fails at {k}")
        self.modes = clean

    def get(self, k: Vec) -> complex:
        return self.modes.get(k, 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 for v in self.modes.values()))

    def to_vector(self, order: list[Vec]) -> np.ndarray:
        return np.array([self.get(k) for k in order])

    @classmethod
    def from_vector(cls, order: list[Vec], values, R: float, real: bool = False):
        return cls({k: v for k, v in zip(order, values) if v != 0}, R, real)

    def to_dict(self) -> dict:
        items = sorted(self.modes.items())
        return {"R": self.R, "real": self.real,
                "modes": [{"k": list(k), "re": v.real, "im": v.imag} for k, v in items]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "VorticityField":
        d = json.loads(text)
        modes = {tuple(m["k"]): complex(m["re"], m["im"]) for m in d["modes"]}
        return cls(modes, d["R"], False if not d.get("real", True) else True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["k1", "k2", "re", "im"])
        for k, v in sorted(self.modes.items()):
            wr.writerow([k[0], k[1], repr(v.real), repr(v.imag)])
        return buf.getvalue()


def steady_state(params: FlowParams, R: float) -> VorticityField:
    """Bar state: ``omega_p = Gamma/2`` and ``omega_{-p} = conj(Gamma)/2``."""
    if params.p_norm2 > R * R + 1e-9:
        raise ValueError(f"radius {R} is smaller than |p| = {math.sqrt(params.p_norm2)}")
    g = complex(params.gamma_amp)
    p = params.p
    return VorticityField({p: g / 2, (-p[0], -p[1]): g.conjugate() / 2}, R)


def stream_coeffs(fld: VorticityField, alpha: float) -> dict[Vec, complex]:
    return {k: v / weight(norm2(k), alpha) for k, v in fld.modes.items()}


def _beta_pairs(a: np.ndarray, b: np.ndarray, alpha: float) -> np.ndarray:
    """Elementwise ``beta(a[..., :], b[..., :])``; zero where either argument vanishes."""
    a = a.astype(float)
    b = b.astype(float)
    na = np.sum(a * a, axis=-1)
    nb = np.sum(b * b, axis=-1)
    with np.errstate(divide="ignore"):
        ia = np.where(na > 0, 1.0 / (na * (1 + alpha * alpha * na)), 0.0)
        ib = np.where(nb > 0, 1.0 / (nb * (1 + alpha * alpha * nb)), 0.0)
    wedge = a[..., 0] * b[..., 1] - b[..., 0] * a[..., 1]
    out = 0.5 * (ib - ia) * wedge
    out[(na == 0) | (nb == 0)] = 0.0
    return out


def nonlinear_rhs(fld: VorticityField, alpha: float) -> VorticityField:
    """``d omega_k/dt = sum_q beta(k-q, q) omega_{k-q} omega_q`` over stored pairs."""
    order = sorted(fld.modes)
    if not order:
        return VorticityField({}, fld.R, fld.real)
    K = np.array(order)
    vals = np.array([fld.modes[k] for k in order])
    out_modes = ball_modes(fld.R)
    Kout = np.array(out_modes)
    index = {k: i for i, k in enumerate(order)}
    diff = Kout[:, None, :] - K[None, :, :]
    flat = diff.reshape(-1, 2)
    j = np.array([index.get((int(a), int(b)), -1) for a, b in flat]).reshape(diff.shape[:2])
    present = j >= 0
    omega_diff = np.where(present, vals[np.where(present, j, 0)], 0)
    B = _beta_pairs(diff, np.broadcast_to(K[None, :, :], diff.shape), alpha)
    rhs = np.sum(B * omega_diff * vals[None, :], axis=1)
    return VorticityField({k: v for k, v in zip(out_modes, rhs) if v != 0}, fld.R, False)


def linearized_rhs(params: FlowParams, eta: VorticityField) -> VorticityField:
    """Analytic linearization about the bar state, Galerkin truncated to the ball of ``eta``."""
    p, a = params.p, params.alpha
    g = complex(params.gamma_amp)
    out = {}
    for k in ball_modes(eta.R):
        km = (k[0] - p[0], k[1] - p[1])
        kp = (k[0] + p[0], k[1] + p[1])
        v = beta(p, km, a) * g * eta.get(km) - beta(p, kp, a) * g.conjugate() * eta.get(kp)
        if v != 0:
            out[k] = v
    return VorticityField(out, eta.R, False)


def random_field(R: float, rng: np.random.Generator) -> VorticityField:
    """Reality-symmetric field with unit l2 norm over the ball."""
    modes = {}
    for k in ball_modes(R):
        if (-k[0], -k[1]) in modes:
            continue
        modes[k] = complex(rng.standard_normal(), rng.standard_normal())
    fld = VorticityField(modes, R)
    n = fld.norm()
    return VorticityField({k: v / n for k, v in fld.modes.items()}, R)


def _axpy(a: VorticityField, s: float, b: VorticityField) -> VorticityField:
    modes = dict(a.modes)
    for k, v in b.modes.items():
        modes[k] = modes.get(k, 0j) + s * v
    return VorticityField(modes, a.R, False)


def _rel_diff(x: VorticityField, y: VorticityField) -> float:
    keys = set(x.modes) | set(y.modes)
    num = math.sqrt(sum(abs(x.get(k) - y.get(k)) ** 2 for k in keys))
    den = max(y.norm(), x.norm(), 1e-300)
    return num / den


def linearization_check(params: FlowParams, R: float, eps: float = 1e-5,
                        trials: int = 10, seed: int = 0) -> float:
    """Max relative gap between a centered difference of the RHS and the analytic linearization."""
    if not 1e-8 <= eps <= 1e-4:
        raise ValueError("eps must lie in [1e-8, 1e-4]")
    rng = np.random.default_rng(seed)
    base = steady_state(params, R)
    worst = 0.0
    for _ in range(trials):
        eta = random_field(R, rng)
        plus = nonlinear_rhs(_axpy(base, eps, eta), params.alpha)
        minus = nonlinear_rhs(_axpy(base, -eps, eta), params.alpha)
        fd = _axpy(plus, -1.0, minus)
        fd = VorticityField({k: v / (2 * eps) for k, v in fd.modes.items()}, R, False)
        worst = max(worst, _rel_diff(fd, linearized_rhs(params, eta)))
    return worst


def pseudospectral_rhs(fld: VorticityField, alpha: float, n_grid: int = 64) -> dict[Vec, complex]:
    """Independent evaluation of ``-phi_y omega_x + phi_x omega_y`` on a periodic grid.

    Exact for stored modes as long as ``2 R < n_grid / 2`` (no aliasing).
    """
    if 2 * fld.R >= n_grid / 2:
        raise ValueError("grid too coarse for an alias-free product")
    w_hat = np.zeros((n_grid, n_grid), dtype=complex)
    for k, v in fld.modes.items():
        w_hat[k[0] % n_grid, k[1] % n_grid] = v
    freq = np.fft.fftfreq(n_grid, 1.0 / n_grid)
    k1, k2 = np.meshgrid(freq, freq, indexing="ij")
    n2 = k1 ** 2 + k2 ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = np.where(n2 > 0, w_hat / (n2 * (1 + alpha ** 2 * n2)), 0)

    def phys(h):
        return np.fft.ifft2(h) * n_grid * n_grid

    wx, wy = phys(1j * k1 * w_hat), phys(1j * k2 * w_hat)
    px, py = phys(1j * k1 * phi_hat), phys(1j * k2 * phi_hat)
    prod_hat = np.fft.fft2(-py * wx + px * wy) / (n_grid * n_grid)
    return {k: complex(prod_hat[k[0] % n_grid, k[1] % n_grid]) for k in ball_modes(fld.R)}
