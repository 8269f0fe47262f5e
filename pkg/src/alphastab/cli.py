"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 orbit of the wrong class,
4 numerical failure, 5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dispersion, fields, oracle
from .contfrac import ContinuedFractionError
from .lattice import (FlowParams, OrbitClass, ParallelOrbitError, enumerate_type_one,
                      find_typeI, make_orbit, norm2, orbit_representatives)

EXIT_OK, EXIT_USAGE, EXIT_CLASS, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    p: tuple[int, int] | None = None
    alpha: float = 0.0
    gamma_amp: float = 1.0
    q: tuple[int, int] | None = None
    N: int = dispersion.N_DEFAULT
    R: float | None = None
    tol: float = 1e-12
    output_path: str | None = None
    format: str = "json"
    workers: int = 1
    seed: int = 0
    radius: float | None = None
    kind: str = "L"
    pmin: float = 0.0
    pmax: float = 6.0
    alphas: list[float] = field(default_factory=lambda: [0.0])

    def validate(self):
        if self.p is not None and self.p == (0, 0):
            raise UsageError("p must be a nonzero integer vector")
        if not self.tol > 0:
            raise UsageError("--tol must be positive")
        if self.N < 2:
            raise UsageError("--N must be at least 2")
        if self.alpha < 0 or any(a < 0 for a in self.alphas):
            raise UsageError("alpha must be nonnegative")
        if self.format not in ("json", "csv"):
            raise UsageError("--format must be json or csv")
        if self.workers < 1:
            raise UsageError("--workers must be positive")

    @property
    def params(self) -> FlowParams:
        return FlowParams(self.p, self.alpha, self.gamma_amp)


def _emit(cfg: RunConfig, payload: dict, rows: list[list], header: list[str]):
    if cfg.format == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(header)
        wr.writerows(rows)
        text = buf.getvalue()
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(x: float) -> str:
    return repr(float(x))


# -- classify ----------------------------------------------------------------

def cmd_classify(cfg: RunConfig) -> int:
    params = cfg.params
    radius = cfg.radius if cfg.radius is not None else 2 * math.sqrt(params.p_norm2)
    rows, items = [], []
    for o in orbit_representatives(params, radius):
        r = [o.rho(-1), o.rho(0), o.rho(1)]
        rows.append([o.q_hat[0], o.q_hat[1], o.klass.value] + [_fmt(v) for v in r] + [_fmt(o.norm_c)])
        d = o.to_dict()
        d.update({"rho_-1": r[0], "rho_0": r[1], "rho_1": r[2]})
        items.append(d)
    header = ["q1", "q2", "class", "rho_m1", "rho_0", "rho_p1", "norm_c"]
    _emit(cfg, {"p": list(params.p), "alpha": params.alpha, "radius": radius, "orbits": items},
          rows, header)
    return EXIT_OK


# -- solve -------------------------------------------------------------------

def cmd_solve(cfg: RunConfig) -> int:
    params = cfg.params
    q = cfg.q
    if q is None:
        q = find_typeI(params)
        if q is None:
            print(f"no type-I orbit exists for p={params.p}", file=sys.stderr)
            return EXIT_CLASS
    try:
        orbit = make_orbit(params, q)
    except ParallelOrbitError as exc:
        raise UsageError(str(exc)) from exc
    if not orbit.klass.is_type_one:
        print(f"orbit of q={q} (q_hat={orbit.q_hat}) is of type {orbit.klass.value}",
              file=sys.stderr)
        return EXIT_CLASS
    try:
        lam, lo, hi = dispersion.find_root_bracket(orbit, cfg.tol)
        pair = dispersion.build_eigenvector(lam, orbit, cfg.N, cfg.tol)
    except (dispersion.BracketError, dispersion.InconsistentRootError,
            ContinuedFractionError) as exc:
        print(f"numerical failure for q_hat={orbit.q_hat}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    print(f"q_hat={orbit.q_hat} class={orbit.klass.value} lambda*={lam!r} "
          f"c*lambda*={orbit.c * lam!r} residual={pair.residual:.3e} "
          f"decay_rate={pair.decay_rate:.6f}", file=sys.stderr)
    payload = pair.to_dict()
    payload.update({"orbit": orbit.to_dict(), "bracket": [lo, hi],
                    "physical_lambda": float(np.real(orbit.c * lam))})
    rows = [[n, _fmt(w)] for n, w in zip(pair.n.tolist(), pair.w)]
    _emit(cfg, payload, rows, ["n", "w"])
    return EXIT_OK


# -- verify ------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    limit: float

    @property
    def ok(self) -> bool:
        return bool(self.value <= self.limit)


def verify_flow(params: FlowParams, N: int = 200, R: float | None = None,
                tol: float = 1e-12, seed: int = 0) -> list[Check]:
    """Cross-pipeline checks for every type-I orbit of ``params`` and a few type-0 orbits."""
    checks = []
    for q in enumerate_type_one(params):
        o = make_orbit(params, q)
        tag = f"{o.klass.value}{list(o.q_hat)}"
        lam = dispersion.find_root(o, tol)
        pair = dispersion.build_eigenvector(lam, o, N, tol)
        spec = oracle.dense_spectrum(oracle.assemble_L(o, N))
        checks += [
            Check(f"dispersion_vs_dense {tag}", abs(lam - spec.max_real_part), 1e-6),
            Check(f"residual {tag}", pair.residual, 1e-8),
            Check(f"sign_pattern {tag}", 0.0 if dispersion.verify_sign_pattern(pair) else 1.0, 0.0),
            Check(f"decay_rate {tag}", pair.decay_rate, 1.0 - 1e-12),
            Check(f"decay_fit_r2_gap {tag}", 1.0 - pair.decay_r2, 1e-3),
            Check(f"symmetry_defect {tag}", spec.symmetry_defect, 1e-8),
            Check(f"j_conjugation {tag}", oracle.j_conjugation_check(o, 50), 0.0),
        ]
        n0 = min(pair.n_hi, 200)
        w0 = pair.w[pair.n_hi - n0: pair.n_hi + n0 + 1]
        dt = 0.01 / max(1.0, lam)
        rate, _ = oracle.propagate(o, w0, 5.0 / lam, dt)
        checks.append(Check(f"propagation_rel {tag}", abs(rate - lam) / lam, 1e-2))
    zeros = [o for o in orbit_representatives(params, 2 * math.sqrt(params.p_norm2))
             if o.klass is OrbitClass.TYPE0][:3]
    rng = np.random.default_rng(seed)
    for o in zeros:
        tag = f"0{list(o.q_hat)}"
        ev = oracle.dense_spectrum(oracle.assemble_M(o, 100))
        checks.append(Check(f"type0_real_part {tag}", abs(ev.max_real_part), 1e-9))
        rate, _ = oracle.propagate(o, rng.standard_normal(201), 5.0, 0.01, kind="M")
        checks.append(Check(f"type0_growth {tag}", abs(rate), 1e-3))
    r = R if R is not None else max(6.0, math.sqrt(params.p_norm2) + 2)
    checks.append(Check("steady_state_rhs",
                        max((abs(v) for v in fields.nonlinear_rhs(
                            fields.steady_state(params, r), params.alpha).modes.values()),
                            default=0.0), 1e-14))
    checks.append(Check("linearization", fields.linearization_check(params, r, 1e-5, 10, seed), 1e-9))
    return checks


def cmd_verify(cfg: RunConfig) -> int:
    try:
        checks = verify_flow(cfg.params, cfg.N, cfg.R, cfg.tol, cfg.seed)
    except (dispersion.BracketError, dispersion.InconsistentRootError,
            ContinuedFractionError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    rows = [[c.name, _fmt(c.value), _fmt(c.limit), "pass" if c.ok else "FAIL"] for c in checks]
    payload = {"p": list(cfg.p), "alpha": cfg.alpha, "seed": cfg.seed,
               "checks": [{"name": c.name, "value": c.value, "limit": c.limit, "pass": c.ok}
                          for c in checks]}
    _emit(cfg, payload, rows, ["check", "value", "limit", "status"])
    failed = [c for c in checks if not c.ok]
    if failed:
        print(f"verification failed: {failed[0].name} ({failed[0].value!r} > {failed[0].limit!r})",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# -- sweep -------------------------------------------------------------------

SWEEP_HEADER = ["p1", "p2", "alpha", "q1", "q2", "class", "lambda_star", "residual"]


def _sweep_row(job) -> tuple[list, bool]:
    p, alpha, gamma, tol = job
    params = FlowParams(p, alpha, gamma)
    q = find_typeI(params)
    if q is None:
        return [p[0], p[1], alpha, "", "", "none", "nan", "nan"], False
    o = make_orbit(params, q)
    try:
        lam = dispersion.find_root(o, tol)
        pair = dispersion.build_eigenvector(lam, o, dispersion.N_DEFAULT, tol)
    except (dispersion.BracketError, dispersion.InconsistentRootError,
            ContinuedFractionError) as exc:
        return [p[0], p[1], alpha, q[0], q[1], o.klass.value, "nan", f"error: {exc}"], False
    return [p[0], p[1], alpha, q[0], q[1], o.klass.value, _fmt(lam), _fmt(pair.residual)], True


def sweep_vectors(cfg: RunConfig) -> list[tuple[int, int]]:
    if cfg.p is not None:
        return [cfg.p]
    r = int(math.floor(cfg.pmax))
    out = [(a, b) for a in range(-r, r + 1) for b in range(-r, r + 1)
           if (a, b) != (0, 0) and cfg.pmin ** 2 <= a * a + b * b <= cfg.pmax ** 2 + 1e-9]
    return sorted(out, key=lambda v: (norm2(v), v))


def cmd_sweep(cfg: RunConfig) -> int:
    jobs = [(p, a, cfg.gamma_amp, cfg.tol) for p in sweep_vectors(cfg) for a in cfg.alphas]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            results = list(pool.map(_sweep_row, jobs))
    else:
        results = [_sweep_row(j) for j in jobs]
    rows = [r for r, _ in results]
    _emit(cfg, {"rows": [dict(zip(SWEEP_HEADER, r)) for r in rows]}, rows, SWEEP_HEADER)
    if jobs and not any(ok for _, ok in results):
        return EXIT_NUMERIC
    return EXIT_OK


# -- spectrum ----------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> int:
    params = cfg.params
    q = cfg.q if cfg.q is not None else find_typeI(params)
    if q is None:
        raise UsageError("--q is required when p has no type-I orbit")
    try:
        orbit = make_orbit(params, q)
    except ParallelOrbitError as exc:
        raise UsageError(str(exc)) from exc
    if cfg.kind == "M":
        op = oracle.assemble_M(orbit, cfg.N)
        op.matrix = orbit.c * op.matrix
        op.scale = orbit.c
    else:
        op = oracle.assemble_L(orbit, cfg.N, normalized=False)
    rep = oracle.dense_spectrum(op)
    band = oracle.essential_band(orbit)
    payload = rep.to_dict()
    payload.update({"orbit": orbit.to_dict(), "N": cfg.N, "kind": cfg.kind, "band_radius": band})
    rows = [[_fmt(z.real), _fmt(z.imag), _fmt(band)] for z in rep.eigenvalues]
    _emit(cfg, payload, rows, ["re", "im", "band_radius"])
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

def _alpha_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad alpha list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="alphastab",
                                 description="Linear instability of bar states of the 2D alpha-Euler equations.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=0.0)
    common.add_argument("--gamma", type=float, default=1.0, dest="gamma_amp")
    common.add_argument("--N", type=int, default=dispersion.N_DEFAULT)
    common.add_argument("--R", type=float, default=None)
    common.add_argument("--tol", type=float, default=1e-12)
    common.add_argument("--out", default=None, dest="output_path")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--seed", type=int, default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_, need_p=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.add_argument("--p", type=int, nargs=2, required=need_p, metavar=("P1", "P2"))
        sp.add_argument("--q", type=int, nargs=2, default=None, metavar=("Q1", "Q2"))
        return sp

    c = add("classify", "list orbit representatives and their classes")
    c.add_argument("--radius", type=float, default=None)
    add("solve", "solve the dispersion equation and build the eigenvector")
    add("verify", "run cross-checks for one wave vector")
    s = add("sweep", "lambda* over a range of p and alpha", need_p=False)
    s.add_argument("--pmin", type=float, default=0.0)
    s.add_argument("--pmax", type=float, default=6.0)
    s.add_argument("--alphas", type=_alpha_list, default=None)
    sp = add("spectrum", "dense truncation spectrum and band radius")
    sp.add_argument("--kind", choices=["L", "M"], default="L")
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    alphas = getattr(ns, "alphas", None)
    return RunConfig(
        command=ns.command,
        p=tuple(ns.p) if ns.p is not None else None,
        alpha=ns.alpha,
        gamma_amp=ns.gamma_amp,
        q=tuple(ns.q) if ns.q is not None else None,
        N=ns.N,
        R=ns.R,
        tol=ns.tol,
        output_path=ns.output_path,
        format=ns.format,
        workers=ns.workers,
        seed=ns.seed,
        radius=getattr(ns, "radius", None),
        kind=getattr(ns, "kind", "L"),
        pmin=getattr(ns, "pmin", 0.0),
        pmax=getattr(ns, "pmax", 6.0),
        alphas=alphas if alphas is not None else [ns.alpha],
    )


COMMANDS = {
    "classify": cmd_classify,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "spectrum": cmd_spectrum,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    cfg = config_from_args(ns)
    try:
        cfg.validate()
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
