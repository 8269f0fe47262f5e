import json

import numpy as np
import pytest

from alphastab import dispersion as disp
from alphastab import oracle
from alphastab.lattice import FlowParams, OrbitClass, make_orbit

from conftest import TYPE_ONE_CASES, orbit_of


def _pair(p, q, a=0.0):
    o = orbit_of(p, q, a)
    lam = disp.find_root(o)
    return o, lam, disp.build_eigenvector(lam, o)


# -- dispersion function -----------------------------------------------------

def test_small_lambda_limits():
    i0 = orbit_of((3, 1), (-1, 2))
    ip = orbit_of((3, 1), (0, -2))
    im = orbit_of((3, 1), (2, -2))
    assert disp.dispersion_bracket(1e-6, i0, 1e-6, strict=False).value == pytest.approx(2, abs=1e-3)
    assert disp.dispersion_bracket(1e-6, ip, 1e-6, strict=False).value == pytest.approx(1, abs=1e-3)
    assert disp.dispersion_bracket(1e-6, im, 1e-6, strict=False).value == pytest.approx(1, abs=1e-3)


@pytest.mark.parametrize("p,q", TYPE_ONE_CASES)
def test_large_lambda_negative(p, q):
    assert disp.dispersion_value(1e3, orbit_of(p, q)) < 0


def test_dispersion_is_sum_of_pieces():
    from alphastab.contfrac import f_of_lambda, g_of_lambda
    o = orbit_of((3, 1), (-1, 2), 0.5)
    lam = 0.9
    expected = lam / o.rho(0) + f_of_lambda(lam, o).value + g_of_lambda(lam, o).value
    assert disp.dispersion_value(lam, o) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("p,q", [((3, 1), (-2, 3)), ((3, 1), (-1, 1))])
def test_wrong_class_rejected(p, q):
    o = orbit_of(p, q)
    with pytest.raises(disp.OrbitClassError):
        disp.dispersion_value(1.0, o)
    with pytest.raises(disp.OrbitClassError):
        disp.find_root(o)


def test_nonpositive_lambda_rejected():
    with pytest.raises(ValueError):
        disp.dispersion_value(0.0, orbit_of((3, 1), (-1, 2)))


# -- roots -------------------------------------------------------------------

@pytest.mark.parametrize("p,q", TYPE_ONE_CASES)
def test_root_matches_dense_truncation(p, q, alpha):
    o = orbit_of(p, q, alpha)
    lam = disp.find_root(o)
    assert lam > 0
    assert abs(lam - oracle.max_real_eig(o, 200)) <= 1e-6


@pytest.mark.parametrize("p,q", TYPE_ONE_CASES[:4])
def test_root_certificate(p, q):
    o = orbit_of(p, q)
    tol = 1e-12
    lam, lo, hi = disp.find_root_bracket(o, tol)
    assert lo <= lam <= hi and hi - lo <= tol
    assert disp.dispersion_bracket(lam - 10 * tol, o, 1e-15).lower > 0
    assert disp.dispersion_bracket(lam + 10 * tol, o, 1e-15).upper < 0
    assert abs(disp.dispersion_value(lam, o, 1e-14)) <= tol


def test_scan_finds_the_root():
    o = orbit_of((3, 1), (-1, 2))
    roots = disp.scan_roots(o)
    assert len(roots) == 1
    assert roots[0] == pytest.approx(disp.find_root(o), abs=1e-10)


def test_alpha_keeps_instability():
    for q in [(-1, 2), (0, -2)]:
        o0, o1 = orbit_of((3, 1), q, 0.0), orbit_of((3, 1), q, 1.0)
        assert o0.klass is o1.klass
        assert disp.find_root(o1) > 0


def test_scaling_by_c():
    o = orbit_of((3, 1), (-1, 2), 0.5, gamma=1.7)
    lam = disp.find_root(o)
    eig = oracle.dense_spectrum(oracle.assemble_L(o, 200, normalized=False)).eigenvalues
    assert np.min(np.abs(eig - o.c * lam)) <= 1e-10
    assert np.max(eig.real) == pytest.approx(abs(o.c) * lam, abs=1e-10)


# -- eigenvectors ------------------------------------------------------------

@pytest.mark.parametrize("p,q", TYPE_ONE_CASES)
def test_eigenvector_properties(p, q, alpha):
    o, lam, pair = _pair(p, q, alpha)
    assert pair.residual <= 1e-8
    assert disp.verify_sign_pattern(pair)
    assert pair.decay_rate < 1
    assert pair.decay_r2 >= 0.999
    assert pair.at(1) > 0 and np.max(np.abs(pair.w)) == pytest.approx(1.0)
    n = pair.n
    bound = pair.decay_const * pair.decay_rate ** np.abs(n)
    assert np.all(np.abs(pair.w) <= bound * (1 + 1e-9))
    # edges resolved below the cutoff after auto-extension
    assert max(abs(pair.w[0]), abs(pair.w[-1])) < disp.TAIL_CUTOFF


@pytest.mark.parametrize("p,q", TYPE_ONE_CASES)
def test_recurrence_on_z(p, q):
    o, lam, pair = _pair(p, q)
    z = pair.z
    for i in range(1, z.size - 1):
        n = pair.n_lo + i
        r = o.rho(n)
        if r == 0:
            continue
        lhs, rhs = z[i - 1] - z[i + 1], lam / r * z[i]
        scale = max(abs(z[i - 1]), abs(z[i + 1]), abs(rhs))
        if scale > 1e-280:
            assert abs(lhs - rhs) <= 1e-9 * scale


def test_glue_identity():
    from alphastab.contfrac import g_of_lambda, u1
    o, lam, pair = _pair((3, 1), (-1, 2))
    assert abs(u1(0, lam, o).value + g_of_lambda(lam, o).value) <= 1e-11
    assert pair.meta["glue_defect"] <= 1e-11


def test_w_equals_z_over_rho():
    o, lam, pair = _pair((3, 1), (0, -2))
    rho = o.rho_array(pair.n_lo, pair.n_hi)
    mask = rho != 0
    scale = pair.w[pair.n_lo * -1 + 1]
    np.testing.assert_allclose(pair.w[mask], pair.z[mask] / rho[mask], rtol=1e-13, atol=0)
    assert scale == pytest.approx(pair.z[-pair.n_lo] / lam, rel=1e-13)


def test_class_specific_zeros():
    _, _, plus = _pair((3, 1), (0, -2))
    assert np.all(plus.w[plus.n > 1] == 0) and plus.at(1) > 0
    _, _, minus = _pair((3, 1), (2, -2))
    assert np.all(minus.w[minus.n < -1] == 0) and minus.at(-1) < 0


def test_inconsistent_root_detected():
    o = orbit_of((3, 1), (-1, 2))
    lam = disp.find_root(o)
    with pytest.raises(disp.InconsistentRootError):
        disp.build_eigenvector(lam + 1e-3, o)


def test_sign_pattern_rejections():
    _, _, pair = _pair((3, 1), (-1, 2))
    bad = disp.Eigenpair(**{**pair.__dict__, "w": pair.w.copy()})
    i0 = -pair.n_lo
    bad.w[i0] = abs(bad.w[i0])
    bad.w[i0 - 1] = abs(bad.w[i0 - 1])
    assert not disp.verify_sign_pattern(bad)
    zero = disp.Eigenpair(**{**pair.__dict__, "w": np.zeros_like(pair.w)})
    assert not disp.verify_sign_pattern(zero)
    flipped = disp.Eigenpair(**{**pair.__dict__, "w": -pair.w})
    assert disp.verify_sign_pattern(flipped)


def test_eigenpair_json():
    _, lam, pair = _pair((2, 0), (0, 1))
    d = json.loads(json.dumps(pair.to_dict()))
    assert set(d) == {"lambda", "class", "window", "w", "residual", "decay_rate"}
    assert d["lambda"] == lam and d["class"] == "I0"
    assert d["window"] == [pair.n_lo, pair.n_hi] and len(d["w"]) == pair.w.size
    assert d == json.loads(json.dumps(d))


def test_slow_decay_triggers_extension():
    o, lam, pair = _pair((3, 1), (2, -2))
    assert pair.n_hi > disp.N_DEFAULT


def test_fit_decay_on_exact_geometric():
    n = np.arange(-30, 31)
    w = 3.0 * 0.5 ** np.abs(n) * np.where(n < 0, (-1.0) ** n, 1.0)
    C, q, r2 = disp.fit_decay(n, w)
    assert q == pytest.approx(0.5, rel=1e-12) and C == pytest.approx(3.0, rel=1e-10)
    assert r2 == pytest.approx(1.0, abs=1e-12)
