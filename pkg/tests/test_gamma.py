import importlib.util
import subprocess
import sys

import mpmath as mp
import numpy as np
import pytest

from sapd import _gamma

from conftest import ROOT, log_uniform

sp = pytest.importorskip("sympy")

_spec = importlib.util.spec_from_file_location("derive_gamma", ROOT / "tools" / "derive_gamma.py")
derive_gamma = importlib.util.module_from_spec(_spec)
_spec.loader.exec_module(derive_gamma)

COEF_ARGS = ("s_own", "s_other", "g", "x_in", "x_out", "h_o", "n", "n_o")


def slice_capacity(k, w, s_own, s_other, c, g, x_in, x_out, h_o, n, n_o):
    """Capacity of a width-``w`` exclusive slice plus a unit shared slice (natural log)."""
    T = w * (c + s_own) + s_own
    return (w * mp.log(1 + k * T * g / (w * n))
            + mp.log(1 + (1 - k) * T * g / (s_other * x_in + n))
            + mp.log(1 + s_other * h_o / (x_out * (1 - k) * T + n_o)))


def random_point(rng):
    names = ("s_own", "s_other", "c", "g", "x_in", "x_out", "h_o", "n", "n_o")
    return {k: log_uniform(rng, 1e-2, 1e2) for k in names}


def test_generated_module_is_current():
    out = subprocess.run([sys.executable, str(ROOT / "tools" / "derive_gamma.py"), "--check"],
                         capture_output=True, text=True)
    assert out.returncode == 0, out.stdout + out.stderr


def test_generated_functions_match_symbolic_derivation(rng):
    gamma, offset, slope, _ = derive_gamma.derive()
    syms = derive_gamma.symbols()
    f_gamma = sp.lambdify(syms, gamma, "mpmath")
    mp.mp.dps = 30
    for _ in range(200):
        p = random_point(rng)
        args = [p[a] for a in derive_gamma.ARGS]
        ref = f_gamma(*[mp.mpf(a) for a in args])
        got = _gamma.gamma_value(**p)
        scale = _gamma.gamma_scale(**p)
        assert abs(got - float(ref)) <= 1e-13 * scale
        coef = {k: p[k] for k in COEF_ARGS}
        assert _gamma.gamma_offset(**coef) + p["c"] * _gamma.gamma_slope(**coef) == \
            pytest.approx(got, rel=1e-12, abs=1e-13 * scale)


def test_gamma_is_independent_of_slice_width():
    gamma, *_ = derive_gamma.derive()
    assert sp.Symbol("w", positive=True) not in gamma.free_symbols


def test_gamma_matches_finite_differences(rng):
    """T * Gamma / D equals dC/dk at the operating point."""
    mp.mp.dps = 40
    worst = 0.0
    for _ in range(200):
        p = random_point(rng)
        w = log_uniform(rng, 1e-2, 1e1)
        T = w * (p["c"] + p["s_own"]) + p["s_own"]
        k0 = mp.mpf(w) * (p["c"] + p["s_own"]) / T
        fd = mp.diff(lambda k: slice_capacity(k, w, **p), k0)
        D = _gamma.slope_denominator(**{k: mp.mpf(v) for k, v in p.items()})
        analytic = T * _gamma.gamma_value(**{k: mp.mpf(v) for k, v in p.items()}) / D
        scale = T * _gamma.gamma_scale(**{k: mp.mpf(v) for k, v in p.items()}) / abs(D)
        worst = max(worst, float(abs(fd - analytic) / scale))
    assert worst <= 1e-9


def test_gamma_sign_matches_derivative_sign(rng):
    mp.mp.dps = 30
    for _ in range(100):
        p = random_point(rng)
        w = 0.5
        T = w * (p["c"] + p["s_own"]) + p["s_own"]
        k0 = mp.mpf(w) * (p["c"] + p["s_own"]) / T
        fd = mp.diff(lambda k: slice_capacity(k, w, **p), k0)
        # D > 0 for positive arguments, so the signs agree
        assert np.sign(float(fd)) == np.sign(_gamma.gamma_value(**p))
