"""Regenerate ``src/sapd/_gamma.py`` from the two-band power-shift capacity.

User ``i`` moves power between a slice of width ``w`` of its exclusive band
(density ``sigma_i + c_i``) and a unit-width slice of the shared band
(density ``sigma_i``, other user at ``sigma_j``).  The capacity of the slice
as a function of the fraction ``k`` kept in the exclusive part is

    C(k) = w log(1 + k T g / (w n))
         + log(1 + (1 - k) T g / (sigma_j x_in + n))
         + log(1 + sigma_j h_o / (x_out (1 - k) T + n_o)),

with ``T = w (c + sigma_i) + sigma_i``.  At the operating point
``k0 = w (c + sigma_i) / T`` the numerator of dC/dk factors as ``T * Gamma``
where ``Gamma`` is independent of ``w`` and affine in ``c``.

Usage::

    python tools/derive_gamma.py            # rewrite the module
    python tools/derive_gamma.py --check    # exit 1 if the module is stale
"""

import argparse
import pathlib
import sys

import sympy as sp

TARGET = pathlib.Path(__file__).resolve().parents[1] / "src" / "sapd" / "_gamma.py"

ARGS = ("s_own", "s_other", "c", "g", "x_in", "x_out", "h_o", "n", "n_o")


def symbols():
    return sp.symbols(" ".join(ARGS), positive=True)


def derive():
    s_own, s_other, c, g, x_in, x_out, h_o, n, n_o = symbols()
    w, k = sp.symbols("w k", positive=True)
    total = w * (c + s_own) + s_own
    capacity = (
        w * sp.log(1 + k * total * g / (w * n))
        + sp.log(1 + (1 - k) * total * g / (s_other * x_in + n))
        + sp.log(1 + s_other * h_o / (x_out * (1 - k) * total + n_o))
    )
    slope = sp.diff(capacity, k).subs(k, w * (c + s_own) / total)
    numerator, denominator = sp.fraction(sp.together(sp.simplify(slope)))
    quotient, remainder = sp.div(sp.expand(numerator), sp.expand(total), w)
    if remainder != 0 or quotient.has(w):
        raise RuntimeError("numerator does not factor as T * Gamma")
    gamma = sp.expand(quotient)
    if sp.degree(gamma, c) != 1:
        raise RuntimeError("Gamma is not affine in c")
    poly = sp.Poly(gamma, c)
    offset = sp.expand(poly.coeff_monomial(1))
    slope_c = sp.expand(poly.coeff_monomial(c))
    return gamma, offset, slope_c, sp.factor(sp.expand(denominator))


def render():
    gamma, offset, slope_c, denominator = derive()
    terms = sp.Add.make_args(gamma)
    scale = " + ".join(f"abs({sp.pycode(t)})" for t in terms)
    arglist = ", ".join(ARGS)
    coef_args = ", ".join(a for a in ARGS if a != "c")
    return f'''"""Stationarity polynomial for the exclusive/shared power balance.

GENERATED by tools/derive_gamma.py -- do not edit by hand.

Gamma = offset + slope * c vanishes exactly when shifting power between the
exclusive band and the shared band leaves the two-user capacity stationary.
Argument names are from the point of view of the user moving power:

    s_own    own density in the shared band
    s_other  other user's density in the shared band
    c        own exclusive-band density increment
    g        own direct gain            (h_ii)
    x_in     cross gain into own receiver (h_ji)
    x_out    cross gain from own sender   (h_ij)
    h_o      other user's direct gain   (h_jj)
    n, n_o   own and other noise densities

dC/dk = T * Gamma / D with T = w (c + s_own) + s_own and
D = {sp.pycode(denominator)}.
"""


def gamma_offset({coef_args}):
    return {sp.pycode(offset)}


def gamma_slope({coef_args}):
    return {sp.pycode(slope_c)}


def gamma_value({arglist}):
    return {sp.pycode(gamma)}


def gamma_scale({arglist}):
    """Sum of absolute monomial magnitudes, used to normalise residuals."""
    return {scale}


def slope_denominator({arglist}):
    return {sp.pycode(denominator)}
'''


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--check", action="store_true")
    args = parser.parse_args(argv)
    text = render()
    if args.check:
        current = TARGET.read_text() if TARGET.exists() else ""
        if current != text:
            print(f"{TARGET} is stale; rerun tools/derive_gamma.py", file=sys.stderr)
            return 1
        return 0
    TARGET.write_text(text)
    print(f"wrote {TARGET}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
