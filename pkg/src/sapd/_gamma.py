"""Stationarity polynomial for the exclusive/shared power balance.

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
D = (n_o + s_own*x_out)*(c*g + g*s_own + n)*(g*s_own + n + s_other*x_in)*(h_o*s_other + n_o + s_own*x_out).
"""


def gamma_offset(s_own, s_other, g, x_in, x_out, h_o, n, n_o):
    return g**2*h_o*s_other*s_own**2*x_out + 2*g*h_o*n*s_other*s_own*x_out + g*h_o*n_o*s_other**2*x_in + 2*g*h_o*s_other**2*s_own*x_in*x_out + g*n_o**2*s_other*x_in + 2*g*n_o*s_other*s_own*x_in*x_out + g*s_other*s_own**2*x_in*x_out**2 + h_o*n**2*s_other*x_out + h_o*n*s_other**2*x_in*x_out


def gamma_slope(s_own, s_other, g, x_in, x_out, h_o, n, n_o):
    return -g**2*h_o*n_o*s_other - g**2*n_o**2 - 2*g**2*n_o*s_own*x_out - g**2*s_own**2*x_out**2 + g*h_o*n*s_other*x_out + g*h_o*s_other**2*x_in*x_out


def gamma_value(s_own, s_other, c, g, x_in, x_out, h_o, n, n_o):
    return -c*g**2*h_o*n_o*s_other - c*g**2*n_o**2 - 2*c*g**2*n_o*s_own*x_out - c*g**2*s_own**2*x_out**2 + c*g*h_o*n*s_other*x_out + c*g*h_o*s_other**2*x_in*x_out + g**2*h_o*s_other*s_own**2*x_out + 2*g*h_o*n*s_other*s_own*x_out + g*h_o*n_o*s_other**2*x_in + 2*g*h_o*s_other**2*s_own*x_in*x_out + g*n_o**2*s_other*x_in + 2*g*n_o*s_other*s_own*x_in*x_out + g*s_other*s_own**2*x_in*x_out**2 + h_o*n**2*s_other*x_out + h_o*n*s_other**2*x_in*x_out


def gamma_scale(s_own, s_other, c, g, x_in, x_out, h_o, n, n_o):
    """Sum of absolute monomial magnitudes, used to normalise residuals."""
    return abs(-c*g**2*n_o**2) + abs(g*n_o**2*s_other*x_in) + abs(h_o*n**2*s_other*x_out) + abs(-c*g**2*s_own**2*x_out**2) + abs(g*h_o*n_o*s_other**2*x_in) + abs(g*s_other*s_own**2*x_in*x_out**2) + abs(h_o*n*s_other**2*x_in*x_out) + abs(g**2*h_o*s_other*s_own**2*x_out) + abs(-c*g**2*h_o*n_o*s_other) + abs(-2*c*g**2*n_o*s_own*x_out) + abs(c*g*h_o*n*s_other*x_out) + abs(c*g*h_o*s_other**2*x_in*x_out) + abs(2*g*h_o*n*s_other*s_own*x_out) + abs(2*g*h_o*s_other**2*s_own*x_in*x_out) + abs(2*g*n_o*s_other*s_own*x_in*x_out)


def slope_denominator(s_own, s_other, c, g, x_in, x_out, h_o, n, n_o):
    return (n_o + s_own*x_out)*(c*g + g*s_own + n)*(g*s_own + n + s_other*x_in)*(h_o*s_other + n_o + s_own*x_out)
