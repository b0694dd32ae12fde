""" Bessel function helpers for the coaxial cutoff equations. Function values come from
scipy.special; the Wronskian is exposed so callers can certify the evaluations they rely on. """

import math
from collections import namedtuple

import numpy as np
from scipy import special


class BesselEval(namedtuple("BesselEval", ["n", "x", "Jn", "Yn", "Jnp", "Ynp"])):
    __slots__ = ()

    def wronskian_residual(self):
        """ Relative deviation of Jn*Yn' - Jn'*Yn from 2/(pi*x). """
        expected = 2.0 / (math.pi * self.x)
        return abs((self.Jn * self.Ynp - self.Jnp * self.Yn) - expected) / expected


def bessel_eval(n, x):
    """
    Values and first derivatives of J_n and Y_n at a single point.
    :type n: int
    :type x: float
    :rtype: BesselEval
    """
    if n < 0 or x <= 0:
        raise ValueError("Bessel evaluation needs n >= 0 and x > 0, got n={} x={}".format(n, x))
    return BesselEval(n=n, x=x,
                      Jn=float(special.jv(n, x)), Yn=float(special.yv(n, x)),
                      Jnp=float(special.jvp(n, x)), Ynp=float(special.yvp(n, x)))


def bessel_cross_te(n, kc_a, kc_b):
    """ Jn'(kc*a)*Yn'(kc*b) - Jn'(kc*b)*Yn'(kc*a); zeros are TE cutoffs. """
    return special.jvp(n, kc_a) * special.yvp(n, kc_b) - special.jvp(n, kc_b) * special.yvp(n, kc_a)


def bessel_cross_tm(n, kc_a, kc_b):
    """ Jn(kc*a)*Yn(kc*b) - Jn(kc*b)*Yn(kc*a); zeros are TM cutoffs. """
    return special.jv(n, kc_a) * special.yv(n, kc_b) - special.jv(n, kc_b) * special.yv(n, kc_a)


def radial_profile(n, x, x_ref, derivative_ref):
    """
    Radial standing-wave profile R(x) and R'(x) that satisfies the boundary condition at x_ref.

    With derivative_ref=True (TE) the profile is Jn(x)*Yn'(x_ref) - Jn'(x_ref)*Yn(x), whose
    derivative vanishes at x_ref; otherwise (TM) Jn(x)*Yn(x_ref) - Jn(x_ref)*Yn(x), which vanishes
    at x_ref. Both forms avoid dividing by Yn(x_ref) or Yn'(x_ref).
    """
    x = np.asarray(x, dtype=float)
    if derivative_ref:
        c_j, c_y = special.yvp(n, x_ref), special.jvp(n, x_ref)
    else:
        c_j, c_y = special.yv(n, x_ref), special.jv(n, x_ref)
    value = c_j * special.jv(n, x) - c_y * special.yv(n, x)
    slope = c_j * special.jvp(n, x) - c_y * special.yvp(n, x)
    return value, slope
