""" Guided modes of a coaxial line: cutoff search for TE and TM families and attenuation per
meter from conductor and dielectric losses. Attenuation constants are returned in dB/m. """

import functools
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from cryoflux import bessel, dask_utils
from cryoflux.constants import CONSTANTS, NP_TO_DB
from cryoflux.errors import BelowCutoffError, InvalidMaterialError, ModeSearchError
from cryoflux.materials import CONDUCTOR, PTFE, STAINLESS_STEEL, interpolate_material

logger = logging.getLogger(__name__)

TEM = "TEM"
TE = "TE"
TM = "TM"
mode_families = [TEM, TE, TM]

# Inner radius a and outer-conductor inner radius b [m] of the semi-rigid cables
cable_radii = {
    "ut086": (0.255e-3, 0.835e-3),
    "ut047": (0.1435e-3, 0.47e-3),
    "ut034": (0.1015e-3, 0.33e-3),
}

# samples per asymptotic root spacing pi/(b - a) in the cutoff scan
SCAN_SAMPLES_PER_PERIOD = 20
ROOT_RTOL = 1e-12
ROOT_RESIDUAL_RTOL = 1e-8
# relative Wronskian deviation tolerated at k_c*a and k_c*b of an accepted root
WRONSKIAN_RTOL = 1e-8
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-9


@dataclass(frozen=True, eq=False)
class CoaxGeometry:
    a: float
    b: float
    conductor: object = STAINLESS_STEEL
    dielectric: object = PTFE
    name: str = "custom"

    def __post_init__(self):
        if not 0 < self.a < self.b:
            raise ValueError("Coax radii must satisfy 0 < a < b, got a={} b={}".format(self.a, self.b))
        if self.conductor.kind != CONDUCTOR:
            raise InvalidMaterialError("{} is not a conductor".format(self.conductor.name))

    def dielectric_parts(self, f):
        """ (eps', tan_delta, mu') of the filling at f. """
        eps_r, mu_r = interpolate_material(self.dielectric, f)
        eps_p = np.real(eps_r)
        return eps_p, -np.imag(eps_r) / eps_p, np.real(mu_r)


def cable_geometry(name, conductor=STAINLESS_STEEL, dielectric=PTFE):
    """ Preset cable by name (ut086, ut047, ut034). """
    try:
        a, b = cable_radii[name.lower()]
    except KeyError:
        raise ValueError("Unknown cable '{}'. Expected one of: {}".format(name, ", ".join(sorted(cable_radii))))
    return CoaxGeometry(a=a, b=b, conductor=conductor, dielectric=dielectric, name=name.lower())


class ModeId(namedtuple("ModeId", ["family", "n", "m"])):
    __slots__ = ()

    def __new__(cls, family, n=0, m=0):
        if family not in mode_families:
            raise ValueError("Unknown mode family {}".format(family))
        if family == TEM:
            return super(ModeId, cls).__new__(cls, TEM, 0, 0)
        if n < 0 or m < 1:
            raise ValueError("{} modes need n >= 0 and m >= 1, got n={} m={}".format(family, n, m))
        return super(ModeId, cls).__new__(cls, family, int(n), int(m))

    def __str__(self):
        if self.family == TEM:
            return TEM
        return "{}{}{}".format(self.family, self.n, self.m)


TEM_MODE = ModeId(TEM)


@dataclass(frozen=True)
class ModeDispersion:
    """ Cutoff data of one mode; eps_p and mu_p are the real material parts used to place f_c. """
    mode: ModeId
    k_c: float
    f_c: float
    eps_p: float = 1.0
    mu_p: float = 1.0

    def wavenumber(self, f):
        return 2 * math.pi * np.asarray(f, dtype=float) * math.sqrt(self.eps_p * self.mu_p) / CONSTANTS.c

    def beta(self, f):
        """ Lossless propagation constant sqrt(k^2 - k_c^2); zero at and below cutoff. """
        k = self.wavenumber(f)
        return np.sqrt(np.maximum(k ** 2 - self.k_c ** 2, 0.0))

    def propagates(self, f):
        return np.asarray(f, dtype=float) > self.f_c


def cutoff_frequency(k_c, eps_p, mu_p):
    return k_c * CONSTANTS.c / (2 * math.pi * math.sqrt(eps_p * mu_p))


def tem_dispersion(eps_p=1.0, mu_p=1.0):
    return ModeDispersion(mode=TEM_MODE, k_c=0.0, f_c=0.0, eps_p=eps_p, mu_p=mu_p)


@dataclass(frozen=True, eq=False)
class AttenuationResult:
    alpha_c: object
    alpha_d: object
    alpha_total: object = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha_total", self.alpha_c + self.alpha_d)

    @property
    def alpha_total_np(self):
        return self.alpha_total / NP_TO_DB


PowerIntegrals = namedtuple("PowerIntegrals", ["P0", "Pl"])


def _cross_function(family):
    return bessel.bessel_cross_te if family == TE else bessel.bessel_cross_tm


def find_cutoffs(geom, family, max_n, max_f):
    """
    All TE or TM cutoffs of a coax with f_c <= max_f, sorted by f_c.

    Each order n is scanned on a uniform k_c grid with SCAN_SAMPLES_PER_PERIOD samples per
    asymptotic root spacing pi/(b - a); sign changes are refined with brentq.
    :type geom: CoaxGeometry
    :param family: TE, TM or TEM
    :param max_n: highest azimuthal order searched
    :param max_f: upper cutoff frequency [Hz]
    :rtype: list of ModeDispersion
    """
    if max_f <= 0 or max_n < 0:
        raise ValueError("find_cutoffs needs max_f > 0 and max_n >= 0")
    eps_p, _, mu_p = geom.dielectric_parts(max_f)
    eps_p, mu_p = float(eps_p), float(mu_p)
    if family == TEM:
        return [tem_dispersion(eps_p, mu_p)]
    if family not in (TE, TM):
        raise ValueError("Unknown mode family {}".format(family))

    kc_max = 2 * math.pi * max_f * math.sqrt(eps_p * mu_p) / CONSTANTS.c
    found = []
    for n in range(max_n + 1):
        for m, k_c in enumerate(order_roots(geom, family, n, kc_max), start=1):
            found.append(ModeDispersion(mode=ModeId(family, n, m), k_c=k_c,
                                        f_c=cutoff_frequency(k_c, eps_p, mu_p), eps_p=eps_p, mu_p=mu_p))
    found.sort(key=lambda md: (md.f_c, md.mode.n, md.mode.m))
    logger.debug("[Modes] %s: %d %s cutoffs below %.4g GHz", geom.name, len(found), family, max_f / 1e9)
    return found


def order_roots(geom, family, n, kc_max, samples_per_period=SCAN_SAMPLES_PER_PERIOD):
    """ Cutoff wavevectors of order n in (0, kc_max], ascending. """
    cross = _cross_function(family)
    step = math.pi / (geom.b - geom.a) / samples_per_period

    def residual(kc):
        return cross(n, kc * geom.a, kc * geom.b)

    # no cutoff of order n lies below k_c*b = n/2
    kc_start = max(step / 2, 0.5 * n / geom.b)
    if kc_start > kc_max:
        return []
    grid = np.arange(kc_start, kc_max + step, step)
    values = residual(grid)
    roots = []
    for i in np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) <= 0):
        lo, hi = grid[i], grid[i + 1]
        if values[i] == 0:
            root = lo
        elif values[i + 1] == 0:
            continue  # picked up as the left node of the next bracket
        else:
            try:
                root = optimize.brentq(residual, lo, hi, xtol=ROOT_RTOL * lo, rtol=ROOT_RTOL, maxiter=500)
            except (ValueError, RuntimeError) as err:
                raise ModeSearchError("{} cutoff refinement failed for n={} in bracket [{:.6g}, {:.6g}] 1/m: {}".format(
                    family, n, lo, hi, err), n=n, bracket=(lo, hi))
        scale = max(abs(values[i]), abs(values[i + 1]))
        if abs(residual(root)) > ROOT_RESIDUAL_RTOL * scale:
            raise ModeSearchError("{} cutoff residual too large for n={} in bracket [{:.6g}, {:.6g}] 1/m".format(
                family, n, lo, hi), n=n, bracket=(lo, hi))
        _certify_root(family, n, root, geom, (lo, hi))
        if root <= kc_max:
            roots.append(float(root))
    return roots


def _certify_root(family, n, k_c, geom, bracket):
    """ Rejects a root whose Bessel evaluations at either conductor break the Wronskian identity. """
    for x in (k_c * geom.a, k_c * geom.b):
        residual = bessel.bessel_eval(n, x).wronskian_residual()
        if residual > WRONSKIAN_RTOL:
            raise ModeSearchError("{} cutoff for n={} at k_c={:.6g} 1/m fails the Wronskian check at x={:.6g} "
                                  "(relative deviation {:.3g})".format(family, n, k_c, x, residual),
                                  n=n, bracket=bracket)


def default_max_n(geom, max_f):
    """ Azimuthal order beyond which the first root n*2/(a+b) clears max_f, with margin. """
    eps_p, _, mu_p = geom.dielectric_parts(max_f)
    kc_max = 2 * math.pi * max_f * math.sqrt(float(eps_p) * float(mu_p)) / CONSTANTS.c
    return int(math.ceil(kc_max * (geom.a + geom.b) / 2)) + 2


def surface_resistance(conductor, f):
    if conductor.sigma is None or not conductor.sigma > 0:
        raise InvalidMaterialError("Conductor {} has no positive conductivity".format(conductor.name))
    _, mu_r = interpolate_material(conductor, f)
    omega = 2 * math.pi * np.asarray(f, dtype=float)
    return np.sqrt(omega * CONSTANTS.mu0 * np.real(mu_r) / (2 * conductor.sigma))


def coax_impedance(geom, f):
    """ Characteristic impedance of the filled coax [Ohm], complex for a lossy filling. """
    eps_r, mu_r = interpolate_material(geom.dielectric, f)
    return CONSTANTS.Z_vac * np.sqrt(mu_r / eps_r) * math.log(geom.b / geom.a) / (2 * math.pi)


def attenuation_tem(geom, f):
    """
    TEM attenuation from the closed-form conductor and dielectric terms.
    :type geom: CoaxGeometry
    :param f: frequency [Hz], scalar or array, > 0
    :rtype: AttenuationResult
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("TEM attenuation needs f > 0")
    eps_p, tan_d, mu_p = geom.dielectric_parts(f)
    omega = 2 * math.pi * f
    log_ratio = math.log(geom.b / geom.a)
    z0 = np.sqrt(CONSTANTS.mu0 * mu_p / (CONSTANTS.eps0 * eps_p)) * log_ratio / (2 * math.pi)
    r_s = surface_resistance(geom.conductor, f)
    alpha_c = r_s / (4 * math.pi * z0) * (1 / geom.a + 1 / geom.b)
    alpha_d = math.pi * omega * CONSTANTS.eps0 * eps_p * tan_d * z0 / log_ratio
    return AttenuationResult(alpha_c=NP_TO_DB * alpha_c, alpha_d=NP_TO_DB * alpha_d)


def azimuthal_weight(n):
    """ Integral of cos^2(n*phi) over a full turn. """
    return 2 * math.pi if n == 0 else math.pi


@functools.lru_cache(maxsize=None)
def radial_power_integral(family, n, x_a, x_b):
    """
    Integral over [x_a, x_b] of n^2/x R(x)^2 + x R'(x)^2 for the mode profile R.
    Independent of frequency, so cached per mode.
    """
    derivative_ref = family == TE

    def integrand(x):
        value, slope = bessel.radial_profile(n, x, x_b, derivative_ref)
        return n * n / x * value * value + x * slope * slope

    result, _ = integrate.quad(integrand, x_a, x_b, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=200)
    return result


def _check_propagating(mode, f):
    if np.any(~mode.propagates(f)):
        raise BelowCutoffError("{} is below cutoff ({:.6g} GHz) at {:.6g} GHz".format(
            mode.mode, mode.f_c / 1e9, float(np.min(f)) / 1e9))


def power_integrals(geom, mode, f, amplitude=1.0):
    """
    Axial power flow P0 [W] and conductor loss per meter Pl [W/m] of a TE or TM mode.
    :type geom: CoaxGeometry
    :type mode: ModeDispersion
    :param amplitude: field amplitude constant A; it cancels in Pl/(2*P0)
    :rtype: PowerIntegrals
    """
    f = np.asarray(f, dtype=float)
    family, n = mode.mode.family, mode.mode.n
    k_c = mode.k_c
    x_a, x_b = k_c * geom.a, k_c * geom.b
    eps_p, _, mu_p = geom.dielectric_parts(f)
    omega = 2 * math.pi * f
    beta = np.sqrt(np.maximum((omega / CONSTANTS.c) ** 2 * eps_p * mu_p - k_c ** 2, 0.0))
    r_s = surface_resistance(geom.conductor, f)
    half_weight = azimuthal_weight(n) / 2
    amp2 = abs(amplitude) ** 2
    integral = radial_power_integral(family, n, x_a, x_b)
    value_a, slope_a = bessel.radial_profile(n, x_a, x_b, family == TE)
    value_b, slope_b = bessel.radial_profile(n, x_b, x_b, family == TE)
    if family == TE:
        p0 = half_weight * omega * CONSTANTS.mu0 * mu_p * beta * amp2 * integral / k_c ** 4
        edge_a = geom.a * (1 + beta ** 2 * n ** 2 / (k_c ** 4 * geom.a ** 2)) * value_a ** 2
        edge_b = geom.b * (1 + beta ** 2 * n ** 2 / (k_c ** 4 * geom.b ** 2)) * value_b ** 2
        pl = half_weight * amp2 * r_s * (edge_a + edge_b)
    elif family == TM:
        p0 = half_weight * omega * CONSTANTS.eps0 * eps_p * beta * amp2 * integral / k_c ** 4
        pl = (half_weight * r_s * (omega * CONSTANTS.eps0 * eps_p) ** 2 * amp2 / k_c ** 2
              * (geom.a * slope_a ** 2 + geom.b * slope_b ** 2))
    else:
        raise ValueError("Power integrals are defined for TE and TM modes, not {}".format(family))
    return PowerIntegrals(P0=p0, Pl=pl)


def _attenuation_hollow(geom, mode, f, amplitude=1.0):
    f = np.asarray(f, dtype=float)
    _check_propagating(mode, f)
    powers = power_integrals(geom, mode, f, amplitude)
    alpha_c = powers.Pl / (2 * powers.P0)
    eps_p, tan_d, mu_p = geom.dielectric_parts(f)
    k2 = (2 * math.pi * f / CONSTANTS.c) ** 2 * eps_p * mu_p
    alpha_d = k2 * tan_d / (2 * np.sqrt(k2 - mode.k_c ** 2))
    return AttenuationResult(alpha_c=NP_TO_DB * alpha_c, alpha_d=NP_TO_DB * alpha_d)


def attenuation_te(geom, mode, f, amplitude=1.0):
    """ Conductor and dielectric attenuation [dB/m] of a propagating TE mode. """
    if mode.mode.family != TE:
        raise ValueError("attenuation_te called with {}".format(mode.mode))
    return _attenuation_hollow(geom, mode, f, amplitude)


def attenuation_tm(geom, mode, f, amplitude=1.0):
    """ Conductor and dielectric attenuation [dB/m] of a propagating TM mode. """
    if mode.mode.family != TM:
        raise ValueError("attenuation_tm called with {}".format(mode.mode))
    return _attenuation_hollow(geom, mode, f, amplitude)


def attenuation(geom, mode, f):
    if mode.mode.family == TEM:
        return attenuation_tem(geom, f)
    if mode.mode.family == TE:
        return attenuation_te(geom, mode, f)
    return attenuation_tm(geom, mode, f)


def mode_attenuation_db(geom, mode, freqs):
    """ Total attenuation [dB/m] on a grid, inf where the mode is cut off. """
    freqs = np.asarray(freqs, dtype=float)
    alpha = np.full(freqs.shape, np.inf)
    above = mode.propagates(freqs)
    if np.any(above):
        alpha[above] = attenuation(geom, mode, freqs[above]).alpha_total
    return alpha


def attenuation_sweep(geom, modes, freqs, scheduler=dask_utils.DEFAULT_SCHEDULER):
    """
    Attenuation of several modes on a common grid.
    :return: dict mapping ModeId to dB/m arrays (inf below cutoff), in the order of modes
    """
    columns = dask_utils.parallel_map(functools.partial(mode_attenuation_db, geom, freqs=freqs),
                                      modes, scheduler=scheduler)
    return {md.mode: column for md, column in zip(modes, columns)}


def envelope_minimum(sweep, freqs, family=None):
    """
    Lowest attenuation reached by any mode of a family over the grid.
    :return: (alpha_min [dB/m], frequency [Hz], ModeId)
    """
    best = (np.inf, float("nan"), None)
    for mode_id, alpha in sweep.items():
        if family is not None and mode_id.family != family:
            continue
        i = int(np.argmin(alpha))
        if alpha[i] < best[0]:
            best = (float(alpha[i]), float(freqs[i]), mode_id)
    return best


def cutoff_wavevector(geom, mode_id):
    """ k_c [1/m] of a single mode of the cross-section; 0 for TEM. """
    if mode_id.family == TEM:
        return 0.0
    # the m-th root of order n lies below the first root estimate plus m root spacings
    kc_max = 2.0 * (mode_id.n + 1) / (geom.a + geom.b) + (mode_id.m + 1) * math.pi / (geom.b - geom.a)
    roots = order_roots(geom, mode_id.family, mode_id.n, kc_max)
    if len(roots) < mode_id.m:
        raise ModeSearchError("Found only {} roots of order {} below {:.6g} 1/m".format(len(roots), mode_id.n, kc_max),
                              n=mode_id.n, bracket=(0.0, kc_max))
    return roots[mode_id.m - 1]
