""" Absorber-filled coaxial low-pass filter: characteristic impedance and bore matching, material
and conductor losses of the TEM and TE modes, reflection at the filter entry and the residual
photon flux behind the filter. """

import functools
import logging
import math
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from cryoflux import bessel, flux, modes
from cryoflux.constants import CONSTANTS, NP_TO_DB
from cryoflux.errors import (BelowCutoffError, FluxInputError, ImpedanceSingularityError, MeasurementInputError,
                             SearchRangeError)
from cryoflux.materials import COPPER, interpolate_material

logger = logging.getLogger(__name__)

REFERENCE_IMPEDANCE = 50.0
MATCH_STEP_HZ = 0.1e9
BORE_MIN_FACTOR = 1.1
BORE_MAX = 20e-3
BORE_SCAN_POINTS = 200
# |Gamma| floor for the dB objective (-300 dB)
REFLECTION_FLOOR = 1e-15


@dataclass(frozen=True, eq=False)
class FilterGeometry:
    """
    :param d_pin: centre-pin diameter [m]
    :param D_bore: bore diameter [m]
    :param length: filter length [m]
    :param fill: absorber MaterialSpectrum
    :param conductor: conductor MaterialSpectrum of pin and body
    """
    d_pin: float
    D_bore: float
    length: float
    fill: object
    conductor: object = COPPER
    coax: modes.CoaxGeometry = field(init=False)

    def __post_init__(self):
        if not 0 < self.d_pin < self.D_bore:
            raise ValueError("Filter needs 0 < d_pin < D_bore, got {} / {}".format(self.d_pin, self.D_bore))
        if not self.length > 0:
            raise ValueError("Filter length must be positive, got {}".format(self.length))
        object.__setattr__(self, "coax", modes.CoaxGeometry(a=self.d_pin / 2, b=self.D_bore / 2,
                                                            conductor=self.conductor, dielectric=self.fill,
                                                            name="filter"))


@dataclass(frozen=True)
class FilterModeDispersion(modes.ModeDispersion):
    """ Mode of the filled filter section; propagation is judged with the fill at each frequency. """
    fill: object = None

    def wavenumber(self, f):
        eps_r, mu_r = interpolate_material(self.fill, f)
        return 2 * math.pi * np.asarray(f, dtype=float) * np.sqrt(np.real(eps_r) * np.real(mu_r)) / CONSTANTS.c

    def propagates(self, f):
        if self.mode.family == modes.TEM:
            return np.ones(np.shape(f), dtype=bool)
        return self.wavenumber(f) > self.k_c


def filter_mode(geom, mode_id, f_ref):
    """ Dispersion of a TEM or TE mode in the filter; f_c uses the fill's real parts at f_ref. """
    if mode_id.family == modes.TM:
        raise FluxInputError("The filter model covers TEM and TE modes, not {}".format(mode_id))
    k_c = modes.cutoff_wavevector(geom.coax, mode_id)
    eps_r, mu_r = interpolate_material(geom.fill, f_ref, extrapolate=True)
    eps_p, mu_p = float(np.real(eps_r)), float(np.real(mu_r))
    return FilterModeDispersion(mode=mode_id, k_c=k_c, f_c=modes.cutoff_frequency(k_c, eps_p, mu_p),
                                eps_p=eps_p, mu_p=mu_p, fill=geom.fill)


def filter_impedance(geom, f):
    """ Characteristic impedance Z_vac*ln(D/d)/(2*pi)*sqrt(mu_r/eps_r) [Ohm] of the filled section. """
    return modes.coax_impedance(geom.coax, f)


def wave_impedance(eps_r, mu_r, k_c, f):
    """ omega*mu0*mu_r/sqrt(omega^2*eps_r*mu_r/c^2 - k_c^2) on the branch with Re(Z) >= 0. """
    omega = 2 * math.pi * np.asarray(f, dtype=float)
    k_z = np.sqrt(omega ** 2 * eps_r * mu_r / CONSTANTS.c ** 2 - k_c ** 2 + 0j)
    z = omega * CONSTANTS.mu0 * mu_r / k_z
    return np.where(np.real(z) < 0, -z, z)


def match_grid(band, step=MATCH_STEP_HZ):
    f1, f2 = band
    if not 0 < f1 < f2:
        raise ValueError("Band must satisfy 0 < f1 < f2, got {}".format(band))
    return np.linspace(f1, f2, int(round((f2 - f1) / step)) + 1)


def reflection_db(z, z_ref=REFERENCE_IMPEDANCE):
    gamma = np.abs((z - z_ref) / (z + z_ref))
    return 20 * np.log10(np.maximum(gamma, REFLECTION_FLOOR))


def average_reflection_db(d_pin, D_bore, fill, band, step=MATCH_STEP_HZ, z_ref=REFERENCE_IMPEDANCE):
    """ Band-averaged reflection in dB against z_ref for a bore diameter. """
    f = match_grid(band, step)
    eps_r, mu_r = interpolate_material(fill, f)
    z = CONSTANTS.Z_vac * np.sqrt(mu_r / eps_r) * math.log(D_bore / d_pin) / (2 * math.pi)
    return float(np.mean(reflection_db(z, z_ref)))


def max_impedance_deviation(geom, band, step=MATCH_STEP_HZ, z_ref=REFERENCE_IMPEDANCE):
    """ Largest ||Z| - z_ref| over the band and the frequency where it occurs. """
    f = match_grid(band, step)
    deviation = np.abs(np.abs(filter_impedance(geom, f)) - z_ref)
    i = int(np.argmax(deviation))
    return float(deviation[i]), float(f[i])


BoreOptimum = namedtuple("BoreOptimum", ["D_bore", "reflection_db"])


def optimize_bore(d_pin, fill, band, step=MATCH_STEP_HZ, z_ref=REFERENCE_IMPEDANCE, D_max=BORE_MAX):
    """
    Bore diameter that minimises the band-averaged reflection against z_ref.

    A coarse scan over [1.1*d_pin, D_max] brackets the minimum, then golden-section search refines it.
    :param d_pin: centre-pin diameter [m]
    :param fill: MaterialSpectrum covering the band
    :param band: (f1, f2) [Hz]
    :rtype: BoreOptimum
    """
    lower = BORE_MIN_FACTOR * d_pin
    if not lower < D_max:
        raise SearchRangeError("Empty bore search range [{:.4g}, {:.4g}] mm".format(lower * 1e3, D_max * 1e3))
    objective = functools.partial(_bore_objective, d_pin=d_pin, fill=fill, band=band, step=step, z_ref=z_ref)
    scan = np.linspace(lower, D_max, BORE_SCAN_POINTS)
    values = np.array([objective(D) for D in scan])
    i = int(np.argmin(values))
    if i == 0 or i == scan.size - 1:
        raise SearchRangeError("Reflection minimum at the edge of [{:.4g}, {:.4g}] mm; widen the bore range".format(
            lower * 1e3, D_max * 1e3))
    D_star, reflection, _ = optimize.golden(objective, brack=(scan[i - 1], scan[i], scan[i + 1]), tol=1e-10,
                                            full_output=True)
    logger.info("[Filter] Optimal bore %.5g mm, average reflection %.4g dB", D_star * 1e3, reflection)
    return BoreOptimum(D_bore=float(D_star), reflection_db=float(reflection))


def _bore_objective(D_bore, d_pin, fill, band, step, z_ref):
    return average_reflection_db(d_pin, D_bore, fill, band, step, z_ref)


@dataclass(frozen=True, eq=False)
class LossBreakdown:
    """
    Losses of one filter mode for a unit field amplitude.
    :param alpha_c: conductor attenuation [dB/m]
    :param alpha_dm: dielectric plus magnetic attenuation from the complex-material field integrals [dB/m]
    :param alpha_dm_small_loss: first-order estimate from the loss tangents [dB/m]
    :param P_d: dielectric dissipation [W/m]
    :param P_m: magnetic dissipation [W/m]
    :param P0: axial power flow [W]
    """
    alpha_c: object
    alpha_dm: object
    alpha_dm_small_loss: object
    P_d: object
    P_m: object
    P0: object

    @property
    def alpha_total(self):
        return self.alpha_c + self.alpha_dm

    def material_loss_db(self, length):
        """ Filter attenuation 10*log10(A) for A = 10^(alpha_dm*l/10). """
        return self.alpha_dm * length


@functools.lru_cache(maxsize=None)
def _te_integrals(n, x_a, x_b):
    """ (integral of n^2/x R^2 + x R'^2, integral of x R^2) over [x_a, x_b]. """
    def gradient_term(x):
        value, slope = bessel.radial_profile(n, x, x_b, True)
        return n * n / x * value * value + x * slope * slope

    def axial_term(x):
        value, _ = bessel.radial_profile(n, x, x_b, True)
        return x * value * value

    options = dict(epsabs=modes.QUAD_EPSABS, epsrel=modes.QUAD_EPSREL, limit=200)
    return integrate.quad(gradient_term, x_a, x_b, **options)[0], integrate.quad(axial_term, x_a, x_b, **options)[0]


def filter_attenuation(geom, mode, f):
    """
    Material and conductor losses of a TEM or TE filter mode.

    The material part integrates eps'' |E|^2 and mu'' |H|^2 over the cross-section with the
    complex fill kept in the fields, so it holds for large loss tangents; the conductor part uses
    the real-material surface-resistance model.
    :type geom: FilterGeometry
    :type mode: FilterModeDispersion
    :param f: frequency [Hz] inside the fill table
    :rtype: LossBreakdown
    """
    f = np.asarray(f, dtype=float)
    eps_r, mu_r = interpolate_material(geom.fill, f)
    omega = 2 * math.pi * f
    eps_pp, mu_pp = -np.imag(eps_r), -np.imag(mu_r)
    tan_d, tan_dm = eps_pp / np.real(eps_r), mu_pp / np.real(mu_r)
    k2 = (omega / CONSTANTS.c) ** 2 * np.real(eps_r) * np.real(mu_r)
    if mode.mode.family == modes.TEM:
        log_ratio = math.log(geom.D_bore / geom.d_pin)
        eta = CONSTANTS.Z_vac * np.sqrt(mu_r / eps_r)
        p0 = math.pi * np.real(1 / eta) / log_ratio
        p_d = math.pi * omega * CONSTANTS.eps0 * eps_pp / log_ratio
        p_m = math.pi * omega * CONSTANTS.mu0 * mu_pp / (np.abs(eta) ** 2 * log_ratio)
        small_loss = np.sqrt(k2) * (tan_d + tan_dm) / 2
        alpha_c = modes.attenuation_tem(geom.coax, f).alpha_c
    elif mode.mode.family == modes.TE:
        if np.any(~mode.propagates(f)):
            raise BelowCutoffError("{} does not propagate in the filter at {:.6g} GHz".format(
                mode.mode, float(np.min(f)) / 1e9))
        k_c = mode.k_c
        gradient, axial = _te_integrals(mode.mode.n, k_c * geom.coax.a, k_c * geom.coax.b)
        weight = modes.azimuthal_weight(mode.mode.n)
        beta = np.sqrt(omega ** 2 * eps_r * mu_r / CONSTANTS.c ** 2 - k_c ** 2 + 0j)
        beta = np.where(np.imag(beta) > 0, -beta, beta)
        w_mu = omega * CONSTANTS.mu0 * mu_r
        p0 = 0.5 * np.real(w_mu * np.conj(beta)) * weight * gradient / k_c ** 4
        p_d = 0.5 * omega * CONSTANTS.eps0 * eps_pp * np.abs(w_mu) ** 2 * weight * gradient / k_c ** 4
        p_m = 0.5 * omega * CONSTANTS.mu0 * mu_pp * weight * (np.abs(beta) ** 2 * gradient / k_c ** 4
                                                               + axial / k_c ** 2)
        small_loss = k2 * (tan_d + tan_dm) / (2 * np.sqrt(k2 - k_c ** 2))
        powers = modes.power_integrals(geom.coax, mode, f)
        alpha_c = NP_TO_DB * powers.Pl / (2 * powers.P0)
    else:
        raise FluxInputError("The filter model covers TEM and TE modes, not {}".format(mode.mode))
    return LossBreakdown(alpha_c=alpha_c, alpha_dm=NP_TO_DB * (p_d + p_m) / (2 * p0),
                         alpha_dm_small_loss=NP_TO_DB * small_loss, P_d=p_d, P_m=p_m, P0=p0)


def photon_entry(N1, Z1, Z2, mode=None):
    """ Occupation transmitted across an impedance step: N1*(1 - |(Z2 - Z1)/(Z2 + Z1)|^2). """
    Z1 = np.asarray(Z1)
    Z2 = np.asarray(Z2)
    total = Z1 + Z2
    if np.any(total == 0):
        raise ImpedanceSingularityError("Z1 + Z2 = 0 at the filter entry{}".format(
            "" if mode is None else " for {}".format(mode)))
    reflection = np.abs((Z2 - Z1) / total) ** 2
    return N1 * (1 - reflection)


def entry_impedances(cable, geom, mode_id, f):
    """
    Impedances seen on both sides of the cable-to-filter interface: characteristic impedances for
    TEM, wave impedances for TE modes.
    """
    if mode_id.family == modes.TEM:
        return modes.coax_impedance(cable, f), filter_impedance(geom, f)
    eps_1, mu_1 = interpolate_material(cable.dielectric, f)
    eps_2, mu_2 = interpolate_material(geom.fill, f)
    return (wave_impedance(eps_1, mu_1, modes.cutoff_wavevector(cable, mode_id), f),
            wave_impedance(eps_2, mu_2, modes.cutoff_wavevector(geom.coax, mode_id), f))


@dataclass(frozen=True, eq=False)
class MeasuredS21:
    """
    Transmission of a through line and of one or more filters measured on the same grid.
    :param f_hz: frequency grid [Hz]
    :param thru_db: through-line S21 [dB]
    :param filters_db: 2-D array, one column per filter [dB]
    """
    f_hz: np.ndarray
    thru_db: np.ndarray
    filters_db: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "f_hz", np.asarray(self.f_hz, dtype=float))
        object.__setattr__(self, "thru_db", np.asarray(self.thru_db, dtype=float))
        object.__setattr__(self, "filters_db", np.atleast_2d(np.asarray(self.filters_db, dtype=float).T).T)
        if self.f_hz.size == 0 or np.any(np.diff(self.f_hz) <= 0):
            raise MeasurementInputError("Measured S21 needs a non-empty, strictly increasing frequency column")
        if self.thru_db.shape != self.f_hz.shape or self.filters_db.shape[0] != self.f_hz.size:
            raise MeasurementInputError("Measured S21 columns do not match the frequency column")

    def covers(self, f):
        f = np.asarray(f, dtype=float)
        return (f >= self.f_hz[0]) & (f <= self.f_hz[-1])

    def mean_s21_db(self):
        """ Filter-averaged S21 corrected by the through line [dB]. """
        return np.mean(self.filters_db, axis=1) - self.thru_db

    def insertion_db(self, f):
        """ Attenuation 10*log10(A) with A = 10^(-mean_s21/10), interpolated to f and clipped at 0 dB. """
        attenuation = -np.interp(np.asarray(f, dtype=float), self.f_hz, self.mean_s21_db())
        if np.any(attenuation < 0):
            logger.warning("[Filter] Measured S21 shows gain at %d frequencies; clipping to 0 dB",
                           int(np.sum(attenuation < 0)))
        return np.maximum(attenuation, 0.0)


def residual_flux(chain_output, geom, cable, measured_s21=None, T_filter=None):
    """
    Photon occupation behind a filter placed at the cold end of a wiring chain.

    Where the fill table covers f the photons pass the entry reflection and then the filter acts as
    an attenuator of alpha_dm*l dB; elsewhere the measured S21 average gives the attenuation. Both
    paths thermalise towards the filter temperature.
    :type chain_output: flux.FluxSpectrum
    :type geom: FilterGeometry
    :param cable: CoaxGeometry of the line feeding the filter
    :type measured_s21: MeasuredS21
    :param T_filter: filter temperature [K], defaults to the chain end temperature
    :rtype: flux.FluxSpectrum
    """
    f = chain_output.f_hz
    T = chain_output.T_end if T_filter is None else T_filter
    if T is None:
        raise FluxInputError("Filter temperature is unknown; pass T_filter")
    from_fill = geom.fill.covers(f)
    from_measurement = ~from_fill
    if np.any(from_measurement):
        if measured_s21 is None:
            raise MeasurementInputError("{} frequencies lie outside the fill table ({:.4g}-{:.4g} GHz) and no "
                                        "measured S21 was supplied".format(int(np.sum(from_measurement)),
                                                                           geom.fill.f_min / 1e9,
                                                                           geom.fill.f_max / 1e9))
        if not np.all(measured_s21.covers(f[from_measurement])):
            raise MeasurementInputError("Measured S21 does not cover every frequency outside the fill table")
        insertion = np.zeros_like(f)
        insertion[from_measurement] = measured_s21.insertion_db(f[from_measurement])

    per_mode = {}
    for mode_id, N in chain_output.per_mode.items():
        out = np.zeros_like(N)
        live = N > 0
        fill_path = live & from_fill
        if np.any(fill_path):
            f_fill = f[fill_path]
            fm = filter_mode(geom, mode_id, f_fill[0])
            inside = fm.propagates(f_fill)
            values = flux.bose_einstein(f_fill, T) * np.ones_like(f_fill)
            if np.any(inside):
                f_on = f_fill[inside]
                Z1, Z2 = entry_impedances(cable, geom, mode_id, f_on)
                entered = photon_entry(N[fill_path][inside], Z1, Z2, mode_id)
                loss_db = filter_attenuation(geom, fm, f_on).material_loss_db(geom.length)
                values[inside] = flux.apply_attenuator(entered, loss_db, T, f_on)
            out[fill_path] = values
        measured_path = live & from_measurement
        if np.any(measured_path):
            out[measured_path] = flux.apply_attenuator(N[measured_path], insertion[measured_path], T,
                                                       f[measured_path])
        per_mode[mode_id] = out
    result = flux.FluxSpectrum(f_hz=f, per_mode=per_mode, band=chain_output.band, scenario=chain_output.scenario,
                               T_end=T)
    logger.info("[Filter] Band flux behind the filter %.6g photons/s", result.band_flux)
    return result
