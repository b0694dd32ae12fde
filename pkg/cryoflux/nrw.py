""" Nicolson-Ross-Weir extraction of complex permittivity and permeability from two-port
S-parameters of a material-filled rectangular waveguide section (TE10 operation), the forward
slab model it inverts, and multi-thickness resolution of the phase-branch ambiguity.

Time dependence is exp(+j*omega*t); a wave crossing the fill picks up P = exp(-j*k_z*d). """

import functools
import itertools
import logging
import math
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from cryoflux import dask_utils
from cryoflux.constants import CONSTANTS
from cryoflux.errors import BranchAmbiguityError, NrwDegenerateError, NrwDomainError
from cryoflux.materials import ABSORBER, MaterialSpectrum

logger = logging.getLogger(__name__)

WR10_A = 2.54e-3
WR10_B = 1.27e-3

DEFAULT_N_MAX = 8
DEFAULT_THRESHOLD = 0.05
DEFAULT_ASYMMETRY_THRESHOLD = 0.05
PASSIVITY_TOLERANCE = 1e-3
DEGENERATE_FLOOR = 1e-12


@dataclass(frozen=True)
class WaveguideSection:
    d: float
    a_wg: float = WR10_A
    b_wg: float = WR10_B

    def __post_init__(self):
        if not self.a_wg > self.b_wg > 0:
            raise ValueError("Waveguide walls must satisfy a_wg > b_wg > 0, got {} / {}".format(self.a_wg, self.b_wg))
        if not self.d > 0:
            raise ValueError("Fill thickness must be positive, got {}".format(self.d))

    @property
    def cutoff_frequency(self):
        """ TE10 cutoff of the empty guide [Hz]. """
        return CONSTANTS.c / (2 * self.a_wg)

    def empty_kz(self, f):
        return np.sqrt((2 * math.pi * np.asarray(f, dtype=float) / CONSTANTS.c) ** 2 - (math.pi / self.a_wg) ** 2)


class SParamRecord(namedtuple("SParamRecord", ["f", "S11", "S21", "S12", "S22"])):
    __slots__ = ()

    def __new__(cls, f, S11, S21, S12=None, S22=None):
        return super(SParamRecord, cls).__new__(cls, f, S11, S21, S12, S22)


def records_from_arrays(f, S11, S21, S12=None, S22=None):
    f = np.atleast_1d(f)
    columns = [np.broadcast_to(np.asarray(c, dtype=complex), f.shape) if c is not None else None
               for c in (S11, S21, S12, S22)]
    return [SParamRecord(float(f[i]), *[complex(c[i]) if c is not None else None for c in columns])
            for i in range(f.size)]


def records_to_arrays(records):
    """ (f, S11, S21, S12, S22) arrays; S12/S22 are None unless every record carries them. """
    f = np.array([r.f for r in records], dtype=float)
    s11 = np.array([r.S11 for r in records], dtype=complex)
    s21 = np.array([r.S21 for r in records], dtype=complex)
    s12 = np.array([r.S12 for r in records], dtype=complex) if all(r.S12 is not None for r in records) else None
    s22 = np.array([r.S22 for r in records], dtype=complex) if all(r.S22 is not None for r in records) else None
    return f, s11, s21, s12, s22


def warn_if_active(records, tolerance=PASSIVITY_TOLERANCE):
    """ Logs a warning for |S| > 1 + tolerance; returns the number of offending records. """
    offending = [r.f for r in records
                 if any(s is not None and abs(s) > 1 + tolerance for s in (r.S11, r.S21, r.S12, r.S22))]
    if offending:
        logger.warning("[NRW] %d records exceed |S| = 1 (first at %.6g GHz); data may be miscalibrated",
                       len(offending), offending[0] / 1e9)
    return len(offending)


@dataclass(frozen=True)
class NrwSolution:
    f: float
    branch: int
    Gamma: complex
    P: complex
    k_z: complex
    eps_r: complex
    mu_r: complex

    @property
    def tan_delta(self):
        return -self.eps_r.imag / self.eps_r.real

    @property
    def tan_delta_m(self):
        return -self.mu_r.imag / self.mu_r.real


def filled_kz(eps_r, mu_r, section, f):
    """ Axial wavevector in the fill on the decaying branch (Re >= 0, Im <= 0). """
    omega = 2 * math.pi * np.asarray(f, dtype=float)
    k_z = np.sqrt(omega ** 2 * eps_r * mu_r / CONSTANTS.c ** 2 - (math.pi / section.a_wg) ** 2 + 0j)
    return np.where(np.imag(k_z) > 0, -k_z, k_z)


def forward_slab(eps_r, mu_r, section, f):
    """
    S-parameters of a fill of thickness section.d between two empty guides.
    :param eps_r: complex permittivity, scalar or per frequency
    :param mu_r: complex permeability, scalar or per frequency
    :type section: WaveguideSection
    :param f: frequency [Hz], above the empty-guide cutoff
    :return: SParamRecord for scalar f, list of SParamRecord otherwise
    """
    f_arr = np.asarray(f, dtype=float)
    _check_domain(np.atleast_1d(f_arr), section)
    k_z0 = section.empty_kz(f_arr)
    k_z = filled_kz(eps_r, mu_r, section, f_arr)
    gamma = (mu_r * k_z0 - k_z) / (mu_r * k_z0 + k_z)
    p = np.exp(-1j * k_z * section.d)
    denominator = 1 - gamma ** 2 * p ** 2
    s11 = gamma * (1 - p ** 2) / denominator
    s21 = p * (1 - gamma ** 2) / denominator
    if f_arr.ndim == 0:
        return SParamRecord(float(f_arr), complex(s11), complex(s21), complex(s21), complex(s11))
    return records_from_arrays(f_arr, s11, s21, s21, s11)


def _check_domain(f, section):
    if np.any(f <= section.cutoff_frequency):
        raise NrwDomainError("Band reaches the empty-guide cutoff {:.6g} GHz (lowest frequency {:.6g} GHz)".format(
            section.cutoff_frequency / 1e9, float(np.min(f)) / 1e9))


def symmetric_reflection(s11, s22, threshold=DEFAULT_ASYMMETRY_THRESHOLD):
    """ S11 averaged with S22 when both are known; warns when they disagree by more than threshold. """
    if s22 is None:
        return s11
    asymmetry = float(np.max(np.abs(s11 - s22)))
    if asymmetry > threshold:
        logger.warning("[NRW] S11 and S22 differ by up to %.4g; averaging them", asymmetry)
    return 0.5 * (s11 + s22)


def interface_reflection(s11, s21):
    """
    Interfacial reflection coefficient from the NRW quadratic, root with |Gamma| <= 1.

    The roots are 2*S11/(K +/- sqrt(K^2 - 4*S11^2)) with K = 1 - S21^2 + S11^2; their product is one,
    so the larger denominator gives the passive root.
    """
    s11 = np.asarray(s11, dtype=complex)
    s21 = np.asarray(s21, dtype=complex)
    k = 1 - s21 ** 2 + s11 ** 2
    if np.any((np.abs(k) < DEGENERATE_FLOOR) & (np.abs(2 * s11) < DEGENERATE_FLOOR)):
        raise NrwDegenerateError("Reflection coefficient is undetermined: both K and 2*S11 vanish")
    root = np.sqrt(k ** 2 - 4 * s11 ** 2)
    plus, minus = k + root, k - root
    denominator = np.where(np.abs(plus) >= np.abs(minus), plus, minus)
    return 2 * s11 / denominator


def propagation_factor(s11, s21, gamma):
    """ P = (S11 + S21 - Gamma)/(1 - (S11 + S21)*Gamma). """
    denominator = 1 - (s11 + s21) * gamma
    if np.any(np.abs(denominator) < DEGENERATE_FLOOR):
        raise NrwDegenerateError("Propagation factor is undetermined (|Gamma| = 1 fill)")
    return (s11 + s21 - gamma) / denominator


def unwrapped_phase(p):
    """ Continuous phase of P across the sweep, starting from the principal value. """
    return np.unwrap(np.angle(p))


def nrw_invert(records, section, branch, asymmetry_threshold=DEFAULT_ASYMMETRY_THRESHOLD):
    """
    Complex eps_r and mu_r on phase branch n for every record of a sweep.

    Re(k_z) = (2*pi*n - phi)/d with phi the unwrapped phase of P, and Im(k_z) = ln|P|/d.
    :param records: SParamRecord list sorted by frequency
    :type section: WaveguideSection
    :param branch: integer n >= 0
    :rtype: list of NrwSolution
    """
    if branch < 0:
        raise ValueError("Branch index must be >= 0, got {}".format(branch))
    f, s11, s21, _, s22 = records_to_arrays(records)
    if f.size == 0:
        raise NrwDomainError("No S-parameter records to invert")
    if np.any(np.diff(f) <= 0):
        raise NrwDomainError("S-parameter records must be sorted by strictly increasing frequency")
    _check_domain(f, section)
    s11 = symmetric_reflection(s11, s22, asymmetry_threshold)

    gamma = interface_reflection(s11, s21)
    p = propagation_factor(s11, s21, gamma)
    phi = unwrapped_phase(p)
    k_z = (2 * math.pi * branch - phi) / section.d + 1j * np.log(np.abs(p)) / section.d

    k_z0 = section.empty_kz(f)
    impedance_ratio = (1 - gamma) / (1 + gamma)
    mu_r = k_z / (k_z0 * impedance_ratio)
    omega = 2 * math.pi * f
    eps_r = CONSTANTS.c ** 2 * (k_z ** 2 + (math.pi / section.a_wg) ** 2) / (omega ** 2 * mu_r)
    return [NrwSolution(f=float(f[i]), branch=int(branch), Gamma=complex(gamma[i]), P=complex(p[i]),
                        k_z=complex(k_z[i]), eps_r=complex(eps_r[i]), mu_r=complex(mu_r[i]))
            for i in range(f.size)]


def invert_branches(records, section, n_max=DEFAULT_N_MAX, asymmetry_threshold=DEFAULT_ASYMMETRY_THRESHOLD,
                    scheduler=dask_utils.DEFAULT_SCHEDULER):
    """ Solutions on branches 0..n_max as a dict branch -> list of NrwSolution. """
    invert = functools.partial(nrw_invert, records, section, asymmetry_threshold=asymmetry_threshold)
    solutions = dask_utils.parallel_map(invert, range(n_max + 1), scheduler=scheduler)
    return dict(zip(range(n_max + 1), solutions))


def nearest_branch(solutions_by_branch, k_z_reference):
    """ Branch whose k_z sweep stays closest (mean absolute distance) to a reference k_z sweep. """
    distance = {n: float(np.mean(np.abs(np.array([s.k_z for s in sols]) - k_z_reference)))
                for n, sols in solutions_by_branch.items()}
    return min(distance, key=distance.get)


def _columns(solutions):
    f = np.array([s.f for s in solutions])
    eps = np.array([s.eps_r for s in solutions])
    mu = np.array([s.mu_r for s in solutions])
    return f, eps, mu


def _interp_complex(f_target, f, values):
    return np.interp(f_target, f, values.real) + 1j * np.interp(f_target, f, values.imag)


def branch_discrepancy(solutions_a, solutions_b):
    """
    Band-averaged relative disagreement of eps' and mu' between two solution sweeps, evaluated on
    the part of sweep A that sweep B covers.
    """
    f_a, eps_a, mu_a = _columns(solutions_a)
    f_b, eps_b, mu_b = _columns(solutions_b)
    overlap = (f_a >= f_b[0]) & (f_a <= f_b[-1])
    if not np.any(overlap):
        return np.inf
    eps_b_on_a = np.interp(f_a[overlap], f_b, eps_b.real)
    mu_b_on_a = np.interp(f_a[overlap], f_b, mu_b.real)
    with np.errstate(divide="ignore", invalid="ignore"):
        d_eps = np.abs(eps_a.real[overlap] - eps_b_on_a) / np.abs(eps_a.real[overlap])
        d_mu = np.abs(mu_a.real[overlap] - mu_b_on_a) / np.abs(mu_a.real[overlap])
    score = float(np.mean(d_eps + d_mu) / 2)
    return score if np.isfinite(score) else np.inf


BranchCandidate = namedtuple("BranchCandidate", ["discrepancy", "d_a", "n_a", "d_b", "n_b"])


@dataclass(frozen=True, eq=False)
class BranchSelection:
    best: BranchCandidate
    merged: list
    candidates: list


def merge_solutions(solutions_a, solutions_b, branch, d):
    """ Per-frequency mean of two solution sweeps on the frequency grid of the first. """
    f_a = np.array([s.f for s in solutions_a])
    f_b = np.array([s.f for s in solutions_b])
    overlap = (f_a >= f_b[0]) & (f_a <= f_b[-1])
    b_fields = {name: _interp_complex(f_a[overlap], f_b, np.array([getattr(s, name) for s in solutions_b]))
                for name in ("Gamma", "k_z", "eps_r", "mu_r")}
    merged = []
    for j, i in enumerate(np.flatnonzero(overlap)):
        a = solutions_a[i]
        k_z = 0.5 * (a.k_z + b_fields["k_z"][j])
        merged.append(NrwSolution(f=a.f, branch=branch,
                                  Gamma=complex(0.5 * (a.Gamma + b_fields["Gamma"][j])),
                                  P=complex(np.exp(-1j * k_z * d)), k_z=complex(k_z),
                                  eps_r=complex(0.5 * (a.eps_r + b_fields["eps_r"][j])),
                                  mu_r=complex(0.5 * (a.mu_r + b_fields["mu_r"][j]))))
    return merged


def disambiguate_branches(solutions_by_thickness, n_max=DEFAULT_N_MAX, threshold=DEFAULT_THRESHOLD,
                          keep_candidates=5):
    """
    Picks the branch pair of two thicknesses whose eps' and mu' agree best across the band.

    The true branch gives thickness-independent material parameters; any other branch scales
    Re(k_z) by a thickness-dependent amount and the two sweeps separate.
    :param solutions_by_thickness: dict d [m] -> dict branch -> list of NrwSolution
    :param threshold: largest acceptable band-averaged relative discrepancy
    :rtype: BranchSelection
    """
    thicknesses = sorted(solutions_by_thickness)
    if len(thicknesses) < 2:
        raise BranchAmbiguityError("Branch disambiguation needs at least two distinct thicknesses, got {}".format(
            len(thicknesses)))
    candidates = []
    for d_a, d_b in itertools.combinations(thicknesses, 2):
        for n_a in range(n_max + 1):
            for n_b in range(n_max + 1):
                sols_a = solutions_by_thickness[d_a].get(n_a)
                sols_b = solutions_by_thickness[d_b].get(n_b)
                if not sols_a or not sols_b:
                    continue
                candidates.append(BranchCandidate(branch_discrepancy(sols_a, sols_b), d_a, n_a, d_b, n_b))
    candidates.sort()
    if not candidates or not candidates[0].discrepancy <= threshold:
        raise BranchAmbiguityError("No branch pair agrees within {:.3g}; best candidates: {}".format(
            threshold, ", ".join("d={:.4g} mm n={} / d={:.4g} mm n={} ({:.3g})".format(
                c.d_a * 1e3, c.n_a, c.d_b * 1e3, c.n_b, c.discrepancy) for c in candidates[:keep_candidates])),
            candidates=candidates[:keep_candidates])
    best = candidates[0]
    logger.info("[NRW] Selected branch %d at %.4g mm and %d at %.4g mm (discrepancy %.3g)",
                best.n_a, best.d_a * 1e3, best.n_b, best.d_b * 1e3, best.discrepancy)
    merged = merge_solutions(solutions_by_thickness[best.d_a][best.n_a],
                             solutions_by_thickness[best.d_b][best.n_b], best.n_a, best.d_a)
    return BranchSelection(best=best, merged=merged, candidates=candidates[:keep_candidates])


def solutions_to_material(solutions, name="extracted", provenance="NRW extraction"):
    """ Absorber MaterialSpectrum from a solution sweep; small negative loss parts are clipped to zero. """
    f, eps, mu = _columns(solutions)
    eps_pp, mu_pp = -eps.imag, -mu.imag
    if np.any(eps_pp < 0) or np.any(mu_pp < 0):
        logger.warning("[NRW] Clipping %d negative loss values of %s to zero",
                       int(np.sum(eps_pp < 0) + np.sum(mu_pp < 0)), name)
    return MaterialSpectrum(name=name, kind=ABSORBER, f_hz=f, eps_p=eps.real, eps_pp=np.clip(eps_pp, 0, None),
                            mu_p=mu.real, mu_pp=np.clip(mu_pp, 0, None), provenance=provenance)
