""" Noise-photon transport along a cryostat wiring chain.

The occupation N(f, x) of each propagating mode relaxes towards the local Bose-Einstein
occupation at a rate set by the line attenuation, and drops abruptly across every attenuator.
Modes start fully thermalised at the room-temperature end and are summed at the cold end. """

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from cryoflux import dask_utils, modes
from cryoflux.constants import CONSTANTS
from cryoflux.errors import FluxInputError, IntegrationError

logger = logging.getLogger(__name__)

SCENARIO_ACTIVE = "active"
SCENARIO_BYPASSED = "bypassed"
scenarios = [SCENARIO_ACTIVE, SCENARIO_BYPASSED]

ROOM_TEMPERATURE = 300.0
DEFAULT_TEMPERATURES = (300.0, 35.0, 2.85, 0.882, 0.082, 0.006)
DEFAULT_LENGTHS = (0.228, 0.271, 0.263, 0.231, 0.306)
DEFAULT_ATTENUATORS = (0.0, 20.0, 0.0, 20.0, 20.0)

DEFAULT_STEP_HZ = 0.25e9
CUTOFF_NODE_OFFSET = 1e-6

RK4_STEPS = 1000
CONVERGENCE_RTOL = 1e-6
# the error gate is relative to the largest occupation a segment can carry at each frequency,
# max(N_in, n_BE(T_hot)); outputs far below that scale are not held to CONVERGENCE_RTOL
CONVERGENCE_ATOL = 1e-300
MAX_STIFF_STEPS = 10 ** 6

DB_TO_RATE = math.log(10) / 10


def bose_einstein(f, T):
    """
    Mean photon occupation 1/(exp(h*f/(k_B*T)) - 1).
    :param f: frequency [Hz], > 0
    :param T: temperature [K], > 0
    """
    f = np.asarray(f, dtype=float)
    T = np.asarray(T, dtype=float)
    if np.any(f <= 0) or np.any(T <= 0):
        raise ValueError("bose_einstein needs f > 0 and T > 0")
    with np.errstate(over="ignore"):
        value = 1.0 / np.expm1(CONSTANTS.h * f / (CONSTANTS.k_B * T))
    return value if value.ndim else float(value)


@dataclass(frozen=True)
class StageSegment:
    T_hot: float
    T_cold: float
    length: float
    attenuator_db: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise FluxInputError("Segment length must be positive, got {}".format(self.length))
        if not (self.T_hot > 0 and self.T_cold > 0):
            raise FluxInputError("Segment temperatures must be positive, got {} K / {} K".format(self.T_hot,
                                                                                                  self.T_cold))
        if self.attenuator_db < 0:
            raise FluxInputError("Attenuator value must be >= 0 dB, got {}".format(self.attenuator_db))

    def temperature(self, x):
        """ Linear temperature profile, x in [0, length] from the hot end. """
        return self.T_hot + (self.T_cold - self.T_hot) * np.asarray(x, dtype=float) / self.length


@dataclass(frozen=True, eq=False)
class CryostatChain:
    segments: tuple
    cable: modes.CoaxGeometry

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise FluxInputError("A cryostat chain needs at least one segment")
        for upper, lower in zip(segments[:-1], segments[1:]):
            if not math.isclose(upper.T_cold, lower.T_hot, rel_tol=1e-12):
                raise FluxInputError("Stage temperatures do not chain: {} K then {} K".format(upper.T_cold,
                                                                                              lower.T_hot))
        object.__setattr__(self, "segments", segments)

    @property
    def T_room(self):
        return self.segments[0].T_hot

    @property
    def T_end(self):
        return self.segments[-1].T_cold

    @property
    def total_length(self):
        return sum(segment.length for segment in self.segments)


def build_chain(cable, temperatures, lengths, attenuators, length_scale=1.0):
    """ Chain from per-stage lists; len(temperatures) == len(lengths) + 1 == len(attenuators) + 1. """
    if len(temperatures) != len(lengths) + 1 or len(attenuators) != len(lengths):
        raise FluxInputError("Chain needs one more temperature than lengths and one attenuator per length "
                             "(got {}, {}, {})".format(len(temperatures), len(lengths), len(attenuators)))
    if not length_scale > 0:
        raise FluxInputError("length_scale must be positive, got {}".format(length_scale))
    segments = [StageSegment(T_hot=temperatures[i], T_cold=temperatures[i + 1],
                             length=lengths[i] * length_scale, attenuator_db=attenuators[i])
                for i in range(len(lengths))]
    return CryostatChain(segments=tuple(segments), cable=cable)


def default_chain(cable, length_scale=1.0):
    """ Room temperature to mixing chamber wiring of a dilution refrigerator. """
    return build_chain(cable, DEFAULT_TEMPERATURES, DEFAULT_LENGTHS, DEFAULT_ATTENUATORS, length_scale)


def _relaxation_rhs(N, x, rate, segment, f):
    return rate * (bose_einstein(f, segment.temperature(x)) - N)


def _rk4(N_in, segment, rate, f, steps):
    h = segment.length / steps
    N = np.array(N_in, dtype=float, copy=True)
    x = 0.0
    for _ in range(steps):
        k1 = _relaxation_rhs(N, x, rate, segment, f)
        k2 = _relaxation_rhs(N + 0.5 * h * k1, x + 0.5 * h, rate, segment, f)
        k3 = _relaxation_rhs(N + 0.5 * h * k2, x + 0.5 * h, rate, segment, f)
        k4 = _relaxation_rhs(N + h * k3, x + h, rate, segment, f)
        N = N + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        x += h
    return N


def propagate_segment(N_in, segment, alpha_db, f, steps=RK4_STEPS):
    """
    Integrates dN/dx = (alpha*ln10/10)*(n_BE(f, T(x)) - N) over one segment with classical RK4.

    The step count is raised where alpha*L would make the explicit scheme unstable, and the result
    is checked against a run at twice the resolution, relative to the larger of the entering
    occupation and n_BE at the hot end.
    :param N_in: occupation entering the hot end, broadcastable against f
    :param segment: StageSegment
    :param alpha_db: attenuation [dB/m] per frequency, >= 0; inf marks full thermalisation
    :param f: frequency [Hz]
    """
    f = np.atleast_1d(np.asarray(f, dtype=float))
    alpha_db = np.broadcast_to(np.asarray(alpha_db, dtype=float), f.shape)
    N_in = np.broadcast_to(np.asarray(N_in, dtype=float), f.shape)
    if np.any(alpha_db < 0) or np.any(np.isnan(alpha_db)):
        raise FluxInputError("Attenuation must be non-negative")
    N_out = np.array(N_in, dtype=float, copy=True)

    # beyond ~700 e-folds the hot-end memory is gone to double precision
    thermal = alpha_db * DB_TO_RATE * segment.length > 700
    N_out[thermal] = bose_einstein(f[thermal], segment.T_cold)
    active = ~thermal & (alpha_db > 0)
    if not np.any(active):
        return N_out

    rate = alpha_db[active] * DB_TO_RATE
    stiff_steps = int(math.ceil(float(np.max(rate)) * segment.length))
    if stiff_steps > steps:
        if stiff_steps > MAX_STIFF_STEPS:
            raise IntegrationError("Segment {:.4g} K -> {:.4g} K needs {} RK4 steps".format(
                segment.T_hot, segment.T_cold, stiff_steps), diagnostics={"steps": stiff_steps})
        logger.warning("[Flux] Raising RK4 steps from %d to %d for a stiff segment (%.4g K -> %.4g K)",
                       steps, stiff_steps, segment.T_hot, segment.T_cold)
        steps = stiff_steps

    coarse = _rk4(N_in[active], segment, rate, f[active], steps)
    fine = _rk4(N_in[active], segment, rate, f[active], 2 * steps)
    error = np.abs(fine - coarse)
    scale = np.maximum(np.abs(N_in[active]), bose_einstein(f[active], segment.T_hot))
    tolerance = CONVERGENCE_RTOL * np.maximum(np.abs(fine), scale) + CONVERGENCE_ATOL
    if np.any(error > tolerance):
        worst = int(np.argmax(error / tolerance))
        raise IntegrationError("RK4 did not converge on segment {:.4g} K -> {:.4g} K".format(
            segment.T_hot, segment.T_cold),
            diagnostics={"steps": steps, "f_hz": float(f[active][worst]),
                         "coarse": float(coarse[worst]), "fine": float(fine[worst])})
    N_out[active] = fine
    return N_out


def apply_attenuator(N_in, a_db, T, f):
    """ Occupation behind a matched attenuator of a_db dB thermalised at T. """
    if np.any(np.asarray(a_db) < 0):
        raise FluxInputError("Attenuator value must be >= 0 dB, got {}".format(a_db))
    # finite for arbitrarily large a_db
    inv_a = np.power(10.0, -np.asarray(a_db, dtype=float) / 10)
    return N_in * inv_a + (1 - inv_a) * bose_einstein(f, T)


def flux_grid(band, mode_list, step=DEFAULT_STEP_HZ):
    """
    Uniform grid over the band with an extra node just above every cutoff inside it.
    :param band: (f1, f2) [Hz]
    :param mode_list: ModeDispersion objects
    """
    f1, f2 = band
    if not 0 < f1 < f2:
        raise FluxInputError("Band must satisfy 0 < f1 < f2, got {}".format(band))
    n_steps = int(round((f2 - f1) / step))
    grid = np.linspace(f1, f2, max(n_steps, 1) + 1)
    nodes = [md.f_c * (1 + CUTOFF_NODE_OFFSET) for md in mode_list if f1 < md.f_c < f2]
    return np.unique(np.concatenate([grid, nodes]))


@dataclass(frozen=True, eq=False)
class FluxSpectrum:
    """
    Photon occupation at the cold end of the chain.
    :param f_hz: frequency grid
    :param per_mode: dict ModeId -> N(f) [1/(Hz s)]
    :param band: integration band (f1, f2) [Hz]
    """
    f_hz: np.ndarray
    per_mode: dict
    band: tuple
    scenario: str = SCENARIO_ACTIVE
    T_end: float = None
    summed: np.ndarray = field(init=False)
    band_flux: float = field(init=False)

    def __post_init__(self):
        summed = np.zeros_like(self.f_hz, dtype=float)
        for values in self.per_mode.values():
            summed = summed + values
        object.__setattr__(self, "summed", summed)
        object.__setattr__(self, "band_flux", band_integral(self.f_hz, summed, self.band))


def band_integral(f, N, band):
    """ Trapezoidal integral of N over the part of the grid inside the band [1/s]. """
    f1, f2 = band
    if f1 < f[0] * (1 - 1e-12) or f2 > f[-1] * (1 + 1e-12):
        raise FluxInputError("Band [{:.6g}, {:.6g}] Hz is outside the frequency grid".format(f1, f2))
    inside = (f >= f1 * (1 - 1e-12)) & (f <= f2 * (1 + 1e-12))
    return float(integrate.trapezoid(N[inside], f[inside]))


def mode_flux(chain, dispersion, f, scenario=SCENARIO_ACTIVE):
    """ Cold-end occupation of a single mode; zero where the mode is cut off. """
    f = np.asarray(f, dtype=float)
    N = np.zeros_like(f)
    above = dispersion.propagates(f)
    if not np.any(above):
        return N
    f_on = f[above]
    alpha = modes.mode_attenuation_db(chain.cable, dispersion, f_on)
    occupation = bose_einstein(f_on, chain.T_room)
    for segment in chain.segments:
        occupation = propagate_segment(occupation, segment, alpha, f_on)
        if scenario == SCENARIO_ACTIVE:
            occupation = apply_attenuator(occupation, segment.attenuator_db, segment.T_cold, f_on)
    N[above] = occupation
    return N


def _mode_flux_task(args):
    chain, dispersion, f, scenario = args
    return mode_flux(chain, dispersion, f, scenario)


def chain_flux(chain, mode_list, band, scenario=SCENARIO_ACTIVE, step=DEFAULT_STEP_HZ, f=None,
               scheduler=dask_utils.DEFAULT_SCHEDULER):
    """
    Noise-photon spectrum and band flux at the mixing-chamber end of the chain.

    Each mode is injected at n_BE(f, T_room) and contributes only above its cutoff.
    :type chain: CryostatChain
    :param mode_list: ModeDispersion objects of the cable
    :param band: (f1, f2) [Hz]
    :param scenario: SCENARIO_ACTIVE applies attenuator jumps; SCENARIO_BYPASSED ignores them
    :param f: optional explicit grid, otherwise built by flux_grid
    :rtype: FluxSpectrum
    """
    mode_list = list(mode_list)
    if not mode_list:
        raise FluxInputError("chain_flux needs at least one mode")
    if scenario not in scenarios:
        raise FluxInputError("Unknown scenario '{}'. Expected one of: {}".format(scenario, ", ".join(scenarios)))
    f = flux_grid(band, mode_list, step) if f is None else np.asarray(f, dtype=float)
    logger.info("[Flux] %d modes, %d frequencies, scenario %s", len(mode_list), f.size, scenario)
    columns = dask_utils.parallel_map(_mode_flux_task, [(chain, md, f, scenario) for md in mode_list],
                                      scheduler=scheduler)
    spectrum = FluxSpectrum(f_hz=f, per_mode={md.mode: N for md, N in zip(mode_list, columns)},
                            band=tuple(band), scenario=scenario, T_end=chain.T_end)
    logger.info("[Flux] Band flux %.6g photons/s in [%.4g, %.4g] GHz", spectrum.band_flux,
                band[0] / 1e9, band[1] / 1e9)
    return spectrum


def cable_modes(cable, max_f, include_tm=False, max_n=None):
    """ TEM plus every TE (and optionally TM) mode with a cutoff below max_f. """
    max_n = modes.default_max_n(cable, max_f) if max_n is None else max_n
    mode_list = modes.find_cutoffs(cable, modes.TEM, max_n, max_f)
    mode_list += modes.find_cutoffs(cable, modes.TE, max_n, max_f)
    if include_tm:
        mode_list += modes.find_cutoffs(cable, modes.TM, max_n, max_f)
    return mode_list
