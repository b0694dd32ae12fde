""" Material property tables for conductors, dielectrics and absorbers.

Relative permittivity and permeability follow the engineering convention
eps_r = eps' - j*eps'' and mu_r = mu' - j*mu'' with eps'', mu'' >= 0 for passive media.
Tables are interpolated linearly in frequency. """

import logging
from dataclasses import dataclass, field

import numpy as np

from cryoflux.errors import InvalidMaterialError, MaterialRangeError

logger = logging.getLogger(__name__)

CONDUCTOR = "conductor"
DIELECTRIC = "dielectric"
ABSORBER = "absorber"
material_kinds = [CONDUCTOR, DIELECTRIC, ABSORBER]

TABLE_COLUMNS = ("f_hz", "eps_p", "eps_pp", "mu_p", "mu_pp")


@dataclass(frozen=True, eq=False)
class MaterialSpectrum:
    """
    Frequency-tabulated electromagnetic properties of a material.
    :param name: identifier used in logs and output files
    :param kind: one of material_kinds
    :param f_hz: strictly increasing frequency nodes [Hz]
    :param eps_p, eps_pp, mu_p, mu_pp: real/imaginary parts at the nodes
    :param sigma: electrical conductivity [S/m], conductors only
    :param constant: a single-row table valid at every frequency
    :param provenance: free text describing where the numbers come from
    """
    name: str
    kind: str
    f_hz: np.ndarray
    eps_p: np.ndarray
    eps_pp: np.ndarray
    mu_p: np.ndarray
    mu_pp: np.ndarray
    sigma: float = None
    constant: bool = False
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in material_kinds:
            raise InvalidMaterialError("Unknown material kind '{}' for {}".format(self.kind, self.name))
        columns = {}
        for column in TABLE_COLUMNS:
            values = np.atleast_1d(np.asarray(getattr(self, column), dtype=float))
            values.setflags(write=False)
            object.__setattr__(self, column, values)
            columns[column] = values
        sizes = {values.size for values in columns.values()}
        if len(sizes) != 1 or 0 in sizes:
            raise InvalidMaterialError("Material {} has ragged or empty table columns".format(self.name))
        if np.any(np.diff(self.f_hz) <= 0):
            raise InvalidMaterialError("Material {}: frequency rows must be strictly increasing".format(self.name))
        if np.any(self.eps_pp < 0) or np.any(self.mu_pp < 0):
            raise InvalidMaterialError("Material {}: eps'' and mu'' must be non-negative (passive)".format(self.name))
        if self.kind == DIELECTRIC and np.any(self.eps_p < 1):
            raise InvalidMaterialError("Material {}: eps' < 1 for a passive dielectric".format(self.name))
        if self.kind == CONDUCTOR:
            if self.sigma is None or not self.sigma > 0:
                raise InvalidMaterialError("Conductor {} needs a positive conductivity, got {}".format(self.name,
                                                                                                      self.sigma))
        if self.constant and self.f_hz.size != 1:
            raise InvalidMaterialError("Constant material {} must have exactly one row".format(self.name))

    @property
    def tan_delta(self):
        return self.eps_pp / self.eps_p

    @property
    def tan_delta_m(self):
        return self.mu_pp / self.mu_p

    @property
    def f_min(self):
        return float(self.f_hz[0])

    @property
    def f_max(self):
        return float(self.f_hz[-1])

    def covers(self, f):
        """ True where the table can be queried without extrapolation. """
        f = np.asarray(f, dtype=float)
        if self.constant:
            return np.ones(f.shape, dtype=bool)
        return (f >= self.f_min) & (f <= self.f_max)


def constant_material(name, kind, eps_p=1.0, tan_delta=0.0, mu_p=1.0, tan_delta_m=0.0, sigma=None, provenance=""):
    """ Material described by frequency-independent values. """
    return MaterialSpectrum(name=name, kind=kind, f_hz=[0.0],
                            eps_p=[eps_p], eps_pp=[eps_p * tan_delta],
                            mu_p=[mu_p], mu_pp=[mu_p * tan_delta_m],
                            sigma=sigma, constant=True, provenance=provenance)


def interpolate_material(material, f, extrapolate=False):
    """
    Complex relative permittivity and permeability at frequency f.
    :param material: material to query
    :param f: frequency [Hz], scalar or array
    :param extrapolate: hold the edge rows outside the table instead of raising
    :type material: MaterialSpectrum
    :return: (eps_r, mu_r), complex, same shape as f
    """
    f_arr = np.asarray(f, dtype=float)
    if material.constant:
        eps_r = np.full(f_arr.shape, material.eps_p[0] - 1j * material.eps_pp[0])
        mu_r = np.full(f_arr.shape, material.mu_p[0] - 1j * material.mu_pp[0])
    else:
        inside = material.covers(f_arr)
        if not np.all(inside):
            outside = f_arr[~inside]
            if not extrapolate:
                raise MaterialRangeError("Frequency {:.6g} Hz outside the {} table [{:.6g}, {:.6g}] Hz".format(
                    float(np.ravel(outside)[0]), material.name, material.f_min, material.f_max))
            logger.warning("[Material] Holding edge values of %s for %d out-of-range frequencies",
                           material.name, outside.size)
        # np.interp holds the edge values outside the nodes, which keeps extrapolation passive
        parts = [np.interp(f_arr, material.f_hz, getattr(material, column)) for column in TABLE_COLUMNS[1:]]
        eps_r = parts[0] - 1j * parts[1]
        mu_r = parts[2] - 1j * parts[3]
    if np.ndim(f) == 0:
        return complex(eps_r), complex(mu_r)
    return eps_r, mu_r


PTFE = constant_material("ptfe", DIELECTRIC, eps_p=2.08, tan_delta=0.0004,
                         provenance="PTFE dielectric of semi-rigid cryogenic coax, room temperature")
VACUUM = constant_material("vacuum", DIELECTRIC, provenance="free space")
STAINLESS_STEEL = constant_material("stainless_steel", CONDUCTOR, sigma=1.41e6,
                                    provenance="stainless steel cable conductors, room temperature")
COPPER = constant_material("copper", CONDUCTOR, sigma=67e6, provenance="copper, room temperature")

builtin_materials = {material.name: material for material in (PTFE, VACUUM, STAINLESS_STEEL, COPPER)}


def builtin_material(name):
    try:
        return builtin_materials[name.lower()]
    except KeyError:
        raise InvalidMaterialError("Unknown built-in material '{}'. Expected one of: {}".format(
            name, ", ".join(sorted(builtin_materials))))
