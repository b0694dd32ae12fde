""" File handling: Touchstone S-parameter files (through scikit-rf), material and measurement tables,
result tables, input digests and output directories. All tables are read and written with pandas. """

import hashlib
import logging
import os
import pathlib

import numpy as np
import pandas as pd
import skrf

from cryoflux import filters, nrw
from cryoflux.errors import InvalidMaterialError, MeasurementInputError, TouchstoneParseError
from cryoflux.materials import ABSORBER, TABLE_COLUMNS, MaterialSpectrum, builtin_materials

logger = logging.getLogger(__name__)

FORMAT_RI = "RI"
FORMAT_MA = "MA"
FORMAT_DB = "DB"
touchstone_formats = [FORMAT_RI, FORMAT_MA, FORMAT_DB]
# option-line unit -> scikit-rf unit name
frequency_units = {"HZ": "Hz", "KHZ": "kHz", "MHZ": "MHz", "GHZ": "GHz"}

DEFAULT_SIGNIFICANT_DIGITS = 12
NRW_COLUMNS = TABLE_COLUMNS + ("tan_d", "tan_dm", "branch")


def create_directory_tree(path):
    """
    Creates directories for the path specified.
    :param path: The path to create dirs/subdirs for
    :type path: str
    """
    pathlib.Path(str(path)).mkdir(parents=True, exist_ok=True)


def file_digest(path):
    """ SHA-256 hex digest of a file's bytes. """
    sha = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            sha.update(block)
    return sha.hexdigest()


def _first_bad_row(path):
    """ Line number of the first data row holding a non-numeric token, or None. """
    with open(str(path)) as handle:
        for number, line in enumerate(handle, start=1):
            body = line.split("!", 1)[0].strip()
            if not body or body.startswith(("#", "[")):
                continue
            for token in body.split():
                try:
                    float(token)
                except ValueError:
                    return number
    return None


def read_touchstone(path):
    """
    Reads a Touchstone file with scikit-rf; anything it cannot read becomes a TouchstoneParseError
    naming the file and, when it can be located, the offending line.
    :param path: file location, the .sNp extension gives the port count
    :rtype: skrf.Network
    """
    try:
        network = skrf.Network(str(path))
    except OSError:
        raise
    except Exception as err:
        # scikit-rf signals malformed files with assorted exception types
        raise TouchstoneParseError("{}: {}".format(path, err), line_number=_first_bad_row(path)) from err
    if network.f.size == 0:
        raise TouchstoneParseError("no data rows in {}".format(path))
    if np.any(np.diff(network.f) <= 0):
        raise TouchstoneParseError("frequencies must increase strictly in {}".format(path))
    return network


def parse_touchstone(path):
    """
    Two-port Touchstone file as a list of SParamRecord in Hz.
    :rtype: list of nrw.SParamRecord
    """
    network = read_touchstone(path)
    if network.number_of_ports != 2:
        raise TouchstoneParseError("expected a two-port file, found {} ports in {}".format(
            network.number_of_ports, path))
    s = network.s
    records = nrw.records_from_arrays(network.f, s[:, 0, 0], s[:, 1, 0], s[:, 0, 1], s[:, 1, 1])
    nrw.warn_if_active(records)
    logger.debug("[Data] Read %d records from %s", len(records), path)
    return records


def records_to_network(records, unit="GHZ", z0=50.0, name=None):
    """ Two-port records as a skrf.Network; missing S12/S22 are taken as S21/S11. """
    f_hz = np.array([record.f for record in records], dtype=float)
    s = np.empty((len(records), 2, 2), dtype=complex)
    for k, record in enumerate(records):
        s[k, 0, 0] = record.S11
        s[k, 1, 0] = record.S21
        s[k, 0, 1] = record.S21 if record.S12 is None else record.S12
        s[k, 1, 1] = record.S11 if record.S22 is None else record.S22
    frequency = skrf.Frequency.from_f(f_hz, unit="Hz")
    frequency.unit = frequency_units[unit.upper()]
    return skrf.Network(frequency=frequency, s=s, z0=z0, name=name)


def write_touchstone(path, records, fmt=FORMAT_RI, unit="GHZ", z0=50.0, comment=None):
    """
    Writes two-port records as a Touchstone file through scikit-rf.
    :param fmt: RI, MA or DB
    :param unit: HZ, KHZ, MHZ or GHZ
    """
    fmt, unit = fmt.upper(), unit.upper()
    if fmt not in touchstone_formats or unit not in frequency_units:
        raise ValueError("Unsupported Touchstone format/unit {} {}".format(fmt, unit))
    path = pathlib.Path(str(path))
    network = records_to_network(records, unit=unit, z0=z0, name=path.stem)
    if comment:
        network.comments = str(comment)
    network.write_touchstone(filename=path.name, dir=str(path.parent), form=fmt.lower(), skrf_comment=False)


def write_csv(path, frame, delimiter=",", significant_digits=DEFAULT_SIGNIFICANT_DIGITS):
    """ Writes a result table with a fixed float format so that reruns are byte-identical. """
    frame.to_csv(str(path), sep=delimiter, index=False, float_format="%.{}g".format(significant_digits))
    logger.debug("[Data] Wrote %d rows to %s", len(frame), path)


def _read_header_comments(path):
    header = {}
    with open(path, "r") as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            if value:
                header[key.strip().lower()] = value.strip()
    return header


def load_material_csv(path, name=None, kind=ABSORBER):
    """
    Material table with columns f_hz,eps_p,eps_pp,mu_p,mu_pp; extra columns are ignored.

    Leading '# key: value' lines may set name, kind, sigma and provenance.
    :rtype: MaterialSpectrum
    """
    header = _read_header_comments(path)
    table = pd.read_csv(str(path), comment="#", skipinitialspace=True)
    missing = [column for column in TABLE_COLUMNS if column not in table.columns]
    if missing:
        raise InvalidMaterialError("Material table {} lacks columns: {}".format(path, ", ".join(missing)))
    if table.empty:
        raise InvalidMaterialError("Material table {} has no rows".format(path))
    table = table.sort_values("f_hz", kind="mergesort")
    sigma = header.get("sigma")
    return MaterialSpectrum(name=name or header.get("name") or pathlib.Path(str(path)).stem,
                            kind=header.get("kind", kind),
                            sigma=float(sigma) if sigma else None,
                            provenance=header.get("provenance", "loaded from {}".format(path)),
                            **{column: table[column].to_numpy(dtype=float) for column in TABLE_COLUMNS})


def nrw_frame(solutions):
    """ Extraction result as f_hz,eps_p,eps_pp,mu_p,mu_pp,tan_d,tan_dm,branch. """
    return pd.DataFrame({
        "f_hz": [s.f for s in solutions],
        "eps_p": [s.eps_r.real for s in solutions],
        "eps_pp": [-s.eps_r.imag for s in solutions],
        "mu_p": [s.mu_r.real for s in solutions],
        "mu_pp": [-s.mu_r.imag for s in solutions],
        "tan_d": [s.tan_delta for s in solutions],
        "tan_dm": [s.tan_delta_m for s in solutions],
        "branch": [s.branch for s in solutions],
    }, columns=list(NRW_COLUMNS))


def load_measured_s21(path):
    """
    Measured transmission table f_hz,thru_db,<filter>_db,...; every column after thru_db that ends
    in _db is one filter.
    :rtype: filters.MeasuredS21
    """
    table = pd.read_csv(str(path), comment="#", skipinitialspace=True)
    if "f_hz" not in table.columns or "thru_db" not in table.columns:
        raise MeasurementInputError("Measured S21 table {} needs f_hz and thru_db columns".format(path))
    filter_columns = [c for c in table.columns if c.endswith("_db") and c != "thru_db"]
    if not filter_columns:
        raise MeasurementInputError("Measured S21 table {} has no filter columns".format(path))
    table = table.sort_values("f_hz", kind="mergesort")
    return filters.MeasuredS21(f_hz=table["f_hz"].to_numpy(dtype=float),
                               thru_db=table["thru_db"].to_numpy(dtype=float),
                               filters_db=table[filter_columns].to_numpy(dtype=float),
                               names=tuple(c[:-3] for c in filter_columns))


def resolve_material(reference, kind=ABSORBER):
    """ Built-in material by name, otherwise a material CSV path. """
    if reference.lower() in builtin_materials:
        return builtin_materials[reference.lower()]
    if not os.path.isfile(reference):
        raise InvalidMaterialError("'{}' is neither a built-in material nor a readable file".format(reference))
    return load_material_csv(reference, kind=kind)
