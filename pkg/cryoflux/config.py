""" INI configuration of a cryoflux run. Values in the file use GHz, mm, K and dB; every
representation class converts them to SI units once so that the compute modules never see
engineering units. """

import logging
import os.path
from configparser import ConfigParser

from pkg_resources import resource_string

from cryoflux import dask_utils, flux, modes, nrw
from cryoflux.errors import ConfigurationError
from cryoflux.materials import CONDUCTOR, DIELECTRIC, builtin_materials, constant_material

logger = logging.getLogger(__name__)

PIPELINE_MODES = "modes"
PIPELINE_FLUX = "flux"
PIPELINE_NRW = "nrw"
PIPELINE_FILTER = "filter"
pipeline_types = [PIPELINE_MODES, PIPELINE_FLUX, PIPELINE_NRW, PIPELINE_FILTER]

CABLE_CUSTOM = "custom"
cable_types = sorted(modes.cable_radii) + [CABLE_CUSTOM]

GHZ = 1e9
MM = 1e-3


def config_str_to_bool(input_str):
    """
    :param input_str: The input string to convert to bool value
    :type input_str: str
    :return: bool
    """
    return input_str.lower() in ['true', '1', 't', 'y', 'yes']


def isint(value):
    try:
        int(value)
        return True
    except ValueError:
        return False


def isfloat(value):
    try:
        float(value)
        return True
    except ValueError:
        return False


def _float_option(section, option, value, positive=False, non_negative=False):
    if not isfloat(value):
        raise ConfigurationError("Invalid value '{}' for {} in [{}]. Expected a number".format(value, option, section))
    number = float(value)
    if positive and not number > 0:
        raise ConfigurationError("{} in [{}] must be positive, got {}".format(option, section, value))
    if non_negative and number < 0:
        raise ConfigurationError("{} in [{}] must be >= 0, got {}".format(option, section, value))
    return number


def _int_option(section, option, value, minimum=0):
    if not isint(value) or int(value) < minimum:
        raise ConfigurationError("Invalid value '{}' for {} in [{}]. Expected an integer >= {}".format(
            value, option, section, minimum))
    return int(value)


def _float_list_option(section, option, value, **checks):
    items = [item.strip() for item in str(value).split(",") if item.strip()]
    if not items:
        raise ConfigurationError("{} in [{}] must be a comma-separated list of numbers".format(option, section))
    return tuple(_float_option(section, option, item, **checks) for item in items)


def _choice_option(section, option, value, choices):
    if value not in choices:
        raise ConfigurationError("Invalid value '{}' for {} in [{}]. Expected one of: {}".format(
            value, option, section, ", ".join(choices)))
    return value


class ConfigurationRepresentation(object):
    """ A small utility class for object representation of a standard config. file. """

    def __init__(self, file_name=None):
        """ Initializes the configuration representation with a supplied file; no file gives all defaults. """
        if file_name is None:
            return
        parser = ConfigParser()
        parser.optionxform = str  # make option names case sensitive
        found = parser.read(file_name)
        if not found:
            raise ConfigurationError("Configuration file {0} not found".format(file_name))
        for name in parser.sections():
            dict_section = {name: dict(parser.items(name))}  # create dictionary representation for section
            self.__dict__.update(dict_section)  # add section dictionary to root dictionary

    def __getitem__(self, item):
        return self.__dict__[item]


class PipelineConfigurationRepresentation:
    """ Utility class for object representation of the [pipeline] section. """
    pipeline = PIPELINE_FLUX
    output_dir = "./results/"

    def __init__(self, runtime_config=None):
        if runtime_config is not None and hasattr(runtime_config, "pipeline"):
            section = runtime_config["pipeline"]
            if "pipeline" in section:
                self.pipeline = _choice_option("pipeline", "pipeline", section["pipeline"], pipeline_types)
            if "output_dir" in section:
                self.output_dir = section["output_dir"]


class CableConfigurationRepresentation:
    """ Utility class for object representation of the [cable] section. Radii are in meters. """
    cable = "ut086"
    inner_radius = None  # custom cable only
    outer_radius = None  # custom cable only
    sigma = 1.41e6
    eps_p = 2.08
    tan_d = 0.0004

    def __init__(self, runtime_config=None):
        if runtime_config is not None and hasattr(runtime_config, "cable"):
            section = runtime_config["cable"]
            if "cable" in section:
                self.cable = _choice_option("cable", "cable", section["cable"].lower(), cable_types)
            if "inner_radius_mm" in section:
                self.inner_radius = _float_option("cable", "inner_radius_mm", section["inner_radius_mm"],
                                                  positive=True) * MM
            if "outer_radius_mm" in section:
                self.outer_radius = _float_option("cable", "outer_radius_mm", section["outer_radius_mm"],
                                                  positive=True) * MM
            if "sigma_s_per_m" in section:
                self.sigma = _float_option("cable", "sigma_s_per_m", section["sigma_s_per_m"], positive=True)
            if "eps_p" in section:
                self.eps_p = _float_option("cable", "eps_p", section["eps_p"], positive=True)
            if "tan_d" in section:
                self.tan_d = _float_option("cable", "tan_d", section["tan_d"], non_negative=True)

    def geometry(self):
        """ CoaxGeometry of the configured cable. """
        if self.cable != CABLE_CUSTOM:
            return modes.cable_geometry(self.cable)
        if self.inner_radius is None or self.outer_radius is None:
            raise ConfigurationError("A custom cable needs inner_radius_mm and outer_radius_mm in [cable]")
        if not self.inner_radius < self.outer_radius:
            raise ConfigurationError("inner_radius_mm must be smaller than outer_radius_mm in [cable]")
        conductor = constant_material("custom_conductor", CONDUCTOR, sigma=self.sigma)
        dielectric = constant_material("custom_dielectric", DIELECTRIC, eps_p=self.eps_p, tan_delta=self.tan_d)
        return modes.CoaxGeometry(a=self.inner_radius, b=self.outer_radius, conductor=conductor,
                                  dielectric=dielectric, name=CABLE_CUSTOM)


class ModesConfigurationRepresentation:
    """ Utility class for object representation of the [modes] section. Frequencies are in Hz. """
    families = (modes.TEM, modes.TE, modes.TM)
    max_n = None  # automatic
    max_f = 600 * GHZ
    f_min = 1 * GHZ
    step = 0.5 * GHZ

    def __init__(self, runtime_config=None):
        if runtime_config is not None and hasattr(runtime_config, "modes"):
            section = runtime_config["modes"]
            if "families" in section:
                self.families = tuple(_choice_option("modes", "families", family.strip().upper(), modes.mode_families)
                                      for family in section["families"].split(",") if family.strip())
            if "max_n" in section and section["max_n"].lower() != "auto":
                self.max_n = _int_option("modes", "max_n", section["max_n"])
            if "max_f_ghz" in section:
                self.max_f = _float_option("modes", "max_f_ghz", section["max_f_ghz"], positive=True) * GHZ
            if "f_min_ghz" in section:
                self.f_min = _float_option("modes", "f_min_ghz", section["f_min_ghz"], positive=True) * GHZ
            if "step_ghz" in section:
                self.step = _float_option("modes", "step_ghz", section["step_ghz"], positive=True) * GHZ


class ChainConfigurationRepresentation:
    """ Utility class for object representation of the [chain] section. Lengths are in meters. """
    temperatures = flux.DEFAULT_TEMPERATURES
    lengths = flux.DEFAULT_LENGTHS
    attenuators = flux.DEFAULT_ATTENUATORS
    length_scale = 1.0
    scenario = flux.SCENARIO_ACTIVE
    include_tm = False
    step = flux.DEFAULT_STEP_HZ

    def __init__(self, runtime_config=None):
        if runtime_config is not None and hasattr(runtime_config, "chain"):
            section = runtime_config["chain"]
            if "temperatures_k" in section:
                self.temperatures = _float_list_option("chain", "temperatures_k", section["temperatures_k"],
                                                       positive=True)
            if "lengths_mm" in section:
                self.lengths = tuple(length * MM for length in _float_list_option(
                    "chain", "lengths_mm", section["lengths_mm"], positive=True))
            if "attenuators_db" in section:
                self.attenuators = _float_list_option("chain", "attenuators_db", section["attenuators_db"],
                                                      non_negative=True)
            if "length_scale" in section:
                self.length_scale = _float_option("chain", "length_scale", section["length_scale"], positive=True)
            if "scenario" in section:
                self.scenario = _choice_option("chain", "scenario", section["scenario"].lower(), flux.scenarios)
            if "include_tm" in section:
                self.include_tm = config_str_to_bool(section["include_tm"])
            if "step_ghz" in section:
                self.step = _float_option("chain", "step_ghz", section["step_ghz"], positive=True) * GHZ

    def chain(self, cable):
        if len(self.temperatures) != len(self.lengths) + 1 or len(self.attenuators) != len(self.lengths):
            raise ConfigurationError("[chain] needs one more temperature than lengths and one attenuator per length")
        return flux.build_chain(cable, self.temperatures, self.lengths, self.attenuators, self.length_scale)


class BandConfigurationRepresentation:
    """ Utility class for object representation of the [band] section. Frequencies are in Hz. """
    f_min = 82 * GHZ
    f_max = 110 * GHZ

    def __init__(self, runtime_config=None):
        if runtime_config is not None and hasattr(runtime_config, "band"):
            section = runtime_config["band"]
            if "f_min_ghz" in section:
                self.f_min = _float_option("band", "f_min_ghz", section["f_min_ghz"], positive=True) * GHZ
            if "f_max_ghz" in section:
                self.f_max = _float_option("band", "f_max_ghz", section["f_max_ghz"], positive=True) * GHZ

    @property
    def band(self):
        if not self.f_min < self.f_max:
            raise ConfigurationError("Empty band: f_min {:.6g} GHz is not below f_max {:.6g} GHz".format(
                self.f_min / GHZ, self.f_max / GHZ))
        return self.f_min, self.f_max


class FilterConfigurationRepresentation:
    """ Utility class for object representation of the [filter] section. Lengths are in meters. """
    fill = ""  # built-in material name or material CSV
    conductor = "copper"
    d_pin = 1.27 * MM
    bore = 5.1 * MM
    optimize = False
    length = 35.8 * MM
    match_f_min = 1 * GHZ
    match_f_max = 18 * GHZ
    measured_s21 = ""  # optional CSV f_hz,thru_db,<filter>_db

    def __init__(self, runtime_config=None):
        if runtime_config is not None and hasattr(runtime_config, "filter"):
            section = runtime_config["filter"]
            if "fill" in section:
                self.fill = section["fill"]
            if "conductor" in section:
                self.conductor = section["conductor"].lower()
            if "d_pin_mm" in section:
                self.d_pin = _float_option("filter", "d_pin_mm", section["d_pin_mm"], positive=True) * MM
            if "bore_mm" in section:
                self.bore = _float_option("filter", "bore_mm", section["bore_mm"], positive=True) * MM
            if "optimize" in section:
                self.optimize = config_str_to_bool(section["optimize"])
            if "length_mm" in section:
                self.length = _float_option("filter", "length_mm", section["length_mm"], positive=True) * MM
            if "match_f_min_ghz" in section:
                self.match_f_min = _float_option("filter", "match_f_min_ghz", section["match_f_min_ghz"],
                                                 positive=True) * GHZ
            if "match_f_max_ghz" in section:
                self.match_f_max = _float_option("filter", "match_f_max_ghz", section["match_f_max_ghz"],
                                                 positive=True) * GHZ
            if "measured_s21" in section:
                self.measured_s21 = section["measured_s21"]

    @property
    def match_band(self):
        if not self.match_f_min < self.match_f_max:
            raise ConfigurationError("Empty matching band in [filter]")
        return self.match_f_min, self.match_f_max


def parse_section_spec(value):
    """ 'path@thickness_mm' -> (path, thickness [m]). """
    path, separator, thickness = str(value).strip().rpartition("@")
    if not separator or not path:
        raise ConfigurationError("NRW section '{}' must look like path@thickness_mm".format(value))
    return path, _float_option("nrw", "sections", thickness, positive=True) * MM


class NrwConfigurationRepresentation:
    """ Utility class for object representation of the [nrw] section. Lengths are in meters. """
    sections = ()  # (touchstone path, fill thickness) pairs
    a_wg = nrw.WR10_A
    b_wg = nrw.WR10_B
    n_max = nrw.DEFAULT_N_MAX
    threshold = nrw.DEFAULT_THRESHOLD
    asymmetry_threshold = nrw.DEFAULT_ASYMMETRY_THRESHOLD

    def __init__(self, runtime_config=None):
        if runtime_config is not None and hasattr(runtime_config, "nrw"):
            section = runtime_config["nrw"]
            if "sections" in section:
                self.sections = tuple(parse_section_spec(item) for item in section["sections"].split(",")
                                      if item.strip())
            if "a_wg_mm" in section:
                self.a_wg = _float_option("nrw", "a_wg_mm", section["a_wg_mm"], positive=True) * MM
            if "b_wg_mm" in section:
                self.b_wg = _float_option("nrw", "b_wg_mm", section["b_wg_mm"], positive=True) * MM
            if "n_max" in section:
                self.n_max = _int_option("nrw", "n_max", section["n_max"])
            if "threshold" in section:
                self.threshold = _float_option("nrw", "threshold", section["threshold"], positive=True)
            if "asymmetry_threshold" in section:
                self.asymmetry_threshold = _float_option("nrw", "asymmetry_threshold",
                                                         section["asymmetry_threshold"], positive=True)


class OutputConfigurationRepresentation:
    """ Utility class for object representation of the result output configuration. """
    output_csv_delimiter = ','
    output_csv_significant_digits = 12

    def __init__(self, runtime_config=None):
        if runtime_config is not None and hasattr(runtime_config, 'output.csv'):
            config_output_csv = runtime_config['output.csv']
            if 'delimiter' in config_output_csv:
                self.output_csv_delimiter = config_output_csv['delimiter']
            if 'significant_digits' in config_output_csv:
                self.output_csv_significant_digits = _int_option('output.csv', 'significant_digits',
                                                                 config_output_csv['significant_digits'], minimum=1)


class DaskSchedulerConfigurationRepresentation:
    """ Utility class for object representation of the Dask scheduler module configuration. """
    enabled = False  # Specifies whether connection to a Dask scheduler should be performed or not
    scheduler = dask_utils.DEFAULT_SCHEDULER  # local scheduler used when no distributed scheduler is connected
    scheduler_address = '127.0.0.1'
    scheduler_port = 8786

    def __init__(self, runtime_config=None):
        """
        Creates an object representation of Dask scheduler module configuration data.
        :param runtime_config: runtime_config data to extract Dask scheduler configuration from
        :type runtime_config: ConfigurationRepresentation
        """
        if runtime_config is not None:
            if hasattr(runtime_config, "dask"):
                config_dask = runtime_config['dask']
                if "enabled" in config_dask:
                    self.enabled = config_str_to_bool(config_dask["enabled"])
                if "scheduler" in config_dask:
                    self.scheduler = _choice_option("dask", "scheduler", config_dask["scheduler"],
                                                    dask_utils.scheduler_types)
                if 'scheduler_address' in config_dask:
                    self.scheduler_address = config_dask['scheduler_address']
                if "scheduler_port" in config_dask:
                    scheduler_port_str = config_dask["scheduler_port"]
                    if isint(scheduler_port_str) and int(scheduler_port_str) > 0:
                        self.scheduler_port = int(scheduler_port_str)
                    else:
                        raise ConfigurationError("Invalid value provided for scheduler port in configuration.\n"
                                                 "Expected: positive integer value")

    @property
    def effective_scheduler(self):
        """ None hands the work to the connected distributed client. """
        return None if self.enabled else self.scheduler


class RunConfig:
    """ Validated settings of one run: the INI file plus command-line overrides. """

    def __init__(self, runtime_config=None):
        """
        :type runtime_config: ConfigurationRepresentation
        """
        self.pipeline_config = PipelineConfigurationRepresentation(runtime_config)
        self.cable_config = CableConfigurationRepresentation(runtime_config)
        self.modes_config = ModesConfigurationRepresentation(runtime_config)
        self.chain_config = ChainConfigurationRepresentation(runtime_config)
        self.band_config = BandConfigurationRepresentation(runtime_config)
        self.filter_config = FilterConfigurationRepresentation(runtime_config)
        self.nrw_config = NrwConfigurationRepresentation(runtime_config)
        self.output_config = OutputConfigurationRepresentation(runtime_config)
        self.dask_config = DaskSchedulerConfigurationRepresentation(runtime_config)
        self.config_file = None

    @property
    def pipeline(self):
        return self.pipeline_config.pipeline

    @property
    def output_dir(self):
        return self.pipeline_config.output_dir

    def apply_overrides(self, cli_arguments):
        """
        Copies command-line values (already in GHz/mm/dB like the INI file) over the file settings.
        :param cli_arguments: dict from cli.get_cli_arguments; None values are ignored
        """
        def given(key):
            return cli_arguments.get(key) is not None

        if given("command") and cli_arguments["command"] in pipeline_types:
            self.pipeline_config.pipeline = cli_arguments["command"]
        if given("out"):
            self.pipeline_config.output_dir = cli_arguments["out"]
        if given("cable"):
            self.cable_config.cable = _choice_option("cable", "cable", cli_arguments["cable"].lower(), cable_types)
        if given("family"):
            self.modes_config.families = tuple(f.upper() for f in cli_arguments["family"])
        if given("max_f_ghz"):
            self.modes_config.max_f = float(cli_arguments["max_f_ghz"]) * GHZ
        if given("max_n"):
            self.modes_config.max_n = int(cli_arguments["max_n"])
        if given("step_ghz"):
            self.modes_config.step = float(cli_arguments["step_ghz"]) * GHZ
            self.chain_config.step = float(cli_arguments["step_ghz"]) * GHZ
        if given("band_ghz"):
            self.band_config.f_min, self.band_config.f_max = (float(v) * GHZ for v in cli_arguments["band_ghz"])
        if given("scenario"):
            self.chain_config.scenario = cli_arguments["scenario"]
        if given("length_scale"):
            self.chain_config.length_scale = float(cli_arguments["length_scale"])
        if cli_arguments.get("include_tm"):
            self.chain_config.include_tm = True
        if given("section"):
            self.nrw_config.sections = tuple(parse_section_spec(item) for item in cli_arguments["section"])
        if given("n_max"):
            self.nrw_config.n_max = int(cli_arguments["n_max"])
        if given("threshold"):
            self.nrw_config.threshold = float(cli_arguments["threshold"])
        if given("fill"):
            self.filter_config.fill = cli_arguments["fill"]
        if given("d_pin_mm"):
            self.filter_config.d_pin = float(cli_arguments["d_pin_mm"]) * MM
        if given("bore_mm"):
            self.filter_config.bore = float(cli_arguments["bore_mm"]) * MM
            self.filter_config.optimize = False
        if cli_arguments.get("optimize"):
            self.filter_config.optimize = True
        if given("length_mm"):
            self.filter_config.length = float(cli_arguments["length_mm"]) * MM
        if given("measured_s21"):
            self.filter_config.measured_s21 = cli_arguments["measured_s21"]
        if given("scheduler"):
            self.dask_config.scheduler = _choice_option("dask", "scheduler", cli_arguments["scheduler"],
                                                        dask_utils.scheduler_types)
        return self

    def input_files(self):
        """ Files the configured pipeline reads, in a stable order. """
        files = []
        if self.pipeline == PIPELINE_NRW:
            files.extend(path for path, _ in self.nrw_config.sections)
        elif self.pipeline == PIPELINE_FILTER:
            if self.filter_config.fill and self.filter_config.fill.lower() not in builtin_materials:
                files.append(self.filter_config.fill)
            if self.filter_config.measured_s21:
                files.append(self.filter_config.measured_s21)
        return files

    def validate(self):
        """ Checks cross-section consistency and that referenced files exist. """
        if self.pipeline in (PIPELINE_FLUX, PIPELINE_FILTER):
            _ = self.band_config.band
            self.chain_config.chain(self.cable_config.geometry())
        if self.pipeline == PIPELINE_MODES:
            if not self.modes_config.f_min < self.modes_config.max_f:
                raise ConfigurationError("Empty band: [modes] f_min_ghz must be below max_f_ghz")
            self.cable_config.geometry()
        if self.pipeline == PIPELINE_NRW:
            thicknesses = {d for _, d in self.nrw_config.sections}
            if len(thicknesses) < 2:
                raise ConfigurationError("The nrw pipeline needs sections of at least two different thicknesses")
            if not self.nrw_config.a_wg > self.nrw_config.b_wg:
                raise ConfigurationError("a_wg_mm must exceed b_wg_mm in [nrw]")
        if self.pipeline == PIPELINE_FILTER:
            if not self.filter_config.fill:
                raise ConfigurationError("The filter pipeline needs a fill material in [filter]")
            _ = self.filter_config.match_band
            if not self.filter_config.optimize and not self.filter_config.d_pin < self.filter_config.bore:
                raise ConfigurationError("bore_mm must exceed d_pin_mm in [filter]")
        for path in self.input_files():
            if not os.path.isfile(path):
                raise ConfigurationError("Input file not found: {}".format(path))
        return self

    def parameters(self):
        """ Flat parameter echo for the result manifest (SI units). """
        echo = {"pipeline": self.pipeline, "cable": self.cable_config.cable}
        if self.pipeline == PIPELINE_MODES:
            echo.update(families=list(self.modes_config.families), max_n=self.modes_config.max_n,
                        max_f_hz=self.modes_config.max_f, f_min_hz=self.modes_config.f_min,
                        step_hz=self.modes_config.step)
        if self.pipeline in (PIPELINE_FLUX, PIPELINE_FILTER):
            echo.update(temperatures_k=list(self.chain_config.temperatures),
                        lengths_m=list(self.chain_config.lengths), attenuators_db=list(self.chain_config.attenuators),
                        length_scale=self.chain_config.length_scale, scenario=self.chain_config.scenario,
                        include_tm=self.chain_config.include_tm, step_hz=self.chain_config.step,
                        band_hz=list(self.band_config.band))
        if self.pipeline == PIPELINE_NRW:
            echo.update(sections=[[path, d] for path, d in self.nrw_config.sections], a_wg_m=self.nrw_config.a_wg,
                        b_wg_m=self.nrw_config.b_wg, n_max=self.nrw_config.n_max,
                        threshold=self.nrw_config.threshold)
        if self.pipeline == PIPELINE_FILTER:
            echo.update(fill=self.filter_config.fill, conductor=self.filter_config.conductor,
                        d_pin_m=self.filter_config.d_pin, bore_m=self.filter_config.bore,
                        optimize=self.filter_config.optimize, length_m=self.filter_config.length,
                        match_band_hz=list(self.filter_config.match_band),
                        measured_s21=self.filter_config.measured_s21 or None)
        return echo


def read_configuration(location):
    """
    Args: location of the configuration file, existing configuration dictionary
    Returns: a dictionary of the form
    <dict>.<section>[<option>] and the corresponding values.
    """
    config = ConfigurationRepresentation(location)
    return config


def load_run_config(location=None, cli_arguments=None):
    """ RunConfig from an optional INI file and optional command-line overrides, validated. """
    runtime_config = read_configuration(location) if location else None
    run_config = RunConfig(runtime_config)
    run_config.config_file = location
    if cli_arguments:
        run_config.apply_overrides(cli_arguments)
    return run_config.validate()


def generate_default_config_file(output_location, overwrite=False):
    """
    Writes the packaged default configuration file.
    :return: True when the file was written
    """
    default_config_file_data = resource_string(__name__, 'config/cryoflux.conf.default')

    if overwrite is None:
        overwrite = False

    if output_location is None:
        return False

    if os.path.exists(output_location) and not overwrite:
        logger.warning("[Config] Could not generate configuration file: file exists at specified destination "
                       "and overwrite mode disabled.")
        return False

    with open(output_location, 'wb') as output_file:
        output_file.write(default_config_file_data)

    if os.path.exists(output_location):
        logger.info("[Config] Configuration file has been generated successfully.")
        return True
    logger.error("[Config] Configuration file was not generated.")
    return False
