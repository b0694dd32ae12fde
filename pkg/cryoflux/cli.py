""" Command-line surface. Each pipeline is a subcommand; settings come from an optional INI file
(--config) and are overridden by the subcommand options. Failures are reported on stderr as one
machine-readable line and exit with status 1. """

import argparse  # for command line parsing
import logging
import sys

from cryoflux import config, core, dask_utils, flux, modes
from cryoflux.errors import CryofluxError

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
INTERNAL_ERROR_CATEGORY = "internal"


def _add_common_arguments(parser):
    parser.add_argument("--config", type=str, default=None, metavar="FILEPATH",
                        help="Path to a configuration file. Options given here override it.")
    parser.add_argument("--out", type=str, default=None, metavar="DIR", help="Output directory.")
    parser.add_argument("--scheduler", type=str, default=None, choices=dask_utils.scheduler_types,
                        help="Local dask scheduler for parallel work.")
    parser.add_argument("--verbose", action="store_true", help="Enable debug logging.")


def _add_cable_argument(parser):
    parser.add_argument("--cable", type=str, default=None, choices=config.cable_types,
                        help="Cable preset; custom reads the radii from the [cable] section.")


def _add_band_argument(parser):
    parser.add_argument("--band-ghz", dest="band_ghz", type=float, nargs=2, default=None, metavar=("F1", "F2"),
                        help="Integration band in GHz.")


def get_cli_arguments(argv=None):
    """ Returns command line arguments as a dict. """
    parser = argparse.ArgumentParser(prog="cryoflux",
                                     description="Noise-photon flux, coax mode losses, NRW material extraction "
                                                 "and absorptive filter design for cryogenic wiring.")

    subparser = parser.add_subparsers(title="commands", dest="command")
    subparser.required = True

    config_parser = subparser.add_parser("config", help="Write the default configuration file.")
    config_parser.add_argument("--output_config", type=str, required=True,
                               help="Specify the output path to a configuration file.", metavar="FILEPATH")
    config_parser.add_argument("-f", action="store_true", help="Overwrite the destination file if it already exists.")

    modes_parser = subparser.add_parser("modes", help="Cutoff frequencies and attenuation of coax modes.")
    _add_common_arguments(modes_parser)
    _add_cable_argument(modes_parser)
    modes_parser.add_argument("--family", type=str, nargs="+", default=None, choices=modes.mode_families,
                              help="Mode families to compute.")
    modes_parser.add_argument("--max-f-ghz", dest="max_f_ghz", type=float, default=None,
                              help="Upper frequency in GHz.")
    modes_parser.add_argument("--max-n", dest="max_n", type=int, default=None, help="Highest azimuthal order.")
    modes_parser.add_argument("--step-ghz", dest="step_ghz", type=float, default=None,
                              help="Sweep step in GHz.")

    flux_parser = subparser.add_parser("flux", help="Noise-photon flux at the end of a cryostat chain.")
    _add_common_arguments(flux_parser)
    _add_cable_argument(flux_parser)
    _add_band_argument(flux_parser)
    flux_parser.add_argument("--scenario", type=str, default=None, choices=flux.scenarios,
                             help="Attenuators active or bypassed.")
    flux_parser.add_argument("--length-scale", dest="length_scale", type=float, default=None,
                             help="Multiply every stage length.")
    flux_parser.add_argument("--include-tm", dest="include_tm", action="store_true", help="Add TM modes.")
    flux_parser.add_argument("--step-ghz", dest="step_ghz", type=float, default=None,
                             help="Frequency grid step in GHz.")

    nrw_parser = subparser.add_parser("nrw", help="Material extraction from waveguide S-parameters.")
    _add_common_arguments(nrw_parser)
    nrw_parser.add_argument("--section", type=str, action="append", default=None, metavar="FILE@MM",
                            help="Touchstone file and fill thickness in mm; repeat for each thickness.")
    nrw_parser.add_argument("--n-max", dest="n_max", type=int, default=None, help="Highest phase branch.")
    nrw_parser.add_argument("--threshold", type=float, default=None,
                            help="Largest accepted branch discrepancy.")

    filter_parser = subparser.add_parser("filter", help="Absorptive filter losses and residual flux.")
    _add_common_arguments(filter_parser)
    _add_cable_argument(filter_parser)
    _add_band_argument(filter_parser)
    filter_parser.add_argument("--fill", type=str, default=None, metavar="MATERIAL",
                               help="Fill material CSV or built-in name.")
    filter_parser.add_argument("--d-pin-mm", dest="d_pin_mm", type=float, default=None,
                               help="Centre-pin diameter in mm.")
    bore_group = filter_parser.add_mutually_exclusive_group()
    bore_group.add_argument("--bore-mm", dest="bore_mm", type=float, default=None, help="Bore diameter in mm.")
    bore_group.add_argument("--optimize", action="store_true", help="Choose the bore that minimises reflection.")
    filter_parser.add_argument("--length-mm", dest="length_mm", type=float, default=None,
                               help="Filter length in mm.")
    filter_parser.add_argument("--measured-s21", dest="measured_s21", type=str, default=None, metavar="FILEPATH",
                               help="Measured S21 table for frequencies outside the fill table.")
    filter_parser.add_argument("--scenario", type=str, default=None, choices=flux.scenarios,
                               help="Attenuators active or bypassed.")

    runtime_configuration = vars(parser.parse_args(argv))
    return runtime_configuration


def configure_logging(verbose=False):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def report_error(err, pipeline, category=None):
    """ Writes the machine-readable failure line to stderr. """
    category = category or getattr(err, "category", "error")
    message = str(err).replace('"', "'").replace("\n", " ")
    sys.stderr.write('error category={} pipeline={} message="{}"\n'.format(category, pipeline or "-", message))


def _main(argv=None):
    cli_arguments = get_cli_arguments(argv)
    command = cli_arguments["command"]
    configure_logging(cli_arguments.get("verbose", False))

    if command == "config":
        written = config.generate_default_config_file(output_location=cli_arguments["output_config"],
                                                      overwrite=cli_arguments["f"])
        return 0 if written else EXIT_FAILURE

    try:
        run_config = config.load_run_config(cli_arguments["config"], cli_arguments)
        logger.info("[Exec] Running the %s pipeline into %s", run_config.pipeline, run_config.output_dir)
        core.run_pipeline(run_config)
    except CryofluxError as err:
        report_error(err, getattr(err, "pipeline", command))
        return EXIT_FAILURE
    except Exception as err:
        logger.debug("[Exec] Unexpected failure in the %s pipeline", command, exc_info=True)
        report_error(err, command, category=INTERNAL_ERROR_CATEGORY)
        return EXIT_FAILURE
    return 0
