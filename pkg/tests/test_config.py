""" Unit test for configuration file/data.
    To execute on a command line, run:
    python -m unittest tests.test_config

"""

import unittest

from unittest.mock import patch
import sys
import os
from cryoflux import cli, config, flux, modes
from cryoflux.errors import ConfigurationError

DEFAULT_CONFIG_LOCATION = "./cryoflux/config/cryoflux.conf.default"


class TestConfigurationFile(unittest.TestCase):

    def test_reading_runtime_configuration(self):
        """ Tests that we can read values from a config file into the section representations, in SI units. """
        testargs = ["prog", "flux", "--config", "tests/data/config_flux.conf"]
        with patch.object(sys, "argv", testargs):
            args = cli.get_cli_arguments()
            runtime_configuration = config.read_configuration(location=args["config"])
        self.assertEqual(runtime_configuration.band["f_max_ghz"], "90",
                         "Runtime configuration did not have the right upper band edge.")
        run_config = config.RunConfig(runtime_configuration)
        self.assertEqual(run_config.pipeline, config.PIPELINE_FLUX)
        self.assertEqual(run_config.band_config.band, (82e9, 90e9))
        self.assertEqual(run_config.chain_config.step, 1e9)
        self.assertAlmostEqual(run_config.chain_config.lengths[0], 0.228)
        self.assertEqual(run_config.chain_config.attenuators, (0.0, 20.0, 0.0, 20.0, 20.0))
        self.assertEqual(run_config.output_config.output_csv_delimiter, ";")
        self.assertEqual(run_config.output_config.output_csv_significant_digits, 10)

    def test_defaults_without_a_file(self):
        run_config = config.RunConfig()
        self.assertEqual(run_config.pipeline, config.PIPELINE_FLUX)
        self.assertEqual(run_config.cable_config.cable, "ut086")
        self.assertEqual(run_config.chain_config.temperatures, flux.DEFAULT_TEMPERATURES)
        self.assertEqual(run_config.chain_config.scenario, flux.SCENARIO_ACTIVE)
        self.assertIsNone(run_config.modes_config.max_n)
        self.assertEqual(run_config.dask_config.effective_scheduler, "synchronous")

    def test_packaged_default_matches_class_defaults(self):
        from_file = config.RunConfig(config.read_configuration(DEFAULT_CONFIG_LOCATION))
        from_classes = config.RunConfig()
        file_parameters, class_parameters = from_file.parameters(), from_classes.parameters()
        for lengths in (file_parameters.pop("lengths_m"), class_parameters.pop("lengths_m")):
            for length, expected in zip(lengths, flux.DEFAULT_LENGTHS):
                self.assertAlmostEqual(length, expected, places=15)
        self.assertEqual(file_parameters, class_parameters)
        self.assertEqual(from_file.nrw_config.n_max, from_classes.nrw_config.n_max)

    def test_custom_cable_and_dask_sections(self):
        run_config = config.load_run_config("tests/data/config_custom_cable.conf")
        geometry = run_config.cable_config.geometry()
        self.assertEqual(geometry.name, config.CABLE_CUSTOM)
        self.assertAlmostEqual(geometry.a, 0.5e-3)
        self.assertAlmostEqual(geometry.b, 1.5e-3)
        self.assertEqual(geometry.conductor.sigma, 5.8e7)
        self.assertEqual(run_config.modes_config.families, (modes.TE,))
        self.assertEqual(run_config.modes_config.max_n, 3)
        self.assertEqual(run_config.dask_config.scheduler, "threads")
        self.assertEqual(run_config.dask_config.scheduler_port, 8787)

    def test_invalid_values(self):
        with self.assertRaises(ConfigurationError):
            config.RunConfig(config.read_configuration("tests/data/config_invalid.conf"))
        with self.assertRaises(ConfigurationError):
            config.read_configuration("tests/data/does_not_exist.conf")
        with self.assertRaises(ConfigurationError):
            config.parse_section_spec("slab.s2p")
        self.assertEqual(config.parse_section_spec("data/slab@2.0.s2p@2"), ("data/slab@2.0.s2p", 2e-3))

    def test_command_line_overrides(self):
        cli_arguments = {"command": "flux", "out": "./elsewhere/", "cable": "UT047", "band_ghz": [75.0, 100.0],
                         "scenario": "bypassed", "length_scale": 1.25, "include_tm": True, "step_ghz": 0.5}
        run_config = config.RunConfig().apply_overrides(cli_arguments)
        self.assertEqual(run_config.output_dir, "./elsewhere/")
        self.assertEqual(run_config.cable_config.cable, "ut047")
        self.assertEqual(run_config.band_config.band, (75e9, 100e9))
        self.assertEqual(run_config.chain_config.scenario, flux.SCENARIO_BYPASSED)
        self.assertEqual(run_config.chain_config.length_scale, 1.25)
        self.assertTrue(run_config.chain_config.include_tm)
        self.assertEqual(run_config.chain_config.step, 0.5e9)

        run_config = config.RunConfig().apply_overrides({"command": "filter", "optimize": True, "fill": "vacuum",
                                                         "d_pin_mm": 1.0})
        self.assertEqual(run_config.pipeline, config.PIPELINE_FILTER)
        self.assertTrue(run_config.filter_config.optimize)
        self.assertEqual(run_config.filter_config.d_pin, 1e-3)
        self.assertEqual(run_config.input_files(), [])

    def test_validation(self):
        with self.assertRaises(ConfigurationError):
            config.load_run_config(None, {"command": "nrw", "section": ["tests/data/example_ri.s2p@2"]})
        with self.assertRaises(ConfigurationError):
            config.load_run_config(None, {"command": "nrw", "section": ["missing.s2p@2", "missing.s2p@2.7"]})
        with self.assertRaises(ConfigurationError):
            config.load_run_config(None, {"command": "filter"})
        with self.assertRaises(ConfigurationError):
            config.load_run_config(None, {"command": "flux", "band_ghz": [110.0, 82.0]})
        with self.assertRaises(ConfigurationError):
            config.load_run_config(None, {"command": "modes", "cable": "custom"})
        run_config = config.load_run_config(None, {"command": "nrw", "section": ["tests/data/example_ri.s2p@2",
                                                                                 "tests/data/example_ri.s2p@2.7"]})
        self.assertEqual(run_config.input_files(), ["tests/data/example_ri.s2p"] * 2)
        path, thickness = run_config.parameters()["sections"][1]
        self.assertEqual(path, "tests/data/example_ri.s2p")
        self.assertAlmostEqual(thickness, 2.7e-3, places=15)

    def test_generate_default_config(self):
        location = "./test_generate_default_config.conf"
        location_expected = DEFAULT_CONFIG_LOCATION

        # Remove any existing configuration files from previous unit testing (prevent false positive)
        if os.path.isfile(location):
            os.remove(location)

        # Generate the default config file
        self.assertTrue(config.generate_default_config_file(output_location=location, overwrite=False))

        if os.path.isfile(location) and os.path.isfile(location_expected):
            # Read generated config file contents
            with open(location) as file:
                data_generated = file.readlines()

            with open(location_expected) as file:
                data_expected = file.readlines()

            # Check contents of default config file
            if data_generated == [] or data_expected == []:
                self.fail("Default configuration file contents was empty. Could not successfully test.")

            self.assertEqual("".join(data_generated), "".join(data_expected))
        else:
            self.fail(msg="Default configuration file was not generated or could not be found on filesystem.")

        # Cleanup test config file
        if os.path.isfile(location):
            os.remove(location)

    def test_generate_default_config_no_overwrite(self):
        location = "./test_generate_default_config_no_overwrite.conf"
        test_string = "Test data"

        # Remove any existing configuration files from previous unit testing (prevent false positive)
        if os.path.isfile(location):
            os.remove(location)

        # Generate a text file that should not be overwritten
        with open(location, "w+") as file:
            file.write(test_string)

        # Generate the default config file, not overwriting any existing file
        with self.assertLogs("cryoflux.config", level="WARNING"):
            self.assertFalse(config.generate_default_config_file(output_location=location, overwrite=False))

        with open(location) as file:
            self.assertEqual(file.read(), test_string)

        # Cleanup test config file
        if os.path.isfile(location):
            os.remove(location)

    def test_generate_default_config_force(self):
        location = "./test_generate_default_config_force.conf"

        # Remove any existing configuration files from previous unit testing (prevent false positive)
        if os.path.isfile(location):
            os.remove(location)

        # Generate a text file that should be overwritten
        with open(location, "w+") as file:
            file.write("Test data")

        # Generate the default config file, overwriting any existing file
        config.generate_default_config_file(output_location=location, overwrite=True)

        with open(location) as file:
            data_generated = file.read()
        with open(DEFAULT_CONFIG_LOCATION) as file:
            data_expected = file.read()
        self.assertEqual(data_generated, data_expected)

        # Cleanup test config file
        if os.path.isfile(location):
            os.remove(location)


if __name__ == "__main__":
    unittest.main()
