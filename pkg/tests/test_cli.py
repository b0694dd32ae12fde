""" Unit test for cryoflux CLI functions.
    To execute on a command line, run:
    python -m unittest tests.test_cli

"""
import io
import tempfile
import unittest
import sys

from unittest.mock import patch
from cryoflux import cli, core


class TestCommandLineInterface(unittest.TestCase):

    def run_subparser_test(self, subparser_cmd, parameter, expected, default_key=None, default_value=None):
        """ Tests subparsers for missing arguments and default values. """
        testargs = ["prog", subparser_cmd, "--" + parameter, expected]
        with patch.object(sys, 'argv', testargs):
            args = cli.get_cli_arguments()
            self.assertEqual(args[parameter], expected,
                             subparser_cmd + " subparser did not parse right config file arg.")
            self.assertEqual(args["command"], subparser_cmd, subparser_cmd + " command was not interpreted properly")
            if default_key:
                self.assertEqual(args[default_key], default_value,
                                 subparser_cmd + " command parser did not setup the right default key " +
                                 default_key + " to " + str(default_value))

    def test_getting_command_arguments(self):
        """ Tests for reading args and storing values for every pipeline from the command line."""
        # Test group 1 -- config
        self.run_subparser_test("config", "output_config", "./cryoflux.conf", "f", False)
        # Test group 2 -- pipelines read the config file and leave unset options as None
        self.run_subparser_test("modes", "config", "./cryoflux.conf", "max_f_ghz", None)
        self.run_subparser_test("flux", "config", "./cryoflux.conf", "include_tm", False)
        self.run_subparser_test("nrw", "out", "./results/", "section", None)
        self.run_subparser_test("filter", "fill", "./esorb.csv", "optimize", False)

    def test_pipeline_options(self):
        args = cli.get_cli_arguments(["flux", "--band-ghz", "82", "600", "--scenario", "bypassed",
                                      "--length-scale", "1.25", "--include-tm"])
        self.assertEqual(args["band_ghz"], [82.0, 600.0])
        self.assertEqual(args["scenario"], "bypassed")
        self.assertEqual(args["length_scale"], 1.25)
        self.assertTrue(args["include_tm"])

        args = cli.get_cli_arguments(["nrw", "--section", "a.s2p@2", "--section", "b.s2p@2.7", "--n-max", "5"])
        self.assertEqual(args["section"], ["a.s2p@2", "b.s2p@2.7"])
        self.assertEqual(args["n_max"], 5)

        args = cli.get_cli_arguments(["modes", "--family", "TE", "TM", "--cable", "ut034"])
        self.assertEqual(args["family"], ["TE", "TM"])
        self.assertEqual(args["cable"], "ut034")

    def test_parser_expected_failing(self):
        """ Test that parsing fails on no command option (a choice of a subparser), or an unrecognized command
        ("something") """
        command_line_error_code = 2
        for testargs in (["prog"], ["prog", "something"], ["prog", "filter", "--bore-mm", "5", "--optimize"],
                         ["prog", "flux", "--scenario", "sometimes"]):
            with patch.object(sys, 'argv', testargs):
                with patch.object(sys, 'stderr', io.StringIO()):
                    with self.assertRaises(SystemExit) as cm:
                        cli.get_cli_arguments()
            self.assertEqual(cm.exception.code, command_line_error_code,
                             "CLI handler was supposed to fail on " + " ".join(testargs))

    def test_failure_is_reported_on_one_line(self):
        """ A failing run exits with status 1 and writes a single machine-readable line to stderr. """
        stderr = io.StringIO()
        with patch.object(sys, 'stderr', stderr):
            status = cli._main(["nrw", "--section", "missing_a.s2p@2", "--section", "missing_b.s2p@2.7"])
        self.assertEqual(status, cli.EXIT_FAILURE)
        error_lines = [line for line in stderr.getvalue().splitlines() if line.startswith("error ")]
        self.assertEqual(len(error_lines), 1)
        self.assertIn("category=config ", error_lines[0])
        self.assertIn("pipeline=nrw", error_lines[0])
        self.assertIn('message="', error_lines[0])

    def test_pipeline_error_keeps_root_category(self):
        stderr = io.StringIO()
        with tempfile.TemporaryDirectory() as out:
            with patch.object(sys, 'stderr', stderr):
                status = cli._main(["nrw", "--out", out, "--section", "tests/data/example_ri.s2p@2",
                                    "--section", "tests/data/example_ri.s2p@2.7", "--n-max", "1",
                                    "--threshold", "1e-9"])
        self.assertEqual(status, cli.EXIT_FAILURE)
        error_lines = [line for line in stderr.getvalue().splitlines() if line.startswith("error ")]
        self.assertEqual(len(error_lines), 1)
        self.assertIn("pipeline=nrw", error_lines[0])
        self.assertIn("category=branch-ambiguity", error_lines[0])

    def test_unexpected_failure_is_reported_as_internal(self):
        stderr = io.StringIO()
        with tempfile.TemporaryDirectory() as out:
            with patch.object(core, 'run_pipeline', side_effect=RuntimeError("worker lost")):
                with patch.object(sys, 'stderr', stderr):
                    status = cli._main(["flux", "--config", "tests/data/config_flux.conf", "--out", out])
        self.assertEqual(status, cli.EXIT_FAILURE)
        error_lines = [line for line in stderr.getvalue().splitlines() if line.startswith("error ")]
        self.assertEqual(len(error_lines), 1)
        self.assertIn("category=internal ", error_lines[0])
        self.assertIn("pipeline=flux", error_lines[0])
        self.assertIn('message="worker lost"', error_lines[0])


if __name__ == '__main__':
    unittest.main()
