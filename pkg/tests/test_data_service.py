""" Unit test for file handling.
    To execute on a command line, run from the home directory:
    python -m unittest tests.test_data_service
"""
import os
import tempfile
import unittest

import numpy as np

from cryoflux import data_service, materials, nrw
from cryoflux.errors import InvalidMaterialError, MeasurementInputError, TouchstoneParseError


class TestTouchstone(unittest.TestCase):

    def setUp(self):
        self.workdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.workdir.cleanup()

    def path(self, name):
        return os.path.join(self.workdir.name, name)

    def test_parse_example_rows(self):
        records = data_service.parse_touchstone("./tests/data/example_ri.s2p")
        self.assertEqual(len(records), 2)
        self.assertAlmostEqual(records[0].f, 7.5e10, delta=1e-3)
        self.assertAlmostEqual(records[0].S11, 0.1 + 0j, places=14)
        self.assertAlmostEqual(records[0].S21, 0.5 + 0j, places=14)
        self.assertAlmostEqual(records[1].S21, 0.45 - 0.2j, places=14)
        self.assertAlmostEqual(records[1].S22, 0.1 + 0.05j, places=14)

    def test_cross_format_round_trip(self):
        section = nrw.WaveguideSection(d=2e-3)
        records = nrw.forward_slab(9 - 1.8j, 1.3 - 0.12j, section, np.linspace(75e9, 110e9, 15))
        parsed = {}
        for fmt in data_service.touchstone_formats:
            location = self.path("slab_{}.s2p".format(fmt.lower()))
            data_service.write_touchstone(location, records, fmt=fmt, unit="MHZ", comment="format " + fmt)
            parsed[fmt] = data_service.parse_touchstone(location)
        for fmt, result in parsed.items():
            self.assertEqual(len(result), len(records))
            for original, read_back in zip(records, result):
                self.assertAlmostEqual(read_back.f / original.f, 1.0, places=12)
                self.assertAlmostEqual(abs(read_back.S11 - original.S11), 0.0, places=12, msg=fmt)
                self.assertAlmostEqual(abs(read_back.S21 - original.S21), 0.0, places=12, msg=fmt)

    def test_written_option_line(self):
        section = nrw.WaveguideSection(d=2e-3)
        records = nrw.forward_slab(9 - 1.8j, 1.3 - 0.12j, section, np.linspace(75e9, 110e9, 3))
        location = self.path("forward.s2p")
        data_service.write_touchstone(location, records, fmt="DB", unit="GHZ", comment="forward model")
        with open(location) as handle:
            text = handle.read()
        self.assertIn("forward model", text)
        option_lines = [line.upper().split() for line in text.splitlines() if line.startswith("#")]
        self.assertEqual(len(option_lines), 1)
        self.assertIn("GHZ", option_lines[0])
        self.assertIn("DB", option_lines[0])
        with self.assertRaises(ValueError):
            data_service.write_touchstone(location, records, fmt="XY")

    def test_malformed_row(self):
        with self.assertRaises(TouchstoneParseError) as cm:
            data_service.read_touchstone("./tests/data/broken.s2p")
        self.assertEqual(cm.exception.category, "touchstone-parse")
        self.assertIn("broken.s2p", str(cm.exception))
        self.assertEqual(cm.exception.line_number, 4)
        self.assertTrue(str(cm.exception).startswith("line 4: "))

    def test_rejected_files(self):
        cases = {
            "short.s2p": "# GHZ S RI R 50\n1 0 0 0 0 0\n",
            "decreasing.s2p": "# GHZ S RI R 50\n2 0 0 0 0 0 0 0 0\n1 0 0 0 0 0 0 0 0\n",
            "one_port.s1p": "# HZ S MA R 75\n1e9 0.5 90\n2e9 0.5 180\n",
        }
        for name, text in cases.items():
            location = self.path(name)
            with open(location, "w") as handle:
                handle.write(text)
            with self.assertRaises(TouchstoneParseError, msg=name):
                data_service.parse_touchstone(location)

    def test_one_port_network(self):
        location = self.path("one_port.s1p")
        with open(location, "w") as handle:
            handle.write("# HZ S MA R 75\n1e9 0.5 90\n2e9 0.5 180\n")
        network = data_service.read_touchstone(location)
        self.assertEqual(network.s.shape, (2, 1, 1))
        self.assertAlmostEqual(float(np.real(network.z0[0, 0])), 75.0)
        self.assertAlmostEqual(abs(network.s[0, 0, 0] - 0.5j), 0.0, places=12)


class TestTables(unittest.TestCase):

    def setUp(self):
        self.workdir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.workdir.cleanup()

    def test_material_table_header(self):
        material = data_service.load_material_csv("./tests/data/absorber.csv")
        self.assertEqual(material.name, "test_absorber")
        self.assertEqual(material.kind, materials.ABSORBER)
        self.assertEqual(material.provenance, "synthetic table for tests")
        self.assertIsNone(material.sigma)
        self.assertTrue(np.all(np.diff(material.f_hz) > 0))

    def test_conductor_header(self):
        location = os.path.join(self.workdir.name, "copper.csv")
        with open(location, "w") as handle:
            handle.write("# name: copper\n# kind: conductor\n# sigma: 5.8e7\n"
                         "f_hz,eps_p,eps_pp,mu_p,mu_pp\n1e9,1,0,1,0\n1e12,1,0,1,0\n")
        copy = data_service.load_material_csv(location)
        self.assertEqual(copy.kind, materials.CONDUCTOR)
        self.assertEqual(copy.sigma, 5.8e7)

    def test_material_table_missing_columns(self):
        location = os.path.join(self.workdir.name, "bad.csv")
        with open(location, "w") as handle:
            handle.write("f_hz,eps_p\n1e9,2.0\n")
        with self.assertRaises(InvalidMaterialError):
            data_service.load_material_csv(location)

    def test_nrw_frame_is_loadable_as_material(self):
        section = nrw.WaveguideSection(d=2e-3)
        records = nrw.forward_slab(9 - 1.8j, 1.3 - 0.12j, section, np.linspace(75e9, 110e9, 5))
        by_branch = nrw.invert_branches(records, section)
        branch = nrw.nearest_branch(by_branch, nrw.filled_kz(9 - 1.8j, 1.3 - 0.12j, section,
                                                              np.linspace(75e9, 110e9, 5)))
        frame = data_service.nrw_frame(by_branch[branch])
        self.assertEqual(list(frame.columns), list(data_service.NRW_COLUMNS))
        location = os.path.join(self.workdir.name, "material.csv")
        data_service.write_csv(location, frame)
        material = data_service.load_material_csv(location)
        np.testing.assert_allclose(material.eps_p, 9.0, rtol=1e-9)
        np.testing.assert_allclose(material.tan_delta_m, 0.12 / 1.3, rtol=1e-9)

    def test_measured_s21(self):
        measured = data_service.load_measured_s21("./tests/data/measured_s21.csv")
        self.assertEqual(measured.names, ("filter_a", "filter_b"))
        np.testing.assert_allclose(measured.mean_s21_db(), [-20.0, -40.5, -58.0])
        location = os.path.join(self.workdir.name, "no_filters.csv")
        with open(location, "w") as handle:
            handle.write("f_hz,thru_db\n1e9,-1.0\n")
        with self.assertRaises(MeasurementInputError):
            data_service.load_measured_s21(location)

    def test_resolve_material(self):
        self.assertIs(data_service.resolve_material("vacuum"), materials.VACUUM)
        self.assertEqual(data_service.resolve_material("./tests/data/absorber.csv").name, "test_absorber")
        with self.assertRaises(InvalidMaterialError):
            data_service.resolve_material("./tests/data/no_such_table.csv")

    def test_directories_and_digests(self):
        tree = os.path.join(self.workdir.name, "a", "b")
        data_service.create_directory_tree(tree)
        self.assertTrue(os.path.isdir(tree))
        location = os.path.join(tree, "file.txt")
        with open(location, "w") as handle:
            handle.write("cryoflux")
        self.assertEqual(data_service.file_digest(location), data_service.file_digest(location))
        self.assertEqual(len(data_service.file_digest(location)), 64)


if __name__ == '__main__':
    unittest.main()
