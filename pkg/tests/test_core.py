""" Unit test for the pipeline runner.
    To execute on a command line, run:
    python -m unittest tests.test_core

"""
import filecmp
import json
import os
import tempfile
import unittest

import numpy as np
import pandas as pd

from cryoflux import config, core, dask_utils, data_service, nrw
from cryoflux.errors import PipelineError

EPS_TRUE = 9 - 1.8j
MU_TRUE = 1.3 - 0.12j


class TestPipelines(unittest.TestCase):

    def setUp(self):
        self.workdir = tempfile.TemporaryDirectory()
        self.out = self.workdir.name

    def tearDown(self):
        self.workdir.cleanup()

    def run_config_file(self, location, out=None, **overrides):
        overrides["out"] = out or self.out
        return core.run_pipeline(config.load_run_config(location, overrides))

    def read_manifest(self, out=None):
        with open(os.path.join(out or self.out, core.MANIFEST_FILE)) as handle:
            return json.load(handle)

    def test_modes_pipeline(self):
        manifest = self.run_config_file("tests/data/config_modes.conf")
        cutoffs = pd.read_csv(os.path.join(self.out, "cutoffs.csv"))
        self.assertEqual(list(cutoffs["mode"]), ["TEM", "TE11", "TE21"])
        self.assertAlmostEqual(cutoffs["f_c_hz"][1] / 62.5e9, 1.0, delta=5e-3)
        sweep = pd.read_csv(os.path.join(self.out, "modes.csv"))
        self.assertEqual(list(sweep.columns), ["f_hz", "mode", "alpha_db_per_m"])
        self.assertTrue((sweep[sweep["mode"] == "TE11"]["f_hz"] > 62e9).all())
        self.assertEqual(manifest.results["mode_count"], 3)
        saved = self.read_manifest()
        self.assertEqual(saved["pipeline"], "modes")
        self.assertEqual(saved["outputs"], ["cutoffs.csv", "modes.csv", core.MANIFEST_FILE])

    def test_outputs_are_deterministic(self):
        second = os.path.join(self.out, "second")
        first = os.path.join(self.out, "first")
        self.run_config_file("tests/data/config_modes.conf", out=first)
        self.run_config_file("tests/data/config_modes.conf", out=second)
        for name in ("cutoffs.csv", "modes.csv", core.MANIFEST_FILE):
            self.assertTrue(filecmp.cmp(os.path.join(first, name), os.path.join(second, name), shallow=False), name)

    def test_flux_pipeline(self):
        manifest = self.run_config_file("tests/data/config_flux.conf")
        summary = pd.read_csv(os.path.join(self.out, "flux_summary.csv"), sep=";")
        self.assertEqual(summary["scenario"][0], "active")
        self.assertGreater(summary["band_flux_per_s"][0], 0.0)
        self.assertAlmostEqual(summary["band_flux_per_s"][0] / manifest.results["band_flux_per_s"], 1.0, places=8)
        table = pd.read_csv(os.path.join(self.out, "flux.csv"), sep=";")
        self.assertEqual(set(table["mode"]), {"TEM", "TE11", core.TOTAL})
        total = table[table["mode"] == core.TOTAL]["N_per_hz_per_s"].to_numpy()
        parts = table[table["mode"] != core.TOTAL].groupby("f_hz")["N_per_hz_per_s"].sum().to_numpy()
        np.testing.assert_allclose(total, parts, rtol=1e-9)

    def test_nrw_pipeline_recovers_the_slab(self):
        f = np.linspace(75e9, 110e9, 36)
        sections = []
        for thickness_mm in (2.0, 2.7):
            section = nrw.WaveguideSection(d=thickness_mm * 1e-3)
            location = os.path.join(self.out, "slab_{}.s2p".format(thickness_mm))
            data_service.write_touchstone(location, nrw.forward_slab(EPS_TRUE, MU_TRUE, section, f), fmt="MA")
            sections.append("{}@{}".format(location, thickness_mm))
        result_dir = os.path.join(self.out, "results")
        manifest = core.run_pipeline(config.load_run_config(None, {"command": "nrw", "section": sections,
                                                                   "out": result_dir}))
        material = data_service.load_material_csv(os.path.join(result_dir, "material.csv"))
        np.testing.assert_allclose(material.eps_p, 9.0, rtol=1e-8)
        np.testing.assert_allclose(material.eps_pp, 1.8, rtol=1e-8)
        np.testing.assert_allclose(material.mu_p, 1.3, rtol=1e-8)
        np.testing.assert_allclose(material.mu_pp, 0.12, rtol=1e-7)
        self.assertLess(manifest.results["discrepancy"], 1e-6)
        self.assertEqual(len(manifest.inputs), 2)
        check = pd.read_csv(os.path.join(result_dir, "forward_check.csv"))
        np.testing.assert_allclose(check["s21_model_db"], check["s21_measured_db"], atol=1e-6)
        self.assertTrue(os.path.isfile(os.path.join(result_dir, "forward_slab_2.0.s2p")))

    def test_filter_pipeline(self):
        manifest = self.run_config_file("tests/data/config_filter.conf")
        losses = pd.read_csv(os.path.join(self.out, "filter.csv"))
        self.assertEqual(set(losses["mode"]), {"TEM", "TE11"})
        self.assertTrue((losses["alpha_dm_db_per_m"] > 0).all())
        self.assertTrue((losses["A_db"] > 100).all())
        self.assertLess(manifest.results["band_flux_per_s"], 1e-6 * manifest.results["unfiltered_band_flux_per_s"])
        self.assertIn("./tests/data/absorber.csv", manifest.inputs)
        self.assertTrue(os.path.isfile(os.path.join(self.out, "filter_flux.csv")))

    def test_filter_without_measured_transmission(self):
        with self.assertRaises(PipelineError) as cm:
            self.run_config_file("tests/data/config_filter.conf", band_ghz=[10.0, 18.0])
        self.assertEqual(cm.exception.pipeline, config.PIPELINE_FILTER)
        self.assertEqual(cm.exception.category, "measurement-input")


class TestRunnerHelpers(unittest.TestCase):

    def test_profiler_records_stages(self):
        profiler = core.PipelineProfiler("modes")
        profiler.start_stage("first")
        profiler.end_stage()
        profiler.start_stage("second")
        profiler.end_stage()
        self.assertEqual([name for name, _ in profiler.timings], ["first", "second"])
        self.assertTrue(all(seconds >= 0 for _, seconds in profiler.timings))

    def test_parallel_map_keeps_order(self):
        for scheduler in (dask_utils.SCHEDULER_SYNCHRONOUS, dask_utils.SCHEDULER_THREADS):
            self.assertEqual(dask_utils.parallel_map(abs, [-3, 2, -1], scheduler=scheduler), [3, 2, 1])
        self.assertEqual(dask_utils.parallel_map(abs, []), [])
        with self.assertRaises(ValueError):
            dask_utils.parallel_map(abs, [1], scheduler="cluster")


if __name__ == '__main__':
    unittest.main()
