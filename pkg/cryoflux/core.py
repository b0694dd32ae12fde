""" Pipeline runner. Reads a validated RunConfig, dispatches to the compute modules, writes the
result tables to the output directory and records everything in a manifest. """

import datetime
import json
import logging
import pathlib
from collections import OrderedDict

import numpy as np
import pandas as pd

from cryoflux import config, dask_utils, data_service, filters, flux, modes, nrw
from cryoflux.errors import CryofluxError, PipelineError
from cryoflux.materials import builtin_material, interpolate_material

logger = logging.getLogger(__name__)

TOOL_VERSION = "0.1.0"
MANIFEST_FILE = "manifest.json"
TOTAL = "total"


class ResultManifest:
    """ Record of one run: inputs with their digests, parameters, outputs and headline results. """

    def __init__(self, pipeline, parameters=None):
        self.pipeline = pipeline
        self.parameters = parameters or {}
        self.inputs = OrderedDict()
        self.outputs = []
        self.results = OrderedDict()
        self.notes = []
        self.version = TOOL_VERSION

    def add_input(self, path):
        self.inputs[str(path)] = data_service.file_digest(path)

    def add_output(self, file_name):
        if file_name not in self.outputs:
            self.outputs.append(file_name)

    def to_dict(self):
        return {"pipeline": self.pipeline,
                "version": self.version,
                "inputs": dict(self.inputs),
                "parameters": self.parameters,
                "outputs": list(self.outputs),
                "results": dict(self.results),
                "notes": list(self.notes)}

    def to_json(self, filename):
        with open(str(filename), "w") as handle:
            json.dump(self.to_dict(), handle, sort_keys=True, indent=2)
            handle.write("\n")


class PipelineProfiler:
    """ Logs how long each pipeline stage takes. Timings never reach the numeric outputs. """
    stage_running = False

    def __init__(self, pipeline):
        self.pipeline = pipeline
        self.stage_name = None
        self.start_time = None
        self.timings = []

    def start_stage(self, stage_name):
        if not self.stage_running:
            logger.info("[Exec][%s] %s", self.pipeline, stage_name)
            self.stage_name = stage_name
            self.stage_running = True
            self.start_time = datetime.datetime.utcnow()

    def end_stage(self):
        if self.stage_running:
            exec_time = (datetime.datetime.utcnow() - self.start_time).total_seconds()
            self.timings.append((self.stage_name, exec_time))
            logger.info("[Exec][%s]   - Done in %.3f s.", self.pipeline, exec_time)
            self.stage_running = False


class PipelineRunner:
    def __init__(self, run_config):
        """
        :type run_config: config.RunConfig
        """
        self.run_config = run_config
        self.output_dir = pathlib.Path(run_config.output_dir)
        self.output_config = run_config.output_config
        self.profiler = PipelineProfiler(run_config.pipeline)
        self.manifest = ResultManifest(run_config.pipeline, run_config.parameters())
        self.scheduler = run_config.dask_config.effective_scheduler
        self.dask = None

    def run(self):
        data_service.create_directory_tree(self.output_dir)
        for path in self.run_config.input_files():
            self.manifest.add_input(path)
        if self.run_config.dask_config.enabled:
            self.dask = dask_utils.DaskUtils()
            self.dask.connect_to_scheduler(address=self.run_config.dask_config.scheduler_address,
                                           port=self.run_config.dask_config.scheduler_port)
        try:
            {config.PIPELINE_MODES: self._run_modes,
             config.PIPELINE_FLUX: self._run_flux,
             config.PIPELINE_NRW: self._run_nrw,
             config.PIPELINE_FILTER: self._run_filter}[self.run_config.pipeline]()
        finally:
            if self.dask is not None:
                self.dask.close()
        self.manifest.add_output(MANIFEST_FILE)
        self.manifest.to_json(self.output_dir / MANIFEST_FILE)
        return self.manifest

    def _write(self, file_name, frame):
        data_service.write_csv(self.output_dir / file_name, frame,
                               delimiter=self.output_config.output_csv_delimiter,
                               significant_digits=self.output_config.output_csv_significant_digits)
        self.manifest.add_output(file_name)

    def _run_modes(self):
        cable = self.run_config.cable_config.geometry()
        modes_config = self.run_config.modes_config
        max_f = modes_config.max_f
        max_n = modes.default_max_n(cable, max_f) if modes_config.max_n is None else modes_config.max_n

        self.profiler.start_stage("Cutoff search")
        mode_list = []
        for family in modes_config.families:
            mode_list.extend(modes.find_cutoffs(cable, family, max_n, max_f))
        self.profiler.end_stage()
        self._write("cutoffs.csv", pd.DataFrame({
            "mode": [str(md.mode) for md in mode_list],
            "family": [md.mode.family for md in mode_list],
            "n": [md.mode.n for md in mode_list],
            "m": [md.mode.m for md in mode_list],
            "k_c_per_m": [md.k_c for md in mode_list],
            "f_c_hz": [md.f_c for md in mode_list]}))

        self.profiler.start_stage("Attenuation sweep")
        n_points = int(round((max_f - modes_config.f_min) / modes_config.step)) + 1
        freqs = np.linspace(modes_config.f_min, max_f, n_points)
        sweep = modes.attenuation_sweep(cable, mode_list, freqs, scheduler=self.scheduler)
        self.profiler.end_stage()
        frames = []
        for mode_id, alpha in sweep.items():
            finite = np.isfinite(alpha)
            frames.append(pd.DataFrame({"f_hz": freqs[finite], "mode": str(mode_id), "alpha_db_per_m": alpha[finite]}))
        self._write("modes.csv", pd.concat(frames, ignore_index=True))

        for family in modes_config.families:
            alpha_min, f_min, mode_id = modes.envelope_minimum(sweep, freqs, family)
            if mode_id is not None:
                logger.info("[Modes] Lowest %s attenuation %.4g dB/m (%s at %.4g GHz)", family, alpha_min,
                            mode_id, f_min / 1e9)
                self.manifest.results["min_alpha_{}_db_per_m".format(family)] = alpha_min
                self.manifest.results["min_alpha_{}_f_hz".format(family)] = f_min
        self.manifest.results["mode_count"] = len(mode_list)

    def _chain_spectrum(self):
        cable = self.run_config.cable_config.geometry()
        chain_config = self.run_config.chain_config
        band = self.run_config.band_config.band
        chain = chain_config.chain(cable)
        self.profiler.start_stage("Mode search")
        mode_list = flux.cable_modes(cable, band[1], include_tm=chain_config.include_tm)
        self.profiler.end_stage()
        self.profiler.start_stage("Chain transport")
        spectrum = flux.chain_flux(chain, mode_list, band, scenario=chain_config.scenario, step=chain_config.step,
                                   scheduler=self.scheduler)
        self.profiler.end_stage()
        return cable, mode_list, spectrum

    def _run_flux(self):
        _, mode_list, spectrum = self._chain_spectrum()
        self._write("flux.csv", flux_frame(spectrum, mode_list))
        self._write("flux_summary.csv", pd.DataFrame({
            "band_f_min_hz": [spectrum.band[0]], "band_f_max_hz": [spectrum.band[1]],
            "scenario": [spectrum.scenario], "band_flux_per_s": [spectrum.band_flux]}))
        logger.info("[Flux] band_flux_per_s=%.6g", spectrum.band_flux)
        self.manifest.results["band_flux_per_s"] = spectrum.band_flux
        self.manifest.notes.append("Ideal thermalisation of lines and attenuators; fluxes are lower bounds.")

    def _run_nrw(self):
        nrw_config = self.run_config.nrw_config
        sections = {}
        self.profiler.start_stage("Branch inversion")
        solutions_by_thickness = {}
        for path, thickness in nrw_config.sections:
            records = data_service.parse_touchstone(path)
            section = nrw.WaveguideSection(d=thickness, a_wg=nrw_config.a_wg, b_wg=nrw_config.b_wg)
            sections[path] = (section, records)
            solutions_by_thickness[thickness] = nrw.invert_branches(
                records, section, n_max=nrw_config.n_max, asymmetry_threshold=nrw_config.asymmetry_threshold,
                scheduler=self.scheduler)
        self.profiler.end_stage()

        self.profiler.start_stage("Branch disambiguation")
        selection = nrw.disambiguate_branches(solutions_by_thickness, n_max=nrw_config.n_max,
                                              threshold=nrw_config.threshold)
        self.profiler.end_stage()
        self._write("material.csv", data_service.nrw_frame(selection.merged))
        self._write("branches.csv", pd.DataFrame({
            "d_a_m": [c.d_a for c in selection.candidates], "n_a": [c.n_a for c in selection.candidates],
            "d_b_m": [c.d_b for c in selection.candidates], "n_b": [c.n_b for c in selection.candidates],
            "discrepancy": [c.discrepancy for c in selection.candidates]}))

        self.profiler.start_stage("Forward check")
        material = nrw.solutions_to_material(selection.merged)
        frames = []
        for path, (section, records) in sections.items():
            inside = [r for r in records if material.covers(r.f)]
            if not inside:
                continue
            f = np.array([r.f for r in inside])
            eps_r, mu_r = interpolate_material(material, f)
            model = nrw.forward_slab(eps_r, mu_r, section, f)
            stem = pathlib.Path(path).stem
            data_service.write_touchstone(self.output_dir / "forward_{}.s2p".format(stem), model,
                                          comment="forward slab model, d = {:.6g} mm".format(section.d * 1e3))
            self.manifest.add_output("forward_{}.s2p".format(stem))
            frames.append(pd.DataFrame({
                "f_hz": f, "thickness_m": section.d,
                "s11_measured_db": [20 * np.log10(abs(r.S11)) for r in inside],
                "s21_measured_db": [20 * np.log10(abs(r.S21)) for r in inside],
                "s11_model_db": [20 * np.log10(abs(m.S11)) for m in model],
                "s21_model_db": [20 * np.log10(abs(m.S21)) for m in model]}))
        self.profiler.end_stage()
        if frames:
            self._write("forward_check.csv", pd.concat(frames, ignore_index=True))
        best = selection.best
        self.manifest.results.update(branch_a=best.n_a, thickness_a_m=best.d_a, branch_b=best.n_b,
                                     thickness_b_m=best.d_b, discrepancy=best.discrepancy)

    def _run_filter(self):
        filter_config = self.run_config.filter_config
        fill = data_service.resolve_material(filter_config.fill)
        conductor = builtin_material(filter_config.conductor)
        match_band = filter_config.match_band

        bore = filter_config.bore
        if filter_config.optimize:
            self.profiler.start_stage("Bore optimisation")
            optimum = filters.optimize_bore(filter_config.d_pin, fill, match_band)
            self.profiler.end_stage()
            bore = optimum.D_bore
            self.manifest.results["optimal_bore_m"] = optimum.D_bore
        geom = filters.FilterGeometry(d_pin=filter_config.d_pin, D_bore=bore, length=filter_config.length,
                                      fill=fill, conductor=conductor)
        if np.all(fill.covers(np.array(match_band))):
            self.manifest.results["average_reflection_db"] = filters.average_reflection_db(
                geom.d_pin, geom.D_bore, fill, match_band)
            self.manifest.results["max_impedance_deviation_ohm"] = filters.max_impedance_deviation(geom,
                                                                                                   match_band)[0]

        cable, mode_list, spectrum = self._chain_spectrum()
        self.profiler.start_stage("Filter losses")
        f = spectrum.f_hz[fill.covers(spectrum.f_hz)]
        frames = []
        if f.size:
            for mode_id in (modes.TEM_MODE, modes.ModeId(modes.TE, 1, 1)):
                fm = filters.filter_mode(geom, mode_id, f[0])
                on = fm.propagates(f)
                losses = filters.filter_attenuation(geom, fm, f[on])
                frames.append(pd.DataFrame({
                    "f_hz": f[on], "mode": str(mode_id), "alpha_dm_db_per_m": losses.alpha_dm,
                    "alpha_c_db_per_m": losses.alpha_c, "alpha_dm_small_loss_db_per_m": losses.alpha_dm_small_loss,
                    "A_db": losses.material_loss_db(geom.length)}))
            self._write("filter.csv", pd.concat(frames, ignore_index=True))
        self.profiler.end_stage()

        measured = None
        if filter_config.measured_s21:
            measured = data_service.load_measured_s21(filter_config.measured_s21)
            self.manifest.notes.append("Attenuation from measured S21 is limited by the instrument noise floor; "
                                       "fluxes on that path are upper bounds.")
        self.profiler.start_stage("Residual flux")
        filtered = filters.residual_flux(spectrum, geom, cable, measured_s21=measured)
        self.profiler.end_stage()
        self._write("filter_flux.csv", flux_frame(filtered, mode_list))
        self.manifest.results["unfiltered_band_flux_per_s"] = spectrum.band_flux
        self.manifest.results["band_flux_per_s"] = filtered.band_flux
        self.manifest.notes.append("Entry reflection is applied at the cable-to-filter interface only.")


def flux_frame(spectrum, mode_list):
    """ Long table f_hz,mode,N_per_hz_per_s with one block per propagating mode and a total block. """
    cutoffs = {md.mode: md.f_c for md in mode_list}
    frames = []
    for mode_id, values in spectrum.per_mode.items():
        on = spectrum.f_hz > cutoffs.get(mode_id, 0.0)
        frames.append(pd.DataFrame({"f_hz": spectrum.f_hz[on], "mode": str(mode_id), "N_per_hz_per_s": values[on]}))
    frames.append(pd.DataFrame({"f_hz": spectrum.f_hz, "mode": TOTAL, "N_per_hz_per_s": spectrum.summed}))
    return pd.concat(frames, ignore_index=True)


def run_pipeline(run_config):
    """
    Runs the configured pipeline and writes its outputs and manifest.
    :type run_config: config.RunConfig
    :rtype: ResultManifest
    """
    try:
        return PipelineRunner(run_config).run()
    except PipelineError:
        raise
    except (CryofluxError, ValueError, ArithmeticError, OSError) as err:
        raise PipelineError(run_config.pipeline, err) from err
