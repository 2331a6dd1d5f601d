//! Running a parsed configuration and writing its CSV outputs and manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{format_float, serialize, ExperimentConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    density_experiment, phase_grid, run_bloch, run_crossover, run_resonant_drift, run_sbo,
    velocity_curve, velocity_map,
};
use crate::observables::{CentroidTrace, DensityMap};
use crate::spectral::Spectrum;

pub const RESOLVED_CONFIG: &str = "config.resolved";
pub const MANIFEST: &str = "manifest";

/// Outcome of one `run` invocation.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
    /// Summary values as `(key, value)`.
    pub results: Vec<(String, String)>,
    /// Errors: a fatal one for single runs, or one entry per failed sweep point.
    pub errors: Vec<String>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.errors.is_empty()
    }

    fn result(&mut self, key: impl Into<String>, value: impl ToString) {
        self.results.push((key.into(), value.to_string()));
    }
}

struct CsvWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CsvWriter {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let file = File::create(&path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        let mut w = Self {
            path,
            out: BufWriter::new(file),
        };
        w.line(header.iter().map(|s| s.to_string()))?;
        Ok(w)
    }

    fn line(&mut self, fields: impl IntoIterator<Item = String>) -> Result<()> {
        let joined = fields.into_iter().collect::<Vec<_>>().join(",");
        writeln!(self.out, "{joined}")
            .map_err(|e| Error::io(format!("writing {}", self.path.display()), e))
    }

    fn finish(mut self) -> Result<()> {
        self.out
            .flush()
            .map_err(|e| Error::io(format!("writing {}", self.path.display()), e))
    }
}

fn write_trace(dir: &Path, name: &str, trace: &CentroidTrace) -> Result<()> {
    let mut w = CsvWriter::create(dir, name, &["t", "centroid"])?;
    for (t, x) in trace.samples.iter().enumerate() {
        w.line([t.to_string(), format_float(*x)])?;
    }
    w.finish()
}

fn write_spectrum(dir: &Path, name: &str, spec: &Spectrum) -> Result<()> {
    let mut w = CsvWriter::create(dir, name, &["omega", "magnitude"])?;
    for (f, m) in spec.freqs.iter().zip(&spec.mags) {
        w.line([format_float(*f), format_float(*m)])?;
    }
    w.finish()
}

fn write_density(dir: &Path, name: &str, map: &DensityMap) -> Result<()> {
    let mut w = CsvWriter::create(dir, name, &["t", "n", "probability"])?;
    for (t, row) in map.times.iter().zip(&map.rows) {
        for (n, p) in row.iter().enumerate() {
            w.line([t.to_string(), n.to_string(), format_float(*p)])?;
        }
    }
    w.finish()
}

/// Execute `config` on the current rayon pool and write its outputs into
/// `out_dir`. Simulation failures are reported in the returned
/// [`RunReport`]; only I/O problems surface as `Err`.
pub fn execute(config: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    let mut report = RunReport::default();
    let started = Instant::now();
    fs::create_dir_all(out_dir)
        .map_err(|e| Error::io(format!("creating {}", out_dir.display()), e))?;
    fs::write(out_dir.join(RESOLVED_CONFIG), serialize(config))
        .map_err(|e| Error::io(format!("writing {RESOLVED_CONFIG}"), e))?;
    report.files.push(RESOLVED_CONFIG.into());

    if let Err(e) = run_experiment(config, out_dir, &mut report) {
        match e {
            Error::Io { .. } => return Err(e),
            other => report.errors.push(other.to_string()),
        }
    }
    report.wall_time_s = started.elapsed().as_secs_f64();
    write_manifest(config, out_dir, &mut report)?;
    Ok(report)
}

/// [`execute`] on a dedicated pool of `jobs` worker threads (`0` picks the
/// number of available cores).
pub fn run(config: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::io("starting worker pool", std::io::Error::other(e)))?;
    pool.install(|| execute(config, out_dir))
}

fn run_experiment(config: &ExperimentConfig, dir: &Path, report: &mut RunReport) -> Result<()> {
    let file = |report: &mut RunReport, name: &str| report.files.push(name.to_string());
    match config {
        ExperimentConfig::Bloch(p) => {
            let run = run_bloch(p)?;
            write_trace(dir, "centroid.csv", &run.trace)?;
            file(report, "centroid.csv");
            write_spectrum(dir, "spectrum.csv", &run.spectrum)?;
            file(report, "spectrum.csv");
            if let Some(map) = &run.density {
                write_density(dir, "density.csv", map)?;
                file(report, "density.csv");
            }
            report.result("dominant_frequency", format_float(run.dominant));
            report.result(
                "bloch_frequency",
                format_float(run.config.field.bloch_frequency()),
            );
            report.result("resolution", format_float(run.spectrum.resolution));
        }
        ExperimentConfig::Sbo(p) => {
            let run = run_sbo(p)?;
            write_trace(dir, "centroid.csv", &run.trace)?;
            file(report, "centroid.csv");
            write_spectrum(dir, "spectrum.csv", &run.spectrum)?;
            file(report, "spectrum.csv");
            report.result("primary_peak", format_float(run.primary.0));
            if let Some((f, _)) = run.secondary {
                report.result("secondary_peak", format_float(f));
            }
            report.result(
                "third_component_magnitude",
                format_float(run.third_component),
            );
            report.result("resolution", format_float(run.spectrum.resolution));
        }
        ExperimentConfig::ResonantDrift(p) => {
            let run = run_resonant_drift(p)?;
            write_trace(dir, "centroid.csv", &run.trace)?;
            file(report, "centroid.csv");
            report.result("velocity", format_float(run.velocity));
        }
        ExperimentConfig::VelocityCurve { base, phi_points } => {
            let curve = velocity_curve(base, &phase_grid(*phi_points));
            let mut w = CsvWriter::create(dir, "curve.csv", &["phi", "velocity"])?;
            for (phi, v) in curve.phis.iter().zip(&curve.velocities) {
                w.line([format_float(*phi), format_float(*v)])?;
            }
            w.finish()?;
            file(report, "curve.csv");
            for (i, e) in &curve.errors {
                report
                    .errors
                    .push(format!("phi[{i}] = {}: {e}", curve.phis[*i]));
            }
            report.result("fit_v0", format_float(curve.fit.v0));
            report.result("fit_residual", format_float(curve.fit.residual));
            report.result("fit_offset_v0", format_float(curve.fit_with_offset.v0));
            report.result("fit_offset", format_float(curve.fit_with_offset.offset));
            report.result(
                "fit_offset_residual",
                format_float(curve.fit_with_offset.residual),
            );
            report.result("argmax_phi", format_float(curve.argmax()));
            report.result("argmin_phi", format_float(curve.argmin()));
        }
        ExperimentConfig::VelocityMap {
            base,
            phi_points,
            thetas,
        } => {
            let map = velocity_map(base, thetas, &phase_grid(*phi_points));
            let mut w = CsvWriter::create(dir, "map.csv", &["theta", "phi", "velocity"])?;
            for (i, theta) in map.thetas.iter().enumerate() {
                for (j, phi) in map.phis.iter().enumerate() {
                    let v = *map.v[i][j].as_ref().unwrap_or(&f64::NAN);
                    w.line([format_float(*theta), format_float(*phi), format_float(v)])?;
                }
            }
            w.finish()?;
            file(report, "map.csv");
            for (i, j, e) in map.errors() {
                report.errors.push(format!(
                    "theta[{i}] = {}, phi[{j}] = {}: {e}",
                    map.thetas[i], map.phis[j]
                ));
            }
            report.result("points", map.thetas.len() * map.phis.len());
        }
        ExperimentConfig::CrossoverScan(p) => {
            let res = run_crossover(p)?;
            let mut w =
                CsvWriter::create(dir, "crossover.csv", &["detuning", "dominant", "branch"])?;
            for ((d, dom), b) in res.detunings.iter().zip(&res.dominant).zip(&res.branches) {
                let branch = match b {
                    crate::spectral::Branch::Failed(_) => "failed".to_string(),
                    other => other.to_string(),
                };
                w.line([
                    format_float(*d),
                    format_float(dom.unwrap_or(f64::NAN)),
                    branch,
                ])?;
            }
            w.finish()?;
            file(report, "crossover.csv");
            for (i, b) in res.branches.iter().enumerate() {
                if let crate::spectral::Branch::Failed(e) = b {
                    report
                        .errors
                        .push(format!("detuning[{i}] = {}: {e}", res.detunings[i]));
                }
            }
            match res.crossover {
                Some(c) => {
                    report.result("crossover", format_float(c));
                    report.result("crossover_ratio", format_float(c / res.bloch_frequency()));
                }
                None => report.result("crossover", "none"),
            }
            report.result("unclassified_points", res.anomalies().len());
        }
        ExperimentConfig::Density(p) => {
            for (panel, map) in density_experiment(p)? {
                let name = format!("density_{}.csv", panel.label());
                write_density(dir, &name, &map)?;
                file(report, &name);
                report.result(
                    format!("{}_max_row_defect", panel.label()),
                    format_float(map.max_row_defect()),
                );
            }
        }
    }
    Ok(())
}

fn write_manifest(config: &ExperimentConfig, dir: &Path, report: &mut RunReport) -> Result<()> {
    use std::fmt::Write as _;
    let mut text = String::new();
    let _ = writeln!(text, "experiment = {}", config.experiment());
    let _ = writeln!(
        text,
        "status = {}",
        if report.success() { "ok" } else { "failed" }
    );
    let _ = writeln!(text, "wall_time_s = {:.3}", report.wall_time_s);
    let _ = writeln!(text, "files = {}", report.files.join(","));
    for (k, v) in &report.results {
        let _ = writeln!(text, "result.{k} = {v}");
    }
    let _ = writeln!(text, "error_count = {}", report.errors.len());
    for (i, e) in report.errors.iter().enumerate() {
        let _ = writeln!(text, "error.{i} = {e}");
    }
    fs::write(dir.join(MANIFEST), text).map_err(|e| Error::io(format!("writing {MANIFEST}"), e))?;
    report.files.push(MANIFEST.into());
    Ok(())
}
