//! Declarative experiment runs: a TOML config names an experiment kind and
//! its parameters, [`run`] executes it and writes result files plus a
//! `run-manifest.json`.

mod config;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{circle_fit, fit_power_law, fit_tunneling_model, generate_s21, resonance_grid};
use crate::error::{Error, Result};
use crate::io::{
    circle_fits_csv, comparison_csv, format_number, io_error, s21_csv, spectrum_csv, sweep_csv, sweep_spectra_csv,
    write_bytes, Comparison, OrderFit, ResultBody, ResultDocument, S21Provenance, SimulationSetup, Table,
    SCHEMA_VERSION,
};
use crate::reconstruction::{reconstruct, ReconstructionResult};
use crate::simulator::{beta_slope_scan, simulate_two_tone, sweep_frequency, sweep_power};

pub use config::{
    AxisSpec, BetaScanSpec, DriveSpec, ExperimentConfig, ExperimentKind, InputSpec, ModelSpec, PowerLawSpec, Preset,
    S21Spec, Spacing, SweepSpec, TunnelingSpec,
};
pub use plot::{emit_plot_data, plot_rows, PlotRow};

pub const MANIFEST_NAME: &str = "run-manifest.json";

/// A config ready to run: relative input paths are anchored to the
/// directory of the file it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
}

impl LoadedConfig {
    pub fn new(mut config: ExperimentConfig, base_dir: &Path) -> Self {
        config.input.anchor(base_dir);
        Self { config }
    }

    /// Reads a TOML config, or the config embedded in a run manifest when
    /// the file is JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let origin = path.display().to_string();
        let config = if path.extension().is_some_and(|e| e == "json") {
            let m: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Config {
                path: origin.clone(),
                reason: e.to_string(),
            })?;
            m.config
        } else {
            ExperimentConfig::from_toml(&text, &origin)?
        };
        Ok(Self::new(config, base))
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.config.rng_seed = s;
        }
        self
    }

    /// SHA-256 of the canonical JSON form of the effective config.
    pub fn sha256(&self) -> String {
        let json = serde_json::to_string(&self.config).expect("configs serialise");
        hex_digest(json.as_bytes())
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub kind: ExperimentKind,
    pub rng_seed: u64,
    pub config_sha256: String,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputRecord>,
    pub config: ExperimentConfig,
}

/// One in-memory output file.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    fn new(name: &str, contents: String) -> Self {
        Self {
            name: name.to_string(),
            contents,
        }
    }
}

fn json(name: &str, body: ResultBody) -> OutputFile {
    OutputFile::new(name, ResultDocument::new(body).to_json())
}

/// Computes every output of a run without touching the file system, other
/// than reading inputs.
pub fn execute(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    cfg.validate()?;
    match cfg.kind {
        ExperimentKind::Simulate => run_simulate(cfg),
        ExperimentKind::SweepPower => run_sweep_power(cfg),
        ExperimentKind::SweepFrequency => run_sweep_frequency(cfg),
        ExperimentKind::BetaScan => run_beta_scan(cfg),
        ExperimentKind::Reconstruct => run_reconstruct(cfg),
        ExperimentKind::Roundtrip => run_roundtrip(cfg),
        ExperimentKind::CircleFit => run_circle_fit(cfg),
        ExperimentKind::FitTls => run_fit_tls(cfg),
        ExperimentKind::FitPowerlaw => run_fit_powerlaw(cfg),
        ExperimentKind::GenerateS21 => run_generate_s21(cfg),
    }
}

/// Executes the run, writes its outputs into `out_dir` and writes the
/// manifest last.
pub fn run(loaded: &LoadedConfig, out_dir: &Path) -> Result<RunManifest> {
    let start = Instant::now();
    let files = execute(&loaded.config)?;
    let mut outputs = Vec::with_capacity(files.len());
    for f in &files {
        write_bytes(&out_dir.join(&f.name), f.contents.as_bytes())?;
        outputs.push(OutputRecord {
            file: f.name.clone(),
            sha256: hex_digest(f.contents.as_bytes()),
        });
    }
    let manifest = RunManifest {
        schema: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: loaded.config.kind,
        rng_seed: loaded.config.rng_seed,
        config_sha256: loaded.sha256(),
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs,
        config: loaded.config.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifests serialise");
    text.push('\n');
    write_bytes(&out_dir.join(MANIFEST_NAME), text.as_bytes())?;
    Ok(manifest)
}

fn setup(cfg: &ExperimentConfig) -> Result<SimulationSetup> {
    let model = cfg.model()?;
    let (drive, detection) = cfg.drive_spec().resolve(&model)?;
    Ok(SimulationSetup {
        model,
        drive,
        detection,
    })
}

/// Photon number per tone behind the configured drive level.
fn photons_per_tone(s: &SimulationSetup) -> f64 {
    let unit = s.model.drive_for_photon_number(1.0);
    (s.drive.amplitude / unit).powi(2)
}

fn run_simulate(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let s = setup(cfg)?;
    let out = simulate_two_tone(&s.model, &s.drive, &s.detection, &cfg.simulation()?)?;
    Ok(vec![
        OutputFile::new("spectrum.csv", spectrum_csv(&out.output, &out.drive)?),
        json(
            "simulation.json",
            ResultBody::Simulation {
                photons_per_tone: photons_per_tone(&s),
                setup: s,
                output: out,
            },
        ),
    ])
}

fn run_sweep_power(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let s = setup(cfg)?;
    let spec = cfg.sweep.as_ref().expect("validated");
    let axis = spec.photons.as_ref().expect("validated").resolve("sweep.photons")?;
    let sweep = sweep_power(&s.model, &s.drive, &s.detection, &cfg.simulation()?, &axis)?;
    let range = spec
        .fit_range
        .map_or((axis[0], axis[axis.len() - 1]), |[a, b]| (a, b));
    let fits = spec
        .fit_orders
        .iter()
        .map(|&order| {
            let p = sweep.order_series(order).expect("validated order");
            let pts: Vec<(f64, f64)> = sweep.axis.iter().copied().zip(p).collect();
            Ok(OrderFit {
                order,
                fit: fit_power_law(&pts, range)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![
        OutputFile::new("sweep_power.csv", sweep_csv(&sweep, &fits)),
        OutputFile::new("sweep_power_spectra.csv", sweep_spectra_csv(&sweep)),
        json("sweep_power.json", ResultBody::SweepPower { setup: s, sweep, fits }),
    ])
}

fn run_sweep_frequency(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let s = setup(cfg)?;
    let offsets = cfg
        .sweep
        .as_ref()
        .and_then(|x| x.detunings.as_ref())
        .expect("validated")
        .resolve("sweep.detunings")?;
    let centers: Vec<f64> = offsets.iter().map(|d| s.model.f0 + d).collect();
    let sweep = sweep_frequency(&s.model, &s.drive, &s.detection, &cfg.simulation()?, &centers)?;
    Ok(vec![
        OutputFile::new("sweep_frequency.csv", sweep_csv(&sweep, &[])),
        OutputFile::new("sweep_frequency_spectra.csv", sweep_spectra_csv(&sweep)),
        json(
            "sweep_frequency.json",
            ResultBody::SweepFrequency {
                photons_per_tone: photons_per_tone(&s),
                setup: s,
                sweep,
            },
        ),
    ])
}

fn run_beta_scan(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let s = setup(cfg)?;
    let axis = cfg
        .sweep
        .as_ref()
        .and_then(|x| x.photons.as_ref())
        .expect("validated")
        .resolve("sweep.photons")?;
    let betas = &cfg.beta_scan.as_ref().expect("validated").betas;
    let slopes = beta_slope_scan(&s.model, betas, &s.drive, &s.detection, &cfg.simulation()?, &axis)?;
    let mut t = Table::new(&["beta", "k", "l", "stderr_k"]);
    t.push_meta("schema", SCHEMA_VERSION.to_string());
    t.push_meta("content", "beta_scan");
    t.push_meta("fit_range", format!("n_c = a_c^2 to {}", format_number(axis[axis.len() - 1])));
    for b in &slopes {
        t.push_row(vec![b.beta, b.k, b.l, b.stderr_k]);
    }
    Ok(vec![
        OutputFile::new("beta_scan.csv", t.to_csv()),
        json(
            "beta_scan.json",
            ResultBody::BetaScan {
                setup: s,
                photon_targets: axis,
                slopes,
            },
        ),
    ])
}

fn curve_csv(r: &ReconstructionResult<f64>, truth: Option<&crate::physics::ResonatorModel<f64>>) -> String {
    let mut headers = vec!["amplitude", "kappa_hat_hz", "kappa_fit_hz"];
    if truth.is_some() {
        headers.push("kappa_tls_true_hz");
    }
    let mut t = Table::new(&headers);
    t.push_meta("schema", SCHEMA_VERSION.to_string());
    t.push_meta("content", "damping_curve");
    for p in &r.curve {
        let mut row = vec![p.amplitude, p.kappa_hat, p.kappa_fit];
        if let Some(m) = truth {
            row.push(m.tls_damping_rate(p.amplitude));
        }
        t.push_row(row);
    }
    t.to_csv()
}

fn run_reconstruct(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let path = cfg.input.spectrum.as_ref().expect("validated");
    let pair = crate::io::read_spectrum_csv(path)?;
    let opts = cfg.reconstruction.as_ref().expect("validated");
    let r = reconstruct(&pair.output, &pair.drive, opts)?;
    Ok(vec![
        OutputFile::new("reconstruction_curve.csv", curve_csv(&r, None)),
        json("reconstruction.json", ResultBody::Reconstruction { reconstruction: r }),
    ])
}

/// Largest `|κ̂ - κ_TLS| / κ_TLS` over the sampled curve.
pub fn damping_curve_error(r: &ReconstructionResult<f64>, truth: &crate::physics::ResonatorModel<f64>) -> f64 {
    r.curve
        .iter()
        .map(|p| {
            let k = truth.tls_damping_rate(p.amplitude);
            ((p.kappa_hat - k) / k).abs()
        })
        .fold(0.0, f64::max)
}

fn run_roundtrip(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let s = setup(cfg)?;
    let out = simulate_two_tone(&s.model, &s.drive, &s.detection, &cfg.simulation()?)?;
    let opts = cfg.reconstruction.as_ref().expect("validated");
    let r = reconstruct(&out.output, &out.drive, opts)?;
    let m = &s.model;
    let mut comparison = vec![
        Comparison::new("kappa_ext_hz", m.kappa_ext, r.kappa_ext),
        Comparison::new("f0_hz", m.f0, r.f0),
        Comparison::new("kappa_tls_hz", m.kappa_tls, r.kappa_tls),
        Comparison::new("a_c", m.a_c, r.a_c),
        Comparison::new("beta", m.beta, r.beta),
    ];
    let curve_err = damping_curve_error(&r, m);
    comparison.push(Comparison {
        parameter: "kappa_hat_max_relative_error".into(),
        truth: 0.0,
        recovered: curve_err,
        error: curve_err,
        relative_error: curve_err,
    });
    Ok(vec![
        OutputFile::new("spectrum.csv", spectrum_csv(&out.output, &out.drive)?),
        OutputFile::new("roundtrip.csv", comparison_csv(&comparison)),
        OutputFile::new("roundtrip_curve.csv", curve_csv(&r, Some(m))),
        json(
            "roundtrip.json",
            ResultBody::Roundtrip {
                photons_per_tone: photons_per_tone(&s),
                setup: s,
                reconstruction: r,
                comparison,
            },
        ),
    ])
}

fn run_circle_fit(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for path in &cfg.input.traces {
        let trace = crate::io::read_s21_csv(path)?;
        let r = circle_fit(&trace)?;
        rows.push((path.clone(), r.clone(), trace.power_dbm));
        fits.push(r);
    }
    Ok(vec![
        OutputFile::new("circle_fit.csv", circle_fits_csv(&rows)),
        json(
            "circle_fit.json",
            ResultBody::CircleFit {
                traces: cfg.input.traces.clone(),
                fits,
            },
        ),
    ])
}

fn run_fit_tls(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let t = cfg.tunneling.expect("validated");
    let points = crate::io::read_xy_csv(cfg.input.points.as_ref().expect("validated"), "photons", "q_i")?;
    let fit = fit_tunneling_model(&points, t.f_r, t.temperature, t.fit_beta, t.beta, t.weighting)?;
    let params = fit.params();
    let mut table = Table::new(&["photons", "q_i", "inverse_qi", "inverse_qi_fit"]);
    table.push_meta("schema", SCHEMA_VERSION.to_string());
    table.push_meta("content", "tunneling_fit");
    for &(n, q) in &points {
        table.push_row(vec![n, q, 1.0 / q, params.inverse_qi(n, fit.thermal_factor)]);
    }
    Ok(vec![
        OutputFile::new("tunneling_fit.csv", table.to_csv()),
        json(
            "tunneling_fit.json",
            ResultBody::TunnelingFit {
                f_r: t.f_r,
                temperature: t.temperature,
                points,
                fit,
            },
        ),
    ])
}

fn run_fit_powerlaw(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let p = cfg.power_law.as_ref().expect("validated");
    let points = crate::io::read_xy_csv(cfg.input.points.as_ref().expect("validated"), &p.x_column, &p.y_column)?;
    let fit = fit_power_law(&points, (p.range[0], p.range[1]))?;
    let mut table = Table::new(&["x", "y", "y_fit"]);
    table.push_meta("schema", SCHEMA_VERSION.to_string());
    table.push_meta("content", "power_law");
    for &(x, y) in &points {
        table.push_row(vec![x, y, fit.eval(x)]);
    }
    table.push_trailer(format!(
        "fit: k={} l={} stderr_k={} stderr_l={} x_min={} x_max={} points={}",
        format_number(fit.k),
        format_number(fit.l),
        format_number(fit.stderr_k),
        format_number(fit.stderr_l),
        format_number(fit.x_min),
        format_number(fit.x_max),
        fit.n_points
    ));
    Ok(vec![
        OutputFile::new("power_law.csv", table.to_csv()),
        json("power_law.json", ResultBody::PowerLaw { points, fit }),
    ])
}

fn run_generate_s21(cfg: &ExperimentConfig) -> Result<Vec<OutputFile>> {
    let s = cfg.s21.expect("validated");
    let p = s.params;
    let freqs = resonance_grid(p.f_r, p.q_l, s.points, s.linewidths);
    let mut trace = generate_s21(&p, &freqs, s.noise_db, cfg.rng_seed)?;
    trace.power_dbm = s.power_dbm;
    trace.temperature = s.temperature;
    let provenance = S21Provenance {
        params: p,
        noise_db: s.noise_db,
        seed: cfg.rng_seed,
    };
    Ok(vec![
        OutputFile::new("s21.csv", s21_csv(&trace, Some(&provenance))?),
        json("s21.json", ResultBody::GeneratedS21 { provenance, trace }),
    ])
}

/// Output directory used when none is given: `out/<kind>` under the
/// current directory.
pub fn default_out_dir(kind: ExperimentKind) -> PathBuf {
    PathBuf::from("out").join(kind.name())
}

#[cfg(test)]
mod tests;
