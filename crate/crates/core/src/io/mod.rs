//! File formats. Every file carries `schema: 1`; CSV files put it, and any
//! other metadata, in leading `# key: value` comment lines. FORMATS.md in
//! the repository root documents each schema column by column.

mod table;

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::analysis::{CircleFitResult, CircleParams, PowerLawFit, S21Trace, TunnelingFitResult};
use crate::error::{Error, Result};
use crate::physics::{ComplexSpectrum, DetectionComb, DriveComb, Frame, ResonatorModel};
use crate::reconstruction::ReconstructionResult;
use crate::simulator::{BetaSlope, SimulationOutput, SweepAxis, SweepResult};

pub use table::{format_number, Table};

pub const SCHEMA_VERSION: u32 = 1;

/// Reference stated in every file that carries decibels.
pub const DB_REFERENCE: &str = "dB = 10*log10(|a_out|^2 / (1 photon/s)), output flux per comb tone";

/// `10·log10(p)` for a flux in photons/s.
pub fn to_db(power: f64) -> f64 {
    10.0 * power.log10()
}

pub(crate) fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Writes `bytes`, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn check_schema(table: &Table, path: &Path) -> Result<()> {
    match table.meta("schema") {
        Some(v) if v.trim() == SCHEMA_VERSION.to_string() => Ok(()),
        Some(v) => Err(format_error(path, format!("unsupported schema `{v}`, expected {SCHEMA_VERSION}"))),
        None => Err(format_error(path, "missing `# schema:` header line")),
    }
}

/// Output and input spectra on a shared comb, as read by `reconstruct`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPair {
    pub output: ComplexSpectrum<f64>,
    pub drive: ComplexSpectrum<f64>,
}

pub fn spectrum_csv(output: &ComplexSpectrum<f64>, drive: &ComplexSpectrum<f64>) -> Result<String> {
    output.check_same_grid(drive)?;
    let frame = match output.frame {
        Frame::Laboratory => "laboratory".to_string(),
        Frame::Rotating(f) => format_number(f),
    };
    let mut t = Table::new(&["freq_hz", "re_aout", "im_aout", "re_ain", "im_ain"]);
    t.push_meta("schema", SCHEMA_VERSION.to_string());
    t.push_meta("content", "spectrum");
    t.push_meta("frame_hz", frame);
    t.push_meta("units", "amplitudes in sqrt(photons/s)");
    t.push_meta("power_reference", DB_REFERENCE);
    for i in 0..output.len() {
        let (o, d) = (output.amplitudes[i], drive.amplitudes[i]);
        t.push_row(vec![output.frequencies[i], o.re, o.im, d.re, d.im]);
    }
    Ok(t.to_csv())
}

pub fn write_spectrum_csv(path: &Path, output: &ComplexSpectrum<f64>, drive: &ComplexSpectrum<f64>) -> Result<()> {
    write_bytes(path, spectrum_csv(output, drive)?.as_bytes())
}

pub fn read_spectrum_csv(path: &Path) -> Result<SpectrumPair> {
    let t = Table::read(path)?;
    check_schema(&t, path)?;
    let frame = match t.meta("frame_hz").map(str::trim) {
        None | Some("laboratory") => Frame::Laboratory,
        Some(v) => Frame::Rotating(
            v.parse::<f64>()
                .map_err(|_| format_error(path, format!("frame_hz `{v}` is not a number")))?,
        ),
    };
    let f = t.column(path, "freq_hz")?;
    let c = |re: &str, im: &str| -> Result<Vec<Complex<f64>>> {
        Ok(t.column(path, re)?
            .into_iter()
            .zip(t.column(path, im)?)
            .map(|(a, b)| Complex::new(a, b))
            .collect())
    };
    let output = ComplexSpectrum::new(f.clone(), c("re_aout", "im_aout")?, frame)
        .map_err(|e| format_error(path, e.to_string()))?;
    let drive = ComplexSpectrum::new(f, c("re_ain", "im_ain")?, frame)
        .map_err(|e| format_error(path, e.to_string()))?;
    Ok(SpectrumPair { output, drive })
}

/// Provenance of a synthetic S21 trace, stored in its header.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct S21Provenance {
    pub params: CircleParams<f64>,
    pub noise_db: Option<f64>,
    pub seed: u64,
}

pub fn s21_csv(trace: &S21Trace<f64>, provenance: Option<&S21Provenance>) -> Result<String> {
    trace.validate()?;
    let mut t = Table::new(&["freq_hz", "re_s21", "im_s21"]);
    t.push_meta("schema", SCHEMA_VERSION.to_string());
    t.push_meta("content", "s21");
    if let Some(p) = trace.power_dbm {
        t.push_meta("power_dbm", format_number(p));
    }
    if let Some(k) = trace.temperature {
        t.push_meta("temperature_k", format_number(k));
    }
    if let Some(p) = provenance {
        let json = serde_json::to_string(&p.params).expect("parameters serialise");
        t.push_meta("generator_params", json);
        t.push_meta(
            "generator_noise_db",
            p.noise_db.map_or_else(|| "none".to_string(), format_number),
        );
        t.push_meta("generator_seed", p.seed.to_string());
    }
    for (f, z) in trace.frequencies.iter().zip(&trace.s21) {
        t.push_row(vec![*f, z.re, z.im]);
    }
    Ok(t.to_csv())
}

pub fn read_s21_csv(path: &Path) -> Result<S21Trace<f64>> {
    let t = Table::read(path)?;
    check_schema(&t, path)?;
    let opt = |key: &str| -> Result<Option<f64>> {
        t.meta(key)
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| format_error(path, format!("{key} `{v}` is not a number")))
            })
            .transpose()
    };
    let s21 = t
        .column(path, "re_s21")?
        .into_iter()
        .zip(t.column(path, "im_s21")?)
        .map(|(a, b)| Complex::new(a, b))
        .collect();
    let mut trace = S21Trace::new(t.column(path, "freq_hz")?, s21).map_err(|e| format_error(path, e.to_string()))?;
    trace.power_dbm = opt("power_dbm")?;
    trace.temperature = opt("temperature_k")?;
    Ok(trace)
}

/// Reads two named numeric columns from a commented CSV file.
pub fn read_xy_csv(path: &Path, x: &str, y: &str) -> Result<Vec<(f64, f64)>> {
    let t = Table::read(path)?;
    check_schema(&t, path)?;
    Ok(t.column(path, x)?.into_iter().zip(t.column(path, y)?).collect())
}

/// Slope fit of one IMP order, appended to sweep files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub order: u32,
    pub fit: PowerLawFit<f64>,
}

pub fn sweep_csv(result: &SweepResult<f64>, fits: &[OrderFit]) -> String {
    let axis = match result.axis_kind {
        SweepAxis::PhotonNumber => "photons_per_tone",
        SweepAxis::CenterFrequency => "center_freq_hz",
    };
    let mut headers = vec![axis.to_string()];
    headers.extend(result.imp_orders.iter().map(|o| format!("imp{o}_db")));
    headers.push("drive_transmission".into());
    headers.push("mean_photons".into());
    let mut t = Table::new(&headers.iter().map(String::as_str).collect::<Vec<_>>());
    t.push_meta("schema", SCHEMA_VERSION.to_string());
    t.push_meta("content", "sweep");
    t.push_meta("axis", axis);
    t.push_meta("power_reference", DB_REFERENCE);
    for i in 0..result.axis.len() {
        let mut row = vec![result.axis[i]];
        row.extend(result.imp_powers[i].iter().map(|&p| to_db(p)));
        row.push(result.drive_transmission[i]);
        row.push(result.mean_photon_numbers[i]);
        t.push_row(row);
    }
    for f in fits {
        t.push_trailer(format!(
            "fit: order={} k={} l={} stderr_k={} n_min={} n_max={} points={}",
            f.order,
            format_number(f.fit.k),
            format_number(f.fit.l),
            format_number(f.fit.stderr_k),
            format_number(f.fit.x_min),
            format_number(f.fit.x_max),
            f.fit.n_points
        ));
    }
    t.to_csv()
}

/// Long-format table of one sweep's comb spectra in dB, used for heatmaps.
pub fn sweep_spectra_csv(result: &SweepResult<f64>) -> String {
    let mut t = Table::new(&["axis", "comb_freq_hz", "power_db"]);
    t.push_meta("schema", SCHEMA_VERSION.to_string());
    t.push_meta("content", "sweep_spectra");
    t.push_meta("power_reference", DB_REFERENCE);
    for (x, spec) in result.axis.iter().zip(&result.spectra) {
        for i in 0..spec.len() {
            t.push_row(vec![*x, spec.frequencies[i], to_db(spec.power(i))]);
        }
    }
    t.to_csv()
}

/// Ground truth against recovered value for one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub parameter: String,
    pub truth: f64,
    pub recovered: f64,
    /// `recovered - truth`.
    pub error: f64,
    /// `(recovered - truth) / truth`.
    pub relative_error: f64,
}

impl Comparison {
    pub fn new(parameter: &str, truth: f64, recovered: f64) -> Self {
        Self {
            parameter: parameter.to_string(),
            truth,
            recovered,
            error: recovered - truth,
            relative_error: (recovered - truth) / truth,
        }
    }
}

pub fn comparison_csv(rows: &[Comparison]) -> String {
    // the parameter name is the only text column, so this one is written directly
    let mut out = format!("# schema: {SCHEMA_VERSION}\n# content: comparison\nparameter,truth,recovered,error,relative_error\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.parameter,
            format_number(r.truth),
            format_number(r.recovered),
            format_number(r.error),
            format_number(r.relative_error)
        ));
    }
    out
}

pub fn circle_fits_csv(fits: &[(PathBuf, CircleFitResult<f64>, Option<f64>)]) -> String {
    let mut t = Table::new(&[
        "trace", "power_dbm", "f_r_hz", "q_l", "q_c_mag", "q_i", "phi", "a", "alpha", "tau_s", "rms_residual",
        "ill_conditioned",
    ]);
    t.push_meta("schema", SCHEMA_VERSION.to_string());
    t.push_meta("content", "circle_fits");
    for (i, (path, r, power)) in fits.iter().enumerate() {
        t.push_meta(&format!("trace{i}"), path.display().to_string());
        t.push_row(vec![
            i as f64,
            power.unwrap_or(f64::NAN),
            r.f_r,
            r.q_l,
            r.q_c_mag,
            r.q_i,
            r.phi,
            r.a,
            r.alpha,
            r.tau,
            r.rms_residual,
            if r.ill_conditioned { 1.0 } else { 0.0 },
        ]);
    }
    t.to_csv()
}

/// Model and comb used for a simulated result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSetup {
    pub model: ResonatorModel<f64>,
    pub drive: DriveComb<f64>,
    pub detection: DetectionComb<f64>,
}

/// JSON result file body, discriminated by `result`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ResultBody {
    Simulation {
        setup: SimulationSetup,
        photons_per_tone: f64,
        output: SimulationOutput<f64>,
    },
    SweepPower {
        setup: SimulationSetup,
        sweep: SweepResult<f64>,
        fits: Vec<OrderFit>,
    },
    SweepFrequency {
        setup: SimulationSetup,
        photons_per_tone: f64,
        sweep: SweepResult<f64>,
    },
    BetaScan {
        setup: SimulationSetup,
        photon_targets: Vec<f64>,
        slopes: Vec<BetaSlope<f64>>,
    },
    Reconstruction {
        reconstruction: ReconstructionResult<f64>,
    },
    Roundtrip {
        setup: SimulationSetup,
        photons_per_tone: f64,
        reconstruction: ReconstructionResult<f64>,
        comparison: Vec<Comparison>,
    },
    CircleFit {
        traces: Vec<PathBuf>,
        fits: Vec<CircleFitResult<f64>>,
    },
    TunnelingFit {
        f_r: f64,
        temperature: f64,
        points: Vec<(f64, f64)>,
        fit: TunnelingFitResult<f64>,
    },
    PowerLaw {
        points: Vec<(f64, f64)>,
        fit: PowerLawFit<f64>,
    },
    GeneratedS21 {
        provenance: S21Provenance,
        trace: S21Trace<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema: u32,
    #[serde(flatten)]
    pub body: ResultBody,
}

impl ResultDocument {
    pub fn new(body: ResultBody) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            body,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result documents serialise");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| format_error(path, e.to_string()))?;
        match value.get("schema").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(v) => return Err(format_error(path, format!("unsupported schema {v}, expected {SCHEMA_VERSION}"))),
            None => return Err(format_error(path, "missing `schema` field")),
        }
        serde_json::from_value(value).map_err(|e| format_error(path, e.to_string()))
    }
}

#[cfg(test)]
mod tests;
