use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{log_space, CircleParams, Weighting};
use crate::error::{Error, Result};
use crate::physics::{presets, DetectionComb, DriveComb, ResonatorModel};
use crate::reconstruction::ReconstructionOptions;
use crate::simulator::SimulationConfig;

fn config_error(path: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    SweepPower,
    SweepFrequency,
    BetaScan,
    Reconstruct,
    CircleFit,
    FitTls,
    FitPowerlaw,
    Roundtrip,
    GenerateS21,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        Self::Simulate,
        Self::SweepPower,
        Self::SweepFrequency,
        Self::BetaScan,
        Self::Reconstruct,
        Self::CircleFit,
        Self::FitTls,
        Self::FitPowerlaw,
        Self::Roundtrip,
        Self::GenerateS21,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::SweepPower => "sweep-power",
            Self::SweepFrequency => "sweep-frequency",
            Self::BetaScan => "beta-scan",
            Self::Reconstruct => "reconstruct",
            Self::CircleFit => "circle-fit",
            Self::FitTls => "fit-tls",
            Self::FitPowerlaw => "fit-powerlaw",
            Self::Roundtrip => "roundtrip",
            Self::GenerateS21 => "generate-s21",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    StandardFit,
    HarmonicBalanceFit,
}

/// Either a preset with optional overrides or all six parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_ext: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_tls: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

impl ModelSpec {
    pub fn resolve(&self) -> Result<ResonatorModel<f64>> {
        let base = self.preset.map(|p| match p {
            Preset::StandardFit => presets::standard_fit(),
            Preset::HarmonicBalanceFit => presets::harmonic_balance_fit(),
        });
        let pick = |name: &str, v: Option<f64>, from: Option<f64>| {
            v.or(from)
                .ok_or_else(|| config_error(&format!("model.{name}"), "required when no preset is given"))
        };
        let m = ResonatorModel {
            f0: pick("f0", self.f0, base.map(|b| b.f0))?,
            kappa0: pick("kappa0", self.kappa0, base.map(|b| b.kappa0))?,
            kappa_ext: pick("kappa_ext", self.kappa_ext, base.map(|b| b.kappa_ext))?,
            kappa_tls: pick("kappa_tls", self.kappa_tls, base.map(|b| b.kappa_tls))?,
            a_c: pick("a_c", self.a_c, base.map(|b| b.a_c))?,
            beta: pick("beta", self.beta, base.map(|b| b.beta))?,
        };
        m.validate()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DriveSpec {
    /// Comb centre, Hz; defaults to the model's `f0`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_center: Option<f64>,
    pub delta: f64,
    pub n_tones: usize,
    /// Target photon number per tone (linear-response calibration).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photons: Option<f64>,
    /// Explicit amplitude per tone, √(photons/s); excludes `photons`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    pub phase1: f64,
    pub phase2: f64,
}

impl Default for DriveSpec {
    fn default() -> Self {
        Self {
            f_center: None,
            delta: 100.0,
            n_tones: 31,
            photons: None,
            amplitude: None,
            phase1: 0.0,
            phase2: 0.0,
        }
    }
}

impl DriveSpec {
    /// Drive and detection combs; the amplitude is zero unless `photons` or
    /// `amplitude` is set.
    pub fn resolve(&self, model: &ResonatorModel<f64>) -> Result<(DriveComb<f64>, DetectionComb<f64>)> {
        if self.photons.is_some() && self.amplitude.is_some() {
            return Err(config_error("drive", "set either `photons` or `amplitude`, not both"));
        }
        if let Some(n) = self.photons {
            if !(n > 0.0) || !n.is_finite() {
                return Err(config_error("drive.photons", "must be finite and > 0"));
            }
        }
        let amplitude = match (self.photons, self.amplitude) {
            (Some(n), _) => model.drive_for_photon_number(n),
            (_, Some(a)) => a,
            _ => 0.0,
        };
        let mut drive = DriveComb::new(self.f_center.unwrap_or(model.f0), self.delta, amplitude);
        drive.phase1 = self.phase1;
        drive.phase2 = self.phase2;
        let det = DetectionComb::for_drive(&drive, self.n_tones);
        det.check_drive(&drive)?;
        Ok((drive, det))
    }

    pub fn has_level(&self) -> bool {
        self.photons.is_some() || self.amplitude.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Explicit `values`, or `points` values from `start` to `stop`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

impl AxisSpec {
    pub fn resolve(&self, path: &str) -> Result<Vec<f64>> {
        let out = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n < 2 {
                    return Err(config_error(&format!("{path}.points"), "must be >= 2"));
                }
                match self.spacing {
                    Spacing::Log => {
                        if !(a > 0.0 && b > 0.0) {
                            return Err(config_error(path, "log spacing needs start and stop > 0"));
                        }
                        log_space(a, b, n)
                    }
                    Spacing::Linear => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
                }
            }
            _ => {
                return Err(config_error(
                    path,
                    "give either `values` or all of `start`, `stop` and `points`",
                ))
            }
        };
        if out.is_empty() || out.iter().any(|x| !x.is_finite()) {
            return Err(config_error(path, "values must be finite and non-empty"));
        }
        if out.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(config_error(path, "values must be strictly ascending"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Photon-number axis for `sweep-power` and `beta-scan`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub photons: Option<AxisSpec>,
    /// Comb-centre offsets from the model `f0`, Hz, for `sweep-frequency`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detunings: Option<AxisSpec>,
    /// IMP orders whose slopes are fitted after a power sweep.
    #[serde(default = "default_fit_orders")]
    pub fit_orders: Vec<u32>,
    /// Photon range of the slope fits; defaults to the whole axis.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_range: Option<[f64; 2]>,
}

fn default_fit_orders() -> Vec<u32> {
    vec![3, 5, 7, 9]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaScanSpec {
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    /// Spectrum CSV for `reconstruct`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<PathBuf>,
    /// S21 CSV files for `circle-fit`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub traces: Vec<PathBuf>,
    /// Two-column CSV for `fit-tls` and `fit-powerlaw`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<PathBuf>,
}

impl InputSpec {
    /// Makes relative paths relative to `base`.
    pub fn anchor(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.spectrum.as_mut() {
            fix(p);
        }
        self.traces.iter_mut().for_each(fix);
        if let Some(p) = self.points.as_mut() {
            fix(p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TunnelingSpec {
    /// Resonance frequency, Hz.
    pub f_r: f64,
    /// Sample temperature, K.
    pub temperature: f64,
    pub fit_beta: bool,
    /// Exponent used when `fit_beta` is false.
    pub beta: f64,
    pub weighting: Weighting,
}

impl Default for TunnelingSpec {
    fn default() -> Self {
        Self {
            f_r: 4.11e9,
            temperature: 0.01,
            fit_beta: true,
            beta: 0.5,
            weighting: Weighting::Relative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawSpec {
    pub range: [f64; 2],
    #[serde(default = "default_x")]
    pub x_column: String,
    #[serde(default = "default_y")]
    pub y_column: String,
}

fn default_x() -> String {
    "x".into()
}

fn default_y() -> String {
    "y".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct S21Spec {
    pub params: CircleParams<f64>,
    #[serde(default = "default_s21_points")]
    pub points: usize,
    /// Span in loaded linewidths.
    #[serde(default = "default_linewidths")]
    pub linewidths: f64,
    /// Additive noise below `a²`, dB; absent for a noiseless trace.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

fn default_s21_points() -> usize {
    401
}

fn default_linewidths() -> f64 {
    10.0
}

/// One experiment run. Unknown keys anywhere are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub input: InputSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveSpec>,
    #[serde(default)]
    pub simulation: SimulationConfig<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_scan: Option<BetaScanSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionOptions<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tunneling: Option<TunnelingSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_law: Option<PowerLawSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s21: Option<S21Spec>,
}

fn need<'a, T>(v: &'a Option<T>, path: &str, kind: ExperimentKind) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| config_error(path, format!("required for kind `{}`", kind.name())))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(origin, e.to_string().trim_end()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialise to TOML")
    }

    pub(crate) fn model(&self) -> Result<ResonatorModel<f64>> {
        need(&self.model, "model", self.kind)?.resolve()
    }

    pub(crate) fn drive_spec(&self) -> DriveSpec {
        self.drive.unwrap_or_default()
    }

    /// Simulation settings with the run seed applied.
    pub(crate) fn simulation(&self) -> Result<SimulationConfig<f64>> {
        if self.simulation.rng_seed != 0 && self.simulation.rng_seed != self.rng_seed {
            return Err(config_error(
                "simulation.rng_seed",
                "set the seed with the top-level `rng_seed` instead",
            ));
        }
        let mut c = self.simulation;
        c.rng_seed = self.rng_seed;
        c.validate()?;
        Ok(c)
    }

    /// Checks every field the kind needs, before any computation.
    pub fn validate(&self) -> Result<()> {
        let k = self.kind;
        let simulated = matches!(
            k,
            ExperimentKind::Simulate
                | ExperimentKind::SweepPower
                | ExperimentKind::SweepFrequency
                | ExperimentKind::BetaScan
                | ExperimentKind::Roundtrip
        );
        if simulated {
            let model = self.model()?;
            self.simulation()?;
            let d = self.drive_spec();
            d.resolve(&model)?;
            let level_needed = matches!(
                k,
                ExperimentKind::Simulate | ExperimentKind::SweepFrequency | ExperimentKind::Roundtrip
            );
            if level_needed && !d.has_level() {
                return Err(config_error(
                    "drive.photons",
                    format!("`photons` or `amplitude` is required for kind `{}`", k.name()),
                ));
            }
            if !level_needed && d.has_level() {
                return Err(config_error(
                    "drive.photons",
                    format!("not used by kind `{}`; the level comes from sweep.photons", k.name()),
                ));
            }
        }
        match k {
            ExperimentKind::SweepPower | ExperimentKind::BetaScan => {
                let s = need(&self.sweep, "sweep", k)?;
                let axis = need(&s.photons, "sweep.photons", k)?.resolve("sweep.photons")?;
                if !(axis[0] > 0.0) {
                    return Err(config_error("sweep.photons", "values must be > 0"));
                }
                if k == ExperimentKind::SweepPower {
                    for &o in &s.fit_orders {
                        if !crate::simulator::IMP_ORDERS.contains(&o) {
                            return Err(config_error("sweep.fit_orders", format!("order {o} is not extracted")));
                        }
                    }
                    if let Some([a, b]) = s.fit_range {
                        if !(a > 0.0 && b > a) {
                            return Err(config_error("sweep.fit_range", "needs 0 < min < max"));
                        }
                    }
                } else {
                    let b = need(&self.beta_scan, "beta_scan", k)?;
                    if b.betas.is_empty() || b.betas.iter().any(|x| !(0.0..=1.0).contains(x)) {
                        return Err(config_error("beta_scan.betas", "needs values in [0, 1]"));
                    }
                }
            }
            ExperimentKind::SweepFrequency => {
                let s = need(&self.sweep, "sweep", k)?;
                need(&s.detunings, "sweep.detunings", k)?.resolve("sweep.detunings")?;
            }
            ExperimentKind::Reconstruct | ExperimentKind::Roundtrip => {
                need(&self.reconstruction, "reconstruction", k)?.validate()?;
                if k == ExperimentKind::Reconstruct {
                    need(&self.input.spectrum, "input.spectrum", k)?;
                }
            }
            ExperimentKind::CircleFit => {
                if self.input.traces.is_empty() {
                    return Err(config_error("input.traces", "required for kind `circle-fit`"));
                }
            }
            ExperimentKind::FitTls => {
                need(&self.input.points, "input.points", k)?;
                let t = need(&self.tunneling, "tunneling", k)?;
                if !(t.f_r > 0.0 && t.temperature > 0.0) {
                    return Err(config_error("tunneling", "f_r and temperature must be > 0"));
                }
                if !(0.0..=1.0).contains(&t.beta) {
                    return Err(config_error("tunneling.beta", "must lie in [0, 1]"));
                }
            }
            ExperimentKind::FitPowerlaw => {
                need(&self.input.points, "input.points", k)?;
                let p = need(&self.power_law, "power_law", k)?;
                if !(p.range[0] > 0.0 && p.range[1] > p.range[0]) {
                    return Err(config_error("power_law.range", "needs 0 < min < max"));
                }
            }
            ExperimentKind::GenerateS21 => {
                let s = need(&self.s21, "s21", k)?;
                s.params.validate()?;
                if s.points < 20 {
                    return Err(config_error("s21.points", "must be >= 20"));
                }
                if !(s.linewidths > 0.0) {
                    return Err(config_error("s21.linewidths", "must be > 0"));
                }
            }
            ExperimentKind::Simulate => {}
        }
        Ok(())
    }
}
