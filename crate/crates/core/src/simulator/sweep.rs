use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate_two_tone, SimulationConfig};
use crate::analysis::fit_power_law;
use crate::error::{Error, Result};
use crate::physics::{ComplexSpectrum, DetectionComb, DriveComb, ResonatorModel};
use crate::Real;

/// IMP orders extracted by the sweeps.
pub const IMP_ORDERS: [u32; 4] = [3, 5, 7, 9];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Target mean photon number per drive tone.
    PhotonNumber,
    /// Comb centre frequency, Hz.
    CenterFrequency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub axis_kind: SweepAxis,
    pub axis: Vec<T>,
    /// Output-field spectrum per axis point.
    pub spectra: Vec<ComplexSpectrum<T>>,
    pub imp_orders: Vec<u32>,
    /// `imp_powers[i][j]`: output power of order `imp_orders[j]` at axis
    /// point `i`, photons/s, averaged over the two sidebands.
    pub imp_powers: Vec<Vec<T>>,
    /// `|a_out / a_in|` at the drive tones, averaged over both tones.
    pub drive_transmission: Vec<T>,
    /// Time-averaged intracavity photon number per axis point.
    pub mean_photon_numbers: Vec<T>,
}

impl<T: Real> SweepResult<T> {
    /// IMP power of one order along the axis.
    pub fn order_series(&self, order: u32) -> Option<Vec<T>> {
        let j = self.imp_orders.iter().position(|&o| o == order)?;
        Some(self.imp_powers.iter().map(|row| row[j]).collect())
    }
}

/// Output power at IMP order `order`, the mean of `|a_out|²` over the two
/// comb tones `m = ±order`. Order 1 gives the drive tones. Returns `None` if
/// the order is even or outside the comb.
pub fn imp_power<T: Real>(spec: &ComplexSpectrum<T>, det: &DetectionComb<T>, order: u32) -> Option<T> {
    if order % 2 == 0 {
        return None;
    }
    let m = i64::from(order);
    let lo = det.index_of_offset(-m)?;
    let hi = det.index_of_offset(m)?;
    if spec.len() != det.n_tones {
        return None;
    }
    Some((spec.power(lo) + spec.power(hi)) / T::lit(2.0))
}

fn drive_transmission<T: Real>(out: &ComplexSpectrum<T>, drive: &ComplexSpectrum<T>, det: &DetectionComb<T>) -> T {
    let mut acc = T::zero();
    for m in [-1, 1] {
        let i = det.index_of_offset(m).expect("drive tones are on the comb");
        acc = acc + out.amplitudes[i].norm() / drive.amplitudes[i].norm();
    }
    acc / T::lit(2.0)
}

fn check_ascending<T: Real>(what: &str, xs: &[T]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid(what, "must not be empty"));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(what, "must be strictly ascending"));
    }
    Ok(())
}

fn assemble<T: Real>(
    axis_kind: SweepAxis,
    axis: Vec<T>,
    runs: Vec<(super::SimulationOutput<T>, DetectionComb<T>)>,
) -> SweepResult<T> {
    let mut spectra = Vec::with_capacity(runs.len());
    let mut imp_powers = Vec::with_capacity(runs.len());
    let mut transmission = Vec::with_capacity(runs.len());
    let mut photons = Vec::with_capacity(runs.len());
    for (out, det) in runs {
        imp_powers.push(
            IMP_ORDERS
                .iter()
                .map(|&o| imp_power(&out.output, &det, o).unwrap_or_else(T::nan))
                .collect(),
        );
        transmission.push(drive_transmission(&out.output, &out.drive, &det));
        photons.push(out.mean_photon_number);
        spectra.push(out.output);
    }
    SweepResult {
        axis_kind,
        axis,
        spectra,
        imp_orders: IMP_ORDERS.to_vec(),
        imp_powers,
        drive_transmission: transmission,
        mean_photon_numbers: photons,
    }
}

/// Runs one simulation per target photon number, with the drive amplitude
/// calibrated by [`ResonatorModel::drive_for_photon_number`]. Points run in
/// parallel; point `i` uses noise seed `cfg.rng_seed + i`.
pub fn sweep_power<T: Real>(
    model: &ResonatorModel<T>,
    drive: &DriveComb<T>,
    det: &DetectionComb<T>,
    cfg: &SimulationConfig<T>,
    photon_targets: &[T],
) -> Result<SweepResult<T>> {
    check_ascending("photon_targets", photon_targets)?;
    if !(photon_targets[0] > T::zero()) {
        return Err(Error::invalid("photon_targets", "must be > 0"));
    }
    model.validate()?;
    let runs = photon_targets
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut d = *drive;
            d.amplitude = model.drive_for_photon_number(n);
            let mut c = *cfg;
            c.rng_seed = cfg.rng_seed.wrapping_add(i as u64);
            simulate_two_tone(model, &d, det, &c)
                .map(|out| (out, *det))
                .map_err(|e| point_error(i, n, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(SweepAxis::PhotonNumber, photon_targets.to_vec(), runs))
}

/// Moves drive and detection comb together across `centers`. Each point is
/// simulated in the frame of its own comb centre unless `cfg.frame_freq` is
/// set, in which case that frame is shifted along with the comb.
pub fn sweep_frequency<T: Real>(
    model: &ResonatorModel<T>,
    drive: &DriveComb<T>,
    det: &DetectionComb<T>,
    cfg: &SimulationConfig<T>,
    centers: &[T],
) -> Result<SweepResult<T>> {
    check_ascending("centers", centers)?;
    if !(drive.amplitude > T::zero()) {
        return Err(Error::invalid("drive.amplitude", "must be > 0 for a frequency sweep"));
    }
    let runs = centers
        .par_iter()
        .enumerate()
        .map(|(i, &fc)| {
            let mut d = *drive;
            d.f_center = fc;
            let mut dc = *det;
            dc.f_center = fc;
            let mut c = *cfg;
            c.frame_freq = cfg.frame_freq.map(|f| f - det.f_center + fc);
            c.rng_seed = cfg.rng_seed.wrapping_add(i as u64);
            simulate_two_tone(model, &d, &dc, &c)
                .map(|out| (out, dc))
                .map_err(|e| point_error(i, fc, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(SweepAxis::CenterFrequency, centers.to_vec(), runs))
}

fn point_error<T: Real>(index: usize, axis: T, e: Error) -> Error {
    Error::SweepPoint {
        index,
        axis: axis.to_f64_lossy(),
        source: Box::new(e),
    }
}

/// Third-order slope for one saturation exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSlope<T> {
    pub beta: T,
    pub k: T,
    pub l: T,
    pub stderr_k: T,
}

/// For each `β`, runs [`sweep_power`] and fits the third-order IMP power
/// against the target photon number over the points above `n_c = a_c²`.
pub fn beta_slope_scan<T: Real>(
    model: &ResonatorModel<T>,
    betas: &[T],
    drive: &DriveComb<T>,
    det: &DetectionComb<T>,
    cfg: &SimulationConfig<T>,
    photon_targets: &[T],
) -> Result<Vec<BetaSlope<T>>> {
    if betas.is_empty() {
        return Err(Error::invalid("betas", "must not be empty"));
    }
    let n_c = model.critical_photon_number();
    let n_max = photon_targets.last().copied().unwrap_or_else(T::zero);
    betas
        .iter()
        .map(|&beta| {
            let m = model.with_beta(beta);
            m.validate()?;
            let sweep = sweep_power(&m, drive, det, cfg, photon_targets)?;
            let p3 = sweep.order_series(3).expect("order 3 is always extracted");
            let pts: Vec<(T, T)> = sweep.axis.iter().copied().zip(p3).collect();
            let fit = fit_power_law(&pts, (n_c, n_max))?;
            Ok(BetaSlope {
                beta,
                k: fit.k,
                l: fit.l,
                stderr_k: fit.stderr_k,
            })
        })
        .collect()
}
