//! Conventional resonator characterisation: circle fit of S21 traces,
//! internal quality factors, the standard tunnelling model and power laws.

mod circle;
pub mod lm;
mod powerlaw;
mod quality;
mod tunneling;

pub use circle::{circle_fit, generate_s21, resonance_grid, CircleFitResult, CircleParams, S21Trace};
pub use lm::{levenberg_marquardt, LmOptions, LmReport};
pub use powerlaw::{fit_power_law, PowerLawFit};
pub use quality::{qi_from_ql, ql_from_qi, quality_from_rate};
pub use tunneling::{
    fit_tunneling_model, generate_tunneling_data, log_space, thermal_factor, TunnelingFitResult, TunnelingParams,
    Weighting,
};
