use std::path::Path;

use crate::error::Result;
use crate::io::{format_number, to_db, ResultBody, ResultDocument, SCHEMA_VERSION};
use crate::simulator::SweepResult;

/// One long-format row; `z` is only set for heatmap series.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotRow {
    pub series: String,
    pub x: f64,
    pub y: f64,
    pub z: Option<f64>,
}

fn row(series: impl Into<String>, x: f64, y: f64) -> PlotRow {
    PlotRow {
        series: series.into(),
        x,
        y,
        z: None,
    }
}

fn order_lines(sweep: &SweepResult<f64>, out: &mut Vec<PlotRow>) {
    for (j, o) in sweep.imp_orders.iter().enumerate() {
        for (i, x) in sweep.axis.iter().enumerate() {
            out.push(row(format!("imp{o}_db"), *x, to_db(sweep.imp_powers[i][j])));
        }
    }
}

fn heatmap(sweep: &SweepResult<f64>, out: &mut Vec<PlotRow>) {
    for (x, spec) in sweep.axis.iter().zip(&sweep.spectra) {
        for k in 0..spec.len() {
            out.push(PlotRow {
                series: "output_db".into(),
                x: *x,
                y: spec.frequencies[k],
                z: Some(to_db(spec.power(k))),
            });
        }
    }
}

/// Reshapes one result document into plot rows.
pub fn plot_rows(doc: &ResultDocument) -> Vec<PlotRow> {
    let mut out = Vec::new();
    match &doc.body {
        ResultBody::Simulation { output, .. } => {
            let s = &output.output;
            for k in 0..s.len() {
                out.push(row("output_db", s.frequencies[k], to_db(s.power(k))));
            }
        }
        ResultBody::SweepPower { sweep, fits, .. } => {
            order_lines(sweep, &mut out);
            for f in fits {
                for x in &sweep.axis {
                    if *x >= f.fit.x_min && *x <= f.fit.x_max {
                        out.push(row(format!("imp{}_fit_db", f.order), *x, to_db(f.fit.eval(*x))));
                    }
                }
            }
        }
        ResultBody::SweepFrequency { sweep, .. } => {
            heatmap(sweep, &mut out);
            order_lines(sweep, &mut out);
            for (x, t) in sweep.axis.iter().zip(&sweep.drive_transmission) {
                out.push(row("drive_transmission_db", *x, 20.0 * t.log10()));
            }
        }
        ResultBody::BetaScan { slopes, .. } => {
            for b in slopes {
                out.push(row("imp3_slope", b.beta, b.k));
            }
        }
        ResultBody::Reconstruction { reconstruction: r } => {
            for p in &r.curve {
                out.push(row("kappa_hat_hz", p.amplitude, p.kappa_hat));
            }
            for p in &r.curve {
                out.push(row("kappa_fit_hz", p.amplitude, p.kappa_fit));
            }
        }
        ResultBody::Roundtrip {
            setup,
            reconstruction: r,
            ..
        } => {
            for p in &r.curve {
                out.push(row("kappa_hat_hz", p.amplitude, p.kappa_hat));
            }
            for p in &r.curve {
                out.push(row("kappa_tls_model_hz", p.amplitude, setup.model.tls_damping_rate(p.amplitude)));
            }
        }
        ResultBody::CircleFit { fits, .. } => {
            for (i, f) in fits.iter().enumerate() {
                out.push(row("q_i", i as f64, f.q_i));
            }
            for (i, f) in fits.iter().enumerate() {
                out.push(row("f_r_hz", i as f64, f.f_r));
            }
        }
        ResultBody::TunnelingFit { points, fit, .. } => {
            let p = fit.params();
            for &(n, q) in points {
                out.push(row("inverse_qi", n, 1.0 / q));
            }
            for &(n, _) in points {
                out.push(row("inverse_qi_fit", n, p.inverse_qi(n, fit.thermal_factor)));
            }
        }
        ResultBody::PowerLaw { points, fit } => {
            for &(x, y) in points {
                out.push(row("data", x, y));
            }
            for &(x, _) in points {
                if x >= fit.x_min && x <= fit.x_max {
                    out.push(row("fit", x, fit.eval(x)));
                }
            }
        }
        ResultBody::GeneratedS21 { trace, .. } => {
            for (f, z) in trace.frequencies.iter().zip(&trace.s21) {
                out.push(row("s21_mag_db", *f, 20.0 * z.norm().log10()));
            }
            for (f, z) in trace.frequencies.iter().zip(&trace.s21) {
                out.push(row("s21_phase_rad", *f, z.arg()));
            }
        }
    }
    out
}

/// Long-format CSV (`source,series,x,y,z`) for the given result documents.
pub fn emit_plot_data(paths: &[&Path]) -> Result<String> {
    let mut text = format!("# schema: {SCHEMA_VERSION}\n# content: plot_data\nsource,series,x,y,z\n");
    let mut w = csv::Writer::from_writer(Vec::new());
    for path in paths {
        let doc = ResultDocument::read(path)?;
        let source = path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
        for r in plot_rows(&doc) {
            w.write_record([
                source.as_str(),
                r.series.as_str(),
                &format_number(r.x),
                &format_number(r.y),
                &r.z.map(format_number).unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
    }
    let body = w.into_inner().expect("in-memory write");
    text.push_str(std::str::from_utf8(&body).expect("csv output is UTF-8"));
    Ok(text)
}
