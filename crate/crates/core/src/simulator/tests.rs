use approx::assert_relative_eq;

use super::*;
use crate::physics::presets;

fn linear_model() -> ResonatorModel<f64> {
    ResonatorModel::new(4.11e9, 860.0, 6.77e3, 0.0, 1.414, 0.3).unwrap()
}

fn setup(model: &ResonatorModel<f64>, photons: f64) -> (DriveComb<f64>, DetectionComb<f64>) {
    let d = DriveComb::new(model.f0, 100.0, model.drive_for_photon_number(photons));
    let det = DetectionComb::for_drive(&d, 31);
    (d, det)
}

fn fast_cfg() -> SimulationConfig<f64> {
    SimulationConfig {
        samples_per_period: 256,
        ..Default::default()
    }
}

#[test]
fn zero_drive_gives_zero_spectrum() {
    let m = presets::standard_fit();
    let (d, det) = setup(&m, 0.0);
    let out = simulate_two_tone(&m, &d, &det, &fast_cfg()).unwrap();
    assert!(out.output.amplitudes.iter().all(|a| a.norm() == 0.0));
    assert_eq!(out.mean_photon_number, 0.0);
}

#[test]
fn linear_resonator_has_no_mixing_and_matches_analytic_response() {
    let m = linear_model();
    let (d, det) = setup(&m, 1e3);
    let out = simulate_two_tone(&m, &d, &det, &fast_cfg()).unwrap();
    let drive_power = imp_power(&out.output, &det, 1).unwrap();
    for (i, a) in out.output.amplitudes.iter().enumerate() {
        if det.offset_of_index(i).abs() != 1 {
            assert!(a.norm_sqr() < 1e-10 * drive_power, "bin {i}: {}", a.norm_sqr());
        }
    }
    for (f, ain) in d.tones() {
        let i = out.output.index_of(f).unwrap();
        let expect = m.steady_state_amplitude_linear(f, ain);
        assert_relative_eq!(out.intracavity.amplitudes[i].re, expect.re, max_relative = 1e-7);
        assert_relative_eq!(out.intracavity.amplitudes[i].im, expect.im, max_relative = 1e-7);
    }
}

#[test]
fn output_field_identities() {
    let m = linear_model();
    let (d, det) = setup(&m, 1.0);
    let frame = Frame::Rotating(det.f_center);
    let ain = d.on_comb(&det, frame).unwrap();
    let zero = ComplexSpectrum::zeros(det.frequencies(), frame);
    assert_eq!(output_field(&zero, &ain, m.kappa_ext).unwrap(), ain);

    // single on-resonance tone: |a_out/a_in| = |1 - 2κ_ext/κ_total|
    let a_in = Complex::new(3.0, 0.0);
    let a = m.steady_state_amplitude_linear(m.f0, a_in);
    let ratio = ((2.0 * std::f64::consts::PI * m.kappa_ext).sqrt() * a + a_in).norm() / a_in.norm();
    assert_relative_eq!(ratio, (1.0 - 2.0 * m.kappa_ext / m.kappa_total()).abs(), max_relative = 1e-12);
    // golden: 1 - 2·6770/7630
    assert_relative_eq!(ratio, 0.774574049803408, max_relative = 1e-12);

    let other = ComplexSpectrum::zeros(det.frequencies(), Frame::Rotating(0.0));
    assert!(output_field(&zero, &other, 1.0).is_err());
}

#[test]
fn linear_energy_balance() {
    let m = linear_model();
    let (d, det) = setup(&m, 500.0);
    let out = simulate_two_tone(&m, &d, &det, &fast_cfg()).unwrap();
    let p_in: f64 = out.drive.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let p_out: f64 = out.output.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    let dissipated = 2.0 * std::f64::consts::PI * m.kappa0 * out.mean_photon_number;
    assert!(p_out <= p_in);
    assert_relative_eq!(p_in - p_out, dissipated, max_relative = 1e-2);
}

#[test]
fn nonlinear_spectrum_is_odd_and_ordered() {
    let m = presets::harmonic_balance_fit();
    let (d, det) = setup(&m, 1e3);
    let out = simulate_two_tone(&m, &d, &det, &SimulationConfig::default()).unwrap();
    let imps: Vec<f64> = [3, 5, 7, 9].iter().map(|&o| imp_power(&out.output, &det, o).unwrap()).collect();
    assert!(imps.windows(2).all(|w| w[0] > w[1]), "{imps:?}");
    let strongest = imps[0];
    for (i, a) in out.output.amplitudes.iter().enumerate() {
        if det.offset_of_index(i) % 2 == 0 {
            assert!(a.norm_sqr() < 1e-8 * strongest);
        }
    }
    assert!(out.steady_change < 1e-4);
    assert!(out.max_amplitude > 0.0);
}

#[test]
fn frame_choice_does_not_change_amplitudes() {
    let m = presets::standard_fit();
    let (d, det) = setup(&m, 300.0);
    let a = simulate_two_tone(&m, &d, &det, &fast_cfg()).unwrap();
    let cfg = SimulationConfig {
        frame_freq: Some(det.f_center + det.spacing),
        ..fast_cfg()
    };
    let b = simulate_two_tone(&m, &d, &det, &cfg).unwrap();
    let scale = a.output.max_amplitude();
    for (x, y) in a.output.amplitudes.iter().zip(&b.output.amplitudes) {
        assert!((x - y).norm() < 1e-6 * scale);
    }
}

#[test]
fn imp_powers_do_not_depend_on_drive_phases() {
    let m = presets::standard_fit();
    let (mut d, det) = setup(&m, 300.0);
    let a = simulate_two_tone(&m, &d, &det, &fast_cfg()).unwrap();
    d.phase1 = 0.7;
    d.phase2 = -1.9;
    let b = simulate_two_tone(&m, &d, &det, &fast_cfg()).unwrap();
    for o in [1, 3, 5, 7, 9] {
        let (pa, pb) = (imp_power(&a.output, &det, o).unwrap(), imp_power(&b.output, &det, o).unwrap());
        assert_relative_eq!(pa, pb, max_relative = 1e-6);
    }
}

#[test]
fn longer_window_agrees() {
    let m = presets::standard_fit();
    let (d, det) = setup(&m, 2e3);
    let a = simulate_two_tone(&m, &d, &det, &fast_cfg()).unwrap();
    let cfg = SimulationConfig {
        measure_periods: 2,
        ..fast_cfg()
    };
    let b = simulate_two_tone(&m, &d, &det, &cfg).unwrap();
    let scale = a.output.max_amplitude();
    for (x, y) in a.output.amplitudes.iter().zip(&b.output.amplitudes) {
        assert!((x - y).norm() < 1e-4 * scale);
    }
}

#[test]
fn slow_resonator_fails_steady_state_check() {
    // upper drive tone on a resonance with a 3 s ring-up time
    let m = ResonatorModel::new(4.11e9 + 50.0, 0.02, 0.02, 0.01, 1.0, 0.3).unwrap();
    let d = DriveComb::new(4.11e9, 100.0, 1.0);
    let det = DetectionComb::for_drive(&d, 31);
    let cfg = SimulationConfig {
        transient_periods: 1,
        samples_per_period: 64,
        ..Default::default()
    };
    match simulate_two_tone(&m, &d, &det, &cfg) {
        Err(Error::NotSteady { change, .. }) => assert!(change > 1e-4),
        other => panic!("expected NotSteady, got {other:?}"),
    }
}

#[test]
fn noise_is_seeded() {
    let m = presets::standard_fit();
    let (d, det) = setup(&m, 100.0);
    let cfg = SimulationConfig {
        noise_amplitude: 1.0,
        rng_seed: 7,
        ..fast_cfg()
    };
    let a = simulate_two_tone(&m, &d, &det, &cfg).unwrap();
    let b = simulate_two_tone(&m, &d, &det, &cfg).unwrap();
    assert_eq!(a.output, b.output);
    let c = simulate_two_tone(&m, &d, &det, &SimulationConfig { rng_seed: 8, ..cfg }).unwrap();
    assert_ne!(a.output, c.output);
    assert_eq!(a.intracavity, c.intracavity);
}

#[test]
fn config_validation() {
    let bad = [
        SimulationConfig {
            rel_tol: 0.0,
            ..Default::default()
        },
        SimulationConfig {
            transient_periods: 0,
            ..Default::default()
        },
        SimulationConfig {
            measure_periods: 0,
            ..Default::default()
        },
        SimulationConfig {
            noise_amplitude: -1.0,
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err());
    }
    let parsed: SimulationConfig<f64> = toml::from_str("transient_periods = 5").unwrap();
    assert_eq!(parsed.transient_periods, 5);
    assert_eq!(parsed.samples_per_period, 1024);
    assert!(toml::from_str::<SimulationConfig<f64>>("bogus = 1").is_err());
}

#[test]
fn single_precision_runs() {
    let m = presets::standard_fit::<f32>();
    let d = DriveComb::new(m.f0, 100.0, m.drive_for_photon_number(100.0));
    let det = DetectionComb::for_drive(&d, 11);
    // the f32 grid around 4 GHz is 256 Hz wide, so keep the lab frequencies
    // of this check small
    let shift = m.f0 - 1e4;
    let m = ResonatorModel { f0: m.f0 - shift, ..m };
    let d = DriveComb { f_center: d.f_center - shift, ..d };
    let det = DetectionComb { f_center: det.f_center - shift, ..det };
    let cfg = SimulationConfig {
        samples_per_period: 128,
        rel_tol: 1e-5,
        abs_tol: 1e-6,
        ..Default::default()
    };
    let out = simulate_two_tone(&m, &d, &det, &cfg).unwrap();
    let p1 = imp_power(&out.output, &det, 1).unwrap();
    let p3 = imp_power(&out.output, &det, 3).unwrap();
    assert!(p1.is_finite() && p3 > 0.0 && p3 < p1);
}

#[test]
fn power_sweep_orders_and_errors() {
    let m = presets::standard_fit();
    let (d, det) = setup(&m, 1.0);
    let targets = [200.0, 2e3, 2e4];
    let s = sweep_power(&m, &d, &det, &fast_cfg(), &targets).unwrap();
    assert_eq!(s.axis, targets.to_vec());
    assert_eq!(s.spectra.len(), 3);
    let p3 = s.order_series(3).unwrap();
    assert!(p3.windows(2).all(|w| w[1] > w[0]));
    assert!(sweep_power(&m, &d, &det, &fast_cfg(), &[2e3, 200.0]).is_err());
    assert!(sweep_power(&m, &d, &det, &fast_cfg(), &[]).is_err());

    let lin = linear_model();
    let s = sweep_power(&lin, &d, &det, &fast_cfg(), &[1e3]).unwrap();
    let floor = s.imp_powers[0][0] / imp_power(&s.spectra[0], &det, 1).unwrap();
    assert!(floor < 1e-10);
}

#[test]
fn sweep_errors_identify_the_point() {
    let m = ResonatorModel::new(4.11e9 + 50.0, 0.02, 0.02, 0.01, 1.0, 0.3).unwrap();
    let d = DriveComb::new(4.11e9, 100.0, 1.0);
    let det = DetectionComb::for_drive(&d, 31);
    let cfg = SimulationConfig {
        transient_periods: 1,
        samples_per_period: 64,
        ..Default::default()
    };
    match sweep_power(&m, &d, &det, &cfg, &[5.0]) {
        Err(Error::SweepPoint { index, axis, source }) => {
            assert_eq!(index, 0);
            assert_eq!(axis, 5.0);
            assert!(matches!(*source, Error::NotSteady { .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn frequency_sweep_is_symmetric_about_resonance() {
    let m = presets::standard_fit();
    let (d, det) = setup(&m, 1e3);
    let centers = [m.f0 - 4e3, m.f0, m.f0 + 4e3];
    let s = sweep_frequency(&m, &d, &det, &fast_cfg(), &centers).unwrap();
    let p3 = s.order_series(3).unwrap();
    assert!(p3[1] > p3[0] && p3[1] > p3[2]);
    assert_relative_eq!(p3[0], p3[2], max_relative = 1e-2);
    assert!(s.drive_transmission[1] < s.drive_transmission[0]);
}
