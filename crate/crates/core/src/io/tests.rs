use super::*;
use crate::analysis::{generate_s21, resonance_grid};
use proptest::prelude::*;

fn spectrum_pair() -> (ComplexSpectrum<f64>, ComplexSpectrum<f64>) {
    let f: Vec<f64> = (0..7).map(|i| 4.11e9 + 50.0 * (i as f64 - 3.0)).collect();
    let out = (0..7).map(|i| Complex::new(i as f64 * 1.5e-3, -2.0e7 / (i as f64 + 1.0))).collect();
    let mut drive = vec![Complex::new(0.0, 0.0); 7];
    drive[2] = Complex::new(1234.5, 0.0);
    drive[4] = Complex::new(0.0, 1234.5);
    (
        ComplexSpectrum::new(f.clone(), out, Frame::Rotating(4.11e9)).unwrap(),
        ComplexSpectrum::new(f, drive, Frame::Rotating(4.11e9)).unwrap(),
    )
}

#[test]
fn spectrum_roundtrip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    let (o, d) = spectrum_pair();
    write_spectrum_csv(&path, &o, &d).unwrap();
    let back = read_spectrum_csv(&path).unwrap();
    assert_eq!(back.output, o);
    assert_eq!(back.drive, d);
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# schema: 1\n"));
    assert!(text.contains("freq_hz,re_aout,im_aout,re_ain,im_ain\n"));
}

#[test]
fn s21_roundtrip_keeps_metadata() {
    let p = CircleParams {
        f_r: 4.11e9,
        q_l: 2.4e5,
        q_c_mag: 6e5,
        phi: 0.1,
        a: 0.8,
        alpha: 1.2,
        tau: 50e-9,
    };
    let mut trace = generate_s21(&p, &resonance_grid(p.f_r, p.q_l, 51, 10.0), Some(-60.0), 3).unwrap();
    trace.power_dbm = Some(-120.0);
    let prov = S21Provenance {
        params: p,
        noise_db: Some(-60.0),
        seed: 3,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    write_bytes(&path, s21_csv(&trace, Some(&prov)).unwrap().as_bytes()).unwrap();
    let back = read_s21_csv(&path).unwrap();
    assert_eq!(back, trace);
    let t = Table::read(&path).unwrap();
    let params: CircleParams<f64> = serde_json::from_str(t.meta("generator_params").unwrap()).unwrap();
    assert_eq!(params, p);
    assert_eq!(t.meta("generator_seed"), Some("3"));
}

#[test]
fn bad_files_are_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "freq_hz,re_s21,im_s21\n1,2,3\n").unwrap();
    assert!(matches!(read_s21_csv(&path), Err(Error::Format { .. })));
    fs::write(&path, "# schema: 2\nfreq_hz,re_s21,im_s21\n1,2,3\n").unwrap();
    assert!(matches!(read_s21_csv(&path), Err(Error::Format { .. })));
    fs::write(&path, "# schema: 1\nfreq_hz,re_s21\n1,2\n").unwrap();
    assert!(matches!(read_s21_csv(&path), Err(Error::Format { .. })));
    fs::write(&path, "# schema: 1\nfreq_hz,re_s21,im_s21\n1,x,3\n").unwrap();
    assert!(matches!(read_s21_csv(&path), Err(Error::Format { .. })));
    let missing = dir.path().join("none.csv");
    assert!(matches!(read_s21_csv(&missing), Err(Error::Io { .. })));
}

#[test]
fn sweep_csv_layout() {
    let (o, _) = spectrum_pair();
    let r = SweepResult {
        axis_kind: SweepAxis::PhotonNumber,
        axis: vec![200.0, 2000.0],
        spectra: vec![o.clone(), o],
        imp_orders: vec![3, 5],
        imp_powers: vec![vec![1.0, 0.1], vec![10.0, 1.0]],
        drive_transmission: vec![0.5, 0.6],
        mean_photon_numbers: vec![190.0, 1900.0],
    };
    let fit = PowerLawFit {
        k: 0.42,
        l: -3.0,
        stderr_k: 0.01,
        stderr_l: 0.02,
        x_min: 200.0,
        x_max: 2000.0,
        n_points: 2,
    };
    let text = sweep_csv(&r, &[OrderFit { order: 3, fit }]);
    let t = Table::parse(&text, Path::new("mem")).unwrap();
    assert_eq!(
        t.headers,
        ["photons_per_tone", "imp3_db", "imp5_db", "drive_transmission", "mean_photons"]
    );
    assert_eq!(t.rows[1][1], 10.0);
    assert_eq!(t.rows[0][2], -10.0);
    assert_eq!(t.meta("power_reference"), Some(DB_REFERENCE));
    assert!(t.trailer[0].starts_with("fit: order=3 k=0.42"));
}

#[test]
fn result_document_roundtrip() {
    let doc = ResultDocument::new(ResultBody::PowerLaw {
        points: vec![(1.0, 2.0), (10.0, 20.0)],
        fit: PowerLawFit {
            k: 1.0,
            l: 0.30103,
            stderr_k: 0.0,
            stderr_l: 0.0,
            x_min: 1.0,
            x_max: 10.0,
            n_points: 2,
        },
    });
    let json = doc.to_json();
    assert!(json.contains("\"result\": \"power_law\""));
    assert!(json.contains("\"schema\": 1"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    fs::write(&path, &json).unwrap();
    assert_eq!(ResultDocument::read(&path).unwrap(), doc);
    fs::write(&path, json.replace("\"schema\": 1", "\"schema\": 7")).unwrap();
    assert!(matches!(ResultDocument::read(&path), Err(Error::Format { .. })));
}

#[test]
fn comparison_rows() {
    let c = Comparison::new("kappa_ext", 100.0, 101.0);
    assert_eq!(c.error, 1.0);
    assert_eq!(c.relative_error, 0.01);
    let csv = comparison_csv(&[c]);
    assert!(csv.contains("parameter,truth,recovered,error,relative_error\nkappa_ext,100,101,1,0.01\n"));
}

proptest! {
    #[test]
    fn number_format_roundtrips(x in proptest::num::f64::ANY) {
        let s = format_number(x);
        let back: f64 = s.parse().unwrap();
        if x.is_nan() {
            prop_assert!(back.is_nan());
        } else {
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
