use super::*;
use crate::analysis::{generate_tunneling_data, log_space, TunnelingParams};
use crate::ErrorClass;

fn parse(text: &str) -> Result<ExperimentConfig> {
    ExperimentConfig::from_toml(text, "test.toml")
}

const S21: &str = r#"
kind = "generate-s21"
rng_seed = 4

[s21]
points = 201
noise_db = -90.0
power_dbm = -110.0
params = { f_r = 4.11e9, q_l = 2.0e5, q_c_mag = 4.0e5, phi = 0.1, a = 0.7, alpha = 1.0, tau = 4.0e-8 }
"#;

#[test]
fn empty_and_unknown_configs_are_validation_errors() {
    let e = parse("").unwrap_err();
    assert_eq!(e.class(), ErrorClass::Validation);
    assert!(e.to_string().contains("kind"), "{e}");
    let e = parse("kind = \"simulate\"\nbogus = 1\n").unwrap_err();
    assert!(e.to_string().contains("bogus"), "{e}");
    let e = parse("kind = \"simulate\"\n[drive]\nphotons = 1.0\nfoo = 2\n").unwrap_err();
    assert!(e.to_string().contains("foo"), "{e}");
    let e = parse("kind = \"teleport\"\n").unwrap_err();
    assert_eq!(e.class(), ErrorClass::Validation);
}

#[test]
fn kind_specific_fields_are_checked_with_paths() {
    let cases = [
        ("kind = \"simulate\"\n[drive]\nphotons = 1.0\n", "model"),
        ("kind = \"simulate\"\n[model]\npreset = \"standard-fit\"\n", "drive.photons"),
        ("kind = \"simulate\"\n[model]\nf0 = 4e9\n[drive]\nphotons = 1.0\n", "model.kappa0"),
        ("kind = \"sweep-power\"\n[model]\npreset = \"standard-fit\"\n", "sweep"),
        (
            "kind = \"sweep-power\"\n[model]\npreset = \"standard-fit\"\n[sweep]\nphotons = { start = 1.0, stop = 10.0 }\n",
            "sweep.photons",
        ),
        (
            "kind = \"sweep-power\"\n[model]\npreset = \"standard-fit\"\n[sweep]\nfit_orders = [4]\nphotons = { values = [1.0, 2.0] }\n",
            "sweep.fit_orders",
        ),
        ("kind = \"reconstruct\"\n[reconstruction]\nkappa_ext_guess = 5e3\n", "input.spectrum"),
        ("kind = \"reconstruct\"\n[input]\nspectrum = \"x.csv\"\n[reconstruction]\n", "reconstruction.kappa_ext_guess"),
        ("kind = \"circle-fit\"\n", "input.traces"),
        ("kind = \"fit-tls\"\n[input]\npoints = \"p.csv\"\n", "tunneling"),
        ("kind = \"fit-powerlaw\"\n[input]\npoints = \"p.csv\"\n[power_law]\nrange = [5.0, 1.0]\n", "power_law.range"),
        ("kind = \"generate-s21\"\n", "s21"),
        (
            "kind = \"simulate\"\nrng_seed = 1\n[model]\npreset = \"standard-fit\"\n[drive]\nphotons = 1.0\n[simulation]\nrng_seed = 2\n",
            "simulation.rng_seed",
        ),
    ];
    for (text, path) in cases {
        let e = parse(text).and_then(|c| c.validate()).unwrap_err();
        assert_eq!(e.class(), ErrorClass::Validation, "{text}");
        assert!(e.to_string().contains(path), "{text}: {e}");
    }
}

#[test]
fn config_toml_roundtrip() {
    let text = r#"
kind = "roundtrip"
rng_seed = 9

[model]
preset = "harmonic-balance-fit"
beta = 0.3

[drive]
photons = 1.3

[simulation]
transient_periods = 10

[reconstruction]
kappa_ext_guess = 5000.0
selection = { by = "strongest", count = 12 }
"#;
    let c = parse(text).unwrap();
    c.validate().unwrap();
    let back = parse(&c.to_toml()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn generated_trace_feeds_circle_fit() {
    let dir = tempfile::tempdir().unwrap();
    let gen = LoadedConfig::new(parse(S21).unwrap(), dir.path());
    let m = run(&gen, dir.path()).unwrap();
    assert_eq!(m.outputs.len(), 2);
    assert_eq!(m.rng_seed, 4);
    let fit_cfg = parse("kind = \"circle-fit\"\n[input]\ntraces = [\"s21.csv\"]\n").unwrap();
    let out = execute(&LoadedConfig::new(fit_cfg, dir.path()).config).unwrap();
    let doc: ResultDocument = serde_json::from_str(&out[1].contents).unwrap();
    let ResultBody::CircleFit { fits, .. } = doc.body else {
        panic!("wrong result kind")
    };
    let qi = 1.0 / (1.0 / 2.0e5 - 0.1f64.cos() / 4.0e5);
    assert!((fits[0].q_i / qi - 1.0).abs() < 0.01);
    assert!(out[0].contents.contains("-110"));
}

#[test]
fn fits_from_point_files() {
    let dir = tempfile::tempdir().unwrap();
    let truth = TunnelingParams {
        f_delta0_tls: 2e-7,
        n_c: 2.0,
        beta: 0.3,
        delta0: 2e-7,
    };
    let n = log_space(0.1, 1e3, 61);
    let pts = generate_tunneling_data(&truth, 4.11e9, 0.01, &n, 0.0, 1);
    let mut t = Table::new(&["photons", "q_i"]);
    t.push_meta("schema", "1");
    for (x, q) in &pts {
        t.push_row(vec![*x, *q]);
    }
    fs::write(dir.path().join("qi.csv"), t.to_csv()).unwrap();
    let cfg = parse("kind = \"fit-tls\"\n[input]\npoints = \"qi.csv\"\n[tunneling]\nf_r = 4.11e9\n").unwrap();
    let out = execute(&LoadedConfig::new(cfg, dir.path()).config).unwrap();
    let doc: ResultDocument = serde_json::from_str(&out[1].contents).unwrap();
    let ResultBody::TunnelingFit { fit, .. } = doc.body else {
        panic!("wrong result kind")
    };
    assert!((fit.n_c / 2.0 - 1.0).abs() < 1e-4);

    let mut t = Table::new(&["x", "y"]);
    t.push_meta("schema", "1");
    for i in 0..10 {
        let x = 10f64.powf(i as f64 / 3.0);
        t.push_row(vec![x, 3.0 * x.powf(0.45)]);
    }
    fs::write(dir.path().join("xy.csv"), t.to_csv()).unwrap();
    let cfg = parse("kind = \"fit-powerlaw\"\n[input]\npoints = \"xy.csv\"\n[power_law]\nrange = [1.0, 1e3]\n").unwrap();
    let out = execute(&LoadedConfig::new(cfg, dir.path()).config).unwrap();
    assert!(out[0].contents.contains("# fit: k=0.45"), "{}", out[0].contents);
}

#[test]
fn manifest_reruns_identically() {
    let text = r#"
kind = "simulate"
rng_seed = 3

[model]
preset = "harmonic-balance-fit"

[drive]
photons = 2.0
n_tones = 15

[simulation]
noise_amplitude = 1e-3
"#;
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let loaded = LoadedConfig::new(parse(text).unwrap(), dir.path());
    let m1 = run(&loaded, &first).unwrap();
    let again = LoadedConfig::load(&first.join(MANIFEST_NAME)).unwrap();
    assert_eq!(again.sha256(), m1.config_sha256);
    let second = dir.path().join("b");
    let m2 = run(&again, &second).unwrap();
    assert_eq!(m1.outputs, m2.outputs);
    for o in &m1.outputs {
        assert_eq!(fs::read(first.join(&o.file)).unwrap(), fs::read(second.join(&o.file)).unwrap());
    }
    let reseeded = LoadedConfig::load(&first.join(MANIFEST_NAME)).unwrap().with_seed(Some(4));
    assert_ne!(reseeded.sha256(), m1.config_sha256);
    assert_ne!(execute(&reseeded.config).unwrap()[0], execute(&again.config).unwrap()[0]);

    let plot = emit_plot_data(&[first.join("simulation.json").as_path()]).unwrap();
    assert!(plot.starts_with("# schema: 1\n# content: plot_data\nsource,series,x,y,z\n"));
    assert_eq!(plot.lines().filter(|l| l.starts_with("simulation,output_db,")).count(), 15);
}

#[test]
fn missing_input_is_io_error() {
    let cfg = parse("kind = \"circle-fit\"\n[input]\ntraces = [\"/nonexistent/t.csv\"]\n").unwrap();
    assert_eq!(execute(&cfg).unwrap_err().class(), ErrorClass::Io);
}
