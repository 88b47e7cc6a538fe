use std::path::Path;

use super::*;
use crate::coefficients::PresetName;
use crate::grid::Grid;

fn base(command: Command, preset: PresetName, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        command,
        preset,
        epsilon: 0.0,
        coefficients: CoefficientParams::default(),
        grid: Grid::new(1, 32).unwrap(),
        dt: 1e-4,
        t: 0.02,
        noise: NoiseConfig::default(),
        seeds: SeedConfig { base: 7, paths: 1 },
        initial: InitialData::Cosine {
            mean: 1.0,
            amplitude: 0.5,
            mode: 1,
        },
        initial_alt: Some(InitialData::Sine {
            mean: 1.0,
            amplitude: 0.5,
            mode: 1,
        }),
        out: out.to_path_buf(),
        tolerances: Tolerances::default(),
        workers: 1,
        save_every: 1,
        flow: FlowParams::default(),
        ergodicity: ErgodicityParams::default(),
        assumptions: AssumptionParams::default(),
    }
}

fn read_csv(file: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(file)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn config_round_trips_through_toml_and_json() {
    let mut cfg = base(Command::Ergodicity, PresetName::SineGordon, Path::new("runs/a"));
    cfg.epsilon = 0.1;
    cfg.ergodicity.horizons = vec![0.005, 0.01, 0.02];
    cfg.coefficients.reaction = Some(crate::coefficients::Reaction::Zero);
    cfg.flow.restart = Some(0.01);
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
    assert_eq!(ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
}

#[test]
fn unknown_fields_are_rejected() {
    let mut text = base(Command::Simulate, PresetName::Heat, Path::new("o"))
        .to_toml()
        .unwrap();
    text = format!("typo = 1\n{text}");
    assert!(ExperimentConfig::from_toml(&text).is_err());
}

#[test]
fn validation_lists_every_bad_field() {
    let mut cfg = base(Command::Couple, PresetName::Heat, Path::new("o"));
    cfg.epsilon = 2.0;
    cfg.seeds.paths = 0;
    cfg.initial_alt = None;
    cfg.tolerances.residual = -1.0;
    let Err(Error::Config(bad)) = cfg.validate() else {
        panic!("expected a configuration error");
    };
    for field in ["epsilon", "seeds.paths", "initial_alt", "tolerances.residual"] {
        assert!(bad.iter().any(|b| b.starts_with(field)), "{field} missing from {bad:?}");
    }
}

#[test]
fn steps_beyond_the_stability_bound_are_refused_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(Command::Simulate, PresetName::Heat, dir.path());
    cfg.coefficients.sigma = None;
    cfg.preset = PresetName::DeanKawasaki;
    cfg.epsilon = 1.0;
    cfg.noise.cutoff = 16;
    cfg.noise.spectrum = crate::noise::AmplitudeRule::Flat { amplitude: 3.0 };
    cfg.dt = 0.01;
    cfg.t = 0.02;
    let err = run(&cfg).unwrap_err();
    assert!(err.to_string().contains("stability limit"), "{err}");
    assert!(!dir.path().join(REPORT_FILE).exists());
}

#[test]
fn heat_simulation_has_zero_mass_residual() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&base(Command::Simulate, PresetName::Heat, dir.path())).unwrap();
    assert!(out.passed());
    let rows = read_csv(&dir.path().join("mass_residual.csv"));
    assert_eq!(rows.len(), 201);
    // zero up to the rounding of the mass sum itself
    assert!(rows.iter().all(|r| r[1].abs() <= 1e-14), "{rows:?}");
    assert!(dir.path().join("noise/path_0.bin").exists());
}

#[test]
fn coupled_runs_are_deterministic_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(Command::Couple, PresetName::SineGordon, dir.path());
    cfg.epsilon = 0.05;
    let first = run(&cfg).unwrap();
    assert!(first.passed(), "{:?}", first.report.lines());
    let h1 = sha256_hex(&std::fs::read(&first.report_path).unwrap());
    let second = run(&cfg).unwrap();
    let h2 = sha256_hex(&std::fs::read(&second.report_path).unwrap());
    assert_eq!(h1, h2);
    let r = replay(&first.report_path).unwrap();
    assert!(r.matches(), "{:?}", r.differences);
    assert!(first.report.tables["final_states"]
        .columns
        .contains(&"rho_2".to_string()));
}

#[test]
fn misaligned_shift_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(Command::Flowcheck, PresetName::DeanKawasaki, dir.path());
    cfg.flow.shift = 0.3 * cfg.dt * 7.5;
    let err = run(&cfg).unwrap_err().to_string();
    assert!(err.contains("flow.shift") && err.contains("not aligned"), "{err}");
}

#[test]
fn flowcheck_residuals_vanish() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(Command::Flowcheck, PresetName::DeanKawasaki, dir.path());
    cfg.epsilon = 0.1;
    cfg.flow.shift = 0.005;
    cfg.seeds.paths = 2;
    let out = run(&cfg).unwrap();
    assert!(out.passed(), "{:?}", out.report.lines());
    assert_eq!(out.report.checks.len(), 6);
}

#[test]
fn edited_seed_breaks_the_replay() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(Command::Simulate, PresetName::DeanKawasaki, dir.path());
    cfg.epsilon = 0.1;
    let out = run(&cfg).unwrap();
    assert!(replay(&out.report_path).unwrap().matches());
    let mut report = Report::read(&out.report_path).unwrap();
    report.manifest.config.seeds.base += 1;
    std::fs::write(&out.report_path, report.to_json().unwrap()).unwrap();
    let r = replay(&out.report_path).unwrap();
    assert!(!r.matches());
    assert!(r.differences.iter().any(|d| d.contains("hash")));
    assert!(r.differences.iter().any(|d| d.contains("noise/path_0.bin")));
}

#[test]
fn missing_noise_file_asks_for_regeneration() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&base(Command::Simulate, PresetName::Heat, dir.path())).unwrap();
    std::fs::remove_file(dir.path().join("noise/path_0.bin")).unwrap();
    let err = replay(&out.report_path).unwrap_err();
    assert!(matches!(err, Error::MissingArtifact { .. }));
    assert!(err.to_string().contains("--seed 7"), "{err}");
}

#[test]
fn assumption_and_self_tests_pass() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(Command::CheckAssumptions, PresetName::DeanKawasaki, dir.path());
    cfg.epsilon = 0.1;
    let out = run(&cfg).unwrap();
    assert!(out.passed(), "{:?}", out.report.lines());
    assert!(out.report.checks.len() > 5);
    cfg.command = Command::Selftest;
    let out = run(&cfg).unwrap();
    assert!(out.passed(), "{:?}", out.report.lines());
    assert!(replay(&out.report_path).unwrap().matches());
}

#[test]
fn ergodicity_estimates_are_nested() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = base(Command::Ergodicity, PresetName::DeanKawasaki, dir.path());
    cfg.epsilon = 0.1;
    cfg.seeds.paths = 16;
    cfg.ergodicity.horizons = vec![0.005, 0.01, 0.02];
    let out = run(&cfg).unwrap();
    assert!(out.passed(), "{:?}", out.report.lines());
    assert_eq!(out.report.tables["distances"].rows(), 16);
    assert!(out.report.manifest.noise_files.is_empty());
    assert!(replay(&out.report_path).unwrap().matches());
}
