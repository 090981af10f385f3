use std::process::Command;

use loopq_cli::persist::{dump_qq_jacobi, replay_qq_jacobi};
use loopq_cli::report::{summary_rows, to_json, validate_report_json, REPORT_FILE, SUMMARY_FILE};
use loopq_cli::suite::Timing;
use loopq_cli::{emit_report, run_suite, CliError, Format, RunConfig, SuiteSelection};

fn quick() -> RunConfig {
    RunConfig {
        zeta_samples: vec![[0.2, 0.0], [0.17, 0.06]],
        lweight_draws: 4,
        ..RunConfig::default()
    }
}

#[test]
fn default_configuration_passes() {
    let report = run_suite(&RunConfig::default()).unwrap();
    assert!(report.passed);
    assert_eq!(report.failures(), 0);
    assert!(!report.relations.is_empty() && !report.bae.is_empty() && !report.lweights.is_empty());
    assert!(report.relations.iter().any(|r| r.relation == "direct-vs-q"));
}

#[test]
fn lweights_only_suite() {
    let config = RunConfig {
        suite: SuiteSelection::parse("lweights-only").unwrap(),
        ..quick()
    };
    let report = run_suite(&config).unwrap();
    assert!(report.relations.is_empty() && report.bethe.is_empty() && report.bae.is_empty());
    assert_eq!(report.lweights.len(), 3 * config.lweight_draws);
    assert!(report.passed);
}

#[test]
fn same_seed_same_json() {
    let strip = |mut r: loopq_cli::Report| {
        r.timing = Timing::default();
        to_json(&r)
    };
    let a = strip(run_suite(&quick()).unwrap());
    let b = strip(run_suite(&quick()).unwrap());
    assert_eq!(a, b);
    let other = RunConfig { seed: 7, ..quick() };
    assert_ne!(a, strip(run_suite(&other).unwrap()));
}

#[test]
fn emitted_files_validate() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_suite(&quick()).unwrap();
    let written = emit_report(&report, dir.path(), &[Format::Json, Format::CsvSummary]).unwrap();
    assert_eq!(written.len(), 2);

    let text = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(validate_report_json(&text).unwrap(), report);
    let tampered = text.replacen("\"schema_version\": 1", "\"schema_version\": 99", 1);
    assert!(validate_report_json(&tampered).is_err());

    let mut rdr = csv::Reader::from_path(dir.path().join(SUMMARY_FILE)).unwrap();
    let rows = rdr.records().count();
    assert_eq!(rows, report.relations.len() + report.bae.len());
    assert_eq!(rows, summary_rows(&report).len());
}

#[test]
fn reloaded_operators_reproduce_qq_jacobi() {
    let dir = tempfile::tempdir().unwrap();
    let config = quick();
    let index = dump_qq_jacobi(&config, dir.path()).unwrap();
    assert!(!index.operators.is_empty());
    let replayed = replay_qq_jacobi(&config, dir.path()).unwrap();
    assert_eq!(replayed, index.checks);
    assert!(replayed.iter().all(|r| r.pass));

    std::fs::remove_file(dir.path().join(format!("{}.bin", index.operators[0].stem))).unwrap();
    assert!(matches!(replay_qq_jacobi(&config, dir.path()), Err(CliError::Core(_))));
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad_twist = RunConfig {
        tau: Some(vec![0.0, 1.0, 2.5]),
        ..quick()
    };
    assert!(matches!(
        run_suite(&bad_twist),
        Err(CliError::Core(_)) | Err(CliError::Config(_))
    ));
    let too_big = RunConfig { l: 3, n: 6, ..quick() };
    assert!(matches!(run_suite(&too_big), Err(CliError::Resource(_))));
}

fn loopq() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loopq"))
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = loopq()
        .args(["verify", "--l", "1", "--n", "2", "--seed", "3", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stdout));
    assert!(out.join(REPORT_FILE).exists() && out.join(SUMMARY_FILE).exists());

    let cfg = dir.path().join("strict.toml");
    std::fs::write(&cfg, "l = 1\nn = 2\n[tolerances]\nrelations = 1e-300\n").unwrap();
    let strict = loopq()
        .args(["verify", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("strict"))
        .output()
        .unwrap();
    assert_eq!(strict.status.code(), Some(1));

    let invalid = loopq().args(["verify", "--q", "1.5"]).output().unwrap();
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("outside (0, 1)"));
}

#[test]
fn binary_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let lw = loopq()
        .args(["lweights", "--l", "3", "--out"])
        .arg(dir.path().join("lw"))
        .output()
        .unwrap();
    assert!(lw.status.success());
    let text = std::fs::read_to_string(dir.path().join("lw").join(REPORT_FILE)).unwrap();
    let report = validate_report_json(&text).unwrap();
    assert!(report.relations.is_empty() && !report.lweights.is_empty());

    let bethe = loopq()
        .args(["bethe", "--l", "1", "--n", "2", "--tau=-0.3,0.2", "--out"])
        .arg(dir.path().join("b"))
        .output()
        .unwrap();
    assert!(bethe.status.success());
    assert!(String::from_utf8_lossy(&bethe.stdout).contains("sector [1, 1]"));

    let dump = loopq()
        .args(["dump-l", "--l", "2", "--zeta", "0.4,-0.1", "--out"])
        .arg(dir.path().join("l"))
        .output()
        .unwrap();
    assert!(dump.status.success());
    let stdout = String::from_utf8_lossy(&dump.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("L[")).count(), 9);
    assert!(dir.path().join("l").join("l_operator.json").exists());

    let matrices = loopq()
        .args(["verify", "--suite", "relations", "--dump-matrices", "--out"])
        .arg(dir.path().join("m"))
        .output()
        .unwrap();
    assert!(matrices.status.success());
    assert!(dir.path().join("m").join("matrices").join("index.json").exists());
}

#[test]
fn example_configuration_is_the_default() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../loopq.example.toml");
    let config = RunConfig::load(&path).unwrap();
    assert_eq!(config, RunConfig::default());
    config.validate().unwrap();
}
