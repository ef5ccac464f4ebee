use std::process::Command;

use chandisc::cli::{self, BoundReport, Method, RunConfig, RunOptions};
use chandisc::Error;

const PAULI_SANDWICH: &str = r#"
method = "sandwich"
k = 2
restarts = 4
seed = 5

[scenario]
preset = "pauli"
kind = "memoryless_single_copy"
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chandisc"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("chandisc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn parse_diagnostics_name_the_field() {
    let e = RunConfig::parse("method = \"seesaw\"\n[scenario]\npreset = \"pauli\"\n").unwrap_err();
    assert!(matches!(&e, Error::Parse(m) if m.contains("seed")), "{e}");
    let e = RunConfig::parse("method = \"oracle\"\nbogus = 1\n[scenario]\npreset = \"pauli\"\n").unwrap_err();
    assert!(matches!(&e, Error::Parse(m) if m.contains("bogus") && m.contains("line 2")), "{e}");
    let e = RunConfig::parse("method = \"exact_sdp\"\n[scenario]\nkind = \"memoryless_single_copy\"\n").unwrap_err();
    assert!(matches!(e, Error::Parse(_)));
    let cfg = RunConfig::parse(PAULI_SANDWICH).unwrap();
    assert_eq!(cfg.method, Method::Sandwich);
    assert!(cfg.ppt && cfg.bosonic);
}

#[test]
fn reports_are_reproducible_and_verifiable() {
    let cfg = RunConfig::parse(PAULI_SANDWICH).unwrap();
    let strip = |mut r: BoundReport| {
        r.wall_time_s = 0.0;
        r.to_json()
    };
    let a = cli::run(&cfg, &RunOptions::default()).unwrap();
    let b = cli::run(&cfg, &RunOptions { workers: Some(1), ..RunOptions::default() }).unwrap();
    let lower = a.lower.as_ref().unwrap().value.unwrap();
    let upper = a.upper.as_ref().unwrap().value.unwrap();
    assert!((lower - 0.5).abs() < 1e-6 && (upper - 0.5).abs() < 1e-6);
    assert_eq!(strip(a.clone()), strip(b));
    let back = BoundReport::from_json(&a.to_json()).unwrap();
    assert_eq!(back, a);
    assert!(cli::verify(&back).unwrap().passed());
    // +0.01 on a diagonal entry of the first factor
    let mut bad = back.clone();
    bad.lower.as_mut().unwrap().factors[0][0][0][0] += 0.01;
    let v = cli::verify(&bad).unwrap();
    assert!(!v.passed());
    assert!(v.checks.iter().any(|c| c.name.contains("feasibility") && !c.passed));
}

#[test]
fn seed_flag_overrides_config() {
    let cfg = RunConfig::parse(PAULI_SANDWICH).unwrap();
    let r = cli::run(&cfg, &RunOptions { seed: Some(99), ..RunOptions::default() }).unwrap();
    assert_eq!(r.config.seed, Some(99));
}

#[test]
fn run_and_verify_through_the_binary() {
    let cfg = tmp("pauli.toml");
    std::fs::write(&cfg, PAULI_SANDWICH).unwrap();
    let out = tmp("pauli.json");
    let dump = tmp("dumps");
    let st = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--workers", "1", "--dump-problems"])
        .arg(&dump)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(dump.join("hierarchy_k2.dat-s").exists());
    assert_eq!(bin().arg("verify").arg(&out).status().unwrap().code(), Some(0));

    let mut r = BoundReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    r.lower.as_mut().unwrap().factors[1][1][1][0] += 0.01;
    let bad = tmp("bad.json");
    std::fs::write(&bad, r.to_json()).unwrap();
    assert_eq!(bin().arg("verify").arg(&bad).status().unwrap().code(), Some(1));

    let corrupt = tmp("corrupt.json");
    std::fs::write(&corrupt, "{\"schema\": 3").unwrap();
    assert_eq!(bin().arg("verify").arg(&corrupt).status().unwrap().code(), Some(2));
}

#[test]
fn exit_codes_for_parse_and_size_errors() {
    let cfg = tmp("broken.toml");
    std::fs::write(&cfg, "method = \"nonsense\"\n").unwrap();
    assert_eq!(bin().arg("run").arg("--config").arg(&cfg).status().unwrap().code(), Some(2));

    let capped = tmp("capped.toml");
    std::fs::write(&capped, PAULI_SANDWICH.replace("k = 2", "k = 2\nsize_cap = 4")).unwrap();
    let out = tmp("capped.json");
    let st = bin().arg("run").arg("--config").arg(&capped).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(4));
    // the independent seesaw subtask still reports
    let r = BoundReport::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(r.lower.unwrap().value.is_some());
    assert!(r.upper.unwrap().failure.is_some());
}

#[test]
fn preset_examples() {
    let exact = RunConfig::parse(
        "method = \"exact_sdp\"\n[scenario]\npreset = \"clock_shift:3\"\nkind = \"memory_de_single_copy\"\nd_e = 3\n",
    )
    .unwrap();
    let r = cli::run(&exact, &RunOptions::default()).unwrap();
    assert!((r.lower.unwrap().value.unwrap() - 1.0).abs() < 1e-6);
    let oracle = RunConfig::parse("method = \"oracle\"\n[scenario]\npreset = \"pauli\"\n").unwrap();
    let r = cli::run(&oracle, &RunOptions::default()).unwrap();
    assert_eq!(r.upper.unwrap().value, Some(0.5));
    let cs = RunConfig::parse(
        "method = \"oracle\"\n[scenario]\npreset = \"clock_shift:3\"\nkind = \"classically_adaptive\"\nregisters = 3\n",
    )
    .unwrap();
    let r = cli::run(&cs, &RunOptions::default()).unwrap();
    assert!((r.lower.as_ref().unwrap().value.unwrap() - 1.0).abs() < 1e-6);
    assert!(cli::verify(&r).unwrap().passed());
}
