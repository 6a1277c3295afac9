use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use zrp_cli::check_dir;

fn zrp(args: &[&str], env_out: Option<&Path>) -> i32 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_zrp"));
    cmd.args(args).env_remove("ZRP_OUT");
    if let Some(p) = env_out {
        cmd.env("ZRP_OUT", p);
    }
    let out = cmd.output().expect("binary runs");
    out.status.code().expect("exit code")
}

/// Writes `body` as a config file with `out` pointing into `dir`.
fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(format!("{name}.toml"));
    let out = dir.join(name);
    let text = body.replace("@OUT", out.to_str().unwrap());
    fs::write(&path, text).unwrap();
    path
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn run(cmd: &str, cfg: &Path) -> i32 {
    zrp(&[cmd, "--config", cfg.to_str().unwrap()], None)
}

fn verify(which: &str, cfg: &Path) -> i32 {
    zrp(&["verify", "--which", which, "--config", cfg.to_str().unwrap()], None)
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

const B0: &str = r#"
[model]
family = "evans"
b = 0.0

[lattice]
d = 1
n = 32

[initial]
kind = "grand_canonical"
density = 0.5

[run]
horizon = 0.02
replicas = 2
seed = 11
samples = 2
out = "@OUT"

[observables]
fields = true
young = true
checkpoint = true
"#;

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [
        ("empty_model", "[model]\n"),
        ("no_model", "[run]\nhorizon = 1.0\n"),
        ("unknown_key", "[model]\nfamily = \"evans\"\nb = 4.0\nc = 1.0\n"),
        ("bad_lattice", "[model]\nfamily = \"evans\"\nb = 4.0\n[lattice]\nd = 3\nn = 8\n"),
        ("negative_b", "[model]\nfamily = \"evans\"\nb = -1.0\n"),
    ] {
        let cfg = config(dir.path(), name, body);
        assert_eq!(run("thermo", &cfg), 2, "{name}");
    }
    assert_eq!(zrp(&["thermo", "--config", "/nonexistent/zrp.toml"], None), 2);
    assert_eq!(zrp(&["frobnicate"], None), 2);
}

#[test]
fn thermo_reports_critical_values() {
    let dir = tempfile::tempdir().unwrap();
    let b0 = config(dir.path(), "b0", "[model]\nfamily = \"evans\"\nb = 0.0\n[run]\nout = \"@OUT\"\n");
    assert_eq!(run("thermo", &b0), 0);
    let scalars = read_json(dir.path().join("b0/thermo.json"));
    assert_eq!(scalars["rho_c"], "inf");
    assert_eq!(scalars["phi_c"], 1.0);

    let b4 = config(dir.path(), "b4", "[model]\nfamily = \"evans\"\nb = 4.0\n[run]\nout = \"@OUT\"\n");
    assert_eq!(run("thermo", &b4), 0);
    let rho_c = read_json(dir.path().join("b4/thermo.json"))["rho_c"].as_f64().unwrap();
    assert!((rho_c - 0.5).abs() < 1e-4, "{rho_c}");
    assert!(fs::read_to_string(dir.path().join("b4/resolved_config.toml")).unwrap().contains("[model]"));
    check_dir(&dir.path().join("b4")).unwrap();
}

#[test]
fn divergent_fugacity_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "div",
        "[model]\nfamily = \"evans\"\nb = 4.0\n[run]\nout = \"@OUT\"\n[stats]\nfugacities = [1.5]\n",
    );
    assert_eq!(run("thermo", &cfg), 3);
}

#[test]
fn simulate_is_byte_identical_and_schema_clean() {
    let dir = tempfile::tempdir().unwrap();
    let a = config(dir.path(), "a", B0);
    let b = config(dir.path(), "b", B0);
    assert_eq!(run("simulate", &a), 0);
    assert_eq!(run("simulate", &b), 0);
    let (da, db) = (dir_contents(&dir.path().join("a")), dir_contents(&dir.path().join("b")));
    let strip = |files: Vec<(String, Vec<u8>)>| files.into_iter().filter(|(n, _)| n != "resolved_config.toml").collect::<Vec<_>>();
    assert_eq!(strip(da), strip(db));

    let checked = check_dir(&dir.path().join("a")).unwrap();
    assert!(checked.iter().any(|(p, _)| p.to_string_lossy().contains("young_r1_s2")));
    assert!(dir.path().join("a/checkpoint_r1.json").exists());

    let resolved = dir.path().join("a/resolved_config.toml");
    let rerun = dir.path().join("rerun");
    let rerun_str = rerun.to_str().unwrap();
    assert_eq!(zrp(&["simulate", "--config", resolved.to_str().unwrap(), "--out", rerun_str], None), 0);
    assert_eq!(
        fs::read(rerun.join("fields_r1.csv")).unwrap(),
        fs::read(dir.path().join("a/fields_r1.csv")).unwrap()
    );
}

#[test]
fn zero_horizon_writes_initial_snapshot_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "t0", &B0.replace("horizon = 0.02", "horizon = 0.0"));
    assert_eq!(run("simulate", &cfg), 0);
    let text = fs::read_to_string(dir.path().join("t0/fields_r0.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 32);
    assert!(text.lines().skip(1).all(|l| l.starts_with("0.0,")));
    let manifest = read_json(dir.path().join("t0/manifest.json"));
    assert_eq!(manifest["runs"][0]["events"], 0);
}

#[test]
fn event_counts_follow_the_rate_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let body = B0
        .replace("n = 32", "n = 64")
        .replace("horizon = 0.02", "horizon = 0.05")
        .replace("replicas = 2", "replicas = 50")
        .replace("young = true", "young = false")
        .replace("fields = true", "fields = false")
        .replace("checkpoint = true", "checkpoint = false");
    let cfg = config(dir.path(), "rate", &body);
    assert_eq!(run("simulate", &cfg), 0);
    let m = read_json(dir.path().join("rate/manifest.json"));
    let (events, predicted) = (m["mean_events"].as_f64().unwrap(), m["mean_predicted_events"].as_f64().unwrap());
    // 2d N^2 E[sum g] T with E[g] = 1/3 at density 1/2.
    let exact = 2.0 * 64.0 * 64.0 * (64.0 / 3.0) * 0.05;
    assert!((events / exact - 1.0).abs() < 0.2, "{events} vs {exact}");
    assert!((predicted / exact - 1.0).abs() < 0.2, "{predicted} vs {exact}");
}

#[test]
fn exhausted_budget_exits_4_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "budget", &B0.replace("samples = 2", "samples = 2\nevent_budget = 50"));
    assert_eq!(run("simulate", &cfg), 4);
    let m = read_json(dir.path().join("budget/manifest.json"));
    assert_eq!(m["budget_exhausted"], true);
    assert!(dir.path().join("budget/fields_r0.csv").exists());
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "file", "[model]\nfamily = \"evans\"\nb = 0.0\n[run]\nout = \"@OUT\"\n");
    let env_dir = dir.path().join("env");
    let flag_dir = dir.path().join("flag");
    let c = cfg.to_str().unwrap();
    assert_eq!(zrp(&["thermo", "--config", c], Some(&env_dir)), 0);
    assert!(env_dir.join("thermo.csv").exists());
    assert!(!dir.path().join("file").exists());
    assert_eq!(zrp(&["thermo", "--config", c, "--out", flag_dir.to_str().unwrap()], Some(&env_dir)), 0);
    assert!(flag_dir.join("thermo.csv").exists());
}

#[test]
fn seed_and_replica_flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "flags", &B0);
    let c = cfg.to_str().unwrap();
    assert_eq!(zrp(&["simulate", "--config", c, "--seed", "99", "--replicas", "3"], None), 0);
    let m = read_json(dir.path().join("flags/manifest.json"));
    assert_eq!(m["seed"], 99);
    assert_eq!(m["runs"].as_array().unwrap().len(), 3);
}

#[test]
fn eoe_verdict_passes_for_b4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "eoe",
        "[model]\nfamily = \"evans\"\nb = 4.0\n[run]\nout = \"@OUT\"\n[stats]\nrho = 1.0\nsizes = [50, 100, 200, 400]\n",
    );
    assert_eq!(verify("eoe", &cfg), 0);
    let v = read_json(dir.path().join("eoe/eoe_verdict.json"));
    assert_eq!(v["verdict"], "pass");
    check_dir(&dir.path().join("eoe")).unwrap();

    let strict = config(
        dir.path(),
        "strict",
        "[model]\nfamily = \"evans\"\nb = 4.0\n[run]\nout = \"@OUT\"\n[stats]\ntolerance = 1e-6\n",
    );
    assert_eq!(verify("eoe", &strict), 5);
    assert_eq!(read_json(dir.path().join("strict/eoe_verdict.json"))["verdict"], "fail");
    let relaxed = config(
        dir.path(),
        "relaxed",
        "[model]\nfamily = \"evans\"\nb = 4.0\n[run]\nout = \"@OUT\"\n[stats]\ntolerance = 1e-6\nassert = false\n",
    );
    assert_eq!(verify("eoe", &relaxed), 0);
}

#[test]
fn one_block_occupation_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let body = B0.replace("[observables]", "[stats]\ncylinder = \"occupation\"\nell = 2\n\n[observables]");
    let cfg = config(dir.path(), "ob", &body);
    assert_eq!(verify("one-block", &cfg), 0);
    let text = fs::read_to_string(dir.path().join("ob/one_block.csv")).unwrap();
    let replica_values: Vec<f64> = text
        .lines()
        .filter(|l| l.contains(",replica,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(replica_values.len(), 2);
    assert!(replica_values.iter().all(|&v| v == 0.0));
    assert_eq!(read_json(dir.path().join("ob/one_block_verdict.json"))["verdict"], "diagnostic");
}

#[test]
fn every_statistic_runs_and_passes_the_schema() {
    let dir = tempfile::tempdir().unwrap();
    let body = B0.replace("[observables]", "[stats]\neps = 0.125\nassert = false\ngrid = 64\n\n[observables]");
    let cfg = config(dir.path(), "all", &body);
    for which in ["continuity", "qv", "jump-bound", "double-block", "energy", "hydro"] {
        assert_eq!(verify(which, &cfg), 0, "{which}");
        let stem = which.replace('-', "_");
        let v = read_json(dir.path().join(format!("all/{stem}_verdict.json")));
        assert!(["pass", "fail", "diagnostic"].contains(&v["verdict"].as_str().unwrap()), "{which}");
    }
    assert_eq!(check_dir(&dir.path().join("all")).unwrap().len(), 6);
}

#[test]
fn canonical_sampling_and_pde_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "can",
        "[model]\nfamily = \"evans\"\nb = 4.0\n[lattice]\nd = 1\nn = 4\n[initial]\nkind = \"canonical\"\nparticles = 8\n\
         [run]\nout = \"@OUT\"\n[stats]\ncanonical_samples = 2000\n",
    );
    assert_eq!(run("sample-canonical", &cfg), 0);
    let text = fs::read_to_string(dir.path().join("can/canonical_marginal.csv")).unwrap();
    let total: f64 = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(run("pde", &cfg), 2);

    let pde = config(
        dir.path(),
        "pde",
        "[model]\nfamily = \"evans\"\nb = 0.0\n[initial]\nkind = \"product\"\n\
         [initial.profile]\nshape = \"sine\"\nmean = 0.5\namplitude = 0.3\nmode = 1\n\
         [run]\nout = \"@OUT\"\nhorizon = 0.01\nsamples = 2\n[stats]\ngrid = 64\n",
    );
    assert_eq!(run("pde", &pde), 0);
    let summary = read_json(dir.path().join("pde/pde_summary.json"));
    assert!(summary["max_mass_drift"].as_f64().unwrap() <= 1e-12);
    assert_eq!(summary["snapshots"].as_array().unwrap().len(), 3);
    check_dir(&dir.path().join("can")).unwrap();
    check_dir(&dir.path().join("pde")).unwrap();
}

#[test]
fn check_subcommand_flags_a_broken_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("thermo.csv"), "phi,Z,R\n0.1,abc,0.2\n").unwrap();
    assert_eq!(zrp(&["check", dir.path().to_str().unwrap()], None), 2);
    fs::write(dir.path().join("thermo.csv"), "phi,Z,R\n0.1,1.1,0.2\n").unwrap();
    assert_eq!(zrp(&["check", dir.path().to_str().unwrap()], None), 0);
}
