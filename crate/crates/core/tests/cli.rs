use std::path::Path;
use std::process::{Command, Output};

use fogsched::model::{Preset, DEFAULT_SEED};
use fogsched::workload::{synth_jobs, SynthRanges, BUNDLED_TRACE};

fn fogsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fogsched"))
        .args(args)
        .env_remove("FOGSCHED_OUT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn out_arg(dir: &Path) -> String {
    dir.to_string_lossy().into_owned()
}

fn summary(path: &Path) -> toml::Value {
    toml::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_table_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = fogsched(&[
        "run", "--preset", "four-tier", "--algo", "efsa", "--synth", "50", "--seed", "7", "--out", &out_arg(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("run_four-tier_efsa.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 50 + 1);
    let s = summary(&dir.path().join("run_four-tier_efsa.summary.toml"));
    assert_eq!(s["seed"].as_integer(), Some(7));
    assert_eq!(s["jobs"].as_integer(), Some(50));
}

#[test]
fn single_cloud_job_finishes_after_cloud_delay() {
    let dir = tempfile::tempdir().unwrap();
    let o = fogsched(&["run", "--preset", "flat", "--algo", "cdc-only", "--synth", "1", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let job = &synth_jobs(1, &SynthRanges::default(), DEFAULT_SEED).unwrap()[0];
    let expected = job.length / 57980.0 + 0.140;
    let s = summary(&dir.path().join("run_flat_cdc-only.summary.toml"));
    let tct = s["tct"].as_float().unwrap();
    assert!((tct - expected).abs() <= 1e-12, "{tct} vs {expected}");
}

#[test]
fn missing_scenario_is_a_usage_error() {
    assert_eq!(code(&fogsched(&["run", "--algo", "efsa"])), 2);
    assert_eq!(code(&fogsched(&["run", "--preset", "five-tier"])), 2);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fogsched"))
        .args(["run", "--preset", "two-tier", "--synth", "3"])
        .env("FOGSCHED_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("run_two-tier_efsa.csv").exists());
}

#[test]
fn job_load_sweep_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = fogsched(&["sweep", "--axis", "job-load", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let table = std::fs::read_to_string(dir.path().join("sweep_job-load.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 6 * 4 * Preset::ALL.len());
    let s = summary(&dir.path().join("sweep_job-load.summary.toml"));
    assert_eq!(s["grid"].as_array().unwrap().len(), 6);
    assert_eq!(s["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
}

#[test]
fn delay_sweep_steps() {
    let dir = tempfile::tempdir().unwrap();
    let o = fogsched(&["sweep", "--axis", "delay", "--steps", "4", "--preset", "flat", "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0);
    let table = std::fs::read_to_string(dir.path().join("sweep_delay.csv")).unwrap();
    let mut offsets: Vec<String> = table.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().to_string()).collect();
    offsets.dedup();
    assert_eq!(offsets, ["0", "5", "10", "15"]);
}

#[test]
fn unknown_axis_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&fogsched(&["sweep", "--axis", "bandwidth", "--out", &out_arg(dir.path())])), 2);
    assert_eq!(code(&fogsched(&["sweep", "--axis", "job-load", "--grid", "2,1", "--out", &out_arg(dir.path())])), 2);
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&fogsched(&["validate", "--preset", "four-tier"])), 0);
    assert_eq!(code(&fogsched(&["validate", "--scenario", "/nonexistent/scenario.toml"])), 2);

    let dir = tempfile::tempdir().unwrap();
    let mut cfg = Preset::TwoTier.config(DEFAULT_SEED);
    cfg.tiers[1].capacity_mips = 1500.0;
    let tampered = dir.path().join("tampered.toml");
    std::fs::write(&tampered, cfg.to_toml()).unwrap();
    let o = fogsched(&["validate", "--scenario", &out_arg(&tampered)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("capacity"));

    let good = dir.path().join("good.toml");
    std::fs::write(&good, Preset::ThreeTier.config(DEFAULT_SEED).to_toml()).unwrap();
    assert_eq!(code(&fogsched(&["validate", "--scenario", &out_arg(&good)])), 0);
}

#[test]
fn validate_reports_bad_trace_rows() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    std::fs::write(&trace, "0,m1,50,30,20\n1,m2,120,30,20\n").unwrap();
    assert_eq!(code(&fogsched(&["validate", "--preset", "flat", "--trace", &out_arg(&trace)])), 1);
    let missing = dir.path().join("absent.csv");
    assert_eq!(code(&fogsched(&["validate", "--preset", "flat", "--trace", &out_arg(&missing)])), 2);
}

#[test]
fn custom_scenario_runs_like_its_preset() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.toml");
    std::fs::write(&file, Preset::FourTier.config(DEFAULT_SEED).to_toml()).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&fogsched(&["run", "--scenario", &out_arg(&file), "--out", &out_arg(a.path())])), 0);
    assert_eq!(code(&fogsched(&["run", "--preset", "four-tier", "--out", &out_arg(b.path())])), 0);
    let read = |d: &Path| std::fs::read(d.join("run_four-tier_efsa.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn gen_trace_reproduces_bundled_trace() {
    let o = fogsched(&["gen-trace"]);
    assert_eq!(code(&o), 0);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), BUNDLED_TRACE);
}

#[test]
fn generated_trace_feeds_run() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let o = fogsched(&["gen-trace", "--rows", "30", "--seed", "5", "--out", &out_arg(&trace)]);
    assert_eq!(code(&o), 0);
    let o = fogsched(&["run", "--preset", "three-tier", "--algo", "fifsa", "--trace", &out_arg(&trace), "--out", &out_arg(dir.path())]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("run_three-tier_fifsa.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 30 + 1);
    assert_eq!(code(&fogsched(&["run", "--preset", "flat", "--trace", "/nonexistent.csv"])), 2);
}

#[test]
fn help_lists_flags() {
    let cases: [(&str, &[&str]); 4] = [
        ("run", &["--preset", "--scenario", "--algo", "--synth", "--trace", "--seed", "--load", "--out"]),
        ("sweep", &["--axis", "--grid", "--steps", "--jobs", "--load", "--metrics", "--out"]),
        ("validate", &["--preset", "--scenario", "--trace"]),
        ("gen-trace", &["--rows", "--seed", "--cpu-min", "--cpu-max", "--out"]),
    ];
    for (cmd, flags) in cases {
        let o = fogsched(&[cmd, "--help"]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8(o.stdout).unwrap();
        for f in flags {
            assert!(text.contains(f), "{cmd} --help lacks {f}");
        }
    }
}
