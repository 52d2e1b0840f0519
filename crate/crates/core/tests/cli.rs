use std::fs;
use std::process::{Command, Output};

use tolerant_cs::harness::output::parse_sweep_csv;

const CONFIG: &str = "\
n = 128
m = 16
s = 3
d = 0, 4
snr_db = 20, inf
trials = 6
master_seed = 11

[matrix]
kind = FConsecutive

[matrix]
kind = FRand
seed = 5
";

fn tolcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tolcs")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn experiment_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3", "3"] {
        let out = dir.path().join(format!("out{}.csv", outputs.len()));
        let run = tolcs(&[
            "experiment",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
        outputs.push(fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
    let rows = parse_sweep_csv(std::str::from_utf8(&outputs[0]).unwrap()).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.median_rho_d)));
}

#[test]
fn trials_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    fs::write(&cfg, CONFIG).unwrap();
    let a = tolcs(&["experiment", "--config", cfg.to_str().unwrap(), "--out", "-"]);
    let b = tolcs(&["experiment", "--config", cfg.to_str().unwrap(), "--out", "-", "--trials", "1"]);
    assert_eq!((code(&a), code(&b)), (0, 0));
    let text = String::from_utf8(b.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.contains(",1,")));
    assert_ne!(a.stdout, text.as_bytes());
}

#[test]
fn analyze_writes_profile() {
    let out = tolcs(&["analyze", "--kind", "FConsecBegin", "--m", "24", "--n", "128", "--d-max", "10", "--out", "-"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d,correlation,mu_d,coherence,welch");
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 11);
    assert!((rows[0][4] - 0.18472).abs() < 1e-4);
    assert!(rows.windows(2).all(|w| w[1][2] <= w[0][2] + 1e-12));
}

#[test]
fn check_guarantee_reports_admissible_set() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.csv");
    let run = tolcs(&[
        "check-guarantee",
        "--kind",
        "FConsecBegin",
        "--m",
        "64",
        "--n",
        "1024",
        "--s",
        "1",
        "--d-max",
        "30",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&run), 0);
    let stderr = String::from_utf8(run.stderr).unwrap();
    assert!(stderr.contains("admissible d: {"), "{stderr}");
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("d,mu_d,welch,mu_c_d_2s,thm2,cor_mu_d,cor_cum"));
    assert_eq!(csv.lines().count(), 32);
}

#[test]
fn recover_prints_supports_and_measures() {
    let out = tolcs(&["recover", "--kind", "FConsecBegin", "--m", "64", "--n", "1024", "--s", "1", "--d", "13"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("true support:"));
    assert!(text.contains("rho_d: 1"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&tolcs(&["bogus"])), 1);
    assert_eq!(code(&tolcs(&["--help"])), 0);
    assert_eq!(code(&tolcs(&["analyze", "--kind", "Nope", "--m", "4", "--n", "8", "--out", "-"])), 1);
    assert_eq!(code(&tolcs(&["analyze", "--kind", "FRand", "--m", "9", "--n", "8", "--out", "-"])), 1);
    assert_eq!(code(&tolcs(&["experiment", "--config", "/nonexistent/x.cfg", "--out", "-"])), 1);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "n = 16\nm = 32\ns = 1\nd = 0\nsnr_db = inf\n[matrix]\nkind = FRand\n").unwrap();
    let run = tolcs(&["experiment", "--config", cfg.to_str().unwrap(), "--out", "-"]);
    assert_eq!(code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).starts_with("error:"));
}
