use std::path::Path;
use std::process::{Command, Output};

use pushblock::io::{self, Document, GrowthDoc};
use pushblock::particles::ParticleTrajectory;
use pushblock::verify::Report;

fn pushblock(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pushblock"))
        .args(args)
        .env("PUSHBLOCK_OUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn report(path: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn sample_lpp_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = pushblock(dir.path(), &["sample-lpp", "--n", "1", "--v", "0.5", "--samples", "1", "--seed", "11", "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    let text = String::from_utf8(text).unwrap();
    assert!(text.starts_with("# pushblock schema v1 seed=11:0 config="));
    assert_eq!(text.lines().nth(1), Some("replica,i,j,g,G"));
    assert_eq!(text.lines().count(), 2 + 3);
}

#[test]
fn parallel_output_is_canonical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |jobs: &str, name: &str| {
        let p = dir.path().join(name);
        let o = pushblock(dir.path(), &["sample-lpp", "--n", "2", "--v", "0.6", "--samples", "50", "--jobs", jobs, "--out", p.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("1", "one.csv"), run("3", "three.csv"));
}

#[test]
fn coupling_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pushblock(dir.path(), &["verify", "coupling", "--n", "4", "--v", "0.5", "--L", "20", "--samples", "500", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let r = report(&dir.path().join("verify-coupling.json"));
    assert!(r.passed);
    assert_eq!(r.schema_version, 1);
    assert_eq!((r.checks[0].statistic, r.checks[0].n_samples), (0.0, 500));
}

#[test]
fn balance_example_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pushblock(dir.path(), &["verify", "balance", "--n", "2", "--v", "0.5", "--samples", "1000", "--seed", "7"]);
    assert_eq!(code(&o), 0);
    let r = report(&dir.path().join("verify-balance.json"));
    let residual = r.checks.iter().find(|c| c.label.contains("log residual")).unwrap();
    assert!(residual.statistic < 1e-9);
    assert!(String::from_utf8_lossy(&o.stdout).contains("max log residual"));
}

#[test]
fn failed_verification_exits_one_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = pushblock(dir.path(), &["verify", "png-limit", "--n", "2,4", "--samples", "300", "--bootstrap", "20", "--tv-max", "0.000001"]);
    assert_eq!(code(&o), 1);
    let r = report(&dir.path().join("verify-png-limit.json"));
    assert!(!r.passed);
    assert!(r.checks.iter().any(|c| !c.passed));
}

#[test]
fn bad_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["verify", "nonsense"][..],
        &["sample-lpp", "--n", "1"],
        &["sample-lpp", "--n", "x", "--v", "0.5"],
        &["sample-lpp", "--n", "1", "--v", "1.5"],
        &["simulate-growth", "--n", "0", "--v", "0.5", "--L", "3"],
        &["verify", "stationarity", "--n", "1", "--v", "0.5", "--cell", "3,3"],
    ] {
        assert_eq!(code(&pushblock(dir.path(), args)), 2, "{args:?}");
    }
}

#[test]
fn trajectories_round_trip_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let g = d.join("g.json");
    assert_eq!(code(&pushblock(d, &["simulate-growth", "--n", "3", "--v", "0.5", "--L", "5", "--seed", "2", "--out", g.to_str().unwrap()])), 0);
    let doc: Document<GrowthDoc> = io::read_json(std::fs::File::open(&g).unwrap()).unwrap();
    assert_eq!(doc.seed.unwrap().value, 2);
    assert_eq!(doc.data.steps.len(), 7);

    let p = d.join("p.json");
    assert_eq!(code(&pushblock(d, &["simulate-particles", "--n", "3", "--v", "0.5", "--L", "5", "--seed", "2", "--out", p.to_str().unwrap()])), 0);
    let parts: Document<ParticleTrajectory<f64>> = io::read_json(std::fs::File::open(&p).unwrap()).unwrap();
    // Same seed drives both representations to the same profiles.
    assert_eq!(GrowthDoc::from(&parts.data.to_growth()).steps, doc.data.steps);

    for input in [&g, &p] {
        let svg = d.join("plot.svg");
        let o = pushblock(d, &["plot", "--input", input.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
        let text = std::fs::read_to_string(&svg).unwrap();
        assert!(text.starts_with("<svg") && text.trim_end().ends_with("</svg>"));
    }
    let bad = d.join("bad.json");
    std::fs::write(&bad, "{}").unwrap();
    assert_eq!(code(&pushblock(d, &["plot", "--input", bad.to_str().unwrap()])), 2);
}

#[test]
fn other_simulators_write_headers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&pushblock(d, &["simulate-array", "--n", "2", "--v", "0.5", "--format", "csv"])), 0);
    let (h, rows): (io::Header, Vec<io::CellRow>) = io::read_csv(std::fs::File::open(d.join("simulate-array.csv")).unwrap()).unwrap();
    assert_eq!(h.config["command"], "simulate-array");
    io::state_from_rows(&rows).unwrap();
    assert_eq!(code(&pushblock(d, &["simulate-png", "--L", "2", "--time", "1"])), 0);
    assert!(d.join("simulate-png.json").exists());
}
