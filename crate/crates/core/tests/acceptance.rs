//! Acceptance criteria, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) and exits nonzero if any
//! criterion fails. Set `PUSHBLOCK_ACCEPTANCE_VERBOSE=1` to print every check.

use std::process::ExitCode;
use std::time::Instant;

use pushblock::verify::{self, ArrayRun, IdentityRun, PngLimitRun, Report};
use pushblock::Seed;

const SEED: u64 = 20_241_016;
const BOOTSTRAP: u64 = 200;

fn merge(name: &str, parts: Vec<Report>) -> Report {
    let mut all = Report::new(name, Seed::new(SEED), serde_json::Value::Null);
    for p in parts {
        for c in p.checks {
            all.push(c);
        }
    }
    all
}

fn main() -> ExitCode {
    let verbose = std::env::var_os("PUSHBLOCK_ACCEPTANCE_VERBOSE").is_some();
    let seed = Seed::new(SEED);
    let array = |replicas| ArrayRun { n: 2, v: 0.5, duration: 5.0, replicas, bootstrap: BOOTSTRAP };

    type Criterion = (&'static str, Box<dyn Fn() -> Result<Report, verify::VerifyError>>);
    let criteria: Vec<Criterion> = vec![
        ("LPP table equals brute force, n in {1,2,3}, v in {0.3,0.5,0.8}, 1000 envs", Box::new(move || {
            verify::lpp_oracle(&[1, 2, 3], &[0.3, 0.5, 0.8], 1000, seed.replica(1))
        })),
        ("growth equals particles pathwise, 500 seeds per n = 1..10, L = 20", Box::new(move || {
            verify::coupling(&(1..=10).collect::<Vec<_>>(), 0.5, 20.0, 500, seed.replica(2))
        })),
        ("balance and rate sums, 1000 stationary states per (n, v)", Box::new(move || {
            verify::balance(&[1, 2, 3], &[0.3, 0.5, 0.8], 1000, seed.replica(3))
        })),
        ("stationarity of cells (1,1), (2,2), (1,4) at T = 5, 1e5 replicas", Box::new(move || {
            verify::stationarity(&array(100_000), &[(1, 1), (2, 2), (1, 4)], seed.replica(4))
        })),
        ("height vector at 0 matches LPP vector, n in {1,2}, L = 25, 1e5 samples", Box::new(move || {
            let run = |n| IdentityRun { n, v: 0.5, half_width: 25.0, samples: 100_000, stabilize_samples: 1000, bootstrap: BOOTSTRAP };
            Ok(merge("identity", vec![verify::identity(&run(1), seed.replica(5))?, verify::identity(&run(2), seed.replica(6))?]))
        })),
        ("array level vector and row-2 pushASEP marginals, 1e5 replicas", Box::new(move || {
            verify::diagonal_rows(&array(100_000), seed.replica(7))
        })),
        ("two-time symmetry under transposition and time reversal, lag 1, 1e5 replicas", Box::new(move || {
            let pairs = [((2, 2), (1, 1)), ((1, 1), (1, 2)), ((2, 1), (1, 3)), ((1, 4), (2, 2)), ((1, 2), (3, 1))];
            verify::symmetry(&ArrayRun { duration: 1.0, ..array(100_000) }, &pairs, seed.replica(8))
        })),
        ("PNG limit: TV decreasing over n in {4,8,16,32}, TV <= 0.05 at n = 32, top row likewise", Box::new(move || {
            let run = PngLimitRun { n: vec![4, 8, 16, 32], samples: 10_000, half_width: 3.0, bootstrap: BOOTSTRAP, tv_max: 0.05, top_row_time: 0.5 };
            verify::png_limit(&run, seed.replica(9))
        })),
        ("structural invariants and normalization of pi at n = 1", Box::new(move || verify::invariants(200, seed.replica(10)))),
    ];

    let mut failed = 0;
    for (k, (title, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(report) => {
                let verdict = if report.passed { "PASS" } else { "FAIL" };
                println!("criterion {}: {verdict}: {title} ({} checks, {secs:.1}s)", k + 1, report.checks.len());
                for c in &report.checks {
                    if verbose || !c.passed {
                        let p = c.p_value.map(|p| format!(" p={p:.3e}")).unwrap_or_default();
                        let mark = if c.passed { "ok" } else { "FAILED" };
                        println!("    {mark}: {} stat={:.6e} threshold={:.3e}{p}", c.label, c.statistic, c.threshold);
                    }
                }
                let zs: Vec<f64> = report.checks.iter().filter_map(|c| c.z).map(f64::abs).collect();
                let beyond = zs.iter().filter(|z| **z > 3.0).count();
                if beyond > 0 {
                    let worst = zs.iter().copied().fold(0.0, f64::max);
                    println!("    note: {beyond} of {} moment checks exceed a plain 3 SE (largest |z| = {worst:.2})", zs.len());
                }
                if verbose && !report.extra.is_null() {
                    println!("    {}", report.extra);
                }
                failed += usize::from(!report.passed);
            }
            Err(e) => {
                println!("criterion {}: FAIL: {title} (error: {e})", k + 1);
                failed += 1;
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
