//! Verification harnesses shared by the command line and the acceptance
//! suite. Each returns a [`Report`]: one line per check with its
//! statistic, threshold and verdict.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::array::{self, ArrayError, ArrayState};
use crate::error::ParamError;
use crate::growth::{self, GrowthError};
use crate::lpp::{self, geometric_pmf, lpp_bruteforce, lpp_table, GeometricEnv, LppError};
use crate::noise::make_noise;
use crate::params::ModelParams;
use crate::particles::{self, ParticleError};
use crate::png::{self, ConvergenceRow, ExperimentConfig, NucleationSet, PngError};
use crate::rng::Seed;
use crate::staircase::Cell;
use crate::stats::{bootstrap_null_tv, chi2_test, chi2_two_sample, moment_ci, tv_distance, EmpiricalDist, StatsError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Lpp(#[from] LppError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Particle(#[from] ParticleError),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Png(#[from] PngError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

type Result<T> = std::result::Result<T, VerifyError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub label: String,
    pub statistic: f64,
    /// Pass when `statistic <= threshold`, or `p_value > threshold` for tests.
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    /// Standardized difference, for checks stated in standard errors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    pub n_samples: u64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(label: impl Into<String>, statistic: f64, threshold: f64, n_samples: u64) -> Self {
        Self { label: label.into(), statistic, threshold, p_value: None, z: None, n_samples, passed: statistic <= threshold }
    }

    /// `|diff| <= k * se`, keeping `z = diff / se`.
    pub fn within_se(label: impl Into<String>, diff: f64, se: f64, k: f64, n_samples: u64) -> Self {
        let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        Self { z: Some(z), ..Self::at_most(label, diff.abs(), k * se, n_samples) }
    }

    pub fn p_above(label: impl Into<String>, statistic: f64, p_value: f64, alpha: f64, n_samples: u64) -> Self {
        Self { label: label.into(), statistic, threshold: alpha, p_value: Some(p_value), z: None, n_samples, passed: p_value > alpha }
    }

    pub fn holds(label: impl Into<String>, ok: bool, n_samples: u64) -> Self {
        Self::at_most(label, if ok { 0.0 } else { 1.0 }, 0.0, n_samples)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub test: String,
    pub seed: Seed,
    pub config: Value,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub extra: Value,
}

impl Report {
    pub fn new(test: &str, seed: Seed, config: Value) -> Self {
        Self { schema_version: SCHEMA_VERSION, test: test.into(), seed, config, passed: true, checks: Vec::new(), extra: Value::Null }
    }

    pub fn push(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Default significance level for the chi-square decisions.
pub const ALPHA: f64 = 0.001;

/// Standard-error multiplier for a family of `m` moment checks: Bonferroni
/// split of the two-sided error rate of a single 3 SE check.
pub fn se_multiplier(m: usize) -> f64 {
    let single = 2.0 * Normal::standard().sf(3.0);
    Normal::standard().inverse_cdf(1.0 - single / (2.0 * m.max(1) as f64))
}

fn dist<I: IntoIterator<Item = u64>>(xs: I) -> EmpiricalDist {
    xs.into_iter().map(|x| x as i64).collect()
}

/// Two-sample chi-square, TV against three times its bootstrap noise level,
/// and means and variances within `k` standard errors.
fn compare(report: &mut Report, label: &str, a: &EmpiricalDist, b: &EmpiricalDist, k: f64, boot: u64, seed: Seed) -> Result<()> {
    let chi = chi2_two_sample(a, b)?;
    report.push(Check::p_above(format!("{label}: chi2"), chi.statistic, chi.p_value, ALPHA, a.total()));
    if boot > 0 {
        let tv = tv_distance(a, b)?;
        let noise = bootstrap_null_tv(a, b, boot, seed)?;
        report.push(Check::at_most(format!("{label}: TV <= 3 x bootstrap RMS"), tv, 3.0 * noise, a.total()));
    }
    let (ma, mb) = (moment_ci(&a.moments())?, moment_ci(&b.moments())?);
    let se = ma.se_mean.hypot(mb.se_mean);
    report.push(Check::within_se(format!("{label}: |mean diff| <= {k:.2} SE"), ma.mean - mb.mean, se, k, a.total()));
    let se = ma.se_variance.hypot(mb.se_variance);
    report.push(Check::within_se(format!("{label}: |var diff| <= {k:.2} SE"), ma.variance - mb.variance, se, k, a.total()));
    Ok(())
}

fn columns(rows: &[Vec<u64>]) -> Vec<EmpiricalDist> {
    let k = rows.first().map_or(0, Vec::len);
    let mut out: Vec<EmpiricalDist> = (0..=k).map(|_| EmpiricalDist::new()).collect();
    for r in rows {
        for (c, &x) in r.iter().enumerate() {
            out[c].add(x as i64);
        }
        out[k].add(r.iter().sum::<u64>() as i64);
    }
    out
}

fn compare_vectors(report: &mut Report, name: &str, a: &[Vec<u64>], b: &[Vec<u64>], boot: u64, seed: Seed) -> Result<()> {
    let (ca, cb) = (columns(a), columns(b));
    let last = ca.len() - 1;
    let k = se_multiplier(2 * ca.len());
    for c in 0..=last {
        let label = if c == last { format!("{name} sum") } else { format!("{name}[{}]", c + 1) };
        compare(report, &label, &ca[c], &cb[c], k, boot, seed.replica(c as u64))?;
    }
    Ok(())
}

/// Max-plus table against exhaustive path enumeration on every cell.
pub fn lpp_oracle(ns: &[usize], vs: &[f64], envs: u64, seed: Seed) -> Result<Report> {
    let mut report = Report::new("lpp-oracle", seed, json!({ "n": ns, "v": vs, "envs": envs }));
    for (a, &n) in ns.iter().enumerate() {
        for (b, &v) in vs.iter().enumerate() {
            let tag = seed.replica((a * vs.len() + b) as u64);
            let bad: usize = (0..envs)
                .into_par_iter()
                .map(|r| -> Result<usize> {
                    let env = GeometricEnv::sample(n, v, tag.replica(r))?;
                    let table = lpp_table(&env);
                    let mut bad = 0;
                    for (k, l) in env.staircase().cells() {
                        bad += usize::from(lpp_bruteforce(&env, k, l)? != table.get(k, l));
                    }
                    Ok(bad)
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum();
            report.push(Check::at_most(format!("n={n} v={v}: mismatched cells"), bad as f64, 0.0, envs));
        }
    }
    Ok(report)
}

/// Height dynamics against particle dynamics plus reconstruction, pathwise
/// on shared noise.
pub fn coupling(ns: &[usize], v: f64, half_width: f64, samples: u64, seed: Seed) -> Result<Report> {
    let mut report = Report::new("coupling", seed, json!({ "n": ns, "v": v, "L": half_width, "samples": samples }));
    for &n in ns {
        let params = ModelParams::new(v, n, half_width)?;
        let matches: u64 = (0..samples)
            .into_par_iter()
            .map(|r| -> Result<u64> {
                let noise = make_noise::<f64>(&params, seed.replica(r));
                let g = growth::simulate_noise(&noise)?;
                let p = particles::simulate_noise(&noise)?;
                Ok(u64::from(g.profiles() == p.to_growth().profiles() && g.usage() == p.usage()))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum();
        report.push(Check::at_most(format!("n={n}: trajectories differing"), (samples - matches) as f64, 0.0, samples));
    }
    Ok(report)
}

/// Pairwise balance between forward and reversed rates at stationary samples.
pub fn balance(ns: &[usize], vs: &[f64], samples: u64, seed: Seed) -> Result<Report> {
    let mut report = Report::new("balance", seed, json!({ "n": ns, "v": vs, "samples": samples }));
    for (a, &n) in ns.iter().enumerate() {
        for (b, &v) in vs.iter().enumerate() {
            let params = ModelParams::new(v, n, 1.0)?;
            let tag = seed.replica((a * vs.len() + b) as u64);
            let reps = (0..samples)
                .into_par_iter()
                .map(|r| -> Result<array::BalanceReport> {
                    let s = array::sample_stationary(&params, tag.replica(r))?;
                    Ok(array::check_balance(&s, v)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let residual = reps.iter().map(|r| r.max_log_residual).fold(0.0, f64::max);
            let gap = reps.iter().map(|r| r.rate_gap()).fold(0.0, f64::max);
            let violations: usize = reps.iter().map(|r| r.violations.len()).sum();
            report.push(Check::at_most(format!("n={n} v={v}: max log residual"), residual, 1e-9, samples));
            report.push(Check::at_most(format!("n={n} v={v}: max rate-sum gap"), gap, 1e-12, samples));
            report.push(Check::at_most(format!("n={n} v={v}: pairing violations"), violations as f64, 0.0, samples));
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrayRun {
    pub n: usize,
    pub v: f64,
    pub duration: f64,
    pub replicas: u64,
    pub bootstrap: u64,
}

fn stationary_pairs(run: &ArrayRun, seed: Seed) -> Result<Vec<(ArrayState, ArrayState, ArrayState)>> {
    let params = ModelParams::new(run.v, run.n, 1.0)?;
    (0..run.replicas)
        .into_par_iter()
        .map(|r| {
            let s0 = array::sample_stationary(&params, seed.replica(0).replica(r))?;
            let st = array::run_ct(&s0, run.duration, run.v, seed.replica(2).replica(r))?;
            let fresh = array::sample_stationary(&params, seed.replica(1).replica(r))?;
            Ok((s0, st, fresh))
        })
        .collect()
}

/// Fixed-time cell marginals of the chain started from a stationary sample
/// against fresh stationary samples.
pub fn stationarity(run: &ArrayRun, cells: &[(usize, usize)], seed: Seed) -> Result<Report> {
    let mut report = Report::new("stationarity", seed, json!({ "run": run, "cells": cells }));
    let triples = stationary_pairs(run, seed)?;
    let k = se_multiplier(2 * cells.len());
    for (c, &(i, j)) in cells.iter().enumerate() {
        let at_t = dist(triples.iter().map(|t| t.1.get(i, j)));
        let fresh = dist(triples.iter().map(|t| t.2.get(i, j)));
        compare(&mut report, &format!("cell ({i},{j})"), &at_t, &fresh, k, run.bootstrap, seed.replica(10 + c as u64))?;
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRun {
    pub n: usize,
    pub v: f64,
    pub half_width: f64,
    pub samples: u64,
    /// Seeds on which `L` is checked to be stable at the origin.
    pub stabilize_samples: u64,
    pub bootstrap: u64,
}

/// Heights `(h_1(0), ..., h_2n(0))` against the last passage vector.
pub fn identity(run: &IdentityRun, seed: Seed) -> Result<Report> {
    let mut report = Report::new("identity", seed, json!({ "run": run }));
    let params = ModelParams::new(run.v, run.n, run.half_width)?;
    let stable = (0..run.stabilize_samples)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let s = growth::stabilize_half_width::<f64>(&params, seed.replica(0).replica(r), 1.0, 3)?;
            Ok(s.doublings == 0)
        })
        .collect::<Result<Vec<_>>>()?;
    let unstable = stable.iter().filter(|s| !**s).count();
    report.push(Check::at_most(
        format!("L={} stable on [-1,1] (seeds needing a wider window)", run.half_width),
        unstable as f64,
        0.0,
        run.stabilize_samples,
    ));

    let heights = (0..run.samples)
        .into_par_iter()
        .map(|r| -> Result<Vec<u64>> {
            let traj = growth::simulate::<f64>(&params, seed.replica(0).replica(r))?;
            Ok(traj.read_vector(0.0, 2 * run.n)?)
        })
        .collect::<Result<Vec<_>>>()?;
    let lpp = (0..run.samples)
        .into_par_iter()
        .map(|r| Ok(lpp::sample_g_vector(&params, seed.replica(1).replica(r))?))
        .collect::<Result<Vec<_>>>()?;
    if heights.iter().any(|h| h.windows(2).any(|w| w[0] > w[1])) {
        report.push(Check::holds("height vectors weakly increasing", false, run.samples));
    }
    compare_vectors(&mut report, "h", &heights, &lpp, run.bootstrap, seed.replica(7))?;
    if run.n == 1 {
        let h1 = dist(heights.iter().map(|h| h[0]));
        let chi = chi2_test(&h1, 0, |k| geometric_pmf(run.v, k as u64).unwrap_or(0.0))?;
        report.push(Check::p_above("h_1(0) vs geometric pmf: chi2", chi.statistic, chi.p_value, ALPHA, run.samples));
    }
    Ok(report)
}

/// Level vector of the running array against the last passage vector, and
/// row 2 under standalone pushASEP with a wall.
pub fn diagonal_rows(run: &ArrayRun, seed: Seed) -> Result<Report> {
    let mut report = Report::new("diagonal-rows", seed, json!({ "run": run }));
    let triples = stationary_pairs(run, seed)?;
    let levels: Vec<Vec<u64>> = triples.iter().map(|t| t.1.level_vector()).collect();
    let params = ModelParams::new(run.v, run.n, 1.0)?;
    let lpp = (0..run.replicas)
        .into_par_iter()
        .map(|r| Ok(lpp::sample_g_vector(&params, seed.replica(3).replica(r))?))
        .collect::<Result<Vec<_>>>()?;
    compare_vectors(&mut report, "level", &levels, &lpp, run.bootstrap, seed.replica(20))?;

    let rows = (0..run.replicas)
        .into_par_iter()
        .map(|r| -> Result<Vec<u64>> {
            let x0 = triples[r as usize].0.row(2);
            Ok(array::pushasep_wall(&x0, run.duration, run.v, seed.replica(4).replica(r))?.final_state().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    let fresh: Vec<Vec<u64>> = triples.iter().map(|t| t.2.row(2)).collect();
    compare_vectors(&mut report, "row 2", &rows, &fresh, run.bootstrap, seed.replica(21))?;
    Ok(report)
}

/// `E[X_ij(0) X_kl(s)] = E[X_lk(0) X_ji(s)]` in stationarity, from paired differences.
pub fn symmetry(run: &ArrayRun, pairs: &[(Cell, Cell)], seed: Seed) -> Result<Report> {
    let mut report = Report::new("symmetry", seed, json!({ "run": run, "pairs": pairs }));
    let triples = stationary_pairs(run, seed)?;
    let mut table = Vec::new();
    let mult = se_multiplier(pairs.len());
    for &((i, j), (k, l)) in pairs {
        let diffs: crate::stats::Moments = triples
            .iter()
            .map(|(s0, st, _)| (s0.get(i, j) * st.get(k, l)) as f64 - (s0.get(l, k) * st.get(j, i)) as f64)
            .collect();
        let lhs: crate::stats::Moments = triples.iter().map(|(s0, st, _)| (s0.get(i, j) * st.get(k, l)) as f64).collect();
        // Transposition without reversing time, for comparison.
        let unreversed: crate::stats::Moments = triples
            .iter()
            .map(|(s0, st, _)| (s0.get(i, j) * st.get(k, l)) as f64 - (s0.get(j, i) * st.get(l, k)) as f64)
            .collect();
        let ci = moment_ci(&diffs)?;
        let un = moment_ci(&unreversed)?;
        report.push(Check::within_se(
            format!("E[X{i}{j}(0) X{k}{l}(s)] - E[X{l}{k}(0) X{j}{i}(s)] within {mult:.2} SE"),
            ci.mean,
            ci.se_mean,
            mult,
            run.replicas,
        ));
        table.push(json!({
            "pair": [[i, j], [k, l]],
            "lhs_mean": lhs.mean(),
            "diff": ci.mean,
            "se": ci.se_mean,
            "unreversed_diff": un.mean,
            "unreversed_se": un.se_mean,
        }));
    }
    report.extra = json!({ "covariances": table });
    Ok(report)
}

fn decreasing_up_to_overlap(rows: &[ConvergenceRow]) -> bool {
    rows.windows(2).all(|w| w[1].tv <= w[0].tv || w[1].tv_ci.0 <= w[0].tv_ci.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PngLimitRun {
    pub n: Vec<usize>,
    pub samples: u64,
    pub half_width: f64,
    pub bootstrap: u64,
    pub tv_max: f64,
    /// Time for the top-row comparison.
    pub top_row_time: f64,
}

/// Distance between the growth model at `v = 1/n` and flat PNG, and the
/// same for the top row of the stationary array.
pub fn png_limit(run: &PngLimitRun, seed: Seed) -> Result<Report> {
    let mut report = Report::new("png-limit", seed, json!({ "run": run }));
    let cfg = ExperimentConfig { samples: run.samples, half_width: run.half_width, bootstrap: run.bootstrap, seed };
    let diag = png::convergence_experiment(&run.n, &cfg)?;
    let top = png::top_row_experiment(&run.n, run.top_row_time, &ExperimentConfig { seed: seed.replica(1), ..cfg })?;
    report.push(Check::holds("h_2n(0): TV decreasing in n up to CI overlap", decreasing_up_to_overlap(&diag), run.samples));
    if let Some(last) = diag.last() {
        report.push(Check::at_most(format!("h_2n(0): TV at n={}", last.n), last.tv, run.tv_max, run.samples));
    }
    report.push(Check::holds("top row: TV decreasing in n up to CI overlap", decreasing_up_to_overlap(&top), run.samples));
    report.extra = json!({ "growth": diag, "top_row": top });
    Ok(report)
}

/// Structural invariants along simulated paths and the normalization of
/// the stationary mass at `n = 1`.
pub fn invariants(samples: u64, seed: Seed) -> Result<Report> {
    let mut report = Report::new("invariants", seed, json!({ "samples": samples }));
    let configs = [(0.5, 3, 8.0), (0.8, 5, 10.0), (0.3, 2, 20.0)];
    let mut profile_ok = true;
    let mut particle_ok = true;
    for (c, &(v, n, l)) in configs.iter().enumerate() {
        let params = ModelParams::new(v, n, l)?;
        let oks = (0..samples)
            .into_par_iter()
            .map(|r| -> Result<(bool, bool)> {
                let seed = seed.replica(c as u64).replica(r);
                let g = growth::simulate::<f64>(&params, seed)?;
                let profiles = g.profiles();
                let p_ok = profiles[0].is_flat()
                    && profiles.iter().all(|h| h.validate().is_ok() && h.inc().len() == h.dec().len())
                    && profiles.windows(2).all(|w| w[1].dominates(&w[0]));
                let q = particles::simulate::<f64>(&params, seed)?;
                let q_ok = q.configs().iter().all(|c| c.validate().is_ok() && c.y().len() == c.z().len());
                Ok((p_ok, q_ok))
            })
            .collect::<Result<Vec<_>>>()?;
        profile_ok &= oks.iter().all(|o| o.0);
        particle_ok &= oks.iter().all(|o| o.1);
    }
    report.push(Check::holds("height profiles: ballot, balance, monotone growth", profile_ok, samples));
    report.push(Check::holds("particle configurations: ballot and balance", particle_ok, samples));

    let array_ok = (0..samples)
        .into_par_iter()
        .map(|r| -> Result<bool> {
            let params = ModelParams::new(0.6, 2, 1.0)?;
            let s0 = array::sample_stationary(&params, seed.replica(10).replica(r))?;
            let traj = array::simulate_ct(&s0, 3.0, 0.6, seed.replica(11).replica(r))?;
            Ok(traj.states().iter().all(|(_, s)| s.validate().is_ok() && s.level_vector().windows(2).all(|w| w[0] <= w[1])))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .all(|b| b);
    report.push(Check::holds("array paths: ordering and monotone level vector", array_ok, samples));

    let png_ok = (0..samples).into_par_iter().all(|r| {
        let m = NucleationSet::<f64>::sample(3.0, seed.replica(12).replica(r));
        png::simulate_png(&m, 1.0).is_ok_and(|s| s.kinks.len() == s.antikinks.len())
    });
    report.push(Check::holds("PNG: kinks and antikinks balance", png_ok, samples));

    let mut total = 0.0f64;
    for a in 0..=40u64 {
        for b in 0..=a {
            for c in 0..=a {
                total += array::log_pi(&ArrayState::new(1, vec![a, b, c])?, 0.5f64)?.exp();
            }
        }
    }
    report.push(Check::at_most("n=1: |sum of pi over x11 <= 40 - 1|", (total - 1.0).abs(), 1e-10, 1));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_harnesses_pass() {
        let seed = Seed::new(1);
        assert!(lpp_oracle(&[1, 2], &[0.5], 50, seed).unwrap().passed);
        assert!(coupling(&[1, 3], 0.5, 10.0, 50, seed).unwrap().passed);
        assert!(balance(&[1, 2], &[0.5], 50, seed).unwrap().passed);
        let r = invariants(20, seed).unwrap();
        assert!(r.passed, "{r:?}");
    }

    #[test]
    fn report_round_trips() {
        let r = coupling(&[2], 0.5, 5.0, 5, Seed::new(2)).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.schema_version, SCHEMA_VERSION);
    }

    #[test]
    fn se_multiplier_grows_with_family_size() {
        assert!((se_multiplier(1) - 3.0).abs() < 1e-6);
        assert!(se_multiplier(10) > 3.5 && se_multiplier(10) < se_multiplier(20));
    }

    #[test]
    fn failing_check_fails_report() {
        let mut r = Report::new("x", Seed::new(0), Value::Null);
        r.push(Check::at_most("ok", 0.0, 1.0, 1));
        assert!(r.passed);
        r.push(Check::p_above("bad", 10.0, 1e-5, ALPHA, 1));
        assert!(!r.passed);
        assert_eq!(r.failures().count(), 1);
    }
}
