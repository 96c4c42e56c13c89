//! Integer-valued empirical distributions and the tests the harnesses use.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

use crate::rng::{Purpose, Seed};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("empty distribution")]
    Empty,
    #[error("need at least 2 samples, got {0}")]
    TooFew(u64),
}

/// Exact histogram of integer observations.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    counts: BTreeMap<i64, u64>,
    total: u64,
}

impl EmpiricalDist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values<I: IntoIterator<Item = i64>>(values: I) -> Self {
        let mut d = Self::new();
        for v in values {
            d.add(v);
        }
        d
    }

    pub fn add(&mut self, value: i64) {
        self.add_count(value, 1);
    }

    pub fn add_count(&mut self, value: i64, count: u64) {
        if count > 0 {
            *self.counts.entry(value).or_insert(0) += count;
            self.total += count;
        }
    }

    pub fn merge(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.absorb(other);
        out
    }

    pub fn absorb(&mut self, other: &Self) {
        for (&v, &c) in &other.counts {
            self.add_count(v, c);
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn count(&self, value: i64) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    pub fn pmf(&self, value: i64) -> f64 {
        self.count(value) as f64 / self.total as f64
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.counts.iter().map(|(&v, &c)| (v, c))
    }

    pub fn moments(&self) -> Moments {
        let mut m = Moments::new();
        for (v, c) in self.iter() {
            m.push_repeated(v as f64, c);
        }
        m
    }

    /// Multinomial resample of `size` draws.
    pub fn resample(&self, size: u64, seed: Seed, replica: u64) -> Self {
        let mut rng = seed.substream(Purpose::Bootstrap, replica, 0);
        let cumulative: Vec<(u64, i64)> = self
            .iter()
            .scan(0u64, |acc, (v, c)| {
                *acc += c;
                Some((*acc, v))
            })
            .collect();
        let mut out = Self::new();
        for _ in 0..size {
            let u = rng.below(self.total);
            let k = cumulative.partition_point(|&(c, _)| c <= u);
            out.add(cumulative[k].1);
        }
        out
    }
}

impl FromIterator<i64> for EmpiricalDist {
    fn from_iter<I: IntoIterator<Item = i64>>(iter: I) -> Self {
        Self::from_values(iter)
    }
}

fn nonempty(d: &EmpiricalDist) -> Result<(), StatsError> {
    if d.is_empty() {
        Err(StatsError::Empty)
    } else {
        Ok(())
    }
}

/// Half the L1 distance between the two empirical mass functions.
pub fn tv_distance(a: &EmpiricalDist, b: &EmpiricalDist) -> Result<f64, StatsError> {
    nonempty(a)?;
    nonempty(b)?;
    let keys: std::collections::BTreeSet<i64> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    Ok(0.5 * keys.into_iter().map(|k| (a.pmf(k) - b.pmf(k)).abs()).sum::<f64>())
}

/// Largest gap between the two empirical distribution functions.
pub fn ks_statistic(a: &EmpiricalDist, b: &EmpiricalDist) -> Result<f64, StatsError> {
    nonempty(a)?;
    nonempty(b)?;
    let keys: std::collections::BTreeSet<i64> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    let (mut fa, mut fb, mut best) = (0.0, 0.0, 0.0f64);
    for k in keys {
        fa += a.pmf(k);
        fb += b.pmf(k);
        best = best.max((fa - fb).abs());
    }
    Ok(best)
}

/// Pooled bins, each an inclusive value range; the first and last bins are open-ended.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub bins: Vec<(i64, i64)>,
    pub min_expected: f64,
}

impl Chi2Result {
    fn finish(statistic: f64, bins: Vec<(i64, i64)>, min_expected: f64) -> Self {
        let dof = bins.len().saturating_sub(1);
        let p_value = if dof == 0 {
            1.0
        } else {
            ChiSquared::new(dof as f64).expect("positive dof").sf(statistic)
        };
        Self { statistic, dof, p_value, bins, min_expected }
    }
}

const MIN_EXPECTED: f64 = 5.0;

/// Goodness of fit against a mass function supported on `lo, lo+1, ...`.
/// Bins are pooled left to right until each expects at least 5 counts; the
/// remaining tail forms the last bin (merged into its neighbour if light).
pub fn chi2_test(a: &EmpiricalDist, lo: i64, pmf: impl Fn(i64) -> f64) -> Result<Chi2Result, StatsError> {
    nonempty(a)?;
    let n = a.total as f64;
    let mut bins: Vec<(i64, i64, f64)> = Vec::new();
    let (mut start, mut acc, mut used) = (lo, 0.0, 0.0);
    let mut k = lo;
    loop {
        if (1.0 - used) * n < MIN_EXPECTED || k - lo > 1_000_000 {
            break;
        }
        let p = pmf(k);
        acc += p;
        used += p;
        if acc * n >= MIN_EXPECTED && (1.0 - used) * n >= MIN_EXPECTED {
            bins.push((start, k, acc * n));
            start = k + 1;
            acc = 0.0;
        }
        k += 1;
    }
    let tail = (1.0 - (used - acc)).max(0.0) * n;
    bins.push((start, i64::MAX, tail));
    if bins.len() > 1 && bins[bins.len() - 1].2 < MIN_EXPECTED {
        let last = bins.pop().expect("nonempty");
        let prev = bins.last_mut().expect("nonempty");
        prev.1 = last.1;
        prev.2 += last.2;
    }
    let last = bins.len() - 1;
    let mut statistic = 0.0;
    for (b, &(s, e, expected)) in bins.iter().enumerate() {
        let observed: u64 = a
            .iter()
            .filter(|&(v, _)| (b == 0 || v >= s) && (b == last || v <= e))
            .map(|(_, c)| c)
            .sum();
        statistic += (observed as f64 - expected).powi(2) / expected;
    }
    let min_expected = bins.iter().map(|b| b.2).fold(f64::INFINITY, f64::min);
    Ok(Chi2Result::finish(statistic, bins.iter().map(|&(s, e, _)| (s, e)).collect(), min_expected))
}

/// Homogeneity test for two samples. Adjacent values are pooled until
/// every bin expects at least 5 counts in both samples.
pub fn chi2_two_sample(a: &EmpiricalDist, b: &EmpiricalDist) -> Result<Chi2Result, StatsError> {
    nonempty(a)?;
    nonempty(b)?;
    let (na, nb) = (a.total as f64, b.total as f64);
    let fa = na / (na + nb);
    let fb = nb / (na + nb);
    let keys: std::collections::BTreeSet<i64> = a.counts.keys().chain(b.counts.keys()).copied().collect();
    // (start, end, count a, count b)
    let mut bins: Vec<(i64, i64, u64, u64)> = Vec::new();
    let mut cur: Option<(i64, i64, u64, u64)> = None;
    let heavy = |ca: u64, cb: u64| {
        let m = (ca + cb) as f64;
        m * fa.min(fb) >= MIN_EXPECTED
    };
    for k in keys {
        let c = cur.get_or_insert((k, k, 0, 0));
        c.1 = k;
        c.2 += a.count(k);
        c.3 += b.count(k);
        if heavy(c.2, c.3) {
            bins.push(cur.take().expect("set"));
        }
    }
    if let Some(rest) = cur {
        match bins.last_mut() {
            Some(prev) => {
                prev.1 = rest.1;
                prev.2 += rest.2;
                prev.3 += rest.3;
            }
            None => bins.push(rest),
        }
    }
    let mut statistic = 0.0;
    let mut min_expected = f64::INFINITY;
    for &(_, _, ca, cb) in &bins {
        let m = (ca + cb) as f64;
        let (ea, eb) = (m * fa, m * fb);
        min_expected = min_expected.min(ea.min(eb));
        statistic += (ca as f64 - ea).powi(2) / ea + (cb as f64 - eb).powi(2) / eb;
    }
    let ranges = bins.iter().map(|&(s, e, _, _)| (s, e)).collect();
    Ok(Chi2Result::finish(statistic, ranges, min_expected))
}

/// Streaming central moments up to order four, mergeable across replicas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        *self = self.merge(&Moments { n: 1, mean: x, m2: 0.0, m3: 0.0, m4: 0.0 });
    }

    pub fn push_repeated(&mut self, x: f64, count: u64) {
        if count > 0 {
            *self = self.merge(&Moments { n: count, mean: x, m2: 0.0, m3: 0.0, m4: 0.0 });
        }
    }

    /// Pairwise combination of central moment sums.
    pub fn merge(&self, o: &Self) -> Self {
        if self.n == 0 {
            return *o;
        }
        if o.n == 0 {
            return *self;
        }
        let (na, nb) = (self.n as f64, o.n as f64);
        let n = na + nb;
        let d = o.mean - self.mean;
        let d_n = d / n;
        let mean = self.mean + d_n * nb;
        let m2 = self.m2 + o.m2 + d * d_n * na * nb;
        let m3 = self.m3 + o.m3 + d * d_n * d_n * na * nb * (na - nb) + 3.0 * d_n * (na * o.m2 - nb * self.m2);
        let m4 = self.m4
            + o.m4
            + d * d_n * d_n * d_n * na * nb * (na * na - na * nb + nb * nb)
            + 6.0 * d_n * d_n * (na * na * o.m2 + nb * nb * self.m2)
            + 4.0 * d_n * (na * o.m3 - nb * self.m3);
        Self { n: self.n + o.n, mean, m2, m3, m4 }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCi {
    pub n: u64,
    pub mean: f64,
    pub variance: f64,
    pub se_mean: f64,
    pub se_variance: f64,
}

/// Mean and variance with standard errors; the variance error uses the
/// sample fourth central moment.
pub fn moment_ci(m: &Moments) -> Result<MomentCi, StatsError> {
    if m.n < 2 {
        return Err(StatsError::TooFew(m.n));
    }
    let n = m.n as f64;
    let variance = m.variance();
    let mu4 = m.m4 / n;
    let s4 = variance * variance;
    let se_variance = ((mu4 - (n - 3.0) / (n - 1.0) * s4).max(0.0) / n).sqrt();
    Ok(MomentCi { n: m.n, mean: m.mean, variance, se_mean: (variance / n).sqrt(), se_variance })
}

/// Root mean square of the TV distance between two samples of the given
/// sizes drawn from the pooled data: the Monte Carlo noise level of
/// [`tv_distance`] when both sides share one law.
pub fn bootstrap_null_tv(a: &EmpiricalDist, b: &EmpiricalDist, reps: u64, seed: Seed) -> Result<f64, StatsError> {
    nonempty(a)?;
    nonempty(b)?;
    let pooled = a.merge(b);
    // Collected before summing so the result does not depend on scheduling.
    let sq: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let x = pooled.resample(a.total, seed, 2 * r);
            let y = pooled.resample(b.total, seed, 2 * r + 1);
            tv_distance(&x, &y).expect("nonempty").powi(2)
        })
        .collect();
    let sq: f64 = sq.iter().sum();
    Ok((sq / reps as f64).sqrt())
}

/// Percentile interval for the TV distance from independent resamples of each side.
pub fn bootstrap_tv_ci(
    a: &EmpiricalDist,
    b: &EmpiricalDist,
    reps: u64,
    level: f64,
    seed: Seed,
) -> Result<(f64, f64), StatsError> {
    nonempty(a)?;
    nonempty(b)?;
    let mut tvs: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let x = a.resample(a.total, seed, 2 * r);
            let y = b.resample(b.total, seed, 2 * r + 1);
            tv_distance(&x, &y).expect("nonempty")
        })
        .collect();
    tvs.sort_by(f64::total_cmp);
    let q = |p: f64| tvs[((p * (reps - 1) as f64).round() as usize).min(tvs.len() - 1)];
    Ok((q((1.0 - level) / 2.0), q((1.0 + level) / 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpp::geometric_pmf;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn geometric_sample(n: u64, seed: Seed) -> EmpiricalDist {
        let mut s = seed.substream(Purpose::Generic, 0, 0);
        (0..n).map(|_| s.geometric(0.25) as i64).collect()
    }

    #[test]
    fn tv_and_ks_basics() {
        let a = EmpiricalDist::from_values([0, 1, 1, 2]);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
        let b = EmpiricalDist::from_values([5, 6]);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(tv_distance(&a, &EmpiricalDist::new()), Err(StatsError::Empty));
    }

    #[test]
    fn chi2_accepts_the_true_law() {
        let d = geometric_sample(100_000, Seed::new(1));
        let r = chi2_test(&d, 0, |k| geometric_pmf(0.5, k as u64).unwrap()).unwrap();
        assert!(r.min_expected >= 5.0);
        assert!(r.dof >= 5);
        assert!(r.p_value > 0.001, "{r:?}");
        let wrong = chi2_test(&d, 0, |k| geometric_pmf(0.55, k as u64).unwrap()).unwrap();
        assert!(wrong.p_value < 1e-6);
    }

    #[test]
    fn chi2_is_calibrated() {
        let trials = 2000;
        let rejected = (0..trials)
            .filter(|&t| {
                let d = geometric_sample(10_000, Seed::new(2).replica(t));
                chi2_test(&d, 0, |k| geometric_pmf(0.5, k as u64).unwrap()).unwrap().p_value < 0.01
            })
            .count();
        let rate = rejected as f64 / trials as f64;
        assert!((rate - 0.01).abs() <= 0.005, "{rate}");
    }

    #[test]
    fn two_sample_chi2() {
        let a = geometric_sample(50_000, Seed::new(3));
        let b = geometric_sample(30_000, Seed::new(4));
        let r = chi2_two_sample(&a, &b).unwrap();
        assert!(r.min_expected >= 5.0);
        assert!(r.p_value > 0.001, "{r:?}");
        let shifted: EmpiricalDist = b.iter().map(|(v, c)| (v + 1, c)).fold(EmpiricalDist::new(), |mut d, (v, c)| {
            d.add_count(v, c);
            d
        });
        assert!(chi2_two_sample(&a, &shifted).unwrap().p_value < 1e-10);
    }

    #[test]
    fn moments_of_geometric() {
        let d = geometric_sample(200_000, Seed::new(5));
        let ci = moment_ci(&d.moments()).unwrap();
        assert!((ci.mean - 1.0 / 3.0).abs() < 3.0 * ci.se_mean, "{ci:?}");
        // Var = r / (1 - r)^2 with r = 1/4.
        assert!((ci.variance - 4.0 / 9.0).abs() < 3.0 * ci.se_variance, "{ci:?}");
    }

    #[test]
    fn constant_samples_have_zero_variance() {
        let m: Moments = std::iter::repeat_n(2.5, 10).collect();
        let ci = moment_ci(&m).unwrap();
        assert_eq!(ci.variance, 0.0);
        assert_eq!(moment_ci(&Moments::new()), Err(StatsError::TooFew(0)));
    }

    #[test]
    fn null_tv_level_shrinks_with_size() {
        let a = geometric_sample(1_000, Seed::new(6));
        let b = geometric_sample(1_000, Seed::new(7));
        let small = bootstrap_null_tv(&a, &b, 50, Seed::new(8)).unwrap();
        let a = geometric_sample(16_000, Seed::new(6));
        let b = geometric_sample(16_000, Seed::new(7));
        let large = bootstrap_null_tv(&a, &b, 50, Seed::new(8)).unwrap();
        assert!(large < small / 2.0, "{small} {large}");
        let (lo, hi) = bootstrap_tv_ci(&a, &b, 100, 0.95, Seed::new(9)).unwrap();
        assert!(lo <= hi);
    }

    proptest! {
        #[test]
        fn merge_laws(a in prop::collection::vec(-5i64..5, 0..40),
                      b in prop::collection::vec(-5i64..5, 0..40),
                      c in prop::collection::vec(-5i64..5, 0..40)) {
            let (a, b, c): (EmpiricalDist, EmpiricalDist, EmpiricalDist) =
                (a.into_iter().collect(), b.into_iter().collect(), c.into_iter().collect());
            prop_assert_eq!(a.merge(&EmpiricalDist::new()), a.clone());
            prop_assert_eq!(a.merge(&b), b.merge(&a));
            prop_assert_eq!(a.merge(&b).merge(&c), a.merge(&b.merge(&c)));
            prop_assert_eq!(a.merge(&b).total(), a.total() + b.total());
        }

        #[test]
        fn tv_is_a_metric(a in prop::collection::vec(0i64..6, 1..30),
                          b in prop::collection::vec(0i64..6, 1..30),
                          c in prop::collection::vec(0i64..6, 1..30)) {
            let (a, b, c): (EmpiricalDist, EmpiricalDist, EmpiricalDist) =
                (a.into_iter().collect(), b.into_iter().collect(), c.into_iter().collect());
            let ab = tv_distance(&a, &b).unwrap();
            prop_assert!((ab - tv_distance(&b, &a).unwrap()).abs() < 1e-15);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
            prop_assert!(ab <= tv_distance(&a, &c).unwrap() + tv_distance(&c, &b).unwrap() + 1e-12);
        }

        #[test]
        fn merged_moments_match_single_pass(xs in prop::collection::vec(-100.0f64..100.0, 2..60), split in 0usize..60) {
            let split = split.min(xs.len());
            let whole: Moments = xs.iter().copied().collect();
            let left: Moments = xs[..split].iter().copied().collect();
            let right: Moments = xs[split..].iter().copied().collect();
            let merged = left.merge(&right);
            prop_assert_eq!(merged.count(), whole.count());
            assert_relative_eq!(merged.mean(), whole.mean(), epsilon = 1e-10, max_relative = 1e-10);
            assert_relative_eq!(merged.variance(), whole.variance(), epsilon = 1e-10, max_relative = 1e-10);
            assert_relative_eq!(merged.m4, whole.m4, epsilon = 1e-6, max_relative = 1e-10);
        }
    }
}
