//! Flat polynuclear growth on a finite window and its coupling to the
//! discrete-time growth model.
//!
//! Nucleations form a rate-2 Poisson process in `[0, 1] x [-A, A]`. Each
//! one creates a kink (left edge of an island, moving left at unit speed)
//! and an antikink (right edge, moving right). An antikink meeting the
//! kink to its right annihilates with it; at equal times collisions are
//! resolved before nucleations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{NoiseError, ParamError};
use crate::growth::{self, GrowthError};
use crate::lpp::{lpp_table, sample_env};
use crate::noise::NoiseStream;
use crate::params::ModelParams;
use crate::rng::{zigzag, Purpose, Seed};
use crate::scalar::Real;
use crate::stats::{bootstrap_null_tv, bootstrap_tv_ci, chi2_two_sample, ks_statistic, tv_distance, EmpiricalDist, StatsError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PngError {
    #[error("nucleation ({s}, {x}) outside [0, 1] x [-{half_width}, {half_width}]")]
    Outside { s: f64, x: f64, half_width: f64 },
    #[error("PNG time must lie in [0, 1], got {0}")]
    Time(f64),
    #[error("n must be at least 1")]
    Size,
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Space-time nucleation points `(s, x)`, sorted by time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NucleationSet<T: Real> {
    points: Vec<(T, T)>,
    half_width: T,
}

impl<T: Real> NucleationSet<T> {
    pub fn new(mut points: Vec<(T, T)>, half_width: T) -> Result<Self, PngError> {
        for &(s, x) in &points {
            let ok = s >= T::zero() && s <= T::one() && x.abs() <= half_width;
            if !ok || !s.is_finite() || !x.is_finite() {
                return Err(PngError::Outside { s: s.as_f64(), x: x.as_f64(), half_width: half_width.as_f64() });
            }
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite").then(a.1.partial_cmp(&b.1).expect("finite")));
        Ok(Self { points, half_width })
    }

    /// Rate-2 Poisson points, drawn per unit cell of space so that windows
    /// are nested: a wider window only adds points.
    pub fn sample(half_width: T, seed: Seed) -> Self {
        let a = half_width.as_f64();
        let mut points = Vec::new();
        for cell in (-a).floor() as i64..a.ceil() as i64 {
            let mut s = seed.substream(Purpose::PngNucleation, 0, zigzag(cell));
            for _ in 0..s.poisson(2.0) {
                let x = cell as f64 + s.uniform();
                let t = s.uniform();
                if x.abs() <= a {
                    points.push((T::of(t), T::of(x)));
                }
            }
        }
        Self::new(points, half_width).expect("sampled inside the window")
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Kinks and antikinks at time `time`; both lists sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PngState<T: Real> {
    pub time: T,
    pub kinks: Vec<T>,
    pub antikinks: Vec<T>,
}

impl<T: Real> PngState<T> {
    /// `#{kinks <= x} - #{antikinks < x}`.
    pub fn height(&self, x: T) -> i64 {
        let up = self.kinks.partition_point(|&k| k <= x);
        let down = self.antikinks.partition_point(|&a| a < x);
        up as i64 - down as i64
    }
}

pub fn png_height<T: Real>(state: &PngState<T>, x: T) -> i64 {
    state.height(x)
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Edge<T> {
    /// Kink at `c - t`.
    Kink(T),
    /// Antikink at `c + t`.
    Anti(T),
}

impl<T: Real> Edge<T> {
    fn at(self, t: T) -> T {
        match self {
            Edge::Kink(c) => c - t,
            Edge::Anti(c) => c + t,
        }
    }
}

fn next_collision<T: Real>(edges: &[Edge<T>]) -> Option<(T, usize)> {
    edges
        .windows(2)
        .enumerate()
        .filter_map(|(k, w)| match (w[0], w[1]) {
            (Edge::Anti(b), Edge::Kink(a)) => Some(((a - b) / T::of(2.0), k)),
            _ => None,
        })
        .min_by(|x, y| x.0.partial_cmp(&y.0).expect("finite"))
}

fn collide_until<T: Real>(edges: &mut Vec<Edge<T>>, until: T) {
    while let Some((t, k)) = next_collision(edges) {
        if t > until {
            break;
        }
        edges.drain(k..k + 2);
    }
}

/// Event-driven evolution up to time `time`.
pub fn simulate_png<T: Real>(m: &NucleationSet<T>, time: T) -> Result<PngState<T>, PngError> {
    if !(time >= T::zero() && time <= T::one()) {
        return Err(PngError::Time(time.as_f64()));
    }
    // Edges ordered by current position; motion never reorders them.
    let mut edges: Vec<Edge<T>> = Vec::new();
    for &(s, x) in m.points.iter().take_while(|p| p.0 <= time) {
        collide_until(&mut edges, s);
        let k = edges.partition_point(|e| e.at(s) < x);
        edges.splice(k..k, [Edge::Kink(x + s), Edge::Anti(x - s)]);
    }
    collide_until(&mut edges, time);
    let mut state = PngState { time, kinks: Vec::new(), antikinks: Vec::new() };
    for e in edges {
        match e {
            Edge::Kink(_) => state.kinks.push(e.at(time)),
            Edge::Anti(_) => state.antikinks.push(e.at(time)),
        }
    }
    Ok(state)
}

/// Step `j >= 1` with `(j - 1) / 2n < s <= j / 2n`.
pub fn step_index<T: Real>(s: T, n: usize) -> usize {
    let two_n = 2.0 * n as f64;
    let s = s.as_f64();
    let mut j = ((two_n * s).ceil() as usize).max(1);
    if j > 1 && (j - 1) as f64 / two_n >= s {
        j -= 1;
    }
    if (j as f64) / two_n < s {
        j += 1;
    }
    j
}

/// Moves every time up to the next multiple of `1/2n` and groups the
/// positions by step, giving `2n` sorted nucleation lists.
pub fn discretize<T: Real>(m: &NucleationSet<T>, n: usize) -> Result<Vec<Vec<T>>, PngError> {
    if n == 0 {
        return Err(PngError::Size);
    }
    let mut steps = vec![Vec::new(); 2 * n];
    for &(s, x) in &m.points {
        steps[step_index(s, n) - 1].push(x);
    }
    for s in &mut steps {
        s.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    }
    Ok(steps)
}

/// Growth-model noise with `v = 1/n` whose nucleations are the discretized
/// PNG points; variates are drawn from `seed`.
pub fn coupled_noise<T: Real>(m: &NucleationSet<T>, n: usize, seed: Seed) -> Result<NoiseStream<T>, PngError> {
    let params = ModelParams::new(1.0 / n as f64, n, m.half_width.as_f64())?;
    Ok(NoiseStream::from_nucleations(params, seed, discretize(m, n)?)?)
}

/// Distance between two integer laws estimated from samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub samples: u64,
    pub tv: f64,
    pub tv_ci: (f64, f64),
    /// RMS of TV between two same-law samples of this size.
    pub null_tv: f64,
    pub ks: f64,
    pub chi2_p: f64,
    /// Fraction of coupled samples whose two values differ (an upper bound on TV);
    /// `None` when the two sides are not coupled.
    pub mismatch: Option<f64>,
    pub mean_model: f64,
    pub mean_png: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub samples: u64,
    pub half_width: f64,
    pub bootstrap: u64,
    pub seed: Seed,
}

fn row(n: usize, model: &EmpiricalDist, png: &EmpiricalDist, mismatch: Option<f64>, cfg: &ExperimentConfig) -> Result<ConvergenceRow, PngError> {
    let boot = cfg.seed.replica(1_000_000 + n as u64);
    Ok(ConvergenceRow {
        n,
        samples: cfg.samples,
        tv: tv_distance(model, png)?,
        tv_ci: bootstrap_tv_ci(model, png, cfg.bootstrap, 0.95, boot)?,
        null_tv: bootstrap_null_tv(model, png, cfg.bootstrap, boot.replica(1))?,
        ks: ks_statistic(model, png)?,
        chi2_p: chi2_two_sample(model, png)?.p_value,
        mismatch,
        mean_model: model.moments().mean(),
        mean_png: png.moments().mean(),
    })
}

/// `h_{2n}(0)` of the growth model with `v = 1/n`, driven by the discretized
/// PNG points, against `h^PNG_1(0)` from the same points.
pub fn convergence_experiment(n_list: &[usize], cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>, PngError> {
    let a = cfg.half_width;
    let png: Vec<i64> = (0..cfg.samples)
        .into_par_iter()
        .map(|r| {
            let m = NucleationSet::<f64>::sample(a, cfg.seed.replica(r));
            simulate_png(&m, 1.0).map(|s| s.height(0.0))
        })
        .collect::<Result<_, _>>()?;
    let png_dist: EmpiricalDist = png.iter().copied().collect();
    n_list
        .iter()
        .map(|&n| {
            let model: Vec<i64> = (0..cfg.samples)
                .into_par_iter()
                .map(|r| {
                    let seed = cfg.seed.replica(r);
                    let m = NucleationSet::<f64>::sample(a, seed);
                    let traj = growth::simulate_noise(&coupled_noise(&m, n, seed)?)?;
                    Ok(traj.profile(2 * n).height_at(0.0) as i64)
                })
                .collect::<Result<_, PngError>>()?;
            let differ = model.iter().zip(&png).filter(|(x, y)| x != y).count();
            let model_dist: EmpiricalDist = model.into_iter().collect();
            row(n, &model_dist, &png_dist, Some(differ as f64 / cfg.samples as f64), cfg)
        })
        .collect()
}

/// Top-row entry `X_{1, 2n+1-floor(2nt)}` of a stationary array with
/// `v = 1/n` against `h^PNG_t(-t)`.
pub fn top_row_experiment(n_list: &[usize], t: f64, cfg: &ExperimentConfig) -> Result<Vec<ConvergenceRow>, PngError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(PngError::Time(t));
    }
    let png: EmpiricalDist = (0..cfg.samples)
        .into_par_iter()
        .map(|r| {
            let m = NucleationSet::<f64>::sample(cfg.half_width, cfg.seed.replica(r));
            simulate_png(&m, t).map(|s| s.height(-t))
        })
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .collect();
    n_list
        .iter()
        .map(|&n| {
            let params = ModelParams::new(1.0 / n as f64, n, 1.0)?;
            let j = 2 * n + 1 - ((2.0 * n as f64 * t).floor() as usize).clamp(1, 2 * n);
            let model: EmpiricalDist = (0..cfg.samples)
                .into_par_iter()
                .map(|r| {
                    let seed = cfg.seed.replica(r).replica(n as u64);
                    sample_env(&params, seed).map(|env| lpp_table(&env).get(1, j) as i64)
                })
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .collect();
            row(n, &model, &png, None, cfg)
        })
        .collect()
}
