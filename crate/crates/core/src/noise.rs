//! The shared noise: per-step nucleation points and exponential variates.
//!
//! Nucleations for step `t` are generated cell by cell on the unit cells
//! `[k, k+1)`, each from its own substream, and then restricted to the
//! window `[-L, L]`. Enlarging `L` therefore only adds points outside the
//! old window.
//!
//! Variates are addressed by a signed [`ClockIndex`]. In a sweep, every
//! pending point of decrease owns exactly one clock. Pending points at
//! sweep-frame positions `>= 0` take indices `1, 2, ...` in sweep order;
//! those at negative positions take `-1, -2, ...` moving away from the
//! origin. Both representations derive indices from the pre-step state, so
//! they read the same variate for the same logical clock, and indices near
//! the origin do not move when the window grows.

use serde::{Deserialize, Serialize};

use crate::error::NoiseError;
use crate::params::ModelParams;
use crate::rng::{zigzag, Purpose, Seed};
use crate::scalar::Real;

pub type ClockIndex = i64;

/// Clock indices for pending decreases at the given sorted sweep-frame
/// positions.
pub fn clock_indices<T: Real>(sorted: &[T]) -> Vec<ClockIndex> {
    let negatives = sorted.partition_point(|&p| p < T::zero()) as i64;
    (0..sorted.len() as i64)
        .map(|i| if i < negatives { i - negatives } else { i - negatives + 1 })
        .collect()
}

/// Number of clocks consumed on each side of the origin during one step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockUsage {
    pub backward: u64,
    pub forward: u64,
}

impl ClockUsage {
    pub fn of_indices(indices: &[ClockIndex]) -> Self {
        let backward = indices.iter().filter(|&&j| j < 0).count() as u64;
        Self { backward, forward: indices.len() as u64 - backward }
    }

    pub fn total(&self) -> u64 {
        self.backward + self.forward
    }
}

/// Source of the exponential variates of one step.
pub trait VariateSource<T> {
    fn variate(&self, index: ClockIndex) -> Result<T, NoiseError>;
}

#[derive(Clone, Debug, PartialEq)]
pub enum Variates<T: Real> {
    /// Unbounded: variate `j` is computed on demand from its substream.
    Seeded { seed: Seed, step: usize, mean: f64 },
    /// Finite lists, e.g. replayed from a file. `backward[0]` is index `-1`,
    /// `forward[0]` is index `1`.
    Explicit { backward: Vec<T>, forward: Vec<T> },
}

impl<T: Real> Variates<T> {
    /// Explicit supply indexed `1, 2, ...` only.
    pub fn forward(values: Vec<T>) -> Self {
        Variates::Explicit { backward: Vec::new(), forward: values }
    }
}

impl<T: Real> VariateSource<T> for Variates<T> {
    fn variate(&self, index: ClockIndex) -> Result<T, NoiseError> {
        assert_ne!(index, 0, "clock indices are nonzero");
        match self {
            Variates::Seeded { seed, step, mean } => {
                let purpose =
                    if index > 0 { Purpose::VariateForward } else { Purpose::VariateBackward };
                let mut s = seed.substream(purpose, *step as u64, 0);
                s.seek(index.unsigned_abs() - 1);
                Ok(T::of(s.exponential(*mean)))
            }
            Variates::Explicit { backward, forward } => {
                let list = if index > 0 { forward } else { backward };
                list.get(index.unsigned_abs() as usize - 1)
                    .copied()
                    .ok_or(NoiseError::Exhausted(index))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepNoise<T: Real> {
    pub step: usize,
    pub nucleations: Vec<T>,
    pub variates: Variates<T>,
}

impl<T: Real> StepNoise<T> {
    /// Step noise with explicit nucleations and forward-indexed variates.
    pub fn explicit(step: usize, nucleations: Vec<T>, variates: Vec<T>) -> Self {
        Self { step, nucleations, variates: Variates::forward(variates) }
    }

    pub fn check_window(&self, half_width: f64) -> Result<(), NoiseError> {
        if self.nucleations.windows(2).any(|w| w[0] > w[1]) {
            return Err(NoiseError::Unsorted(self.step));
        }
        match self.nucleations.iter().find(|p| p.as_f64().abs() > half_width) {
            Some(p) => Err(NoiseError::OutsideWindow { position: p.as_f64(), half_width }),
            None => Ok(()),
        }
    }
}

/// Noise for steps `1..=steps`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseStream<T: Real> {
    params: ModelParams,
    seed: Option<Seed>,
    steps: Vec<StepNoise<T>>,
}

impl<T: Real> NoiseStream<T> {
    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn seed(&self) -> Option<Seed> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Noise of step `t` (1-based).
    pub fn step(&self, t: usize) -> Result<&StepNoise<T>, NoiseError> {
        t.checked_sub(1)
            .and_then(|i| self.steps.get(i))
            .ok_or(NoiseError::MissingStep { requested: t, available: self.steps.len() })
    }

    pub fn steps(&self) -> &[StepNoise<T>] {
        &self.steps
    }

    /// Seeded variates with explicitly supplied nucleations, one list per
    /// step. Used by the discretized PNG coupling.
    pub fn from_nucleations(
        params: ModelParams,
        seed: Seed,
        nucleations: Vec<Vec<T>>,
    ) -> Result<Self, NoiseError> {
        let steps = nucleations
            .into_iter()
            .enumerate()
            .map(|(i, nucleations)| StepNoise {
                step: i + 1,
                nucleations,
                variates: Variates::Seeded { seed, step: i + 1, mean: params.v() },
            })
            .collect();
        Self::from_steps(params.with_steps(0), Some(seed), steps)
    }

    /// Fully explicit noise, validated against the window.
    pub fn from_steps(
        params: ModelParams,
        seed: Option<Seed>,
        steps: Vec<StepNoise<T>>,
    ) -> Result<Self, NoiseError> {
        for (i, s) in steps.iter().enumerate() {
            if s.step != i + 1 {
                return Err(NoiseError::MissingStep { requested: i + 1, available: steps.len() });
            }
            s.check_window(params.half_width())?;
            if let Variates::Explicit { backward, forward } = &s.variates {
                if let Some(bad) = backward.iter().chain(forward).find(|z| z.as_f64().partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
                    return Err(NoiseError::NonPositive(bad.as_f64()));
                }
            }
        }
        let params = params.with_steps(steps.len());
        Ok(Self { params, seed, steps })
    }

    /// Serializable record of the noise actually read during a run.
    pub fn records(&self, usage: &[ClockUsage]) -> Result<Vec<NoiseRecord>, NoiseError> {
        self.steps
            .iter()
            .zip(usage)
            .map(|(s, u)| {
                let mut variates = Vec::with_capacity(u.total() as usize);
                for j in (1..=u.backward as i64).rev() {
                    variates.push(s.variates.variate(-j)?.as_f64());
                }
                for j in 1..=u.forward as i64 {
                    variates.push(s.variates.variate(j)?.as_f64());
                }
                Ok(NoiseRecord {
                    step: s.step,
                    nucleations: s.nucleations.iter().map(|p| p.as_f64()).collect(),
                    variates_consumed: variates,
                    first_index: if u.backward > 0 { -(u.backward as i64) } else { 1 },
                })
            })
            .collect()
    }

    /// Rebuilds an explicit stream from records; replaying it reproduces
    /// the run that produced them.
    pub fn from_records(params: ModelParams, seed: Option<Seed>, records: &[NoiseRecord]) -> Result<Self, NoiseError> {
        let steps = records
            .iter()
            .map(|r| {
                let backward_len = if r.first_index < 0 { r.first_index.unsigned_abs() as usize } else { 0 };
                let backward_len = backward_len.min(r.variates_consumed.len());
                let (back, fwd) = r.variates_consumed.split_at(backward_len);
                StepNoise {
                    step: r.step,
                    nucleations: r.nucleations.iter().map(|&p| T::of(p)).collect(),
                    variates: Variates::Explicit {
                        backward: back.iter().rev().map(|&z| T::of(z)).collect(),
                        forward: fwd.iter().map(|&z| T::of(z)).collect(),
                    },
                }
            })
            .collect();
        Self::from_steps(params, seed, steps)
    }
}

/// One step of a serialized noise stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseRecord {
    pub step: usize,
    pub nucleations: Vec<f64>,
    /// Variates in index order, starting at `first_index` (skipping 0).
    pub variates_consumed: Vec<f64>,
    pub first_index: i64,
}

/// Poisson points of rate `rate` per unit length in `[-half_width, half_width]`,
/// nested in the window size.
pub fn window_points(seed: Seed, purpose: Purpose, major: u64, rate: f64, half_width: f64) -> Vec<f64> {
    let lo = (-half_width).floor() as i64;
    let hi = half_width.ceil() as i64;
    let mut points = Vec::new();
    for cell in lo..hi {
        let mut s = seed.substream(purpose, major, zigzag(cell));
        let count = s.poisson(rate);
        for _ in 0..count {
            let x = cell as f64 + s.uniform();
            if x.abs() <= half_width {
                points.push(x);
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points
}

/// Noise for `params.steps()` steps, deterministic in `(params, seed)`.
pub fn make_noise<T: Real>(params: &ModelParams, seed: Seed) -> NoiseStream<T> {
    let steps = (1..=params.steps())
        .map(|t| StepNoise {
            step: t,
            nucleations: window_points(seed, Purpose::Nucleation, t as u64, params.v(), params.half_width())
                .into_iter()
                .map(T::of)
                .collect(),
            variates: Variates::Seeded { seed, step: t, mean: params.v() },
        })
        .collect();
    NoiseStream { params: *params, seed: Some(seed), steps }
}
