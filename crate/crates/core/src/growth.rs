//! Height-function dynamics.
//!
//! Given `h_{t-1}`, the profile `h_t` is the path of a walk `xi(u)` run in
//! the space variable: it jumps up at the nucleation points of step `t`,
//! jumps down at rate `1/v` while it sits above the floor `h_{t-1}`, and is
//! pushed up at the floor's points of increase when it touches the floor.
//! Odd steps run `u` left to right; even steps run the same sweep on the
//! reflected profile and reflect the result back.
//!
//! The sweep is event driven. Every unit of excess `xi - h_{t-1}` is a
//! pending point of decrease; pending points are served first in, first out
//! by a single down-clock. A clock starts at the current sweep position
//! when the walk first rises above the floor, after a down-jump, or after
//! the floor catches up with the walk (which cancels the oldest pending
//! point); the `k`-th clock reads the variate of the `k`-th pending point.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{NoiseError, ParamError};
use crate::noise::{clock_indices, make_noise, ClockUsage, NoiseStream, VariateSource};
use crate::params::ModelParams;
use crate::profile::HeightProfile;
use crate::rng::Seed;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrowthError {
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("time steps start at 1")]
    ZeroStep,
    #[error("trajectory has {have} steps, {need} required")]
    TooShort { have: usize, need: usize },
    #[error("observation window {window} must be smaller than the initial half-width {half_width}")]
    Window { window: f64, half_width: f64 },
    #[error("no stabilization on [-{window}, {window}] after {doublings} doublings (last L = {half_width})")]
    NotStabilized { window: f64, doublings: usize, half_width: f64 },
}

/// Profiles `h_0 = 0, h_1, ..., h_steps` and the clocks each step consumed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GrowthTrajectory<T: Real> {
    profiles: Vec<HeightProfile<T>>,
    usage: Vec<ClockUsage>,
}

impl<T: Real> GrowthTrajectory<T> {
    pub fn from_profiles(profiles: Vec<HeightProfile<T>>, usage: Vec<ClockUsage>) -> Self {
        Self { profiles, usage }
    }

    pub fn profiles(&self) -> &[HeightProfile<T>] {
        &self.profiles
    }

    pub fn profile(&self, t: usize) -> &HeightProfile<T> {
        &self.profiles[t]
    }

    pub fn usage(&self) -> &[ClockUsage] {
        &self.usage
    }

    pub fn steps(&self) -> usize {
        self.profiles.len() - 1
    }

    /// `(h_1(x), ..., h_levels(x))`.
    pub fn read_vector(&self, x: T, levels: usize) -> Result<Vec<u64>, GrowthError> {
        if self.steps() < levels {
            return Err(GrowthError::TooShort { have: self.steps(), need: levels });
        }
        Ok(self.profiles[1..=levels].iter().map(|h| h.height_at(x)).collect())
    }

    /// Agreement of every profile on `[-window, window]`.
    pub fn agrees_on(&self, other: &Self, window: T) -> bool {
        self.profiles.len() == other.profiles.len()
            && self
                .profiles
                .iter()
                .zip(&other.profiles)
                .all(|(a, b)| a.restrict(-window, window) == b.restrict(-window, window))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    // Order at equal positions: the floor rises, then pending decreases
    // arrive (floor first, nucleations last).
    FloorUp,
    FloorDown,
    Nucleation,
}

/// One left-to-right sweep above `floor`.
fn sweep<T: Real, V: VariateSource<T> + ?Sized>(
    floor: &HeightProfile<T>,
    nucleations: &[T],
    variates: &V,
) -> Result<(HeightProfile<T>, ClockUsage), NoiseError> {
    let mut events: Vec<(T, Event)> = floor
        .inc()
        .iter()
        .map(|&p| (p, Event::FloorUp))
        .chain(floor.dec().iter().map(|&p| (p, Event::FloorDown)))
        .chain(nucleations.iter().map(|&p| (p, Event::Nucleation)))
        .collect();
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite positions").then(a.1.cmp(&b.1)));

    let pending_positions: Vec<T> =
        events.iter().filter(|e| e.1 != Event::FloorUp).map(|e| e.0).collect();
    let indices = clock_indices(&pending_positions);
    let mut arrivals = indices.iter().copied();

    let mut inc = Vec::with_capacity(floor.len() + nucleations.len());
    let mut dec = Vec::with_capacity(floor.len() + nucleations.len());
    let mut queue = VecDeque::new();
    let mut expiry: Option<T> = None;

    // Serves the head of the queue from `start`, if any.
    let restart = |queue: &VecDeque<i64>, start: T| -> Result<Option<T>, NoiseError> {
        queue.front().map(|&j| Ok(start + variates.variate(j)?)).transpose()
    };

    for &(u, kind) in &events {
        while let Some(q) = expiry.filter(|&q| q < u) {
            dec.push(q);
            queue.pop_front();
            expiry = restart(&queue, q)?;
        }
        match kind {
            Event::FloorUp => {
                if queue.is_empty() {
                    // Pushed along with the floor.
                    inc.push(u);
                } else {
                    // The floor meets the walk: the floor's step and the oldest
                    // pending decrease cancel.
                    queue.pop_front();
                    expiry = restart(&queue, u)?;
                }
            }
            Event::FloorDown | Event::Nucleation => {
                if kind == Event::Nucleation {
                    inc.push(u);
                }
                queue.push_back(arrivals.next().expect("one clock per pending decrease"));
                if queue.len() == 1 {
                    expiry = restart(&queue, u)?;
                }
            }
        }
    }
    while let Some(q) = expiry {
        dec.push(q);
        queue.pop_front();
        expiry = restart(&queue, q)?;
    }
    debug_assert!(queue.is_empty());
    Ok((HeightProfile::from_parts(inc, dec), ClockUsage::of_indices(&indices)))
}

/// Step `t` from `h_prev` with the given nucleations and variates.
pub fn step_with<T: Real, V: VariateSource<T> + ?Sized>(
    h_prev: &HeightProfile<T>,
    t: usize,
    nucleations: &[T],
    variates: &V,
) -> Result<(HeightProfile<T>, ClockUsage), GrowthError> {
    match t {
        0 => Err(GrowthError::ZeroStep),
        t if t % 2 == 1 => Ok(sweep(h_prev, nucleations, variates)?),
        _ => {
            let reflected: Vec<T> = nucleations.iter().rev().map(|&x| -x).collect();
            let (h, usage) = sweep(&h_prev.reflect(), &reflected, variates)?;
            Ok((h.reflect(), usage))
        }
    }
}

/// Step `t` driven by the matching step of `noise`.
pub fn step<T: Real>(
    h_prev: &HeightProfile<T>,
    t: usize,
    params: &ModelParams,
    noise: &NoiseStream<T>,
) -> Result<(HeightProfile<T>, ClockUsage), GrowthError> {
    if t == 0 {
        return Err(GrowthError::ZeroStep);
    }
    let s = noise.step(t)?;
    s.check_window(params.half_width())?;
    step_with(h_prev, t, &s.nucleations, &s.variates)
}

pub fn simulate_noise<T: Real>(noise: &NoiseStream<T>) -> Result<GrowthTrajectory<T>, GrowthError> {
    let params = *noise.params();
    let mut profiles = vec![HeightProfile::flat()];
    let mut usage = Vec::with_capacity(noise.len());
    for t in 1..=noise.len() {
        let (h, u) = step(profiles.last().expect("h_0"), t, &params, noise)?;
        profiles.push(h);
        usage.push(u);
    }
    Ok(GrowthTrajectory { profiles, usage })
}

pub fn simulate<T: Real>(params: &ModelParams, seed: Seed) -> Result<GrowthTrajectory<T>, GrowthError> {
    simulate_noise(&make_noise::<T>(params, seed))
}

/// Result of [`stabilize_half_width`].
#[derive(Clone, Debug, PartialEq)]
pub struct Stabilized<T: Real> {
    pub half_width: f64,
    pub doublings: usize,
    pub trajectory: GrowthTrajectory<T>,
}

/// Doubles `L` until the trajectory on `[-window, window]` no longer
/// changes between `L` and `2L` for this seed.
///
/// This is a pathwise diagnostic for one realization of the nested noise,
/// not a convergence proof.
pub fn stabilize_half_width<T: Real>(
    params: &ModelParams,
    seed: Seed,
    window: f64,
    max_doublings: usize,
) -> Result<Stabilized<T>, GrowthError> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail too
    if !(window < params.half_width()) {
        return Err(GrowthError::Window { window, half_width: params.half_width() });
    }
    let w = T::of(window);
    let mut half_width = params.half_width();
    let mut current = simulate::<T>(params, seed)?;
    for doublings in 0..=max_doublings {
        let wider = params.with_half_width(2.0 * half_width)?;
        let next = simulate::<T>(&wider, seed)?;
        if current.agrees_on(&next, w) {
            return Ok(Stabilized { half_width, doublings, trajectory: current });
        }
        half_width *= 2.0;
        current = next;
    }
    Err(GrowthError::NotStabilized { window, doublings: max_doublings, half_width })
}
