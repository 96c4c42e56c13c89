//! Two-species particle representation.
//!
//! `y` holds the points of increase and `z` the points of decrease. At odd
//! steps the `z` particles jump right one after another from the left; at
//! even steps the `y` particles jump left one after another from the right.
//! A jumping particle is first pushed to where its predecessor ended (its
//! landing point, or the point where it annihilated), then jumps by its
//! variate, and annihilates with the first particle of the other species in
//! its way if it reaches it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{NoiseError, ProfileError};
use crate::growth::GrowthTrajectory;
use crate::noise::{clock_indices, make_noise, ClockUsage, NoiseStream, VariateSource};
use crate::params::ModelParams;
use crate::profile::HeightProfile;
use crate::rng::Seed;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParticleError {
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error("malformed configuration: {0}")]
    Config(#[from] ProfileError),
    #[error("time steps start at 1")]
    ZeroStep,
}

/// Positions of increase (`y`) and decrease (`z`) particles, each with a
/// pair label: the two particles created by one nucleation share a label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParticleConfig<T: Real> {
    y: Vec<T>,
    z: Vec<T>,
    y_ids: Vec<u64>,
    z_ids: Vec<u64>,
    next_id: u64,
}

impl<T: Real> Default for ParticleConfig<T> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<T: Real> ParticleConfig<T> {
    pub fn empty() -> Self {
        Self { y: Vec::new(), z: Vec::new(), y_ids: Vec::new(), z_ids: Vec::new(), next_id: 0 }
    }

    /// Validated configuration; the `j`-th particles of each species get label `j`.
    pub fn new(y: Vec<T>, z: Vec<T>) -> Result<Self, ProfileError> {
        HeightProfile::new(y.clone(), z.clone())?;
        let m = y.len() as u64;
        Ok(Self { y, z, y_ids: (0..m).collect(), z_ids: (0..m).collect(), next_id: m })
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn z(&self) -> &[T] {
        &self.z
    }

    pub fn y_ids(&self) -> &[u64] {
        &self.y_ids
    }

    pub fn z_ids(&self) -> &[u64] {
        &self.z_ids
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        HeightProfile::new(self.y.clone(), self.z.clone()).map(|_| ())
    }
}

/// Height profile whose jump points are the particles: `h(x)` counts the
/// particle paths crossed between `(t, x)` and `(0, x)`.
pub fn reconstruct<T: Real>(cfg: &ParticleConfig<T>) -> HeightProfile<T> {
    HeightProfile::from_parts(cfg.y.clone(), cfg.z.clone())
}

/// Outcome of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Evolution<T: Real> {
    pub config: ParticleConfig<T>,
    pub usage: ClockUsage,
    pub created: usize,
    pub annihilated: usize,
}

fn merge_labelled<T: Real>(a: &[(T, u64)], b: &[(T, u64)], a_first_on_ties: bool) -> Vec<(T, u64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let take_a = if a_first_on_ties { a[i].0 <= b[j].0 } else { a[i].0 < b[j].0 };
        if take_a {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn labelled<T: Real>(pos: &[T], ids: &[u64]) -> Vec<(T, u64)> {
    pos.iter().copied().zip(ids.iter().copied()).collect()
}

fn unzip<T: Real>(v: Vec<(T, u64)>) -> (Vec<T>, Vec<u64>) {
    v.into_iter().unzip()
}

fn check_nucleations<T: Real>(nucleations: &[T]) -> Result<(), NoiseError> {
    if nucleations.windows(2).any(|w| w[0] > w[1]) {
        return Err(NoiseError::Unsorted(0));
    }
    Ok(())
}

/// Odd step: decrease particles jump right, sequentially from the left.
///
/// A nucleation at `x` adds a decrease particle at `x+` that jumps in this
/// step and an increase particle at `x-` that is only added afterwards.
pub fn evolve_odd<T: Real, V: VariateSource<T> + ?Sized>(
    cfg: &ParticleConfig<T>,
    nucleations: &[T],
    variates: &V,
) -> Result<Evolution<T>, ParticleError> {
    cfg.validate()?;
    check_nucleations(nucleations)?;
    let born: Vec<(T, u64)> =
        nucleations.iter().enumerate().map(|(k, &x)| (x, cfg.next_id + k as u64)).collect();
    let movers = merge_labelled(&labelled(&cfg.z, &cfg.z_ids), &born, true);
    let positions: Vec<T> = movers.iter().map(|m| m.0).collect();
    let indices = clock_indices(&positions);

    let mut ys = labelled(&cfg.y, &cfg.y_ids);
    let mut moved = Vec::with_capacity(movers.len());
    let mut annihilated = 0;
    let mut previous_end: Option<T> = None;
    for (&(z, id), &clock) in movers.iter().zip(&indices) {
        let start = previous_end.map_or(z, |e| z.max(e));
        let target = start + variates.variate(clock)?;
        let k = ys.partition_point(|&(y, _)| y <= z);
        if k < ys.len() && target >= ys[k].0 {
            previous_end = Some(ys.remove(k).0);
            annihilated += 1;
        } else {
            moved.push((target, id));
            previous_end = Some(target);
        }
    }
    let (y, y_ids) = unzip(merge_labelled(&ys, &born, false));
    let (z, z_ids) = unzip(moved);
    let config = ParticleConfig { y, z, y_ids, z_ids, next_id: cfg.next_id + born.len() as u64 };
    debug_assert_eq!(config.validate(), Ok(()));
    Ok(Evolution { config, usage: ClockUsage::of_indices(&indices), created: born.len(), annihilated })
}

/// Even step: increase particles jump left, sequentially from the right.
///
/// A nucleation at `x` adds an increase particle at `x-` that jumps in this
/// step and a decrease particle at `x+` that is only added afterwards.
pub fn evolve_even<T: Real, V: VariateSource<T> + ?Sized>(
    cfg: &ParticleConfig<T>,
    nucleations: &[T],
    variates: &V,
) -> Result<Evolution<T>, ParticleError> {
    cfg.validate()?;
    check_nucleations(nucleations)?;
    let born: Vec<(T, u64)> =
        nucleations.iter().enumerate().map(|(k, &x)| (x, cfg.next_id + k as u64)).collect();
    // Newborn increase particles sit left of anything already at x.
    let movers = merge_labelled(&born, &labelled(&cfg.y, &cfg.y_ids), true);
    let sweep_positions: Vec<T> = movers.iter().rev().map(|m| -m.0).collect();
    let indices = clock_indices(&sweep_positions);

    let mut zs = labelled(&cfg.z, &cfg.z_ids);
    let mut moved = Vec::with_capacity(movers.len());
    let mut annihilated = 0;
    let mut previous_end: Option<T> = None;
    for (&(y, id), &clock) in movers.iter().rev().zip(&indices) {
        let start = previous_end.map_or(y, |e| y.min(e));
        let target = start - variates.variate(clock)?;
        let k = zs.partition_point(|&(z, _)| z < y);
        if k > 0 && target <= zs[k - 1].0 {
            previous_end = Some(zs.remove(k - 1).0);
            annihilated += 1;
        } else {
            moved.push((target, id));
            previous_end = Some(target);
        }
    }
    moved.reverse();
    let (y, y_ids) = unzip(moved);
    let (z, z_ids) = unzip(merge_labelled(&zs, &born, true));
    let config = ParticleConfig { y, z, y_ids, z_ids, next_id: cfg.next_id + born.len() as u64 };
    debug_assert_eq!(config.validate(), Ok(()));
    Ok(Evolution { config, usage: ClockUsage::of_indices(&indices), created: born.len(), annihilated })
}

pub fn evolve<T: Real, V: VariateSource<T> + ?Sized>(
    cfg: &ParticleConfig<T>,
    t: usize,
    nucleations: &[T],
    variates: &V,
) -> Result<Evolution<T>, ParticleError> {
    match t {
        0 => Err(ParticleError::ZeroStep),
        t if t % 2 == 1 => evolve_odd(cfg, nucleations, variates),
        _ => evolve_even(cfg, nucleations, variates),
    }
}

/// Configurations at `t = 0, ..., steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ParticleTrajectory<T: Real> {
    configs: Vec<ParticleConfig<T>>,
    usage: Vec<ClockUsage>,
    created: Vec<usize>,
    annihilated: Vec<usize>,
}

impl<T: Real> ParticleTrajectory<T> {
    pub fn configs(&self) -> &[ParticleConfig<T>] {
        &self.configs
    }

    pub fn usage(&self) -> &[ClockUsage] {
        &self.usage
    }

    pub fn created(&self) -> &[usize] {
        &self.created
    }

    pub fn annihilated(&self) -> &[usize] {
        &self.annihilated
    }

    pub fn to_growth(&self) -> GrowthTrajectory<T> {
        GrowthTrajectory::from_profiles(self.configs.iter().map(reconstruct).collect(), self.usage.clone())
    }
}

pub fn simulate_noise<T: Real>(noise: &NoiseStream<T>) -> Result<ParticleTrajectory<T>, ParticleError> {
    let half_width = noise.params().half_width();
    let mut traj = ParticleTrajectory {
        configs: vec![ParticleConfig::empty()],
        usage: Vec::new(),
        created: Vec::new(),
        annihilated: Vec::new(),
    };
    for t in 1..=noise.len() {
        let s = noise.step(t)?;
        s.check_window(half_width)?;
        let e = evolve(traj.configs.last().expect("initial config"), t, &s.nucleations, &s.variates)?;
        traj.configs.push(e.config);
        traj.usage.push(e.usage);
        traj.created.push(e.created);
        traj.annihilated.push(e.annihilated);
    }
    Ok(traj)
}

pub fn simulate<T: Real>(params: &ModelParams, seed: Seed) -> Result<ParticleTrajectory<T>, ParticleError> {
    simulate_noise(&make_noise::<T>(params, seed))
}
