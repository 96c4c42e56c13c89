//! Point-to-line last passage percolation in a geometric environment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ParamError;
use crate::params::{check_geometric, ModelParams};
use crate::rng::{Purpose, Seed};
use crate::staircase::{Cell, Staircase};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LppError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("cell ({0}, {1}) is outside the staircase")]
    Outside(usize, usize),
    #[error("expected {expected} weights, got {got}")]
    Length { expected: usize, got: usize },
}

/// `P(g = k) = (1 - v^2) v^(2k)`.
pub fn geometric_pmf(v: f64, k: u64) -> Result<f64, ParamError> {
    check_geometric(v)?;
    let r = v * v;
    Ok((1.0 - r) * libm::pow(r, k as f64))
}

/// Independent geometric weights on the staircase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometricEnv {
    stair: Staircase,
    weights: Vec<u64>,
}

impl GeometricEnv {
    /// Weights in row-major staircase order.
    pub fn new(n: usize, weights: Vec<u64>) -> Result<Self, LppError> {
        let stair = Staircase::new(n);
        if weights.len() != stair.len() {
            return Err(LppError::Length { expected: stair.len(), got: weights.len() });
        }
        Ok(Self { stair, weights })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> u64) -> Self {
        let stair = Staircase::new(n);
        let weights = stair.cells().map(|(i, j)| f(i, j)).collect();
        Self { stair, weights }
    }

    pub fn sample(n: usize, v: f64, seed: Seed) -> Result<Self, ParamError> {
        check_geometric(v)?;
        let mut s = seed.substream(Purpose::Environment, n as u64, 0);
        Ok(Self::from_fn(n, |_, _| s.geometric(v * v)))
    }

    pub fn staircase(&self) -> Staircase {
        self.stair
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.weights[self.stair.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, g: u64) {
        let k = self.stair.index(i, j);
        self.weights[k] = g;
    }

    pub fn weights(&self) -> &[u64] {
        &self.weights
    }
}

pub fn sample_env(params: &ModelParams, seed: Seed) -> Result<GeometricEnv, ParamError> {
    GeometricEnv::sample(params.n(), params.v(), seed)
}

/// `G(k, l)` for every cell of the staircase.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LppTable {
    stair: Staircase,
    values: Vec<u64>,
}

impl LppTable {
    pub fn staircase(&self) -> Staircase {
        self.stair
    }

    pub fn get(&self, k: usize, l: usize) -> u64 {
        self.values[self.stair.index(k, l)]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<u64> {
        self.values
    }

    /// `(G(n+1, n), G(n, n), G(n, n-1), ..., G(1, 1))`.
    pub fn level_vector(&self) -> Vec<u64> {
        self.stair.level_cells().into_iter().map(|(i, j)| self.get(i, j)).collect()
    }
}

/// Max-plus recursion `G(k, l) = g(k, l) + max(G(k+1, l), G(k, l+1))`,
/// missing successors counting as minus infinity.
pub fn lpp_table(env: &GeometricEnv) -> LppTable {
    let stair = env.staircase();
    let mut values = vec![0u64; stair.len()];
    for i in (1..=stair.rows()).rev() {
        for j in (1..=stair.row_len(i)).rev() {
            let down = stair.contains(i + 1, j).then(|| values[stair.index(i + 1, j)]);
            let right = stair.contains(i, j + 1).then(|| values[stair.index(i, j + 1)]);
            let best = match (down, right) {
                (Some(a), Some(b)) => a.max(b),
                (Some(a), None) | (None, Some(a)) => a,
                (None, None) => 0,
            };
            values[stair.index(i, j)] = env.get(i, j) + best;
        }
    }
    LppTable { stair, values }
}

/// Calls `visit` with the cells of every up-right path from `(k, l)` to
/// the anti-diagonal.
pub fn for_each_path(
    stair: Staircase,
    k: usize,
    l: usize,
    visit: &mut dyn FnMut(&[Cell]),
) -> Result<(), LppError> {
    fn walk(stair: Staircase, path: &mut Vec<Cell>, visit: &mut dyn FnMut(&[Cell])) {
        let (i, j) = *path.last().expect("nonempty path");
        if i + j == stair.diagonal_sum() {
            visit(path);
            return;
        }
        for next in [(i + 1, j), (i, j + 1)] {
            path.push(next);
            walk(stair, path, visit);
            path.pop();
        }
    }
    if !stair.contains(k, l) {
        return Err(LppError::Outside(k, l));
    }
    walk(stair, &mut vec![(k, l)], visit);
    Ok(())
}

/// Exhaustive maximum over all paths; exponential time.
pub fn lpp_bruteforce(env: &GeometricEnv, k: usize, l: usize) -> Result<u64, LppError> {
    let mut best = 0;
    for_each_path(env.staircase(), k, l, &mut |path| {
        best = best.max(path.iter().map(|&(i, j)| env.get(i, j)).sum());
    })?;
    Ok(best)
}

/// Samples an environment and returns its level vector.
pub fn sample_g_vector(params: &ModelParams, seed: Seed) -> Result<Vec<u64>, ParamError> {
    Ok(lpp_table(&sample_env(params, seed)?).level_vector())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn pmf_values() {
        assert_relative_eq!(geometric_pmf(0.5, 0).unwrap(), 0.75);
        assert_relative_eq!(geometric_pmf(0.5, 1).unwrap(), 0.1875);
        let head: f64 = (0..=200).map(|k| geometric_pmf(0.5, k).unwrap()).sum();
        assert_relative_eq!(head, 1.0, epsilon = 1e-15);
        assert!(geometric_pmf(0.5, 201).unwrap() < 1e-120);
        assert!(geometric_pmf(1.0, 0).is_err());
        assert!(geometric_pmf(0.0, 0).is_err());
    }

    #[test]
    fn env_shape() {
        let e = GeometricEnv::sample(1, 0.5, Seed::new(1)).unwrap();
        assert_eq!(e.staircase().cells().collect::<Vec<_>>(), vec![(1, 1), (1, 2), (2, 1)]);
        assert_eq!(GeometricEnv::sample(2, 0.5, Seed::new(1)).unwrap().weights().len(), 10);
        assert!(matches!(GeometricEnv::new(1, vec![0; 4]), Err(LppError::Length { .. })));
    }

    #[test]
    fn env_mean() {
        let mut total = 0u64;
        let mut count = 0u64;
        for r in 0..20_000 {
            let e = GeometricEnv::sample(7, 0.5, Seed::new(2).replica(r)).unwrap();
            total += e.weights().iter().sum::<u64>();
            count += e.weights().len() as u64;
        }
        assert!(count >= 1_000_000);
        let mean = total as f64 / count as f64;
        assert!((mean - 1.0 / 3.0).abs() < 0.002, "{mean}");
    }

    #[test]
    fn table_small_cases() {
        let zero = GeometricEnv::new(2, vec![0; 10]).unwrap();
        assert!(lpp_table(&zero).values().iter().all(|&g| g == 0));

        let one = GeometricEnv::new(1, vec![1, 0, 0]).unwrap();
        let t = lpp_table(&one);
        assert_eq!((t.get(1, 2), t.get(2, 1), t.get(1, 1)), (0, 0, 1));

        let e = GeometricEnv::new(1, vec![2, 3, 5]).unwrap();
        assert_eq!(lpp_table(&e).get(1, 1), 7);
        assert_eq!(lpp_bruteforce(&e, 1, 1).unwrap(), 7);
    }

    #[test]
    fn constant_weights() {
        let e = GeometricEnv::new(1, vec![4, 4, 4]).unwrap();
        assert_eq!(lpp_bruteforce(&e, 1, 1).unwrap(), 8);
    }

    #[test]
    fn path_counts() {
        for n in 1..=4 {
            let mut count = 0u64;
            for_each_path(Staircase::new(n), 1, 1, &mut |p| {
                assert_eq!(p.len(), 2 * n);
                count += 1;
            })
            .unwrap();
            assert_eq!(count, 1 << (2 * n - 1));
        }
        assert_eq!(
            for_each_path(Staircase::new(2), 3, 3, &mut |_| {}),
            Err(LppError::Outside(3, 3))
        );
    }

    #[test]
    fn dp_matches_bruteforce_random() {
        for n in 1..=3 {
            for r in 0..200 {
                let e = GeometricEnv::sample(n, 0.6, Seed::new(40).replica(r)).unwrap();
                let t = lpp_table(&e);
                for (i, j) in e.staircase().cells() {
                    assert_eq!(t.get(i, j), lpp_bruteforce(&e, i, j).unwrap());
                }
            }
        }
    }

    #[test]
    fn level_vector_increasing() {
        for r in 0..500 {
            let p = ModelParams::new(0.7, 3, 1.0).unwrap();
            let g = sample_g_vector(&p, Seed::new(6).replica(r)).unwrap();
            assert_eq!(g.len(), 6);
            assert!(g.windows(2).all(|w| w[0] <= w[1]), "{g:?}");
        }
    }

    fn arb_env(n: usize) -> impl Strategy<Value = GeometricEnv> {
        prop::collection::vec(0u64..6, Staircase::new(n).len())
            .prop_map(move |w| GeometricEnv::new(n, w).unwrap())
    }

    proptest! {
        #[test]
        fn monotone_table(env in (1usize..=4).prop_flat_map(arb_env)) {
            let t = lpp_table(&env);
            let s = env.staircase();
            for (i, j) in s.cells() {
                let succ = [(i + 1, j), (i, j + 1)]
                    .into_iter()
                    .filter(|&(a, b)| s.contains(a, b))
                    .map(|(a, b)| t.get(a, b))
                    .max();
                prop_assert_eq!(t.get(i, j) - succ.unwrap_or(0), env.get(i, j));
            }
        }

        #[test]
        fn unit_increase_moves_by_zero_or_one(
            env in (1usize..=2).prop_flat_map(arb_env),
            pick in any::<prop::sample::Index>(),
        ) {
            let s = env.staircase();
            let cells: Vec<_> = s.cells().collect();
            let (a, b) = cells[pick.index(cells.len())];
            let mut raised = env.clone();
            raised.set(a, b, env.get(a, b) + 1);
            for &(i, j) in &cells {
                let before = lpp_bruteforce(&env, i, j).unwrap();
                let after = lpp_bruteforce(&raised, i, j).unwrap();
                prop_assert!(after == before || after == before + 1);
            }
        }
    }
}
