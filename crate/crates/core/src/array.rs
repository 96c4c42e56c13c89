//! Interlaced staircase array and its continuous-time dynamics.
//!
//! States are nonnegative integers `x[i][j]` on the staircase, weakly
//! decreasing along rows and columns. Each cell carries two clocks: `Up`
//! raises the cell together with the equal cells to its left in the row
//! (pushing), `Down` lowers it together with the equal cells below it in
//! the column. A move whose target breaks the ordering is blocked. Rates
//! are `v` or `1/v` depending on the cell diagonally up and to the right.
//! The law of the last passage table is stationary, and the reversed-time
//! rates are enumerated by [`reversed_transitions`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ParamError;
use crate::lpp::{lpp_table, sample_env, LppTable};
use crate::params::{check_geometric, ModelParams};
use crate::rng::{Purpose, Seed, Substream};
use crate::scalar::Real;
use crate::staircase::Staircase;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("expected {expected} entries, got {got}")]
    Length { expected: usize, got: usize },
    #[error("ordering fails between ({0}, {1}) and its successor")]
    Order(usize, usize),
    #[error("walker positions must be weakly increasing and nonnegative")]
    Walkers,
    #[error("duration must be finite and nonnegative")]
    Duration,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArrayState {
    stair: Staircase,
    x: Vec<u64>,
}

impl ArrayState {
    pub fn zeros(n: usize) -> Self {
        let stair = Staircase::new(n);
        Self { stair, x: vec![0; stair.len()] }
    }

    /// Entries in row-major staircase order.
    pub fn new(n: usize, x: Vec<u64>) -> Result<Self, ArrayError> {
        let stair = Staircase::new(n);
        if x.len() != stair.len() {
            return Err(ArrayError::Length { expected: stair.len(), got: x.len() });
        }
        let s = Self { stair, x };
        s.validate()?;
        Ok(s)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> u64) -> Result<Self, ArrayError> {
        let stair = Staircase::new(n);
        Self::new(n, stair.cells().map(|(i, j)| f(i, j)).collect())
    }

    pub fn from_lpp(table: &LppTable) -> Self {
        let s = Self { stair: table.staircase(), x: table.values().to_vec() };
        debug_assert_eq!(s.validate(), Ok(()));
        s
    }

    pub fn validate(&self) -> Result<(), ArrayError> {
        for (i, j) in self.stair.cells() {
            let x = self.get(i, j);
            let below = self.stair.contains(i + 1, j) && self.get(i + 1, j) > x;
            let right = self.stair.contains(i, j + 1) && self.get(i, j + 1) > x;
            if below || right {
                return Err(ArrayError::Order(i, j));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.stair.n()
    }

    pub fn staircase(&self) -> Staircase {
        self.stair
    }

    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.x[self.stair.index(i, j)]
    }

    /// Entry with the `x[0][j] = x[i][0] = infinity` convention.
    fn get_or_inf(&self, i: usize, j: usize) -> Option<u64> {
        (i >= 1 && j >= 1).then(|| self.get(i, j))
    }

    fn add(&mut self, i: usize, j: usize, delta: i64) {
        let k = self.stair.index(i, j);
        self.x[k] = self.x[k].checked_add_signed(delta).expect("array entry underflow");
    }

    pub fn values(&self) -> &[u64] {
        &self.x
    }

    /// `(x[n+1][n], x[n][n], x[n][n-1], ..., x[1][1])`.
    pub fn level_vector(&self) -> Vec<u64> {
        self.stair.level_cells().into_iter().map(|(i, j)| self.get(i, j)).collect()
    }

    /// Row `i` in increasing order `(x[i][2n+1-i], ..., x[i][1])`.
    pub fn row(&self, i: usize) -> Vec<u64> {
        self.stair.row_cells(i).into_iter().map(|(i, j)| self.get(i, j)).collect()
    }

    pub fn top_row(&self) -> Vec<u64> {
        self.row(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MoveKind {
    /// Forward: raise a row block. Reversed: lower a row block.
    Up,
    /// Forward: lower a column block. Reversed: raise a column block.
    Down,
}

/// A move without its target: `rate = v^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    pub anchor: (usize, usize),
    /// Number of cells in the block.
    pub len: usize,
    pub exponent: i32,
    pub reversed: bool,
}

impl Move {
    pub fn block(&self) -> Vec<(usize, usize)> {
        let (i, j) = self.anchor;
        match (self.kind, self.reversed) {
            (MoveKind::Up, false) => (0..self.len).map(|d| (i, j - d)).collect(),
            (MoveKind::Up, true) => (0..self.len).map(|d| (i, j + d)).collect(),
            (MoveKind::Down, false) => (0..self.len).map(|d| (i + d, j)).collect(),
            (MoveKind::Down, true) => (0..self.len).map(|d| (i - d, j)).collect(),
        }
    }

    fn delta(&self) -> i64 {
        match (self.kind, self.reversed) {
            (MoveKind::Up, false) | (MoveKind::Down, true) => 1,
            (MoveKind::Up, true) | (MoveKind::Down, false) => -1,
        }
    }

    pub fn apply(&self, s: &ArrayState) -> ArrayState {
        let mut t = s.clone();
        self.apply_in_place(&mut t);
        t
    }

    pub fn apply_in_place(&self, s: &mut ArrayState) {
        let d = self.delta();
        for (i, j) in self.block() {
            s.add(i, j, d);
        }
        debug_assert_eq!(s.validate(), Ok(()));
    }

    pub fn rate<T: Real>(&self, v: T) -> T {
        v.powi(self.exponent)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Transition<T: Real> {
    pub kind: MoveKind,
    pub anchor: (usize, usize),
    pub block: Vec<(usize, usize)>,
    pub rate: T,
    pub target: ArrayState,
}

fn expand<T: Real>(s: &ArrayState, m: Move, v: T) -> Transition<T> {
    Transition { kind: m.kind, anchor: m.anchor, block: m.block(), rate: m.rate(v), target: m.apply(s) }
}

fn sign(b: bool) -> i32 {
    if b {
        1
    } else {
        -1
    }
}

/// Enabled forward moves, one per unblocked (cell, direction) clock.
pub fn forward_moves(s: &ArrayState) -> Vec<Move> {
    let stair = s.stair;
    let mut out = Vec::new();
    for (i, j) in stair.cells() {
        let x = s.get(i, j);
        let diag = s.get_or_inf(i - 1, j + 1);

        // Up: block (i, k..=j) of cells equal to x; blocked by an equal cell above.
        if s.get_or_inf(i - 1, j) != Some(x) {
            let mut k = j;
            while k > 1 && s.get(i, k - 1) == x {
                k -= 1;
            }
            let exponent = sign(diag.is_none_or(|d| x < d));
            out.push(Move { kind: MoveKind::Up, anchor: (i, j), len: j - k + 1, exponent, reversed: false });
        }

        // Down: block (i..=l, j) of cells equal to x; blocked by the wall or an equal cell to the right.
        let right_equal = stair.contains(i, j + 1) && s.get(i, j + 1) == x;
        if x > 0 && !right_equal {
            let mut l = i;
            while stair.contains(l + 1, j) && s.get(l + 1, j) == x {
                l += 1;
            }
            let exponent = sign(diag.is_some_and(|d| x > d));
            out.push(Move { kind: MoveKind::Down, anchor: (i, j), len: l - i + 1, exponent, reversed: false });
        }
    }
    out
}

/// Enabled moves of the time-reversed stationary chain.
///
/// Reversed `Up` lowers the row block that starts at the anchor and runs
/// right through equal cells; reversed `Down` raises the column block that
/// starts at the anchor and runs up through equal cells.
pub fn reversed_moves(s: &ArrayState) -> Vec<Move> {
    let stair = s.stair;
    let mut out = Vec::new();
    for (i, k) in stair.cells() {
        let x = s.get(i, k);

        if x > 0 {
            let mut j = k;
            while stair.contains(i, j + 1) && s.get(i, j + 1) == x {
                j += 1;
            }
            let fits = (k..=j).all(|jj| !stair.contains(i + 1, jj) || s.get(i + 1, jj) < x);
            if fits {
                let c = x - 1;
                let exponent = sign(k > 1 && c >= s.get(i + 1, k - 1));
                out.push(Move { kind: MoveKind::Up, anchor: (i, k), len: j - k + 1, exponent, reversed: true });
            }
        }

        let (l, jj) = (i, k);
        let mut top = l;
        while top > 1 && s.get(top - 1, jj) == x {
            top -= 1;
        }
        if s.get_or_inf(l, jj - 1).is_none_or(|left| left > x) {
            let exponent = sign(jj == 1 || x < s.get(l + 1, jj - 1));
            out.push(Move { kind: MoveKind::Down, anchor: (l, jj), len: l - top + 1, exponent, reversed: true });
        }
    }
    out
}

pub fn enabled_transitions<T: Real>(s: &ArrayState, v: T) -> Vec<Transition<T>> {
    forward_moves(s).into_iter().map(|m| expand(s, m, v)).collect()
}

pub fn reversed_transitions<T: Real>(s: &ArrayState, v: T) -> Vec<Transition<T>> {
    reversed_moves(s).into_iter().map(|m| expand(s, m, v)).collect()
}

/// `log pi(x)`: the product of geometric masses of the increments
/// `x[i][j] - max(x[i+1][j], x[i][j+1])` (entries on the anti-diagonal count whole).
pub fn log_pi<T: Real>(s: &ArrayState, v: T) -> Result<T, ParamError> {
    check_geometric(v.as_f64())?;
    let stair = s.stair;
    let mut exponent = 0u64;
    for (i, j) in stair.cells() {
        let below = if stair.contains(i + 1, j) { s.get(i + 1, j) } else { 0 };
        let right = if stair.contains(i, j + 1) { s.get(i, j + 1) } else { 0 };
        exponent += s.get(i, j) - below.max(right);
    }
    let cells = T::of(stair.len() as f64);
    Ok(cells * (T::one() - v * v).ln() + T::of(2.0 * exponent as f64) * v.ln())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub transitions: usize,
    pub max_log_residual: f64,
    pub forward_total: f64,
    pub reversed_total: f64,
    /// Forward and reversed rates bucketed as `(count at v, count at 1/v)`.
    pub forward_counts: (usize, usize),
    pub reversed_counts: (usize, usize),
    pub violations: Vec<String>,
}

impl BalanceReport {
    pub fn rate_gap(&self) -> f64 {
        (self.forward_total - self.reversed_total).abs()
    }

    pub fn passes(&self, log_tol: f64, rate_tol: f64) -> bool {
        self.violations.is_empty() && self.max_log_residual <= log_tol && self.rate_gap() <= rate_tol
    }
}

fn counts(moves: &[Move]) -> (usize, usize) {
    let up = moves.iter().filter(|m| m.exponent > 0).count();
    (up, moves.len() - up)
}

/// Checks `pi(s) q(s, s') = pi(s') qhat(s', s)` for every forward move out of
/// `s`, the converse pairing for every reversed move out of `s`, and equality
/// of total forward and reversed rates at `s`. Residuals are in log space.
pub fn check_balance(s: &ArrayState, v: f64) -> Result<BalanceReport, ParamError> {
    let lp = log_pi(s, v)?;
    let fwd = forward_moves(s);
    let rev = reversed_moves(s);
    let mut report = BalanceReport {
        transitions: fwd.len(),
        max_log_residual: 0.0,
        forward_total: fwd.iter().map(|m| m.rate(v)).sum(),
        reversed_total: rev.iter().map(|m| m.rate(v)).sum(),
        forward_counts: counts(&fwd),
        reversed_counts: counts(&rev),
        violations: Vec::new(),
    };
    let pair = |m: &Move, forward_here: bool, report: &mut BalanceReport| -> Result<(), ParamError> {
        let t = m.apply(s);
        let back: Vec<Move> = if forward_here { reversed_moves(&t) } else { forward_moves(&t) };
        let matches: Vec<&Move> = back.iter().filter(|b| b.apply(&t) == *s).collect();
        if matches.len() != 1 {
            report.violations.push(format!("{m:?}: {} matching moves back", matches.len()));
            return Ok(());
        }
        let lt = log_pi(&t, v)?;
        // Forward pairs: pi(s) q(s,t) = pi(t) qhat(t,s); reversed pairs: pi(s) qhat(s,t) = pi(t) q(t,s).
        let residual = (lp + m.rate(v).ln() - lt - matches[0].rate(v).ln()).abs();
        report.max_log_residual = report.max_log_residual.max(residual);
        Ok(())
    };
    for m in &fwd {
        pair(m, true, &mut report)?;
    }
    for m in &rev {
        pair(m, false, &mut report)?;
    }
    if report.forward_counts != report.reversed_counts {
        report.violations.push(format!(
            "rate multiset differs: forward {:?}, reversed {:?}",
            report.forward_counts, report.reversed_counts
        ));
    }
    Ok(report)
}

/// A draw from the stationary law: the last passage table of a fresh environment.
pub fn sample_stationary(params: &ModelParams, seed: Seed) -> Result<ArrayState, ParamError> {
    Ok(ArrayState::from_lpp(&lpp_table(&sample_env(params, seed)?)))
}

/// One jump of a continuous-time trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ArrayEvent<T: Real> {
    #[serde(rename = "u")]
    pub time: T,
    pub kind: MoveKind,
    pub anchor: (usize, usize),
    pub len: usize,
}

/// Initial state plus the jump log; states are replayed on demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ArrayTrajectory<T: Real> {
    pub v: T,
    pub duration: T,
    pub initial: ArrayState,
    pub events: Vec<ArrayEvent<T>>,
}

impl<T: Real> ArrayTrajectory<T> {
    /// `(time, state)` pairs: time 0 then one entry per jump.
    pub fn states(&self) -> Vec<(T, ArrayState)> {
        let mut s = self.initial.clone();
        let mut out = vec![(T::zero(), s.clone())];
        for e in &self.events {
            let m = Move { kind: e.kind, anchor: e.anchor, len: e.len, exponent: 0, reversed: false };
            m.apply_in_place(&mut s);
            out.push((e.time, s.clone()));
        }
        out
    }

    pub fn final_state(&self) -> ArrayState {
        self.states().pop().expect("nonempty").1
    }

    /// State at time `u` (right-continuous).
    pub fn state_at(&self, u: T) -> ArrayState {
        let states = self.states();
        let k = states.partition_point(|(t, _)| *t <= u);
        states[k.max(1) - 1].1.clone()
    }
}

fn holding_and_choice<T: Real>(rng: &mut Substream, rates: &[T]) -> (T, usize) {
    let total = rates.iter().fold(T::zero(), |a, &r| a + r);
    let hold = T::of(rng.exponential(1.0)) / total;
    let mut target = T::of(rng.uniform()) * total;
    for (k, &r) in rates.iter().enumerate() {
        if target < r {
            return (hold, k);
        }
        target = target - r;
    }
    (hold, rates.len() - 1)
}

fn check_duration<T: Real>(duration: T) -> Result<(), ArrayError> {
    if duration.is_finite() && duration >= T::zero() {
        Ok(())
    } else {
        Err(ArrayError::Duration)
    }
}

/// Total-rate CTMC scheme: exponential holding time at the summed rate of
/// enabled moves, then one move chosen proportionally to its rate.
pub fn simulate_ct<T: Real>(s0: &ArrayState, duration: T, v: T, seed: Seed) -> Result<ArrayTrajectory<T>, ArrayError> {
    check_geometric(v.as_f64())?;
    check_duration(duration)?;
    s0.validate()?;
    let mut rng = seed.substream(Purpose::ArrayDynamics, s0.n() as u64, 0);
    let mut s = s0.clone();
    let mut now = T::zero();
    let mut events = Vec::new();
    loop {
        let moves = forward_moves(&s);
        let rates: Vec<T> = moves.iter().map(|m| m.rate(v)).collect();
        let (hold, k) = holding_and_choice(&mut rng, &rates);
        now = now + hold;
        if now > duration {
            break;
        }
        moves[k].apply_in_place(&mut s);
        events.push(ArrayEvent { time: now, kind: moves[k].kind, anchor: moves[k].anchor, len: moves[k].len });
    }
    Ok(ArrayTrajectory { v, duration, initial: s0.clone(), events })
}

/// State after running for `duration`, without recording the path.
pub fn run_ct<T: Real>(s0: &ArrayState, duration: T, v: T, seed: Seed) -> Result<ArrayState, ArrayError> {
    Ok(simulate_ct(s0, duration, v, seed)?.final_state())
}

/// Level vector at time 0 and after each jump.
pub fn diagonal_marginal<T: Real>(traj: &ArrayTrajectory<T>) -> Vec<(T, Vec<u64>)> {
    traj.states().into_iter().map(|(t, s)| (t, s.level_vector())).collect()
}

pub fn top_row<T: Real>(traj: &ArrayTrajectory<T>) -> Vec<(T, Vec<u64>)> {
    traj.states().into_iter().map(|(t, s)| (t, s.top_row())).collect()
}

/// Ordered walkers `x_1 <= ... <= x_m` with a wall at 0. Each walker jumps
/// right at rate `v`, pushing equal walkers to its right along, and left at
/// rate `1/v` unless an equal left neighbour or the wall blocks it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PushTrajectory<T: Real> {
    pub times: Vec<T>,
    pub states: Vec<Vec<u64>>,
}

impl<T: Real> PushTrajectory<T> {
    pub fn final_state(&self) -> &[u64] {
        self.states.last().expect("nonempty")
    }
}

pub fn pushasep_wall<T: Real>(x0: &[u64], duration: T, v: T, seed: Seed) -> Result<PushTrajectory<T>, ArrayError> {
    if v.as_f64() <= 0.0 || !v.is_finite() {
        return Err(ParamError::Rate(v.as_f64()).into());
    }
    check_duration(duration)?;
    if x0.windows(2).any(|w| w[0] > w[1]) {
        return Err(ArrayError::Walkers);
    }
    let m = x0.len();
    let mut rng = seed.substream(Purpose::PushAsep, m as u64, 0);
    let mut x = x0.to_vec();
    let mut traj = PushTrajectory { times: vec![T::zero()], states: vec![x.clone()] };
    if m == 0 {
        return Ok(traj);
    }
    let mut now = T::zero();
    // Moves: (walker, +1) right, (walker, -1) left.
    let mut moves: Vec<(usize, bool)> = Vec::with_capacity(2 * m);
    let mut rates: Vec<T> = Vec::with_capacity(2 * m);
    loop {
        moves.clear();
        rates.clear();
        for k in 0..m {
            moves.push((k, true));
            rates.push(v);
            let blocked = if k == 0 { x[0] == 0 } else { x[k - 1] == x[k] };
            if !blocked {
                moves.push((k, false));
                rates.push(v.recip());
            }
        }
        let (hold, c) = holding_and_choice(&mut rng, &rates);
        now = now + hold;
        if now > duration {
            break;
        }
        let (k, right) = moves[c];
        if right {
            let p = x[k];
            for w in x[k..].iter_mut().take_while(|w| **w == p) {
                *w += 1;
            }
        } else {
            x[k] -= 1;
        }
        traj.times.push(now);
        traj.states.push(x.clone());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn n1(a: u64, b: u64, c: u64) -> ArrayState {
        // (x11, x12, x21)
        ArrayState::new(1, vec![a, b, c]).unwrap()
    }

    fn targets(ts: &[Transition<f64>]) -> Vec<(Vec<u64>, f64)> {
        let mut v: Vec<_> = ts.iter().map(|t| (t.target.values().to_vec(), t.rate)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    #[test]
    fn forward_from_zero() {
        let v = 0.5;
        let ts = enabled_transitions(&n1(0, 0, 0), v);
        assert_eq!(targets(&ts), vec![(vec![1, 0, 0], v), (vec![1, 1, 0], v)]);
        let total: f64 = ts.iter().map(|t| t.rate).sum();
        assert_relative_eq!(total, 2.0 * v);
    }

    #[test]
    fn forward_down_uses_infinite_row_zero() {
        let ts = enabled_transitions(&n1(1, 0, 0), 0.5);
        let down: Vec<_> = ts.iter().filter(|t| t.kind == MoveKind::Down).collect();
        assert_eq!(down.len(), 1);
        assert_eq!(down[0].block, vec![(1, 1)]);
        assert_eq!(down[0].target, n1(0, 0, 0));
        assert_relative_eq!(down[0].rate, 2.0);
    }

    #[test]
    fn reversed_from_zero() {
        let v = 0.5;
        let ts = reversed_transitions(&n1(0, 0, 0), v);
        assert_eq!(targets(&ts), vec![(vec![1, 0, 0], v), (vec![1, 0, 1], v)]);
        let back = reversed_transitions(&n1(1, 0, 0), v);
        let to_zero: Vec<_> = back.iter().filter(|t| t.target == n1(0, 0, 0)).collect();
        assert_eq!(to_zero.len(), 1);
        assert_relative_eq!(to_zero[0].rate, 1.0 / v);
    }

    #[test]
    fn no_move_leaves_the_state_space() {
        let p = ModelParams::new(0.6, 3, 1.0).unwrap();
        for r in 0..200 {
            let s = sample_stationary(&p, Seed::new(5).replica(r)).unwrap();
            for m in forward_moves(&s).into_iter().chain(reversed_moves(&s)) {
                m.apply(&s).validate().unwrap();
            }
            for m in forward_moves(&s) {
                if m.kind == MoveKind::Down {
                    assert!(m.block().iter().all(|&(i, j)| s.get(i, j) > 0));
                }
            }
        }
    }

    #[test]
    fn log_pi_examples() {
        let v = 0.5;
        assert_relative_eq!(log_pi(&n1(0, 0, 0), v).unwrap(), 3.0 * 0.75f64.ln(), epsilon = 1e-14);
        assert_relative_eq!(log_pi(&n1(1, 0, 0), v).unwrap().exp(), 0.75f64.powi(3) * 0.25, epsilon = 1e-14);
    }

    #[test]
    fn pi_normalized_at_n1() {
        let v = 0.5f64;
        let mut total = 0.0f64;
        for a in 0..=40u64 {
            for b in 0..=a {
                for c in 0..=a {
                    total += log_pi(&n1(a, b, c), v).unwrap().exp();
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-10, "{total}");
    }

    #[test]
    fn balance_example() {
        let r = check_balance(&n1(0, 0, 0), 0.5).unwrap();
        assert!(r.passes(1e-12, 1e-12), "{r:?}");
        assert_relative_eq!(r.forward_total, 1.0);
    }

    #[test]
    fn balance_on_stationary_samples() {
        for n in 1..=3 {
            for v in [0.3, 0.5, 0.8] {
                let p = ModelParams::new(v, n, 1.0).unwrap();
                for r in 0..100 {
                    let s = sample_stationary(&p, Seed::new(11).replica(r)).unwrap();
                    let rep = check_balance(&s, v).unwrap();
                    assert!(rep.passes(1e-9, 1e-12), "n={n} v={v} {s:?} {rep:?}");
                }
            }
        }
    }

    #[test]
    fn global_balance_at_n1() {
        // sum_{s'} pi(s') q(s', s) = pi(s) * total rate out of s, on interior states.
        let v = 0.5;
        for a in 0..6u64 {
            for b in 0..=a {
                for c in 0..=a {
                    let s = n1(a, b, c);
                    let inflow: f64 = reversed_moves(&s)
                        .iter()
                        .map(|m| {
                            let t = m.apply(&s);
                            let q: f64 = forward_moves(&t).iter().filter(|f| f.apply(&t) == s).map(|f| f.rate(v)).sum();
                            log_pi(&t, v).unwrap().exp() * q
                        })
                        .sum();
                    let out: f64 = forward_moves(&s).iter().map(|m| m.rate(v)).sum();
                    assert_relative_eq!(inflow, log_pi(&s, v).unwrap().exp() * out, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_duration_is_initial_state() {
        let s = n1(2, 1, 0);
        let traj = simulate_ct(&s, 0.0, 0.5, Seed::new(1)).unwrap();
        assert!(traj.events.is_empty());
        assert_eq!(traj.states(), vec![(0.0, s)]);
    }

    #[test]
    fn trajectories_stay_ordered_and_replay() {
        let s0 = ArrayState::zeros(3);
        let traj = simulate_ct(&s0, 20.0, 0.7, Seed::new(2)).unwrap();
        assert!(!traj.events.is_empty());
        let states = traj.states();
        for w in states.windows(2) {
            assert!(w[0].0 < w[1].0);
            w[1].1.validate().unwrap();
            let lv = w[1].1.level_vector();
            assert!(lv.windows(2).all(|p| p[0] <= p[1]));
        }
        assert_eq!(traj, simulate_ct(&s0, 20.0, 0.7, Seed::new(2)).unwrap());
        assert_eq!(traj.state_at(0.0), s0);
        assert_eq!(traj.state_at(20.0), traj.final_state());
    }

    #[test]
    fn first_holding_time_mean() {
        let v = 0.5;
        let reps = 20_000;
        let sum: f64 = (0..reps)
            .map(|r| {
                let traj = simulate_ct(&ArrayState::zeros(1), 40.0, v, Seed::new(3).replica(r)).map(|t| t.events[0].time);
                traj.unwrap()
            })
            .sum();
        // Exp(2v) has mean 1 and standard deviation 1.
        let mean = sum / reps as f64;
        assert!((mean - 1.0).abs() < 4.0 / (reps as f64).sqrt(), "{mean}");
    }

    #[test]
    fn pushing_moves_equal_walkers() {
        // From [0, 0] only right jumps are possible; walker 0 jumping drags walker 1 along.
        let mut seen_push = false;
        for r in 0..50 {
            let t = pushasep_wall(&[0, 0], 1.0, 0.5, Seed::new(4).replica(r)).unwrap();
            for w in t.states.windows(2) {
                assert!(w[1].windows(2).all(|p| p[0] <= p[1]));
                if w[0] == [0, 0] && w[1] == [1, 1] {
                    seen_push = true;
                }
            }
        }
        assert!(seen_push);
    }

    #[test]
    fn pushasep_rejects_unordered() {
        assert_eq!(pushasep_wall(&[2, 1], 1.0, 0.5, Seed::new(0)), Err(ArrayError::Walkers));
    }

    #[test]
    fn top_row_is_pushasep() {
        // Row 1 of the array evolves autonomously as pushASEP with a wall.
        let s0 = ArrayState::zeros(2);
        let traj = simulate_ct(&s0, 10.0, 0.5, Seed::new(8)).unwrap();
        for w in top_row(&traj).windows(2) {
            let (a, b) = (&w[0].1, &w[1].1);
            if a == b {
                continue;
            }
            let diff: Vec<i64> = a.iter().zip(b).map(|(x, y)| *y as i64 - *x as i64).collect();
            let ups = diff.iter().filter(|d| **d == 1).count();
            let downs = diff.iter().filter(|d| **d == -1).count();
            assert!(ups == 0 || downs == 0);
            assert!(downs <= 1, "left jumps never push: {a:?} -> {b:?}");
        }
    }
}
