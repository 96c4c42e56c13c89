//! Integer height profiles encoded by their jump points.

use serde::{Deserialize, Serialize};

use crate::error::ProfileError;
use crate::scalar::Real;

/// A compactly supported, integer-valued, upper semi-continuous step
/// function given by its points of increase and decrease.
///
/// The value at `x` is `#{inc <= x} - #{dec < x}`: a point of increase
/// already carries the upper value, and a point of decrease still does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct HeightProfile<T: Real> {
    inc: Vec<T>,
    dec: Vec<T>,
}

impl<T: Real> Default for HeightProfile<T> {
    fn default() -> Self {
        Self::flat()
    }
}

impl<T: Real> HeightProfile<T> {
    /// The zero profile.
    pub fn flat() -> Self {
        Self { inc: Vec::new(), dec: Vec::new() }
    }

    pub fn new(inc: Vec<T>, dec: Vec<T>) -> Result<Self, ProfileError> {
        validate(&inc, &dec)?;
        Ok(Self { inc, dec })
    }

    /// Builds a profile the caller guarantees is valid (checked in debug builds).
    pub(crate) fn from_parts(inc: Vec<T>, dec: Vec<T>) -> Self {
        debug_assert_eq!(validate(&inc, &dec), Ok(()));
        Self { inc, dec }
    }

    pub fn inc(&self) -> &[T] {
        &self.inc
    }

    pub fn dec(&self) -> &[T] {
        &self.dec
    }

    pub fn is_flat(&self) -> bool {
        self.inc.is_empty()
    }

    /// Number of (increase, decrease) pairs.
    pub fn len(&self) -> usize {
        self.inc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inc.is_empty()
    }

    pub fn height_at(&self, x: T) -> u64 {
        let up = self.inc.partition_point(|&p| p <= x);
        let down = self.dec.partition_point(|&p| p < x);
        (up - down) as u64
    }

    /// Left limit `h(x-)`: `#{inc < x} - #{dec < x}`.
    pub fn height_left_of(&self, x: T) -> u64 {
        let up = self.inc.partition_point(|&p| p < x);
        let down = self.dec.partition_point(|&p| p < x);
        (up - down) as u64
    }

    /// The profile of `x -> h(-x)`, again in upper semi-continuous form.
    pub fn reflect(&self) -> Self {
        Self {
            inc: self.dec.iter().rev().map(|&p| -p).collect(),
            dec: self.inc.iter().rev().map(|&p| -p).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        validate(&self.inc, &self.dec)
    }

    /// Pointwise `self >= other`, checked at every jump point of either
    /// profile and at their left limits.
    pub fn dominates(&self, other: &Self) -> bool {
        other
            .inc
            .iter()
            .chain(&other.dec)
            .chain(&self.inc)
            .chain(&self.dec)
            .all(|&x| {
                self.height_at(x) >= other.height_at(x)
                    && self.height_left_of(x) >= other.height_left_of(x)
            })
    }

    /// The jump points inside `[lo, hi]` together with the value at `lo`;
    /// two profiles agree on the window iff their restrictions are equal.
    pub fn restrict(&self, lo: T, hi: T) -> (u64, Vec<T>, Vec<T>) {
        let inside = |p: &&T| **p >= lo && **p <= hi;
        (
            self.height_at(lo),
            self.inc.iter().filter(inside).copied().collect(),
            self.dec.iter().filter(inside).copied().collect(),
        )
    }

    /// Smallest interval containing every jump point.
    pub fn support(&self) -> Option<(T, T)> {
        Some((*self.inc.first()?, *self.dec.last()?))
    }

    pub fn cast<U: Real>(&self) -> HeightProfile<U> {
        HeightProfile {
            inc: self.inc.iter().map(|p| U::of(p.as_f64())).collect(),
            dec: self.dec.iter().map(|p| U::of(p.as_f64())).collect(),
        }
    }
}

fn validate<T: Real>(inc: &[T], dec: &[T]) -> Result<(), ProfileError> {
    if inc.len() != dec.len() {
        return Err(ProfileError::Unbalanced { inc: inc.len(), dec: dec.len() });
    }
    if inc.iter().chain(dec).any(|p| !p.is_finite()) {
        return Err(ProfileError::NonFinite);
    }
    if inc.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProfileError::Unsorted("increase"));
    }
    if dec.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProfileError::Unsorted("decrease"));
    }
    match inc.iter().zip(dec).position(|(a, b)| a >= b) {
        Some(j) => Err(ProfileError::Ballot(j)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flat_is_zero() {
        let h = HeightProfile::<f64>::flat();
        for x in [-3.0, 0.0, 1e9] {
            assert_eq!(h.height_at(x), 0);
        }
    }

    #[test]
    fn single_island_upper_semicontinuous() {
        let h = HeightProfile::new(vec![0.3], vec![0.8]).unwrap();
        assert_eq!(h.height_at(0.3), 1);
        assert_eq!(h.height_at(0.8), 1);
        assert_eq!(h.height_at(0.81), 0);
        assert_eq!(h.height_at(0.29), 0);
        assert_eq!(h.height_left_of(0.3), 0);
    }

    #[test]
    fn nested_islands() {
        let h = HeightProfile::new(vec![0.1, 0.2], vec![0.5, 0.9]).unwrap();
        assert_eq!(h.height_at(0.25), 2);
        assert_eq!(h.height_at(0.15), 1);
        assert_eq!(h.height_at(0.7), 1);
    }

    #[test]
    fn rejects_invalid() {
        assert!(matches!(
            HeightProfile::new(vec![0.1], vec![]),
            Err(ProfileError::Unbalanced { .. })
        ));
        assert_eq!(HeightProfile::new(vec![0.5], vec![0.2]), Err(ProfileError::Ballot(0)));
        assert_eq!(
            HeightProfile::new(vec![0.2, 0.1], vec![0.5, 0.6]),
            Err(ProfileError::Unsorted("increase"))
        );
        assert_eq!(HeightProfile::new(vec![f64::NAN], vec![1.0]), Err(ProfileError::NonFinite));
    }

    #[test]
    fn reflection_keeps_values() {
        let h = HeightProfile::new(vec![-1.0, 0.2], vec![0.5, 0.9]).unwrap();
        let r = h.reflect();
        r.validate().unwrap();
        for x in [-1.0, -0.9, -0.5, -0.2, 0.0, 0.2, 0.5, 0.9, 1.0, 1.2] {
            assert_eq!(r.height_at(x), h.height_at(-x), "x = {x}");
        }
        assert_eq!(r.reflect(), h);
    }

    fn arb_profile() -> impl Strategy<Value = HeightProfile<f64>> {
        prop::collection::vec((-50i32..50, 1i32..20), 0..8).prop_map(|pairs| {
            // Islands on a grid of quarter units, made valid by sorting both lists.
            let mut inc: Vec<f64> = pairs.iter().map(|&(a, _)| a as f64 * 0.25).collect();
            let mut dec: Vec<f64> =
                pairs.iter().map(|&(a, w)| a as f64 * 0.25 + w as f64 * 0.25 + 0.125).collect();
            inc.sort_by(f64::total_cmp);
            dec.sort_by(f64::total_cmp);
            inc.dedup();
            dec.dedup();
            let m = inc.len().min(dec.len());
            inc.truncate(m);
            dec.truncate(m);
            HeightProfile::new(inc, dec).unwrap_or_default()
        })
    }

    proptest! {
        #[test]
        fn nonnegative_and_compact(h in arb_profile(), x in -100.0f64..100.0) {
            let _ = h.height_at(x);
            prop_assert_eq!(h.height_at(-1e6), 0);
            prop_assert_eq!(h.height_at(1e6), 0);
        }

        #[test]
        fn adding_a_pair_raises_by_one_on_the_island(h in arb_profile(), a in -20.0f64..20.0, w in 0.01f64..5.0) {
            let (y, z) = (a + 0.01, a + 0.01 + w);
            prop_assume!(!h.inc().contains(&y) && !h.dec().contains(&z));
            let mut inc = h.inc().to_vec();
            let mut dec = h.dec().to_vec();
            inc.push(y);
            dec.push(z);
            inc.sort_by(f64::total_cmp);
            dec.sort_by(f64::total_cmp);
            let raised = HeightProfile::new(inc, dec).unwrap();
            for x in [y - 0.005, y, (y + z) / 2.0, z, z + 0.005] {
                let bump = u64::from(x >= y && x <= z);
                prop_assert_eq!(raised.height_at(x), h.height_at(x) + bump);
            }
        }

        #[test]
        fn reflection_involutive(h in arb_profile(), x in -15.0f64..15.0) {
            prop_assert_eq!(h.reflect().height_at(-x), h.height_at(x));
            prop_assert_eq!(h.reflect().reflect(), h);
        }
    }
}
