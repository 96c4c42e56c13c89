//! Scalar abstraction for spatial positions, times and rates.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type used for positions and rates: `f32` or `f64`.
///
/// Random variates are always drawn in `f64` and then cast, so a given seed
/// produces the same realization (up to rounding) for every scalar type.
pub trait Real:
    Float
    + FromPrimitive
    + NumCast
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` draw.
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("finite f64 is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("real scalar converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}
