//! Scalar abstraction shared by the geometry, engine and passage code.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the simulation is generic over (`f32` or `f64`).
///
/// Random draws are always produced in `f64` by the environment and converted
/// once, so the same seed yields the same realization up to rounding for both
/// widths.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 always converts to a float type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float always converts to f64")
    }

    fn of_usize(v: usize) -> Self {
        Self::of(v as f64)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Total order wrapper used for priority queues keyed by time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Ordered<T>(pub T);

impl<T: Real> Eq for Ordered<T> {}

impl<T: Real> PartialOrd for Ordered<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Ordered<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.as_f64().total_cmp(&other.0.as_f64())
    }
}
