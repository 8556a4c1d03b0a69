//! Floating-point scalar used by feature vectors and classifiers.
//!
//! The simulation itself is integer-only; features are exact integers lifted
//! into the scalar type, so `f32` and `f64` models train on identical inputs
//! as long as the magnitudes fit the mantissa.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Lifts an integer feature; saturates rather than failing on overflow.
    fn from_int(v: i64) -> Self {
        Self::from_i64(v).unwrap_or_else(Self::max_value)
    }

    fn half() -> Self {
        Self::from_f64(0.5).unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
