//! Scalar abstraction shared by every numerical routine.

use num_traits::{Float, FromPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating point type usable by the solvers: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Default tolerance record for this precision.
    fn tolerances() -> Tolerances<Self>;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal out of range")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// All numeric tolerances in one place.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Residuals of user data and LP feasibility.
    pub feasibility: T,
    /// Exact structural identities (normalisation, atom merging).
    pub structural: T,
    /// Smallest admissible pivot magnitude in the simplex.
    pub pivot: T,
    /// Reduced-cost threshold for optimality.
    pub optimality: T,
}

impl Scalar for f64 {
    fn tolerances() -> Tolerances<f64> {
        Tolerances {
            feasibility: 1e-9,
            structural: 1e-12,
            pivot: 1e-11,
            optimality: 1e-11,
        }
    }
}

impl Scalar for f32 {
    fn tolerances() -> Tolerances<f32> {
        Tolerances {
            feasibility: 1e-4,
            structural: 1e-6,
            pivot: 1e-6,
            optimality: 1e-6,
        }
    }
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        T::tolerances()
    }
}

/// Sum of absolute differences.
pub fn l1_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y).abs()).sum()
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
