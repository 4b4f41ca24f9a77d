//! Scalar abstraction shared by the numeric kernels.

use ndarray::NdFloat;
use num_traits::FromPrimitive;
use rand::distr::uniform::SampleUniform;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type the graph, GCN and task-head code is generic over.
///
/// Implemented for [`f32`] and [`f64`]. Training defaults to `f64`; `f32` is
/// useful for exporting embeddings and for memory-bound graph builds.
pub trait Real: NdFloat + FromPrimitive + SampleUniform + Serialize + DeserializeOwned + Default {
    /// Lossy conversion from `f64`, used for weights computed from integer counts.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    fn of_usize(n: usize) -> Self {
        Self::of(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    fn two() -> Self {
        Self::of(2.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Logistic function computed without overflow for large negative inputs.
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + exp(x))`, stable on both tails.
pub fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_matches_closed_form() {
        assert_eq!(sigmoid(0.0_f64), 0.5);
        assert!((sigmoid(1.0_f64) - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert!((sigmoid(-1.0_f64) - 0.268_941_421_369_995_1).abs() < 1e-15);
        assert!(sigmoid(-800.0_f64) >= 0.0);
        assert_eq!(sigmoid(800.0_f32), 1.0);
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(0.0_f64) - 2.0_f64.ln()).abs() < 1e-15);
        assert!((softplus(50.0_f64) - 50.0).abs() < 1e-15);
        assert!(softplus(-800.0_f64) >= 0.0);
        assert!(softplus(800.0_f64).is_finite());
    }
}
