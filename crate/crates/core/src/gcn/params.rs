use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::distr::{Distribution, Uniform};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Decoder used to reconstruct the adjacency matrix from `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    /// `A' = sigmoid(Â Z W1)`.
    #[default]
    Gcn,
    /// `A' = sigmoid(Z Zᵀ)`.
    Inner,
}

impl fmt::Display for Decoder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Decoder::Gcn => "gcn",
            Decoder::Inner => "inner",
        })
    }
}

impl FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn" => Ok(Decoder::Gcn),
            "inner" => Ok(Decoder::Inner),
            other => Err(Error::InvalidArgument(format!("unknown decoder {other:?}"))),
        }
    }
}

/// Encoder weight `W0` (N × K) and, for the GCN decoder, `W1` (K × N).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnParams<T> {
    pub w0: Array2<T>,
    pub w1: Option<Array2<T>>,
}

impl<T: Real> GcnParams<T> {
    /// Glorot-uniform initialization; `W0` is drawn before `W1`.
    pub fn init<R: Rng>(n_nodes: usize, dim: usize, decoder: Decoder, rng: &mut R) -> Self {
        let w0 = glorot_uniform(n_nodes, dim, rng);
        let w1 = match decoder {
            Decoder::Gcn => Some(glorot_uniform(dim, n_nodes, rng)),
            Decoder::Inner => None,
        };
        GcnParams { w0, w1 }
    }

    pub fn n_nodes(&self) -> usize {
        self.w0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.w0.ncols()
    }

    pub fn decoder(&self) -> Decoder {
        if self.w1.is_some() {
            Decoder::Gcn
        } else {
            Decoder::Inner
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w0.iter().all(|v| v.is_finite())
            && self.w1.as_ref().is_none_or(|w| w.iter().all(|v| v.is_finite()))
    }
}

/// Uniform on `±sqrt(6 / (rows + cols))`, filled in row-major order.
pub fn glorot_uniform<T: Real, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<T> {
    let limit = T::of((6.0 / (rows + cols) as f64).sqrt());
    let dist = Uniform::new_inclusive(-limit, limit).expect("valid glorot range");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}
