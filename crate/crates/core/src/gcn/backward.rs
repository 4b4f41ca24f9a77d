use ndarray::{Array2, ArrayView2, Axis};

use super::{Encoded, GcnParams};
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Real};
use crate::sparse::SparseMatrix;

/// Reconstruction loss with its gradients.
#[derive(Debug, Clone)]
pub struct ReconstructionGrad<T> {
    pub loss: T,
    /// Gradient of `scale · loss` with respect to `Z`.
    pub dz: Array2<T>,
    /// Gradient of `scale · loss` with respect to `W1` (GCN decoder only).
    pub dw1: Option<Array2<T>>,
}

/// Decodes `Z`, evaluates the MSE against `target` and back-propagates
/// `scale · MSE` to `Z` and `W1`.
///
/// `cells = None` averages over every cell; otherwise only over the listed cells.
pub fn reconstruction_backward<T: Real>(
    a_hat: &SparseMatrix<T>,
    target: &SparseMatrix<T>,
    z: ArrayView2<'_, T>,
    params: &GcnParams<T>,
    cells: Option<&[(usize, usize)]>,
    scale: T,
) -> Result<ReconstructionGrad<T>> {
    let n = z.nrows();
    if target.shape() != (n, n) || a_hat.shape() != (n, n) {
        return Err(Error::shape("reconstruction", format!("{n}x{n}"), format!("{:?}", target.shape())));
    }
    match cells {
        None => dense(a_hat, target, z, params, scale),
        Some(cells) => sampled(a_hat, target, z, params, cells, scale),
    }
}

fn dense<T: Real>(
    a_hat: &SparseMatrix<T>,
    target: &SparseMatrix<T>,
    z: ArrayView2<'_, T>,
    params: &GcnParams<T>,
    scale: T,
) -> Result<ReconstructionGrad<T>> {
    let n = z.nrows();
    let cells = T::of_usize(n * n);
    let (q, s) = match &params.w1 {
        Some(w1) => {
            let s = a_hat.mul_dense(z)?;
            (s.dot(w1), Some(s))
        }
        None => (z.dot(&z.t()), None),
    };
    let mut a_prime = q.mapv(sigmoid);
    if s.is_none() {
        symmetrize_upper(&mut a_prime);
    }
    // residual = A' - A, then dQ = scale * 2 (A' - A) / N² * A'(1 - A')
    let mut d_q = a_prime.clone();
    for (r, c, w) in target.triplets() {
        d_q[[r, c]] -= w;
    }
    let loss = d_q.iter().fold(T::zero(), |acc, &d| acc + d * d) / cells;
    let coef = scale * T::two() / cells;
    ndarray::Zip::from(&mut d_q)
        .and(&a_prime)
        .for_each(|d, &p| *d = coef * *d * p * (T::one() - p));

    match (s, &params.w1) {
        (Some(s), Some(w1)) => {
            let dw1 = s.t().dot(&d_q);
            let ds = d_q.dot(&w1.t());
            let dz = a_hat.transpose_mul_dense(ds.view())?;
            Ok(ReconstructionGrad { loss, dz, dw1: Some(dw1) })
        }
        _ => {
            let sym = &d_q + &d_q.t();
            Ok(ReconstructionGrad { loss, dz: sym.dot(&z), dw1: None })
        }
    }
}

fn sampled<T: Real>(
    a_hat: &SparseMatrix<T>,
    target: &SparseMatrix<T>,
    z: ArrayView2<'_, T>,
    params: &GcnParams<T>,
    cells: &[(usize, usize)],
    scale: T,
) -> Result<ReconstructionGrad<T>> {
    let (n, k) = z.dim();
    if cells.is_empty() {
        return Ok(ReconstructionGrad {
            loss: T::zero(),
            dz: Array2::zeros((n, k)),
            dw1: params.w1.as_ref().map(|w| Array2::zeros(w.dim())),
        });
    }
    let count = T::of_usize(cells.len());
    let coef = scale * T::two() / count;
    let mut loss = T::zero();
    match &params.w1 {
        Some(w1) => {
            let s = a_hat.mul_dense(z)?;
            let mut ds = Array2::zeros((n, k));
            let mut dw1 = Array2::zeros(w1.dim());
            for &(i, j) in cells {
                let p = sigmoid(s.row(i).dot(&w1.column(j)));
                let d = p - target.get(i, j);
                loss += d * d;
                let dq = coef * d * p * (T::one() - p);
                dw1.column_mut(j).scaled_add(dq, &s.row(i));
                ds.row_mut(i).scaled_add(dq, &w1.column(j));
            }
            let dz = a_hat.transpose_mul_dense(ds.view())?;
            Ok(ReconstructionGrad { loss: loss / count, dz, dw1: Some(dw1) })
        }
        None => {
            let mut dz = Array2::zeros((n, k));
            for &(i, j) in cells {
                let p = sigmoid(z.row(i).dot(&z.row(j)));
                let d = p - target.get(i, j);
                loss += d * d;
                let dq = coef * d * p * (T::one() - p);
                dz.row_mut(i).scaled_add(dq, &z.row(j));
                dz.row_mut(j).scaled_add(dq, &z.row(i));
            }
            Ok(ReconstructionGrad { loss: loss / count, dz, dw1: None })
        }
    }
}

/// Gradient of the encoder weight from an upstream gradient on `Z`:
/// through the dropout mask, the ReLU and `Âᵀ`.
pub fn encoder_backward<T: Real>(
    a_hat: &SparseMatrix<T>,
    encoded: &Encoded<T>,
    dz: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    if dz.dim() != encoded.z.dim() {
        return Err(Error::shape("encoder_backward", format!("{:?}", encoded.z.dim()), format!("{:?}", dz.dim())));
    }
    let mut dp = dz.to_owned();
    if let Some(mask) = &encoded.mask {
        dp *= mask;
    }
    ndarray::Zip::from(&mut dp)
        .and(&encoded.pre)
        .for_each(|g, &p| {
            if p <= T::zero() {
                *g = T::zero();
            }
        });
    a_hat.transpose_mul_dense(dp.view())
}

fn symmetrize_upper<T: Real>(m: &mut Array2<T>) {
    let n = m.len_of(Axis(0));
    for i in 0..n {
        for j in 0..i {
            m[[i, j]] = m[[j, i]];
        }
    }
}
