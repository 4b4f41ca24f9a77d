use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GcnParams;
use crate::error::{Error, Result};
use crate::scalar::{sigmoid, Real};
use crate::sparse::SparseMatrix;

/// How the reconstruction loss covers the `N × N` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReconstructionMode {
    /// Mean over every cell.
    #[default]
    Dense,
    /// Mean over all stored target entries plus an equal number of
    /// uniformly drawn empty cells, redrawn every epoch. Meant for graphs
    /// too large for an `N × N` buffer.
    Sampled,
}

/// Encoder output with the state backward needs.
#[derive(Debug, Clone)]
pub struct Encoded<T> {
    /// `Â W0` before the ReLU.
    pub pre: Array2<T>,
    /// Inverted-dropout multipliers (`0` or `1/(1-p)`); `None` when dropout is off.
    pub mask: Option<Array2<T>>,
    pub z: Array2<T>,
}

fn check_square<T: Real>(a_hat: &SparseMatrix<T>, n: usize, context: &'static str) -> Result<()> {
    if a_hat.n_rows() != n || a_hat.n_cols() != n {
        return Err(Error::shape(context, format!("{n}x{n}"), format!("{:?}", a_hat.shape())));
    }
    Ok(())
}

/// `Z = dropout(relu(Â W0), p)`. With `p = 0` the RNG is not touched.
pub fn encode<T: Real, R: Rng>(
    a_hat: &SparseMatrix<T>,
    params: &GcnParams<T>,
    dropout_p: T,
    rng: &mut R,
) -> Result<Encoded<T>> {
    check_square(a_hat, params.n_nodes(), "encode")?;
    if !(dropout_p >= T::zero() && dropout_p < T::one()) {
        return Err(Error::InvalidArgument(format!("dropout must lie in [0, 1), got {dropout_p}")));
    }
    let pre = a_hat.mul_dense(params.w0.view())?;
    let mut z = pre.mapv(|v| v.max(T::zero()));
    let mask = if dropout_p > T::zero() {
        let keep = T::one() / (T::one() - dropout_p);
        let p = dropout_p.as_f64();
        let mask = Array2::from_shape_simple_fn(z.dim(), || {
            if rng.random::<f64>() < p {
                T::zero()
            } else {
                keep
            }
        });
        z *= &mask;
        Some(mask)
    } else {
        None
    };
    Ok(Encoded { pre, mask, z })
}

/// Evaluation-mode encoder: `relu(Â W0)`.
pub fn encode_eval<T: Real>(a_hat: &SparseMatrix<T>, params: &GcnParams<T>) -> Result<Array2<T>> {
    check_square(a_hat, params.n_nodes(), "encode")?;
    Ok(a_hat.mul_dense(params.w0.view())?.mapv(|v| v.max(T::zero())))
}

/// `A' = sigmoid(Â Z W1)`.
pub fn decode_gcn<T: Real>(
    a_hat: &SparseMatrix<T>,
    z: ArrayView2<'_, T>,
    w1: ArrayView2<'_, T>,
) -> Result<Array2<T>> {
    check_square(a_hat, z.nrows(), "decode_gcn")?;
    if w1.nrows() != z.ncols() {
        return Err(Error::shape("decode_gcn", format!("{} rows in W1", z.ncols()), w1.nrows()));
    }
    let s = a_hat.mul_dense(z)?;
    Ok(s.dot(&w1).mapv(sigmoid))
}

/// `A' = sigmoid(Z Zᵀ)`, exactly symmetric.
pub fn decode_inner<T: Real>(z: ArrayView2<'_, T>) -> Array2<T> {
    let mut q = z.dot(&z.t());
    let n = q.nrows();
    for i in 0..n {
        for j in 0..i {
            q[[i, j]] = q[[j, i]];
        }
    }
    q.mapv_inplace(sigmoid);
    q
}

/// Mean over all `N²` cells of `(A'_ij - A_ij)²`; absent entries of `A` are 0.
pub fn reconstruction_loss<T: Real>(a_prime: &Array2<T>, target: &SparseMatrix<T>) -> Result<T> {
    if a_prime.dim() != target.shape() {
        return Err(Error::shape(
            "reconstruction_loss",
            format!("{:?}", target.shape()),
            format!("{:?}", a_prime.dim()),
        ));
    }
    let mut total = T::zero();
    for (i, row) in a_prime.rows().into_iter().enumerate() {
        let mut entries = target.row(i).peekable();
        for (j, &v) in row.iter().enumerate() {
            let a = match entries.peek() {
                Some(&(c, w)) if c == j => {
                    entries.next();
                    w
                }
                _ => T::zero(),
            };
            let d = v - a;
            total += d * d;
        }
    }
    Ok(total / T::of_usize(a_prime.len()))
}

/// Cells for the sampled reconstruction loss: every stored target entry,
/// then as many uniformly drawn empty cells (with replacement).
pub fn sample_cells<T: Real, R: Rng>(target: &SparseMatrix<T>, rng: &mut R) -> Vec<(usize, usize)> {
    let (n_rows, n_cols) = target.shape();
    let mut cells: Vec<(usize, usize)> = target.triplets().map(|(r, c, _)| (r, c)).collect();
    let positives = cells.len();
    let empty_cells = n_rows * n_cols - positives;
    if empty_cells == 0 {
        return cells;
    }
    while cells.len() < 2 * positives {
        let r = rng.random_range(0..n_rows);
        let c = rng.random_range(0..n_cols);
        if !target.contains(r, c) {
            cells.push((r, c));
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gcn::Decoder;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params(n: usize, k: usize, seed: u64) -> GcnParams<f64> {
        GcnParams::init(n, k, Decoder::Gcn, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    fn random_sym(n: usize, seed: u64) -> SparseMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 1.0));
            for j in 0..i {
                if rng.random::<f64>() < 0.3 {
                    let w = rng.random::<f64>();
                    t.push((i, j, w));
                    t.push((j, i, w));
                }
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn identity_propagation_is_relu() {
        let p = random_params(5, 3, 2);
        let z = encode(&SparseMatrix::identity(5), &p, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(z.z, p.w0.mapv(|v| v.max(0.0)));
        assert!(z.mask.is_none());
    }

    #[test]
    fn no_dropout_is_seed_independent() {
        let p = random_params(6, 3, 2);
        let a = random_sym(6, 3);
        let z1 = encode(&a, &p, 0.0, &mut ChaCha8Rng::seed_from_u64(1)).unwrap().z;
        let z2 = encode(&a, &p, 0.0, &mut ChaCha8Rng::seed_from_u64(2)).unwrap().z;
        assert_eq!(z1, z2);
        assert_eq!(z1, encode_eval(&a, &p).unwrap());
    }

    #[test]
    fn dropout_uses_inverted_scaling() {
        let p = random_params(40, 5, 2);
        let a = SparseMatrix::identity(40);
        let e = encode(&a, &p, 0.5, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let mask = e.mask.unwrap();
        assert!(mask.iter().all(|&m| m == 0.0 || m == 2.0));
        let dropped = mask.iter().filter(|&&m| m == 0.0).count();
        assert!(dropped > 60 && dropped < 140, "{dropped}");
        assert!(encode(&a, &p, 1.0, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn encode_matches_dense_reference() {
        let p = random_params(10, 4, 5);
        let a = random_sym(10, 6);
        let z = encode_eval(&a, &p).unwrap();
        let oracle = a.to_dense().dot(&p.w0).mapv(|v: f64| v.max(0.0));
        for (x, y) in z.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(z.iter().all(|&v| v >= 0.0));
        assert!(encode_eval(&random_sym(9, 1), &p).is_err());
    }

    #[test]
    fn zero_inputs_decode_to_half() {
        let z = Array2::<f64>::zeros((4, 2));
        let w1 = random_params(4, 2, 1).w1.unwrap();
        let a = random_sym(4, 1);
        assert!(decode_gcn(&a, z.view(), w1.view()).unwrap().iter().all(|&v| v == 0.5));
        let zr = random_params(4, 2, 3).w0;
        let zero = SparseMatrix::zeros(4, 4);
        assert!(decode_gcn(&zero, zr.view(), w1.view()).unwrap().iter().all(|&v| v == 0.5));
        assert!(decode_inner(z.view()).iter().all(|&v| v == 0.5));
    }

    #[test]
    fn decode_gcn_matches_dense_reference() {
        let p = random_params(6, 3, 11);
        let a = random_sym(6, 12);
        let z = p.w0.mapv(|v| v * 3.0);
        let w1 = p.w1.unwrap();
        let out = decode_gcn(&a, z.view(), w1.view()).unwrap();
        let oracle = a.to_dense().dot(&z).dot(&w1).mapv(|q: f64| 1.0 / (1.0 + (-q).exp()));
        for (x, y) in out.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_inner_orthonormal_rows() {
        let z = array![[1.0_f64, 0.0], [0.0, 1.0]];
        let a = decode_inner(z.view());
        assert!((a[[0, 0]] - 0.731_058_578_630_004_9).abs() < 1e-15);
        assert_eq!(a[[0, 1]], 0.5);
        let zr = random_params(7, 3, 4).w0;
        let a = decode_inner(zr.view());
        assert_eq!(a, a.t());
        let oracle = zr.dot(&zr.t()).mapv(|q: f64| 1.0 / (1.0 + (-q).exp()));
        for (x, y) in a.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction_loss_cases() {
        let a = random_sym(5, 7);
        assert_eq!(reconstruction_loss(&a.to_dense(), &a).unwrap(), 0.0);
        let half = Array2::from_elem((2, 2), 0.5_f64);
        assert!((reconstruction_loss(&half, &SparseMatrix::identity(2)).unwrap() - 0.25).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pred = Array2::from_shape_simple_fn((5, 5), || rng.random::<f64>());
        let oracle = (&pred - &a.to_dense()).mapv(|d| d * d).mean().unwrap();
        assert!((reconstruction_loss(&pred, &a).unwrap() - oracle).abs() < 1e-12);
        assert!(reconstruction_loss(&half, &a).is_err());
    }

    #[test]
    fn sampled_cells_balance_positives() {
        let a = random_sym(12, 8);
        let cells = sample_cells(&a, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(cells.len(), 2 * a.nnz());
        assert!(cells[a.nnz()..].iter().all(|&(r, c)| !a.contains(r, c)));
    }
}
