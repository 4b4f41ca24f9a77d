use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for an ordered list of parameter matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub t: u64,
    pub first: Vec<Array2<T>>,
    pub second: Vec<Array2<T>>,
}

impl<T: Real> AdamState<T> {
    pub fn new(shapes: &[(usize, usize)]) -> Self {
        AdamState {
            t: 0,
            first: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            second: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
        }
    }

    /// One bias-corrected Adam step.
    ///
    /// `slots[i]` pairs parameter `i` with its gradient; a `None` gradient
    /// leaves that parameter and its moments untouched. Any non-finite
    /// gradient aborts before anything is modified.
    pub fn step(&mut self, cfg: &AdamConfig, slots: &mut [(&mut Array2<T>, Option<&Array2<T>>)]) -> Result<()> {
        if slots.len() != self.first.len() {
            return Err(Error::shape("adam_step", self.first.len(), slots.len()));
        }
        for (i, (param, grad)) in slots.iter().enumerate() {
            if let Some(g) = grad {
                if g.dim() != param.dim() || g.dim() != self.first[i].dim() {
                    return Err(Error::shape(
                        "adam_step",
                        format!("{:?}", self.first[i].dim()),
                        format!("{:?}", g.dim()),
                    ));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Divergence { epoch: None });
                }
            }
        }
        self.t += 1;
        let b1 = T::of(cfg.beta1);
        let b2 = T::of(cfg.beta2);
        let lr = T::of(cfg.learning_rate);
        let eps = T::of(cfg.epsilon);
        let t = self.t as i32;
        let c1 = T::one() - b1.powi(t);
        let c2 = T::one() - b2.powi(t);
        for (i, (param, grad)) in slots.iter_mut().enumerate() {
            let Some(g) = grad else { continue };
            ndarray::Zip::from(&mut **param)
                .and(&mut self.first[i])
                .and(&mut self.second[i])
                .and(*g)
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + (T::one() - b1) * g;
                    *v = b2 * *v + (T::one() - b2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= lr * m_hat / (v_hat.sqrt() + eps);
                });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut state = AdamState::<f64>::new(&[(1, 2)]);
        let mut p = array![[1.5, -2.0]];
        let g = Array2::zeros((1, 2));
        state.step(&AdamConfig::default(), &mut [(&mut p, Some(&g))]).unwrap();
        assert_eq!(p, array![[1.5, -2.0]]);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn matches_scalar_trace() {
        // Hand-rolled scalar Adam as the oracle.
        let cfg = AdamConfig::default();
        let (mut theta, mut m, mut v) = (0.3_f64, 0.0_f64, 0.0_f64);
        let mut state = AdamState::<f64>::new(&[(1, 1)]);
        let mut p = array![[0.3]];
        let grads = [1.0, 1.0, -0.5, 2.0, 1e-3];
        for (step, g) in grads.iter().enumerate() {
            let t = (step + 1) as i32;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            theta -= 0.001 * (m / (1.0 - 0.9_f64.powi(t))) / ((v / (1.0 - 0.999_f64.powi(t))).sqrt() + 1e-8);
            state.step(&cfg, &mut [(&mut p, Some(&array![[*g]]))]).unwrap();
            assert!((p[[0, 0]] - theta).abs() < 1e-15);
            if step == 0 {
                assert!((p[[0, 0]] - (0.3 - 0.001)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn skipped_slots_and_errors() {
        let mut state = AdamState::<f64>::new(&[(1, 1), (1, 1)]);
        let (mut a, mut b) = (array![[1.0]], array![[1.0]]);
        let g = array![[1.0]];
        state.step(&AdamConfig::default(), &mut [(&mut a, Some(&g)), (&mut b, None)]).unwrap();
        assert_eq!(b[[0, 0]], 1.0);
        assert_eq!(state.first[1][[0, 0]], 0.0);
        let bad = array![[f64::NAN]];
        let err = state.step(&AdamConfig::default(), &mut [(&mut a, Some(&bad)), (&mut b, None)]);
        assert!(matches!(err, Err(Error::Divergence { .. })));
        assert_eq!(state.t, 1);
        assert!(state.step(&AdamConfig::default(), &mut [(&mut a, Some(&g))]).is_err());
    }
}
