//! Adam with bias correction, and global-norm gradient clipping.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::autodiff::ParamSet;
use crate::{math, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moments aligned with the entries of one `ParamSet`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    SkippedNonFinite,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, t)| alloc::vec![0.0; t.len()]).collect();
        Self {
            config,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One update. `grads[k]` belongs to the k-th parameter; `None` means
    /// the parameter is not being trained and is left untouched. A
    /// non-finite gradient skips the whole step and leaves the state as is.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Option<Vec<f64>>], lr: f64) -> Result<StepOutcome> {
        if grads.len() != self.m.len() || params.len() != self.m.len() {
            return Err(Error::Config(alloc::format!(
                "adam state has {} entries, params {}, grads {}",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((_, t), gr) in params.iter().zip(grads) {
            if let Some(gr) = gr {
                if gr.len() != t.len() {
                    return Err(Error::Shape {
                        op: "adam_step",
                        lhs: t.shape().to_vec(),
                        rhs: alloc::vec![gr.len()],
                    });
                }
            }
        }
        if grads.iter().flatten().any(|gr| gr.iter().any(|x| !x.is_finite())) {
            return Ok(StepOutcome::SkippedNonFinite);
        }
        let AdamConfig { beta1, beta2, eps } = self.config;
        self.step += 1;
        let bc1 = 1.0 - math::powf(beta1, self.step as f64);
        let bc2 = 1.0 - math::powf(beta2, self.step as f64);
        for (k, ((_, t), gr)) in params.iter_mut().zip(grads).enumerate() {
            let Some(gr) = gr else { continue };
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for (((p, &gi), mi), vi) in t.data_mut().iter_mut().zip(gr).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let mh = *mi / bc1;
                let vh = *vi / bc2;
                *p -= lr * mh / (math::sqrt(vh) + eps);
            }
        }
        Ok(StepOutcome::Applied)
    }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Option<Vec<f64>>], max_norm: f64) -> f64 {
    let norm = math::sqrt(grads.iter().flatten().flat_map(|g| g.iter()).map(|x| x * x).sum());
    if norm > max_norm && norm.is_finite() {
        let k = max_norm / norm;
        grads.iter_mut().flatten().flat_map(|g| g.iter_mut()).for_each(|x| *x *= k);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;
    use alloc::vec;

    fn scalar_set(x: f64) -> ParamSet {
        let mut p = ParamSet::new();
        p.insert("x", Tensor::vector(vec![x]));
        p
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = scalar_set(1.5);
        let mut s = AdamState::new(&p, AdamConfig::default());
        s.m[0][0] = 0.5;
        s.step(&mut p, &[Some(vec![0.0])], 0.1).unwrap();
        assert!((s.m[0][0] - 0.45).abs() < 1e-15);
        let mut q = scalar_set(1.5);
        let mut t = AdamState::new(&q, AdamConfig::default());
        t.step(&mut q, &[Some(vec![0.0])], 0.1).unwrap();
        assert_eq!(q.get("x").unwrap().data()[0], 1.5);
    }

    #[test]
    fn first_step_moves_by_lr_against_sign() {
        for g in [3.0, -0.02] {
            let mut p = scalar_set(0.0);
            let mut s = AdamState::new(&p, AdamConfig::default());
            s.step(&mut p, &[Some(vec![g])], 0.01).unwrap();
            let x = p.get("x").unwrap().data()[0];
            assert!((x.abs() - 0.01).abs() < 1e-8 && x.signum() == -g.signum());
        }
    }

    #[test]
    fn matches_hand_rolled_oracle_on_quadratic() {
        // f(x) = (x - 3)^2
        let mut p = scalar_set(0.0);
        let mut s = AdamState::new(&p, AdamConfig::default());
        let (mut x, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
        for t in 1..=3 {
            let g = 2.0 * (x - 3.0);
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            x -= 0.1 * mh / (vh.sqrt() + 1e-8);
            let cur = p.get("x").unwrap().data()[0];
            s.step(&mut p, &[Some(vec![2.0 * (cur - 3.0)])], 0.1).unwrap();
            assert!((p.get("x").unwrap().data()[0] - x).abs() < 1e-10);
        }
    }

    #[test]
    fn non_finite_gradient_skips_step() {
        let mut p = scalar_set(1.0);
        let mut s = AdamState::new(&p, AdamConfig::default());
        let out = s.step(&mut p, &[Some(vec![f64::NAN])], 0.1).unwrap();
        assert_eq!(out, StepOutcome::SkippedNonFinite);
        assert_eq!(s.step, 0);
        assert_eq!(p.get("x").unwrap().data()[0], 1.0);
    }

    #[test]
    fn untrained_entries_untouched() {
        let mut p = scalar_set(1.0);
        p.insert("y", Tensor::vector(vec![2.0]));
        let mut s = AdamState::new(&p, AdamConfig::default());
        s.step(&mut p, &[Some(vec![1.0]), None], 0.1).unwrap();
        assert_eq!(p.get("y").unwrap().data()[0], 2.0);
        assert!(s.step(&mut p, &[Some(vec![1.0])], 0.1).is_err());
    }

    #[test]
    fn clipping() {
        let mut g = vec![Some(vec![3.0]), None, Some(vec![4.0])];
        let n = clip_global_norm(&mut g, 1.0);
        assert_eq!(n, 5.0);
        assert!((g[0].as_ref().unwrap()[0] - 0.6).abs() < 1e-15);
        let mut g = vec![Some(vec![0.3])];
        clip_global_norm(&mut g, 5.0);
        assert_eq!(g[0].as_ref().unwrap()[0], 0.3);
    }
}
