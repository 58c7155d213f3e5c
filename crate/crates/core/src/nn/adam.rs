//! Adaptive-moment optimizer with bias correction.

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizerState<T: Real> {
    pub step: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
    pub hyper: AdamParams,
}

impl<T: Real> OptimizerState<T> {
    pub fn new(param_count: usize, hyper: AdamParams) -> Self {
        OptimizerState {
            step: 0,
            m: vec![T::zero(); param_count],
            v: vec![T::zero(); param_count],
            hyper,
        }
    }
}

/// One update: moments decay toward the gradient, parameters move against
/// the bias-corrected ratio.
pub fn optimizer_step<T: Real>(
    state: &mut OptimizerState<T>,
    params: &mut [T],
    grads: &[T],
) -> Result<()> {
    if params.len() != state.m.len() || grads.len() != params.len() {
        return Err(Error::ShapeMismatch {
            context: "optimizer step",
            expected: format!("{} parameters", state.m.len()),
            got: format!("params {}, grads {}", params.len(), grads.len()),
        });
    }
    state.step += 1;
    let b1 = T::from_f64(state.hyper.beta1);
    let b2 = T::from_f64(state.hyper.beta2);
    let lr = T::from_f64(state.hyper.learning_rate);
    let eps = T::from_f64(state.hyper.epsilon);
    let c1 = T::from_f64(1.0 - state.hyper.beta1.powi(state.step as i32));
    let c2 = T::from_f64(1.0 - state.hyper.beta2.powi(state.step as i32));
    let one = T::one();
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = b1 * state.m[i] + (one - b1) * g;
        state.v[i] = b2 * state.v[i] + (one - b2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] = params[i] - lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let mut state: OptimizerState<f64> = OptimizerState::new(4, AdamParams::default());
        let mut p = vec![1.0, -2.0, 0.5, 3.0];
        let orig = p.clone();
        for _ in 0..10 {
            optimizer_step(&mut state, &mut p, &[0.0; 4]).unwrap();
        }
        assert_eq!(p, orig);
    }

    #[test]
    fn constant_gradient_moves_at_learning_rate() {
        let hyper = AdamParams {
            learning_rate: 0.01,
            ..Default::default()
        };
        let mut state: OptimizerState<f64> = OptimizerState::new(2, hyper);
        let mut p = vec![0.0, 0.0];
        let g = [3.0, -0.25];
        let mut last = p.clone();
        for _ in 0..200 {
            last = p.clone();
            optimizer_step(&mut state, &mut p, &g).unwrap();
        }
        // Steady-state step size approaches lr with sign opposite the gradient.
        let step0 = p[0] - last[0];
        let step1 = p[1] - last[1];
        assert!((step0 + 0.01).abs() < 1e-4, "step0={step0}");
        assert!((step1 - 0.01).abs() < 1e-4, "step1={step1}");
    }

    #[test]
    fn deterministic_across_runs() {
        let run = || {
            let mut state: OptimizerState<f64> = OptimizerState::new(3, AdamParams::default());
            let mut p = vec![0.1, 0.2, 0.3];
            for i in 0..50 {
                let g = [0.1 * i as f64, -0.2, 0.05];
                optimizer_step(&mut state, &mut p, &g).unwrap();
            }
            p
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut state: OptimizerState<f64> = OptimizerState::new(3, AdamParams::default());
        let mut p = vec![0.0; 2];
        assert!(optimizer_step(&mut state, &mut p, &[0.0; 2]).is_err());
    }
}
