//! Diffusion noise schedule: linear beta ramp with cumulative-product
//! signal coefficients.

use crate::error::{Error, Result};
use crate::num::Real;

/// Defaults: 50 steps, beta from 1e-4 to 0.2. With these values
/// alpha_bar_1 > 0.99 and alpha_bar_T < 0.01.
pub const DEFAULT_STEPS: usize = 50;
pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule<T: Real> {
    /// Per-step noise rates, length T; index 0 holds beta_1.
    pub beta: Vec<T>,
    /// Cumulative products of (1 - beta), length T; strictly decreasing.
    pub alpha_bar: Vec<T>,
}

impl<T: Real> NoiseSchedule<T> {
    /// Number of diffusion steps T.
    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    /// alpha_bar_t for t in 0..=T, with alpha_bar_0 = 1.
    pub fn alpha_bar_at(&self, t: usize) -> T {
        if t == 0 {
            T::one()
        } else {
            self.alpha_bar[t - 1]
        }
    }

    /// beta_t for t in 1..=T.
    pub fn beta_at(&self, t: usize) -> T {
        self.beta[t - 1]
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.steps() {
            return Err(Error::InvalidArgument {
                context: "diffusion timestep",
                reason: format!("t={t} outside [1, {}]", self.steps()),
            });
        }
        Ok(())
    }
}

/// Build a linear-beta schedule.
pub fn build_schedule<T: Real>(
    steps: usize,
    beta_start: f64,
    beta_end: f64,
) -> Result<NoiseSchedule<T>> {
    if steps < 1 {
        return Err(Error::InvalidArgument {
            context: "noise schedule",
            reason: "need at least one step".into(),
        });
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::InvalidArgument {
            context: "noise schedule",
            reason: format!("invalid beta range [{beta_start}, {beta_end}]"),
        });
    }
    let mut beta = Vec::with_capacity(steps);
    let mut alpha_bar = Vec::with_capacity(steps);
    let mut prod = 1.0f64;
    for i in 0..steps {
        let frac = if steps == 1 {
            0.0
        } else {
            i as f64 / (steps - 1) as f64
        };
        let b = beta_start + frac * (beta_end - beta_start);
        prod *= 1.0 - b;
        beta.push(T::from_f64(b));
        alpha_bar.push(T::from_f64(prod));
    }
    Ok(NoiseSchedule { beta, alpha_bar })
}

/// The project-default schedule.
pub fn default_schedule<T: Real>() -> NoiseSchedule<T> {
    build_schedule(DEFAULT_STEPS, DEFAULT_BETA_START, DEFAULT_BETA_END)
        .expect("default schedule parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step_product() {
        let s: NoiseSchedule<f64> = build_schedule(1, 0.5, 0.5).unwrap();
        assert_eq!(s.alpha_bar, vec![0.5]);
        assert_eq!(s.alpha_bar_at(0), 1.0);
    }

    #[test]
    fn default_is_strictly_decreasing() {
        let s: NoiseSchedule<f64> = default_schedule();
        assert_eq!(s.steps(), DEFAULT_STEPS);
        for w in s.alpha_bar.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn default_endpoint_bounds() {
        let s: NoiseSchedule<f64> = default_schedule();
        assert!(s.alpha_bar_at(1) > 0.99);
        // Direct product evaluation for the terminal coefficient.
        let mut prod = 1.0;
        for i in 0..DEFAULT_STEPS {
            let b = DEFAULT_BETA_START
                + i as f64 / (DEFAULT_STEPS - 1) as f64 * (DEFAULT_BETA_END - DEFAULT_BETA_START);
            prod *= 1.0 - b;
        }
        assert!(prod < 0.01);
        assert_eq!(s.alpha_bar_at(DEFAULT_STEPS), prod);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(build_schedule::<f64>(0, 0.1, 0.2).is_err());
        assert!(build_schedule::<f64>(10, 0.0, 0.2).is_err());
        assert!(build_schedule::<f64>(10, 0.3, 0.2).is_err());
        assert!(build_schedule::<f64>(10, 0.3, 1.0).is_err());
    }

    #[test]
    fn out_of_range_step_rejected() {
        let s: NoiseSchedule<f64> = default_schedule();
        assert!(s.check_step(0).is_err());
        assert!(s.check_step(51).is_err());
        assert!(s.check_step(50).is_ok());
    }
}
