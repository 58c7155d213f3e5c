//! Sinusoidal timestep features.

use crate::num::Real;

/// Transformer-style sinusoidal features of a diffusion step index.
/// First half sines, second half cosines, geometric frequency ladder.
pub fn sinusoidal_features<T: Real>(t: usize, dim: usize) -> Vec<T> {
    debug_assert!(dim >= 2 && dim % 2 == 0);
    let half = dim / 2;
    let mut out = Vec::with_capacity(dim);
    for k in 0..half {
        let exponent = if half > 1 {
            k as f64 / (half - 1) as f64
        } else {
            0.0
        };
        let freq = (10_000f64).powf(-exponent);
        out.push(T::from_f64((t as f64 * freq).sin()));
    }
    for k in 0..half {
        let exponent = if half > 1 {
            k as f64 / (half - 1) as f64
        } else {
            0.0
        };
        let freq = (10_000f64).powf(-exponent);
        out.push(T::from_f64((t as f64 * freq).cos()));
    }
    out
}
