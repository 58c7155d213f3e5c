//! Element-wise diffusion building blocks: forward noising, imputation, and
//! classifier-free guidance combination.

use ndarray::Array2;

use crate::diffusion::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::num::Real;

fn check_same_shape<T, U>(
    context: &'static str,
    a: &Array2<T>,
    b: &Array2<U>,
) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch {
            context,
            expected: format!("{:?}", a.dim()),
            got: format!("{:?}", b.dim()),
        });
    }
    Ok(())
}

/// Noisy sample at step t: sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) eps.
pub fn forward_noise<T: Real>(
    x0: &Array2<T>,
    t: usize,
    eps: &Array2<T>,
    schedule: &NoiseSchedule<T>,
) -> Result<Array2<T>> {
    schedule.check_step(t)?;
    check_same_shape("forward_noise", x0, eps)?;
    let ab = schedule.alpha_bar_at(t);
    let a = ab.sqrt();
    let b = (T::one() - ab).sqrt();
    let mut out = x0.clone();
    out.zip_mut_with(eps, |x, &e| *x = a * *x + b * e);
    Ok(out)
}

/// Masked selection: masked entries come from `values` bitwise, the rest
/// from `sample` bitwise.
pub fn impute<T: Real>(
    sample: &Array2<T>,
    values: &Array2<T>,
    mask: &Array2<u8>,
) -> Result<Array2<T>> {
    check_same_shape("impute sample/values", sample, values)?;
    check_same_shape("impute sample/mask", sample, mask)?;
    let mut out = sample.clone();
    impute_in_place(&mut out, values, mask);
    Ok(out)
}

/// In-place variant of [`impute`] for the sampling loop. Shapes must agree.
pub fn impute_in_place<T: Real>(sample: &mut Array2<T>, values: &Array2<T>, mask: &Array2<u8>) {
    ndarray::Zip::from(sample)
        .and(values)
        .and(mask)
        .for_each(|s, &v, &m| {
            if m != 0 {
                *s = v;
            }
        });
}

/// Classifier-free guidance: w * cond + (1 - w) * uncond.
pub fn cfg_combine<T: Real>(
    cond: &Array2<T>,
    uncond: &Array2<T>,
    w: T,
) -> Result<Array2<T>> {
    check_same_shape("cfg_combine", cond, uncond)?;
    let mut out = cond.clone();
    out.zip_mut_with(uncond, |c, &u| *c = w * *c + (T::one() - w) * u);
    Ok(out)
}
