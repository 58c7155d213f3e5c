//! DDPM and DDIM samplers with a per-step imputation hook.
//!
//! Both samplers run on the clean-sample parameterization: the denoiser
//! predicts x0_hat, the DDPM posterior mean re-mixes it with the current
//! noisy sample, and DDIM takes the deterministic (eta = 0) jump. Constraint
//! handling happens three times per step: the current sample is imputed
//! before the model call, x0_hat is re-imputed after it (configurable), and
//! the final output is imputed once more, which makes constrained entries
//! bitwise equal to the signal.

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::diffusion::ops::{cfg_combine, impute_in_place};
use crate::diffusion::schedule::NoiseSchedule;
use crate::error::{Error, Result};
use crate::nn::DenoiserModel;
use crate::num::Real;

/// Anything that can serve as the denoiser in the sampling loops: the real
/// model, or closed-form stand-ins in tests.
pub trait Denoise<T: Real> {
    fn out_channels(&self) -> usize;
    fn denoise(
        &self,
        input: &Array2<T>,
        t: usize,
        label: Option<u32>,
        body_scale: Option<T>,
    ) -> Result<Array2<T>>;
}

impl<T: Real> Denoise<T> for DenoiserModel<T> {
    fn out_channels(&self) -> usize {
        self.desc.out_channels
    }
    fn denoise(
        &self,
        input: &Array2<T>,
        t: usize,
        label: Option<u32>,
        body_scale: Option<T>,
    ) -> Result<Array2<T>> {
        DenoiserModel::denoise(self, input, t, label, body_scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Ddpm,
    Ddim { steps: usize },
}

/// How constraints enter the sampling loop.
#[derive(Debug, Clone)]
pub enum Conditioning<T: Real> {
    /// No constraints; the model input is the sample itself.
    Unconditional,
    /// Stage-1 style: impute masked entries and concatenate the mask as
    /// extra input channels (model input width doubles).
    MaskConcat {
        values: Array2<T>,
        mask: Array2<u8>,
    },
    /// Stage-2 style: overwrite fixed columns with given values every step.
    OverwriteColumns {
        /// N x columns.len() replacement values, in column-list order.
        values: Array2<T>,
        columns: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct SampleRequest<T: Real> {
    pub n_frames: usize,
    pub label: Option<u32>,
    pub guidance_weight: T,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub conditioning: Conditioning<T>,
    pub body_scale: Option<T>,
    /// Whether x0_hat is re-imputed after the model call (step (c)); kept
    /// configurable for ablation.
    pub reimpute_denoised: bool,
}

impl<T: Real> SampleRequest<T> {
    pub fn unconditional(n_frames: usize, seed: u64) -> Self {
        SampleRequest {
            n_frames,
            label: None,
            guidance_weight: T::one(),
            sampler: SamplerKind::Ddpm,
            seed,
            conditioning: Conditioning::Unconditional,
            body_scale: None,
            reimpute_denoised: true,
        }
    }
}

/// Evenly spaced descending timesteps for DDIM(k) over a T-step schedule:
/// tau_i = T - floor(i*T/k). The implicit final target is step 0.
pub fn ddim_timesteps(total: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| total - i * total / k).collect()
}

fn apply_conditioning<T: Real>(x: &mut Array2<T>, cond: &Conditioning<T>) {
    match cond {
        Conditioning::Unconditional => {}
        Conditioning::MaskConcat { values, mask } => impute_in_place(x, values, mask),
        Conditioning::OverwriteColumns { values, columns } => {
            for i in 0..x.nrows() {
                for (vi, &c) in columns.iter().enumerate() {
                    x[(i, c)] = values[(i, vi)];
                }
            }
        }
    }
}

fn model_input<T: Real>(x: &Array2<T>, cond: &Conditioning<T>) -> Array2<T> {
    match cond {
        Conditioning::MaskConcat { mask, .. } => {
            let (n, d) = x.dim();
            let mut input = Array2::from_elem((n, 2 * d), T::zero());
            for i in 0..n {
                for j in 0..d {
                    input[(i, j)] = x[(i, j)];
                    input[(i, d + j)] = if mask[(i, j)] != 0 { T::one() } else { T::zero() };
                }
            }
            input
        }
        _ => x.clone(),
    }
}

fn validate_request<T: Real>(
    model: &dyn Denoise<T>,
    request: &SampleRequest<T>,
    schedule: &NoiseSchedule<T>,
) -> Result<()> {
    let d = model.out_channels();
    let n = request.n_frames;
    if let SamplerKind::Ddim { steps } = request.sampler {
        if steps < 1 || steps > schedule.steps() {
            return Err(Error::InvalidArgument {
                context: "sampler",
                reason: format!("DDIM steps {steps} outside [1, {}]", schedule.steps()),
            });
        }
    }
    match &request.conditioning {
        Conditioning::Unconditional => {}
        Conditioning::MaskConcat { values, mask } => {
            if values.dim() != (n, d) || mask.dim() != (n, d) {
                return Err(Error::ShapeMismatch {
                    context: "sampler imputation",
                    expected: format!("({n}, {d})"),
                    got: format!("values {:?}, mask {:?}", values.dim(), mask.dim()),
                });
            }
        }
        Conditioning::OverwriteColumns { values, columns } => {
            if values.dim() != (n, columns.len()) {
                return Err(Error::ShapeMismatch {
                    context: "sampler column overwrite",
                    expected: format!("({n}, {})", columns.len()),
                    got: format!("{:?}", values.dim()),
                });
            }
            if columns.iter().any(|&c| c >= d) {
                return Err(Error::InvalidArgument {
                    context: "sampler column overwrite",
                    reason: "column index out of range".into(),
                });
            }
        }
    }
    Ok(())
}

/// Predict x0_hat at step t with classifier-free guidance.
fn predict_x0<T: Real>(
    model: &dyn Denoise<T>,
    x: &Array2<T>,
    t: usize,
    request: &SampleRequest<T>,
) -> Result<Array2<T>> {
    let input = model_input(x, &request.conditioning);
    let cond_out = model.denoise(&input, t, request.label, request.body_scale)?;
    let one = T::one();
    if request.label.is_none() || request.guidance_weight == one {
        return Ok(cond_out);
    }
    let uncond_out = model.denoise(&input, t, None, request.body_scale)?;
    cfg_combine(&cond_out, &uncond_out, request.guidance_weight)
}

/// DDPM posterior mean from (x0_hat, x_t): the coefficients recover x0_hat
/// exactly at t = 1.
pub fn ddpm_mean<T: Real>(
    x0_hat: &Array2<T>,
    x_t: &Array2<T>,
    t: usize,
    schedule: &NoiseSchedule<T>,
) -> Array2<T> {
    let ab_t = schedule.alpha_bar_at(t);
    let ab_prev = schedule.alpha_bar_at(t - 1);
    let beta = schedule.beta_at(t);
    let alpha = T::one() - beta;
    let denom = T::one() - ab_t;
    let c0 = ab_prev.sqrt() * beta / denom;
    let cx = alpha.sqrt() * (T::one() - ab_prev) / denom;
    let mut out = x0_hat.clone();
    out.zip_mut_with(x_t, |o, &x| *o = c0 * *o + cx * x);
    out
}

/// Posterior variance beta_tilde at step t.
pub fn ddpm_variance<T: Real>(t: usize, schedule: &NoiseSchedule<T>) -> T {
    let ab_t = schedule.alpha_bar_at(t);
    let ab_prev = schedule.alpha_bar_at(t - 1);
    (T::one() - ab_prev) / (T::one() - ab_t) * schedule.beta_at(t)
}

/// Deterministic DDIM jump from step t to step t_next (eta = 0).
pub fn ddim_step<T: Real>(
    x0_hat: &Array2<T>,
    x_t: &Array2<T>,
    t: usize,
    t_next: usize,
    schedule: &NoiseSchedule<T>,
) -> Array2<T> {
    let ab_t = schedule.alpha_bar_at(t);
    let ab_next = schedule.alpha_bar_at(t_next);
    let sq_t = ab_t.sqrt();
    let noise_scale = (T::one() - ab_next).sqrt() / (T::one() - ab_t).sqrt();
    let signal = ab_next.sqrt();
    // x_next = sqrt(ab_next) x0 + sqrt(1-ab_next) * (x_t - sqrt(ab_t) x0) / sqrt(1-ab_t)
    let mut out = x0_hat.clone();
    out.zip_mut_with(x_t, |o, &x| {
        *o = signal * *o + noise_scale * (x - sq_t * *o);
    });
    out
}

fn check_finite<T: Real>(x: &Array2<T>, step: usize) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric {
            context: "sampler",
            step,
            reason: "non-finite intermediate sample".into(),
        });
    }
    Ok(())
}

fn standard_normal<T: Real>(rng: &mut ChaCha8Rng, shape: (usize, usize)) -> Array2<T> {
    Array2::from_shape_fn(shape, |_| {
        let v: f64 = rng.sample(StandardNormal);
        T::from_f64(v)
    })
}

/// Full sampling loop. Returns the generated N x width matrix; constrained
/// entries equal the signal bitwise.
pub fn sample<T: Real>(
    model: &dyn Denoise<T>,
    request: &SampleRequest<T>,
    schedule: &NoiseSchedule<T>,
) -> Result<Array2<T>> {
    Ok(sample_with_trace(model, request, schedule)?.0)
}

/// Like [`sample`], additionally returning the x0_hat prediction at every
/// denoising step.
pub fn sample_with_trace<T: Real>(
    model: &dyn Denoise<T>,
    request: &SampleRequest<T>,
    schedule: &NoiseSchedule<T>,
) -> Result<(Array2<T>, Vec<Array2<T>>)> {
    validate_request(model, request, schedule)?;
    let d = model.out_channels();
    let n = request.n_frames;
    let mut rng = ChaCha8Rng::seed_from_u64(request.seed);
    let mut x = standard_normal::<T>(&mut rng, (n, d));
    let mut trace = Vec::new();

    match request.sampler {
        SamplerKind::Ddpm => {
            for t in (1..=schedule.steps()).rev() {
                apply_conditioning(&mut x, &request.conditioning);
                let mut x0_hat = predict_x0(model, &x, t, request)?;
                if request.reimpute_denoised {
                    apply_conditioning(&mut x0_hat, &request.conditioning);
                }
                trace.push(x0_hat.clone());
                let mut next = ddpm_mean(&x0_hat, &x, t, schedule);
                if t > 1 {
                    let std = ddpm_variance(t, schedule).sqrt();
                    let z = standard_normal::<T>(&mut rng, (n, d));
                    next.zip_mut_with(&z, |a, &b| *a += std * b);
                }
                x = next;
                check_finite(&x, t)?;
            }
        }
        SamplerKind::Ddim { steps } => {
            let taus = ddim_timesteps(schedule.steps(), steps);
            for (i, &t) in taus.iter().enumerate() {
                let t_next = taus.get(i + 1).copied().unwrap_or(0);
                apply_conditioning(&mut x, &request.conditioning);
                let mut x0_hat = predict_x0(model, &x, t, request)?;
                if request.reimpute_denoised {
                    apply_conditioning(&mut x0_hat, &request.conditioning);
                }
                trace.push(x0_hat.clone());
                x = ddim_step(&x0_hat, &x, t, t_next, schedule);
                check_finite(&x, t)?;
            }
        }
    }
    apply_conditioning(&mut x, &request.conditioning);
    Ok((x, trace))
}
