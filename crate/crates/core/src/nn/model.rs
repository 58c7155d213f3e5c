//! The temporal encoder-decoder denoiser.
//!
//! Architecture: strided 1-D convolutions over the frame axis, two down and
//! two up levels with additive skip connections, hidden widths 64/128, SiLU
//! activations. Conditioning (sinusoidal timestep features, a learned label
//! embedding with a dedicated null row, and optionally a linear body-scale
//! term) is summed into one vector and added at every level through
//! per-level projections. The output head is zero-initialized so a fresh
//! model denoises to zero.
//!
//! Parameters live in one flat vector with named slices; the backward pass
//! is written by hand layer by layer and produces both parameter gradients
//! and input gradients (the latter drive latent-noise optimization).

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::conv::{
    add_bias_and_cond, conv1x1, conv1x1_backward, conv3_same, conv3_same_backward, conv3_stride2,
    conv3_stride2_backward, silu, silu_backward, upsample2, upsample2_backward,
};
use crate::nn::embed::sinusoidal_features;
use crate::num::Real;

/// Architecture descriptor. `in_channels`/`out_channels` distinguish the two
/// stages (keyjoint: 38 in / 19 out after mask concatenation; full body: 51
/// in and out).
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub in_channels: usize,
    pub out_channels: usize,
    /// Width of the outer levels.
    pub width: usize,
    /// Width of the innermost level.
    pub mid_width: usize,
    /// Conditioning vector size (also the sinusoidal feature size).
    pub cond_dim: usize,
    /// Number of real labels; the embedding table holds one extra null row.
    pub n_labels: usize,
    /// Whether a body-scale conditioning term exists (stage-1 goal variant).
    pub with_scale: bool,
}

impl Descriptor {
    pub fn stage1(n_labels: usize) -> Self {
        Descriptor {
            in_channels: 2 * crate::motion::KEYJOINT_DIM,
            out_channels: crate::motion::KEYJOINT_DIM,
            width: 64,
            mid_width: 128,
            cond_dim: 64,
            n_labels,
            with_scale: true,
        }
    }

    pub fn stage2(n_labels: usize) -> Self {
        Descriptor {
            in_channels: crate::motion::FULLBODY_DIM,
            out_channels: crate::motion::FULLBODY_DIM,
            width: 64,
            mid_width: 128,
            cond_dim: 64,
            n_labels,
            with_scale: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.in_channels >= 1
            && self.out_channels >= 1
            && self.width >= 2
            && self.mid_width >= 2
            && self.cond_dim >= 2
            && self.cond_dim % 2 == 0;
        if !ok {
            return Err(Error::InvalidArgument {
                context: "denoiser descriptor",
                reason: format!("{self:?}"),
            });
        }
        Ok(())
    }
}

/// One named slice of the flat parameter vector.
#[derive(Debug, Clone)]
pub struct ParamSlice {
    pub name: &'static str,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub slices: Vec<ParamSlice>,
    pub total: usize,
}

impl Layout {
    fn build(desc: &Descriptor) -> Layout {
        let (w, m, c) = (desc.width, desc.mid_width, desc.cond_dim);
        let mut slices = Vec::new();
        let mut offset = 0usize;
        let mut push = |name: &'static str, len: usize, offset: &mut usize| {
            slices.push(ParamSlice {
                name,
                offset: *offset,
                len,
            });
            *offset += len;
        };
        push("time.w", c * c, &mut offset);
        push("time.b", c, &mut offset);
        push("label.table", (desc.n_labels + 1) * c, &mut offset);
        if desc.with_scale {
            push("scale.w", c, &mut offset);
        }
        push("in.w", w * desc.in_channels * 3, &mut offset);
        push("in.b", w, &mut offset);
        push("in.cond", w * c, &mut offset);
        push("down0.w", w * w * 3, &mut offset);
        push("down0.b", w, &mut offset);
        push("down0.cond", w * c, &mut offset);
        push("down1.w", m * w * 3, &mut offset);
        push("down1.b", m, &mut offset);
        push("down1.cond", m * c, &mut offset);
        push("mid.w", m * m * 3, &mut offset);
        push("mid.b", m, &mut offset);
        push("mid.cond", m * c, &mut offset);
        push("up1.w", w * m * 3, &mut offset);
        push("up1.b", w, &mut offset);
        push("up1.cond", w * c, &mut offset);
        push("up0.w", w * w * 3, &mut offset);
        push("up0.b", w, &mut offset);
        push("up0.cond", w * c, &mut offset);
        push("head.w", desc.out_channels * w, &mut offset);
        push("head.b", desc.out_channels, &mut offset);
        Layout {
            slices,
            total: offset,
        }
    }

    pub fn range(&self, name: &str) -> std::ops::Range<usize> {
        let s = self
            .slices
            .iter()
            .find(|s| s.name == name)
            .unwrap_or_else(|| panic!("unknown parameter slice {name}"));
        s.offset..s.offset + s.len
    }
}

#[derive(Debug, Clone)]
pub struct DenoiserModel<T: Real> {
    pub desc: Descriptor,
    pub layout: Layout,
    pub params: Vec<T>,
}

/// Forward-pass buffers kept for the backward pass.
pub struct Cache<T: Real> {
    n: usize,
    t: usize,
    label_row: usize,
    scale_in: Option<T>,
    sin_t: Vec<T>,
    x: Vec<T>,
    e: Vec<T>,
    z_in: Vec<T>,
    h_in: Vec<T>,
    z_d0: Vec<T>,
    h0: Vec<T>,
    z_d1: Vec<T>,
    h1: Vec<T>,
    z_mid: Vec<T>,
    hm_up: Vec<T>,
    z_u1: Vec<T>,
    u1_up: Vec<T>,
    z_u0: Vec<T>,
    u0: Vec<T>,
}

impl<T: Real> DenoiserModel<T> {
    /// Fan-in scaled uniform initialization; output head zeroed.
    pub fn init(desc: Descriptor, seed: u64) -> Result<Self> {
        desc.validate()?;
        let layout = Layout::build(&desc);
        let mut params = vec![T::zero(); layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill_uniform = |range: std::ops::Range<usize>, limit: f64, p: &mut Vec<T>| {
            for v in &mut p[range] {
                *v = T::from_f64(rng.gen_range(-limit..limit));
            }
        };
        let c = desc.cond_dim;
        fill_uniform(layout.range("time.w"), (1.0 / c as f64).sqrt(), &mut params);
        fill_uniform(layout.range("label.table"), 0.02, &mut params);
        if desc.with_scale {
            fill_uniform(layout.range("scale.w"), 0.02, &mut params);
        }
        for (name, fan_in) in [
            ("in.w", desc.in_channels * 3),
            ("down0.w", desc.width * 3),
            ("down1.w", desc.width * 3),
            ("mid.w", desc.mid_width * 3),
            ("up1.w", desc.mid_width * 3),
            ("up0.w", desc.width * 3),
        ] {
            fill_uniform(layout.range(name), (1.0 / fan_in as f64).sqrt(), &mut params);
        }
        for name in [
            "in.cond", "down0.cond", "down1.cond", "mid.cond", "up1.cond", "up0.cond",
        ] {
            fill_uniform(layout.range(name), (1.0 / c as f64).sqrt(), &mut params);
        }
        // Biases and the whole head stay zero.
        Ok(DenoiserModel {
            desc,
            layout,
            params,
        })
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn p(&self, name: &str) -> &[T] {
        &self.params[self.layout.range(name)]
    }

    fn check_input(&self, input: &Array2<T>, label: Option<u32>) -> Result<usize> {
        let n = input.nrows();
        if input.ncols() != self.desc.in_channels {
            return Err(Error::ShapeMismatch {
                context: "denoiser input",
                expected: format!("{} channels", self.desc.in_channels),
                got: format!("{}", input.ncols()),
            });
        }
        if n < 8 || n % 4 != 0 {
            return Err(Error::InvalidArgument {
                context: "denoiser input",
                reason: format!("frame count {n} must be >= 8 and divisible by 4"),
            });
        }
        if let Some(l) = label {
            if l as usize >= self.desc.n_labels {
                return Err(Error::UnknownLabel {
                    index: l as usize,
                    vocab: self.desc.n_labels,
                });
            }
        }
        Ok(n)
    }

    /// Conditioning vector: time projection + label row (+ scale term).
    fn cond_vector(&self, t: usize, label: Option<u32>, body_scale: Option<T>) -> (Vec<T>, Vec<T>, usize) {
        let c = self.desc.cond_dim;
        let sin_t: Vec<T> = sinusoidal_features(t, c);
        let tw = self.p("time.w");
        let tb = self.p("time.b");
        let mut e = vec![T::zero(); c];
        for i in 0..c {
            let mut acc = tb[i];
            let row = &tw[i * c..(i + 1) * c];
            for (a, b) in row.iter().zip(sin_t.iter()) {
                acc += *a * *b;
            }
            e[i] = acc;
        }
        let row = label.map(|l| l as usize).unwrap_or(self.desc.n_labels);
        let table = self.p("label.table");
        for i in 0..c {
            e[i] += table[row * c + i];
        }
        if self.desc.with_scale {
            let s = body_scale.unwrap_or_else(T::one) - T::one();
            let sw = self.p("scale.w");
            for i in 0..c {
                e[i] += sw[i] * s;
            }
        }
        (e, sin_t, row)
    }

    /// Deterministic denoiser evaluation. Input and output are frame-major
    /// (N rows, channel columns).
    pub fn denoise(
        &self,
        input: &Array2<T>,
        t: usize,
        label: Option<u32>,
        body_scale: Option<T>,
    ) -> Result<Array2<T>> {
        let (out, _) = self.forward_cached(input, t, label, body_scale)?;
        Ok(out)
    }

    pub fn forward_cached(
        &self,
        input: &Array2<T>,
        t: usize,
        label: Option<u32>,
        body_scale: Option<T>,
    ) -> Result<(Array2<T>, Cache<T>)> {
        let n = self.check_input(input, label)?;
        let d = &self.desc;
        let (w, m) = (d.width, d.mid_width);
        let (n2, n4) = (n / 2, n / 4);

        // channel-major copy of the input
        let mut x = vec![T::zero(); d.in_channels * n];
        for j in 0..n {
            for ci in 0..d.in_channels {
                x[ci * n + j] = input[(j, ci)];
            }
        }
        let (e, sin_t, label_row) = self.cond_vector(t, label, body_scale);
        let cond_off = |names: &'static str, width: usize| -> Vec<T> {
            let wc = self.p(names);
            (0..width)
                .map(|c| {
                    let row = &wc[c * d.cond_dim..(c + 1) * d.cond_dim];
                    row.iter().zip(e.iter()).map(|(a, b)| *a * *b).sum()
                })
                .collect()
        };

        let mut z_in = vec![T::zero(); w * n];
        conv3_same(&x, d.in_channels, n, self.p("in.w"), w, &mut z_in);
        add_bias_and_cond(&mut z_in, w, n, self.p("in.b"), &cond_off("in.cond", w));
        let mut h_in = vec![T::zero(); w * n];
        silu(&z_in, &mut h_in);

        let mut z_d0 = vec![T::zero(); w * n2];
        conv3_stride2(&h_in, w, n, self.p("down0.w"), w, &mut z_d0);
        add_bias_and_cond(&mut z_d0, w, n2, self.p("down0.b"), &cond_off("down0.cond", w));
        let mut h0 = vec![T::zero(); w * n2];
        silu(&z_d0, &mut h0);

        let mut z_d1 = vec![T::zero(); m * n4];
        conv3_stride2(&h0, w, n2, self.p("down1.w"), m, &mut z_d1);
        add_bias_and_cond(&mut z_d1, m, n4, self.p("down1.b"), &cond_off("down1.cond", m));
        let mut h1 = vec![T::zero(); m * n4];
        silu(&z_d1, &mut h1);

        let mut z_mid = vec![T::zero(); m * n4];
        conv3_same(&h1, m, n4, self.p("mid.w"), m, &mut z_mid);
        add_bias_and_cond(&mut z_mid, m, n4, self.p("mid.b"), &cond_off("mid.cond", m));
        let mut hm = vec![T::zero(); m * n4];
        silu(&z_mid, &mut hm);

        let mut hm_up = vec![T::zero(); m * n2];
        upsample2(&hm, m, n4, &mut hm_up);
        let mut z_u1 = vec![T::zero(); w * n2];
        conv3_same(&hm_up, m, n2, self.p("up1.w"), w, &mut z_u1);
        add_bias_and_cond(&mut z_u1, w, n2, self.p("up1.b"), &cond_off("up1.cond", w));
        let mut u1 = vec![T::zero(); w * n2];
        silu(&z_u1, &mut u1);
        for (a, b) in u1.iter_mut().zip(h0.iter()) {
            *a += *b; // skip connection
        }

        let mut u1_up = vec![T::zero(); w * n];
        upsample2(&u1, w, n2, &mut u1_up);
        let mut z_u0 = vec![T::zero(); w * n];
        conv3_same(&u1_up, w, n, self.p("up0.w"), w, &mut z_u0);
        add_bias_and_cond(&mut z_u0, w, n, self.p("up0.b"), &cond_off("up0.cond", w));
        let mut u0 = vec![T::zero(); w * n];
        silu(&z_u0, &mut u0);
        for (a, b) in u0.iter_mut().zip(h_in.iter()) {
            *a += *b; // skip connection
        }

        let mut y = vec![T::zero(); d.out_channels * n];
        conv1x1(&u0, w, n, self.p("head.w"), d.out_channels, &mut y);
        let hb = self.p("head.b");
        for co in 0..d.out_channels {
            for yj in y[co * n..(co + 1) * n].iter_mut() {
                *yj += hb[co];
            }
        }

        let mut out = Array2::from_elem((n, d.out_channels), T::zero());
        for j in 0..n {
            for co in 0..d.out_channels {
                out[(j, co)] = y[co * n + j];
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "denoiser output",
                detail: format!("t={t}"),
            });
        }
        let cache = Cache {
            n,
            t,
            label_row,
            scale_in: if d.with_scale {
                Some(body_scale.unwrap_or_else(T::one) - T::one())
            } else {
                None
            },
            sin_t,
            x,
            e,
            z_in,
            h_in,
            z_d0,
            h0,
            z_d1,
            h1,
            z_mid,
            hm_up,
            z_u1,
            u1_up,
            z_u0,
            u0,
        };
        Ok((out, cache))
    }

    /// Backward pass. `d_out` is dL/d(output) frame-major; returns parameter
    /// gradients (flat, model layout) and dL/d(input) frame-major.
    pub fn backward(&self, cache: &Cache<T>, d_out: &Array2<T>) -> Result<(Vec<T>, Array2<T>)> {
        let d = &self.desc;
        let n = cache.n;
        if d_out.dim() != (n, d.out_channels) {
            return Err(Error::ShapeMismatch {
                context: "denoiser backward",
                expected: format!("({n}, {})", d.out_channels),
                got: format!("{:?}", d_out.dim()),
            });
        }
        let (w, m) = (d.width, d.mid_width);
        let (n2, n4) = (n / 2, n / 4);
        let mut grads = vec![T::zero(); self.layout.total];
        let mut de = vec![T::zero(); d.cond_dim];

        let mut dy = vec![T::zero(); d.out_channels * n];
        for j in 0..n {
            for co in 0..d.out_channels {
                dy[co * n + j] = d_out[(j, co)];
            }
        }

        // head
        let mut d_u0 = vec![T::zero(); w * n];
        {
            let r_w = self.layout.range("head.w");
            let r_b = self.layout.range("head.b");
            let mut dw = vec![T::zero(); r_w.len()];
            conv1x1_backward(&dy, &cache.u0, w, n, self.p("head.w"), d.out_channels, &mut d_u0, &mut dw);
            grads[r_w].copy_from_slice(&dw);
            for co in 0..d.out_channels {
                let s: T = dy[co * n..(co + 1) * n].iter().copied().sum();
                grads[r_b.start + co] = s;
            }
        }

        // helper: conditioned conv block backward shared by all levels.
        // z = conv(input) + b + W_cond e; h = silu(z); d_h given.
        // Returns d_input; accumulates dw, db, dW_cond, de.
        let block_back = |d_h: &[T],
                              z: &[T],
                              block_in: &[T],
                              in_ch: usize,
                              in_n: usize,
                              out_ch: usize,
                              out_n: usize,
                              stride2: bool,
                              w_name: &'static str,
                              b_name: &'static str,
                              cond_name: &'static str,
                              grads: &mut Vec<T>,
                              de: &mut Vec<T>|
         -> Vec<T> {
            let mut dz = vec![T::zero(); out_ch * out_n];
            silu_backward(d_h, z, &mut dz);
            // bias and conditioning gradients from row sums of dz
            let rb = self.layout.range(b_name);
            let rc = self.layout.range(cond_name);
            let wc = self.p(cond_name);
            for c in 0..out_ch {
                let s: T = dz[c * out_n..(c + 1) * out_n].iter().copied().sum();
                grads[rb.start + c] += s;
                for k in 0..d.cond_dim {
                    grads[rc.start + c * d.cond_dim + k] += s * cache.e[k];
                    de[k] += s * wc[c * d.cond_dim + k];
                }
            }
            let rw = self.layout.range(w_name);
            let mut dw = vec![T::zero(); rw.len()];
            let mut d_in = vec![T::zero(); in_ch * in_n];
            if stride2 {
                conv3_stride2_backward(&dz, block_in, in_ch, in_n, self.p(w_name), out_ch, &mut d_in, &mut dw);
            } else {
                conv3_same_backward(&dz, block_in, in_ch, in_n, self.p(w_name), out_ch, &mut d_in, &mut dw);
            }
            for (g, v) in grads[rw].iter_mut().zip(dw.iter()) {
                *g += *v;
            }
            d_in
        };

        // up0: u0 = silu(z_u0) + h_in
        let d_u1_up = block_back(
            &d_u0, &cache.z_u0, &cache.u1_up, w, n, w, n, false, "up0.w", "up0.b", "up0.cond",
            &mut grads, &mut de,
        );
        let mut d_h_in = d_u0; // skip path
        let mut d_u1 = vec![T::zero(); w * n2];
        upsample2_backward(&d_u1_up, w, n2, &mut d_u1);

        // up1: u1 = silu(z_u1) + h0
        let d_hm_up = block_back(
            &d_u1, &cache.z_u1, &cache.hm_up, m, n2, w, n2, false, "up1.w", "up1.b", "up1.cond",
            &mut grads, &mut de,
        );
        let mut d_h0 = d_u1; // skip path
        let mut d_hm = vec![T::zero(); m * n4];
        upsample2_backward(&d_hm_up, m, n4, &mut d_hm);

        // mid
        let d_h1 = block_back(
            &d_hm, &cache.z_mid, &cache.h1, m, n4, m, n4, false, "mid.w", "mid.b", "mid.cond",
            &mut grads, &mut de,
        );

        // down1
        let d_h0_more = block_back(
            &d_h1, &cache.z_d1, &cache.h0, w, n2, m, n4, true, "down1.w", "down1.b", "down1.cond",
            &mut grads, &mut de,
        );
        for (a, b) in d_h0.iter_mut().zip(d_h0_more.iter()) {
            *a += *b;
        }

        // down0
        let d_h_in_more = block_back(
            &d_h0, &cache.z_d0, &cache.h_in, w, n, w, n2, true, "down0.w", "down0.b", "down0.cond",
            &mut grads, &mut de,
        );
        for (a, b) in d_h_in.iter_mut().zip(d_h_in_more.iter()) {
            *a += *b;
        }

        // in
        let d_x = block_back(
            &d_h_in, &cache.z_in, &cache.x, d.in_channels, n, w, n, false, "in.w", "in.b",
            "in.cond", &mut grads, &mut de,
        );

        // conditioning parameters
        {
            let rt_w = self.layout.range("time.w");
            let rt_b = self.layout.range("time.b");
            for i in 0..d.cond_dim {
                grads[rt_b.start + i] += de[i];
                for k in 0..d.cond_dim {
                    grads[rt_w.start + i * d.cond_dim + k] += de[i] * cache.sin_t[k];
                }
            }
            let rl = self.layout.range("label.table");
            for i in 0..d.cond_dim {
                grads[rl.start + cache.label_row * d.cond_dim + i] += de[i];
            }
            if let Some(s) = cache.scale_in {
                let rs = self.layout.range("scale.w");
                for i in 0..d.cond_dim {
                    grads[rs.start + i] += de[i] * s;
                }
            }
        }

        let mut d_input = Array2::from_elem((n, d.in_channels), T::zero());
        for j in 0..n {
            for ci in 0..d.in_channels {
                d_input[(j, ci)] = d_x[ci * n + j];
            }
        }
        let _ = cache.t;
        Ok((grads, d_input))
    }
}

/// One batch element for gradient evaluation.
pub struct BatchItem<T: Real> {
    pub input: Array2<T>,
    pub t: usize,
    pub label: Option<u32>,
    pub body_scale: Option<T>,
}

/// Evaluates the summed loss and its gradients over a batch. The loss
/// closure maps (item index, denoiser output) to a scalar and dL/d(output).
/// Per-sample evaluation runs in parallel; the reduction is in item order,
/// so results are deterministic.
pub fn compute_gradients<T, F>(
    model: &DenoiserModel<T>,
    items: &[BatchItem<T>],
    loss: F,
) -> Result<(T, Vec<T>, Vec<Array2<T>>)>
where
    T: Real,
    F: Fn(usize, &Array2<T>) -> (T, Array2<T>) + Sync,
{
    use rayon::prelude::*;
    let per_item: Vec<Result<(T, Vec<T>, Array2<T>)>> = items
        .par_iter()
        .enumerate()
        .map(|(i, item)| {
            let (out, cache) = model.forward_cached(&item.input, item.t, item.label, item.body_scale)?;
            let (l, d_out) = loss(i, &out);
            if !l.is_finite() {
                return Err(Error::NonFinite {
                    context: "loss",
                    detail: format!("batch item {i}, t={}", item.t),
                });
            }
            let (grads, d_input) = model.backward(&cache, &d_out)?;
            Ok((l, grads, d_input))
        })
        .collect();

    let mut total = T::zero();
    let mut grads = vec![T::zero(); model.param_count()];
    let mut input_grads = Vec::with_capacity(items.len());
    for r in per_item {
        let (l, g, di) = r?;
        total += l;
        for (a, b) in grads.iter_mut().zip(g.iter()) {
            *a += *b;
        }
        input_grads.push(di);
    }
    Ok((total, grads, input_grads))
}
