//! 1-D convolution kernels over the frame axis, with hand-written backward
//! passes. Buffers are channel-major: element (c, j) lives at `c * n + j`.

use crate::num::Real;

/// y += conv(x) with kernel size 3, stride 1, zero padding 1.
/// Weight layout: `[out_ch][in_ch][3]`.
pub fn conv3_same<T: Real>(
    x: &[T],
    in_ch: usize,
    n: usize,
    w: &[T],
    out_ch: usize,
    y: &mut [T],
) {
    debug_assert_eq!(x.len(), in_ch * n);
    debug_assert_eq!(y.len(), out_ch * n);
    debug_assert!(n >= 2);
    for co in 0..out_ch {
        let yrow = &mut y[co * n..(co + 1) * n];
        for ci in 0..in_ch {
            let xrow = &x[ci * n..(ci + 1) * n];
            let wb = (co * in_ch + ci) * 3;
            let (w0, w1, w2) = (w[wb], w[wb + 1], w[wb + 2]);
            yrow[0] += w1 * xrow[0] + w2 * xrow[1];
            for (yj, win) in yrow[1..n - 1].iter_mut().zip(xrow.windows(3)) {
                *yj += w0 * win[0] + w1 * win[1] + w2 * win[2];
            }
            yrow[n - 1] += w0 * xrow[n - 2] + w1 * xrow[n - 1];
        }
    }
}

/// Backward of [`conv3_same`]: accumulates dx, dw (same layouts as x, w).
pub fn conv3_same_backward<T: Real>(
    dy: &[T],
    x: &[T],
    in_ch: usize,
    n: usize,
    w: &[T],
    out_ch: usize,
    dx: &mut [T],
    dw: &mut [T],
) {
    for co in 0..out_ch {
        let dyrow = &dy[co * n..(co + 1) * n];
        for ci in 0..in_ch {
            let xrow = &x[ci * n..(ci + 1) * n];
            let dxrow = &mut dx[ci * n..(ci + 1) * n];
            let wb = (co * in_ch + ci) * 3;
            let (w0, w1, w2) = (w[wb], w[wb + 1], w[wb + 2]);
            // dL/dx[j] = w0 dy[j+1] + w1 dy[j] + w2 dy[j-1]
            dxrow[0] += w1 * dyrow[0] + w0 * dyrow[1];
            for (dxj, win) in dxrow[1..n - 1].iter_mut().zip(dyrow.windows(3)) {
                *dxj += w2 * win[0] + w1 * win[1] + w0 * win[2];
            }
            dxrow[n - 1] += w2 * dyrow[n - 2] + w1 * dyrow[n - 1];
            // dL/dw taps are lagged dot products.
            let (g0, g1, g2) = lagged_dots(dyrow, xrow);
            dw[wb] += g0;
            dw[wb + 1] += g1;
            dw[wb + 2] += g2;
        }
    }
}

/// Dot product with four independent accumulators to break the add
/// dependency chain (floating-point reductions do not auto-vectorize).
#[inline]
fn dot4<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (pa, pb) in ca.zip(cb) {
        acc[0] += pa[0] * pb[0];
        acc[1] += pa[1] * pb[1];
        acc[2] += pa[2] * pb[2];
        acc[3] += pa[3] * pb[3];
    }
    for (x, y) in ra.iter().zip(rb.iter()) {
        acc[0] += *x * *y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3])
}

/// The three lagged dot products a kernel-3 weight gradient needs.
#[inline]
fn lagged_dots<T: Real>(d: &[T], x: &[T]) -> (T, T, T) {
    let n = d.len();
    (
        dot4(&d[1..], &x[..n - 1]),
        dot4(d, x),
        dot4(&d[..n - 1], &x[1..]),
    )
}

/// y += conv(x) with kernel size 3, stride 2, zero padding 1. Output length
/// is n/2; n must be even.
pub fn conv3_stride2<T: Real>(
    x: &[T],
    in_ch: usize,
    n: usize,
    w: &[T],
    out_ch: usize,
    y: &mut [T],
) {
    debug_assert!(n % 2 == 0 && n >= 2);
    let m = n / 2;
    debug_assert_eq!(y.len(), out_ch * m);
    for co in 0..out_ch {
        let yrow = &mut y[co * m..(co + 1) * m];
        for ci in 0..in_ch {
            let xrow = &x[ci * n..(ci + 1) * n];
            let wb = (co * in_ch + ci) * 3;
            let (w0, w1, w2) = (w[wb], w[wb + 1], w[wb + 2]);
            yrow[0] += w1 * xrow[0] + w2 * xrow[1];
            for j in 1..m {
                yrow[j] += w0 * xrow[2 * j - 1] + w1 * xrow[2 * j] + w2 * xrow[2 * j + 1];
            }
        }
    }
}

/// Backward of [`conv3_stride2`].
pub fn conv3_stride2_backward<T: Real>(
    dy: &[T],
    x: &[T],
    in_ch: usize,
    n: usize,
    w: &[T],
    out_ch: usize,
    dx: &mut [T],
    dw: &mut [T],
) {
    let m = n / 2;
    for co in 0..out_ch {
        let dyrow = &dy[co * m..(co + 1) * m];
        for ci in 0..in_ch {
            let xrow = &x[ci * n..(ci + 1) * n];
            let dxrow = &mut dx[ci * n..(ci + 1) * n];
            let wb = (co * in_ch + ci) * 3;
            let (w0, w1, w2) = (w[wb], w[wb + 1], w[wb + 2]);
            let mut g0 = T::zero();
            let mut g1 = T::zero();
            let mut g2 = T::zero();
            for j in 0..m {
                let d = dyrow[j];
                if j >= 1 {
                    dxrow[2 * j - 1] += w0 * d;
                    g0 += d * xrow[2 * j - 1];
                }
                dxrow[2 * j] += w1 * d;
                g1 += d * xrow[2 * j];
                dxrow[2 * j + 1] += w2 * d;
                g2 += d * xrow[2 * j + 1];
            }
            dw[wb] += g0;
            dw[wb + 1] += g1;
            dw[wb + 2] += g2;
        }
    }
}

/// y += W x (pointwise / kernel-1 convolution). Weight layout `[out][in]`.
pub fn conv1x1<T: Real>(x: &[T], in_ch: usize, n: usize, w: &[T], out_ch: usize, y: &mut [T]) {
    for co in 0..out_ch {
        let yrow = &mut y[co * n..(co + 1) * n];
        for ci in 0..in_ch {
            let c = w[co * in_ch + ci];
            let xrow = &x[ci * n..(ci + 1) * n];
            for (yj, xj) in yrow.iter_mut().zip(xrow.iter()) {
                *yj += c * *xj;
            }
        }
    }
}

/// Backward of [`conv1x1`].
pub fn conv1x1_backward<T: Real>(
    dy: &[T],
    x: &[T],
    in_ch: usize,
    n: usize,
    w: &[T],
    out_ch: usize,
    dx: &mut [T],
    dw: &mut [T],
) {
    for co in 0..out_ch {
        let dyrow = &dy[co * n..(co + 1) * n];
        for ci in 0..in_ch {
            let c = w[co * in_ch + ci];
            let xrow = &x[ci * n..(ci + 1) * n];
            let dxrow = &mut dx[ci * n..(ci + 1) * n];
            for (dxj, dyj) in dxrow.iter_mut().zip(dyrow.iter()) {
                *dxj += c * *dyj;
            }
            dw[co * in_ch + ci] += dot4(dyrow, xrow);
        }
    }
}

/// Nearest-neighbour temporal upsampling by 2: out length 2n.
pub fn upsample2<T: Real>(x: &[T], ch: usize, n: usize, y: &mut [T]) {
    debug_assert_eq!(y.len(), ch * 2 * n);
    for c in 0..ch {
        let xrow = &x[c * n..(c + 1) * n];
        let yrow = &mut y[c * 2 * n..(c + 1) * 2 * n];
        for j in 0..n {
            yrow[2 * j] = xrow[j];
            yrow[2 * j + 1] = xrow[j];
        }
    }
}

/// Backward of [`upsample2`]: dx[j] = dy[2j] + dy[2j+1].
pub fn upsample2_backward<T: Real>(dy: &[T], ch: usize, n: usize, dx: &mut [T]) {
    for c in 0..ch {
        let dyrow = &dy[c * 2 * n..(c + 1) * 2 * n];
        let dxrow = &mut dx[c * n..(c + 1) * n];
        for j in 0..n {
            dxrow[j] += dyrow[2 * j] + dyrow[2 * j + 1];
        }
    }
}

/// Adds per-channel bias and conditioning offset: z[c][j] += b[c] + cond[c].
pub fn add_bias_and_cond<T: Real>(z: &mut [T], ch: usize, n: usize, bias: &[T], cond: &[T]) {
    for c in 0..ch {
        let add = bias[c] + cond[c];
        for zj in z[c * n..(c + 1) * n].iter_mut() {
            *zj += add;
        }
    }
}

pub fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// SiLU activation applied out-of-place: h = z * sigmoid(z).
pub fn silu<T: Real>(z: &[T], h: &mut [T]) {
    for (hj, &zj) in h.iter_mut().zip(z.iter()) {
        *hj = zj * sigmoid(zj);
    }
}

/// dL/dz given dL/dh and the pre-activation z.
pub fn silu_backward<T: Real>(dh: &[T], z: &[T], dz: &mut [T]) {
    for ((dzj, &dhj), &zj) in dz.iter_mut().zip(dh.iter()).zip(z.iter()) {
        let s = sigmoid(zj);
        *dzj = dhj * s * (T::one() + zj * (T::one() - s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn randvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Finite-difference check of a layer's backward pass.
    fn check_layer<F, B>(in_len: usize, w_len: usize, out_len: usize, fwd: F, bwd: B)
    where
        F: Fn(&[f64], &[f64], &mut [f64]),
        B: Fn(&[f64], &[f64], &[f64], &mut [f64], &mut [f64]),
    {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = randvec(&mut rng, in_len);
        let w = randvec(&mut rng, w_len);
        let dy = randvec(&mut rng, out_len);
        let mut y = vec![0.0; out_len];
        fwd(&x, &w, &mut y);
        let mut dx = vec![0.0; in_len];
        let mut dw = vec![0.0; w_len];
        bwd(&dy, &x, &w, &mut dx, &mut dw);
        // loss = dot(dy, fwd(x, w))
        let loss = |x: &[f64], w: &[f64]| {
            let mut y = vec![0.0; out_len];
            fwd(x, w, &mut y);
            y.iter().zip(dy.iter()).map(|(a, b)| a * b).sum::<f64>()
        };
        let h = 1e-6;
        for idx in (0..in_len).step_by(in_len / 7 + 1) {
            let mut xp = x.clone();
            xp[idx] += h;
            let mut xm = x.clone();
            xm[idx] -= h;
            let fd = (loss(&xp, &w) - loss(&xm, &w)) / (2.0 * h);
            assert!((fd - dx[idx]).abs() < 1e-6, "dx[{idx}]: fd={fd} an={}", dx[idx]);
        }
        for idx in (0..w_len).step_by(w_len / 7 + 1) {
            let mut wp = w.clone();
            wp[idx] += h;
            let mut wm = w.clone();
            wm[idx] -= h;
            let fd = (loss(&x, &wp) - loss(&x, &wm)) / (2.0 * h);
            assert!((fd - dw[idx]).abs() < 1e-6, "dw[{idx}]: fd={fd} an={}", dw[idx]);
        }
    }

    #[test]
    fn conv3_same_backward_matches_fd() {
        let (ic, oc, n) = (3, 4, 12);
        check_layer(
            ic * n,
            oc * ic * 3,
            oc * n,
            |x, w, y| conv3_same(x, ic, n, w, oc, y),
            |dy, x, w, dx, dw| conv3_same_backward(dy, x, ic, n, w, oc, dx, dw),
        );
    }

    #[test]
    fn conv3_stride2_backward_matches_fd() {
        let (ic, oc, n) = (3, 5, 12);
        check_layer(
            ic * n,
            oc * ic * 3,
            oc * n / 2,
            |x, w, y| conv3_stride2(x, ic, n, w, oc, y),
            |dy, x, w, dx, dw| conv3_stride2_backward(dy, x, ic, n, w, oc, dx, dw),
        );
    }

    #[test]
    fn conv1x1_backward_matches_fd() {
        let (ic, oc, n) = (4, 3, 10);
        check_layer(
            ic * n,
            oc * ic,
            oc * n,
            |x, w, y| conv1x1(x, ic, n, w, oc, y),
            |dy, x, w, dx, dw| conv1x1_backward(dy, x, ic, n, w, oc, dx, dw),
        );
    }

    #[test]
    fn upsample_round_trip_gradient() {
        let (ch, n) = (2, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = randvec(&mut rng, ch * n);
        let mut y = vec![0.0; ch * 2 * n];
        upsample2(&x, ch, n, &mut y);
        for c in 0..ch {
            for j in 0..n {
                assert_eq!(y[c * 2 * n + 2 * j], x[c * n + j]);
                assert_eq!(y[c * 2 * n + 2 * j + 1], x[c * n + j]);
            }
        }
        let dy = randvec(&mut rng, ch * 2 * n);
        let mut dx = vec![0.0; ch * n];
        upsample2_backward(&dy, ch, n, &mut dx);
        for c in 0..ch {
            for j in 0..n {
                assert_eq!(dx[c * n + j], dy[c * 2 * n + 2 * j] + dy[c * 2 * n + 2 * j + 1]);
            }
        }
    }

    #[test]
    fn silu_gradient_matches_fd() {
        let z = [-2.0, -0.5, 0.0, 0.7, 3.0];
        let dh = [1.0, -0.3, 0.5, 2.0, -1.0];
        let mut dz = [0.0; 5];
        silu_backward(&dh, &z, &mut dz);
        let h = 1e-6;
        for i in 0..5 {
            let f = |v: f64| v * sigmoid(v) * dh[i];
            let fd = (f(z[i] + h) - f(z[i] - h)) / (2.0 * h);
            assert!((fd - dz[i]).abs() < 1e-8);
        }
    }
}
