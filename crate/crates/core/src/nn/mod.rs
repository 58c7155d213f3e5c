//! Self-contained differentiable temporal denoiser and its optimizer.

pub mod adam;
pub mod conv;
pub mod embed;
pub mod model;

pub use adam::{optimizer_step, AdamParams, OptimizerState};
pub use model::{compute_gradients, BatchItem, Cache, DenoiserModel, Descriptor, Layout};

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn tiny_descriptor(in_ch: usize, out_ch: usize, with_scale: bool) -> Descriptor {
        Descriptor {
            in_channels: in_ch,
            out_channels: out_ch,
            width: 8,
            mid_width: 12,
            cond_dim: 8,
            n_labels: 4,
            with_scale,
        }
    }

    fn random_input(rng: &mut ChaCha8Rng, n: usize, ch: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, ch), |_| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn fresh_model_with_zero_head_outputs_zero() {
        let model: DenoiserModel<f64> =
            DenoiserModel::init(tiny_descriptor(6, 5, true), 3).unwrap();
        let input = Array2::zeros((16, 6));
        let out = model.denoise(&input, 10, Some(1), Some(1.0)).unwrap();
        assert!(out.iter().all(|v| v.abs() < 10.0));
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn denoise_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model: DenoiserModel<f64> =
            DenoiserModel::init(tiny_descriptor(4, 4, false), 11).unwrap();
        let input = random_input(&mut rng, 12, 4);
        let a = model.denoise(&input, 3, Some(2), None).unwrap();
        let b = model.denoise(&input, 3, Some(2), None).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn unknown_label_rejected() {
        let model: DenoiserModel<f64> =
            DenoiserModel::init(tiny_descriptor(4, 4, false), 1).unwrap();
        let input = Array2::zeros((8, 4));
        assert!(model.denoise(&input, 1, Some(4), None).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let model: DenoiserModel<f64> =
            DenoiserModel::init(tiny_descriptor(4, 4, false), 1).unwrap();
        assert!(model.denoise(&Array2::zeros((8, 5)), 1, None, None).is_err());
        assert!(model.denoise(&Array2::zeros((10, 4)), 1, None, None).is_err());
    }

    /// Randomize all parameters (the initializer zeroes the head, which
    /// would hide head-gradient errors).
    fn randomize_params(model: &mut DenoiserModel<f64>, rng: &mut ChaCha8Rng) {
        for p in model.params.iter_mut() {
            *p = rng.gen_range(-0.3..0.3);
        }
    }

    #[test]
    fn head_bias_gradient_is_output_row_sum_for_quadratic_loss() {
        // For loss |y|^2 / 2 the head-bias gradient equals the per-channel
        // output sums, which is an analytic value independent of the net.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut model: DenoiserModel<f64> =
            DenoiserModel::init(tiny_descriptor(5, 3, true), 2).unwrap();
        randomize_params(&mut model, &mut rng);
        let input = random_input(&mut rng, 16, 5);
        let items = [BatchItem {
            input,
            t: 7,
            label: Some(0),
            body_scale: Some(1.1),
        }];
        let (_, grads, _) = compute_gradients(&model, &items, |_, out| {
            let l = 0.5 * out.iter().map(|v| v * v).sum::<f64>();
            (l, out.clone())
        })
        .unwrap();
        let out = model
            .denoise(&items[0].input, 7, Some(0), Some(1.1))
            .unwrap();
        let r = model.layout.range("head.b");
        for c in 0..3 {
            let expect: f64 = out.column(c).sum();
            assert!(
                (grads[r.start + c] - expect).abs() < 1e-8,
                "channel {c}: {} vs {expect}",
                grads[r.start + c]
            );
        }
    }

    #[test]
    fn zero_loss_weight_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut model: DenoiserModel<f64> =
            DenoiserModel::init(tiny_descriptor(4, 4, false), 2).unwrap();
        randomize_params(&mut model, &mut rng);
        let items = [BatchItem {
            input: random_input(&mut rng, 8, 4),
            t: 2,
            label: None,
            body_scale: None,
        }];
        let (l, grads, input_grads) = compute_gradients(&model, &items, |_, out| {
            (0.0, Array2::zeros(out.dim()))
        })
        .unwrap();
        assert_eq!(l, 0.0);
        assert!(grads.iter().all(|&g| g == 0.0));
        assert!(input_grads[0].iter().all(|&g| g == 0.0));
    }

    /// Central-difference check of parameter and input gradients on random
    /// coordinates, several random configurations per architecture.
    fn run_gradient_check(desc: Descriptor, seed: u64, coords: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model: DenoiserModel<f64> = DenoiserModel::init(desc.clone(), seed).unwrap();
        randomize_params(&mut model, &mut rng);
        let n = 16;
        let input = random_input(&mut rng, n, desc.in_channels);
        let t = rng.gen_range(1..=50);
        let label = if desc.n_labels > 0 && rng.gen_bool(0.7) {
            Some(rng.gen_range(0..desc.n_labels as u32))
        } else {
            None
        };
        let scale = if desc.with_scale {
            Some(rng.gen_range(0.8..1.2))
        } else {
            None
        };
        // Random linear loss keeps the check sensitive to every output.
        let sens = Array2::from_shape_fn((n, desc.out_channels), |_| rng.gen_range(-1.0..1.0));
        let loss_of = |m: &DenoiserModel<f64>, inp: &Array2<f64>| -> f64 {
            let out = m.denoise(inp, t, label, scale).unwrap();
            out.iter().zip(sens.iter()).map(|(a, b)| a * b).sum()
        };
        let items = [BatchItem {
            input: input.clone(),
            t,
            label,
            body_scale: scale,
        }];
        let (_, grads, input_grads) =
            compute_gradients(&model, &items, |_, out| {
                let l = out.iter().zip(sens.iter()).map(|(a, b)| a * b).sum();
                (l, sens.clone())
            })
            .unwrap();

        let h = 1e-5;
        for _ in 0..coords {
            let idx = rng.gen_range(0..model.param_count());
            let mut mp = model.clone();
            mp.params[idx] += h;
            let mut mm = model.clone();
            mm.params[idx] -= h;
            let fd = (loss_of(&mp, &input) - loss_of(&mm, &input)) / (2.0 * h);
            let an = grads[idx];
            let denom = fd.abs().max(an.abs()).max(1e-6);
            assert!(
                (fd - an).abs() / denom < 1e-4,
                "param {idx}: fd={fd} an={an}"
            );
        }
        for _ in 0..coords {
            let (j, c) = (rng.gen_range(0..n), rng.gen_range(0..desc.in_channels));
            let mut ip = input.clone();
            ip[(j, c)] += h;
            let mut im = input.clone();
            im[(j, c)] -= h;
            let fd = (loss_of(&model, &ip) - loss_of(&model, &im)) / (2.0 * h);
            let an = input_grads[0][(j, c)];
            let denom = fd.abs().max(an.abs()).max(1e-6);
            assert!(
                (fd - an).abs() / denom < 1e-4,
                "input ({j},{c}): fd={fd} an={an}"
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences_stage1_like() {
        for seed in 0..5 {
            run_gradient_check(tiny_descriptor(10, 5, true), 100 + seed, 25);
        }
    }

    #[test]
    fn gradients_match_finite_differences_stage2_like() {
        for seed in 0..5 {
            run_gradient_check(tiny_descriptor(7, 7, false), 200 + seed, 25);
        }
    }

    #[test]
    fn conditioning_changes_output_after_label_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut model: DenoiserModel<f64> =
            DenoiserModel::init(tiny_descriptor(4, 4, false), 5).unwrap();
        randomize_params(&mut model, &mut rng);
        let input = random_input(&mut rng, 8, 4);
        let a = model.denoise(&input, 3, Some(0), None).unwrap();
        let b = model.denoise(&input, 3, None, None).unwrap();
        let diff: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum();
        assert!(diff > 1e-9, "null label and real label must differ");
    }

    #[test]
    fn linear_teacher_regression_trains_below_1e3() {
        // Sanity of the full optimization stack: learn a linear map of the
        // input using the mean-squared objective.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let desc = tiny_descriptor(3, 2, false);
        let mut model: DenoiserModel<f64> = DenoiserModel::init(desc.clone(), 21).unwrap();
        let mut state = OptimizerState::new(
            model.param_count(),
            AdamParams {
                learning_rate: 3e-3,
                ..Default::default()
            },
        );
        let teacher = |x: &Array2<f64>| -> Array2<f64> {
            Array2::from_shape_fn((x.nrows(), 2), |(j, c)| {
                0.7 * x[(j, 0)] - 0.3 * x[(j, 1)] + if c == 1 { 0.2 * x[(j, 2)] } else { 0.0 }
            })
        };
        let mut last = f64::INFINITY;
        for step in 0..2000 {
            let items: Vec<BatchItem<f64>> = (0..8)
                .map(|_| BatchItem {
                    input: random_input(&mut rng, 8, 3),
                    t: 1 + (step % 50),
                    label: None,
                    body_scale: None,
                })
                .collect();
            let targets: Vec<Array2<f64>> = items.iter().map(|it| teacher(&it.input)).collect();
            let (loss, grads, _) = compute_gradients(&model, &items, |i, out| {
                let diff = out - &targets[i];
                let n = diff.len() as f64;
                let l = diff.iter().map(|v| v * v).sum::<f64>() / n;
                (l, diff.mapv(|v| 2.0 * v / n))
            })
            .unwrap();
            last = loss / items.len() as f64;
            let grads: Vec<f64> = grads.iter().map(|g| g / items.len() as f64).collect();
            optimizer_step(&mut state, &mut model.params, &grads).unwrap();
        }
        assert!(last < 1e-3, "final loss {last}");
    }
}

#[cfg(test)]
mod bench {
    use super::*;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::time::Instant;

    #[test]
    #[ignore]
    fn bench_training_step() {
        let desc = Descriptor::stage1(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut model: DenoiserModel<f32> = DenoiserModel::init(desc.clone(), 1).unwrap();
        for p in model.params.iter_mut() {
            *p = rng.gen_range(-0.1..0.1);
        }
        println!("params: {}", model.param_count());
        let items: Vec<BatchItem<f32>> = (0..32)
            .map(|_| BatchItem {
                input: Array2::from_shape_fn((60, desc.in_channels), |_| rng.gen_range(-1.0f32..1.0)),
                t: rng.gen_range(1..=50),
                label: Some(0),
                body_scale: Some(1.0),
            })
            .collect();
        let targets: Vec<Array2<f32>> = (0..32)
            .map(|_| Array2::from_shape_fn((60, desc.out_channels), |_| rng.gen_range(-1.0f32..1.0)))
            .collect();
        let mut state = OptimizerState::new(model.param_count(), AdamParams::default());
        // warmup + timed
        for phase in 0..2 {
            let reps = if phase == 0 { 3 } else { 20 };
            let start = Instant::now();
            for _ in 0..reps {
                let (_, grads, _) = compute_gradients(&model, &items, |i, out| {
                    let diff = out - &targets[i];
                    let n = diff.len() as f32;
                    let l = diff.iter().map(|v| v * v).sum::<f32>() / n;
                    (l, diff.mapv(|v| 2.0 * v / n))
                })
                .unwrap();
                optimizer_step(&mut state, &mut model.params, &grads).unwrap();
            }
            if phase == 1 {
                let dt = start.elapsed().as_secs_f64() / reps as f64;
                println!("per-step: {:.1} ms -> 20k steps = {:.1} min", dt * 1e3, dt * 20_000.0 / 60.0);
            }
        }
        // forward-only (sampling) cost
        let start = Instant::now();
        for _ in 0..200 {
            let _ = model.denoise(&items[0].input, 25, Some(0), Some(1.0)).unwrap();
        }
        println!("forward: {:.3} ms", start.elapsed().as_secs_f64() / 200.0 * 1e3);
    }
}
