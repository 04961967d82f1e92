use std::time::Instant;

use lf_autodiff::{grad_check, Tape, Tensor};
use mdfn::apply_dynamic_filters;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Direct six-loop evaluation of the per-pixel angular filter.
#[allow(clippy::too_many_arguments)]
fn six_loop(filters: &[f64], lr: &[f64], u_n: usize, v_n: usize, x_n: usize, y_n: usize, r: usize, d: usize) -> Vec<f64> {
    let (px_n, py_n) = (r * x_n, r * y_n);
    let half = (d / 2) as i64;
    let mut out = vec![0.0; u_n * v_n * px_n * py_n];
    for u in 0..u_n {
        for v in 0..v_n {
            for p in 0..px_n {
                for q in 0..py_n {
                    let mut acc = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            let su = u as i64 + i as i64 - half;
                            let sv = v as i64 + j as i64 - half;
                            if su < 0 || sv < 0 || su >= u_n as i64 || sv >= v_n as i64 {
                                continue;
                            }
                            let f = filters[((((u * v_n + v) * px_n + p) * py_n + q) * d + i) * d + j];
                            let s = lr[((su as usize * v_n + sv as usize) * x_n + p / r) * y_n + q / r];
                            acc += f * s;
                        }
                    }
                    out[((u * v_n + v) * px_n + p) * py_n + q] = acc;
                }
            }
        }
    }
    out
}

fn run_f32(filters: &[f32], fshape: Vec<usize>, lr: &[f32], lshape: Vec<usize>) -> (Vec<usize>, Vec<f32>) {
    let mut tape = Tape::<f32>::inference();
    let f = tape.leaf(Tensor::new(fshape, filters.to_vec()).unwrap());
    let x = tape.leaf(Tensor::new(lshape, lr.to_vec()).unwrap());
    let y = apply_dynamic_filters(&mut tape, f, x).unwrap();
    (tape.shape(y).to_vec(), tape.value(y).to_vec())
}

#[test]
fn matches_six_loop_oracle_on_random_instances() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0f64;
    for _ in 0..150 {
        let (u, v) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let (x, y) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let d = if rng.random_bool(0.5) { 3 } else { 5 };
        let r = rng.random_range(1..=2);
        let nf = u * v * r * x * r * y * d * d;
        let filters: Vec<f32> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lr: Vec<f32> = (0..u * v * x * y).map(|_| rng.random_range(0.0..1.0)).collect();
        let (shape, got) = run_f32(&filters, vec![u, v, r * x, r * y, d, d], &lr, vec![u, v, x, y]);
        assert_eq!(shape, vec![u, v, r * x, r * y]);
        let f64s = |s: &[f32]| s.iter().map(|&a| a as f64).collect::<Vec<_>>();
        let want = six_loop(&f64s(&filters), &f64s(&lr), u, v, x, y, r, d);
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((*a as f64 - b).abs());
        }
    }
    assert!(worst < 1e-6, "max abs error {worst}");
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn center_delta_filter_is_nearest_neighbour() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &(u, v, x, y, r, d) in &[(5, 5, 4, 3, 2, 5), (7, 7, 6, 6, 2, 5), (3, 4, 2, 5, 4, 3), (2, 2, 3, 3, 1, 3)] {
        let lr: Vec<f32> = (0..u * v * x * y).map(|_| rng.random::<f32>()).collect();
        let dd = d * d;
        let mut filters = vec![0f32; u * v * r * x * r * y * dd];
        for k in 0..filters.len() / dd {
            filters[k * dd + dd / 2] = 1.0;
        }
        let (_, got) = run_f32(&filters, vec![u, v, r * x, r * y, d, d], &lr, vec![u, v, x, y]);
        for uu in 0..u {
            for vv in 0..v {
                for p in 0..r * x {
                    for q in 0..r * y {
                        let o = got[((uu * v + vv) * r * x + p) * r * y + q];
                        let s = lr[((uu * v + vv) * x + p / r) * y + q / r];
                        assert_eq!(o.to_bits(), s.to_bits());
                    }
                }
            }
        }
    }
}

#[test]
fn normalized_filters_preserve_constants_on_interior_views() {
    let (u, v, x, y, r, d) = (7, 7, 3, 3, 2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dd = d * d;
    let mut filters: Vec<f32> = (0..u * v * r * x * r * y * dd).map(|_| rng.random_range(0.0..1.0)).collect();
    for f in filters.chunks_mut(dd) {
        let s: f32 = f.iter().sum();
        f.iter_mut().for_each(|a| *a /= s);
    }
    let lr = vec![0.4f32; u * v * x * y];
    let (_, got) = run_f32(&filters, vec![u, v, r * x, r * y, d, d], &lr, vec![u, v, x, y]);
    let plane = r * x * r * y;
    for uu in d / 2..u - d / 2 {
        for vv in d / 2..v - d / 2 {
            for &o in &got[(uu * v + vv) * plane..][..plane] {
                assert!((o - 0.4).abs() < 1e-5, "{o}");
            }
        }
    }
    // border views lose the taps that fall off the grid
    assert!(got[0] < 0.4);
}

#[test]
fn output_shapes_follow_scale() {
    for (r, side) in [(2, 48), (4, 96)] {
        let d = 5;
        let filters = vec![0f32; 49 * side * side * d * d];
        let lr = vec![0f32; 49 * 24 * 24];
        let (shape, _) = run_f32(&filters, vec![7, 7, side, side, d, d], &lr, vec![7, 7, 24, 24]);
        assert_eq!(shape, vec![7, 7, 24 * r, 24 * r]);
    }
}

#[test]
fn rejects_mismatched_shapes() {
    let mut tape = Tape::<f32>::inference();
    let f = tape.leaf(Tensor::zeros(vec![3, 3, 5, 4, 3, 3]));
    let x = tape.leaf(Tensor::zeros(vec![3, 3, 2, 2]));
    assert!(apply_dynamic_filters(&mut tape, f, x).is_err());
    let f = tape.leaf(Tensor::zeros(vec![3, 2, 4, 4, 3, 3]));
    assert!(apply_dynamic_filters(&mut tape, f, x).is_err());
    let f = tape.leaf(Tensor::zeros(vec![3, 3, 4, 4, 3, 5]));
    assert!(apply_dynamic_filters(&mut tape, f, x).is_err());
}

#[test]
fn gradients_match_finite_differences() {
    let (u, v, x, y, r, d) = (3, 4, 2, 3, 2, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let nf = u * v * r * x * r * y * d * d;
    let filters: Vec<f64> = (0..nf).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lr: Vec<f64> = (0..u * v * x * y).map(|_| rng.random_range(-1.0..1.0)).collect();
    let weights: Vec<f64> = (0..u * v * r * x * r * y).map(|_| rng.random_range(-1.0..1.0)).collect();
    let fshape = vec![u, v, r * x, r * y, d, d];
    let lshape = vec![u, v, x, y];
    let oshape = vec![u, v, r * x, r * y];

    let (l2, w2, o2) = (lr.clone(), weights.clone(), oshape.clone());
    let wrt_filters = grad_check(
        move |tape, f| {
            let lrv = tape.constant(vec![u, v, x, y], l2.clone())?;
            let w = tape.constant(o2.clone(), w2.clone())?;
            let out = apply_dynamic_filters(tape, f, lrv)?;
            let prod = tape.mul(out, w)?;
            Ok(tape.sum(prod))
        },
        &Tensor::new(fshape.clone(), filters.clone()).unwrap(),
        1e-6,
    )
    .unwrap();
    assert!(wrt_filters.max_rel_err < 1e-3 && wrt_filters.max_abs_err < 1e-8, "{wrt_filters:?}");

    let wrt_lr = grad_check(
        move |tape, l| {
            let f = tape.constant(fshape.clone(), filters.clone())?;
            let w = tape.constant(oshape.clone(), weights.clone())?;
            let out = apply_dynamic_filters(tape, f, l)?;
            let prod = tape.mul(out, w)?;
            Ok(tape.sum(prod))
        },
        &Tensor::new(lshape, lr).unwrap(),
        1e-6,
    )
    .unwrap();
    assert!(wrt_lr.max_rel_err < 1e-3 && wrt_lr.max_abs_err < 1e-8, "{wrt_lr:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn linear_in_the_input(seed in any::<u64>(), a in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (u, v, x, y, r, d) = (3, 3, 2, 2, 2, 3);
        let filters: Vec<f32> = (0..u * v * r * x * r * y * d * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let l1: Vec<f32> = (0..u * v * x * y).map(|_| rng.random()).collect();
        let l2: Vec<f32> = (0..u * v * x * y).map(|_| rng.random()).collect();
        let mix: Vec<f32> = l1.iter().zip(&l2).map(|(p, q)| (a as f32) * p + q).collect();
        let fs = vec![u, v, r * x, r * y, d, d];
        let (_, o1) = run_f32(&filters, fs.clone(), &l1, vec![u, v, x, y]);
        let (_, o2) = run_f32(&filters, fs.clone(), &l2, vec![u, v, x, y]);
        let (_, om) = run_f32(&filters, fs, &mix, vec![u, v, x, y]);
        for ((p, q), m) in o1.iter().zip(&o2).zip(&om) {
            prop_assert!(((a as f32) * p + q - m).abs() < 1e-4);
        }
    }
}
