use lf_autodiff::{Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Direct summation with explicit bounds checks.
#[allow(clippy::too_many_arguments)]
fn conv_oracle(
    x: &[f64], w: &[f64], b: &[f64],
    (n, cin, h, wd): (usize, usize, usize, usize),
    (cout, kh, kw): (usize, usize, usize),
    (ph, pw): (usize, usize),
) -> Vec<f64> {
    let oh = h + 2 * ph + 1 - kh;
    let ow = wd + 2 * pw + 1 - kw;
    let mut y = vec![0.0; n * cout * oh * ow];
    for bi in 0..n {
        for co in 0..cout {
            for i in 0..oh {
                for j in 0..ow {
                    let mut acc = b[co];
                    for ci in 0..cin {
                        for ki in 0..kh {
                            for kj in 0..kw {
                                let ii = i as isize + ki as isize - ph as isize;
                                let jj = j as isize + kj as isize - pw as isize;
                                if ii < 0 || jj < 0 || ii >= h as isize || jj >= wd as isize {
                                    continue;
                                }
                                acc += w[((co * cin + ci) * kh + ki) * kw + kj]
                                    * x[((bi * cin + ci) * h + ii as usize) * wd + jj as usize];
                            }
                        }
                    }
                    y[((bi * cout + co) * oh + i) * ow + j] = acc;
                }
            }
        }
    }
    y
}

#[test]
fn conv2d_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cases = [
        ((2, 8, 9, 9), (5, 3, 3), (1, 1)),
        ((1, 3, 7, 5), (4, 3, 3), (0, 0)),
        ((2, 2, 4, 6), (3, 1, 1), (0, 0)),
        ((1, 4, 5, 5), (2, 3, 3), (2, 1)),
        ((3, 1, 7, 24), (2, 3, 3), (1, 1)),
        ((1, 2, 6, 6), (3, 5, 3), (2, 1)),
    ];
    for (xd, wd, pad) in cases {
        let (n, cin, h, w) = xd;
        let (cout, kh, kw) = wd;
        let xv = random(&mut rng, n * cin * h * w);
        let wv = random(&mut rng, cout * cin * kh * kw);
        let bv = random(&mut rng, cout);
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(vec![n, cin, h, w], xv.clone()).unwrap();
        let wt = tape.constant(vec![cout, cin, kh, kw], wv.clone()).unwrap();
        let b = tape.constant(vec![cout], bv.clone()).unwrap();
        let y = tape.conv2d(x, wt, b, pad).unwrap();
        let want = conv_oracle(&xv, &wv, &bv, xd, wd, pad);
        let diff = tape.value(y).iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-6, "case {xd:?} {wd:?} {pad:?}: max diff {diff}");
    }
}

#[test]
fn conv2d_unit_scale_kernel() {
    let mut tape = Tape::<f32>::new();
    let xv: Vec<f32> = (0..12).map(|v| v as f32 - 4.0).collect();
    let x = tape.constant(vec![1, 1, 3, 4], xv.clone()).unwrap();
    let w = tape.constant(vec![1, 1, 1, 1], vec![2.0]).unwrap();
    let b = tape.constant(vec![1], vec![0.0]).unwrap();
    let y = tape.conv2d(x, w, b, (0, 0)).unwrap();
    let want: Vec<f32> = xv.iter().map(|v| 2.0 * v).collect();
    assert_eq!(tape.value(y), want.as_slice());
}

#[test]
fn conv2d_impulse_response() {
    let mut tape = Tape::<f32>::new();
    let mut xv = vec![0.0; 25];
    xv[12] = 1.0;
    let x = tape.constant(vec![1, 1, 5, 5], xv).unwrap();
    let w = tape.constant(vec![1, 1, 3, 3], vec![1.0; 9]).unwrap();
    let b = tape.constant(vec![1], vec![0.0]).unwrap();
    let y = tape.conv2d(x, w, b, (1, 1)).unwrap();
    let out = tape.value(y);
    for i in 0..5 {
        for j in 0..5 {
            let inside = (1..=3).contains(&i) && (1..=3).contains(&j);
            assert_eq!(out[i * 5 + j], if inside { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn conv2d_errors() {
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(vec![1, 2, 3, 3], vec![0.0; 18]).unwrap();
    let w = tape.constant(vec![1, 3, 3, 3], vec![0.0; 27]).unwrap();
    let b = tape.constant(vec![1], vec![0.0]).unwrap();
    assert!(tape.conv2d(x, w, b, (1, 1)).is_err(), "channel mismatch");
    let w = tape.constant(vec![1, 2, 5, 5], vec![0.0; 50]).unwrap();
    assert!(tape.conv2d(x, w, b, (0, 0)).is_err(), "kernel larger than input");
    assert!(tape.conv2d(x, w, b, (1, 1)).is_ok());
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn conv_transpose_is_adjoint_of_conv() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for &(n, cin, cout, h, k) in &[(1usize, 3usize, 2usize, 6usize, 3usize), (2, 2, 4, 5, 5), (1, 4, 1, 7, 1)] {
        let pad = (k - 1) / 2;
        let xv = random(&mut rng, n * cin * h * h);
        let yv = random(&mut rng, n * cout * h * h);
        let wv = random(&mut rng, cout * cin * k * k);
        let mut tape = Tape::<f64>::new();
        let x = tape.constant(vec![n, cin, h, h], xv.clone()).unwrap();
        let y = tape.constant(vec![n, cout, h, h], yv.clone()).unwrap();
        let w = tape.constant(vec![cout, cin, k, k], wv).unwrap();
        let b_out = tape.constant(vec![cout], vec![0.0; cout]).unwrap();
        let b_in = tape.constant(vec![cin], vec![0.0; cin]).unwrap();
        let cx = tape.conv2d(x, w, b_out, (pad, pad)).unwrap();
        // The same buffer read as a (cin_t = cout, cout_t = cin, k, k) transposed weight.
        let ty = tape.conv_transpose2d(y, w, b_in, 1, pad).unwrap();
        assert_eq!(tape.shape(ty), &[n, cin, h, h]);
        let lhs = dot(tape.value(cx), &yv);
        let rhs = dot(&xv, tape.value(ty));
        assert!((lhs - rhs).abs() < 1e-5 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn strided_transpose_with_unit_kernel_interleaves_zeros() {
    let mut tape = Tape::<f32>::new();
    let x = tape.constant(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
    let w = tape.constant(vec![1, 1, 1, 1], vec![1.0]).unwrap();
    let b = tape.constant(vec![1], vec![0.0]).unwrap();
    let y = tape.conv_transpose2d(x, w, b, 2, 0).unwrap();
    assert_eq!(tape.shape(y), &[1, 1, 3, 3]);
    assert_eq!(tape.value(y), &[1.0, 0.0, 2.0, 0.0, 0.0, 0.0, 3.0, 0.0, 4.0]);
}

#[test]
fn upsampling_transpose_shape() {
    let mut tape = Tape::<f32>::new();
    for (r, c_out) in [(2usize, 1usize), (4, 3)] {
        let x = tape.constant(vec![1, 5, 12, 12], vec![0.5; 5 * 144]).unwrap();
        let w = tape.constant(vec![5, c_out, 2 * r, 2 * r], vec![0.1; 5 * c_out * 4 * r * r]).unwrap();
        let b = tape.constant(vec![c_out], vec![0.0; c_out]).unwrap();
        let y = tape.conv_transpose2d(x, w, b, r, r / 2).unwrap();
        assert_eq!(tape.shape(y), &[1, c_out, 12 * r, 12 * r]);
    }
}

#[test]
fn strided_transpose_matches_scatter_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (n, cin, cout, h, w, k, s, p) = (2, 3, 2, 3, 4, 4, 2, 1);
    let xv = random(&mut rng, n * cin * h * w);
    let wv = random(&mut rng, cin * cout * k * k);
    let bv = random(&mut rng, cout);
    let oh = (h - 1) * s + k - 2 * p;
    let ow = (w - 1) * s + k - 2 * p;
    let mut want = vec![0.0; n * cout * oh * ow];
    for bi in 0..n {
        for co in 0..cout {
            for i in 0..oh {
                for j in 0..ow {
                    want[((bi * cout + co) * oh + i) * ow + j] = bv[co];
                }
            }
            for ci in 0..cin {
                for i in 0..h {
                    for j in 0..w {
                        for ki in 0..k {
                            for kj in 0..k {
                                let oi = (i * s + ki) as isize - p as isize;
                                let oj = (j * s + kj) as isize - p as isize;
                                if oi < 0 || oj < 0 || oi >= oh as isize || oj >= ow as isize {
                                    continue;
                                }
                                want[((bi * cout + co) * oh + oi as usize) * ow + oj as usize] +=
                                    xv[((bi * cin + ci) * h + i) * w + j] * wv[((ci * cout + co) * k + ki) * k + kj];
                            }
                        }
                    }
                }
            }
        }
    }
    let mut tape = Tape::<f64>::new();
    let x = tape.leaf(Tensor::new(vec![n, cin, h, w], xv).unwrap());
    let wt = tape.leaf(Tensor::new(vec![cin, cout, k, k], wv).unwrap());
    let b = tape.leaf(Tensor::new(vec![cout], bv).unwrap());
    let y = tape.conv_transpose2d(x, wt, b, s, p).unwrap();
    let diff = tape.value(y).iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-12, "{diff}");
}
