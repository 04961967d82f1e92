use lf_core::{lf_metrics, psnr, ssim, Image2D, LfDims, LightField4D};
use proptest::prelude::*;

fn pattern(h: usize, w: usize) -> Image2D {
    let data = (0..h * w).map(|i| (((i / w) / 2 + (i % w) / 2) % 2) as f32 * 0.8 + 0.1).collect();
    Image2D::new(h, w, 1, data).unwrap()
}

fn offset(img: &Image2D, by: f32) -> Image2D {
    Image2D::new(img.height, img.width, 1, img.data.iter().map(|v| v + by).collect()).unwrap()
}

#[test]
fn psnr_of_identical_images_is_infinite() {
    let a = pattern(16, 16);
    assert_eq!(psnr(&a, &a, 1.0).unwrap(), f64::INFINITY);
}

#[test]
fn psnr_of_one_level_offset() {
    let a = Image2D::filled(32, 32, 1, 0.5);
    let b = offset(&a, 1.0 / 255.0);
    let golden = 20.0 * 255f64.log10();
    let p = psnr(&a, &b, 1.0).unwrap();
    assert!((p - 48.1308).abs() < 1e-3 && (p - golden).abs() < 1e-4, "{p}");
    let p2 = psnr(&a, &offset(&a, 2.0 / 255.0), 1.0).unwrap();
    assert!((p - p2 - 20.0 * 2f64.log10()).abs() < 1e-4);
}

#[test]
fn psnr_rejects_shape_mismatch() {
    assert!(psnr(&pattern(4, 4), &pattern(4, 5), 1.0).is_err());
}

#[test]
fn ssim_identity_negative_and_size() {
    let a = pattern(32, 32);
    assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    let neg = Image2D::new(32, 32, 1, a.data.iter().map(|v| 1.0 - v).collect()).unwrap();
    assert!(ssim(&a, &neg).unwrap() < 0.2);
    assert!(ssim(&pattern(10, 30), &pattern(10, 30)).is_err());
}

proptest! {
    #[test]
    fn ssim_is_symmetric(a in prop::collection::vec(0.0f32..1.0, 14 * 13), b in prop::collection::vec(0.0f32..1.0, 14 * 13)) {
        let (a, b) = (Image2D::new(14, 13, 1, a).unwrap(), Image2D::new(14, 13, 1, b).unwrap());
        let (s1, s2) = (ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        prop_assert!((s1 - s2).abs() < 1e-12);
        prop_assert!((-1.0..=1.0).contains(&s1));
    }

    #[test]
    fn psnr_decreases_with_error(e1 in 1u32..100, extra in 1u32..100) {
        let a = Image2D::filled(8, 8, 1, 0.2);
        let small = psnr(&a, &offset(&a, e1 as f32 / 1000.0), 1.0).unwrap();
        let large = psnr(&a, &offset(&a, (e1 + extra) as f32 / 1000.0), 1.0).unwrap();
        prop_assert!(large < small);
    }
}

#[test]
fn light_field_scores_average_views() {
    let base = LightField4D::filled(LfDims::new(1, 2, 16, 16, 1), 0.5).unwrap();
    let test = LightField4D::from_fn(base.dims(), |_, v, _, _, _| 0.5 + (v + 1) as f32 / 255.0).unwrap();
    let s = lf_metrics(&base, &test).unwrap();
    let p1 = 20.0 * 255f64.log10();
    let p2 = p1 - 20.0 * 2f64.log10();
    assert!((s.per_view[0].0 - p1).abs() < 1e-3 && (s.per_view[1].0 - p2).abs() < 1e-3);
    assert!((s.psnr - (p1 + p2) / 2.0).abs() < 1e-3);

    let same = lf_metrics(&base, &base).unwrap();
    assert_eq!(same.psnr, f64::INFINITY);
    assert!((same.ssim - 1.0).abs() < 1e-12);

    let uniform = LightField4D::from_fn(base.dims(), |_, _, x, y, _| 0.3 + 0.02 * ((x * 3 + y) % 7) as f32).unwrap();
    let shifted = uniform.map(|v| v + 0.01);
    let s = lf_metrics(&uniform, &shifted).unwrap();
    assert!((s.psnr - s.per_view[0].0).abs() < 1e-9 && (s.ssim - s.per_view[1].1).abs() < 1e-9);

    let other = LightField4D::filled(LfDims::new(2, 1, 16, 16, 1), 0.5).unwrap();
    assert!(lf_metrics(&base, &other).is_err());
}
