use std::collections::BTreeSet;
use std::f64::consts::PI;

use iriskit_core::geometry::{self, CircleParams, QualityReason};
use iriskit_core::{BinaryMask, GrayImage};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// The five rules written straight from their formulas.
fn gate_oracle(c: &CircleParams, visible: Option<usize>) -> BTreeSet<QualityReason> {
    let mut out = BTreeSet::new();
    if c.ir <= c.pr {
        out.insert(QualityReason::AbnormalRadii);
    }
    if c.pr <= 12.0 || c.ir <= 16.0 {
        out.insert(QualityReason::InsufficientRadii);
    }
    let alpha = c.pr / c.ir;
    if alpha < 0.1 || alpha > 0.8 {
        out.insert(QualityReason::AbnormalRatio);
    }
    if let Some(n) = visible {
        if n as f64 / (PI * (c.ir + c.pr) * (c.ir - c.pr)) < 0.1 {
            out.insert(QualityReason::InsufficientIrisVisible);
        }
    }
    if (c.px - c.ix).hypot(c.py - c.iy) / c.ir > 0.5 {
        out.insert(QualityReason::ExcessiveConcentricDeviation);
    }
    out
}

fn mask_with(count: usize) -> BinaryMask {
    let mut k = 0;
    BinaryMask::from_fn(100, 100, |_, _| {
        k += 1;
        k <= count
    })
}

proptest! {
    #[test]
    fn gate_matches_formulas(
        pr in 1.0f64..120.0,
        ir in 1.0f64..160.0,
        dx in -80.0f64..80.0,
        dy in -80.0f64..80.0,
        visible in proptest::option::of(0usize..10_000),
    ) {
        let c = CircleParams::new(200.0 + dx, 200.0 + dy, pr, 200.0, 200.0, ir).unwrap();
        let mask = visible.map(mask_with);
        let first = geometry::quality_gate(&c, mask.as_ref());
        let again = geometry::quality_gate(&c, mask.as_ref());
        prop_assert_eq!(&first, &again);
        prop_assert_eq!(first.reasons, gate_oracle(&c, visible));
    }

    #[test]
    fn rubber_sheet_has_requested_dims(
        pr in 13.0f64..40.0,
        extra in 20.0f64..60.0,
        rr in 2usize..40,
        aa in 4usize..300,
    ) {
        let img = GrayImage::filled(200, 200, 0.3).unwrap();
        let c = CircleParams::concentric(100.0, 100.0, pr, pr + extra).unwrap();
        prop_assume!(geometry::quality_gate(&c, None).accepted());
        let n = geometry::rubber_sheet(&img, &c, None, rr, aa).unwrap();
        prop_assert_eq!((n.radial_res(), n.angular_res()), (rr, aa));
        prop_assert_eq!(n.image().len(), rr * aa);
        prop_assert_eq!(n.mask().len(), rr * aa);
    }

    #[test]
    fn target_circles_map_back_to_source(
        w in 50usize..900,
        h in 50usize..700,
        cx in 0.0f64..1.0,
        cy in 0.0f64..1.0,
        pr in 5.0f64..30.0,
        ir in 31.0f64..80.0,
    ) {
        let raw = GrayImage::filled(w, h, 0.5).unwrap();
        let (_, map) = geometry::preprocess_image(&raw, 320, 240).unwrap();
        let src = CircleParams::concentric(cx * w as f64, cy * h as f64, pr, ir).unwrap();
        let back = map.circles_to_source(&map.circles_to_target(&src));
        for (a, b) in [
            (src.px, back.px), (src.py, back.py), (src.pr, back.pr),
            (src.ix, back.ix), (src.iy, back.iy), (src.ir, back.ir),
        ] {
            prop_assert!((a - b).abs() < 0.5, "{a} vs {b}");
        }
    }
}

#[test]
fn rotation_shifts_columns_for_every_k() {
    let (cx, cy) = (80.0, 80.0);
    let texture = |x: f64, y: f64| 0.5 + 0.3 * (0.09 * x).sin() * (0.12 * y).cos();
    let c = CircleParams::concentric(cx, cy, 20.0, 60.0).unwrap();
    let aa = 32;
    let base = GrayImage::from_fn(160, 160, |x, y| texture(x as f64, y as f64)).unwrap();
    let polar = geometry::rubber_sheet(&base, &c, None, 16, aa).unwrap();
    for k in 0..aa {
        let phi = 2.0 * PI * k as f64 / aa as f64;
        let rotated = GrayImage::from_fn(160, 160, |x, y| {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            texture(cx + dx * phi.cos() + dy * phi.sin(), cy - dx * phi.sin() + dy * phi.cos())
        })
        .unwrap();
        let rp = geometry::rubber_sheet(&rotated, &c, None, 16, aa).unwrap();
        let mut sum = 0.0;
        for r in 0..16 {
            for a in 0..aa {
                sum += (rp.pixel(r, a) - polar.pixel(r, (a + aa - k) % aa)).abs();
            }
        }
        assert!(sum / ((16 * aa) as f64) < 2.0 / 255.0, "k = {k}");
    }
}

fn annulus(w: usize, h: usize, c: &CircleParams) -> BinaryMask {
    BinaryMask::from_fn(w, h, |x, y| {
        let (x, y) = (x as f64, y as f64);
        (x - c.ix).hypot(y - c.iy) <= c.ir && (x - c.px).hypot(y - c.py) > c.pr
    })
}

#[test]
fn hough_recovers_noiseless_annuli() {
    let mut rng = StdRng::seed_from_u64(11);
    let (w, h) = (160, 140);
    for case in 0..50 {
        let ir = rng.random_range(35.0..60.0f64).round();
        let pr = rng.random_range(12.0..ir * 0.6).round();
        let ix = rng.random_range(ir + 2.0..w as f64 - ir - 2.0).round();
        let iy = rng.random_range(ir + 2.0..h as f64 - ir - 2.0).round();
        let slack = (ir - pr - 4.0).max(0.0).min(6.0);
        let px = (ix + rng.random_range(-slack..=slack)).round();
        let py = (iy + rng.random_range(-slack..=slack)).round();
        let truth = CircleParams::new(px, py, pr, ix, iy, ir).unwrap();
        let fit = geometry::fit_circles_hough(&annulus(w, h, &truth)).unwrap();
        assert!(!fit.degenerate, "case {case}");
        let f = fit.circles;
        for (name, a, b) in [
            ("px", truth.px, f.px),
            ("py", truth.py, f.py),
            ("pr", truth.pr, f.pr),
            ("ix", truth.ix, f.ix),
            ("iy", truth.iy, f.iy),
            ("ir", truth.ir, f.ir),
        ] {
            assert!((a - b).abs() <= 2.0, "case {case}: {name} {a} vs fitted {b}");
        }
    }
}

#[test]
fn disk_without_pupil_is_degenerate() {
    let mask = BinaryMask::from_fn(120, 120, |x, y| (x as f64 - 60.0).hypot(y as f64 - 60.0) <= 40.0);
    let fit = geometry::fit_circles_hough(&mask).unwrap();
    assert!(fit.degenerate);
    assert!((fit.circles.ir - 40.0).abs() <= 2.0);
    assert_eq!(fit.circles.pr, 0.3 * fit.circles.ir);
}
