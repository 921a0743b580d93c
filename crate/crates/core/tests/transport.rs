use iriskit_core::crypts::{self, EmdConfig};
use iriskit_core::morphology::{self, Connectivity};
use iriskit_core::transport::{self, TransportProblem};
use iriskit_core::{BinaryMask, GrayImage};
use minilp::{ComparisonOp, OptimizationDirection, Problem};
use proptest::prelude::*;

fn lp_optimum(p: &TransportProblem) -> f64 {
    let (m, n) = (p.supplies().len(), p.demands().len());
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..m * n)
        .map(|c| lp.add_var(p.cost(c / n, c % n), (0.0, f64::INFINITY)))
        .collect();
    for i in 0..m {
        let row: Vec<_> = (0..n).map(|j| (vars[i * n + j], 1.0)).collect();
        lp.add_constraint(&row, ComparisonOp::Eq, p.supplies()[i]);
    }
    for j in 0..n {
        let col: Vec<_> = (0..m).map(|i| (vars[i * n + j], 1.0)).collect();
        lp.add_constraint(&col, ComparisonOp::Eq, p.demands()[j]);
    }
    lp.solve().unwrap().objective()
}

/// Balanced instance with integer weights scaled to unit total mass.
fn instance() -> impl Strategy<Value = TransportProblem> {
    (1usize..=8, 1usize..=8).prop_flat_map(|(m, n)| {
        (
            prop::collection::vec(1u32..20, m),
            prop::collection::vec(1u32..20, n),
            prop::collection::vec(0.0f64..10.0, m * n),
        )
            .prop_map(|(s, d, costs)| {
                let (ts, td) = (s.iter().sum::<u32>() as f64, d.iter().sum::<u32>() as f64);
                TransportProblem::new(
                    s.iter().map(|&v| v as f64 / ts).collect(),
                    d.iter().map(|&v| v as f64 / td).collect(),
                    costs,
                )
                .unwrap()
            })
    })
}

fn mask(w: usize, h: usize) -> impl Strategy<Value = BinaryMask> {
    prop::collection::vec(prop::bool::weighted(0.35), w * h).prop_map(move |b| BinaryMask::new(w, h, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn solver_matches_lp(p in instance()) {
        let sol = transport::solve(&p).unwrap();
        let (m, n) = (p.supplies().len(), p.demands().len());
        let mut rows = vec![0.0; m];
        let mut cols = vec![0.0; n];
        let mut cost = 0.0;
        for &(i, j, f) in &sol.flows {
            prop_assert!(f >= 0.0, "negative flow {f}");
            rows[i] += f;
            cols[j] += f;
            cost += f * p.cost(i, j);
        }
        for (got, want) in rows.iter().zip(p.supplies()).chain(cols.iter().zip(p.demands())) {
            prop_assert!((got - want).abs() <= 1e-9, "marginal {got} vs {want}");
        }
        prop_assert!((cost - sol.cost).abs() <= 1e-9);
        prop_assert!((sol.cost - lp_optimum(&p)).abs() <= 1e-6);
    }

    #[test]
    fn emd_is_symmetric_and_zero_only_on_identity(a in mask(6, 6), b in mask(6, 6)) {
        prop_assume!(!a.is_empty() && !b.is_empty());
        let cfg = EmdConfig::permissive();
        let ab = crypts::emd_2d(&a, &b, &cfg);
        let ba = crypts::emd_2d(&b, &a, &cfg);
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert_eq!(ab <= 1e-12, a == b);
    }

    #[test]
    fn raw_emd_triangle_inequality(
        cells in prop::collection::vec(prop::sample::subsequence((0..36).collect::<Vec<usize>>(), 4), 3),
    ) {
        let m: Vec<BinaryMask> = cells
            .iter()
            .map(|on| BinaryMask::from_fn(6, 6, |x, y| on.contains(&(y * 6 + x))))
            .collect();
        let d = |i: usize, j: usize| crypts::emd_raw(&m[i], &m[j], None).unwrap();
        prop_assert!(d(0, 2) <= d(0, 1) + d(1, 2) + 1e-9);
    }

    #[test]
    fn morphology_idempotence(m in mask(16, 16), min_area in 1usize..10, eight in any::<bool>()) {
        let conn = if eight { Connectivity::Eight } else { Connectivity::Four };
        let opened = morphology::area_open(&m, min_area, conn);
        prop_assert_eq!(&morphology::area_open(&opened, min_area, conn), &opened);
        let filled = morphology::fill_holes(&m);
        prop_assert_eq!(&morphology::fill_holes(&filled), &filled);
        prop_assert!(m.bits().iter().zip(filled.bits()).all(|(&a, &b)| !a || b));
    }

    #[test]
    fn reconstruction_is_bounded_and_idempotent(
        levels in prop::collection::vec(0u8..=4, 144),
        seeds in prop::collection::vec(prop::bool::weighted(0.1), 144),
    ) {
        let mask = GrayImage::new(12, 12, levels.iter().map(|&v| v as f64 / 4.0).collect()).unwrap();
        let marker = GrayImage::new(
            12,
            12,
            mask.pixels().iter().zip(&seeds).map(|(&v, &s)| if s { v } else { 0.0 }).collect(),
        )
        .unwrap();
        let r = morphology::morph_reconstruct(&marker, &mask).unwrap();
        for ((&o, &k), &g) in r.pixels().iter().zip(marker.pixels()).zip(mask.pixels()) {
            prop_assert!(k <= o && o <= g);
        }
        prop_assert_eq!(morphology::morph_reconstruct(&r, &mask).unwrap(), r);
    }
}
