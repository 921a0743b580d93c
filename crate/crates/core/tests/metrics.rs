use iriskit_core::eval::{self, Orientation, RankInput, ScoreRecord, ScoreSet, ScoredPair, SentinelTable};
use proptest::prelude::*;

fn scores() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(0.0f64..1.0, 2..200),
        prop::collection::vec(0.2f64..1.2, 2..200),
    )
}

fn set_from(genuine: &[f64], imposter: &[f64]) -> ScoreSet {
    // Each probe i has one mate and a handful of non-mates.
    let mut pairs = Vec::new();
    for (i, &g) in genuine.iter().enumerate() {
        pairs.push(ScoredPair {
            probe_id: format!("p{i}"),
            gallery_id: format!("m{i}"),
            genuine: true,
            score: g,
        });
    }
    for (j, &s) in imposter.iter().enumerate() {
        pairs.push(ScoredPair {
            probe_id: format!("p{}", j % genuine.len()),
            gallery_id: format!("x{j}"),
            genuine: false,
            score: s,
        });
    }
    ScoreSet {
        method_id: "m".into(),
        orientation: Orientation::Dissimilarity,
        pairs,
        failed: 0,
        attempted: genuine.len() + imposter.len(),
    }
}

proptest! {
    #[test]
    fn constant_shift_leaves_metrics_unchanged((g, i) in scores(), c in -3i32..=3) {
        // Shifts by a power of two keep every score exactly representable.
        let c = c as f64 * 0.5;
        let (gs, is): (Vec<f64>, Vec<f64>) = (g.iter().map(|v| v + c).collect(), i.iter().map(|v| v + c).collect());
        let (r0, r1) = (eval::roc_curve(&g, &i), eval::roc_curve(&gs, &is));
        prop_assert!((eval::auc(&r0) - eval::auc(&r1)).abs() < 1e-12);
        prop_assert!((eval::eer(&r0) - eval::eer(&r1)).abs() < 1e-12);
        prop_assert!((eval::dprime(&g, &i) - eval::dprime(&gs, &is)).abs() < 1e-6);
        for k in [1, 3] {
            let a = eval::rank_accuracy(&RankInput::from_score_set(&set_from(&g, &i)), k);
            let b = eval::rank_accuracy(&RankInput::from_score_set(&set_from(&gs, &is)), k);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn fnmr_is_monotone_in_target((g, i) in scores()) {
        let roc = eval::roc_curve(&g, &i);
        let targets = [0.0, 0.001, 0.01, 0.05, 0.1, 0.3, 0.5, 1.0];
        let f: Vec<f64> = targets.iter().map(|&t| eval::fnmr_at_fmr(&roc, t)).collect();
        prop_assert!(f.windows(2).all(|w| w[0] >= w[1]));
        let auc = eval::auc(&roc);
        let eer = eval::eer(&roc);
        prop_assert!((0.0..=1.0).contains(&auc) && (0.0..=1.0).contains(&eer));
    }

    #[test]
    fn sentinels_only_touch_failures(
        rows in prop::collection::vec((0.0f64..1.0, any::<bool>(), any::<bool>()), 1..60),
    ) {
        let records: Vec<ScoreRecord> = rows
            .iter()
            .enumerate()
            .map(|(k, &(s, genuine, fail))| ScoreRecord {
                method_id: "hdbif".into(),
                probe_id: format!("p{k}"),
                gallery_id: "g".into(),
                genuine,
                score: (!fail).then_some(s),
            })
            .collect();
        let sets = eval::protocol_failure_as_nonmatch(&records, &SentinelTable::default()).unwrap();
        for (r, p) in records.iter().zip(&sets["hdbif"].pairs) {
            prop_assert_eq!(p.score, r.score.unwrap_or(1.0));
        }
    }

    #[test]
    fn parity_with_itself(v in prop::collection::vec(0.0f64..1.0, 2..80)) {
        prop_assume!(v.iter().any(|&x| x != v[0]));
        let records: Vec<ScoreRecord> = v
            .iter()
            .enumerate()
            .map(|(k, &s)| ScoreRecord {
                method_id: "m".into(),
                probe_id: format!("p{k}"),
                gallery_id: "g".into(),
                genuine: k % 2 == 0,
                score: Some(s),
            })
            .collect();
        let report = eval::parity(&records, &records).unwrap();
        for stats in [&report.genuine, &report.imposter].into_iter().flatten() {
            prop_assert_eq!(stats.mad, 0.0);
            prop_assert_eq!(stats.max_delta, 0.0);
            prop_assert_eq!(stats.r2, 1.0);
        }
    }
}
