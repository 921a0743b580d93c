use iriskit_core::embedding::normalize_embedding;
use iriskit_core::identify::{self, FailurePolicy, GalleryEntry, SearchConfig};
use iriskit_core::matcher::{AngularMatcher, EuclideanMatcher, HdbifMatcher};
use iriskit_core::templates::{EmbeddingMetric, EyeLabel, FloatEmbeddingTemplate, Payload, Template};
use iriskit_core::{BinaryCodeTemplate, Matcher};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn euclid(eye: EyeLabel, v: Vec<f64>) -> Template {
    Template::new(
        eye,
        Payload::Embedding(FloatEmbeddingTemplate::new(v, EmbeddingMetric::Euclidean).unwrap()),
    )
}

fn eye_of(i: u8) -> EyeLabel {
    [EyeLabel::Unspecified, EyeLabel::Right, EyeLabel::Left][i as usize % 3]
}

fn gallery() -> impl Strategy<Value = Vec<GalleryEntry>> {
    prop::collection::vec(prop::collection::vec((0u8..3, 0u8..6), 1..4), 1..25).prop_map(|entries| {
        entries
            .into_iter()
            .enumerate()
            .map(|(i, ts)| {
                let templates = ts.into_iter().map(|(e, v)| euclid(eye_of(e), vec![v as f64])).collect();
                GalleryEntry::new(format!("g{i:03}"), templates).unwrap()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn order_and_parallelism_do_not_matter(
        gallery in gallery(),
        probe_eye in 0u8..3,
        len in 1usize..30,
        sentinel in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let probe = [euclid(eye_of(probe_eye), vec![0.0])];
        let policy = if sentinel { FailurePolicy::Sentinel } else { FailurePolicy::Propagate };
        let cfg = SearchConfig { candidate_list_length: len, failure_policy: policy, parallel: false };
        let base = identify::search_1n(&probe, &gallery, &EuclideanMatcher, &cfg).unwrap();

        let mut shuffled = gallery.clone();
        let mut rng = StdRng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let par = SearchConfig { parallel: true, ..cfg };
        prop_assert_eq!(&identify::search_1n(&probe, &shuffled, &EuclideanMatcher, &par).unwrap(), &base);

        prop_assert!(base.candidates.windows(2).all(|w| w[0].score <= w[1].score));
        let scored = if sentinel { gallery.len() } else { gallery.len() - base.failed.len() };
        prop_assert_eq!(base.candidates.len(), len.min(scored));
    }
}

#[test]
fn exact_copy_is_rank_one_for_every_matcher() {
    let mut rng = StdRng::seed_from_u64(21);
    let unit = |rng: &mut StdRng| {
        let v: Vec<f64> = (0..64).map(|_| rng.random::<f64>() - 0.5).collect();
        normalize_embedding(&v).unwrap()
    };
    let code = |rng: &mut StdRng| {
        let bits: Vec<bool> = (0..3 * 8 * 128).map(|_| rng.random_bool(0.5)).collect();
        BinaryCodeTemplate::from_bools(3, 8, 128, &bits, &[true; 8 * 128]).unwrap()
    };
    let cases: Vec<(Box<dyn Matcher>, Box<dyn Fn(&mut StdRng) -> Payload>)> = vec![
        (
            Box::new(AngularMatcher),
            Box::new(move |r| Payload::Embedding(FloatEmbeddingTemplate::new(unit(r), EmbeddingMetric::Angular).unwrap())),
        ),
        (
            Box::new(EuclideanMatcher),
            Box::new(move |r| Payload::Embedding(FloatEmbeddingTemplate::new(unit(r), EmbeddingMetric::Euclidean).unwrap())),
        ),
        (Box::new(HdbifMatcher::default()), Box::new(move |r| Payload::BinaryCode(code(r)))),
    ];
    for (matcher, make) in cases {
        for trial in 0..5 {
            let gallery: Vec<GalleryEntry> = (0..200)
                .map(|i| GalleryEntry::new(format!("id{i:03}"), vec![Template::new(EyeLabel::Left, make(&mut rng))]).unwrap())
                .collect();
            let target = rng.random_range(0..200);
            let probe = [gallery[target].templates[0].clone()];
            let out = identify::search_1n(&probe, &gallery, matcher.as_ref(), &SearchConfig::default()).unwrap();
            assert_eq!(out.candidates[0].identity_id, format!("id{target:03}"), "{} trial {trial}", matcher.name());
            assert!(out.candidates[0].score.abs() < 1e-7);
        }
    }
}
