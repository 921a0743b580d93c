use iriskit_core::embedding::normalize_embedding;
use iriskit_core::templates::{
    self, EmbeddingMetric, EyeLabel, FloatEmbeddingTemplate, Payload, Template, TemplateError, WireLayout,
};
use iriskit_core::{BinaryCodeTemplate, BinaryMask};
use proptest::prelude::*;

fn eye() -> impl Strategy<Value = EyeLabel> {
    prop_oneof![
        Just(EyeLabel::Unspecified),
        Just(EyeLabel::Right),
        Just(EyeLabel::Left)
    ]
}

fn embedding() -> impl Strategy<Value = Payload> {
    (prop::collection::vec(-1e6f64..1e6, 1..40), any::<bool>()).prop_filter_map("zero vector", |(v, angular)| {
        if angular {
            let n = normalize_embedding(&v).ok()?;
            FloatEmbeddingTemplate::new(n, EmbeddingMetric::Angular).ok()
        } else {
            FloatEmbeddingTemplate::new(v, EmbeddingMetric::Euclidean).ok()
        }
        .map(Payload::Embedding)
    })
}

fn binary_code() -> impl Strategy<Value = Payload> {
    (1usize..4, 1usize..6, 1usize..140).prop_flat_map(|(k, r, a)| {
        (
            prop::collection::vec(any::<bool>(), k * r * a),
            prop::collection::vec(any::<bool>(), r * a),
        )
            .prop_map(move |(bits, valid)| {
                Payload::BinaryCode(BinaryCodeTemplate::from_bools(k, r, a, &bits, &valid).unwrap())
            })
    })
}

fn crypt_mask() -> impl Strategy<Value = Payload> {
    (1usize..30, 1usize..30).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<bool>(), w * h)
            .prop_map(move |bits| Payload::CryptMask(BinaryMask::new(w, h, bits).unwrap()))
    })
}

fn template() -> impl Strategy<Value = Template> {
    (eye(), prop_oneof![embedding(), binary_code(), crypt_mask()]).prop_map(|(e, p)| Template::new(e, p))
}

/// Expected canonical length: 7 prefix bytes, the kind header, then the payload.
fn expected_len(t: &Template) -> usize {
    let words = |n: usize| n.div_ceil(64) * 8;
    7 + match &t.payload {
        Payload::Embedding(e) => 5 + 8 * e.dim(),
        Payload::BinaryCode(b) => {
            let (k, r, a) = b.dims();
            12 + words(k * r * a) + words(r * a)
        }
        Payload::CryptMask(m) => 8 + words(m.width() * m.height()),
    }
}

proptest! {
    #[test]
    fn canonical_round_trip(t in template()) {
        let bytes = templates::serialize_canonical(&t);
        prop_assert_eq!(bytes.len(), expected_len(&t));
        prop_assert_eq!(bytes.len(), templates::canonical_len(&t));
        let back = templates::deserialize_canonical(&bytes).unwrap();
        prop_assert_eq!(&back, &t);
    }

    #[test]
    fn wire_and_canonical_agree(t in template()) {
        let wire = templates::serialize_wire(&t);
        let canonical = templates::serialize_canonical(&t);
        prop_assert_eq!(wire[0], canonical[5]);
        let from_wire = templates::deserialize_wire(&wire, WireLayout::of(&t)).unwrap();
        let from_canonical = templates::deserialize_canonical(&canonical).unwrap();
        prop_assert_eq!(from_wire, from_canonical);
    }

    #[test]
    fn truncation_is_corrupt(t in template(), cut in 1usize..8) {
        let bytes = templates::serialize_canonical(&t);
        let short = &bytes[..bytes.len().saturating_sub(cut)];
        prop_assert!(matches!(
            templates::deserialize_canonical(short),
            Err(TemplateError::Corrupt(_))
        ));
    }
}

#[test]
fn bad_magic_is_not_a_template() {
    assert!(matches!(
        templates::deserialize_canonical(b"XXXX\x01\x00\x00"),
        Err(TemplateError::NotATemplate)
    ));
}
