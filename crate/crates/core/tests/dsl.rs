mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use reflax::dsl::{parse_document, parse_document_bytes, parse_registry, ToSource};

#[test]
fn corpus_round_trips() {
    for (name, doc) in common::corpus() {
        let printed = doc.to_source();
        let again = parse_document(&printed).unwrap_or_else(|e| panic!("{name}: {}", e.first()));
        assert_eq!(again.to_source(), printed, "{name}");
        assert_eq!(again.registry, doc.registry, "{name}");
        assert_eq!(again.queries, doc.queries, "{name}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn generated_registries_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, qs) = common::random_query_instance(&mut rng);
        let src = format!("{}{}", reg.to_source(), qs.to_source());
        let doc = parse_document(&src).unwrap();
        prop_assert_eq!(&doc.registry, &reg);
        prop_assert_eq!(&doc.queries, &qs);
        prop_assert_eq!(doc.to_source(), src);
    }

    #[test]
    fn loopy_registries_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, _, _) = common::random_loopy_instance(&mut rng);
        prop_assert_eq!(parse_registry(&reg.to_source()).unwrap(), reg);
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        if let Err(e) = parse_document_bytes(&bytes) {
            prop_assert!(e.first().line >= 1);
        }
    }

    #[test]
    fn mutated_sources_never_panic(seed in any::<u64>(), cut in 0usize..400, insert in "[ -~]{0,8}") {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (reg, qs) = common::random_query_instance(&mut rng);
        let mut src = format!("{}{}", reg.to_source(), qs.to_source());
        let at = src.char_indices().map(|(i, _)| i).nth(cut % src.len().max(1)).unwrap_or(0);
        src.insert_str(at, &insert);
        let _ = parse_document(&src);
    }
}
