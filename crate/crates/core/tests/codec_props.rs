use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use slurg_core::codec::{parse_lenient, parse_strict, render_tagged, tag_char_len};
use slurg_core::testkit::{random_markup, random_sample};
use slurg_core::validate_sample;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn render_then_parse_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sample = random_sample(&mut rng, "p", 60);
        let markup = render_tagged(&sample).unwrap();
        let back = parse_strict(&markup).unwrap();
        prop_assert!(back.repairs.is_empty());
        prop_assert_eq!(&back.text, &sample.text);
        let parsed = back.into_sample(sample.sample_id.clone(), "", sample.source);
        prop_assert_eq!(parsed.sorted_spans(), sample.sorted_spans());
        // rendering is a function of the span set, not its order
        let mut shuffled = sample.clone();
        shuffled.spans.reverse();
        prop_assert_eq!(render_tagged(&shuffled).unwrap(), markup);
    }

    #[test]
    fn lenient_parse_always_yields_a_valid_sample(seed in any::<u64>(), pieces in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = random_markup(&mut rng, pieces);
        let report = parse_lenient(&input);
        let sample = report.clone().into_sample("f", "", slurg_core::Source::Synthetic);
        prop_assert!(validate_sample(&sample).is_ok(), "{input:?} -> {:?}", report.spans);
        // de-tagged text is the input minus every tag token
        prop_assert_eq!(
            report.text.chars().count(),
            input.chars().count() - tag_char_len(&input)
        );
        let stripped = Regex::new(r"<(/?)([A-Za-z_][A-Za-z0-9_]*)>").unwrap().replace_all(&input, "");
        prop_assert_eq!(&report.text, &stripped);
    }

    #[test]
    fn strict_success_agrees_with_lenient(seed in any::<u64>(), pieces in 0usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let input = random_markup(&mut rng, pieces);
        if let Ok(strict) = parse_strict(&input) {
            let lenient = parse_lenient(&input);
            prop_assert!(lenient.repairs.is_empty());
            prop_assert_eq!(strict.text, lenient.text);
            prop_assert_eq!(strict.spans, lenient.spans);
        }
    }
}
