use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slurg_core::agreement::{jaccard_iou, label_mask, pairwise_agreement, select_gold};
use slurg_core::testkit::{perturb, random_sample};
use slurg_core::{AnnotatedSample, Corpus, Tier1};

/// Character-by-character Jaccard, written independently of the interval
/// implementation.
fn brute_iou(a: &AnnotatedSample, b: &AnnotatedSample, label: Tier1) -> f64 {
    let n = a.text.chars().count();
    let covered = |s: &AnnotatedSample, i: usize| {
        s.spans.iter().any(|sp| sp.tier1() == label && sp.start <= i && i < sp.end)
    };
    let (mut inter, mut union) = (0usize, 0usize);
    for i in 0..n {
        let (x, y) = (covered(a, i), covered(b, i));
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn iou_matches_bitset_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sample(&mut rng, "s", 80);
        let b = perturb(&mut rng, &a);
        for label in Tier1::ALL {
            let (ma, mb) = (label_mask(&a, label), label_mask(&b, label));
            let got = jaccard_iou(&ma, &mb).unwrap();
            prop_assert!((got - brute_iou(&a, &b, label)).abs() < 1e-12);
            prop_assert_eq!(got, jaccard_iou(&mb, &ma).unwrap());
            prop_assert!((0.0..=1.0).contains(&got));
            prop_assert_eq!(jaccard_iou(&ma, &ma).unwrap(), 1.0);
        }
    }

    #[test]
    fn mask_round_trips_through_bits(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_sample(&mut rng, "s", 80);
        for label in Tier1::ALL {
            let m = label_mask(&a, label);
            let bits = m.to_bits();
            prop_assert_eq!(bits.len(), a.char_len());
            prop_assert_eq!(slurg_core::LabelMask::from_bits(&bits), m);
        }
    }

    #[test]
    fn gold_selection_is_seeded(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<_> = (0..6).map(|i| random_sample(&mut rng, format!("s{i}"), 30)).collect();
        let mut annotations = BTreeMap::new();
        for who in ["a", "b", "c"] {
            let samples = base
                .iter()
                .map(|s| {
                    let mut p = if who == "a" { s.clone() } else { perturb(&mut rng, s) };
                    p.annotator_id = who.to_string();
                    p
                })
                .collect();
            annotations.insert(who.to_string(), Corpus::new(who, samples).unwrap());
        }
        let report = pairwise_agreement(&annotations).unwrap();
        let g1 = select_gold(&annotations, &report, 0.8, seed);
        let g2 = select_gold(&annotations, &report, 0.8, seed);
        prop_assert_eq!(&g1, &g2);
        for s in &g1 {
            prop_assert!(report.sample_mean(&s.sample_id).unwrap() > 0.8);
        }
        // the matrix is symmetric with a unit diagonal
        for i in 0..3 {
            prop_assert_eq!(report.matrix[i][i], Some(1.0));
            for j in 0..3 {
                prop_assert_eq!(report.matrix[i][j], report.matrix[j][i]);
            }
        }
    }
}
