use std::collections::HashSet;

use proptest::prelude::*;

use slurg_core::dataset::{make_split, SplitSpec};
use slurg_core::{AnnotatedSample, Corpus, Source};

fn corpus_of(n: usize) -> Corpus {
    Corpus::new(
        "t",
        (0..n).map(|i| AnnotatedSample::raw(format!("s{i:04}"), Source::Reddit, "x")).collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn split_partitions_the_corpus(n in 0usize..300, fewshot in 0u32..=100, seed in any::<u64>()) {
        let spec = SplitSpec::new(100 - fewshot, fewshot, seed).unwrap();
        let c = corpus_of(n);
        let s = make_split(&c, &spec);
        // round half up, computed in floating point as a cross-check
        let expected = (f64::from(fewshot) * n as f64 / 100.0 + 0.5).floor() as usize;
        prop_assert_eq!(s.fewshot.len(), expected);
        prop_assert_eq!(s.gold.len() + s.fewshot.len(), n);
        let g: HashSet<_> = s.gold.ids().collect();
        let f: HashSet<_> = s.fewshot.ids().collect();
        prop_assert!(g.is_disjoint(&f));
        // both halves keep input order
        let pos = |id: &str| c.ids().position(|x| x == id).unwrap();
        prop_assert!(s.gold.ids().map(pos).collect::<Vec<_>>().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(s.fewshot.ids().map(pos).collect::<Vec<_>>().windows(2).all(|w| w[0] < w[1]));
        prop_assert_eq!(make_split(&c, &spec), s);
    }
}
