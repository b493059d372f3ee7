use std::collections::HashSet;

use cfaudit::audit::{cfi, flip_rate, Generator};
use cfaudit::cfgen::{generate, GenConfig, GenMode};
use cfaudit::lexicon::Lexicon;
use cfaudit::models::Classifier;
use cfaudit::seed::rng_for;
use cfaudit::synthetic::{random_corpus, random_document, random_linear_model};
use proptest::prelude::*;

fn apply(parent: &str, subs: &[cfaudit::cfgen::Substitution]) -> String {
    let mut subs = subs.to_vec();
    subs.sort_by_key(|s| std::cmp::Reverse(s.start));
    let mut out = parent.to_string();
    for s in subs {
        assert_eq!(&parent[s.start..s.end], s.from);
        out.replace_range(s.start..s.end, &s.to);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn counterfactuals_are_distinct_bounded_and_replayable(
        doc_seed in any::<u64>(),
        seed in any::<u64>(),
        multi in any::<bool>(),
        max_cf in 1usize..40,
    ) {
        let lexicon = Lexicon::builtin();
        let doc = random_document(&mut rng_for(doc_seed, "doc"), &lexicon, "d");
        let config = GenConfig {
            seed,
            mode: if multi { GenMode::Multi } else { GenMode::Single },
            max_counterfactuals_per_doc: max_cf,
            ..Default::default()
        };
        let cfs = generate(&doc, &lexicon, &config, None).unwrap();
        prop_assert!(cfs.len() <= max_cf);
        let mut seen = HashSet::new();
        for cf in &cfs {
            prop_assert_ne!(&cf.text, &doc.text);
            prop_assert!(seen.insert(cf.text.clone()));
            prop_assert_eq!(&cf.parent_id, "d");
            prop_assert!(!cf.flipped_attributes.is_empty());
            if !multi {
                prop_assert_eq!(cf.flipped_attributes.len(), 1);
            }
            prop_assert_eq!(apply(&doc.text, &cf.substitutions), cf.text.clone());
        }
        prop_assert_eq!(generate(&doc, &lexicon, &config, None).unwrap(), cfs);
    }

    #[test]
    fn flip_rate_is_a_percentage_and_deterministic(seed in any::<u64>()) {
        let lexicon = Lexicon::builtin();
        let docs = random_corpus(&mut rng_for(seed, "corpus"), &lexicon, 12);
        let model = random_linear_model(&mut rng_for(seed, "model"));
        let config = GenConfig { seed, ..Default::default() };
        let generator = Generator::new(&lexicon, &config);
        let a = flip_rate(&model, &docs, &generator).unwrap();
        prop_assert!((0.0..=100.0).contains(&a.flip_rate_pct));
        let b = flip_rate(&model, &docs, &generator).unwrap();
        prop_assert_eq!(a.flip_rate_pct, b.flip_rate_pct);
    }

    #[test]
    fn probabilities_lie_in_unit_interval(seed in any::<u64>(), text in "[a-z ]{0,60}") {
        let model = random_linear_model(&mut rng_for(seed, "model"));
        let p = model.predict_proba(&text);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn cfi_bounds(pre in 0.01f64..100.0, frac in 0.0f64..=1.0) {
        let post = pre * frac;
        let v = cfi(pre, post);
        prop_assert!((0.0..=100.0 + 1e-9).contains(&v));
        prop_assert!((cfi(pre, pre)).abs() < 1e-12);
    }
}
