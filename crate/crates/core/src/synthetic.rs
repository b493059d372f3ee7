//! Seeded synthetic corpora for tests, benchmarks and the `synth` command.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::lexicon::Lexicon;
use crate::models::{FeatureConfig, LogReg, Parameters, TrainedModel};
use crate::seed::rng_for;

pub const MALE_WORDS: [&str; 6] = ["man", "boy", "father", "husband", "brother", "son"];
pub const FEMALE_WORDS: [&str; 6] = ["woman", "girl", "mother", "wife", "sister", "daughter"];
const POSITIVE: [&str; 4] = ["great", "wonderful", "excellent", "lovely"];
const NEGATIVE: [&str; 4] = ["terrible", "awful", "horrible", "dreadful"];
const SUBJECTS: [&str; 4] = ["movie", "meal", "show", "book"];
const VERBS: [&str; 3] = ["thinks", "said", "felt"];

/// Filler words that appear in no shipped lexicon.
const FILLERS: [&str; 24] = [
    "the", "a", "was", "is", "really", "quite", "today", "about", "with", "over", "table",
    "window", "river", "green", "quickly", "train", "city", "coffee", "paper", "music", "after",
    "maybe", "because", "garden",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasedCorpusParams {
    pub n_docs: usize,
    /// P(label = presence of a male token).
    pub gender_agreement: f64,
    /// P(the sentiment word agrees with the label).
    pub content_agreement: f64,
    pub seed: u64,
}

impl Default for BiasedCorpusParams {
    fn default() -> Self {
        BiasedCorpusParams {
            n_docs: 2000,
            gender_agreement: 0.9,
            content_agreement: 0.88,
            seed: 42,
        }
    }
}

/// Short reviews in which the label tracks the presence of a male word with
/// probability `gender_agreement`. A sentiment word carries a second,
/// gender-independent signal so a debiased model can stay accurate.
pub fn biased_gender_corpus(params: &BiasedCorpusParams) -> Vec<Document> {
    let mut rng = rng_for(params.seed, "biased-gender-corpus");
    (0..params.n_docs)
        .map(|i| {
            let male = rng.random_bool(0.5);
            let label = if rng.random_bool(params.gender_agreement) { male } else { !male };
            let positive = if rng.random_bool(params.content_agreement) { label } else { !label };
            let who = if male { &MALE_WORDS } else { &FEMALE_WORDS }
                .choose(&mut rng)
                .expect("non-empty");
            let verb = VERBS.choose(&mut rng).expect("non-empty");
            let what = SUBJECTS.choose(&mut rng).expect("non-empty");
            let how = if positive { &POSITIVE } else { &NEGATIVE }
                .choose(&mut rng)
                .expect("non-empty");
            let text = format!("my {who} {verb} the {what} was {how}");
            Document::labeled(format!("doc{i:05}"), text, u8::from(label))
        })
        .collect()
}

/// A random document of 1–4 clauses mixing lexicon surfaces and fillers.
pub fn random_document<R: Rng + ?Sized>(rng: &mut R, lexicon: &Lexicon, id: &str) -> Document {
    let entries = lexicon.entries();
    let n_clauses = rng.random_range(1..=4);
    let mut text = String::new();
    for c in 0..n_clauses {
        if c > 0 {
            text.push_str([". ", "; ", "! ", ", and he "].choose(rng).expect("non-empty"));
        }
        let n_words = rng.random_range(2..=7);
        let words: Vec<String> = (0..n_words)
            .map(|_| {
                if !entries.is_empty() && rng.random_bool(0.3) {
                    entries[rng.random_range(0..entries.len())].surface.clone()
                } else {
                    FILLERS.choose(rng).expect("non-empty").to_string()
                }
            })
            .collect();
        text.push_str(&words.join(" "));
    }
    text.push('.');
    Document::new(id, text, Some(rng.random_range(0..2u8)))
}

pub fn random_corpus<R: Rng + ?Sized>(rng: &mut R, lexicon: &Lexicon, n: usize) -> Vec<Document> {
    (0..n)
        .map(|i| random_document(rng, lexicon, &format!("r{i:04}")))
        .collect()
}

/// Logistic model with standard-uniform random weights over default features.
pub fn random_linear_model<R: Rng + ?Sized>(rng: &mut R) -> TrainedModel {
    let cfg = FeatureConfig::default();
    TrainedModel {
        feature_config: cfg,
        seed: 0,
        parameters: Parameters::Logreg(LogReg {
            weights: (0..cfg.dim).map(|_| rng.random_range(-3.0..3.0)).collect(),
            bias: rng.random_range(-0.5..0.5),
        }),
    }
}
