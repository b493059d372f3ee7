//! Local-linear and anchor explanations, and merging of explanation tokens
//! into the perturbation groups.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cfgen::{group_hits, AgreementGroup, GroupMember, GroupOrigin, MemberSource, SensitiveHit};
use crate::error::{Error, Result};
use crate::lexicon::data_lines;
use crate::models::Classifier;
use crate::seed::{derive_seed, rng_for};
use crate::text::{ParsedDoc, Token};

const BUILTIN_ANTONYMS: &str = include_str!("../data/antonyms.tsv");

/// Word → replacement antonyms; the first one is used for counterfactuals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AntonymLexicon {
    map: BTreeMap<String, Vec<String>>,
}

impl AntonymLexicon {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_ANTONYMS, "antonyms.tsv").expect("shipped antonyms parse")
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (line, row) in data_lines(text) {
            let cols: Vec<&str> = row.split('\t').collect();
            if cols.len() != 2 {
                return Err(Error::parse(origin, line, format!("expected 2 columns, found {}", cols.len())));
            }
            let word = cols[0].trim().to_lowercase();
            let antonyms: Vec<String> = cols[1]
                .split(',')
                .map(|a| a.trim().to_lowercase())
                .filter(|a| !a.is_empty())
                .collect();
            if word.is_empty() || antonyms.is_empty() {
                return Err(Error::parse(origin, line, "empty word or antonym list"));
            }
            if antonyms.contains(&word) {
                return Err(Error::parse(origin, line, format!("`{word}` lists itself as an antonym")));
            }
            if map.insert(word.clone(), antonyms).is_some() {
                return Err(Error::parse(origin, line, format!("duplicate word `{word}`")));
            }
        }
        Ok(AntonymLexicon { map })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.map.get(&word.to_lowercase()).map(Vec::as_slice)
    }

    pub fn first(&self, word: &str) -> Option<&str> {
        self.get(word).and_then(|a| a.first()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// `(token_index, weight)`, sorted by |weight| descending.
    pub weights: Vec<(usize, f64)>,
    pub intercept: f64,
}

impl Explanation {
    pub fn token_indices(&self) -> Vec<usize> {
        self.weights.iter().map(|(t, _)| *t).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub token_indices: Vec<usize>,
    pub precision: f64,
    pub samples_used: usize,
    pub below_threshold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalLinearParams {
    pub n_samples: usize,
    pub kernel_width: f64,
    pub top_k: usize,
    pub ridge_alpha: f64,
}

impl Default for LocalLinearParams {
    fn default() -> Self {
        LocalLinearParams {
            n_samples: 500,
            kernel_width: 0.75,
            top_k: 5,
            ridge_alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorParams {
    pub precision_threshold: f64,
    pub n_samples: usize,
    pub beam: usize,
    pub max_size: usize,
}

impl Default for AnchorParams {
    fn default() -> Self {
        AnchorParams {
            precision_threshold: 0.95,
            n_samples: 200,
            beam: 4,
            max_size: 5,
        }
    }
}

/// Source text with the word tokens whose `keep` flag is false deleted.
fn masked_text(text: &str, words: &[&Token], keep: &[bool]) -> String {
    let mut out = String::with_capacity(text.len());
    let mut pos = 0;
    for (tok, &k) in words.iter().zip(keep) {
        if !k {
            out.push_str(&text[pos..tok.start]);
            pos = tok.end;
        }
    }
    out.push_str(&text[pos..]);
    out
}

/// Fits a kernel-weighted ridge surrogate of the model over random word
/// deletions and returns its `top_k` coefficients.
pub fn explain_local_linear(
    model: &dyn Classifier,
    text: &str,
    params: &LocalLinearParams,
    seed: u64,
) -> Result<Explanation> {
    let doc = ParsedDoc::parse(text);
    let words: Vec<&Token> = doc.word_tokens().collect();
    let m = words.len();
    if m < 2 {
        return Err(Error::Explain(format!(
            "local-linear explanation needs at least 2 word tokens, found {m}"
        )));
    }
    let n = params.n_samples.max(2);
    let mut rng = rng_for(seed, "local-linear");
    let mut masks: Vec<Vec<bool>> = vec![vec![true; m]];
    masks.extend((1..n).map(|_| (0..m).map(|_| rng.random_bool(0.5)).collect()));

    let mut x = DMatrix::<f64>::zeros(n, m);
    let mut y = DVector::<f64>::zeros(n);
    let mut w = DVector::<f64>::zeros(n);
    for (i, mask) in masks.iter().enumerate() {
        let on = mask.iter().filter(|b| **b).count();
        for (j, &b) in mask.iter().enumerate() {
            x[(i, j)] = f64::from(u8::from(b));
        }
        y[i] = model.predict_proba(&masked_text(text, &words, mask));
        let d = if on == 0 { 1.0 } else { 1.0 - (on as f64 / m as f64).sqrt() };
        w[i] = (-d * d / (params.kernel_width * params.kernel_width)).exp();
    }

    let wsum = w.sum();
    let x_mean: DVector<f64> = x.transpose() * &w / wsum;
    let y_mean = w.dot(&y) / wsum;
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= x_mean.transpose();
    }
    let yc = y.add_scalar(-y_mean);
    let xtw = xc.transpose() * DMatrix::from_diagonal(&w);
    let gram = &xtw * &xc + DMatrix::identity(m, m) * params.ridge_alpha;
    let rhs = &xtw * yc;
    let beta = gram
        .cholesky()
        .ok_or_else(|| Error::Explain("surrogate system is not positive definite".into()))?
        .solve(&rhs);
    let intercept = y_mean - x_mean.dot(&beta);

    let mut weights: Vec<(usize, f64)> = words.iter().zip(beta.iter()).map(|(t, b)| (t.index, *b)).collect();
    weights.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
    weights.truncate(params.top_k);
    Ok(Explanation { weights, intercept })
}

/// Beam search for the smallest set of word tokens that, held fixed while
/// the other words are randomly replaced, keeps the model's prediction.
pub fn explain_anchor(
    model: &dyn Classifier,
    text: &str,
    vocabulary: &[String],
    params: &AnchorParams,
    seed: u64,
) -> Result<Anchor> {
    let doc = ParsedDoc::parse(text);
    let words: Vec<&Token> = doc.word_tokens().collect();
    if words.is_empty() {
        return Err(Error::Explain("anchor search needs at least one word token".into()));
    }
    if vocabulary.is_empty() {
        return Err(Error::Explain("anchor search needs a non-empty vocabulary".into()));
    }
    let target = model.predict(text);
    let mut samples_used = 0;
    let mut precision = |anchor: &BTreeSet<usize>| -> f64 {
        let key: Vec<String> = anchor.iter().map(usize::to_string).collect();
        let mut rng = rng_for(derive_seed(seed, "anchor"), &key.join(","));
        let mut hits = 0;
        for _ in 0..params.n_samples {
            let mut out = String::with_capacity(text.len());
            let mut pos = 0;
            for (j, tok) in words.iter().enumerate() {
                if !anchor.contains(&j) && rng.random_bool(0.5) {
                    out.push_str(&text[pos..tok.start]);
                    out.push_str(&vocabulary[rng.random_range(0..vocabulary.len())]);
                    pos = tok.end;
                }
            }
            out.push_str(&text[pos..]);
            hits += usize::from(model.predict(&out) == target);
        }
        samples_used += params.n_samples;
        hits as f64 / params.n_samples.max(1) as f64
    };

    let to_anchor = |set: &BTreeSet<usize>, p: f64, below: bool, used: usize| Anchor {
        token_indices: set.iter().map(|&j| words[j].index).collect(),
        precision: p,
        samples_used: used,
        below_threshold: below,
    };

    let empty = BTreeSet::new();
    let p0 = precision(&empty);
    if p0 >= params.precision_threshold {
        return Ok(to_anchor(&empty, p0, false, samples_used));
    }
    let mut best = (empty.clone(), p0);
    let mut beam: Vec<BTreeSet<usize>> = vec![empty];
    let max_size = params.max_size.min(words.len());
    for _ in 0..max_size {
        let mut candidates: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
        for set in &beam {
            for j in 0..words.len() {
                if !set.contains(&j) {
                    let mut grown = set.clone();
                    grown.insert(j);
                    candidates.insert(grown);
                }
            }
        }
        let mut scored: Vec<(BTreeSet<usize>, f64)> =
            candidates.into_iter().map(|c| { let p = precision(&c); (c, p) }).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        if let Some((set, p)) = scored.first() {
            if *p > best.1 {
                best = (set.clone(), *p);
            }
            if *p >= params.precision_threshold {
                let (set, p) = (set.clone(), *p);
                return Ok(to_anchor(&set, p, false, samples_used));
            }
        }
        beam = scored.into_iter().take(params.beam.max(1)).map(|(s, _)| s).collect();
    }
    Ok(to_anchor(&best.0, best.1, true, samples_used))
}

/// Groups from sensitive hits plus one singleton per explanation token that
/// has an antonym and is not itself sensitive. Nothing is added to documents
/// without sensitive hits.
pub fn merge_tokens(
    hits: &[SensitiveHit],
    expl_tokens: &[usize],
    antonyms: &AntonymLexicon,
    doc: &ParsedDoc,
) -> Vec<AgreementGroup> {
    let mut groups = group_hits(hits, &doc.clauses);
    if hits.is_empty() {
        return groups;
    }
    let sensitive: HashSet<usize> = hits.iter().map(|h| h.token_index).collect();
    let clause_of = doc.clause_of_tokens();
    let ordered: BTreeSet<usize> = expl_tokens.iter().copied().collect();
    for t in ordered {
        let Some(tok) = doc.tokens.get(t) else { continue };
        if !tok.is_word || sensitive.contains(&t) {
            continue;
        }
        let (Some(antonym), Some(clause_id)) = (antonyms.first(&tok.text), clause_of[t]) else {
            continue;
        };
        groups.push(AgreementGroup {
            id: groups.len(),
            origin: GroupOrigin::Explanation,
            clause_id,
            members: vec![GroupMember {
                token_index: t,
                source: MemberSource::Antonym(antonym.to_string()),
            }],
        });
    }
    groups
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExplainerKind {
    None,
    LocalLinear,
    Anchor,
}

/// Explainer choice plus everything needed to turn explanations into extra
/// perturbation groups.
#[derive(Debug, Clone)]
pub struct ExplainerSetup {
    pub kind: ExplainerKind,
    pub antonyms: AntonymLexicon,
    pub local_linear: LocalLinearParams,
    pub anchor: AnchorParams,
    pub vocabulary: Vec<String>,
}

impl ExplainerSetup {
    pub fn new(kind: ExplainerKind) -> Self {
        ExplainerSetup {
            kind,
            antonyms: AntonymLexicon::builtin(),
            local_linear: LocalLinearParams::default(),
            anchor: AnchorParams::default(),
            vocabulary: Vec::new(),
        }
    }

    /// Explanation token indices for one document.
    pub fn tokens(&self, model: &dyn Classifier, text: &str, seed: u64) -> Result<Vec<usize>> {
        match self.kind {
            ExplainerKind::None => Ok(Vec::new()),
            ExplainerKind::LocalLinear => {
                if ParsedDoc::parse(text).word_tokens().count() < 2 {
                    return Ok(Vec::new());
                }
                Ok(explain_local_linear(model, text, &self.local_linear, seed)?.token_indices())
            }
            ExplainerKind::Anchor => {
                Ok(explain_anchor(model, text, &self.vocabulary, &self.anchor, seed)?.token_indices)
            }
        }
    }
}

/// Sorted, deduplicated lowercase word vocabulary of a set of texts.
pub fn vocabulary<'a>(texts: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let set: BTreeSet<String> = texts
        .into_iter()
        .flat_map(crate::models::feature_tokens)
        .collect();
    set.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfgen::{generate_from_groups, identify, GenConfig};
    use crate::lexicon::{Lexicon, SensitiveAttribute};

    #[test]
    fn antonym_parsing() {
        let a = AntonymLexicon::builtin();
        assert_eq!(a.first("Polite"), Some("rude"));
        assert!(AntonymLexicon::parse("good\tgood\n", "t").is_err());
        assert!(AntonymLexicon::parse("good\n", "t").is_err());
    }

    #[test]
    fn planted_keyword_ranks_first() {
        let model = |t: &str| if t.contains("awful") { 0.99 } else { 0.01 };
        let text = "the food was awful and the service slow";
        let e = explain_local_linear(&model, text, &LocalLinearParams::default(), 3).unwrap();
        let doc = ParsedDoc::parse(text);
        assert_eq!(doc.tokens[e.weights[0].0].text, "awful");
        assert!(e.weights.len() <= 5);
        assert!(e.weights.windows(2).all(|w| w[0].1.abs() >= w[1].1.abs()));
    }

    #[test]
    fn constant_model_has_zero_weights() {
        let model = |_: &str| 0.3;
        let e = explain_local_linear(&model, "one two three", &LocalLinearParams::default(), 1).unwrap();
        assert!(e.weights.iter().all(|(_, w)| w.abs() < 1e-6));
        assert!(explain_local_linear(&model, "one", &LocalLinearParams::default(), 1).is_err());
    }

    #[test]
    fn two_token_dependence() {
        let model = |t: &str| if t.contains("alpha") { 0.9 } else { 0.2 };
        let e = explain_local_linear(&model, "alpha beta", &LocalLinearParams::default(), 4).unwrap();
        let w: BTreeMap<usize, f64> = e.weights.into_iter().collect();
        assert!(w[&0].abs() > w[&1].abs());
    }

    #[test]
    fn anchor_examples() {
        let vocab: Vec<String> = ["good", "day", "fine", "nice"].iter().map(|s| s.to_string()).collect();
        let model = |t: &str| if t.split_whitespace().any(|w| w == "bad") { 0.9 } else { 0.1 };
        let a = explain_anchor(&model, "a bad day today", &vocab, &AnchorParams::default(), 5).unwrap();
        assert_eq!(a.token_indices, vec![1]);
        assert_eq!(a.precision, 1.0);
        assert!(!a.below_threshold);

        let constant = |_: &str| 0.7;
        let a = explain_anchor(&constant, "a bad day", &vocab, &AnchorParams::default(), 5).unwrap();
        assert!(a.token_indices.is_empty());
        assert_eq!(a.precision, 1.0);

        let params = AnchorParams { precision_threshold: 1.01, ..Default::default() };
        let a = explain_anchor(&model, "a bad day", &vocab, &params, 5).unwrap();
        assert!(a.below_threshold);
        assert!(explain_anchor(&model, "", &vocab, &params, 5).is_err());
    }

    fn polite_groups() -> (ParsedDoc, Vec<AgreementGroup>) {
        let doc = ParsedDoc::parse("He is a polite white man.");
        let hits = identify(&doc, &Lexicon::builtin(), &SensitiveAttribute::ALL);
        let polite = 3;
        let man = 5;
        let groups = merge_tokens(&hits, &[polite, man], &AntonymLexicon::builtin(), &doc);
        (doc, groups)
    }

    #[test]
    fn merge_adds_antonym_singleton() {
        let (doc, groups) = polite_groups();
        assert_eq!(groups.len(), 3);
        assert_eq!(groups[2].origin, GroupOrigin::Explanation);
        assert_eq!(doc.tokens[groups[2].members[0].token_index].text, "polite");
        assert_eq!(groups[2].members[0].source, MemberSource::Antonym("rude".into()));
    }

    #[test]
    fn merge_without_hits_or_antonyms() {
        let doc = ParsedDoc::parse("The polite waiter left.");
        let hits = identify(&doc, &Lexicon::builtin(), &SensitiveAttribute::ALL);
        assert!(merge_tokens(&hits, &[1], &AntonymLexicon::builtin(), &doc).is_empty());
        let doc = ParsedDoc::parse("He is a kind man.");
        let hits = identify(&doc, &Lexicon::builtin(), &SensitiveAttribute::ALL);
        assert_eq!(merge_tokens(&hits, &[3], &AntonymLexicon::builtin(), &doc).len(), 1);
    }

    #[test]
    fn merged_output_extends_base_output() {
        let (doc, groups) = polite_groups();
        let lex = Lexicon::builtin();
        let config = GenConfig::default();
        let base_groups = group_hits(&identify(&doc, &lex, &SensitiveAttribute::ALL), &doc.clauses);
        let base = generate_from_groups("d", &doc, &base_groups, &lex, &config, None);
        let merged = generate_from_groups("d", &doc, &groups, &lex, &config, None);
        assert_eq!(base.len(), 3);
        assert_eq!(merged.len(), 7);
        for cf in &base {
            assert!(merged.iter().any(|m| m.text == cf.text));
        }
        assert_eq!(merged.iter().filter(|c| c.text.contains("rude")).count(), 4);
    }
}
