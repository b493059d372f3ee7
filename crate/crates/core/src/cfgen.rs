//! Sensitive-token identification and multi-token counterfactual generation.
//!
//! Generation runs identify → group → enumerate → realize → filter. Tokens
//! that must agree (co-referring gender words of one clause) form one group
//! and flip together; every other hit is a singleton group. In multi-token
//! mode every non-empty subset of the groups inside one clause becomes a
//! counterfactual; combinations that span clauses are never produced.
//!
//! Replacement words are drawn once per document from a generator seeded by
//! `(seed, doc id)` and shared by all subsets, so the single-token output is
//! always a subset of the multi-token output.

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use itertools::Itertools;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::lexicon::{Lexicon, LexiconEntry, SensitiveAttribute};
use crate::seed::rng_for;
use crate::text::{apply_case_shape, detect_case_shape, Clause, ParsedDoc};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveHit {
    pub token_index: usize,
    pub attribute: SensitiveAttribute,
    pub entry: LexiconEntry,
    pub clause_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupOrigin {
    Attribute(SensitiveAttribute),
    Explanation,
}

impl GroupOrigin {
    pub fn label(self) -> &'static str {
        match self {
            GroupOrigin::Attribute(a) => a.as_str(),
            GroupOrigin::Explanation => "explanation",
        }
    }
}

/// Where a group member's replacement comes from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemberSource {
    Lexicon(LexiconEntry),
    /// Fixed replacement (the first antonym of an explanation token).
    Antonym(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMember {
    pub token_index: usize,
    pub source: MemberSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementGroup {
    pub id: usize,
    pub origin: GroupOrigin,
    pub clause_id: usize,
    pub members: Vec<GroupMember>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CounterfactualSpec {
    pub clause_id: usize,
    pub flipped_group_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub start: usize,
    pub end: usize,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterfactual {
    pub parent_id: String,
    pub text: String,
    pub spec: CounterfactualSpec,
    pub flipped_attributes: Vec<String>,
    pub substitutions: Vec<Substitution>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    Single,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub attributes: Vec<SensitiveAttribute>,
    pub mode: GenMode,
    pub max_groups_per_clause: usize,
    pub max_counterfactuals_per_doc: usize,
    pub seed: u64,
    pub filter_enabled: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            attributes: SensitiveAttribute::ALL.to_vec(),
            mode: GenMode::Multi,
            max_groups_per_clause: 8,
            max_counterfactuals_per_doc: 256,
            seed: 0,
            filter_enabled: true,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_groups_per_clause == 0 || self.max_counterfactuals_per_doc == 0 {
            return Err(Error::Config("generation caps must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_mode(&self, mode: GenMode) -> Self {
        GenConfig {
            mode,
            ..self.clone()
        }
    }

    pub fn with_attributes(&self, attributes: Vec<SensitiveAttribute>) -> Self {
        GenConfig {
            attributes,
            ..self.clone()
        }
    }
}

/// One hit per (word token, matching entry) whose attribute is in `filter`,
/// ordered by token then attribute.
pub fn identify(
    doc: &ParsedDoc,
    lexicon: &Lexicon,
    filter: &[SensitiveAttribute],
) -> Vec<SensitiveHit> {
    let clause_of = doc.clause_of_tokens();
    doc.word_tokens()
        .flat_map(|tok| {
            let clause_id = clause_of[tok.index];
            lexicon
                .lookup(&tok.text)
                .into_iter()
                .filter(|e| filter.contains(&e.attribute))
                .filter_map(move |e| {
                    Some(SensitiveHit {
                        token_index: tok.index,
                        attribute: e.attribute,
                        entry: e.clone(),
                        clause_id: clause_id?,
                    })
                })
        })
        .collect()
}

/// Forms agreement groups.
///
/// Gender hits of one clause that share a grammatical number (the gender
/// entry's group key) flip together; every other hit is its own group. Ids
/// follow clause order, then the first member's token order.
pub fn group_hits(hits: &[SensitiveHit], clauses: &[Clause]) -> Vec<AgreementGroup> {
    let known: HashSet<usize> = clauses.iter().map(|c| c.id).collect();
    let mut gender: BTreeMap<(usize, Option<&str>), Vec<&SensitiveHit>> = BTreeMap::new();
    let mut drafts: Vec<(usize, usize, GroupOrigin, Vec<&SensitiveHit>)> = Vec::new();
    for hit in hits.iter().filter(|h| known.contains(&h.clause_id)) {
        if hit.attribute == SensitiveAttribute::Gender {
            gender
                .entry((hit.clause_id, hit.entry.group_key.as_deref()))
                .or_default()
                .push(hit);
        } else {
            drafts.push((
                hit.clause_id,
                hit.token_index,
                GroupOrigin::Attribute(hit.attribute),
                vec![hit],
            ));
        }
    }
    for ((clause_id, _), members) in gender {
        drafts.push((
            clause_id,
            members[0].token_index,
            GroupOrigin::Attribute(SensitiveAttribute::Gender),
            members,
        ));
    }
    drafts.sort_by_key(|(clause, token, origin, _)| (*clause, *token, origin_rank(*origin)));
    drafts
        .into_iter()
        .enumerate()
        .map(|(id, (clause_id, _, origin, members))| AgreementGroup {
            id,
            origin,
            clause_id,
            members: members
                .into_iter()
                .map(|h| GroupMember {
                    token_index: h.token_index,
                    source: MemberSource::Lexicon(h.entry.clone()),
                })
                .collect(),
        })
        .collect()
}

fn origin_rank(origin: GroupOrigin) -> usize {
    match origin {
        GroupOrigin::Attribute(a) => a as usize,
        GroupOrigin::Explanation => SensitiveAttribute::ALL.len(),
    }
}

/// Clause-local flip subsets.
///
/// Multi-token mode yields every non-empty subset of each clause's groups,
/// single-token mode only singletons. A clause with more than
/// `max_groups_per_clause` groups degrades to singletons plus the full set.
/// When over budget, specs are kept by (size, clause, ids) so singletons
/// survive; output is ordered by clause, size, then lexicographic ids.
pub fn enumerate_specs(groups: &[AgreementGroup], config: &GenConfig) -> Vec<CounterfactualSpec> {
    let mut by_clause: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for g in groups {
        by_clause.entry(g.clause_id).or_default().push(g.id);
    }
    let mut specs: Vec<CounterfactualSpec> = Vec::new();
    for (clause_id, mut ids) in by_clause {
        ids.sort_unstable();
        let sizes: Vec<usize> = match config.mode {
            GenMode::Single => vec![1],
            GenMode::Multi if ids.len() <= config.max_groups_per_clause => (1..=ids.len()).collect(),
            GenMode::Multi => {
                log::debug!(
                    "clause {clause_id} has {} groups; enumerating singletons and the full set",
                    ids.len()
                );
                vec![1, ids.len()]
            }
        };
        for k in sizes {
            for combo in ids.iter().copied().combinations(k) {
                specs.push(CounterfactualSpec {
                    clause_id,
                    flipped_group_ids: combo,
                });
            }
        }
    }
    if specs.len() > config.max_counterfactuals_per_doc {
        specs.sort_by(|a, b| {
            (a.flipped_group_ids.len(), a.clause_id, &a.flipped_group_ids).cmp(&(
                b.flipped_group_ids.len(),
                b.clause_id,
                &b.flipped_group_ids,
            ))
        });
        specs.truncate(config.max_counterfactuals_per_doc);
        specs.sort_by(|a, b| {
            (a.clause_id, a.flipped_group_ids.len(), &a.flipped_group_ids).cmp(&(
                b.clause_id,
                b.flipped_group_ids.len(),
                &b.flipped_group_ids,
            ))
        });
    }
    specs
}

/// Replacement word (lowercase, before case reshaping) for every perturbable
/// token of a document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PerturbationPlan {
    pub replacements: BTreeMap<usize, String>,
    /// Religion group key shared by all religion tokens of the document.
    pub coherence_key: Option<String>,
}

/// Draws every replacement for the document up front.
pub fn draw_plan<R: Rng + ?Sized>(
    groups: &[AgreementGroup],
    lexicon: &Lexicon,
    rng: &mut R,
) -> PerturbationPlan {
    let religion: Vec<&LexiconEntry> = groups
        .iter()
        .flat_map(|g| &g.members)
        .filter_map(|m| match &m.source {
            MemberSource::Lexicon(e) if e.attribute == SensitiveAttribute::Religion => Some(e),
            _ => None,
        })
        .collect();
    let coherence_key = if religion.is_empty() {
        None
    } else {
        let keys = lexicon.coherent_keys(&religion);
        (!keys.is_empty()).then(|| keys[rng.random_range(0..keys.len())].to_string())
    };
    let mut replacements = BTreeMap::new();
    for member in groups.iter().flat_map(|g| &g.members) {
        let word = match &member.source {
            MemberSource::Lexicon(e) => {
                let ctx = (e.attribute == SensitiveAttribute::Religion)
                    .then_some(coherence_key.as_deref())
                    .flatten();
                lexicon.choose_perturbation(e, rng, ctx)
            }
            MemberSource::Antonym(a) => a.clone(),
        };
        replacements.entry(member.token_index).or_insert(word);
    }
    PerturbationPlan {
        replacements,
        coherence_key,
    }
}

fn starts_with_vowel(word: &str) -> bool {
    word.chars()
        .find(|c| c.is_alphabetic())
        .is_some_and(|c| matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u'))
}

/// Applies one spec to the document text.
///
/// Replacements keep the original token's case shape. An article directly
/// before a replaced word in the same clause is switched between `a` and
/// `an` to match the replacement.
pub fn realize(
    spec: &CounterfactualSpec,
    doc: &ParsedDoc,
    groups: &[AgreementGroup],
    plan: &PerturbationPlan,
    parent_id: &str,
) -> Counterfactual {
    let flipped: Vec<&AgreementGroup> = spec
        .flipped_group_ids
        .iter()
        .filter_map(|id| groups.iter().find(|g| g.id == *id))
        .collect();
    let mut targets: BTreeMap<usize, String> = BTreeMap::new();
    for member in flipped.iter().flat_map(|g| &g.members) {
        if let Some(word) = plan.replacements.get(&member.token_index) {
            targets.entry(member.token_index).or_insert_with(|| word.clone());
        }
    }

    let clause_of = doc.clause_of_tokens();
    let mut subs: Vec<Substitution> = Vec::new();
    for (&t, word) in &targets {
        let tok = &doc.tokens[t];
        let to = apply_case_shape(detect_case_shape(&tok.text), word);
        if to.to_lowercase() == tok.text.to_lowercase() {
            continue;
        }
        if t > 0 && !targets.contains_key(&(t - 1)) {
            let prev = &doc.tokens[t - 1];
            if prev.is_word && clause_of[t - 1].is_some() && clause_of[t - 1] == clause_of[t] {
                let article = prev.text.to_lowercase();
                let fixed = match (article.as_str(), starts_with_vowel(&to)) {
                    ("a", true) => Some("an"),
                    ("an", false) => Some("a"),
                    _ => None,
                };
                if let Some(fixed) = fixed {
                    subs.push(Substitution {
                        start: prev.start,
                        end: prev.end,
                        from: prev.text.clone(),
                        to: apply_case_shape(detect_case_shape(&prev.text), fixed),
                    });
                }
            }
        }
        subs.push(Substitution {
            start: tok.start,
            end: tok.end,
            from: tok.text.clone(),
            to,
        });
    }
    subs.sort_by_key(|s| s.start);

    let mut text = String::with_capacity(doc.text.len() + 16);
    let mut pos = 0;
    for s in &subs {
        text.push_str(&doc.text[pos..s.start]);
        text.push_str(&s.to);
        pos = s.end;
    }
    text.push_str(&doc.text[pos..]);

    let mut flipped_attributes: Vec<String> = Vec::new();
    for g in &flipped {
        let label = g.origin.label().to_string();
        if !flipped_attributes.contains(&label) {
            flipped_attributes.push(label);
        }
    }
    Counterfactual {
        parent_id: parent_id.to_string(),
        text,
        spec: spec.clone(),
        flipped_attributes,
        substitutions: subs,
    }
}

/// Pluggable plausibility scorer (grammar checker, language model, ...).
pub trait TextScorer: Send + Sync {
    fn score(&self, text: &str) -> std::result::Result<f64, String>;
}

#[derive(Clone)]
pub struct ScoreFilter {
    pub scorer: Arc<dyn TextScorer>,
    pub threshold: f64,
}

impl std::fmt::Debug for ScoreFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoreFilter")
            .field("threshold", &self.threshold)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Filtered {
    pub kept: Vec<Counterfactual>,
    pub advisories: Vec<String>,
}

/// Keeps candidates scoring at least the threshold. Scorer failures keep the
/// candidate and add an advisory.
pub fn filter_cf(cands: Vec<Counterfactual>, filter: Option<&ScoreFilter>) -> Filtered {
    let Some(filter) = filter else {
        return Filtered {
            kept: cands,
            advisories: Vec::new(),
        };
    };
    let mut out = Filtered::default();
    for cf in cands {
        match filter.scorer.score(&cf.text) {
            Ok(score) if score >= filter.threshold => out.kept.push(cf),
            Ok(_) => {}
            Err(e) => {
                out.advisories
                    .push(format!("scorer failed on `{}`: {e}; kept", cf.text));
                out.kept.push(cf);
            }
        }
    }
    out
}

/// Enumerates, realizes, deduplicates and filters counterfactuals for groups
/// that have already been formed.
pub fn generate_from_groups(
    doc_id: &str,
    doc: &ParsedDoc,
    groups: &[AgreementGroup],
    lexicon: &Lexicon,
    config: &GenConfig,
    filter: Option<&ScoreFilter>,
) -> Vec<Counterfactual> {
    let mut rng = rng_for(config.seed, doc_id);
    let plan = draw_plan(groups, lexicon, &mut rng);
    let mut seen = HashSet::new();
    let cands: Vec<Counterfactual> = enumerate_specs(groups, config)
        .iter()
        .map(|spec| realize(spec, doc, groups, &plan, doc_id))
        .filter(|cf| cf.text != doc.text && seen.insert(cf.text.clone()))
        .collect();
    if !config.filter_enabled {
        return cands;
    }
    let filtered = filter_cf(cands, filter);
    for a in &filtered.advisories {
        log::warn!("{doc_id}: {a}");
    }
    filtered.kept
}

/// Full pipeline for one document. `parse` is an optional CoNLL-U parse used
/// in place of the heuristic clause segmenter.
pub fn generate(
    doc: &Document,
    lexicon: &Lexicon,
    config: &GenConfig,
    parse: Option<&str>,
) -> Result<Vec<Counterfactual>> {
    generate_filtered(doc, lexicon, config, parse, None)
}

pub fn generate_filtered(
    doc: &Document,
    lexicon: &Lexicon,
    config: &GenConfig,
    parse: Option<&str>,
    filter: Option<&ScoreFilter>,
) -> Result<Vec<Counterfactual>> {
    let parsed = match parse {
        Some(conllu) => ParsedDoc::parse_with_conllu(&doc.text, conllu)?,
        None => ParsedDoc::parse(&doc.text),
    };
    let hits = identify(&parsed, lexicon, &config.attributes);
    let groups = group_hits(&hits, &parsed.clauses);
    Ok(generate_from_groups(
        &doc.id, &parsed, &groups, lexicon, config, filter,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn lex() -> Lexicon {
        Lexicon::builtin()
    }

    fn texts(doc: &str, mode: GenMode, seed: u64) -> Vec<String> {
        let config = GenConfig {
            mode,
            seed,
            ..Default::default()
        };
        generate(&Document::new("d", doc, None), &lex(), &config, None)
            .unwrap()
            .into_iter()
            .map(|c| c.text)
            .collect()
    }

    fn groups_for(text: &str) -> (ParsedDoc, Vec<AgreementGroup>) {
        let doc = ParsedDoc::parse(text);
        let hits = identify(&doc, &lex(), &SensitiveAttribute::ALL);
        let groups = group_hits(&hits, &doc.clauses);
        (doc, groups)
    }

    fn words_of(doc: &ParsedDoc, g: &AgreementGroup) -> Vec<String> {
        g.members
            .iter()
            .map(|m| doc.tokens[m.token_index].text.clone())
            .collect()
    }

    #[test]
    fn identify_examples() {
        let doc = ParsedDoc::parse("She is going to church.");
        let hits = identify(&doc, &lex(), &SensitiveAttribute::ALL);
        let got: Vec<_> = hits
            .iter()
            .map(|h| (doc.tokens[h.token_index].text.as_str(), h.attribute))
            .collect();
        assert_eq!(
            got,
            vec![
                ("She", SensitiveAttribute::Gender),
                ("church", SensitiveAttribute::Religion)
            ]
        );
        let doc = ParsedDoc::parse("The weather is nice.");
        assert!(identify(&doc, &lex(), &SensitiveAttribute::ALL).is_empty());
        let doc = ParsedDoc::parse("She is going to church.");
        let only_gender = identify(&doc, &lex(), &[SensitiveAttribute::Gender]);
        assert_eq!(only_gender.len(), 1);
    }

    #[test]
    fn table2_first_row_gender_hits() {
        let text = "Love it! Alas, though, there are no fun non-derogatory nouns for the male \
            equivalent of tomboy. My son's choices will be relegated to \"sissy\"/\"mama's boy\" \
            or \"variant\"/\"nonconforming\". Yes, he's a \"boy\" and \"human\" -- but as you \
            noted, the power of self-identification as something cool and different can be magical.";
        let doc = ParsedDoc::parse(text);
        let hits = identify(&doc, &lex(), &SensitiveAttribute::ALL);
        let words: BTreeSet<String> = hits
            .iter()
            .map(|h| doc.tokens[h.token_index].text.to_lowercase())
            .collect();
        assert!(hits.iter().all(|h| h.attribute == SensitiveAttribute::Gender));
        let expected: BTreeSet<String> =
            ["boy", "male", "son", "he"].iter().map(|s| s.to_string()).collect();
        assert_eq!(words, expected);
    }

    #[test]
    fn grouping_examples() {
        let (doc, groups) = groups_for("He and his friends are amazing.");
        assert_eq!(groups.len(), 1);
        assert_eq!(words_of(&doc, &groups[0]), vec!["He", "his"]);

        let (doc, groups) = groups_for("He is a polite white man.");
        assert_eq!(groups.len(), 2);
        assert_eq!(words_of(&doc, &groups[0]), vec!["He", "man"]);
        assert_eq!(groups[1].origin, GroupOrigin::Attribute(SensitiveAttribute::Race));

        let (_, groups) = groups_for("She is going to church.");
        assert_eq!(groups.len(), 2);
        assert!(groups.iter().all(|g| g.members.len() == 1));

        // Singular and plural referents flip independently.
        let (doc, groups) = groups_for("He has said in public about women.");
        assert_eq!(groups.len(), 2);
        assert_eq!(words_of(&doc, &groups[1]), vec!["women"]);
    }

    #[test]
    fn spec_enumeration_examples() {
        let config = GenConfig::default();
        let (_, groups) = groups_for("She is going to church, a white guy will be there too.");
        let specs = enumerate_specs(&groups, &config);
        assert_eq!(specs.len(), 6);
        let ids: Vec<_> = specs.iter().map(|s| s.flipped_group_ids.clone()).collect();
        assert_eq!(
            ids,
            vec![vec![0], vec![1], vec![0, 1], vec![2], vec![3], vec![2, 3]]
        );
        let (_, groups) = groups_for("She is going to church.");
        assert_eq!(enumerate_specs(&groups, &config).len(), 3);
        assert!(enumerate_specs(&[], &config).is_empty());
    }

    #[test]
    fn budget_keeps_singletons() {
        // Ten race words in one clause, then one more clause with one group.
        let text = "black white asian black white asian black white asian black. he left.";
        let (_, groups) = groups_for(text);
        assert_eq!(groups.len(), 11);
        let config = GenConfig {
            max_groups_per_clause: 12,
            max_counterfactuals_per_doc: 20,
            ..Default::default()
        };
        let specs = enumerate_specs(&groups, &config);
        assert_eq!(specs.len(), 20);
        assert!(specs.iter().any(|s| s.clause_id == 1));
        assert_eq!(specs.iter().filter(|s| s.flipped_group_ids.len() == 1).count(), 11);

        let degraded = enumerate_specs(&groups, &GenConfig::default());
        // 10 > 8 groups: singles + full set, plus the other clause's single.
        assert_eq!(degraded.len(), 10 + 1 + 1);
    }

    #[test]
    fn table3_outputs() {
        let out = texts("She is going to church.", GenMode::Multi, 3);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0], "He is going to church.");
        let temple = out[1].strip_prefix("She is going to ").unwrap().trim_end_matches('.');
        assert!(lex().lookup("church")[0].perturbations.iter().any(|p| p == temple));
        assert_eq!(out[2], format!("He is going to {temple}."));

        assert_eq!(
            texts("He and his friends are amazing.", GenMode::Multi, 3),
            vec!["She and her friends are amazing."]
        );
        assert_eq!(
            texts("He has said in public about women.", GenMode::Multi, 3),
            vec![
                "She has said in public about women.",
                "He has said in public about men.",
                "She has said in public about men."
            ]
        );
    }

    #[test]
    fn single_token_mode_is_subset() {
        let single = texts("She is going to church.", GenMode::Single, 5);
        let multi = texts("She is going to church.", GenMode::Multi, 5);
        assert_eq!(single.len(), 2);
        assert!(single.iter().all(|t| multi.contains(t)));
        assert!(texts("The weather is nice.", GenMode::Multi, 5).is_empty());
    }

    #[test]
    fn religion_flips_stay_coherent() {
        let coherent = [
            ("muslim", "mosque"),
            ("hindu", "temple"),
            ("sikh", "gurudwara"),
            ("jew", "synagogue"),
            ("buddhist", "monastery"),
        ];
        for seed in 0..30 {
            let out = texts("She is a Christian, who visits Church.", GenMode::Multi, seed);
            let both = out
                .iter()
                .find(|t| t.starts_with("She") && !t.contains("Christian") && !t.contains("Church"))
                .expect("religion pair flip");
            assert!(
                coherent.iter().any(|(f, p)| {
                    let f = apply_case_shape(crate::text::CaseShape::Capitalized, f);
                    let p = apply_case_shape(crate::text::CaseShape::Capitalized, p);
                    both.contains(&format!(" {f},")) && both.contains(&format!(" {p}."))
                }),
                "{both}"
            );
        }
    }

    #[test]
    fn jew_synagogue_example_is_reachable() {
        let found = (0..200).any(|seed| {
            texts("She is a Christian, who visits Church.", GenMode::Multi, seed)
                .contains(&"He is a Jew, who visits Synagogue.".to_string())
        });
        assert!(found);
    }

    #[test]
    fn article_fix_makes_scorer_redundant() {
        struct RejectAOriental;
        impl TextScorer for RejectAOriental {
            fn score(&self, text: &str) -> std::result::Result<f64, String> {
                Ok(if text.to_lowercase().contains("a oriental") { 0.0 } else { 1.0 })
            }
        }
        let lex = Lexicon::new(
            crate::lexicon::parse_lexicon_tsv("race\tcaucasian\toriental\n", "t").unwrap(),
        )
        .unwrap();
        let doc = Document::new("d", "a caucasian man", None);
        let filter = ScoreFilter {
            scorer: Arc::new(RejectAOriental),
            threshold: 0.5,
        };
        let out =
            generate_filtered(&doc, &lex, &GenConfig::default(), None, Some(&filter)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, "an oriental man");
        assert_eq!(out[0].substitutions.len(), 2);

        let doc = Document::new("d", "An oriental man", None);
        let lex = Lexicon::new(
            crate::lexicon::parse_lexicon_tsv("race\toriental\tblack\n", "t").unwrap(),
        )
        .unwrap();
        let out = generate(&doc, &lex, &GenConfig::default(), None).unwrap();
        assert_eq!(out[0].text, "A black man");
    }

    #[test]
    fn filter_modes() {
        struct Never;
        impl TextScorer for Never {
            fn score(&self, _: &str) -> std::result::Result<f64, String> {
                Ok(0.0)
            }
        }
        struct Broken;
        impl TextScorer for Broken {
            fn score(&self, _: &str) -> std::result::Result<f64, String> {
                Err("offline".into())
            }
        }
        let doc = Document::new("d", "She is going to church.", None);
        let all = generate(&doc, &lex(), &GenConfig::default(), None).unwrap();
        assert_eq!(filter_cf(all.clone(), None).kept, all);
        let never = ScoreFilter {
            scorer: Arc::new(Never),
            threshold: 0.5,
        };
        assert!(filter_cf(all.clone(), Some(&never)).kept.is_empty());
        let broken = ScoreFilter {
            scorer: Arc::new(Broken),
            threshold: 0.5,
        };
        let out = filter_cf(all.clone(), Some(&broken));
        assert_eq!(out.kept.len(), all.len());
        assert_eq!(out.advisories.len(), all.len());
    }

    #[test]
    fn realize_preserves_bytes_outside_spans() {
        let doc = Document::new("d", "She is going to church, a white guy will be there too.", None);
        for cf in generate(&doc, &lex(), &GenConfig::default(), None).unwrap() {
            let mut pos = 0;
            let mut out_pos = 0;
            for s in &cf.substitutions {
                let gap = &doc.text[pos..s.start];
                assert_eq!(&cf.text[out_pos..out_pos + gap.len()], gap);
                out_pos += gap.len() + s.to.len();
                assert_eq!(&doc.text[s.start..s.end], s.from);
                assert_ne!(s.from.to_lowercase(), s.to.to_lowercase());
                pos = s.end;
            }
            assert_eq!(&cf.text[out_pos..], &doc.text[pos..]);
        }
    }

    #[test]
    fn conllu_parse_feeds_generation() {
        let conllu = crate::conllu::tests::two_clause_fixture();
        let doc = Document::new("d", "She is going to church, a white guy will be there too.", None);
        let with_parse = generate(&doc, &lex(), &GenConfig::default(), Some(&conllu)).unwrap();
        let heuristic = generate(&doc, &lex(), &GenConfig::default(), None).unwrap();
        assert_eq!(with_parse, heuristic);
        assert!(generate(&doc, &lex(), &GenConfig::default(), Some("1\tx\n")).is_err());
    }
}
