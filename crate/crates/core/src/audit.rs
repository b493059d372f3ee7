//! Flip-rate auditing and augmentation-retraining mitigation.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfgen::{
    generate_from_groups, group_hits, identify, Counterfactual, GenConfig, GenMode, ScoreFilter,
};
use crate::corpus::{Document, Label};
use crate::error::{Error, Result};
use crate::explain::{merge_tokens, ExplainerKind, ExplainerSetup};
use crate::lexicon::{Lexicon, SensitiveAttribute};
use crate::models::{evaluate, train, Classifier, ModelSpec};
use crate::seed::derive_seed;
use crate::text::ParsedDoc;

/// Everything needed to turn a document into counterfactuals.
#[derive(Clone, Copy)]
pub struct Generator<'a> {
    pub lexicon: &'a Lexicon,
    pub config: &'a GenConfig,
    pub explainer: Option<&'a ExplainerSetup>,
    /// CoNLL-U parses keyed by document id.
    pub parses: Option<&'a BTreeMap<String, String>>,
    pub filter: Option<&'a ScoreFilter>,
}

impl<'a> Generator<'a> {
    pub fn new(lexicon: &'a Lexicon, config: &'a GenConfig) -> Self {
        Generator {
            lexicon,
            config,
            explainer: None,
            parses: None,
            filter: None,
        }
    }

    fn parse(&self, doc: &Document) -> Result<ParsedDoc> {
        match self.parses.and_then(|p| p.get(&doc.id)) {
            Some(conllu) => ParsedDoc::parse_with_conllu(&doc.text, conllu),
            None => Ok(ParsedDoc::parse(&doc.text)),
        }
    }

    /// Counterfactuals of `doc`. The model is consulted only when an
    /// explainer contributes extra perturbation tokens.
    pub fn counterfactuals(&self, doc: &Document, model: &dyn Classifier) -> Result<Vec<Counterfactual>> {
        let parsed = self.parse(doc)?;
        let hits = identify(&parsed, self.lexicon, &self.config.attributes);
        let groups = match self.explainer {
            Some(setup) if setup.kind != ExplainerKind::None && !hits.is_empty() => {
                let seed = derive_seed(self.config.seed, &doc.id);
                let tokens = setup.tokens(model, &doc.text, seed)?;
                merge_tokens(&hits, &tokens, &setup.antonyms, &parsed)
            }
            _ => group_hits(&hits, &parsed.clauses),
        };
        Ok(generate_from_groups(
            &doc.id,
            &parsed,
            &groups,
            self.lexicon,
            self.config,
            self.filter,
        ))
    }

    /// Whether `doc` contains a sensitive token of the configured attributes.
    pub fn has_hits(&self, doc: &Document) -> Result<bool> {
        let parsed = self.parse(doc)?;
        Ok(!identify(&parsed, self.lexicon, &self.config.attributes).is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipRecord {
    pub doc_id: String,
    pub text: String,
    pub orig_pred: Label,
    pub cf_pred: Label,
    pub flipped_attributes: Vec<String>,
}

pub fn detect_flips(model: &dyn Classifier, doc: &Document, cfs: &[Counterfactual]) -> Vec<FlipRecord> {
    if cfs.is_empty() {
        return Vec::new();
    }
    let orig_pred = model.predict(&doc.text);
    cfs.iter()
        .filter_map(|cf| {
            let cf_pred = model.predict(&cf.text);
            (cf_pred != orig_pred).then(|| FlipRecord {
                doc_id: doc.id.clone(),
                text: cf.text.clone(),
                orig_pred,
                cf_pred,
                flipped_attributes: cf.flipped_attributes.clone(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlipRate {
    pub flip_rate_pct: f64,
    /// Rate over documents that produced at least one counterfactual.
    pub conditional_flip_rate_pct: f64,
    pub n_docs: usize,
    pub n_docs_with_counterfactuals: usize,
    pub n_flipped_docs: usize,
    pub n_counterfactuals: usize,
    pub flips: Vec<FlipRecord>,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

pub fn flip_rate(model: &dyn Classifier, docs: &[Document], gen: &Generator) -> Result<FlipRate> {
    if docs.is_empty() {
        return Err(Error::Corpus("flip-rate needs a non-empty corpus".into()));
    }
    let per_doc: Vec<(usize, Vec<FlipRecord>)> = docs
        .par_iter()
        .map(|doc| {
            let cfs = gen.counterfactuals(doc, model)?;
            Ok((cfs.len(), detect_flips(model, doc, &cfs)))
        })
        .collect::<Result<_>>()?;
    let n_with = per_doc.iter().filter(|(n, _)| *n > 0).count();
    let n_flipped = per_doc.iter().filter(|(_, f)| !f.is_empty()).count();
    Ok(FlipRate {
        flip_rate_pct: pct(n_flipped, docs.len()),
        conditional_flip_rate_pct: pct(n_flipped, n_with),
        n_docs: docs.len(),
        n_docs_with_counterfactuals: n_with,
        n_flipped_docs: n_flipped,
        n_counterfactuals: per_doc.iter().map(|(n, _)| n).sum(),
        flips: per_doc.into_iter().flat_map(|(_, f)| f).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeRates {
    /// Over the whole corpus.
    pub flip_rate_pct: f64,
    /// Over documents containing the attribute only.
    pub filtered_flip_rate_pct: f64,
    pub n_docs_with_attribute: usize,
    pub n_flipped_docs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfigEcho {
    pub mode: GenMode,
    pub seed: u64,
    pub explainer: ExplainerKind,
    pub attributes: Vec<SensitiveAttribute>,
    pub max_groups_per_clause: usize,
    pub max_counterfactuals_per_doc: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub n_docs: usize,
    pub n_docs_with_hits: usize,
    pub flip_rate_pct: f64,
    pub conditional_flip_rate_pct: f64,
    pub n_counterfactuals: usize,
    pub per_attribute: BTreeMap<SensitiveAttribute, AttributeRates>,
    pub flips: Vec<FlipRecord>,
    pub config: AuditConfigEcho,
}

/// Overall flip-rate from one all-attributes pass, plus one pass per
/// attribute.
pub fn audit(model: &dyn Classifier, docs: &[Document], gen: &Generator) -> Result<AuditReport> {
    let overall = flip_rate(model, docs, gen)?;
    let hits: Vec<bool> = docs
        .par_iter()
        .map(|d| gen.has_hits(d))
        .collect::<Result<_>>()?;
    let mut per_attribute = BTreeMap::new();
    for &attr in &gen.config.attributes {
        let config = gen.config.with_attributes(vec![attr]);
        let sub = Generator {
            config: &config,
            ..*gen
        };
        let with_attr: Vec<bool> = docs
            .par_iter()
            .map(|d| sub.has_hits(d))
            .collect::<Result<_>>()?;
        let rate = flip_rate(model, docs, &sub)?;
        let n_with = with_attr.iter().filter(|b| **b).count();
        per_attribute.insert(
            attr,
            AttributeRates {
                flip_rate_pct: rate.flip_rate_pct,
                filtered_flip_rate_pct: pct(rate.n_flipped_docs, n_with),
                n_docs_with_attribute: n_with,
                n_flipped_docs: rate.n_flipped_docs,
            },
        );
    }
    Ok(AuditReport {
        n_docs: docs.len(),
        n_docs_with_hits: hits.iter().filter(|b| **b).count(),
        flip_rate_pct: overall.flip_rate_pct,
        conditional_flip_rate_pct: overall.conditional_flip_rate_pct,
        n_counterfactuals: overall.n_counterfactuals,
        per_attribute,
        flips: overall.flips,
        config: AuditConfigEcho {
            mode: gen.config.mode,
            seed: gen.config.seed,
            explainer: gen.explainer.map_or(ExplainerKind::None, |e| e.kind),
            attributes: gen.config.attributes.clone(),
            max_groups_per_clause: gen.config.max_groups_per_clause,
            max_counterfactuals_per_doc: gen.config.max_counterfactuals_per_doc,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMode {
    Flipped,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Gold,
    Predicted,
}

/// Counterfactual Data: counterfactuals of the training documents labeled
/// with their parent's label.
pub fn build_cf_data(
    train_docs: &[Document],
    gen: &Generator,
    model: &dyn Classifier,
    augment: AugmentMode,
    label_source: LabelSource,
) -> Result<Vec<Document>> {
    let per_doc: Vec<Vec<Document>> = train_docs
        .par_iter()
        .map(|doc| {
            let cfs = gen.counterfactuals(doc, model)?;
            if cfs.is_empty() {
                return Ok(Vec::new());
            }
            let orig_pred = model.predict(&doc.text);
            let label = match label_source {
                LabelSource::Gold => doc
                    .label
                    .ok_or_else(|| Error::Corpus(format!("document `{}` has no label", doc.id)))?,
                LabelSource::Predicted => orig_pred,
            };
            Ok(cfs
                .iter()
                .enumerate()
                .filter(|(_, cf)| augment == AugmentMode::All || model.predict(&cf.text) != orig_pred)
                .map(|(k, cf)| Document::labeled(format!("{}#cf{k}", doc.id), cf.text.clone(), label))
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per_doc.into_iter().flatten().collect())
}

/// Relative flip-rate decrease in percent; 0 when `fr_pre` is 0.
pub fn cfi(fr_pre: f64, fr_post: f64) -> f64 {
    cfi_checked(fr_pre, fr_post).0
}

/// CFI plus a flag set when it is undefined (`fr_pre` = 0).
pub fn cfi_checked(fr_pre: f64, fr_post: f64) -> (f64, bool) {
    if fr_pre == 0.0 {
        (0.0, true)
    } else {
        (100.0 * (fr_pre - fr_post) / fr_pre, false)
    }
}

/// Accuracy drop in percentage points; negative when accuracy improved.
pub fn accuracy_drop(acc_pre: f64, acc_post: f64) -> f64 {
    100.0 * (acc_pre - acc_post)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationOptions {
    pub augment: AugmentMode,
    pub label_source: LabelSource,
    pub seed: u64,
    /// Also measure single-token flip-rate on both models.
    pub cross_eval: bool,
}

impl Default for MitigationOptions {
    fn default() -> Self {
        MitigationOptions {
            augment: AugmentMode::Flipped,
            label_source: LabelSource::Gold,
            seed: 42,
            cross_eval: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossEval {
    pub single_fr_original_pct: f64,
    pub single_fr_retrained_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationReport {
    pub mode: GenMode,
    pub attributes: Vec<SensitiveAttribute>,
    pub n_train: usize,
    pub n_test: usize,
    pub fr_pre_pct: f64,
    pub fr_post_pct: f64,
    pub cfi_pct: f64,
    pub cfi_undefined: bool,
    pub acc_pre: f64,
    pub acc_post: f64,
    pub ad_points: f64,
    pub n_augmented: usize,
    pub cross_eval: Option<CrossEval>,
}

/// Train, measure, augment with Counterfactual Data, retrain, measure again.
///
/// When the generator covers only some attributes, both splits are first
/// restricted to documents that mention one of them.
pub fn mitigate(
    train_docs: &[Document],
    test_docs: &[Document],
    spec: &ModelSpec,
    gen: &Generator,
    opts: &MitigationOptions,
) -> Result<MitigationReport> {
    let restrict = |docs: &[Document]| -> Result<Vec<Document>> {
        if gen.config.attributes.len() == SensitiveAttribute::ALL.len() {
            return Ok(docs.to_vec());
        }
        let keep: Vec<bool> = docs.par_iter().map(|d| gen.has_hits(d)).collect::<Result<_>>()?;
        Ok(docs.iter().zip(keep).filter(|(_, k)| *k).map(|(d, _)| d.clone()).collect())
    };
    let train_docs = restrict(train_docs)?;
    let test_docs = restrict(test_docs)?;
    if train_docs.is_empty() || test_docs.is_empty() {
        return Err(Error::Corpus(
            "mitigation needs non-empty train and test splits".into(),
        ));
    }

    let model = train(&train_docs, spec, opts.seed)?;
    let pre = flip_rate(&model, &test_docs, gen)?;
    let acc_pre = evaluate(&model, &test_docs)?;

    let augmented = build_cf_data(&train_docs, gen, &model, opts.augment, opts.label_source)?;
    let retrained = if augmented.is_empty() {
        model.clone()
    } else {
        let mut combined = train_docs.clone();
        combined.extend(augmented.iter().cloned());
        train(&combined, spec, derive_seed(opts.seed, "retrain"))?
    };
    let post = flip_rate(&retrained, &test_docs, gen)?;
    let acc_post = evaluate(&retrained, &test_docs)?;
    let (cfi_pct, cfi_undefined) = cfi_checked(pre.flip_rate_pct, post.flip_rate_pct);

    let cross_eval = if opts.cross_eval {
        let single = gen.config.with_mode(GenMode::Single);
        let sgen = Generator {
            config: &single,
            ..*gen
        };
        Some(CrossEval {
            single_fr_original_pct: flip_rate(&model, &test_docs, &sgen)?.flip_rate_pct,
            single_fr_retrained_pct: flip_rate(&retrained, &test_docs, &sgen)?.flip_rate_pct,
        })
    } else {
        None
    };

    Ok(MitigationReport {
        mode: gen.config.mode,
        attributes: gen.config.attributes.clone(),
        n_train: train_docs.len(),
        n_test: test_docs.len(),
        fr_pre_pct: pre.flip_rate_pct,
        fr_post_pct: post.flip_rate_pct,
        cfi_pct,
        cfi_undefined,
        acc_pre,
        acc_post,
        ad_points: accuracy_drop(acc_pre, acc_post),
        n_augmented: augmented.len(),
        cross_eval,
    })
}

/// One attribute's single- and multi-token mitigation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub attribute: String,
    pub single: MitigationReport,
    pub multi: MitigationReport,
}

/// Aligned plain-text table: pre/post flip-rate, AD and CFI for each mode,
/// then the single-token flip-rate of the multi-token-retrained model.
pub fn render_table(rows: &[TableRow]) -> String {
    let header = [
        "attribute", "s.fr_pre", "s.fr_post", "s.AD", "s.CFI", "m.fr_pre", "m.fr_post", "m.AD",
        "m.CFI", "s.fr_on_m",
    ];
    let mut cells: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
    for r in rows {
        let cross = r
            .multi
            .cross_eval
            .map_or("-".to_string(), |c| format!("{:.2}", c.single_fr_retrained_pct));
        cells.push(vec![
            r.attribute.clone(),
            format!("{:.2}", r.single.fr_pre_pct),
            format!("{:.2}", r.single.fr_post_pct),
            format!("{:.2}", r.single.ad_points),
            format!("{:.2}", r.single.cfi_pct),
            format!("{:.2}", r.multi.fr_pre_pct),
            format!("{:.2}", r.multi.fr_post_pct),
            format!("{:.2}", r.multi.ad_points),
            format!("{:.2}", r.multi.cfi_pct),
            cross,
        ]);
    }
    let widths: Vec<usize> = (0..header.len())
        .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &cells {
        let line: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                if c == 0 {
                    format!("{cell:<w$}", w = widths[c])
                } else {
                    format!("{cell:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keyed_on_he(t: &str) -> f64 {
        if t.split(|c: char| !c.is_alphanumeric()).any(|w| w.eq_ignore_ascii_case("he")) {
            0.9
        } else {
            0.1
        }
    }

    #[test]
    fn cfi_and_ad_examples() {
        assert!((cfi(3.34, 2.98) - 10.78).abs() < 0.01);
        assert!((cfi(2.91, 2.12) - 27.1).abs() < 0.1);
        assert_eq!(cfi(5.0, 5.0), 0.0);
        assert_eq!(cfi_checked(0.0, 1.0), (0.0, true));
        assert!((accuracy_drop(0.9231, 0.8991) - 2.4).abs() < 1e-9);
        assert_eq!(accuracy_drop(0.7, 0.7), 0.0);
        assert!((accuracy_drop(0.80, 0.85) + 5.0).abs() < 1e-9);
    }

    #[test]
    fn detect_flips_examples() {
        let lex = Lexicon::builtin();
        let config = GenConfig::default();
        let gen = Generator::new(&lex, &config);
        let doc = Document::labeled("1", "he is fine", 1);
        let cfs = gen.counterfactuals(&doc, &keyed_on_he).unwrap();
        assert_eq!(cfs[0].text, "she is fine");
        assert_eq!(detect_flips(&keyed_on_he, &doc, &cfs).len(), 1);
        let constant = |_: &str| 0.8;
        assert!(detect_flips(&constant, &doc, &cfs).is_empty());
        assert!(detect_flips(&keyed_on_he, &doc, &[]).is_empty());
    }

    #[test]
    fn flip_rate_counts_all_originals() {
        let lex = Lexicon::builtin();
        let config = GenConfig::default();
        let gen = Generator::new(&lex, &config);
        let docs = vec![
            Document::labeled("1", "he is fine", 1),
            Document::labeled("2", "the weather is nice", 0),
            Document::labeled("3", "they went to church", 0),
            Document::labeled("4", "a quiet evening", 0),
        ];
        let fr = flip_rate(&keyed_on_he, &docs, &gen).unwrap();
        assert_eq!(fr.flip_rate_pct, 25.0);
        assert_eq!(fr.conditional_flip_rate_pct, 50.0);
        let constant = |_: &str| 0.2;
        assert_eq!(flip_rate(&constant, &docs, &gen).unwrap().flip_rate_pct, 0.0);
        assert!(flip_rate(&constant, &[], &gen).is_err());
    }

    #[test]
    fn cf_data_keeps_gold_label() {
        let lex = Lexicon::builtin();
        let config = GenConfig::default();
        let gen = Generator::new(&lex, &config);
        let docs = vec![
            Document::labeled("1", "he and his dog", 0),
            Document::labeled("2", "nothing here", 1),
        ];
        let data = build_cf_data(&docs, &gen, &keyed_on_he, AugmentMode::Flipped, LabelSource::Gold).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].label, Some(0));
        let predicted =
            build_cf_data(&docs, &gen, &keyed_on_he, AugmentMode::Flipped, LabelSource::Predicted).unwrap();
        assert_eq!(predicted[0].label, Some(1));
        let constant = |_: &str| 0.2;
        assert!(build_cf_data(&docs, &gen, &constant, AugmentMode::Flipped, LabelSource::Gold)
            .unwrap()
            .is_empty());
        assert_eq!(
            build_cf_data(&docs, &gen, &constant, AugmentMode::All, LabelSource::Gold).unwrap().len(),
            1
        );
    }

    #[test]
    fn table_renders_aligned() {
        let report = MitigationReport {
            mode: GenMode::Single,
            attributes: vec![SensitiveAttribute::Age],
            n_train: 1,
            n_test: 1,
            fr_pre_pct: 3.34,
            fr_post_pct: 2.98,
            cfi_pct: cfi(3.34, 2.98),
            cfi_undefined: false,
            acc_pre: 0.9,
            acc_post: 0.89,
            ad_points: 1.0,
            n_augmented: 0,
            cross_eval: None,
        };
        let table = render_table(&[TableRow {
            attribute: "age".into(),
            single: report.clone(),
            multi: MitigationReport { mode: GenMode::Multi, ..report },
        }]);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].contains("10.78"));
        assert!(lines[0].starts_with("attribute"));
    }
}
