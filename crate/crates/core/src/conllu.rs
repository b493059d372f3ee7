//! CoNLL-U ingestion for clause segmentation.
//!
//! A clause is one top-level predicate: the root's subtree, minus the
//! subtrees of root children attached as `conj` or `parataxis`, each of which
//! starts its own clause.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::text::{Clause, Token};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConlluWord {
    pub id: usize,
    pub form: String,
    pub head: usize,
    pub deprel: String,
}

/// Sentences of syntactic words; multiword-token ranges and empty nodes are
/// skipped.
pub fn parse_conllu(input: &str) -> Result<Vec<Vec<ConlluWord>>> {
    let mut sentences = Vec::new();
    let mut current: Vec<ConlluWord> = Vec::new();
    let mut start_line = 1;
    for (i, raw) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !current.is_empty() {
                check_sentence(&current, start_line)?;
                sentences.push(std::mem::take(&mut current));
            }
            start_line = lineno + 1;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Conllu {
                line: lineno,
                message: format!("expected 10 columns, found {}", cols.len()),
            });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let bad = |what: &str| Error::Conllu {
            line: lineno,
            message: format!("invalid {what}"),
        };
        let id: usize = cols[0].parse().map_err(|_| bad("ID"))?;
        let head: usize = cols[6].parse().map_err(|_| bad("HEAD"))?;
        if id != current.len() + 1 {
            return Err(Error::Conllu {
                line: lineno,
                message: format!("word ID {id} out of sequence"),
            });
        }
        current.push(ConlluWord {
            id,
            form: cols[1].to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }
    if !current.is_empty() {
        check_sentence(&current, start_line)?;
        sentences.push(current);
    }
    Ok(sentences)
}

fn check_sentence(words: &[ConlluWord], line: usize) -> Result<()> {
    if words.iter().any(|w| w.head > words.len()) {
        return Err(Error::Conllu {
            line,
            message: "HEAD points outside the sentence".into(),
        });
    }
    if !words.iter().any(|w| w.head == 0) {
        return Err(Error::Conllu {
            line,
            message: "sentence has no root".into(),
        });
    }
    Ok(())
}

fn splits_clause(deprel: &str) -> bool {
    let base = deprel.split(':').next().unwrap_or("");
    base == "conj" || base == "parataxis"
}

/// Clause head (1-based word id) governing each word of a sentence.
fn clause_heads(words: &[ConlluWord]) -> Result<Vec<usize>> {
    let is_clause_head = |w: &ConlluWord| {
        w.head == 0 || (splits_clause(&w.deprel) && words[w.head - 1].head == 0)
    };
    words
        .iter()
        .map(|w| {
            let mut node = w;
            for _ in 0..=words.len() {
                if is_clause_head(node) {
                    return Ok(node.id);
                }
                node = &words[node.head - 1];
            }
            Err(Error::Conllu {
                line: 0,
                message: format!("cycle in dependency tree at word {}", w.id),
            })
        })
        .collect()
}

/// Assigns the document's word tokens to clauses taken from a CoNLL-U parse.
///
/// Word forms are aligned to tokens by their non-whitespace character
/// stream; any disagreement is an alignment error.
pub fn clauses_from_conllu(tokens: &[Token], conllu: &str) -> Result<Vec<Clause>> {
    let sentences = parse_conllu(conllu)?;

    // Character stream of the parse, each char tagged with (sentence, clause head).
    let mut parse_chars: Vec<(char, (usize, usize))> = Vec::new();
    for (s, words) in sentences.iter().enumerate() {
        let heads = clause_heads(words)?;
        for (w, head) in words.iter().zip(heads) {
            parse_chars.extend(
                w.form
                    .chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| (c, (s, head))),
            );
        }
    }

    let doc_len: usize = tokens
        .iter()
        .map(|t| t.text.chars().filter(|c| !c.is_whitespace()).count())
        .sum();
    if doc_len != parse_chars.len() {
        return Err(Error::Alignment(format!(
            "document has {doc_len} non-space characters in {} tokens, parse has {}",
            tokens.len(),
            parse_chars.len()
        )));
    }

    let mut pos = 0;
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for tok in tokens {
        let mut key = None;
        for c in tok.text.chars().filter(|c| !c.is_whitespace()) {
            let (pc, k) = parse_chars[pos];
            if pc != c {
                return Err(Error::Alignment(format!(
                    "token {} `{}` disagrees with the parse (`{pc}` vs `{c}`)",
                    tok.index, tok.text
                )));
            }
            key.get_or_insert(k);
            pos += 1;
        }
        if let (true, Some(k)) = (tok.is_word, key) {
            groups.entry(k).or_default().push(tok.index);
        }
    }

    let mut spans: Vec<Vec<usize>> = groups.into_values().collect();
    spans.sort_by_key(|ids| ids[0]);
    Ok(spans
        .into_iter()
        .enumerate()
        .map(|(id, token_indices)| Clause { id, token_indices })
        .collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::text::{segment_clauses, tokenize};

    fn row(id: usize, form: &str, head: usize, deprel: &str) -> String {
        format!("{id}\t{form}\t_\t_\t_\t_\t{head}\t{deprel}\t_\t_")
    }

    /// "She is going to church, a white guy will be there too." with the
    /// second clause attached to the root as parataxis.
    pub(crate) fn two_clause_fixture() -> String {
        let rows = [
            row(1, "She", 3, "nsubj"),
            row(2, "is", 3, "aux"),
            row(3, "going", 0, "root"),
            row(4, "to", 5, "case"),
            row(5, "church", 3, "obl"),
            row(6, ",", 3, "punct"),
            row(7, "a", 9, "det"),
            row(8, "white", 9, "amod"),
            row(9, "guy", 12, "nsubj"),
            row(10, "will", 12, "aux"),
            row(11, "be", 12, "cop"),
            row(12, "there", 3, "parataxis"),
            row(13, "too", 12, "advmod"),
            row(14, ".", 3, "punct"),
        ];
        format!("# text = ...\n{}\n\n", rows.join("\n"))
    }

    #[test]
    fn parataxis_starts_a_clause() {
        let text = "She is going to church, a white guy will be there too.";
        let toks = tokenize(text);
        let clauses = clauses_from_conllu(&toks, &two_clause_fixture()).unwrap();
        // Hand-checked grouping: words 0..=4 and 6..=12 (token 5 is the comma).
        assert_eq!(clauses.len(), 2);
        assert_eq!(clauses[0].token_indices, vec![0, 1, 2, 3, 4]);
        assert_eq!(clauses[1].token_indices, vec![6, 7, 8, 9, 10, 11, 12]);
        assert_eq!(clauses, segment_clauses(&toks));
    }

    #[test]
    fn single_root_sentence_is_one_clause() {
        let conllu = [
            row(1, "He", 2, "nsubj"),
            row(2, "left", 0, "root"),
            row(3, ".", 2, "punct"),
        ]
        .join("\n");
        let clauses = clauses_from_conllu(&tokenize("He left."), &conllu).unwrap();
        assert_eq!(clauses.len(), 1);
    }

    #[test]
    fn conj_below_root_child_does_not_split() {
        // "He and his friends are amazing": friends is conj of He, not of the root.
        let conllu = [
            row(1, "He", 6, "nsubj"),
            row(2, "and", 4, "cc"),
            row(3, "his", 4, "nmod:poss"),
            row(4, "friends", 1, "conj"),
            row(5, "are", 6, "cop"),
            row(6, "amazing", 0, "root"),
            row(7, ".", 6, "punct"),
        ]
        .join("\n");
        let toks = tokenize("He and his friends are amazing.");
        assert_eq!(clauses_from_conllu(&toks, &conllu).unwrap().len(), 1);
    }

    #[test]
    fn token_count_mismatch_is_alignment_error() {
        let conllu = [
            row(1, "She", 3, "nsubj"),
            row(2, "is", 3, "aux"),
            row(3, "going", 0, "root"),
            row(4, "to", 3, "obl"),
            row(5, ".", 3, "punct"),
        ]
        .join("\n");
        let toks = tokenize("She is going to church.");
        assert_eq!(toks.len(), 6);
        assert!(matches!(
            clauses_from_conllu(&toks, &conllu),
            Err(Error::Alignment(_))
        ));
    }

    #[test]
    fn malformed_input() {
        assert!(matches!(
            parse_conllu("1\tHe\t_\n"),
            Err(Error::Conllu { line: 1, .. })
        ));
        let no_root = row(1, "He", 1, "nsubj");
        assert!(parse_conllu(&no_root).is_err());
        let bad_head = [row(1, "He", 0, "root"), row(2, "x", 9, "dep")].join("\n");
        assert!(parse_conllu(&bad_head).is_err());
    }

    #[test]
    fn skips_multiword_ranges() {
        let conllu = [
            "1-2\the's\t_\t_\t_\t_\t_\t_\t_\t_".to_string(),
            row(1, "he", 3, "nsubj"),
            row(2, "'s", 3, "cop"),
            row(3, "here", 0, "root"),
        ]
        .join("\n");
        let clauses = clauses_from_conllu(&tokenize("he's here"), &conllu).unwrap();
        assert_eq!(clauses[0].token_indices, vec![0, 1, 2]);
    }
}
