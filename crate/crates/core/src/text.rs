//! Tokenization, case-shape handling and heuristic clause segmentation.

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    /// Byte offsets into the source, `[start, end)`.
    pub start: usize,
    pub end: usize,
    pub index: usize,
    pub is_word: bool,
}

/// Splits `text` into word and punctuation tokens.
///
/// Words follow Unicode word boundaries with two English adjustments:
/// hyphen-joined words stay one token (`slow-learner`) and a trailing `'s`
/// clitic is split off (`son's` → `son`, `'s`). Whitespace is never a token.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut spans: Vec<(usize, usize)> = text
        .split_word_bound_indices()
        .filter(|(_, seg)| !seg.chars().all(char::is_whitespace))
        .map(|(start, seg)| (start, start + seg.len()))
        .collect();
    spans = join_hyphens(text, spans);
    spans = split_clitics(text, spans);
    spans
        .into_iter()
        .enumerate()
        .map(|(index, (start, end))| {
            let slice = &text[start..end];
            Token {
                text: slice.to_string(),
                start,
                end,
                index,
                is_word: slice.chars().any(char::is_alphanumeric),
            }
        })
        .collect()
}

fn is_wordy(s: &str) -> bool {
    s.chars().any(char::is_alphanumeric)
}

fn join_hyphens(text: &str, spans: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::with_capacity(spans.len());
    let mut i = 0;
    while i < spans.len() {
        let (start, mut end) = spans[i];
        if is_wordy(&text[start..end]) {
            // word ( '-' word )*, all adjacent
            while i + 2 < spans.len()
                && spans[i + 1].0 == end
                && &text[spans[i + 1].0..spans[i + 1].1] == "-"
                && spans[i + 2].0 == spans[i + 1].1
                && is_wordy(&text[spans[i + 2].0..spans[i + 2].1])
            {
                end = spans[i + 2].1;
                i += 2;
            }
        }
        out.push((start, end));
        i += 1;
    }
    out
}

fn split_clitics(text: &str, spans: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(spans.len());
    for (start, end) in spans {
        let slice = &text[start..end];
        let lower = slice.to_lowercase();
        let clitic_len = ["'s", "\u{2019}s"]
            .iter()
            .find(|c| lower.ends_with(*c) && lower.len() == slice.len())
            .map(|c| c.len());
        match clitic_len {
            Some(n) if slice.len() > n && is_wordy(&slice[..slice.len() - n]) => {
                let cut = end - n;
                out.push((start, cut));
                out.push((cut, end));
            }
            _ => out.push((start, end)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseShape {
    Lower,
    Capitalized,
    Upper,
    Mixed,
}

pub fn detect_case_shape(word: &str) -> CaseShape {
    let cased: Vec<char> = word
        .chars()
        .filter(|c| c.is_lowercase() || c.is_uppercase())
        .collect();
    let Some((first, rest)) = cased.split_first() else {
        return CaseShape::Lower;
    };
    if cased.iter().all(|c| c.is_lowercase()) {
        CaseShape::Lower
    } else if first.is_uppercase() && rest.iter().all(|c| c.is_lowercase()) {
        CaseShape::Capitalized
    } else if cased.iter().all(|c| c.is_uppercase()) {
        CaseShape::Upper
    } else {
        CaseShape::Mixed
    }
}

/// Re-shapes a lowercase replacement to match the original word's casing.
pub fn apply_case_shape(shape: CaseShape, replacement: &str) -> String {
    match shape {
        CaseShape::Lower => replacement.to_string(),
        CaseShape::Capitalized => {
            let mut chars = replacement.chars();
            match chars.next() {
                Some(c) => c.to_uppercase().chain(chars).collect(),
                None => String::new(),
            }
        }
        CaseShape::Upper => replacement.to_uppercase(),
        CaseShape::Mixed => {
            log::debug!("mixed-case token replaced without reshaping: {replacement}");
            replacement.to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    pub id: usize,
    /// Ordinals of the word tokens in this clause, ascending.
    pub token_indices: Vec<usize>,
}

const SENTENCE_TERMINATORS: [&str; 4] = [".", "!", "?", ";"];
const CLAUSE_OPENERS: [&str; 13] = [
    "a", "an", "the", "he", "she", "they", "we", "i", "it", "his", "her", "my", "our",
];
const SUBJECT_PRONOUNS: [&str; 6] = ["he", "she", "they", "we", "i", "it"];
const CONJUNCTIONS: [&str; 3] = ["and", "but", "or"];

/// Heuristic clause segmentation.
///
/// Splits after `. ! ? ;`, after `,` when the next word opens a clause
/// (determiner or subject/possessive pronoun), and before `and`/`but`/`or`
/// when the conjunction is followed by a subject pronoun.
pub fn segment_clauses(tokens: &[Token]) -> Vec<Clause> {
    let next_word = |from: usize| {
        tokens[from..]
            .iter()
            .find(|t| t.is_word)
            .map(|t| t.text.to_lowercase())
    };
    let mut clauses = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let close = |current: &mut Vec<usize>, clauses: &mut Vec<Clause>| {
        if !current.is_empty() {
            clauses.push(Clause {
                id: clauses.len(),
                token_indices: std::mem::take(current),
            });
        }
    };
    for (i, tok) in tokens.iter().enumerate() {
        if tok.is_word {
            let lower = tok.text.to_lowercase();
            if CONJUNCTIONS.contains(&lower.as_str())
                && next_word(i + 1).is_some_and(|w| SUBJECT_PRONOUNS.contains(&w.as_str()))
            {
                close(&mut current, &mut clauses);
            }
            current.push(tok.index);
        } else if SENTENCE_TERMINATORS.contains(&tok.text.as_str())
            || (tok.text == ","
                && next_word(i + 1).is_some_and(|w| CLAUSE_OPENERS.contains(&w.as_str())))
        {
            close(&mut current, &mut clauses);
        }
    }
    close(&mut current, &mut clauses);
    clauses
}

/// A tokenized document with its clause structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedDoc {
    pub text: String,
    pub tokens: Vec<Token>,
    pub clauses: Vec<Clause>,
}

impl ParsedDoc {
    /// Tokenizes and segments with the built-in heuristic.
    pub fn parse(text: &str) -> Self {
        let tokens = tokenize(text);
        let clauses = segment_clauses(&tokens);
        ParsedDoc {
            text: text.to_string(),
            tokens,
            clauses,
        }
    }

    /// Tokenizes and takes clauses from an external CoNLL-U parse.
    pub fn parse_with_conllu(text: &str, conllu: &str) -> Result<Self> {
        let tokens = tokenize(text);
        let clauses = crate::conllu::clauses_from_conllu(&tokens, conllu)?;
        Ok(ParsedDoc {
            text: text.to_string(),
            tokens,
            clauses,
        })
    }

    /// Clause id of each token (`None` for punctuation).
    pub fn clause_of_tokens(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.tokens.len()];
        for clause in &self.clauses {
            for &t in &clause.token_indices {
                out[t] = Some(clause.id);
            }
        }
        out
    }

    pub fn word_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| t.is_word)
    }
}
