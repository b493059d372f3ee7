//! Sensitive-attribute lexicon: surfaces, their attribute, and the words they
//! may be perturbed to.
//!
//! Lexicon files are TSV, one row per `(attribute, surface)`:
//!
//! ```text
//! attribute<TAB>surface<TAB>perturbation1,perturbation2,...<TAB>group_key?
//! ```
//!
//! Lines starting with `#` are comments. The optional coherence map is a
//! second TSV, `group_key<TAB>category<TAB>word`, which lets multi-token
//! religion flips stay consistent (church and christian become synagogue and
//! jew together, never synagogue and hindu).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensitiveAttribute {
    Age,
    Disability,
    Race,
    Nationality,
    Gender,
    Religion,
}

impl SensitiveAttribute {
    pub const ALL: [SensitiveAttribute; 6] = [
        SensitiveAttribute::Age,
        SensitiveAttribute::Disability,
        SensitiveAttribute::Race,
        SensitiveAttribute::Nationality,
        SensitiveAttribute::Gender,
        SensitiveAttribute::Religion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SensitiveAttribute::Age => "age",
            SensitiveAttribute::Disability => "disability",
            SensitiveAttribute::Race => "race",
            SensitiveAttribute::Nationality => "nationality",
            SensitiveAttribute::Gender => "gender",
            SensitiveAttribute::Religion => "religion",
        }
    }
}

impl fmt::Display for SensitiveAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SensitiveAttribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SensitiveAttribute::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::UnknownAttribute(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub surface: String,
    pub attribute: SensitiveAttribute,
    pub perturbations: Vec<String>,
    /// Coherence label (religion name for religion rows, grammatical number
    /// for gender rows, demonym pool for nationality rows).
    pub group_key: Option<String>,
}

/// `(group_key, category) -> word` table plus the reverse index used to find
/// the category of a surface.
#[derive(Debug, Clone, Default)]
pub struct CoherenceMap {
    forward: HashMap<(String, String), String>,
    reverse: HashMap<String, (String, String)>,
    keys: Vec<String>,
}

impl CoherenceMap {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut map = CoherenceMap::default();
        for (lineno, line) in data_lines(text) {
            let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
            if cols.len() != 3 || cols.iter().any(|c| c.is_empty()) {
                return Err(Error::parse(
                    origin,
                    lineno,
                    "expected `group_key<TAB>category<TAB>word`",
                ));
            }
            map.insert(cols[0], cols[1], cols[2]);
        }
        Ok(map)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn insert(&mut self, key: &str, category: &str, word: &str) {
        let (key, category, word) = (
            key.to_lowercase(),
            category.to_lowercase(),
            word.to_lowercase(),
        );
        if !self.keys.contains(&key) {
            self.keys.push(key.clone());
        }
        self.reverse
            .entry(word.clone())
            .or_insert_with(|| (key.clone(), category.clone()));
        // First row per (key, category) is the canonical substitute.
        self.forward.entry((key, category)).or_insert(word);
    }

    pub fn word_for(&self, key: &str, category: &str) -> Option<&str> {
        self.forward
            .get(&(key.to_string(), category.to_string()))
            .map(String::as_str)
    }

    /// `(group_key, category)` of a surface listed in the map.
    pub fn category_of(&self, surface: &str) -> Option<(&str, &str)> {
        self.reverse
            .get(surface)
            .map(|(k, c)| (k.as_str(), c.as_str()))
    }

    /// Group keys in first-appearance order.
    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    index: HashMap<String, Vec<usize>>,
    coherence: CoherenceMap,
}

const BUILTIN_FILES: [(&str, &str); 7] = [
    ("age.tsv", include_str!("../data/lexicon/age.tsv")),
    ("disability.tsv", include_str!("../data/lexicon/disability.tsv")),
    ("race.tsv", include_str!("../data/lexicon/race.tsv")),
    ("nationality.tsv", include_str!("../data/lexicon/nationality.tsv")),
    ("gender.tsv", include_str!("../data/lexicon/gender.tsv")),
    ("religion.tsv", include_str!("../data/lexicon/religion.tsv")),
    ("religion_extra.tsv", include_str!("../data/lexicon/religion_extra.tsv")),
];
const BUILTIN_COHERENCE: &str = include_str!("../data/coherence.tsv");
const BUILTIN_MANIFEST: &str = include_str!("../data/manifest.tsv");

/// One row of the transcription manifest shipped next to the lexicon files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ManifestRow {
    pub file: String,
    pub attribute: SensitiveAttribute,
    pub rows: usize,
    pub printed_rows: usize,
}

pub fn builtin_manifest() -> Vec<ManifestRow> {
    data_lines(BUILTIN_MANIFEST)
        .map(|(_, line)| {
            let cols: Vec<&str> = line.split('\t').collect();
            ManifestRow {
                file: cols[0].to_string(),
                attribute: cols[1].parse().expect("manifest attribute"),
                rows: cols[2].parse().expect("manifest rows"),
                printed_rows: cols[3].parse().expect("manifest printed rows"),
            }
        })
        .collect()
}

/// Raw text of the shipped lexicon files, keyed by file name.
pub fn builtin_files() -> &'static [(&'static str, &'static str)] {
    &BUILTIN_FILES
}

impl Lexicon {
    /// Builds a lexicon, rejecting invalid or duplicate entries.
    pub fn new(entries: Vec<LexiconEntry>) -> Result<Self> {
        let mut lexicon = Lexicon::default();
        lexicon.extend(entries)?;
        Ok(lexicon)
    }

    /// The shipped resource with its coherence map.
    pub fn builtin() -> Self {
        let mut entries = Vec::new();
        for (name, text) in BUILTIN_FILES {
            entries.extend(parse_lexicon_tsv(text, name).expect("shipped lexicon parses"));
        }
        Lexicon::new(entries)
            .expect("shipped lexicon is valid")
            .with_coherence(
                CoherenceMap::parse(BUILTIN_COHERENCE, "coherence.tsv")
                    .expect("shipped coherence map parses"),
            )
    }

    /// Loads every `*.tsv` file of a directory, in file-name order. A file
    /// named `coherence.tsv` is read as the coherence map.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "tsv"))
            .collect();
        paths.sort();
        let mut lexicon = Lexicon::default();
        for path in paths {
            if path.file_name().is_some_and(|n| n == "coherence.tsv") {
                lexicon.coherence = CoherenceMap::load(&path)?;
            } else {
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                lexicon.extend(parse_lexicon_tsv(&text, &path.display().to_string())?)?;
            }
        }
        Ok(lexicon)
    }

    pub fn with_coherence(mut self, coherence: CoherenceMap) -> Self {
        self.coherence = coherence;
        self
    }

    pub fn extend(&mut self, entries: Vec<LexiconEntry>) -> Result<()> {
        for entry in entries {
            check_entry(&entry)?;
            let slot = self.index.entry(entry.surface.clone()).or_default();
            if slot
                .iter()
                .any(|&i| self.entries[i].attribute == entry.attribute)
            {
                return Err(Error::DuplicateEntry {
                    surface: entry.surface,
                    attribute: entry.attribute.to_string(),
                });
            }
            let id = self.entries.len();
            let attribute = entry.attribute;
            self.entries.push(entry);
            // Keep lookups in attribute order, then file order.
            let pos = slot
                .iter()
                .position(|&i| self.entries[i].attribute > attribute)
                .unwrap_or(slot.len());
            slot.insert(pos, id);
        }
        Ok(())
    }

    /// Entries whose surface equals the lowercased token text.
    pub fn lookup(&self, token_text: &str) -> Vec<&LexiconEntry> {
        self.index
            .get(&token_text.to_lowercase())
            .map(|ids| ids.iter().map(|&i| &self.entries[i]).collect())
            .unwrap_or_default()
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn coherence(&self) -> &CoherenceMap {
        &self.coherence
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count_by_attribute(&self) -> BTreeMap<SensitiveAttribute, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.attribute).or_insert(0) += 1;
        }
        counts
    }

    /// Serializes back to lexicon TSV (entries in insertion order).
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("# attribute\tsurface\tperturbations\tgroup_key\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                e.attribute,
                e.surface,
                e.perturbations.join(","),
                e.group_key.as_deref().unwrap_or("")
            ));
        }
        out
    }

    /// Picks the replacement for one occurrence of `entry`.
    ///
    /// With a coherence context naming a group key that has a word for the
    /// entry's category, that word wins; otherwise a uniform seeded pick.
    pub fn choose_perturbation<R: Rng + ?Sized>(
        &self,
        entry: &LexiconEntry,
        rng: &mut R,
        coherence_ctx: Option<&str>,
    ) -> String {
        if let Some(key) = coherence_ctx {
            if let Some(word) = self
                .coherence
                .category_of(&entry.surface)
                .and_then(|(_, category)| self.coherence.word_for(key, category))
            {
                if word != entry.surface {
                    return word.to_string();
                }
            }
        }
        entry.perturbations[rng.random_range(0..entry.perturbations.len())].clone()
    }

    /// Group keys that give every categorized entry in `entries` a coherent
    /// substitute drawn from its own perturbation list.
    pub fn coherent_keys(&self, entries: &[&LexiconEntry]) -> Vec<&str> {
        let categorized: Vec<(&LexiconEntry, &str)> = entries
            .iter()
            .filter_map(|e| {
                self.coherence
                    .category_of(&e.surface)
                    .map(|(_, category)| (*e, category))
            })
            .collect();
        if categorized.is_empty() {
            return Vec::new();
        }
        self.coherence
            .keys()
            .iter()
            .map(String::as_str)
            .filter(|key| {
                categorized.iter().all(|(e, category)| {
                    self.coherence
                        .word_for(key, category)
                        .is_some_and(|w| e.perturbations.iter().any(|p| p == w))
                })
            })
            .collect()
    }
}

fn check_entry(entry: &LexiconEntry) -> Result<()> {
    if entry.perturbations.is_empty() || entry.perturbations.iter().any(|p| p.is_empty()) {
        return Err(Error::EmptyPerturbations(entry.surface.clone()));
    }
    if entry.perturbations.contains(&entry.surface) {
        return Err(Error::SelfPerturbation(entry.surface.clone()));
    }
    Ok(())
}

pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

/// Parses lexicon TSV into raw entries without checking the s ≠ s′ or
/// non-empty constraints; structural problems are returned per line.
pub fn parse_lexicon_rows(text: &str, origin: &str) -> (Vec<LexiconEntry>, Vec<Error>) {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (lineno, line) in data_lines(text) {
        let cols: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !(3..=4).contains(&cols.len()) {
            errors.push(Error::parse(
                origin,
                lineno,
                format!("expected 3 or 4 tab-separated columns, found {}", cols.len()),
            ));
            continue;
        }
        let attribute = match cols[0].to_lowercase().parse::<SensitiveAttribute>() {
            Ok(a) => a,
            Err(e) => {
                errors.push(Error::parse(origin, lineno, e.to_string()));
                continue;
            }
        };
        let surface = cols[1].to_lowercase();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            errors.push(Error::parse(
                origin,
                lineno,
                format!("surface `{surface}` must be a single non-empty word"),
            ));
            continue;
        }
        let perturbations = if cols[2].is_empty() {
            Vec::new()
        } else {
            cols[2].split(',').map(|p| p.trim().to_lowercase()).collect()
        };
        let group_key = cols
            .get(3)
            .filter(|k| !k.is_empty())
            .map(|k| k.to_lowercase());
        entries.push(LexiconEntry {
            surface,
            attribute,
            perturbations,
            group_key,
        });
    }
    (entries, errors)
}

/// Strict parse: the first structural, self-perturbation or empty-list
/// problem is reported with its line number.
pub fn parse_lexicon_tsv(text: &str, origin: &str) -> Result<Vec<LexiconEntry>> {
    let (entries, mut errors) = parse_lexicon_rows(text, origin);
    if !errors.is_empty() {
        return Err(errors.swap_remove(0));
    }
    let mut lines = data_lines(text).map(|(n, _)| n);
    for entry in &entries {
        let lineno = lines.next().unwrap_or(0);
        check_entry(entry).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
    }
    Ok(entries)
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let origin = path.display().to_string();
    let entries = parse_lexicon_tsv(&text, &origin)?;
    Lexicon::new(entries)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub advisories: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }
}

pub fn validate_lexicon(lexicon: &Lexicon) -> ValidationReport {
    validate_entries(lexicon.entries())
}

/// Errors for self-perturbation, empty entries and duplicates; advisories for
/// symmetric pairs that do not round-trip.
pub fn validate_entries(entries: &[LexiconEntry]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut by_key: HashMap<(SensitiveAttribute, &str), &LexiconEntry> = HashMap::new();
    for e in entries {
        if e.perturbations.is_empty() || e.perturbations.iter().any(String::is_empty) {
            report
                .errors
                .push(format!("{}: `{}` has an empty perturbation", e.attribute, e.surface));
        }
        if e.perturbations.contains(&e.surface) {
            report
                .errors
                .push(format!("{}: `{}` perturbs to itself", e.attribute, e.surface));
        }
        if by_key.insert((e.attribute, e.surface.as_str()), e).is_some() {
            report
                .errors
                .push(format!("{}: duplicate surface `{}`", e.attribute, e.surface));
        }
    }
    for e in entries {
        for p in &e.perturbations {
            if let Some(back) = by_key.get(&(e.attribute, p.as_str())) {
                if !back.perturbations.contains(&e.surface) {
                    report.advisories.push(format!(
                        "{}: `{}` -> `{}` does not round-trip (`{}` perturbs to {})",
                        e.attribute,
                        e.surface,
                        p,
                        p,
                        back.perturbations.join(",")
                    ));
                }
            }
        }
    }
    report
}
