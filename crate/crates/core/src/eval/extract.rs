//! Deterministic keyword/number reading of a free-text response.

use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;
use serde::Deserialize;

use super::score::classify_occupancy;
use super::types::{AttributeExtraction, Isolation, Occupancy, Snr, TechFamily, Temporal};
use crate::error::ConfigError;

const BUILTIN: &str = include_str!("../../data/lexicon.toml");

#[derive(Debug, Clone, Deserialize)]
struct LexiconFile {
    no_signal: Vec<String>,
    references_settings: Vec<String>,
    image_grounded: Vec<String>,
    bandwidth_words: Vec<String>,
    location_words: Vec<String>,
    approximators: Vec<String>,
    temporal: BTreeMap<String, Vec<String>>,
    occupancy: BTreeMap<String, Vec<String>>,
    snr: BTreeMap<String, Vec<String>>,
    isolation: BTreeMap<String, Vec<String>>,
    tech_family: BTreeMap<String, Vec<String>>,
    tech_labels: BTreeMap<String, String>,
}

/// Phrases tagged with what they stand for.
struct PhraseSet<T> {
    phrases: Vec<(T, Regex)>,
}

impl<T: Copy> PhraseSet<T> {
    fn new(items: impl IntoIterator<Item = (T, String)>) -> Result<Self, ConfigError> {
        let phrases = items
            .into_iter()
            .map(|(t, p)| phrase_regex(&p).map(|r| (t, r)))
            .collect::<Result<_, _>>()?;
        Ok(Self { phrases })
    }

    /// Earliest match; on equal start the longer phrase.
    fn first(&self, text: &str) -> Option<(T, usize, usize)> {
        let mut best: Option<(T, usize, usize)> = None;
        for (t, re) in &self.phrases {
            if let Some(m) = re.find(text) {
                let better = match best {
                    None => true,
                    Some((_, s, e)) => m.start() < s || (m.start() == s && m.end() > e),
                };
                if better {
                    best = Some((*t, m.start(), m.end()));
                }
            }
        }
        best
    }

    fn any(&self, text: &str) -> bool {
        self.phrases.iter().any(|(_, re)| re.is_match(text))
    }
}

fn phrase_regex(phrase: &str) -> Result<Regex, ConfigError> {
    let p = phrase.trim().to_lowercase();
    if p.is_empty() {
        return Err(ConfigError::new("lexicon: empty phrase"));
    }
    let body = p
        .split(|c: char| c.is_whitespace() || c == '-')
        .filter(|w| !w.is_empty())
        .map(regex::escape)
        .collect::<Vec<_>>()
        .join(r"[\s\-]+");
    let word = |c: Option<char>| c.is_some_and(|c| c.is_alphanumeric() || c == '_');
    let lead = if word(p.chars().next()) { r"\b" } else { "" };
    let trail = if word(p.chars().last()) { r"\b" } else { "" };
    Regex::new(&format!("(?i){lead}{body}{trail}")).map_err(|e| ConfigError::new(format!("lexicon phrase {phrase:?}: {e}")))
}

fn classes<T: Copy>(
    table: &BTreeMap<String, Vec<String>>,
    parse: fn(&str) -> Option<T>,
    what: &str,
) -> Result<PhraseSet<T>, ConfigError> {
    let mut items = Vec::new();
    for (class, phrases) in table {
        let c = parse(class).ok_or_else(|| ConfigError::new(format!("lexicon: unknown {what} class {class:?}")))?;
        items.extend(phrases.iter().map(|p| (c, p.clone())));
    }
    PhraseSet::new(items)
}

pub struct Lexicon {
    no_signal: PhraseSet<()>,
    references_settings: PhraseSet<()>,
    image_grounded: PhraseSet<()>,
    bandwidth_words: PhraseSet<()>,
    location_words: Vec<String>,
    approximators: Vec<String>,
    temporal: PhraseSet<Temporal>,
    occupancy: PhraseSet<Occupancy>,
    snr: PhraseSet<Snr>,
    isolation: PhraseSet<Isolation>,
    tech_family: PhraseSet<TechFamily>,
    tech_labels: PhraseSet<usize>,
    label_names: Vec<(String, TechFamily)>,
    quantity: Regex,
    lone_signal: Regex,
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::from_toml(BUILTIN).expect("built-in lexicon parses")
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("lexicon {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let f: LexiconFile = toml::from_str(text).map_err(|e| ConfigError::new(format!("lexicon: {e}")))?;
        let flags = |v: &[String]| PhraseSet::new(v.iter().map(|p| ((), p.clone())));
        let mut label_names = Vec::new();
        for (label, fam) in &f.tech_labels {
            let fam = TechFamily::parse(fam)
                .ok_or_else(|| ConfigError::new(format!("lexicon: tech label {label:?} has unknown family {fam:?}")))?;
            label_names.push((label.clone(), fam));
        }
        Ok(Self {
            no_signal: flags(&f.no_signal)?,
            references_settings: flags(&f.references_settings)?,
            image_grounded: flags(&f.image_grounded)?,
            bandwidth_words: flags(&f.bandwidth_words)?,
            location_words: f.location_words.iter().map(|w| w.to_lowercase()).collect(),
            approximators: f.approximators.iter().map(|w| w.to_lowercase()).collect(),
            temporal: classes(&f.temporal, Temporal::parse, "temporal")?,
            occupancy: classes(&f.occupancy, Occupancy::parse, "occupancy")?,
            snr: classes(&f.snr, Snr::parse, "snr")?,
            isolation: classes(&f.isolation, Isolation::parse, "isolation")?,
            tech_family: classes(&f.tech_family, TechFamily::parse, "tech_family")?,
            tech_labels: PhraseSet::new(label_names.iter().enumerate().map(|(i, (l, _))| (i, l.clone())))?,
            label_names,
            quantity: Regex::new(r"(?i)(\d+(?:\.\d+)?)\s*(ghz|mhz|khz)\b").unwrap(),
            lone_signal: Regex::new(r"(?i)\bsignal\b").unwrap(),
        })
    }

    /// Width in MHz from the first clause that states one. A number counts
    /// when its clause has bandwidth vocabulary or holds nothing but the
    /// number; numbers right after a location word are center frequencies.
    fn bandwidth(&self, text: &str) -> Option<f64> {
        for clause in clauses(text) {
            for cap in self.quantity.captures_iter(clause) {
                let m = cap.get(0).unwrap();
                let before = clause[..m.start()].trim_end_matches(|c: char| c.is_whitespace() || c == ':' || c == '=');
                let before_lc = before.to_lowercase();
                let last_word = before_lc
                    .rsplit(|c: char| c.is_whitespace() || c == '(')
                    .next()
                    .unwrap_or("");
                if self.location_words.iter().any(|w| w == last_word) {
                    continue;
                }
                let value: f64 = cap[1].parse().ok()?;
                let mhz = match cap[2].to_ascii_lowercase().as_str() {
                    "ghz" => value * 1e3,
                    "khz" => value / 1e3,
                    _ => value,
                };
                let rest = format!("{} {}", &clause[..m.start()], &clause[m.end()..]);
                let bare = rest
                    .split(|c: char| !(c.is_alphanumeric() || c == '~'))
                    .filter(|w| !w.is_empty())
                    .all(|w| self.approximators.iter().any(|a| a.eq_ignore_ascii_case(w)));
                if bare || self.bandwidth_words.any(clause) {
                    return Some(mhz);
                }
            }
        }
        None
    }

    pub fn extract(&self, text: &str) -> AttributeExtraction {
        let mut x = AttributeExtraction {
            claims_no_signal: self.no_signal.any(text),
            temporal: self.temporal.first(text).map(|m| m.0),
            snr: self.snr.first(text).map(|m| m.0),
            isolation: self.isolation.first(text).map(|m| m.0),
            bandwidth_mhz: self.bandwidth(text),
            references_settings: self.references_settings.any(text),
            image_grounded_evidence: self.image_grounded.any(text),
            ..Default::default()
        };
        x.occupancy = match x.bandwidth_mhz {
            Some(bw) => classify_occupancy(bw).ok(),
            None => self.occupancy.first(text).map(|m| m.0),
        };
        if x.isolation.is_none() && self.lone_signal.is_match(text) {
            x.isolation = Some(Isolation::Isolated);
        }
        let label = self.tech_labels.first(text).map(|m| &self.label_names[m.0]);
        x.raw_tech_label = label.map(|l| l.0.clone());
        x.tech_family = self.tech_family.first(text).map(|m| m.0).or(label.map(|l| l.1));
        if x.claims_no_signal {
            x.clear_attributes();
        }
        x
    }
}

/// Splits on `;`, newlines, and `.`/`,` that are not inside a number.
fn clauses(text: &str) -> Vec<&str> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, &c) in b.iter().enumerate() {
        let split = match c {
            b';' | b'\n' => true,
            b'.' | b',' => {
                let digit = |j: Option<&u8>| j.is_some_and(|d| d.is_ascii_digit());
                !(i > 0 && digit(b.get(i - 1)) && digit(b.get(i + 1)))
            }
            _ => false,
        };
        if split {
            out.push(&text[start..i]);
            start = i + 1;
        }
    }
    out.push(&text[start..]);
    out.into_iter().map(str::trim).filter(|c| !c.is_empty()).collect()
}

pub fn extract_attributes(text: &str, lexicon: &Lexicon) -> AttributeExtraction {
    lexicon.extract(text)
}
