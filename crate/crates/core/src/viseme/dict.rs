//! Pronunciation dictionaries and phoneme inventories.

use super::{Phoneme, VisemeMap};
use crate::error::{Error, Result};
use crate::textio;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

/// The set of phoneme symbols a dictionary is validated against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Inventory(BTreeSet<Phoneme>);

impl Inventory {
    /// The inventory implied by a viseme map: the union of its classes.
    pub fn of_map(map: &VisemeMap) -> Inventory {
        Inventory(map.phonemes().cloned().collect())
    }

    /// Parse an inventory file: one phoneme per line, `#` comments.
    pub fn parse(text: &str) -> Result<Inventory> {
        let mut set = BTreeSet::new();
        for (_, line) in textio::content_lines(text) {
            for tok in line.split_whitespace() {
                set.insert(Phoneme::new(tok)?);
            }
        }
        Ok(Inventory(set))
    }

    pub fn read(path: &Path) -> Result<Inventory> {
        Inventory::parse(&textio::read_file(path)?)
    }

    pub fn contains(&self, p: &Phoneme) -> bool {
        self.0.contains(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A word-to-pronunciation dictionary in the common `WORD  ph1 ph2 …`
/// format. Variant markers like `WORD(2)` attach additional pronunciations
/// to the base word in listed order. Words are uppercased, phones lowercased
/// and stripped of stress digits on load.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PronunciationDict {
    entries: BTreeMap<String, Vec<Vec<Phoneme>>>,
}

impl PronunciationDict {
    pub fn new() -> PronunciationDict {
        PronunciationDict::default()
    }

    pub fn parse(text: &str, inventory: &Inventory, path: &str) -> Result<PronunciationDict> {
        let mut dict = PronunciationDict::new();
        for (lineno, raw) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with(";;;") || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word_tok = fields.next().expect("non-empty line");
            let word = normalize_word(word_tok);
            let mut phones = Vec::new();
            for tok in fields {
                let p = Phoneme::new(tok.trim_end_matches(|c: char| c.is_ascii_digit()))?;
                if !inventory.contains(&p) {
                    return Err(Error::UnknownPhoneme(p.as_str().to_string()));
                }
                phones.push(p);
            }
            if phones.is_empty() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("entry '{word_tok}' lists no phones"),
                });
            }
            dict.entries.entry(word).or_default().push(phones);
        }
        Ok(dict)
    }

    pub fn read(path: &Path, inventory: &Inventory) -> Result<PronunciationDict> {
        PronunciationDict::parse(
            &textio::read_file(path)?,
            inventory,
            &path.display().to_string(),
        )
    }

    pub fn insert(&mut self, word: &str, phones: Vec<Phoneme>) {
        self.entries
            .entry(word.to_uppercase())
            .or_default()
            .push(phones);
    }

    /// The first listed pronunciation.
    pub fn first(&self, word: &str) -> Option<&[Phoneme]> {
        self.entries
            .get(&word.to_uppercase())
            .and_then(|v| v.first())
            .map(|v| v.as_slice())
    }

    /// All pronunciation variants in listed order.
    pub fn variants(&self, word: &str) -> Option<&[Vec<Phoneme>]> {
        self.entries
            .get(&word.to_uppercase())
            .map(|v| v.as_slice())
    }

    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, variants) in &self.entries {
            for (i, phones) in variants.iter().enumerate() {
                if i == 0 {
                    out.push_str(word);
                } else {
                    out.push_str(&format!("{word}({})", i + 1));
                }
                out.push_str(" ");
                let row: Vec<&str> = phones.iter().map(|p| p.as_str()).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }
}

/// Uppercase and strip a `(n)` variant marker.
fn normalize_word(tok: &str) -> String {
    let base = match tok.find('(') {
        Some(i) if tok.ends_with(')') => &tok[..i],
        _ => tok,
    };
    base.to_uppercase()
}
