//! Phoneme inventories, viseme class maps, dictionaries and transcripts.
//!
//! A viseme map partitions a phoneme inventory into viseme classes: every
//! phoneme belongs to exactly one class. The map file format is line
//! oriented — `vID ph1 ph2 …` with `#` comments — and saving always emits
//! the canonical form (classes in construction order, phones sorted).

mod dict;
mod transcript;

pub use dict::{Inventory, PronunciationDict};
pub use transcript::{parse_label_file, read_label_file, write_label_file, Transcript, Unit};

use crate::error::{Error, Result};
use crate::textio;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

/// The phoneme symbol used for silence.
pub const SILENCE_PHONE: &str = "sil";
/// The phoneme symbol used for inter-word short pause.
pub const SHORT_PAUSE_PHONE: &str = "sp";
/// The class id that absorbs merged low-count visemes.
pub const GARBAGE_ID: &str = "garb";

/// A lowercase phoneme symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phoneme(String);

impl Phoneme {
    pub fn new(symbol: &str) -> Result<Phoneme> {
        let symbol = symbol.trim();
        if symbol.is_empty() {
            return Err(Error::UnknownPhoneme(String::new()));
        }
        Ok(Phoneme(symbol.to_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Phoneme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A viseme class identifier such as `v01`, `v18`, `garb` or `sp`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VisemeId(String);

impl VisemeId {
    pub fn new(id: &str) -> Result<VisemeId> {
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::UnknownLabel(String::new()));
        }
        Ok(VisemeId(id.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VisemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered partition of a phoneme inventory into viseme classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisemeMap {
    classes: Vec<(VisemeId, BTreeSet<Phoneme>)>,
    index: BTreeMap<Phoneme, usize>,
}

impl VisemeMap {
    /// Build a map, validating the partition invariants: unique ids,
    /// non-empty classes, no phoneme in more than one class.
    pub fn new(classes: Vec<(VisemeId, BTreeSet<Phoneme>)>) -> Result<VisemeMap> {
        let mut index = BTreeMap::new();
        let mut ids = BTreeSet::new();
        for (i, (id, phones)) in classes.iter().enumerate() {
            if !ids.insert(id.clone()) {
                return Err(Error::PartitionViolation(format!(
                    "duplicate class id '{id}'"
                )));
            }
            if phones.is_empty() {
                return Err(Error::PartitionViolation(format!("class '{id}' is empty")));
            }
            for p in phones {
                if index.insert(p.clone(), i).is_some() {
                    return Err(Error::PartitionViolation(format!(
                        "phoneme '{p}' appears in more than one class"
                    )));
                }
            }
        }
        Ok(VisemeMap { classes, index })
    }

    /// The built-in default phone-to-viseme partition used throughout the
    /// toolkit (18 viseme classes with `v18` holding silence, plus a
    /// short-pause class).
    pub fn builtin_default() -> VisemeMap {
        VisemeMap::parse(DEFAULT_MAP, "builtin").expect("builtin map is valid")
    }

    /// Map a phoneme to the unique class containing it.
    pub fn class_of(&self, p: &Phoneme) -> Result<&VisemeId> {
        self.index
            .get(p)
            .map(|&i| &self.classes[i].0)
            .ok_or_else(|| Error::UnknownPhoneme(p.as_str().to_string()))
    }

    pub fn contains_id(&self, id: &VisemeId) -> bool {
        self.classes.iter().any(|(cid, _)| cid == id)
    }

    pub fn class_ids(&self) -> impl Iterator<Item = &VisemeId> {
        self.classes.iter().map(|(id, _)| id)
    }

    pub fn classes(&self) -> impl Iterator<Item = (&VisemeId, &BTreeSet<Phoneme>)> {
        self.classes.iter().map(|(id, set)| (id, set))
    }

    pub fn phones_of(&self, id: &VisemeId) -> Option<&BTreeSet<Phoneme>> {
        self.classes
            .iter()
            .find(|(cid, _)| cid == id)
            .map(|(_, set)| set)
    }

    /// Every phoneme of the inventory, across all classes.
    pub fn phonemes(&self) -> impl Iterator<Item = &Phoneme> {
        self.index.keys()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    /// The id of the class containing the silence phoneme, if any.
    pub fn silence_id(&self) -> Option<&VisemeId> {
        let sil = Phoneme(SILENCE_PHONE.to_string());
        self.index.get(&sil).map(|&i| &self.classes[i].0)
    }

    /// The id of the class containing the short-pause phoneme, if any.
    pub fn short_pause_id(&self) -> Option<&VisemeId> {
        let sp = Phoneme(SHORT_PAUSE_PHONE.to_string());
        self.index.get(&sp).map(|&i| &self.classes[i].0)
    }

    /// Merge every non-silence, non-short-pause class whose count falls
    /// below `threshold` into the single garbage class.
    ///
    /// `counts` must cover every class of the map. The silence and
    /// short-pause classes are never merged. An existing garbage class is
    /// always kept as the merge target, so the operation is idempotent.
    pub fn merge_below_threshold(
        &self,
        counts: &BTreeMap<VisemeId, u64>,
        threshold: u64,
    ) -> Result<VisemeMap> {
        for (id, _) in &self.classes {
            if !counts.contains_key(id) {
                return Err(Error::InvalidParameter(format!(
                    "counts do not cover class '{id}'"
                )));
            }
        }
        let exempt: BTreeSet<&VisemeId> = [self.silence_id(), self.short_pause_id()]
            .into_iter()
            .flatten()
            .collect();
        let mut survivors: Vec<(VisemeId, BTreeSet<Phoneme>)> = Vec::new();
        let mut garbage: BTreeSet<Phoneme> = BTreeSet::new();
        for (id, phones) in &self.classes {
            let merge = id.as_str() == GARBAGE_ID
                || (!exempt.contains(id) && counts[id] < threshold);
            if merge {
                garbage.extend(phones.iter().cloned());
            } else {
                survivors.push((id.clone(), phones.clone()));
            }
        }
        if !garbage.is_empty() {
            survivors.push((VisemeId::new(GARBAGE_ID)?, garbage));
        }
        let trainable = survivors
            .iter()
            .filter(|(id, _)| !exempt.contains(id))
            .count();
        if trainable == 0 {
            return Err(Error::NoTrainableClasses);
        }
        VisemeMap::new(survivors)
    }

    /// Class-id translation from this map to a merged map derived from it,
    /// keyed by any shared phoneme.
    pub fn remap_to(&self, merged: &VisemeMap) -> Result<BTreeMap<VisemeId, VisemeId>> {
        let mut table = BTreeMap::new();
        for (id, phones) in &self.classes {
            let p = phones.iter().next().expect("classes are non-empty");
            let new_id = merged.class_of(p)?;
            table.insert(id.clone(), new_id.clone());
        }
        Ok(table)
    }

    pub fn parse(text: &str, path: &str) -> Result<VisemeMap> {
        let mut classes = Vec::new();
        for (lineno, line) in textio::content_lines(text) {
            let mut fields = line.split_whitespace();
            let id = fields.next().expect("content lines are non-empty");
            let phones: BTreeSet<Phoneme> =
                fields.map(Phoneme::new).collect::<Result<_>>()?;
            if phones.is_empty() {
                return Err(Error::Parse {
                    path: path.to_string(),
                    line: lineno,
                    msg: format!("class '{id}' lists no phonemes"),
                });
            }
            classes.push((VisemeId::new(id)?, phones));
        }
        VisemeMap::new(classes)
    }

    /// Canonical text form: classes in order, phones sorted, single spaces.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (id, phones) in &self.classes {
            out.push_str(id.as_str());
            for p in phones {
                out.push(' ');
                out.push_str(p.as_str());
            }
            out.push('\n');
        }
        out
    }

    pub fn read(path: &Path) -> Result<VisemeMap> {
        VisemeMap::parse(&textio::read_file(path)?, &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write_file(path, &self.to_text())
    }
}

const DEFAULT_MAP: &str = "\
v01 p b m
v02 f v
v03 th dh
v04 t d n k g h j ng y
v05 s z
v06 l
v07 r
v08 sh zh ch jh
v09 w
v10 i ih
v11 eh ae ey ay
v12 aa ao ah
v13 uh er ax
v14 u uw
v15 oy
v16 iy hh
v17 aw ow
v18 sil
sp sp
";

/// Convert a word sequence to an untimed viseme transcript using each
/// word's first pronunciation. Units carry word-start annotations so that
/// later forced alignment can respect word break points.
pub fn words_to_visemes(
    dict: &PronunciationDict,
    map: &VisemeMap,
    words: &[String],
) -> Result<Transcript> {
    let mut units = Vec::new();
    for word in words {
        let phones = dict
            .first(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.clone()))?;
        for (i, p) in phones.iter().enumerate() {
            let id = map.class_of(p)?;
            units.push(Unit {
                label: id.as_str().to_string(),
                start: None,
                end: None,
                word_start: i == 0,
            });
        }
    }
    Ok(Transcript { units })
}

/// Exact per-class occurrence counts over a transcript collection. Every
/// class of the map appears in the result, rare classes with zero.
pub fn count_visemes<'a>(
    transcripts: impl IntoIterator<Item = &'a Transcript>,
    map: &VisemeMap,
) -> Result<BTreeMap<VisemeId, u64>> {
    let mut counts: BTreeMap<VisemeId, u64> =
        map.class_ids().map(|id| (id.clone(), 0)).collect();
    for t in transcripts {
        for unit in &t.units {
            let id = VisemeId::new(&unit.label)?;
            match counts.get_mut(&id) {
                Some(c) => *c += 1,
                None => return Err(Error::UnknownLabel(unit.label.clone())),
            }
        }
    }
    Ok(counts)
}
