//! Corpus containers, manifests, recipe configuration, fold construction,
//! synthetic generation and the end-to-end recipe.

mod folds;
mod recipe;
mod synth;

pub use folds::{make_folds, Fold, FoldSpec};
pub use recipe::{run_fold, run_recipe, train_models, word_expansions, FoldOutcome, TrainedFold};
pub use synth::{generate_corpus, ClassSpec, SyntheticSpec};

use crate::error::{Error, Result};
use crate::frames::FrameSet;
use crate::textio;
use crate::viseme::{
    parse_label_file, write_label_file, Inventory, PronunciationDict, Transcript, VisemeMap,
};
use std::path::{Path, PathBuf};

/// One corpus line: its word transcript, ground-truth timed viseme
/// transcript, and feature frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub words: Vec<String>,
    pub truth: Transcript,
    pub frames: FrameSet,
}

/// A complete corpus: viseme map, pronunciation dictionary and utterances.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub map: VisemeMap,
    pub dict: PronunciationDict,
    pub utterances: Vec<Utterance>,
}

impl Corpus {
    pub fn n_lines(&self) -> usize {
        self.utterances.len()
    }

    /// Write the corpus under `dir` with a `corpus.manifest` naming every
    /// part by relative path.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.map.write(&dir.join("visemes.map"))?;
        self.dict.write(&dir.join("lexicon.dict"))?;
        let mut lines = String::new();
        for utt in &self.utterances {
            lines.push_str(&utt.words.join(" "));
            lines.push('\n');
        }
        textio::write_file(&dir.join("lines.txt"), &lines)?;
        let truths: Vec<Transcript> = self.utterances.iter().map(|u| u.truth.clone()).collect();
        textio::write_file(&dir.join("truth.lab"), &write_label_file(&truths))?;
        let mut manifest = String::new();
        manifest.push_str("map visemes.map\n");
        manifest.push_str("dict lexicon.dict\n");
        manifest.push_str("words lines.txt\n");
        manifest.push_str("labels truth.lab\n");
        for (i, utt) in self.utterances.iter().enumerate() {
            let rel = format!("feats/line_{i:04}.feat");
            utt.frames.write(&dir.join(&rel))?;
            manifest.push_str(&format!("features {rel}\n"));
        }
        textio::write_file(&dir.join("corpus.manifest"), &manifest)
    }

    /// Load a corpus from its manifest.
    pub fn read(manifest_path: &Path) -> Result<Corpus> {
        let text = textio::read_file(manifest_path)?;
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let name = manifest_path.display().to_string();
        let mut map_path = None;
        let mut dict_path = None;
        let mut words_path = None;
        let mut labels_path = None;
        let mut feature_paths: Vec<PathBuf> = Vec::new();
        for (lineno, line) in textio::content_lines(&text) {
            let (key, rest) = line.split_once(char::is_whitespace).ok_or_else(|| {
                Error::Parse {
                    path: name.clone(),
                    line: lineno,
                    msg: format!("expected 'key path', got '{line}'"),
                }
            })?;
            let path = dir.join(rest.trim());
            match key {
                "map" => map_path = Some(path),
                "dict" => dict_path = Some(path),
                "words" => words_path = Some(path),
                "labels" => labels_path = Some(path),
                "features" => feature_paths.push(path),
                other => {
                    return Err(Error::Parse {
                        path: name.clone(),
                        line: lineno,
                        msg: format!("unknown manifest key '{other}'"),
                    })
                }
            }
        }
        let missing = |what: &str| Error::Parse {
            path: name.clone(),
            line: 0,
            msg: format!("missing '{what}' entry"),
        };
        let map = VisemeMap::read(&map_path.ok_or_else(|| missing("map"))?)?;
        let inventory = Inventory::of_map(&map);
        let dict = PronunciationDict::read(&dict_path.ok_or_else(|| missing("dict"))?, &inventory)?;
        let words_file = textio::read_file(&words_path.ok_or_else(|| missing("words"))?)?;
        let word_lines: Vec<Vec<String>> = words_file
            .lines()
            .map(|l| l.split_whitespace().map(|w| w.to_string()).collect())
            .collect();
        let labels_path = labels_path.ok_or_else(|| missing("labels"))?;
        let truths = parse_label_file(
            &textio::read_file(&labels_path)?,
            &labels_path.display().to_string(),
        )?;
        if word_lines.len() != feature_paths.len() || truths.len() != feature_paths.len() {
            return Err(Error::Parse {
                path: name,
                line: 0,
                msg: format!(
                    "manifest lists {} feature files but {} word lines and {} transcripts",
                    feature_paths.len(),
                    word_lines.len(),
                    truths.len()
                ),
            });
        }
        let mut utterances = Vec::with_capacity(feature_paths.len());
        for ((path, words), truth) in feature_paths.iter().zip(word_lines).zip(truths) {
            utterances.push(Utterance {
                words,
                truth,
                frames: FrameSet::read(path)?,
            });
        }
        Ok(Corpus {
            map,
            dict,
            utterances,
        })
    }
}

/// Recipe parameters. Field names match the config file keys exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RecipeConfig {
    /// Emitting states per model.
    pub n_states: usize,
    /// Mixture components per state.
    pub n_mix: usize,
    /// Re-estimations before tying.
    pub r1: usize,
    /// Re-estimations after tying.
    pub r2: usize,
    /// Re-estimations on the force-aligned transcripts.
    pub r3: usize,
    /// Garbage-merge sample threshold.
    pub threshold: u64,
    /// Retained variance fraction for linear feature models.
    pub fraction: f64,
    /// Bigram probability floor. Zero disables smoothing, which usually
    /// leaves unseen test word pairs undecodable.
    pub lm_floor: f64,
    /// Language-model scale factor at decode time.
    pub lm_scale: f64,
    /// Per-word insertion penalty at decode time.
    pub insertion_penalty: f64,
    pub seed: u64,
}

impl Default for RecipeConfig {
    fn default() -> RecipeConfig {
        RecipeConfig {
            n_states: 5,
            n_mix: 5,
            r1: 4,
            r2: 2,
            r3: 2,
            threshold: 150,
            fraction: 0.95,
            lm_floor: 0.01,
            lm_scale: 1.0,
            insertion_penalty: 0.0,
            seed: 0,
        }
    }
}

impl RecipeConfig {
    /// `key = value` text, one field per line.
    pub fn to_text(&self) -> String {
        format!(
            "n_states = {}\nn_mix = {}\nr1 = {}\nr2 = {}\nr3 = {}\nthreshold = {}\n\
             fraction = {}\nlm_floor = {}\nlm_scale = {}\ninsertion_penalty = {}\nseed = {}\n",
            self.n_states,
            self.n_mix,
            self.r1,
            self.r2,
            self.r3,
            self.threshold,
            self.fraction,
            self.lm_floor,
            self.lm_scale,
            self.insertion_penalty,
            self.seed
        )
    }

    pub fn parse(text: &str, path: &str) -> Result<RecipeConfig> {
        let mut config = RecipeConfig::default();
        for (lineno, line) in textio::content_lines(text) {
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_string(),
                line: lineno,
                msg: format!("expected 'key = value', got '{line}'"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let as_usize = || textio::parse_usize(value, path, lineno);
            let as_f64 = || textio::parse_f64(value, path, lineno);
            match key {
                "n_states" => config.n_states = as_usize()?,
                "n_mix" => config.n_mix = as_usize()?,
                "r1" => config.r1 = as_usize()?,
                "r2" => config.r2 = as_usize()?,
                "r3" => config.r3 = as_usize()?,
                "threshold" => {
                    config.threshold = value.parse().map_err(|_| Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("bad threshold '{value}'"),
                    })?
                }
                "fraction" => config.fraction = as_f64()?,
                "lm_floor" => config.lm_floor = as_f64()?,
                "lm_scale" => config.lm_scale = as_f64()?,
                "insertion_penalty" => config.insertion_penalty = as_f64()?,
                "seed" => {
                    config.seed = value.parse().map_err(|_| Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("bad seed '{value}'"),
                    })?
                }
                other => {
                    return Err(Error::Parse {
                        path: path.to_string(),
                        line: lineno,
                        msg: format!("unknown config key '{other}'"),
                    })
                }
            }
        }
        Ok(config)
    }

    pub fn read(path: &Path) -> Result<RecipeConfig> {
        RecipeConfig::parse(&textio::read_file(path)?, &path.display().to_string())
    }
}
