//! Synthetic corpus generation: the verification oracle behind the
//! end-to-end tests.
//!
//! Utterances are sampled from per-class generative Gaussian mixtures with
//! explicit duration distributions, so ground-truth segment boundaries are
//! known exactly. The emitted corpus (viseme map, dictionary, word lines,
//! timed transcripts, feature files) feeds the same loaders the real
//! pipeline uses.

use super::Corpus;
use crate::error::{Error, Result};
use crate::frames::FrameSet;
use crate::viseme::{Phoneme, PronunciationDict, Transcript, Unit, VisemeId, VisemeMap};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Emission and duration parameters of one synthetic class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub label: String,
    /// Mixture of (weight, mean, diagonal variance).
    pub mixture: Vec<(f64, Vec<f64>, Vec<f64>)>,
    /// Inclusive duration range in frames per class instance.
    pub dur_min: usize,
    pub dur_max: usize,
}

impl ClassSpec {
    fn validate(&self, dim: usize) -> Result<()> {
        if self.mixture.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "class '{}' has no mixture components",
                self.label
            )));
        }
        let wsum: f64 = self.mixture.iter().map(|(w, _, _)| w).sum();
        if (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "class '{}' mixture weights sum to {wsum}",
                self.label
            )));
        }
        for (w, mean, var) in &self.mixture {
            if *w < 0.0 || mean.len() != dim || var.len() != dim || var.iter().any(|&v| v <= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "class '{}' has invalid mixture parameters",
                    self.label
                )));
            }
        }
        if self.dur_min == 0 || self.dur_min > self.dur_max {
            return Err(Error::InvalidParameter(format!(
                "class '{}' has a degenerate duration range {}..{}",
                self.label, self.dur_min, self.dur_max
            )));
        }
        Ok(())
    }
}

/// Full description of a synthetic corpus; generation is a pure function
/// of the spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub dim: usize,
    pub frame_rate: f64,
    /// Viseme classes, silence excluded.
    pub classes: Vec<ClassSpec>,
    pub silence: ClassSpec,
    pub short_pause: ClassSpec,
    /// Vocabulary size; words are synthesized over the class labels.
    pub n_words: usize,
    /// Inclusive range of phones per word.
    pub word_len: (usize, usize),
    /// Inclusive range of words per line.
    pub words_per_line: (usize, usize),
    /// Probability of a realized short pause between adjacent words.
    pub sp_probability: f64,
    pub n_lines: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    /// Desk-scale default: `n_classes` well-separated classes plus silence
    /// and short pause. Class k sits at distance `separation * (tier + 1)`
    /// along axis `k % dim`, so every pair of class means is at least
    /// `separation` apart (unit variance).
    ///
    /// Class labels are letter-only (`ca`, `cb`, …) because dictionary
    /// loading strips stress digits from phone symbols.
    pub fn desk_default(n_classes: usize, n_lines: usize, separation: f64, seed: u64) -> SyntheticSpec {
        assert!(n_classes <= 26, "desk default supports up to 26 classes");
        let dim = 10;
        let class = |k: usize, label: &str, dur: (usize, usize)| -> ClassSpec {
            let mut mean = vec![0.0; dim];
            let tier = k / dim;
            mean[k % dim] = separation * (tier + 1) as f64;
            ClassSpec {
                label: label.to_string(),
                mixture: vec![(1.0, mean, vec![1.0; dim])],
                dur_min: dur.0,
                dur_max: dur.1,
            }
        };
        let classes: Vec<ClassSpec> = (0..n_classes)
            .map(|k| class(k, &format!("c{}", (b'a' + k as u8) as char), (7, 12)))
            .collect();
        SyntheticSpec {
            dim,
            frame_rate: 60.0,
            silence: class(n_classes, "sil", (8, 14)),
            short_pause: class(n_classes + 1, "sp", (3, 6)),
            classes,
            n_words: 10,
            word_len: (2, 3),
            words_per_line: (2, 4),
            sp_probability: 0.3,
            n_lines,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("zero feature dimension".to_string()));
        }
        let mut labels = BTreeSet::new();
        for c in self
            .classes
            .iter()
            .chain([&self.silence, &self.short_pause])
        {
            c.validate(self.dim)?;
            if !labels.insert(c.label.clone()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate class label '{}'",
                    c.label
                )));
            }
        }
        if self.classes.is_empty() {
            return Err(Error::InvalidParameter("no viseme classes".to_string()));
        }
        if self.n_words == 0 || self.word_len.0 == 0 || self.word_len.0 > self.word_len.1 {
            return Err(Error::InvalidParameter("bad vocabulary grammar".to_string()));
        }
        if self.words_per_line.0 > self.words_per_line.1 {
            return Err(Error::InvalidParameter("bad line grammar".to_string()));
        }
        if !(0.0..=1.0).contains(&self.sp_probability) {
            return Err(Error::InvalidParameter("bad short-pause probability".to_string()));
        }
        Ok(())
    }
}

/// Sample a corpus from the spec. The viseme map is the identity over
/// class labels (each class holds one synthetic phone of the same name,
/// with `sil` mapped into the silence class).
pub fn generate_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Identity viseme map over the synthetic phone set.
    let mut classes = Vec::new();
    for c in spec.classes.iter().chain([&spec.silence, &spec.short_pause]) {
        let phones: BTreeSet<Phoneme> = [Phoneme::new(&c.label)?].into();
        classes.push((VisemeId::new(&c.label)?, phones));
    }
    let map = VisemeMap::new(classes)?;

    // Vocabulary: phone draws are weighted toward low class indices, so
    // late classes go rare and exercise the garbage merge.
    let mut dict = PronunciationDict::new();
    let weights: Vec<f64> = (0..spec.classes.len())
        .map(|k| 1.0 / (k as f64 + 1.0))
        .collect();
    let total_w: f64 = weights.iter().sum();
    let draw_class = |rng: &mut ChaCha8Rng| -> usize {
        let mut x = rng.random::<f64>() * total_w;
        for (k, &w) in weights.iter().enumerate() {
            if x < w {
                return k;
            }
            x -= w;
        }
        spec.classes.len() - 1
    };
    let mut words = Vec::with_capacity(spec.n_words);
    for wi in 0..spec.n_words {
        let word = format!("W{wi:02}");
        let len = rng.random_range(spec.word_len.0..=spec.word_len.1);
        // Avoid immediate phone repeats: runs of one label carry no
        // boundary evidence beyond duration, which makes even an ideal
        // recognizer guess token counts.
        let mut phones: Vec<Phoneme> = Vec::with_capacity(len);
        let mut last = usize::MAX;
        for _ in 0..len {
            let mut k = draw_class(&mut rng);
            while spec.classes.len() > 1 && k == last {
                k = draw_class(&mut rng);
            }
            last = k;
            phones.push(Phoneme::new(&spec.classes[k].label)?);
        }
        dict.insert(&word, phones);
        words.push(word);
    }

    let class_by_label = |label: &str| -> &ClassSpec {
        spec.classes
            .iter()
            .chain([&spec.silence, &spec.short_pause])
            .find(|c| c.label == label)
            .expect("label from spec")
    };

    let mut utterances = Vec::with_capacity(spec.n_lines);
    for _ in 0..spec.n_lines {
        let n_words = rng.random_range(spec.words_per_line.0..=spec.words_per_line.1);
        let line: Vec<String> = (0..n_words)
            .map(|_| words[rng.random_range(0..words.len())].clone())
            .collect();

        // Realized label sequence: silence, words with occasional short
        // pauses, silence.
        let mut labels: Vec<String> = vec![spec.silence.label.clone()];
        for (k, word) in line.iter().enumerate() {
            for p in dict.first(word).expect("word just inserted") {
                labels.push(p.as_str().to_string());
            }
            let last = k + 1 == line.len();
            if !last && rng.random::<f64>() < spec.sp_probability {
                labels.push(spec.short_pause.label.clone());
            }
        }
        labels.push(spec.silence.label.clone());

        let mut frames = FrameSet::new(spec.dim, spec.frame_rate);
        let mut units = Vec::with_capacity(labels.len());
        let mut t = 0usize;
        for label in &labels {
            let class = class_by_label(label);
            let dur = rng.random_range(class.dur_min..=class.dur_max);
            for _ in 0..dur {
                let frame = sample_frame(class, spec.dim, &mut rng);
                frames.push(&frame)?;
            }
            units.push(Unit {
                label: label.clone(),
                start: Some(t),
                end: Some(t + dur),
                word_start: false,
            });
            t += dur;
        }
        utterances.push(super::Utterance {
            words: line,
            truth: Transcript { units },
            frames,
        });
    }

    Ok(Corpus {
        map,
        dict,
        utterances,
    })
}

fn sample_frame(class: &ClassSpec, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut pick = rng.random::<f64>();
    let mut chosen = &class.mixture[0];
    for comp in &class.mixture {
        if pick < comp.0 {
            chosen = comp;
            break;
        }
        pick -= comp.0;
    }
    let (_, mean, var) = chosen;
    (0..dim)
        .map(|d| {
            let normal = rand_distr::Normal::new(mean[d], var[d].sqrt()).expect("valid sigma");
            normal.sample(rng)
        })
        .collect()
}
