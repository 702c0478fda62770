//! Forced alignment: Viterbi over a lattice constrained to a known word
//! sequence.

use super::graph::{GraphBuilder, StateGraph, ViterbiPath};
use super::ModelSet;
use crate::error::{Error, Result};
use crate::frames::FrameSet;
use std::collections::BTreeMap;

/// Lattice construction options shared by alignment and decoding.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignOptions {
    /// Mandatory silence model at utterance start and end.
    pub boundary_silence: bool,
    /// Short pause wired after each word; a tee short pause makes it
    /// optional, absorbing zero frames where no pause occurred.
    pub optional_short_pause: bool,
    pub sil_label: String,
    pub sp_label: String,
    /// Record the per-frame state path inside each segment.
    pub record_states: bool,
}

impl Default for AlignOptions {
    fn default() -> AlignOptions {
        AlignOptions {
            boundary_silence: true,
            optional_short_pause: true,
            sil_label: "sil".to_string(),
            sp_label: "sp".to_string(),
            record_states: false,
        }
    }
}

/// One aligned unit: a label spanning frames `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedSegment {
    pub label: String,
    pub start: usize,
    pub end: usize,
    pub states: Option<Vec<usize>>,
}

/// A forced alignment: timed segments tiling the utterance, the realized
/// word sequence, and the Viterbi log score.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentOutput {
    pub segments: Vec<AlignedSegment>,
    pub words: Vec<String>,
    pub log_score: f64,
}

/// Wire one word between two junctions: every pronunciation variant in
/// parallel, models chained through intermediate junctions.
pub(crate) fn add_word_chain<'a>(
    builder: &mut GraphBuilder<'a>,
    models: &'a ModelSet,
    word: &str,
    variants: &[Vec<String>],
    from: usize,
    to: usize,
) -> Result<()> {
    if variants.is_empty() || variants.iter().any(|v| v.is_empty()) {
        return Err(Error::MissingExpansion(word.to_string()));
    }
    let wid = builder.word_instance(word);
    for variant in variants {
        let mut cur = from;
        for (k, label) in variant.iter().enumerate() {
            let next = if k + 1 == variant.len() {
                to
            } else {
                builder.eps_node()
            };
            builder.add_model(models.get(label)?, cur, next, Some(wid), k == 0);
            cur = next;
        }
    }
    Ok(())
}

/// Collapse a Viterbi node path into timed segments and a word sequence.
pub(crate) fn path_to_output(
    graph: &StateGraph<'_>,
    path: &ViterbiPath,
    record_states: bool,
) -> AlignmentOutput {
    let mut segments: Vec<AlignedSegment> = Vec::new();
    let mut words = Vec::new();
    for (t, (&node_id, &crossing)) in path.nodes.iter().zip(&path.crossings).enumerate() {
        let node = graph.node(node_id);
        if crossing || segments.is_empty() {
            segments.push(AlignedSegment {
                label: node.label.clone(),
                start: t,
                end: t + 1,
                states: record_states.then(Vec::new),
            });
            if let Some(w) = node.word {
                if node.word_entry {
                    words.push(graph.word_name(w).to_string());
                }
            }
        } else {
            let last = segments.last_mut().expect("segment open");
            last.end = t + 1;
        }
        if let Some(states) = &mut segments.last_mut().expect("segment open").states {
            states.push(node.state);
        }
    }
    AlignmentOutput {
        segments,
        words,
        log_score: path.log_score,
    }
}

/// Force-align an utterance to a word sequence: the Viterbi-optimal timed
/// segmentation constrained to the transcript, with word break points
/// respected via per-word expansion chains.
///
/// `expansions` maps each word to its pronunciation variants as viseme
/// label strings; alignment considers all variants and keeps the best.
pub fn force_align(
    models: &ModelSet,
    frames: &FrameSet,
    words: &[String],
    expansions: &BTreeMap<String, Vec<Vec<String>>>,
    options: &AlignOptions,
) -> Result<AlignmentOutput> {
    if frames.dim() != models.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: models.feature_dim,
            got: frames.dim(),
        });
    }
    let mut builder = GraphBuilder::new();
    let start = builder.eps_node();
    let end = builder.eps_node();
    let mut cur = start;
    if options.boundary_silence {
        let next = builder.eps_node();
        builder.add_model(models.get(&options.sil_label)?, cur, next, None, false);
        cur = next;
    }
    for word in words {
        let variants = expansions
            .get(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.clone()))?;
        let after_word = builder.eps_node();
        add_word_chain(&mut builder, models, word, variants, cur, after_word)?;
        cur = after_word;
        if options.optional_short_pause {
            let after_sp = builder.eps_node();
            builder.add_model(models.get(&options.sp_label)?, cur, after_sp, None, false);
            cur = after_sp;
        }
    }
    if options.boundary_silence {
        let next = builder.eps_node();
        builder.add_model(models.get(&options.sil_label)?, cur, next, None, false);
        cur = next;
    }
    builder.eps_arc(cur, end, 0.0);

    let graph = builder.finish(start, end)?;
    let path = graph.viterbi(frames).map_err(|e| match e {
        Error::DecodeFailure(_) => Error::InfeasibleAlignment {
            frames: frames.len(),
            min_frames: graph.min_frames().unwrap_or(usize::MAX),
        },
        other => other,
    })?;
    Ok(path_to_output(&graph, &path, options.record_states))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{flat_start, tie_silence_models, FlatStartOptions};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn expansions(pairs: &[(&str, &[&str])]) -> BTreeMap<String, Vec<Vec<String>>> {
        pairs
            .iter()
            .map(|(w, v)| {
                (
                    w.to_string(),
                    vec![v.iter().map(|s| s.to_string()).collect()],
                )
            })
            .collect()
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_word_single_viseme_spans_everything() {
        let mut data = FrameSet::new(1, 1.0);
        for i in 0..6 {
            data.push(&[i as f64 * 0.1]).unwrap();
        }
        let (set, _) = flat_start(
            &strings(&["v01"]),
            1,
            1,
            &data,
            &FlatStartOptions::default(),
        )
        .unwrap();
        let opts = AlignOptions {
            boundary_silence: false,
            optional_short_pause: false,
            ..AlignOptions::default()
        };
        let out = force_align(
            &set,
            &data,
            &strings(&["W"]),
            &expansions(&[("W", &["v01"])]),
            &opts,
        )
        .unwrap();
        assert_eq!(out.segments.len(), 1);
        assert_eq!(out.segments[0].label, "v01");
        assert_eq!(out.segments[0].start, 0);
        assert_eq!(out.segments[0].end, 6);
        assert_eq!(out.words, vec!["W"]);
    }

    #[test]
    fn boundary_recovered_between_separated_classes() {
        // 10 frames near 0, then 10 near 10: the a/b boundary lands on
        // frame 10 give or take one.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut data = FrameSet::new(1, 1.0);
        for _ in 0..10 {
            data.push(&[rng.random::<f64>() * 0.5]).unwrap();
        }
        for _ in 0..10 {
            data.push(&[10.0 + rng.random::<f64>() * 0.5]).unwrap();
        }
        let (mut set, _) = flat_start(
            &strings(&["a", "b"]),
            1,
            1,
            &data,
            &FlatStartOptions { jitter: 0.0 },
        )
        .unwrap();
        // Separate the means by hand.
        set.get_mut("a").unwrap().states[0].components[0].mean = vec![0.25];
        set.get_mut("b").unwrap().states[0].components[0].mean = vec![10.25];
        for label in ["a", "b"] {
            set.get_mut(label).unwrap().states[0].components[0].var = vec![0.1];
        }
        let opts = AlignOptions {
            boundary_silence: false,
            optional_short_pause: false,
            record_states: true,
            ..AlignOptions::default()
        };
        let out = force_align(
            &set,
            &data,
            &strings(&["A", "B"]),
            &expansions(&[("A", &["a"]), ("B", &["b"])]),
            &opts,
        )
        .unwrap();
        assert_eq!(out.segments.len(), 2);
        let boundary = out.segments[0].end;
        assert!((9..=11).contains(&boundary), "boundary at {boundary}");
        // Segments tile the utterance.
        assert_eq!(out.segments[0].start, 0);
        assert_eq!(out.segments[1].start, boundary);
        assert_eq!(out.segments[1].end, 20);
        assert_eq!(out.segments[0].states.as_ref().unwrap().len(), boundary);
    }

    #[test]
    fn infeasible_transcript_is_rejected() {
        let mut data = FrameSet::new(1, 1.0);
        data.push(&[0.0]).unwrap();
        data.push(&[0.0]).unwrap();
        let (set, _) = flat_start(
            &strings(&["v01"]),
            3,
            1,
            &data,
            &FlatStartOptions::default(),
        )
        .unwrap();
        let opts = AlignOptions {
            boundary_silence: false,
            optional_short_pause: false,
            ..AlignOptions::default()
        };
        let err = force_align(
            &set,
            &data,
            &strings(&["W"]),
            &expansions(&[("W", &["v01"])]),
            &opts,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::InfeasibleAlignment {
                frames: 2,
                min_frames: 3
            }
        ));
    }

    #[test]
    fn tied_silence_only_utterance_prefers_sil_over_sp() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut data = FrameSet::new(2, 1.0);
        for _ in 0..12 {
            data.push(&[rng.random::<f64>(), rng.random::<f64>()]).unwrap();
        }
        let (mut set, _) = flat_start(
            &strings(&["sil", "sp"]),
            3,
            1,
            &data,
            &FlatStartOptions { jitter: 0.0 },
        )
        .unwrap();
        tie_silence_models(&mut set, "sil", "sp").unwrap();
        let opts = AlignOptions {
            boundary_silence: false,
            optional_short_pause: false,
            ..AlignOptions::default()
        };
        let sil = force_align(
            &set,
            &data,
            &strings(&["SIL"]),
            &expansions(&[("SIL", &["sil"])]),
            &opts,
        )
        .unwrap();
        let sp = force_align(
            &set,
            &data,
            &strings(&["SP"]),
            &expansions(&[("SP", &["sp"])]),
            &opts,
        )
        .unwrap();
        // The silence path fits (12 frames over minimum duration 3) and
        // scores at least as high as the tied single-state short pause.
        assert!(sil.log_score >= sp.log_score);
    }
}
