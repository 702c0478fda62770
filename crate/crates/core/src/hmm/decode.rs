//! Continuous recognition: Viterbi over the bigram word network.

use super::align::{add_word_chain, path_to_output};
use super::graph::GraphBuilder;
use super::ModelSet;
use crate::error::{Error, Result};
use crate::frames::FrameSet;
use crate::lm::{WordNetwork, SENTENCE_END, SENTENCE_START};
use crate::viseme::{Transcript, Unit};
use std::collections::BTreeMap;

/// Decoder parameters: the language-model scale factor applied to bigram
/// log probabilities and the per-word insertion penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeParams {
    pub lm_scale: f64,
    pub insertion_penalty: f64,
}

impl Default for DecodeParams {
    fn default() -> DecodeParams {
        DecodeParams {
            lm_scale: 1.0,
            insertion_penalty: 0.0,
        }
    }
}

/// A recognition result: the word path, the timed viseme transcript, and
/// the joint log score.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutput {
    pub words: Vec<String>,
    pub transcript: Transcript,
    pub log_score: f64,
}

/// Decode an utterance against a word network: the jointly optimal path
/// under emission, transition and scaled network log probabilities.
pub fn viterbi_decode(
    models: &ModelSet,
    network: &WordNetwork,
    frames: &FrameSet,
    params: &DecodeParams,
) -> Result<DecodeOutput> {
    if frames.dim() != models.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: models.feature_dim,
            got: frames.dim(),
        });
    }
    if network.expansions.is_empty() {
        return Err(Error::DecodeFailure("empty word network".to_string()));
    }

    let mut builder = GraphBuilder::new();
    let start = builder.eps_node();
    let end = builder.eps_node();

    // Utterance-boundary junctions, behind mandatory silence when asked.
    let first = if network.options.boundary_silence {
        let j = builder.eps_node();
        builder.add_model(models.get(&network.options.sil_label)?, start, j, None, false);
        j
    } else {
        start
    };
    let last = if network.options.boundary_silence {
        let j = builder.eps_node();
        builder.add_model(models.get(&network.options.sil_label)?, j, end, None, false);
        j
    } else {
        end
    };

    // Per-word entry/exit junctions; expansions keyed in sorted order keep
    // node creation canonical.
    let mut entries: BTreeMap<&str, usize> = BTreeMap::new();
    let mut exits: BTreeMap<&str, usize> = BTreeMap::new();
    for (word, variants) in &network.expansions {
        let entry = builder.eps_node();
        let after_word = builder.eps_node();
        add_word_chain(&mut builder, models, word, variants, entry, after_word)?;
        let exit = if network.options.optional_short_pause {
            let j = builder.eps_node();
            builder.add_model(
                models.get(&network.options.sp_label)?,
                after_word,
                j,
                None,
                false,
            );
            j
        } else {
            after_word
        };
        entries.insert(word, entry);
        exits.insert(word, exit);
    }

    for (from, to, logp) in &network.arcs {
        let weight = params.lm_scale * logp;
        match (from.as_str(), to.as_str()) {
            (SENTENCE_START, SENTENCE_END) => {
                builder.eps_arc(first, last, weight);
            }
            (SENTENCE_START, word) => {
                let &entry = entries
                    .get(word)
                    .ok_or_else(|| Error::MissingExpansion(word.to_string()))?;
                builder.eps_arc(first, entry, weight + params.insertion_penalty);
            }
            (word, SENTENCE_END) => {
                let &exit = exits
                    .get(word)
                    .ok_or_else(|| Error::MissingExpansion(word.to_string()))?;
                builder.eps_arc(exit, last, weight);
            }
            (pred, succ) => {
                let &exit = exits
                    .get(pred)
                    .ok_or_else(|| Error::MissingExpansion(pred.to_string()))?;
                let &entry = entries
                    .get(succ)
                    .ok_or_else(|| Error::MissingExpansion(succ.to_string()))?;
                builder.eps_arc(exit, entry, weight + params.insertion_penalty);
            }
        }
    }

    let graph = builder.finish(start, end)?;
    let path = graph.viterbi(frames)?;
    let out = path_to_output(&graph, &path, false);
    let transcript = Transcript {
        units: out
            .segments
            .iter()
            .map(|s| Unit {
                label: s.label.clone(),
                start: Some(s.start),
                end: Some(s.end),
                word_start: false,
            })
            .collect(),
    };
    Ok(DecodeOutput {
        words: out.words,
        transcript,
        log_score: out.log_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::{flat_start, FlatStartOptions};
    use crate::lm::{build_network, estimate_bigram, NetworkOptions};

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

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

    fn plain_options() -> NetworkOptions {
        NetworkOptions {
            boundary_silence: false,
            optional_short_pause: false,
            ..NetworkOptions::default()
        }
    }

    #[test]
    fn single_word_network_decodes_full_span() {
        let mut data = FrameSet::new(1, 1.0);
        for i in 0..5 {
            data.push(&[i as f64 * 0.01]).unwrap();
        }
        let (set, _) = flat_start(
            &strings(&["v01"]),
            1,
            1,
            &data,
            &FlatStartOptions::default(),
        )
        .unwrap();
        let lm = estimate_bigram(&[strings(&["W"])], 0.0).unwrap();
        let net = build_network(&lm, &expansions(&[("W", &["v01"])]), plain_options()).unwrap();
        let out = viterbi_decode(&set, &net, &data, &DecodeParams::default()).unwrap();
        assert_eq!(out.words, vec!["W"]);
        assert_eq!(out.transcript.units.len(), 1);
        assert_eq!(out.transcript.units[0].start, Some(0));
        assert_eq!(out.transcript.units[0].end, Some(5));
    }

    #[test]
    fn identical_words_tie_broken_lexicographically() {
        let mut data = FrameSet::new(1, 1.0);
        for _ in 0..4 {
            data.push(&[0.5]).unwrap();
        }
        // Two words sharing one model: every path ties exactly; the
        // decoder must emit the lexicographically smaller word.
        let (set, _) = flat_start(
            &strings(&["v01"]),
            1,
            1,
            &data,
            &FlatStartOptions::default(),
        )
        .unwrap();
        let lm = estimate_bigram(&[strings(&["AA"]), strings(&["AB"])], 0.0).unwrap();
        let net = build_network(
            &lm,
            &expansions(&[("AA", &["v01"]), ("AB", &["v01"])]),
            plain_options(),
        )
        .unwrap();
        let out = viterbi_decode(&set, &net, &data, &DecodeParams::default()).unwrap();
        assert_eq!(out.words, vec!["AA"]);
    }

    #[test]
    fn decode_failure_when_no_path_fits() {
        let mut data = FrameSet::new(1, 1.0);
        data.push(&[0.0]).unwrap();
        let (set, _) = flat_start(
            &strings(&["v01"]),
            3,
            1,
            &data,
            &FlatStartOptions::default(),
        )
        .unwrap();
        let lm = estimate_bigram(&[strings(&["W"])], 0.0).unwrap();
        let net = build_network(&lm, &expansions(&[("W", &["v01"])]), plain_options()).unwrap();
        let err = viterbi_decode(&set, &net, &data, &DecodeParams::default()).unwrap_err();
        assert!(matches!(err, Error::DecodeFailure(_)));
    }

    #[test]
    fn repeated_word_tokens_are_separated() {
        // One word, frames forcing two passes: W W must come out as two
        // tokens, not one.
        let mut data = FrameSet::new(1, 1.0);
        for v in [0.0, 0.0, 9.0, 0.0, 0.0] {
            data.push(&[v]).unwrap();
        }
        let (mut set, _) = flat_start(
            &strings(&["a", "b"]),
            1,
            1,
            &data,
            &FlatStartOptions { jitter: 0.0 },
        )
        .unwrap();
        set.get_mut("a").unwrap().states[0].components[0] = crate::hmm::GaussComponent {
            weight: 1.0,
            mean: vec![0.0],
            var: vec![0.5],
        };
        set.get_mut("b").unwrap().states[0].components[0] = crate::hmm::GaussComponent {
            weight: 1.0,
            mean: vec![9.0],
            var: vec![0.5],
        };
        let lm = estimate_bigram(
            &[strings(&["WA", "WB", "WA"])],
            0.1,
        )
        .unwrap();
        let net = build_network(
            &lm,
            &expansions(&[("WA", &["a"]), ("WB", &["b"])]),
            plain_options(),
        )
        .unwrap();
        let out = viterbi_decode(&set, &net, &data, &DecodeParams::default()).unwrap();
        assert_eq!(out.words, vec!["WA", "WB", "WA"]);
        assert_eq!(out.transcript.units.len(), 3);

        // And back-to-back repetition of the same word splits too: a
        // heavy insertion bonus makes one-frame word tokens optimal, so
        // four frames come out as four separate tokens.
        let mut flat = FrameSet::new(1, 1.0);
        for _ in 0..4 {
            flat.push(&[0.0]).unwrap();
        }
        let lm2 = estimate_bigram(&[strings(&["WA", "WA"])], 0.0).unwrap();
        let net2 = build_network(&lm2, &expansions(&[("WA", &["a"])]), plain_options()).unwrap();
        let push = DecodeParams {
            lm_scale: 1.0,
            insertion_penalty: 5.0,
        };
        let out2 = viterbi_decode(&set, &net2, &flat, &push).unwrap();
        assert_eq!(out2.words, vec!["WA"; 4]);
        assert_eq!(out2.transcript.units.len(), 4);
    }
}
